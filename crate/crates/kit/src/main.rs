fn main() {
    std::process::exit(grasp_kit::cli::run(std::env::args_os()));
}
