use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use grasp_kit::tables;

fn grasp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grasp")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = grasp(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(grasp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(grasp(&["pareto", "--budget", "many"]).status.code(), Some(2));
    assert_eq!(grasp(&["toy-data", "--out", "x.gfea"]).status.code(), Some(2));
    assert_eq!(grasp(&["--help"]).status.code(), Some(0));
}

#[test]
fn failures_name_the_module() {
    let dir = tempfile::tempdir().unwrap();
    let cards = dir.path().join("cards.csv");
    fs::write(&cards, "name,top5_accuracy,flops\nx,0.9,0\n").unwrap();
    let out = grasp(&["pareto", "--cards", p(&cards)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: csv: line 2"));

    let out = grasp(&["toy-data", "--n", "3", "--seed", "1", "--out", p(&dir.path().join("t.gfea"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: augment:"));
}

#[test]
fn bundled_pareto_lists_six_models() {
    let out = ok(&["pareto", "--bundled"]);
    let frontier = tables::read_cards(out.as_bytes()).unwrap();
    let names: Vec<&str> = frontier.names().collect();
    assert_eq!(
        names,
        ["0.25 MobileNetV1", "0.5 MobileNetV1", "1.0 MobileNetV2", "1.4 MobileNetV2", "InceptionV3", "NASNet-A Large"]
    );
}

#[test]
fn pareto_budget_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("f.svg");
    let out = ok(&["pareto", "--bundled", "--budget", "7000000000", "--svg", p(&svg)]);
    assert!(out.ends_with("# budget 7000000000: InceptionV3\n"), "{out}");
    let out = ok(&["pareto", "--bundled", "--budget", "1"]);
    assert!(out.contains("0.25 MobileNetV1 (nothing fits"), "{out}");
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("NASNet-A Large"));
    assert_eq!(text.matches("<circle").count(), 23);
}

#[test]
fn flops_from_json_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("net.json");
    fs::write(
        &spec,
        r#"{"name": "tiny", "layers": [
            {"kind": "Conv2D", "in_h": 4, "in_w": 4, "in_ch": 1, "out_ch": 2, "kernel": 3, "padding": 1},
            {"kind": "Activation", "size": 32},
            {"kind": "GlobalAvgPool2D", "in_h": 4, "in_w": 4, "channels": 2},
            {"kind": "Dense", "in_dim": 2, "out_dim": 5},
            {"kind": "Softmax", "size": 5}
        ]}"#,
    )
    .unwrap();
    let out = ok(&["flops", "--spec", p(&spec)]);
    // conv 4*4*2*(2*9+1), relu 32, gap 32+2, dense 2*2*5+5, softmax 20
    let expected = [608u64, 32, 34, 25, 20];
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "index,kind,flops");
    for (i, e) in expected.iter().enumerate() {
        assert!(lines[i + 1].ends_with(&format!(",{e}")), "{}", lines[i + 1]);
    }
    assert_eq!(lines[6], format!("# tiny total {}", expected.iter().sum::<u64>()));

    fs::write(&spec, r#"{"name": "bad", "layers": [{"kind": "Dense", "in_dim": 2, "out_dim": 3, "bias": 1}]}"#)
        .unwrap();
    let err = grasp(&["flops", "--spec", p(&spec)]);
    assert_eq!(err.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&err.stderr).starts_with("error: spec:"));
}

#[test]
fn aggregate_writes_label_distributions() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("ann.csv");
    let labels = dir.path().join("labels.csv");
    fs::write(&ann, "object_id,annotator_id,choice\ncup,1,0\ncup,2,1\ncup,3,0\ncup,4,palmar pinch\n").unwrap();
    ok(&["aggregate", "--annotations", p(&ann), "--out", p(&labels)]);
    let got = tables::read_labels(fs::File::open(&labels).unwrap()).unwrap();
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].1.as_array(), &[0.5, 0.25, 0.0, 0.0, 0.25]);
}

#[test]
fn train_then_eval_reproduces_last_history_row() {
    let dir = tempfile::tempdir().unwrap();
    let feats = dir.path().join("toy.gfea");
    let run = dir.path().join("run");
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# short schedule\nseed = 3\nepochs_per_phase = 4\nbatch_size = 16\n").unwrap();
    ok(&["toy-data", "--n", "250", "--dim", "12", "--seed", "2", "--out", p(&feats)]);
    ok(&["train", "--features", p(&feats), "--out-dir", p(&run), "--config", p(&cfg)]);

    let history = tables::read_history(fs::File::open(run.join("history.csv")).unwrap()).unwrap();
    assert_eq!(history.len(), 9);
    assert_eq!(history.iter().map(|r| r.phase).collect::<Vec<_>>(), [0, 1, 1, 1, 1, 2, 2, 2, 2]);
    let last = history.last().unwrap().val_angular_similarity;

    let out = ok(&[
        "eval",
        "--checkpoint",
        p(&run.join("head.ghed")),
        "--features",
        p(&feats),
        "--split",
        p(&run.join("split.csv")),
        "--subset",
        "val",
    ]);
    let line = out.lines().nth(1).unwrap();
    let (rows, sim) = line.split_once(',').unwrap();
    assert_eq!(rows, "50");
    assert!((sim.parse::<f64>().unwrap() - last).abs() <= 1e-9);

    let preds = dir.path().join("preds.csv");
    let all =
        ok(&["eval", "--checkpoint", p(&run.join("head.ghed")), "--features", p(&feats), "--predictions", p(&preds)]);
    let sim_all: f64 = all.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&sim_all));
    assert_eq!(tables::read_labels(fs::File::open(&preds).unwrap()).unwrap().len(), 250);

    let svg = dir.path().join("h.svg");
    ok(&["plot", "--history", p(&run.join("history.csv")), "--out", p(&svg)]);
    let first = fs::read(&svg).unwrap();
    ok(&["plot", "--history", p(&run.join("history.csv")), "--out", p(&svg)]);
    assert_eq!(fs::read(&svg).unwrap(), first);
}

#[test]
fn fuse_sim_emits_one_decision_per_frame() {
    let dir = tempfile::tempdir().unwrap();
    let (vision, emg) = (dir.path().join("v.csv"), dir.path().join("e.csv"));
    let mut v = String::from("t,p0,p1,p2,p3,p4\n");
    let mut e = v.clone();
    for i in 0..10 {
        let t = i as f64 / 5.0;
        v.push_str(&format!("{t},0.7,0.1,0.1,0.05,0.05\n"));
        e.push_str(&format!("{t},0.1,0.1,0.1,0.1,0.6\n"));
    }
    fs::write(&vision, v).unwrap();
    fs::write(&emg, e).unwrap();
    let out = ok(&[
        "fuse-sim",
        "--vision",
        p(&vision),
        "--emg",
        p(&emg),
        "--w-vision",
        "0.75",
        "--fps",
        "5",
        "--window-s",
        "1",
    ]);
    let rows = tables::read_decisions(out.as_bytes()).unwrap();
    assert_eq!(rows.len(), 10);
    assert!(!rows[3].window_full && rows[4].window_full);
    assert!(rows.iter().all(|r| r.grasp == "OpenPalm"));
    assert!((rows[9].p0 - (0.75 * 0.7 + 0.25 * 0.1)).abs() < 1e-12);
}

#[test]
fn augment_synthetic_objects() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("aug");
    let args = ["augment", "--synthetic", "3", "--copies", "4", "--width", "32", "--height", "24", "--seed", "9"];
    ok(&[&args[..], &["--out-dir", p(&out_dir)]].concat());
    let manifest = tables::read_image_manifest(fs::File::open(out_dir.join("manifest.csv")).unwrap()).unwrap();
    assert_eq!(manifest.len(), 12);
    let img = grasp_kit::pnm::read(&out_dir.join(&manifest[11].0)).unwrap();
    assert_eq!((img.width(), img.height(), img.channels()), (32, 24, 3));
    // Labels repeat per object.
    assert!(manifest[0..4].iter().all(|(_, l)| *l == manifest[0].1));
    assert_ne!(manifest[0].1, manifest[4].1);
}

#[test]
fn augment_from_image_files() {
    use grasp_core::augment::PixelGrid;
    let dir = tempfile::tempdir().unwrap();
    let img = PixelGrid::new(2, 2, 3, vec![200; 12]).unwrap();
    let mask = PixelGrid::new(2, 2, 1, vec![255, 0, 0, 255]).unwrap();
    grasp_kit::pnm::write(&dir.path().join("o.ppm"), &img).unwrap();
    grasp_kit::pnm::write(&dir.path().join("o.pgm"), &mask).unwrap();
    fs::write(dir.path().join("objects.csv"), "image_file,mask_file,p0,p1,p2,p3,p4\no.ppm,o.pgm,0,0,1,0,0\n").unwrap();
    let out_dir = dir.path().join("out");
    ok(&[
        "augment",
        "--objects",
        p(&dir.path().join("objects.csv")),
        "--out-dir",
        p(&out_dir),
        "--copies",
        "2",
        "--width",
        "8",
        "--height",
        "8",
        "--seed",
        "1",
    ]);
    assert!(out_dir.join("aug-000001.ppm").exists());
    assert_eq!(grasp(&["augment", "--synthetic", "1", "--out-dir", p(&out_dir)]).status.code(), Some(2));
}
