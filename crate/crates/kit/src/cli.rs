//! The `grasp` command-line interface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use grasp_core::augment::{augment_copies, synthetic_objects, synthetic_toy_dataset, AugmentConfig, SegmentedObject};
use grasp_core::flops::{head_spec, per_layer_flops, NetworkSpec};
use grasp_core::fusion::{fuse, DecisionWindow, FusionWeights};
use grasp_core::head::{evaluate, predict, split_indices, train, TrainConfig};
use grasp_core::pareto::{pareto_frontier, select_for_budget, CardSet};
use grasp_core::{aggregate_annotations, FeatureDataset};

use crate::config::ExperimentConfig;
use crate::error::KitError;
use crate::tables::{self, DecisionRow, ObjectEntry, SplitRow, Subset};
use crate::{checkpoint, gfea, pnm, svg, BUNDLED_CARDS};

#[derive(Debug, Parser)]
#[command(name = "grasp", version, about = "Grasp-type probability estimation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn per-annotator grasp choices into label distributions.
    Aggregate {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Expand segmented objects into noisy-background training images.
    Augment(AugmentArgs),
    /// Write a synthetic feature file with softmax-of-linear labels.
    ToyData {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a dense head on a feature file.
    Train(TrainArgs),
    /// Mean angular similarity of a checkpoint on a feature file.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Split file written by `train`; restricts evaluation to `--subset`.
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long, value_parser = parse_subset, default_value = "val", requires = "split")]
        subset: Subset,
        /// Also write per-row predictions here.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Pareto frontier of a model card file.
    Pareto {
        #[arg(long, conflicts_with = "bundled", required_unless_present = "bundled")]
        cards: Option<PathBuf>,
        /// Use the card file shipped with the toolkit.
        #[arg(long)]
        bundled: bool,
        /// FLOPs budget for picking a single model.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// FLOPs of a network spec, per layer and in total.
    Flops {
        #[arg(long, conflicts_with = "head", required_unless_present = "head")]
        spec: Option<PathBuf>,
        /// Grasp head on an HxWxC feature map instead of a spec file.
        #[arg(long, value_parser = parse_hwc)]
        head: Option<(usize, usize, usize)>,
    },
    /// Fuse vision and EMG streams and smooth the decision over a window.
    FuseSim(FuseArgs),
    /// Render a history or card file as SVG.
    Plot {
        #[arg(long, conflicts_with = "cards", required_unless_present = "cards")]
        history: Option<PathBuf>,
        #[arg(long)]
        cards: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// CSV of `image_file,mask_file,p0..p4`, paths relative to the CSV.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    objects: Option<PathBuf>,
    /// Generate this many synthetic objects instead of reading images.
    #[arg(long)]
    synthetic: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    copies: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr1: Option<f64>,
    #[arg(long)]
    lr2: Option<f64>,
    #[arg(long)]
    split_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    vision: PathBuf,
    #[arg(long)]
    emg: PathBuf,
    #[arg(long)]
    w_vision: Option<f64>,
    #[arg(long)]
    fps: Option<usize>,
    #[arg(long)]
    window_s: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Decision CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_subset(s: &str) -> Result<Subset, String> {
    match s {
        "train" => Ok(Subset::Train),
        "val" => Ok(Subset::Val),
        _ => Err(format!("expected `train` or `val`, got `{s}`")),
    }
}

fn parse_hwc(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<usize> = s.split('x').map(str::parse).collect::<Result<_, _>>().map_err(|e| format!("{e}"))?;
    match parts[..] {
        [h, w, c] if h > 0 && w > 0 && c > 0 => Ok((h, w, c)),
        _ => Err(format!("expected HxWxC with positive extents, got `{s}`")),
    }
}

/// Parses `argv` and runs the command. Returns the process exit code:
/// 0 on success, 2 for usage errors, 1 for everything else.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(cli.command, &mut stdout) {
        Ok(()) => 0,
        Err(KitError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(cmd: Command, out: &mut dyn Write) -> Result<(), KitError> {
    match cmd {
        Command::Aggregate { annotations, out: dest } => aggregate(&annotations, &dest, out),
        Command::Augment(a) => augment(a, out),
        Command::ToyData { n, dim, temperature, seed, out: dest } => {
            let data = synthetic_toy_dataset(n, dim, temperature, seed)?;
            gfea::write_feature_file(&dest, &data)?;
            writeln!(out, "wrote {} rows of dimension {dim} to {}", data.len(), dest.display()).map_err(stdout_err)
        }
        Command::Train(a) => train_cmd(a, out),
        Command::Eval { checkpoint, features, split, subset, predictions } => {
            eval(&checkpoint, &features, split.as_deref(), subset, predictions.as_deref(), out)
        }
        Command::Pareto { cards, bundled: _, budget, svg } => pareto(cards.as_deref(), budget, svg.as_deref(), out),
        Command::Flops { spec, head } => flops(spec.as_deref(), head, out),
        Command::FuseSim(a) => fuse_sim(a, out),
        Command::Plot { history, cards, out: dest } => plot(history.as_deref(), cards.as_deref(), &dest),
    }
}

fn stdout_err(e: std::io::Error) -> KitError {
    KitError::io("stdout", e)
}

fn read_text(path: &Path) -> Result<String, KitError> {
    fs::read_to_string(path).map_err(|e| KitError::io(path.display(), e))
}

fn open(path: &Path) -> Result<fs::File, KitError> {
    fs::File::open(path).map_err(|e| KitError::io(path.display(), e))
}

fn create(path: &Path) -> Result<fs::File, KitError> {
    fs::File::create(path).map_err(|e| KitError::io(path.display(), e))
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, KitError> {
    match path {
        Some(p) => Ok(ExperimentConfig::parse(&read_text(p)?)?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn require_seed(flag: Option<u64>, cfg: &ExperimentConfig) -> Result<u64, KitError> {
    flag.or(cfg.seed).ok_or_else(|| KitError::Usage("a seed is required (--seed or `seed` in --config)".into()))
}

fn aggregate(annotations: &Path, dest: &Path, out: &mut dyn Write) -> Result<(), KitError> {
    let sets = tables::read_annotations(open(annotations)?)?;
    let labels = sets
        .iter()
        .map(|s| Ok((s.object_id.clone(), aggregate_annotations(s)?)))
        .collect::<Result<Vec<_>, KitError>>()?;
    tables::write_labels(create(dest)?, &labels)?;
    writeln!(out, "aggregated {} objects into {}", labels.len(), dest.display()).map_err(stdout_err)
}

fn augment(a: AugmentArgs, out: &mut dyn Write) -> Result<(), KitError> {
    let file_cfg = load_config(a.config.as_deref())?;
    let seed = require_seed(a.seed, &file_cfg)?;
    let d = AugmentConfig::default();
    let cfg = AugmentConfig {
        output_w: a.width.or(file_cfg.output_w).unwrap_or(d.output_w),
        output_h: a.height.or(file_cfg.output_h).unwrap_or(d.output_h),
        blur_sigma_range: (
            file_cfg.blur_sigma_min.unwrap_or(d.blur_sigma_range.0),
            file_cfg.blur_sigma_max.unwrap_or(d.blur_sigma_range.1),
        ),
        noise_variance_range: (
            file_cfg.noise_variance_min.unwrap_or(d.noise_variance_range.0),
            file_cfg.noise_variance_max.unwrap_or(d.noise_variance_range.1),
        ),
        copies_per_object: a.copies.or(file_cfg.copies_per_object).unwrap_or(d.copies_per_object),
        seed,
    };
    cfg.validate()?;
    let objects = match (a.objects, a.synthetic) {
        (Some(list), _) => load_objects(&list)?,
        (None, Some(n)) => {
            let max = cfg.output_w.min(cfg.output_h).clamp(1, 96);
            synthetic_objects(n, (max / 4).max(1), max, seed)?
        }
        (None, None) => unreachable!("clap requires one of --objects and --synthetic"),
    };
    fs::create_dir_all(&a.out_dir).map_err(|e| KitError::io(a.out_dir.display(), e))?;
    let mut manifest = Vec::with_capacity(objects.len() * cfg.copies_per_object);
    for (i, (obj, label)) in objects.iter().enumerate() {
        for (k, img) in augment_copies(obj, i, &cfg)?.into_iter().enumerate() {
            let name = format!("aug-{:06}.ppm", i * cfg.copies_per_object + k);
            pnm::write(&a.out_dir.join(&name), &img)?;
            manifest.push((name, *label));
        }
    }
    tables::write_image_manifest(create(&a.out_dir.join("manifest.csv"))?, &manifest)?;
    writeln!(out, "wrote {} images from {} objects to {}", manifest.len(), objects.len(), a.out_dir.display())
        .map_err(stdout_err)
}

fn load_objects(list: &Path) -> Result<Vec<(SegmentedObject, grasp_core::GraspDistribution)>, KitError> {
    let base = list.parent().unwrap_or(Path::new("."));
    let entries: Vec<ObjectEntry> = tables::read_objects(open(list)?)?;
    entries
        .into_iter()
        .map(|e| {
            let image = pnm::read(&base.join(&e.image_file))?;
            let mask = pnm::read(&base.join(&e.mask_file))?;
            Ok((SegmentedObject::new(image, mask)?, e.label))
        })
        .collect()
}

fn train_cmd(a: TrainArgs, out: &mut dyn Write) -> Result<(), KitError> {
    let f = load_config(a.config.as_deref())?;
    let seed = require_seed(a.seed, &f)?;
    let features = a.features.or(f.features.clone()).ok_or_else(|| KitError::Usage("--features is required".into()))?;
    let out_dir = a.out_dir.or(f.output_dir.clone()).ok_or_else(|| KitError::Usage("--out-dir is required".into()))?;
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        batch_size: a.batch_size.or(f.batch_size).unwrap_or(d.batch_size),
        epochs_per_phase: a.epochs.or(f.epochs_per_phase).unwrap_or(d.epochs_per_phase),
        lr_phase1: a.lr1.or(f.lr_phase1).unwrap_or(d.lr_phase1),
        lr_phase2: a.lr2.or(f.lr_phase2).unwrap_or(d.lr_phase2),
        beta1: f.beta1.unwrap_or(d.beta1),
        beta2: f.beta2.unwrap_or(d.beta2),
        eps: f.eps.unwrap_or(d.eps),
        seed,
        split_fraction: a.split_fraction.or(f.split_fraction).unwrap_or(d.split_fraction),
    };
    let data = gfea::read_feature_file(&features)?;
    let (head, history) = train(&data, &cfg)?;

    fs::create_dir_all(&out_dir).map_err(|e| KitError::io(out_dir.display(), e))?;
    checkpoint::save(&out_dir.join("head.ghed"), &head)?;
    tables::write_history(create(&out_dir.join("history.csv"))?, &tables::history_rows(&history))?;
    let (train_idx, val_idx) = split_indices(data.len(), cfg.split_fraction, cfg.seed);
    let mut split: Vec<SplitRow> = train_idx
        .iter()
        .map(|&i| (i, Subset::Train))
        .chain(val_idx.iter().map(|&i| (i, Subset::Val)))
        .map(|(row, subset)| SplitRow { row, image_id: data.rows()[row].image_id.clone(), subset })
        .collect();
    split.sort_by_key(|r| r.row);
    tables::write_split(create(&out_dir.join("split.csv"))?, &split)?;

    let last = history.epochs() - 1;
    writeln!(
        out,
        "trained {} epochs on {} rows (train {}, val {})\ninitial train_loss {} val_angular_similarity {}\nfinal train_loss {} val_loss {} val_angular_similarity {}",
        history.epochs(),
        data.len(),
        train_idx.len(),
        val_idx.len(),
        history.initial_train_loss,
        history.initial_val_similarity,
        history.train_loss[last],
        history.val_loss[last],
        history.val_similarity[last],
    )
    .map_err(stdout_err)
}

fn eval(
    ckpt: &Path,
    features: &Path,
    split: Option<&Path>,
    subset: Subset,
    predictions: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), KitError> {
    let head = checkpoint::load(ckpt)?;
    let mut data: FeatureDataset = gfea::read_feature_file(features)?;
    if let Some(split) = split {
        let rows = tables::read_split(open(split)?)?;
        let mut idx = Vec::new();
        for r in rows.iter().filter(|r| r.subset == subset) {
            match data.rows().get(r.row) {
                Some(row) if row.image_id == r.image_id => idx.push(r.row),
                _ => {
                    return Err(KitError::Usage(format!(
                        "split row {} ({}) does not match the feature file",
                        r.row, r.image_id
                    )))
                }
            }
        }
        data = data.subset(&idx);
    }
    let sim = evaluate(&head, &data)?;
    if let Some(p) = predictions {
        let preds = predict(&head, &data)?;
        let rows: Vec<_> = data.rows().iter().zip(preds).map(|(r, d)| (r.image_id.clone(), d)).collect();
        tables::write_labels(create(p)?, &rows)?;
    }
    writeln!(out, "rows,mean_angular_similarity\n{},{}", data.len(), sim.value()).map_err(stdout_err)
}

fn load_cards(path: Option<&Path>) -> Result<CardSet, KitError> {
    Ok(match path {
        Some(p) => tables::read_cards(open(p)?)?,
        None => tables::read_cards(BUNDLED_CARDS.as_bytes())?,
    })
}

fn pareto(
    cards: Option<&Path>,
    budget: Option<u64>,
    svg_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), KitError> {
    let set = load_cards(cards)?;
    let frontier = pareto_frontier(&set)?;
    tables::write_cards(&mut *out, frontier.cards())?;
    if let Some(b) = budget {
        let sel = select_for_budget(&set, b)?;
        let note = if sel.over_budget { " (nothing fits; cheapest frontier model)" } else { "" };
        writeln!(out, "# budget {b}: {}{note}", sel.card.name).map_err(stdout_err)?;
    }
    if let Some(p) = svg_out {
        fs::write(p, svg::frontier_svg(set.cards(), frontier.cards())).map_err(|e| KitError::io(p.display(), e))?;
    }
    Ok(())
}

fn flops(spec: Option<&Path>, head: Option<(usize, usize, usize)>, out: &mut dyn Write) -> Result<(), KitError> {
    let net: NetworkSpec = match (spec, head) {
        (Some(p), _) => serde_json::from_str(&read_text(p)?)?,
        (None, Some((h, w, c))) => head_spec(h, w, c),
        (None, None) => unreachable!("clap requires one of --spec and --head"),
    };
    let counts = per_layer_flops(&net)?;
    let total: u64 = counts.iter().sum();
    let mut w =
        crate::tables::writer(&mut *out, &["index", "kind", "flops"]).map_err(crate::tables::TableError::from)?;
    for (i, (layer, n)) in net.layers.iter().zip(&counts).enumerate() {
        w.write_record([i.to_string(), layer.kind().to_string(), n.to_string()])
            .map_err(crate::tables::TableError::from)?;
    }
    w.flush().map_err(stdout_err)?;
    drop(w);
    writeln!(out, "# {} total {total}", net.name).map_err(stdout_err)
}

fn fuse_sim(a: FuseArgs, out: &mut dyn Write) -> Result<(), KitError> {
    let f = load_config(a.config.as_deref())?;
    let weights = FusionWeights::new(a.w_vision.or(f.w_vision).unwrap_or(0.5))?;
    let fps = a.fps.or(f.fps).unwrap_or(DecisionWindow::DEFAULT_FPS);
    let seconds = a.window_s.or(f.window_s).unwrap_or(DecisionWindow::DEFAULT_SECONDS);
    let mut window = DecisionWindow::from_rate(fps, seconds)?;
    let vision = tables::read_stream(open(&a.vision)?)?;
    let emg = tables::read_stream(open(&a.emg)?)?;
    if vision.len() != emg.len() {
        return Err(KitError::Usage(format!("streams differ in length: {} vs {}", vision.len(), emg.len())));
    }
    let mut rows = Vec::with_capacity(vision.len());
    for (i, ((tv, v), (te, e))) in vision.iter().zip(&emg).enumerate() {
        if tv != te {
            return Err(KitError::Usage(format!("frame {i}: timestamps differ ({tv} vs {te})")));
        }
        let d = window.push_and_decide(fuse(v, e, weights));
        let [p0, p1, p2, p3, p4] = *d.average.as_array();
        rows.push(DecisionRow {
            t: *tv,
            p0,
            p1,
            p2,
            p3,
            p4,
            grasp: d.grasp.name().to_string(),
            window_full: d.window_full,
        });
    }
    match a.out {
        Some(p) => tables::write_decisions(create(&p)?, &rows)?,
        None => tables::write_decisions(&mut *out, &rows)?,
    }
    Ok(())
}

fn plot(history: Option<&Path>, cards: Option<&Path>, dest: &Path) -> Result<(), KitError> {
    let text = match (history, cards) {
        (Some(h), _) => svg::history_svg(&tables::read_history(open(h)?)?),
        (None, Some(c)) => {
            let set = load_cards(Some(c))?;
            svg::frontier_svg(set.cards(), pareto_frontier(&set)?.cards())
        }
        (None, None) => unreachable!("clap requires one of --history and --cards"),
    };
    fs::write(dest, text).map_err(|e| KitError::io(dest.display(), e))
}
