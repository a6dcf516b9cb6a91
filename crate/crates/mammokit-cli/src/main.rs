//! `mammokit` — batch front end for the mammography toolkit.
//!
//! Subcommands cover the full workflow: single-image preprocessing
//! utilities (`segment`, `normalize`, `enhance`), manifest-driven batch
//! stages (`preprocess`, `augment`), detection scoring (`evaluate`,
//! `froc`), the hard-sample scheduler simulator (`schedule-sim`), and
//! dataset plumbing (`split-folds`, `convert-manifest`).
//!
//! Every command is deterministic: outputs depend only on the inputs, the
//! configuration, and `--seed`. Batch commands exit nonzero when any item
//! failed, and write a `failures.json` naming the items.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mammokit::enhance::{synthesize_channels_with, ClaheConfig};
use mammokit::eval::{froc, load_ground_truth, load_predictions, match_and_count, FrocCurve};
use mammokit::io;
use mammokit::normalize::{segment_breast, truncate_normalize};
use mammokit::pipeline::{
    augment_batch, convert_ddsm_style, convert_inbreast_style, preprocess_batch, split_folds,
    BatchReport, DatasetManifest, PipelineConfig,
};
use mammokit::schedule::{run_schedule, MockTrainer};

#[derive(Parser)]
#[command(
    name = "mammokit",
    version,
    about = "Deterministic mammography preprocessing, augmentation and evaluation"
)]
struct Cli {
    /// Root seed; overrides the config file's seed for every stage.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for batch stages (0 = one per core). Builds without
    /// the `parallel` feature accept the flag but always run sequentially;
    /// results are identical either way.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// JSON configuration file. Precedence: command-line flags, then the
    /// config file, then built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate the breast in a mammogram and write the crop, its mask, and
    /// the crop origin.
    Segment {
        image: PathBuf,
        /// Gaussian sigma applied before thresholding.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Segment, then truncate-normalize the breast crop to [0, 1].
    Normalize {
        image: PathBuf,
        #[arg(long)]
        sigma: Option<f64>,
        /// Fraction of breast pixels truncated at the dark end.
        #[arg(long, value_parser = unit_interval)]
        low_fraction: Option<f64>,
        /// Fraction of breast pixels truncated at the bright end.
        #[arg(long, value_parser = unit_interval)]
        high_fraction: Option<f64>,
    },
    /// Synthesize the three-channel contrast-enhanced image from a
    /// normalized grayscale input.
    Enhance {
        image: PathBuf,
        /// CLAHE tile grid columns.
        #[arg(long)]
        tiles_x: Option<usize>,
        /// CLAHE tile grid rows.
        #[arg(long)]
        tiles_y: Option<usize>,
        /// Histogram bins.
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Run the full preprocessing chain over a dataset manifest.
    Preprocess {
        /// Input dataset manifest (JSON).
        manifest: PathBuf,
    },
    /// Expand a dataset with natural-deformation and classic variants.
    Augment {
        /// Input dataset manifest (JSON); image paths should point at
        /// normalized grayscale images.
        manifest: PathBuf,
        /// Natural-deformation variants per entry.
        #[arg(long)]
        natural: Option<usize>,
        /// Classic geometric variants per entry.
        #[arg(long)]
        classic: Option<usize>,
        /// Lesion-free regions deformed in each natural variant.
        #[arg(long)]
        regions: Option<usize>,
    },
    /// Score predictions against ground truth at one operating point.
    Evaluate {
        /// Predictions, one JSON object per line with a confidence.
        #[arg(long)]
        pred: PathBuf,
        /// Ground truth boxes, one JSON object per line.
        #[arg(long)]
        gt: PathBuf,
        /// Confidence threshold in [0, 1].
        #[arg(long, value_parser = unit_interval)]
        conf_th: Option<f64>,
        /// IOU threshold in [0, 1].
        #[arg(long, value_parser = unit_interval)]
        iou_th: Option<f64>,
        /// Total images evaluated, including normals with no boxes at all;
        /// defaults to the number of distinct image ids in the two files.
        #[arg(long)]
        n_images: Option<usize>,
    },
    /// Sweep the confidence threshold and write the FROC curve as CSV and
    /// SVG.
    Froc {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_parser = unit_interval)]
        iou_th: Option<f64>,
        #[arg(long)]
        n_images: Option<usize>,
        /// Explicit comma-separated confidence grid; defaults to every
        /// distinct prediction confidence plus 1.0.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Run the hard-sample scheduler against a mock trainer and emit the
    /// event log as JSON lines.
    ScheduleSim {
        /// Generate this many samples named sample0000, sample0001, …
        #[arg(long)]
        samples: Option<usize>,
        /// JSON file mapping sample id to its per-epoch loss sequence;
        /// ids not in the map score 0. Without --samples, the map's keys
        /// are the sample set.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Loss above which a validation sample counts as hard.
        #[arg(long)]
        hard_threshold: Option<f64>,
        /// Samples promoted per swap.
        #[arg(long)]
        swap_count: Option<usize>,
        /// Fraction of samples that start in the training set.
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        final_epochs: Option<usize>,
        #[arg(long)]
        max_epochs: Option<usize>,
    },
    /// Split a manifest into two cross-validation folds, keeping entries
    /// that share a split tag in the same fold.
    SplitFolds {
        manifest: PathBuf,
        /// Drop entries without ground-truth boxes before splitting.
        #[arg(long)]
        mass_only: bool,
    },
    /// Scan a dataset directory tree and write a manifest for it.
    ConvertManifest {
        style: LayoutStyle,
        /// Dataset root directory.
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutStyle {
    /// Flat directory: image files with sidecar box/mask files.
    Inbreast,
    /// One directory per exam: image.png plus mask*.png.
    Ddsm,
}

/// Clap value parser for fractions; rejects values outside [0, 1] as a
/// usage error.
fn unit_interval(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_jobs(cli.jobs)?;

    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)
            .with_context(|| format!("reading config {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.scheduler.seed = seed;
        cfg.elastic.seed = seed;
    }
    let out = cli.out.or_else(|| cfg.out_dir.clone());

    match cli.command {
        Command::Segment { image, sigma } => {
            let sigma = sigma.unwrap_or(cfg.segment_sigma);
            cmd_segment(&image, sigma, &out_dir_for(&image, &out))
        }
        Command::Normalize {
            image,
            sigma,
            low_fraction,
            high_fraction,
        } => {
            let sigma = sigma.unwrap_or(cfg.segment_sigma);
            let mut params = cfg.truncation;
            if let Some(v) = low_fraction {
                params.low_fraction = v;
            }
            if let Some(v) = high_fraction {
                params.high_fraction = v;
            }
            cmd_normalize(&image, sigma, &params, &out_dir_for(&image, &out))
        }
        Command::Enhance {
            image,
            tiles_x,
            tiles_y,
            bins,
        } => {
            let mut clahe = cfg.clahe;
            if let Some(v) = tiles_x {
                clahe.tiles_x = v;
            }
            if let Some(v) = tiles_y {
                clahe.tiles_y = v;
            }
            if let Some(v) = bins {
                clahe.bins = v;
            }
            cmd_enhance(&image, &clahe, &out_dir_for(&image, &out))
        }
        Command::Preprocess { manifest } => {
            let loaded = DatasetManifest::load(&manifest)
                .with_context(|| format!("loading manifest {}", manifest.display()))?;
            let out = require_out_dir(&out)?;
            let report = preprocess_batch(&loaded, &cfg, &out)?;
            finish_batch("preprocess", &report, &out)
        }
        Command::Augment {
            manifest,
            natural,
            classic,
            regions,
        } => {
            if let Some(v) = natural {
                cfg.natural_per_image = v;
            }
            if let Some(v) = classic {
                cfg.classic_per_image = v;
            }
            if let Some(v) = regions {
                cfg.non_mass_regions = v;
            }
            let loaded = DatasetManifest::load(&manifest)
                .with_context(|| format!("loading manifest {}", manifest.display()))?;
            let out = require_out_dir(&out)?;
            let report = augment_batch(&loaded, &cfg, &out)?;
            finish_batch("augment", &report, &out)
        }
        Command::Evaluate {
            pred,
            gt,
            conf_th,
            iou_th,
            n_images,
        } => {
            let mut th = cfg.eval;
            if let Some(v) = conf_th {
                th.conf_th = v;
            }
            if let Some(v) = iou_th {
                th.iou_th = v;
            }
            cmd_evaluate(&pred, &gt, th, n_images, &out)
        }
        Command::Froc {
            pred,
            gt,
            iou_th,
            n_images,
            grid,
        } => {
            let iou_th = iou_th.unwrap_or(cfg.eval.iou_th);
            cmd_froc(&pred, &gt, iou_th, n_images, grid.as_deref(), &out)
        }
        Command::ScheduleSim {
            samples,
            profile,
            hard_threshold,
            swap_count,
            ratio,
            final_epochs,
            max_epochs,
        } => {
            let mut sched = cfg.scheduler;
            if let Some(v) = swap_count {
                sched.swap_count = v;
            }
            if let Some(v) = ratio {
                sched.initial_split_ratio = v;
            }
            if let Some(v) = final_epochs {
                sched.final_epochs = v;
            }
            if let Some(v) = max_epochs {
                sched.max_epochs = v;
            }
            cmd_schedule_sim(
                samples,
                profile.as_deref(),
                hard_threshold.unwrap_or(0.5),
                sched,
                &out,
            )
        }
        Command::SplitFolds {
            manifest,
            mass_only,
        } => cmd_split_folds(&manifest, cfg.seed, mass_only, &out),
        Command::ConvertManifest { style, dir } => {
            let manifest = match style {
                LayoutStyle::Inbreast => convert_inbreast_style(&dir)?,
                LayoutStyle::Ddsm => convert_ddsm_style(&dir)?,
            };
            let path = out.unwrap_or_else(|| dir.join("manifest.json"));
            manifest.save(&path)?;
            println!(
                "wrote {} ({} entries)",
                path.display(),
                manifest.entries.len()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Sizes the worker pool. With the `parallel` feature, `--jobs N` caps the
/// thread count (0 keeps one thread per core); without it the flag is
/// accepted for interface compatibility and ignored.
#[cfg(feature = "parallel")]
fn configure_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_jobs(jobs: Option<usize>) -> Result<()> {
    if matches!(jobs, Some(n) if n > 1) {
        eprintln!("note: this build is sequential; --jobs has no effect");
    }
    Ok(())
}

/// Single-image commands default their output next to the input.
fn out_dir_for(image: &Path, out: &Option<PathBuf>) -> PathBuf {
    match out {
        Some(dir) => dir.clone(),
        None => image.parent().unwrap_or(Path::new(".")).to_path_buf(),
    }
}

fn require_out_dir(out: &Option<PathBuf>) -> Result<PathBuf> {
    out.clone().ok_or_else(|| {
        anyhow::anyhow!("no output directory: pass --out or set out_dir in the config")
    })
}

fn stem_of(image: &Path) -> String {
    image
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

/// Crop geometry sidecar written by `segment` and `normalize`.
#[derive(serde::Serialize)]
struct RoiRecord {
    origin: (usize, usize),
    size: (usize, usize),
}

fn write_roi_record(path: &Path, origin: (usize, usize), size: (usize, usize)) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&RoiRecord { origin, size })?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn cmd_segment(image: &Path, sigma: f64, out_dir: &Path) -> Result<ExitCode> {
    let gray = io::read_gray(image)?;
    let roi = segment_breast(&gray, sigma)?;
    fs::create_dir_all(out_dir)?;
    let stem = stem_of(image);

    let crop = out_dir.join(format!("{stem}_crop.png"));
    io::write_gray(&crop, &roi.image)?;
    let mask = out_dir.join(format!("{stem}_breast.png"));
    io::write_mask(&mask, &roi.mask)?;
    let record = out_dir.join(format!("{stem}_roi.json"));
    write_roi_record(&record, roi.origin, (roi.image.width(), roi.image.height()))?;

    for path in [&crop, &mask, &record] {
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_normalize(
    image: &Path,
    sigma: f64,
    params: &mammokit::normalize::TruncationParams,
    out_dir: &Path,
) -> Result<ExitCode> {
    let gray = io::read_gray(image)?;
    let roi = segment_breast(&gray, sigma)?;
    let norm = truncate_normalize(&roi, params)?;
    fs::create_dir_all(out_dir)?;
    let stem = stem_of(image);

    let out = out_dir.join(format!("{stem}_norm.png"));
    io::write_float(&out, &norm)?;
    let record = out_dir.join(format!("{stem}_roi.json"));
    write_roi_record(&record, roi.origin, (norm.width(), norm.height()))?;

    println!("wrote {}", out.display());
    println!("wrote {}", record.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_enhance(image: &Path, clahe: &ClaheConfig, out_dir: &Path) -> Result<ExitCode> {
    let norm = io::read_float(image)?;
    let three = synthesize_channels_with(&norm, clahe)?;
    fs::create_dir_all(out_dir)?;

    let out = out_dir.join(format!("{}_rgb.png", stem_of(image)));
    io::write_rgb(&out, &three)?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

/// Prints the batch summary and turns per-item failures into a nonzero
/// exit.
fn finish_batch(name: &str, report: &BatchReport, out: &Path) -> Result<ExitCode> {
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    for failure in &report.failures {
        eprintln!(
            "failed: {}: {}",
            failure.image_path.display(),
            failure.message
        );
    }
    println!(
        "{name}: {} processed, {} failed, output in {}",
        report.processed,
        report.failures.len(),
        out.display()
    );
    Ok(if report.is_clean() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

/// Distinct image ids referenced by either file; the default image count.
fn referenced_images(
    preds: &[mammokit::eval::Prediction],
    gts: &[mammokit::eval::GroundTruth],
) -> usize {
    let mut ids: Vec<&str> = preds
        .iter()
        .map(|p| p.image_id.as_str())
        .chain(gts.iter().map(|g| g.image_id.as_str()))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

fn cmd_evaluate(
    pred: &Path,
    gt: &Path,
    th: mammokit::eval::EvalThresholds,
    n_images: Option<usize>,
    out: &Option<PathBuf>,
) -> Result<ExitCode> {
    let preds = load_predictions(pred).with_context(|| format!("reading {}", pred.display()))?;
    let gts = load_ground_truth(gt).with_context(|| format!("reading {}", gt.display()))?;
    let n_images = n_images.unwrap_or_else(|| referenced_images(&preds, &gts));
    let report = match_and_count(&preds, &gts, &th, n_images)?;

    println!("TPR {:.3} FPPI {:.3}", report.tpr, report.fppi);
    println!(
        "tp {} fp {} fn {} tn {} over {} images at conf >= {} iou >= {}",
        report.true_positives,
        report.false_positives,
        report.false_negatives,
        report.true_negatives,
        report.n_images,
        th.conf_th,
        th.iou_th
    );
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let path = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_froc(
    pred: &Path,
    gt: &Path,
    iou_th: f64,
    n_images: Option<usize>,
    grid: Option<&[f64]>,
    out: &Option<PathBuf>,
) -> Result<ExitCode> {
    let preds = load_predictions(pred).with_context(|| format!("reading {}", pred.display()))?;
    let gts = load_ground_truth(gt).with_context(|| format!("reading {}", gt.display()))?;
    let n_images = n_images.unwrap_or_else(|| referenced_images(&preds, &gts));
    let curve = froc(&preds, &gts, iou_th, n_images, grid)?;

    let out_dir = out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir)?;
    let csv_path = out_dir.join("froc.csv");
    fs::write(&csv_path, froc_csv(&curve))?;
    let svg_path = out_dir.join("froc.svg");
    fs::write(&svg_path, froc_svg(&curve))?;

    println!("{} points", curve.points.len());
    println!("wrote {}", csv_path.display());
    println!("wrote {}", svg_path.display());
    Ok(ExitCode::SUCCESS)
}

fn froc_csv(curve: &FrocCurve) -> String {
    let mut text = String::from("conf_th,fppi,tpr\n");
    for p in &curve.points {
        text.push_str(&format!("{},{},{}\n", p.conf_th, p.fppi, p.tpr));
    }
    text
}

/// Renders the curve as a self-contained SVG: axes, gridline ticks, and
/// one polyline through the operating points.
fn froc_svg(curve: &FrocCurve) -> String {
    let (w, h, margin) = (640.0, 480.0, 56.0);
    let plot_w = w - 2.0 * margin;
    let plot_h = h - 2.0 * margin;
    let max_fppi = curve
        .points
        .iter()
        .map(|p| p.fppi)
        .fold(0.0f64, f64::max)
        .max(1e-9);

    let x_of = |fppi: f64| margin + plot_w * (fppi / max_fppi);
    let y_of = |tpr: f64| margin + plot_h * (1.0 - tpr);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"{margin}\" y=\"{margin}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"black\"/>\n"
    ));
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (x, y) = (x_of(f * max_fppi), y_of(f));
        svg.push_str(&format!(
            "  <line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"#ccc\"/>\n",
            margin,
            margin + plot_h
        ));
        svg.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{y:.1}\" x2=\"{}\" y2=\"{y:.1}\" stroke=\"#ccc\"/>\n",
            margin,
            margin + plot_w
        ));
        svg.push_str(&format!(
            "  <text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{:.2}</text>\n",
            margin + plot_h + 16.0,
            f * max_fppi
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{y:.1}\" text-anchor=\"end\">{f:.2}</text>\n",
            margin - 8.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">false positives per image</text>\n",
        margin + plot_w / 2.0,
        h - 12.0
    ));
    svg.push_str(&format!(
        "  <text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">\
         true positive rate</text>\n",
        margin + plot_h / 2.0,
        margin + plot_h / 2.0
    ));

    let points: Vec<String> = curve
        .points
        .iter()
        .map(|p| format!("{:.2},{:.2}", x_of(p.fppi), y_of(p.tpr)))
        .collect();
    svg.push_str(&format!(
        "  <polyline points=\"{}\" fill=\"none\" stroke=\"#c33\" stroke-width=\"2\"/>\n",
        points.join(" ")
    ));
    for p in &curve.points {
        svg.push_str(&format!(
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#c33\"/>\n",
            x_of(p.fppi),
            y_of(p.tpr)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn cmd_schedule_sim(
    samples: Option<usize>,
    profile: Option<&Path>,
    hard_threshold: f64,
    sched: mammokit::schedule::SchedulerConfig,
    out: &Option<PathBuf>,
) -> Result<ExitCode> {
    let profiles: BTreeMap<String, Vec<f64>> = match profile {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text)?
        }
        None => BTreeMap::new(),
    };
    let ids: Vec<String> = match samples {
        Some(n) => (0..n).map(|i| format!("sample{i:04}")).collect(),
        None if !profiles.is_empty() => profiles.keys().cloned().collect(),
        None => bail!("need --samples or --profile to define the sample set"),
    };

    let mut trainer = MockTrainer::new(profiles, hard_threshold);
    let log = run_schedule(&ids, &mut trainer, &sched)?;

    let mut lines = String::new();
    for event in &log.events {
        lines.push_str(&serde_json::to_string(event)?);
        lines.push('\n');
    }
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join("schedule.jsonl");
            fs::write(&path, &lines).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {} ({} events)", path.display(), log.events.len());
        }
        None => print!("{lines}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_split_folds(
    manifest: &Path,
    seed: u64,
    mass_only: bool,
    out: &Option<PathBuf>,
) -> Result<ExitCode> {
    let loaded = DatasetManifest::load(manifest)
        .with_context(|| format!("loading manifest {}", manifest.display()))?;
    let (fold0, fold1) = split_folds(&loaded.manifest, seed, mass_only);

    // Folds keep the input manifest's relative paths, so they must stay
    // in its directory unless the caller says otherwise.
    let out_dir = out.clone().unwrap_or_else(|| loaded.base.clone());
    fs::create_dir_all(&out_dir)?;
    for (name, fold) in [("fold0.json", &fold0), ("fold1.json", &fold1)] {
        let path = out_dir.join(name);
        fold.save(&path)?;
        println!("wrote {} ({} entries)", path.display(), fold.entries.len());
    }
    Ok(ExitCode::SUCCESS)
}
