//! Manifest-driven batch processing: preprocessing, augmentation, fold
//! splitting, and dataset-layout converters.
//!
//! A dataset is described by a JSON [`DatasetManifest`] whose paths are
//! relative to the manifest file's own directory, so a dataset tree can be
//! moved or copied wholesale. Batch operations read one manifest and write
//! a self-contained output tree (images, masks, manifests, and provenance
//! records) whose bytes depend only on the inputs, the configuration, and
//! the seed — never on the output location or thread count.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{
    classic_augment, natural_deform, resize_three_for_model, sample_non_mass_regions,
    AugmentRanges, AugmentSample, ClassicAugmentConfig, DeformTarget, ElasticParams,
    DEFAULT_INPAINT_RADIUS, DEFAULT_REGION_RADIUS_RANGE,
};
use crate::enhance::{synthesize_channels_with, ClaheConfig, CHANNEL_CLIP_LIMITS};
use crate::error::{Error, Result};
use crate::eval::EvalThresholds;
use crate::image::{BBox, BinaryMask, FloatImage};
use crate::io;
use crate::normalize::{segment_breast, truncate_normalize, TruncationParams};
use crate::rng::SplitMix64;
use crate::schedule::SchedulerConfig;

// ----------------------------------------------------------------- manifest

/// One image with its annotations.
///
/// All paths are relative to the directory holding the manifest file.
/// `gt_boxes` may be empty (a normal image). When `lesion_mask_paths` is
/// nonempty it must pair up 1:1 with `gt_boxes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_path: PathBuf,
    #[serde(default)]
    pub gt_boxes: Vec<BBox>,
    #[serde(default)]
    pub lesion_mask_paths: Vec<PathBuf>,
    /// Groups entries that must land in the same cross-validation fold,
    /// e.g. the two views of one breast. Empty means ungrouped.
    #[serde(default)]
    pub split_tag: String,
}

/// A dataset: a list of annotated images.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

/// A manifest together with the directory its relative paths resolve
/// against.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: DatasetManifest,
    /// Directory of the manifest file.
    pub base: PathBuf,
}

impl DatasetManifest {
    /// Reads and validates a manifest file: every referenced image and
    /// mask must exist, and mask counts must match box counts.
    pub fn load(path: &Path) -> Result<LoadedManifest> {
        let text = fs::read_to_string(path)?;
        let manifest: DatasetManifest = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        for (i, entry) in manifest.entries.iter().enumerate() {
            let image = base.join(&entry.image_path);
            if !image.is_file() {
                return Err(Error::param(format!(
                    "manifest entry {i}: image {} does not exist",
                    image.display()
                )));
            }
            if !entry.lesion_mask_paths.is_empty()
                && entry.lesion_mask_paths.len() != entry.gt_boxes.len()
            {
                return Err(Error::param(format!(
                    "manifest entry {i}: {} masks but {} boxes",
                    entry.lesion_mask_paths.len(),
                    entry.gt_boxes.len()
                )));
            }
            for mask in &entry.lesion_mask_paths {
                let mask = base.join(mask);
                if !mask.is_file() {
                    return Err(Error::param(format!(
                        "manifest entry {i}: mask {} does not exist",
                        mask.display()
                    )));
                }
            }
        }
        Ok(LoadedManifest { manifest, base })
    }

    /// Writes the manifest as pretty-printed JSON.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Serializes `value` as pretty JSON with a trailing newline.
fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

// ------------------------------------------------------------ configuration

/// Every knob of the batch pipeline in one (de)serializable bundle.
///
/// All randomness derives from `seed`: entry `i` of a batch works from
/// `SplitMix64::split(seed, i)`, and each variant splits again from there,
/// so adding or removing entries never perturbs the others. The `seed`
/// field inside `elastic` is a placeholder — natural deformation overrides
/// it with the derived per-variant seeds, which the audit log records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root seed for the whole batch.
    pub seed: u64,
    /// Gaussian sigma for breast segmentation.
    pub segment_sigma: f64,
    pub truncation: TruncationParams,
    /// Tiling and bin count for channel synthesis; the two enhanced
    /// channels use the fixed clip limits regardless of `clahe.clip_limit`.
    pub clahe: ClaheConfig,
    pub elastic: ElasticParams,
    /// Seam-repair neighborhood for natural deformation, in pixels.
    pub inpaint_radius: usize,
    /// Natural-deformation variants per entry.
    pub natural_per_image: usize,
    /// Lesion-free regions additionally deformed in each natural variant.
    pub non_mass_regions: usize,
    /// Radius range (pixels) for sampled lesion-free regions.
    pub region_radius_range: (usize, usize),
    /// Classic geometric variants per entry.
    pub classic_per_image: usize,
    /// Ranges the classic variants draw their parameters from.
    pub augment_ranges: AugmentRanges,
    pub eval: EvalThresholds,
    pub scheduler: SchedulerConfig,
    /// Default output directory; a command-line `--out` overrides it.
    pub out_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            segment_sigma: 2.0,
            truncation: TruncationParams::default(),
            clahe: ClaheConfig::default(),
            elastic: ElasticParams::default(),
            inpaint_radius: DEFAULT_INPAINT_RADIUS,
            natural_per_image: 1,
            non_mass_regions: 1,
            region_radius_range: DEFAULT_REGION_RADIUS_RANGE,
            classic_per_image: 1,
            augment_ranges: AugmentRanges::default(),
            eval: EvalThresholds::default(),
            scheduler: SchedulerConfig::default(),
            out_dir: None,
        }
    }
}

impl PipelineConfig {
    /// Reads a config file; unknown fields are rejected, missing fields
    /// take their defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

// -------------------------------------------------------------- batch report

/// One input that could not be processed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    /// The input image, relative to the input manifest.
    pub image_path: PathBuf,
    pub message: String,
}

/// Outcome of a batch operation. `failures` nonempty means the output
/// tree is incomplete and the run should exit nonzero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchReport {
    /// Entries fully processed.
    pub processed: usize,
    /// Non-fatal notices, e.g. variants skipped for lack of masks.
    pub warnings: Vec<String>,
    pub failures: Vec<FailureRecord>,
}

impl BatchReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

// ---------------------------------------------------------------- preprocess

/// Everything needed to reproduce (or invert) one preprocessed image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    /// Source image, relative to the input manifest.
    pub source_image: PathBuf,
    /// Top-left corner of the breast crop in source coordinates.
    pub crop_origin: (usize, usize),
    /// Breast crop dimensions before resizing.
    pub crop_size: (usize, usize),
    /// Model-input dimensions after resizing.
    pub output_size: (usize, usize),
    /// Resize factor applied to the crop (and to box coordinates).
    pub scale: f64,
    pub segment_sigma: f64,
    pub truncation: TruncationParams,
    pub clahe: ClaheConfig,
    pub channel_clip_limits: [f64; 2],
    /// Every file this entry produced, relative to the output directory.
    pub outputs: Vec<PathBuf>,
}

/// Per-entry result of the preprocessing worker: the model-space manifest
/// entry and the crop-space manifest entry. The worker writes its own
/// image, mask, and provenance files; only the manifests need collecting.
struct PreprocessedEntry {
    model: ManifestEntry,
    normalized: ManifestEntry,
}

/// Runs the full preprocessing chain over a dataset and writes the output
/// tree under `out_dir`:
///
/// - `images/` — enhanced three-channel model inputs (8-bit RGB PNG),
///   resized to the detector's input scale;
/// - `normalized/` — truncation-normalized breast crops (16-bit gray PNG)
///   at crop resolution, the input for augmentation;
/// - `masks/` — lesion masks cropped to the breast window;
/// - `provenance/` — one JSON record per entry with the exact parameters;
/// - `manifest.json` — model-space entries (resized boxes, no masks);
/// - `normalized_manifest.json` — crop-space entries (boxes and masks);
/// - `failures.json` — written only when some entries failed.
///
/// Per-entry failures (unreadable files, boxes outside the breast crop,
/// degenerate segmentations) are reported and skipped; the rest of the
/// batch still completes.
pub fn preprocess_batch(
    input: &LoadedManifest,
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> Result<BatchReport> {
    for sub in ["images", "normalized", "masks", "provenance"] {
        fs::create_dir_all(out_dir.join(sub))?;
    }

    let entries = &input.manifest.entries;
    let results = crate::parallel::map_indexed(entries.len(), |i| {
        preprocess_entry(&entries[i], i, &input.base, cfg, out_dir)
    });

    let mut report = BatchReport::default();
    let mut model = DatasetManifest::default();
    let mut normalized = DatasetManifest::default();
    for (entry, result) in entries.iter().zip(results) {
        match result {
            Ok(done) => {
                report.processed += 1;
                model.entries.push(done.model);
                normalized.entries.push(done.normalized);
            }
            Err(err) => report.failures.push(FailureRecord {
                image_path: entry.image_path.clone(),
                message: err.to_string(),
            }),
        }
    }

    model.save(&out_dir.join("manifest.json"))?;
    normalized.save(&out_dir.join("normalized_manifest.json"))?;
    if !report.failures.is_empty() {
        write_json(&out_dir.join("failures.json"), &report.failures)?;
    }
    Ok(report)
}

fn preprocess_entry(
    entry: &ManifestEntry,
    index: usize,
    base: &Path,
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> Result<PreprocessedEntry> {
    let prefix = output_prefix(index, &entry.image_path);
    let gray = io::read_gray(&base.join(&entry.image_path))?;
    let roi = segment_breast(&gray, cfg.segment_sigma)?;
    let norm = truncate_normalize(&roi, &cfg.truncation)?;
    let (ox, oy) = (roi.origin.0 as i64, roi.origin.1 as i64);
    let (cw, ch) = (norm.width() as i64, norm.height() as i64);

    // Boxes move into crop coordinates; a box the crop misses entirely is
    // an annotation/segmentation disagreement worth failing loudly on.
    let mut crop_boxes = Vec::with_capacity(entry.gt_boxes.len());
    for b in &entry.gt_boxes {
        let x_min = (b.x_min - ox).max(0);
        let y_min = (b.y_min - oy).max(0);
        let x_max = (b.x_max - ox).min(cw);
        let y_max = (b.y_max - oy).min(ch);
        if x_min >= x_max || y_min >= y_max {
            return Err(Error::param(format!(
                "gt box ({}, {}, {}, {}) lies outside the breast crop",
                b.x_min, b.y_min, b.x_max, b.y_max
            )));
        }
        crop_boxes.push(BBox::new(x_min, y_min, x_max, y_max)?);
    }

    let mut crop_masks = Vec::with_capacity(entry.lesion_mask_paths.len());
    for path in &entry.lesion_mask_paths {
        let mask = io::read_mask(&base.join(path))?;
        if mask.width() != gray.width() || mask.height() != gray.height() {
            return Err(Error::ShapeMismatch(format!(
                "mask {} is {}x{} but the image is {}x{}",
                path.display(),
                mask.width(),
                mask.height(),
                gray.width(),
                gray.height()
            )));
        }
        crop_masks.push(mask.crop(
            roi.origin.0,
            roi.origin.1,
            roi.origin.0 + norm.width(),
            roi.origin.1 + norm.height(),
        )?);
    }

    let three = synthesize_channels_with(&norm, &cfg.clahe)?;
    let (resized, scaled_boxes, scale) = resize_three_for_model(&three, &crop_boxes)?;

    let image_rel = PathBuf::from("images").join(format!("{prefix}.png"));
    io::write_rgb(&out_dir.join(&image_rel), &resized)?;
    let norm_rel = PathBuf::from("normalized").join(format!("{prefix}.png"));
    io::write_float(&out_dir.join(&norm_rel), &norm)?;
    let mut mask_rels = Vec::with_capacity(crop_masks.len());
    for (j, mask) in crop_masks.iter().enumerate() {
        let rel = PathBuf::from("masks").join(format!("{prefix}.mask{j}.png"));
        io::write_mask(&out_dir.join(&rel), mask)?;
        mask_rels.push(rel);
    }

    let provenance_rel = PathBuf::from("provenance").join(format!("{prefix}.json"));
    let mut outputs = vec![image_rel.clone(), norm_rel.clone()];
    outputs.extend(mask_rels.iter().cloned());
    let provenance = ProvenanceRecord {
        source_image: entry.image_path.clone(),
        crop_origin: roi.origin,
        crop_size: (norm.width(), norm.height()),
        output_size: (resized.width(), resized.height()),
        scale,
        segment_sigma: cfg.segment_sigma,
        truncation: cfg.truncation,
        clahe: cfg.clahe,
        channel_clip_limits: CHANNEL_CLIP_LIMITS,
        outputs,
    };
    write_json(&out_dir.join(&provenance_rel), &provenance)?;

    Ok(PreprocessedEntry {
        model: ManifestEntry {
            image_path: image_rel,
            gt_boxes: scaled_boxes,
            lesion_mask_paths: Vec::new(),
            split_tag: entry.split_tag.clone(),
        },
        normalized: ManifestEntry {
            image_path: norm_rel,
            gt_boxes: crop_boxes,
            lesion_mask_paths: mask_rels,
            split_tag: entry.split_tag.clone(),
        },
    })
}

/// `0007_stem` — index-prefixed so two inputs with the same file stem
/// cannot collide in the output tree.
fn output_prefix(index: usize, image_path: &Path) -> String {
    let stem = image_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());
    format!("{index:04}_{stem}")
}

// ----------------------------------------------------------------- augment

/// How one augmented output was derived, with every seed that shaped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariantKind {
    /// Unmodified copy of the input entry.
    Original,
    /// Natural deformation of every lesion plus sampled lesion-free
    /// regions.
    Natural {
        seed: u64,
        lesion_seeds: Vec<u64>,
        region_sampler_seed: u64,
        region_seeds: Vec<u64>,
        alpha: f64,
        sigma: f64,
        inpaint_radius: usize,
    },
    /// Classic geometric transform with the sampled parameters.
    Classic {
        seed: u64,
        config: ClassicAugmentConfig,
    },
}

/// Audit-log row: one output image, its masks, and its derivation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    /// Source image, relative to the input manifest.
    pub source_image: PathBuf,
    /// Output image, relative to the output directory.
    pub image_path: PathBuf,
    pub mask_paths: Vec<PathBuf>,
    #[serde(flatten)]
    pub variant: VariantKind,
}

/// The audit log written alongside an augmented dataset: the root seed
/// and one record per output entry, in manifest order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditLog {
    pub seed: u64,
    pub records: Vec<AuditRecord>,
}

/// One augmented output before it reaches the manifest/audit writers.
struct AugmentedEntry {
    manifest: ManifestEntry,
    audit: AuditRecord,
}

struct AugmentedGroup {
    entries: Vec<AugmentedEntry>,
    warnings: Vec<String>,
    failures: Vec<FailureRecord>,
}

/// Expands a dataset with deformation variants and writes the output tree
/// under `out_dir`:
///
/// - `images/` — originals and variants (16-bit gray PNG);
/// - `masks/` — lesion masks for every output entry;
/// - `manifest.json` — all output entries, originals first per input;
/// - `audit.json` — per-output derivation records with all derived seeds;
/// - `failures.json` — written only when some work failed.
///
/// Each input entry yields its original plus `natural_per_image` natural
/// deformations (every lesion deformed, then `non_mass_regions` sampled
/// lesion-free regions) and `classic_per_image` geometric variants drawn
/// from `augment_ranges`. Natural and classic variants need lesion masks
/// to keep boxes tight; entries without masks pass through with a warning
/// when variants were requested. Box annotations on variant entries are
/// the tight bounding boxes of the transformed masks.
pub fn augment_batch(
    input: &LoadedManifest,
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> Result<BatchReport> {
    if cfg.natural_per_image > 0 {
        // Surface bad deformation parameters once, up front, instead of as
        // one failure record per entry.
        cfg.elastic.validate()?;
        if cfg.inpaint_radius == 0 {
            return Err(Error::param("inpaint radius must be >= 1"));
        }
    }
    for sub in ["images", "masks"] {
        fs::create_dir_all(out_dir.join(sub))?;
    }

    let entries = &input.manifest.entries;
    let groups = crate::parallel::map_indexed(entries.len(), |i| {
        augment_entry(&entries[i], i, &input.base, cfg, out_dir)
    });

    let mut report = BatchReport::default();
    let mut manifest = DatasetManifest::default();
    let mut audit = AuditLog {
        seed: cfg.seed,
        records: Vec::new(),
    };
    for group in groups {
        match group {
            Ok(group) => {
                report.processed += 1;
                report.warnings.extend(group.warnings);
                report.failures.extend(group.failures);
                for out in group.entries {
                    manifest.entries.push(out.manifest);
                    audit.records.push(out.audit);
                }
            }
            Err((entry_path, err)) => report.failures.push(FailureRecord {
                image_path: entry_path,
                message: err.to_string(),
            }),
        }
    }

    manifest.save(&out_dir.join("manifest.json"))?;
    write_json(&out_dir.join("audit.json"), &audit)?;
    if !report.failures.is_empty() {
        write_json(&out_dir.join("failures.json"), &report.failures)?;
    }
    Ok(report)
}

/// Processes one input entry. A hard failure (unreadable input, write
/// error on the original) fails the whole entry; a failure while deriving
/// one variant is recorded and the remaining variants still run.
fn augment_entry(
    entry: &ManifestEntry,
    index: usize,
    base: &Path,
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> std::result::Result<AugmentedGroup, (PathBuf, Error)> {
    let fail = |err: Error| (entry.image_path.clone(), err);
    let prefix = output_prefix(index, &entry.image_path);
    let entry_seed = SplitMix64::split(cfg.seed, index as u64);

    let image = io::read_float(&base.join(&entry.image_path)).map_err(fail)?;
    let mut masks = Vec::with_capacity(entry.lesion_mask_paths.len());
    for path in &entry.lesion_mask_paths {
        masks.push(io::read_mask(&base.join(path)).map_err(fail)?);
    }

    let mut group = AugmentedGroup {
        entries: Vec::new(),
        warnings: Vec::new(),
        failures: Vec::new(),
    };
    let variants_requested = cfg.natural_per_image > 0 || cfg.classic_per_image > 0;

    // The original always passes through, re-encoded into the output tree.
    let write_variant = |suffix: &str,
                         image: &FloatImage,
                         masks: &[BinaryMask]|
     -> Result<(PathBuf, Vec<PathBuf>)> {
        let image_rel = PathBuf::from("images").join(format!("{prefix}{suffix}.png"));
        io::write_float(&out_dir.join(&image_rel), image)?;
        let mut mask_rels = Vec::with_capacity(masks.len());
        for (j, mask) in masks.iter().enumerate() {
            let rel = PathBuf::from("masks").join(format!("{prefix}{suffix}.mask{j}.png"));
            io::write_mask(&out_dir.join(&rel), mask)?;
            mask_rels.push(rel);
        }
        Ok((image_rel, mask_rels))
    };

    let (orig_rel, orig_mask_rels) = write_variant("", &image, &masks).map_err(fail)?;
    group.entries.push(AugmentedEntry {
        manifest: ManifestEntry {
            image_path: orig_rel.clone(),
            gt_boxes: entry.gt_boxes.clone(),
            lesion_mask_paths: orig_mask_rels.clone(),
            split_tag: entry.split_tag.clone(),
        },
        audit: AuditRecord {
            source_image: entry.image_path.clone(),
            image_path: orig_rel,
            mask_paths: orig_mask_rels,
            variant: VariantKind::Original,
        },
    });

    if masks.is_empty() {
        if variants_requested {
            group.warnings.push(format!(
                "{}: no lesion masks; variants skipped",
                entry.image_path.display()
            ));
        }
        return Ok(group);
    }
    let sample = AugmentSample::new(image, masks).map_err(fail)?;

    for k in 0..cfg.natural_per_image {
        let nat_seed = SplitMix64::split(entry_seed, k as u64);
        match derive_natural(&sample, nat_seed, cfg) {
            Ok((variant, audit_kind)) => {
                let suffix = format!("_nat{k}");
                match write_variant(&suffix, &variant.image, &variant.lesion_masks) {
                    Ok((image_rel, mask_rels)) => group.entries.push(AugmentedEntry {
                        manifest: ManifestEntry {
                            image_path: image_rel.clone(),
                            gt_boxes: variant.boxes.clone(),
                            lesion_mask_paths: mask_rels.clone(),
                            split_tag: entry.split_tag.clone(),
                        },
                        audit: AuditRecord {
                            source_image: entry.image_path.clone(),
                            image_path: image_rel,
                            mask_paths: mask_rels,
                            variant: audit_kind,
                        },
                    }),
                    Err(err) => group.failures.push(FailureRecord {
                        image_path: entry.image_path.clone(),
                        message: format!("natural variant {k}: {err}"),
                    }),
                }
            }
            Err(err) => group.failures.push(FailureRecord {
                image_path: entry.image_path.clone(),
                message: format!("natural variant {k}: {err}"),
            }),
        }
    }

    for c in 0..cfg.classic_per_image {
        let cls_seed = SplitMix64::split(entry_seed, cfg.natural_per_image as u64 + c as u64);
        let draw = ClassicAugmentConfig::sample_with(cls_seed, &cfg.augment_ranges);
        let result = classic_augment(&sample, &draw).and_then(|variant| {
            let suffix = format!("_cls{c}");
            let (image_rel, mask_rels) =
                write_variant(&suffix, &variant.image, &variant.lesion_masks)?;
            Ok((variant, image_rel, mask_rels))
        });
        match result {
            Ok((variant, image_rel, mask_rels)) => group.entries.push(AugmentedEntry {
                manifest: ManifestEntry {
                    image_path: image_rel.clone(),
                    gt_boxes: variant.boxes.clone(),
                    lesion_mask_paths: mask_rels.clone(),
                    split_tag: entry.split_tag.clone(),
                },
                audit: AuditRecord {
                    source_image: entry.image_path.clone(),
                    image_path: image_rel,
                    mask_paths: mask_rels,
                    variant: VariantKind::Classic {
                        seed: cls_seed,
                        config: draw,
                    },
                },
            }),
            Err(err) => group.failures.push(FailureRecord {
                image_path: entry.image_path.clone(),
                message: format!("classic variant {c}: {err}"),
            }),
        }
    }

    Ok(group)
}

/// Derives one natural variant: every lesion deformed in index order, then
/// sampled lesion-free regions. Returns the variant and its audit record.
fn derive_natural(
    sample: &AugmentSample,
    nat_seed: u64,
    cfg: &PipelineConfig,
) -> Result<(AugmentSample, VariantKind)> {
    let n_lesions = sample.lesion_masks.len() as u64;
    let mut current = sample.clone();
    let mut lesion_seeds = Vec::with_capacity(sample.lesion_masks.len());
    for j in 0..sample.lesion_masks.len() {
        let seed = SplitMix64::split(nat_seed, j as u64);
        lesion_seeds.push(seed);
        let params = ElasticParams {
            seed,
            ..cfg.elastic
        };
        current = natural_deform(
            &current,
            &DeformTarget::Lesion(j),
            &params,
            cfg.inpaint_radius,
        )?;
    }

    // Lesion-free regions: the breast is wherever normalization left
    // signal, which is exact for truncation-normalized crops (background
    // clamps to 0.0) and conservative elsewhere.
    let mut region_seeds = Vec::new();
    let region_sampler_seed = SplitMix64::split(nat_seed, n_lesions + cfg.non_mass_regions as u64);
    if cfg.non_mass_regions > 0 {
        let breast = breast_support(&current.image)?;
        let mut rng = SplitMix64::new(region_sampler_seed);
        let regions = sample_non_mass_regions(
            &breast,
            &current.lesion_masks,
            cfg.non_mass_regions,
            cfg.region_radius_range,
            &mut rng,
        )?;
        for (r, region) in regions.into_iter().enumerate() {
            let seed = SplitMix64::split(nat_seed, n_lesions + r as u64);
            region_seeds.push(seed);
            let params = ElasticParams {
                seed,
                ..cfg.elastic
            };
            current = natural_deform(
                &current,
                &DeformTarget::Region(region),
                &params,
                cfg.inpaint_radius,
            )?;
        }
    }

    let audit = VariantKind::Natural {
        seed: nat_seed,
        lesion_seeds,
        region_sampler_seed,
        region_seeds,
        alpha: cfg.elastic.alpha,
        sigma: cfg.elastic.sigma,
        inpaint_radius: cfg.inpaint_radius,
    };
    Ok((current, audit))
}

/// Pixels with any signal after normalization. Background outside the
/// segmented breast is exactly 0.0 in this crate's normalized crops.
fn breast_support(image: &FloatImage) -> Result<BinaryMask> {
    BinaryMask::new(
        image.width(),
        image.height(),
        image.pixels().iter().map(|&v| v > 0.0).collect(),
    )
}

// -------------------------------------------------------------- fold split

/// Splits a dataset into two folds for cross-validation.
///
/// Entries sharing a nonempty `split_tag` (e.g. the two views of one
/// breast) always land in the same fold. Groups are shuffled by `seed` and
/// assigned greedily to the currently smaller fold, so fold sizes differ
/// by at most the largest group. With `mass_only`, entries without ground
/// truth boxes are dropped first. Entry order within each fold follows the
/// input manifest.
pub fn split_folds(
    manifest: &DatasetManifest,
    seed: u64,
    mass_only: bool,
) -> (DatasetManifest, DatasetManifest) {
    // Key space: tagged groups sort before singletons; both sides are
    // deterministic in the input order.
    let mut groups: BTreeMap<(u8, String, usize), Vec<usize>> = BTreeMap::new();
    for (i, entry) in manifest.entries.iter().enumerate() {
        if mass_only && entry.gt_boxes.is_empty() {
            continue;
        }
        let key = if entry.split_tag.is_empty() {
            (1, String::new(), i)
        } else {
            (0, entry.split_tag.clone(), 0)
        };
        groups.entry(key).or_default().push(i);
    }

    let mut keys: Vec<_> = groups.keys().cloned().collect();
    SplitMix64::new(seed).shuffle(&mut keys);

    let mut folds: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for key in keys {
        let members = &groups[&key];
        let target = if folds[0].len() <= folds[1].len() {
            0
        } else {
            1
        };
        folds[target].extend(members.iter().copied());
    }

    let build = |indices: &mut Vec<usize>| {
        indices.sort_unstable();
        DatasetManifest {
            entries: indices
                .iter()
                .map(|&i| manifest.entries[i].clone())
                .collect(),
        }
    };
    let [mut a, mut b] = folds;
    (build(&mut a), build(&mut b))
}

// -------------------------------------------------------------- converters

/// Builds a manifest from a flat directory of images with sidecar
/// annotations:
///
/// - `{stem}.png` / `{stem}.pgm` — the image;
/// - `{stem}.json` — optional JSON array of ground-truth boxes;
/// - `{stem}.mask0.png`, `{stem}.mask1.png`, … — optional lesion masks.
///
/// When masks are present without a box file the boxes are derived as the
/// masks' tight bounding boxes; when both are present the counts must
/// match. The split tag is the stem up to the first `_`, which groups
/// files named like `{case}_{view}`.
pub fn convert_inbreast_style(root: &Path) -> Result<DatasetManifest> {
    let mut names: Vec<String> = Vec::new();
    for item in fs::read_dir(root)? {
        let item = item?;
        if item.file_type()?.is_file() {
            names.push(item.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();

    let mut manifest = DatasetManifest::default();
    for name in &names {
        let stem = match name.rsplit_once('.') {
            Some((stem, ext)) if matches!(ext.to_ascii_lowercase().as_str(), "png" | "pgm") => stem,
            _ => continue,
        };
        if stem.contains(".mask") {
            continue;
        }

        let mut mask_paths = Vec::new();
        loop {
            let candidate = format!("{stem}.mask{}.png", mask_paths.len());
            if root.join(&candidate).is_file() {
                mask_paths.push(PathBuf::from(candidate));
            } else {
                break;
            }
        }

        let boxes_path = root.join(format!("{stem}.json"));
        let gt_boxes = if boxes_path.is_file() {
            let boxes: Vec<BBox> = serde_json::from_str(&fs::read_to_string(&boxes_path)?)?;
            if !mask_paths.is_empty() && boxes.len() != mask_paths.len() {
                return Err(Error::param(format!(
                    "{stem}: {} boxes but {} masks",
                    boxes.len(),
                    mask_paths.len()
                )));
            }
            boxes
        } else {
            tight_boxes_of(root, &mask_paths)?
        };

        manifest.entries.push(ManifestEntry {
            image_path: PathBuf::from(name),
            gt_boxes,
            lesion_mask_paths: mask_paths,
            split_tag: stem.split('_').next().unwrap_or(stem).to_string(),
        });
    }
    Ok(manifest)
}

/// Builds a manifest from a tree of per-exam case directories:
///
/// - `{case}/image.png` (or `.pgm`) — the image;
/// - `{case}/mask*.png` — lesion masks, sorted by name.
///
/// Boxes are the masks' tight bounding boxes. The split tag is the case
/// name with its last `_`-separated token removed, which groups
/// directories named like `{patient}_{side}_{view}` by `{patient}_{side}`.
pub fn convert_ddsm_style(root: &Path) -> Result<DatasetManifest> {
    let mut cases: Vec<String> = Vec::new();
    for item in fs::read_dir(root)? {
        let item = item?;
        if item.file_type()?.is_dir() {
            cases.push(item.file_name().to_string_lossy().into_owned());
        }
    }
    cases.sort();

    let mut manifest = DatasetManifest::default();
    for case in &cases {
        let dir = root.join(case);
        let image_name = ["image.png", "image.pgm"]
            .iter()
            .find(|name| dir.join(name).is_file())
            .ok_or_else(|| Error::param(format!("case {case}: no image.png or image.pgm")))?;

        let mut mask_names: Vec<String> = Vec::new();
        for item in fs::read_dir(&dir)? {
            let item = item?;
            let name = item.file_name().to_string_lossy().into_owned();
            if item.file_type()?.is_file() && name.starts_with("mask") && name.ends_with(".png") {
                mask_names.push(name);
            }
        }
        mask_names.sort();
        let mask_paths: Vec<PathBuf> = mask_names
            .iter()
            .map(|name| PathBuf::from(case).join(name))
            .collect();

        let split_tag = match case.rsplit_once('_') {
            Some((head, _)) => head.to_string(),
            None => case.clone(),
        };
        manifest.entries.push(ManifestEntry {
            image_path: PathBuf::from(case).join(image_name),
            gt_boxes: tight_boxes_of(root, &mask_paths)?,
            lesion_mask_paths: mask_paths,
            split_tag,
        });
    }
    Ok(manifest)
}

/// Tight bounding box of each mask file, in file order.
fn tight_boxes_of(base: &Path, mask_paths: &[PathBuf]) -> Result<Vec<BBox>> {
    mask_paths
        .iter()
        .map(|path| io::read_mask(&base.join(path))?.tight_bbox())
        .collect()
}
