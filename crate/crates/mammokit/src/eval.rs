//! Detection scoring: confidence-thresholded IOU matching, TPR/FPPI, and
//! FROC curves.
//!
//! Matching follows the standard detection protocol: per image, discard
//! predictions below the confidence threshold (they are not alarms), walk
//! the survivors in descending confidence, and let each one claim the
//! unmatched ground truth it overlaps best. A claim at or above the IOU
//! threshold is a true positive; anything else the prediction touches is
//! left unclaimed and the prediction counts as a false positive. Unclaimed
//! ground truths are false negatives. TPR is `TP / (TP + FN)` and FPPI is
//! `FP / n_images`; sweeping the confidence threshold traces the FROC
//! curve.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{iou, BBox};

/// One detector output.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub image_id: String,
    pub bbox: BBox,
    /// Confidence in `[0, 1]`.
    pub conf: f64,
}

/// One annotated lesion.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub image_id: String,
    pub bbox: BBox,
}

/// Matching thresholds.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvalThresholds {
    /// Predictions below this confidence are not alarms.
    pub conf_th: f64,
    /// Minimum overlap for a match to count as a true positive.
    pub iou_th: f64,
}

impl Default for EvalThresholds {
    /// The headline operating point: confidence 0.2, IOU 0.5.
    fn default() -> Self {
        EvalThresholds {
            conf_th: 0.2,
            iou_th: 0.5,
        }
    }
}

impl EvalThresholds {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("conf_th", self.conf_th), ("iou_th", self.iou_th)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("{name} {v} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Counts and rates from one evaluation pass.
///
/// `tn` counts discarded sub-threshold predictions that cover no ground
/// truth; it is reported for completeness but feeds neither rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(rename = "tp")]
    pub true_positives: u64,
    #[serde(rename = "fp")]
    pub false_positives: u64,
    #[serde(rename = "fn")]
    pub false_negatives: u64,
    #[serde(rename = "tn")]
    pub true_negatives: u64,
    pub tpr: f64,
    pub fppi: f64,
    pub n_images: u64,
}

/// One FROC operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrocPoint {
    pub conf_th: f64,
    pub fppi: f64,
    pub tpr: f64,
}

/// FROC curve: one point per confidence threshold, sorted by FPPI (ties by
/// TPR), which leaves both coordinates non-decreasing along the curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrocCurve {
    pub points: Vec<FrocPoint>,
}

/// Scores predictions against ground truth at one operating point.
///
/// `n_images` is the size of the evaluated image set and must cover every
/// referenced image; images without predictions or ground truth (normals)
/// still belong in the count, since FPPI divides by it. Results do not
/// depend on input ordering: confidence ties break by `(image_id, box)`.
pub fn match_and_count(
    preds: &[Prediction],
    gts: &[GroundTruth],
    th: &EvalThresholds,
    n_images: usize,
) -> Result<EvalReport> {
    th.validate()?;
    if n_images == 0 {
        return Err(Error::param("n_images must be >= 1"));
    }
    for p in preds {
        if !p.conf.is_finite() || !(0.0..=1.0).contains(&p.conf) {
            return Err(Error::param(format!(
                "prediction on {} has confidence {} outside [0, 1]",
                p.image_id, p.conf
            )));
        }
    }

    // Group per image; BTreeMap keeps reduction order deterministic.
    let mut by_image: BTreeMap<&str, (Vec<&Prediction>, Vec<&GroundTruth>)> = BTreeMap::new();
    for p in preds {
        by_image.entry(&p.image_id).or_default().0.push(p);
    }
    for g in gts {
        by_image.entry(&g.image_id).or_default().1.push(g);
    }
    let groups: Vec<_> = by_image.into_values().collect();

    let counts = crate::parallel::map_indexed(groups.len(), |i| {
        let (preds, gts) = &groups[i];
        score_image(preds, gts, th)
    });
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for (a, b, c, d) in counts {
        tp += a;
        fp += b;
        fn_ += c;
        tn += d;
    }

    let tpr = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    Ok(EvalReport {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        true_negatives: tn,
        tpr,
        fppi: fp as f64 / n_images as f64,
        n_images: n_images as u64,
    })
}

/// Matches one image's predictions; returns `(tp, fp, fn, tn)`.
fn score_image(
    preds: &[&Prediction],
    gts: &[&GroundTruth],
    th: &EvalThresholds,
) -> (u64, u64, u64, u64) {
    let mut gts: Vec<&GroundTruth> = gts.to_vec();
    gts.sort_by_key(|g| g.bbox);

    let mut survivors: Vec<&Prediction> = Vec::new();
    let mut tn = 0u64;
    for p in preds {
        if p.conf >= th.conf_th {
            survivors.push(p);
        } else if !gts.iter().any(|g| iou(&p.bbox, &g.bbox) >= th.iou_th) {
            tn += 1; // quiet box over quiet tissue
        }
    }
    survivors.sort_by(|a, b| b.conf.total_cmp(&a.conf).then_with(|| a.bbox.cmp(&b.bbox)));

    let mut matched = vec![false; gts.len()];
    let (mut tp, mut fp) = (0u64, 0u64);
    for p in &survivors {
        let mut best: Option<(f64, usize)> = None;
        for (j, g) in gts.iter().enumerate() {
            if matched[j] {
                continue;
            }
            let overlap = iou(&p.bbox, &g.bbox);
            // Strict > keeps the first (box-ordered) GT on ties.
            if best.is_none_or(|(b, _)| overlap > b) {
                best = Some((overlap, j));
            }
        }
        match best {
            Some((overlap, j)) if overlap >= th.iou_th => {
                matched[j] = true;
                tp += 1;
            }
            _ => fp += 1,
        }
    }
    let fn_ = matched.iter().filter(|m| !**m).count() as u64;
    (tp, fp, fn_, tn)
}

/// Sweeps `match_and_count` over a confidence grid.
///
/// With `conf_grid = None` the grid is the set of distinct prediction
/// confidences plus 1.0. Points come back sorted by `(fppi, tpr)`; since
/// lowering the threshold can only add detections, both coordinates are
/// non-decreasing along the curve.
pub fn froc(
    preds: &[Prediction],
    gts: &[GroundTruth],
    iou_th: f64,
    n_images: usize,
    conf_grid: Option<&[f64]>,
) -> Result<FrocCurve> {
    let grid: Vec<f64> = match conf_grid {
        Some(g) => {
            if g.is_empty() {
                return Err(Error::param("confidence grid must be nonempty"));
            }
            g.to_vec()
        }
        None => {
            let mut g: Vec<f64> = preds.iter().map(|p| p.conf).collect();
            g.push(1.0);
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        }
    };

    let results = crate::parallel::map_indexed(grid.len(), |i| {
        let th = EvalThresholds {
            conf_th: grid[i],
            iou_th,
        };
        match_and_count(preds, gts, &th, n_images).map(|r| FrocPoint {
            conf_th: grid[i],
            fppi: r.fppi,
            tpr: r.tpr,
        })
    });
    let mut points = results.into_iter().collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| a.fppi.total_cmp(&b.fppi).then(a.tpr.total_cmp(&b.tpr)));
    Ok(FrocCurve { points })
}

/// On-disk JSON-lines row for predictions and ground truth; `conf` is
/// present only on predictions.
#[derive(Deserialize)]
struct Row {
    image_id: String,
    x_min: i64,
    y_min: i64,
    x_max: i64,
    y_max: i64,
    conf: Option<f64>,
}

fn parse_rows(path: &Path) -> Result<Vec<(usize, Row)>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(line).map_err(|e| Error::Parse {
            row: i + 1,
            message: e.to_string(),
        })?;
        rows.push((i + 1, row));
    }
    Ok(rows)
}

fn row_bbox(row: &Row, row_no: usize) -> Result<BBox> {
    BBox::new(row.x_min, row.y_min, row.x_max, row.y_max).map_err(|e| Error::Parse {
        row: row_no,
        message: e.to_string(),
    })
}

/// Loads predictions from a JSON-lines file, in file order.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for (row_no, row) in parse_rows(path.as_ref())? {
        let bbox = row_bbox(&row, row_no)?;
        let conf = row.conf.ok_or_else(|| Error::Parse {
            row: row_no,
            message: "prediction row is missing `conf`".into(),
        })?;
        if !conf.is_finite() || !(0.0..=1.0).contains(&conf) {
            return Err(Error::Parse {
                row: row_no,
                message: format!("confidence {conf} outside [0, 1]"),
            });
        }
        out.push(Prediction {
            image_id: row.image_id,
            bbox,
            conf,
        });
    }
    Ok(out)
}

/// Loads ground truth from a JSON-lines file, in file order; a `conf`
/// field, if present, is ignored.
pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<Vec<GroundTruth>> {
    let mut out = Vec::new();
    for (row_no, row) in parse_rows(path.as_ref())? {
        let bbox = row_bbox(&row, row_no)?;
        out.push(GroundTruth {
            image_id: row.image_id,
            bbox,
        });
    }
    Ok(out)
}
