//! Mask agreement metrics and training losses.
//!
//! Water is the positive class throughout. Metrics with a zero
//! denominator are reported as absent rather than forced to a number.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segment::BinaryMask;

pub const PROBABILITY_CLAMP: f64 = 1e-7;
pub const DICE_SMOOTH: f64 = 1.0;
pub const DEFAULT_LAND_WEIGHT: f64 = 1.0;
pub const DEFAULT_WATER_WEIGHT: f64 = 20.0;
pub const DEFAULT_CE_SHARE: f64 = 0.5;

/// Pixel counts comparing a predicted mask against a reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    /// Counts agreement over pixels valid in both masks.
    pub fn from_masks(pred: &BinaryMask, reference: &BinaryMask) -> Result<Self> {
        if pred.width() != reference.width() || pred.height() != reference.height() {
            return Err(Error::DimensionMismatch {
                expected_width: reference.width(),
                expected_height: reference.height(),
                actual_width: pred.width(),
                actual_height: pred.height(),
            });
        }
        let mut m = ConfusionMatrix {
            tp: 0,
            fp: 0,
            fn_: 0,
            tn: 0,
        };
        for i in 0..pred.water().len() {
            if !(pred.valid()[i] && reference.valid()[i]) {
                continue;
            }
            match (pred.water()[i], reference.water()[i]) {
                (true, true) => m.tp += 1,
                (true, false) => m.fp += 1,
                (false, true) => m.fn_ += 1,
                (false, false) => m.tn += 1,
            }
        }
        Ok(m)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn metrics(&self) -> Result<MetricsReport> {
        if self.total() == 0 {
            return Err(Error::EmptyMatrix);
        }
        let (tp, fp, fn_, tn) = (
            self.tp as f64,
            self.fp as f64,
            self.fn_ as f64,
            self.tn as f64,
        );
        let ratio = |num: f64, den: f64| if den == 0.0 { None } else { Some(num / den) };
        Ok(MetricsReport {
            accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
            iou: ratio(tp, tp + fp + fn_),
            dice: ratio(2.0 * tp, 2.0 * tp + fp + fn_),
        })
    }
}

/// Scalar agreement metrics; absent fields had a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub specificity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iou: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dice: Option<f64>,
}

/// Per-pixel water probabilities in [0, 1] with validity.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    width: usize,
    height: usize,
    probs: Vec<f64>,
    valid: Vec<bool>,
}

impl ProbabilityMap {
    pub fn from_parts(
        width: usize,
        height: usize,
        probs: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        if probs.len() != width * height || valid.len() != width * height {
            return Err(Error::FormatError(format!(
                "probability buffer length {} does not match {}x{}",
                probs.len(),
                width,
                height
            )));
        }
        for (p, v) in probs.iter().zip(valid.iter()) {
            if *v && !(*p >= 0.0 && *p <= 1.0) {
                return Err(Error::FormatError(format!(
                    "probability {p} outside [0, 1]"
                )));
            }
        }
        Ok(ProbabilityMap {
            width,
            height,
            probs,
            valid,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }
}

fn check_prob_dims(pred: &ProbabilityMap, reference: &BinaryMask) -> Result<()> {
    if pred.width != reference.width() || pred.height != reference.height() {
        return Err(Error::DimensionMismatch {
            expected_width: reference.width(),
            expected_height: reference.height(),
            actual_width: pred.width,
            actual_height: pred.height,
        });
    }
    Ok(())
}

/// Class-weighted binary cross-entropy, normalized by the sum of the
/// applied weights. Probabilities are clamped away from 0 and 1 before
/// the logarithm. An empty overlap contributes zero loss.
pub fn weighted_cross_entropy(
    pred: &ProbabilityMap,
    reference: &BinaryMask,
    land_weight: f64,
    water_weight: f64,
) -> Result<f64> {
    if land_weight.is_nan() || land_weight <= 0.0 {
        return Err(Error::NonPositiveWeight(land_weight));
    }
    if water_weight.is_nan() || water_weight <= 0.0 {
        return Err(Error::NonPositiveWeight(water_weight));
    }
    check_prob_dims(pred, reference)?;
    let mut loss_sum = 0.0;
    let mut weight_sum = 0.0;
    for i in 0..pred.probs.len() {
        if !(pred.valid[i] && reference.valid()[i]) {
            continue;
        }
        let p = pred.probs[i].clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP);
        let (weight, likelihood) = if reference.water()[i] {
            (water_weight, p)
        } else {
            (land_weight, 1.0 - p)
        };
        loss_sum += weight * -likelihood.ln();
        weight_sum += weight;
    }
    if weight_sum == 0.0 {
        return Ok(0.0);
    }
    Ok(loss_sum / weight_sum)
}

/// Soft Dice loss: 1 - (2*sum(p*y) + s) / (sum(p) + sum(y) + s).
pub fn dice_loss(pred: &ProbabilityMap, reference: &BinaryMask, smooth: f64) -> Result<f64> {
    check_prob_dims(pred, reference)?;
    let mut inter = 0.0;
    let mut psum = 0.0;
    let mut ysum = 0.0;
    for i in 0..pred.probs.len() {
        if !(pred.valid[i] && reference.valid()[i]) {
            continue;
        }
        let p = pred.probs[i];
        let y = if reference.water()[i] { 1.0 } else { 0.0 };
        inter += p * y;
        psum += p;
        ysum += y;
    }
    Ok(1.0 - (2.0 * inter + smooth) / (psum + ysum + smooth))
}

/// Equal-weight blend of cross-entropy and Dice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeLoss {
    pub total: f64,
    pub ce: f64,
    pub dice: f64,
}

pub fn composite_loss(
    pred: &ProbabilityMap,
    reference: &BinaryMask,
    land_weight: f64,
    water_weight: f64,
) -> Result<CompositeLoss> {
    let ce = weighted_cross_entropy(pred, reference, land_weight, water_weight)?;
    let dice = dice_loss(pred, reference, DICE_SMOOTH)?;
    Ok(CompositeLoss {
        total: DEFAULT_CE_SHARE * ce + (1.0 - DEFAULT_CE_SHARE) * dice,
        ce,
        dice,
    })
}
