//! Label-policy strategies for multi-observer training targets: no fusion
//! (random observer per call), majority vote, STAPLE, union and intersection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, ProbMap};
use crate::rng::Rng;
use crate::synthgen::SyntheticSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMethod {
    NoFusion,
    Majority,
    Staple,
    Union,
    Intersection,
}

impl FusionMethod {
    pub const ALL: [FusionMethod; 5] = [
        FusionMethod::NoFusion,
        FusionMethod::Majority,
        FusionMethod::Staple,
        FusionMethod::Union,
        FusionMethod::Intersection,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FusionMethod::NoFusion => "nofusion",
            FusionMethod::Majority => "majority",
            FusionMethod::Staple => "staple",
            FusionMethod::Union => "union",
            FusionMethod::Intersection => "intersection",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "nofusion" => Ok(FusionMethod::NoFusion),
            "majority" => Ok(FusionMethod::Majority),
            "staple" => Ok(FusionMethod::Staple),
            "union" => Ok(FusionMethod::Union),
            "intersection" => Ok(FusionMethod::Intersection),
            other => Err(Error::Config(format!("unknown fusion method {other:?}"))),
        }
    }
}

impl std::fmt::Display for FusionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_inputs(masks: &[BinaryMask], min: usize) -> Result<()> {
    if masks.len() < min {
        return Err(Error::Fusion(format!(
            "need at least {min} masks, got {}",
            masks.len()
        )));
    }
    for m in &masks[1..] {
        masks[0].same_size(m)?;
    }
    Ok(())
}

/// Pixel is foreground iff at least `ceil((k+1)/2)` raters marked it; with an
/// even rater count an exact tie resolves to background.
pub fn majority_vote(masks: &[BinaryMask]) -> Result<BinaryMask> {
    check_inputs(masks, 1)?;
    let needed = masks.len() / 2 + 1;
    let n = masks[0].as_slice().len();
    let mut data = vec![false; n];
    for (i, out) in data.iter_mut().enumerate() {
        let votes = masks.iter().filter(|m| m.as_slice()[i]).count();
        *out = votes >= needed;
    }
    BinaryMask::new(masks[0].width(), masks[0].height(), data)
}

pub fn union(masks: &[BinaryMask]) -> Result<BinaryMask> {
    check_inputs(masks, 1)?;
    let n = masks[0].as_slice().len();
    let data = (0..n).map(|i| masks.iter().any(|m| m.as_slice()[i])).collect();
    BinaryMask::new(masks[0].width(), masks[0].height(), data)
}

pub fn intersection(masks: &[BinaryMask]) -> Result<BinaryMask> {
    check_inputs(masks, 1)?;
    let n = masks[0].as_slice().len();
    let data = (0..n).map(|i| masks.iter().all(|m| m.as_slice()[i])).collect();
    BinaryMask::new(masks[0].width(), masks[0].height(), data)
}

/// Fitted rater performance parameters and consensus weights of a STAPLE run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StapleState {
    /// Per-rater sensitivity.
    pub p: Vec<f64>,
    /// Per-rater specificity.
    pub q: Vec<f64>,
    /// Per-pixel consensus weight `W_i`.
    #[serde(skip)]
    pub w: Option<ProbMap>,
    /// Foreground prior, fixed at the mean foreground fraction over raters.
    pub prior_f: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub const STAPLE_DEFAULT_MAX_ITERS: usize = 100;
pub const STAPLE_DEFAULT_TOL: f64 = 1e-6;

const PARAM_FLOOR: f64 = 1e-6;

/// Binary STAPLE expectation-maximization.
///
/// Initialization `p_j = q_j = 0.99`; the foreground prior is held fixed.
/// E-step: `W_i = f·Πa_j / (f·Πa_j + (1−f)·Πb_j)` with `a_j = p_j` if rater
/// `j` marked pixel `i` foreground else `1−p_j`, and `b_j = q_j` if it marked
/// background else `1−q_j`. M-step: `p_j = Σ W_i d_ij / Σ W_i`,
/// `q_j = Σ (1−W_i)(1−d_ij) / Σ (1−W_i)`, clamped to `[1e−6, 1−1e−6]`.
/// Stops when `max_j(|Δp_j| + |Δq_j|) < tol` or after `max_iters`; running out
/// of iterations is reported via `converged = false`, not as an error.
pub fn staple(
    masks: &[BinaryMask],
    max_iters: usize,
    tol: f64,
) -> Result<(BinaryMask, StapleState)> {
    check_inputs(masks, 2)?;
    let k = masks.len();
    let n = masks[0].as_slice().len();
    let total_fg: usize = masks.iter().map(|m| m.count_foreground()).sum();
    if total_fg == 0 {
        return Err(Error::Fusion("all rater masks are empty".into()));
    }
    if total_fg == k * n {
        return Err(Error::Fusion("all rater masks are full".into()));
    }
    let f = total_fg as f64 / (k * n) as f64;

    let mut p = vec![0.99f64; k];
    let mut q = vec![0.99f64; k];
    let mut w = vec![0.0f64; n];
    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < max_iters {
        iterations += 1;
        // E-step
        for (i, wi) in w.iter_mut().enumerate() {
            let mut fg = f;
            let mut bg = 1.0 - f;
            for (j, m) in masks.iter().enumerate() {
                if m.as_slice()[i] {
                    fg *= p[j];
                    bg *= 1.0 - q[j];
                } else {
                    fg *= 1.0 - p[j];
                    bg *= q[j];
                }
            }
            *wi = fg / (fg + bg);
        }
        // M-step
        let sum_w: f64 = w.iter().sum();
        let sum_wc: f64 = w.iter().map(|v| 1.0 - v).sum();
        let mut delta = 0.0f64;
        for (j, m) in masks.iter().enumerate() {
            let mut fg_mass = 0.0;
            let mut bg_mass = 0.0;
            for (i, d) in m.as_slice().iter().enumerate() {
                if *d {
                    fg_mass += w[i];
                } else {
                    bg_mass += 1.0 - w[i];
                }
            }
            let new_p = (fg_mass / sum_w).clamp(PARAM_FLOOR, 1.0 - PARAM_FLOOR);
            let new_q = (bg_mass / sum_wc).clamp(PARAM_FLOOR, 1.0 - PARAM_FLOOR);
            delta = delta.max((new_p - p[j]).abs() + (new_q - q[j]).abs());
            p[j] = new_p;
            q[j] = new_q;
        }
        if delta < tol {
            converged = true;
            break;
        }
    }

    let mask = BinaryMask::new(
        masks[0].width(),
        masks[0].height(),
        w.iter().map(|v| *v >= 0.5).collect(),
    )?;
    let w_map = ProbMap::new(
        masks[0].width(),
        masks[0].height(),
        w.iter().map(|v| v.clamp(0.0, 1.0) as f32).collect(),
    )?;
    Ok((
        mask,
        StapleState { p, q, w: Some(w_map), prior_f: f, iterations, converged },
    ))
}

/// Resolves the training target for one sample under the given policy.
///
/// The four fused policies are pure functions of the observer masks; callers
/// typically compute them once per sample and reuse the result. `NoFusion`
/// draws a fresh uniformly random observer on every call, which the training
/// loop invokes once per epoch per sample.
pub fn training_target(
    sample: &SyntheticSample,
    method: FusionMethod,
    rng: &mut Rng,
) -> Result<BinaryMask> {
    match method {
        FusionMethod::NoFusion => {
            let idx = rng.below(sample.observers.len());
            Ok(sample.observers[idx].clone())
        }
        FusionMethod::Majority => majority_vote(&sample.observers),
        FusionMethod::Staple => {
            staple(&sample.observers, STAPLE_DEFAULT_MAX_ITERS, STAPLE_DEFAULT_TOL)
                .map(|(mask, _)| mask)
        }
        FusionMethod::Union => union(&sample.observers),
        FusionMethod::Intersection => intersection(&sample.observers),
    }
}
