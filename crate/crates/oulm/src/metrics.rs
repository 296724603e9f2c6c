//! Uncertainty and overlap metrics: per-pixel expert-disagreement entropy,
//! predictive-entropy summaries (WME, ME) and the Dice coefficient.
//!
//! WME normalization: the weighted mean divides by the total disagreement mass
//! `sum(expert_i)` rather than by the pixel count, so a constant predictive
//! entropy `c` yields WME = `c` regardless of how sparse the disagreement is.
//! The per-pixel-count variant is available as [`wme_per_pixel`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, ProbMap};

/// Binary entropy in bits; spans exactly `[0, 1]`, with `0 log 0 := 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    let h = -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    h.clamp(0.0, 1.0)
}

/// Per-sample evaluation record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sample_id: String,
    pub wme: f64,
    pub me: f64,
    pub dice: f64,
    pub n_pixels: usize,
    /// Total expert disagreement `sum(expert_entropy_i)`; together with `wme`
    /// and `n_pixels` this lets either WME normalization be recovered.
    pub disagreement_mass: f64,
}

/// Per-pixel entropy of the observer vote fractions.
pub fn expert_entropy(observers: &[BinaryMask]) -> Result<ProbMap> {
    if observers.len() < 2 {
        return Err(Error::Fusion(format!(
            "expert entropy needs at least 2 observers, got {}",
            observers.len()
        )));
    }
    let first = &observers[0];
    for other in &observers[1..] {
        first.same_size(other)?;
    }
    let k = observers.len() as f64;
    let n = first.width() * first.height();
    let mut data = vec![0.0f32; n];
    for (i, out) in data.iter_mut().enumerate() {
        let votes = observers.iter().filter(|m| m.as_slice()[i]).count() as f64;
        *out = binary_entropy(votes / k) as f32;
    }
    ProbMap::new(first.width(), first.height(), data)
}

/// Predictive entropy averaged with expert disagreement as weights:
/// `sum(expert_i * pred_i) / sum(expert_i)`.
pub fn wme(pred_entropy: &ProbMap, expert: &ProbMap) -> Result<f64> {
    pred_entropy.same_size(expert)?;
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (p, e) in pred_entropy.as_slice().iter().zip(expert.as_slice()) {
        num += *e as f64 * *p as f64;
        den += *e as f64;
    }
    if den == 0.0 {
        return Err(Error::UndefinedWeight);
    }
    Ok(num / den)
}

/// Literal per-pixel-count weighted mean: `sum(expert_i * pred_i) / N`.
pub fn wme_per_pixel(pred_entropy: &ProbMap, expert: &ProbMap) -> Result<f64> {
    pred_entropy.same_size(expert)?;
    let num: f64 = pred_entropy
        .as_slice()
        .iter()
        .zip(expert.as_slice())
        .map(|(p, e)| *e as f64 * *p as f64)
        .sum();
    Ok(num / pred_entropy.as_slice().len() as f64)
}

/// Unweighted mean predictive entropy over all pixels.
pub fn mean_entropy(pred_entropy: &ProbMap) -> f64 {
    let n = pred_entropy.as_slice().len();
    assert!(n > 0, "mean_entropy on empty map");
    pred_entropy.as_slice().iter().map(|v| *v as f64).sum::<f64>() / n as f64
}

/// Dice overlap `2|A∩B| / (|A|+|B|)`; two empty masks count as 1.0.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.same_size(b)?;
    let mut inter = 0usize;
    let mut total = 0usize;
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        inter += (*x && *y) as usize;
        total += *x as usize + *y as usize;
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

/// Scores one prediction against a sample's ground truth and observers.
///
/// Dice compares the 0.5-thresholded mean probability to `gt`; WME weights
/// the predictive entropy by `expert_entropy(observers)`; ME averages the
/// predictive entropy over the whole image.
pub fn evaluate_sample(
    sample_id: &str,
    mean_prob: &ProbMap,
    pred_entropy: &ProbMap,
    gt: &BinaryMask,
    observers: &[BinaryMask],
) -> Result<MetricsReport> {
    let expert = expert_entropy(observers)?;
    let dice = dice(&mean_prob.threshold(), gt)?;
    let wme = wme(pred_entropy, &expert)?;
    let me = mean_entropy(pred_entropy);
    let disagreement_mass = expert.as_slice().iter().map(|v| *v as f64).sum();
    Ok(MetricsReport {
        sample_id: sample_id.to_string(),
        wme,
        me,
        dice,
        n_pixels: pred_entropy.as_slice().len(),
        disagreement_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mask(w: usize, h: usize, bits: &[u8]) -> BinaryMask {
        BinaryMask::new(w, h, bits.iter().map(|b| *b != 0).collect()).unwrap()
    }

    #[test]
    fn binary_entropy_extremes() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_eq!(binary_entropy(0.5), 1.0);
    }

    #[test]
    fn expert_entropy_vote_fractions() {
        // 5 observers: pixel 0 unanimous, pixel 1 split 2/3
        let obs = vec![
            mask(2, 1, &[1, 1]),
            mask(2, 1, &[1, 1]),
            mask(2, 1, &[1, 0]),
            mask(2, 1, &[1, 0]),
            mask(2, 1, &[1, 0]),
        ];
        let h = expert_entropy(&obs).unwrap();
        assert_eq!(h.get(0, 0), 0.0);
        let expected = -0.4f64 * 0.4f64.log2() - 0.6 * 0.6f64.log2();
        assert_relative_eq!(h.get(1, 0) as f64, expected, max_relative = 1e-6);
        assert_relative_eq!(expected, 0.9710, max_relative = 1e-4);
    }

    #[test]
    fn expert_entropy_even_split_is_one() {
        let obs = vec![
            mask(1, 1, &[1]),
            mask(1, 1, &[1]),
            mask(1, 1, &[0]),
            mask(1, 1, &[0]),
        ];
        assert_eq!(expert_entropy(&obs).unwrap().get(0, 0), 1.0);
    }

    #[test]
    fn wme_of_constant_is_constant() {
        let pred = ProbMap::new(2, 2, vec![0.3; 4]).unwrap();
        let expert = ProbMap::new(2, 2, vec![0.9, 0.1, 0.0, 0.5]).unwrap();
        assert_relative_eq!(wme(&pred, &expert).unwrap(), 0.3f32 as f64, max_relative = 1e-12);
    }

    #[test]
    fn wme_single_support() {
        let expert = ProbMap::new(2, 1, vec![1.0, 0.0]).unwrap();
        let pred = ProbMap::new(2, 1, vec![0.8, 0.1]).unwrap();
        assert_relative_eq!(wme(&pred, &expert).unwrap(), 0.8, max_relative = 1e-12);
    }

    #[test]
    fn wme_perfect_alignment_identity() {
        // H == expert on the 2/3-split fixture: WME = sum(H^2)/sum(H)
        let h = binary_entropy(0.4) as f32;
        let m = ProbMap::new(3, 1, vec![h, 0.0, h]).unwrap();
        let expected = (2.0 * (h as f64).powi(2)) / (2.0 * h as f64);
        assert_relative_eq!(wme(&m, &m).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn wme_zero_weights_error() {
        let pred = ProbMap::new(1, 1, vec![0.4]).unwrap();
        let expert = ProbMap::new(1, 1, vec![0.0]).unwrap();
        assert!(matches!(wme(&pred, &expert), Err(Error::UndefinedWeight)));
    }

    #[test]
    fn mean_entropy_cases() {
        assert_eq!(mean_entropy(&ProbMap::new(2, 2, vec![0.0; 4]).unwrap()), 0.0);
        assert_eq!(mean_entropy(&ProbMap::new(2, 2, vec![1.0; 4]).unwrap()), 1.0);
        assert_eq!(mean_entropy(&ProbMap::new(2, 1, vec![1.0, 0.0]).unwrap()), 0.5);
    }

    #[test]
    fn dice_cases() {
        let a = mask(3, 2, &[1, 1, 0, 1, 1, 0]);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        let b = mask(3, 2, &[0, 0, 1, 0, 0, 1]);
        assert_eq!(dice(&a, &b).unwrap(), 0.0);
        // |A|=4, |B|=6, overlap 3 -> 0.6
        let a = mask(8, 1, &[1, 1, 1, 1, 0, 0, 0, 0]);
        let b = mask(8, 1, &[0, 1, 1, 1, 1, 1, 1, 0]);
        assert_relative_eq!(dice(&a, &b).unwrap(), 0.6, max_relative = 1e-12);
        let e = mask(2, 1, &[0, 0]);
        assert_eq!(dice(&e, &e).unwrap(), 1.0);
    }

    #[test]
    fn dice_dimension_mismatch() {
        let a = mask(2, 1, &[1, 0]);
        let b = mask(1, 2, &[1, 0]);
        assert!(dice(&a, &b).is_err());
    }

    #[test]
    fn evaluate_uniform_half_prediction() {
        let gt = mask(2, 2, &[1, 1, 0, 0]);
        let obs = vec![gt.clone(), mask(2, 2, &[1, 0, 0, 0])];
        let mean = ProbMap::filled(2, 2, 0.5);
        let entropy = ProbMap::filled(2, 2, 1.0);
        let r = evaluate_sample("s", &mean, &entropy, &gt, &obs).unwrap();
        assert_eq!(r.me, 1.0);
        assert_eq!(r.wme, 1.0);
        assert_eq!(r.n_pixels, 4);
    }
}
