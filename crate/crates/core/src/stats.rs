//! Binomial estimates with Wilson score intervals, and per-trial seed derivation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub successes: u64,
    pub seed: u64,
    pub confidence: f64,
}

/// Two-sided standard normal quantile for the given confidence level.
pub fn z_value(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid(format!("confidence must lie in (0,1), got {confidence}")));
    }
    let n = Normal::standard();
    Ok(n.inverse_cdf(0.5 + confidence / 2.0))
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(invalid("wilson interval needs at least one trial"));
    }
    if successes > trials {
        return Err(invalid(format!("{successes} successes exceed {trials} trials")));
    }
    let z = z_value(confidence)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // Rounding can push a bound a hair past p_hat at the extremes.
    let low = (centre - half).clamp(0.0, p);
    let high = (centre + half).clamp(p, 1.0);
    Ok((low, high))
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64, seed: u64, confidence: f64) -> Result<Estimate> {
        let (ci_low, ci_high) = wilson_interval(successes, trials, confidence)?;
        Ok(Estimate {
            p_hat: successes as f64 / trials as f64,
            ci_low,
            ci_high,
            trials,
            successes,
            seed,
            confidence,
        })
    }

    /// Binomial standard deviation of `p_hat` evaluated at `p`.
    pub fn sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn within_sigmas(&self, p: f64, sigmas: f64) -> bool {
        (self.p_hat - p).abs() <= sigmas * self.sigma_at(p)
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index`: depends only on `(base_seed, k, index)`.
pub fn trial_seed(base_seed: u64, k: usize, index: u64) -> u64 {
    splitmix(splitmix(splitmix(base_seed) ^ k as u64) ^ index)
}

pub fn trial_rng(base_seed: u64, k: usize, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(base_seed, k, index))
}

/// Sample mean and (n−1) standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn z_for_95_percent() {
        assert_abs_diff_eq!(z_value(0.95).unwrap(), 1.959963984540054, epsilon = 1e-9);
        assert_abs_diff_eq!(z_value(0.99).unwrap(), 2.5758293035489, epsilon = 1e-9);
        assert!(z_value(1.0).is_err());
    }

    #[test]
    fn wilson_reference_values() {
        // 10 of 100 at 95%: textbook interval (0.0552, 0.1744).
        let (lo, hi) = wilson_interval(10, 100, 0.95).unwrap();
        assert_abs_diff_eq!(lo, 0.05522, epsilon = 1e-4);
        assert_abs_diff_eq!(hi, 0.17437, epsilon = 1e-4);
        let (lo, hi) = wilson_interval(0, 50, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
        let (lo, hi) = wilson_interval(50, 50, 0.95).unwrap();
        assert_eq!(hi, 1.0);
        assert!(lo > 0.9);
        assert!(wilson_interval(1, 0, 0.95).is_err());
        assert!(wilson_interval(3, 2, 0.95).is_err());
    }

    #[test]
    fn seeds_differ_across_coordinates() {
        let a = trial_seed(1, 10, 0);
        assert_ne!(a, trial_seed(1, 10, 1));
        assert_ne!(a, trial_seed(1, 11, 0));
        assert_ne!(a, trial_seed(2, 10, 0));
        assert_eq!(a, trial_seed(1, 10, 0));
    }

    #[test]
    fn sample_moments() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_abs_diff_eq!(m, 2.5);
        assert_abs_diff_eq!(s, (5.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn interval_brackets_estimate(trials in 1u64..5000, frac in 0.0f64..=1.0, conf in 0.5f64..0.999) {
            let successes = ((trials as f64) * frac).round() as u64;
            let e = Estimate::from_counts(successes, trials, 0, conf).unwrap();
            prop_assert!(0.0 <= e.ci_low && e.ci_low <= e.p_hat);
            prop_assert!(e.p_hat <= e.ci_high && e.ci_high <= 1.0);
        }
    }
}
