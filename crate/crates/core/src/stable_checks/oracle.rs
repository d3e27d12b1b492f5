//! Exact symmetric stable sampling and Kolmogorov-Smirnov comparisons.

use std::f64::consts::PI;

use rand::RngCore;
use serde::Serialize;

use super::samples::SampleSet;
use crate::error::{Error, Result};
use crate::random_inputs::{exp1, open01};

/// One symmetric α-stable draw with characteristic function `exp(-|s u|^α)`,
/// by the Chambers-Mallows-Stuck transform of a uniform angle and a unit exponential.
/// At α = 2 this is `N(0, 2 s^2)`; at α = 1 it is Cauchy with scale `s`.
pub fn stable_oracle<R: RngCore + ?Sized>(alpha: f64, scale: f64, rng: &mut R) -> f64 {
    let v = PI * (open01(rng) - 0.5);
    let w = exp1(rng);
    let x = if alpha == 1.0 {
        v.tan()
    } else {
        (alpha * v).sin() / v.cos().powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
    };
    scale * x
}

/// `n` oracle draws.
pub fn stable_oracle_samples<R: RngCore + ?Sized>(alpha: f64, scale: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::Domain(format!("oracle needs 0 < α <= 2, got {alpha}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Domain(format!("oracle scale must be positive, got {scale}")));
    }
    Ok((0..n).map(|_| stable_oracle(alpha, scale, rng)).collect())
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0_f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample statistic against a continuous cdf.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let v = sorted(xs);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).max((k + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic two-sample critical value `sqrt(-ln(level/2)/2) sqrt((n+m)/(nm))`.
pub fn ks_critical_value(level: f64, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    (-(level / 2.0).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt()
}

/// Asymptotic one-sample critical value.
pub fn ks_critical_value_one_sample(level: f64, n: usize) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

pub const STABILITY_LEVEL: f64 = 0.01;

/// Below this many samples the test has little power; it is still computed.
pub const LOW_POWER_SAMPLES: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityTest {
    pub alpha: f64,
    pub ks: f64,
    pub threshold: f64,
    pub passes: bool,
    pub pairs: usize,
    pub holdout: usize,
    pub low_power: bool,
}

/// Splits the samples into thirds `A, B, C` in order, forms `(a_k + b_k) / 2^{1/α}`
/// and compares it with `C` by the two-sample KS test at the 1% level.
pub fn sum_stability_test(samples: &SampleSet, alpha: f64) -> Result<StabilityTest> {
    samples.require_nonempty()?;
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::Domain(format!(
            "stability index must satisfy 0 < α <= 2, got {alpha}"
        )));
    }
    let xs = samples.values();
    let m = xs.len() / 3;
    if m == 0 {
        return Err(Error::Degenerate(format!(
            "{} samples cannot be split into thirds",
            xs.len()
        )));
    }
    let norm = 2f64.powf(1.0 / alpha);
    let sums: Vec<f64> = xs[..m].iter().zip(&xs[m..2 * m]).map(|(a, b)| (a + b) / norm).collect();
    let holdout = &xs[2 * m..3 * m];
    let ks = ks_two_sample(&sums, holdout);
    let threshold = ks_critical_value(STABILITY_LEVEL, m, m);
    Ok(StabilityTest {
        alpha,
        ks,
        threshold,
        passes: ks <= threshold,
        pairs: m,
        holdout: m,
        low_power: xs.len() < LOW_POWER_SAMPLES,
    })
}

fn interquartile_range(xs: &[f64]) -> f64 {
    let v = sorted(xs);
    let q = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let (lo, frac) = (h.floor() as usize, h - h.floor());
        v[lo] + frac * (v[(lo + 1).min(v.len() - 1)] - v[lo])
    };
    q(0.75) - q(0.25)
}

/// Interquartile range of the unit-scale symmetric α-stable law, from a large oracle sample.
pub fn oracle_iqr<R: RngCore + ?Sized>(alpha: f64, draws: usize, rng: &mut R) -> Result<f64> {
    Ok(interquartile_range(&stable_oracle_samples(alpha, 1.0, draws, rng)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleComparison {
    pub alpha: f64,
    /// Oracle scale matching the sample interquartile range.
    pub scale: f64,
    /// KS distance between the samples and an equally sized oracle set.
    pub ks: f64,
    /// KS distances between pairs of independent oracle sets of the same size.
    pub reference_ks: Vec<f64>,
    pub reference_median: f64,
    /// `ks <= 2 * reference_median`.
    pub passes: bool,
}

/// Family-membership check: calibrate the oracle scale by interquartile matching,
/// then compare the KS distance to the oracle with the oracle-vs-oracle KS spread.
pub fn oracle_comparison<R: RngCore + ?Sized>(
    samples: &SampleSet,
    alpha: f64,
    reference_pairs: usize,
    rng: &mut R,
) -> Result<OracleComparison> {
    samples.require_nonempty()?;
    if reference_pairs == 0 {
        return Err(Error::Domain(
            "oracle comparison needs at least one reference pair".into(),
        ));
    }
    let n = samples.len();
    let unit = oracle_iqr(alpha, n.max(100_000), rng)?;
    let scale = interquartile_range(samples.values()) / unit;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Degenerate(format!(
            "sample interquartile range gives scale {scale}"
        )));
    }
    let oracle = stable_oracle_samples(alpha, scale, n, rng)?;
    let ks = ks_two_sample(samples.values(), &oracle);
    let reference_ks = (0..reference_pairs)
        .map(|_| {
            let a = stable_oracle_samples(alpha, scale, n, rng)?;
            let b = stable_oracle_samples(alpha, scale, n, rng)?;
            Ok(ks_two_sample(&a, &b))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mid = sorted(&reference_ks);
    let reference_median = if mid.len() % 2 == 1 {
        mid[mid.len() / 2]
    } else {
        0.5 * (mid[mid.len() / 2 - 1] + mid[mid.len() / 2])
    };
    Ok(OracleComparison {
        alpha,
        scale,
        ks,
        reference_ks,
        reference_median,
        passes: ks <= 2.0 * reference_median,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random_inputs::RngStream;

    #[test]
    fn ks_identical_and_disjoint() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(ks_two_sample(&a, &[4.0, 5.0]), 1.0);
        assert_eq!(ks_two_sample(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]), 1.0 / 3.0);
    }

    #[test]
    fn degenerate_zero_samples() {
        let t = sum_stability_test(&SampleSet::new(vec![0.0; 30]), 1.0).unwrap();
        assert_eq!(t.ks, 0.0);
        assert!(t.passes && t.low_power);
    }

    #[test]
    fn oracle_at_two_is_gaussian_and_median_zero() {
        let mut rng = RngStream::new(5, 0).rng();
        let xs = stable_oracle_samples(2.0, 1.0, 20_000, &mut rng).unwrap();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((var - 2.0).abs() < 0.1, "{var}");
        let below = xs.iter().filter(|x| **x < 0.0).count() as f64 / xs.len() as f64;
        assert!((below - 0.5).abs() < 4.0 * (0.25 / xs.len() as f64).sqrt());
    }

    #[test]
    fn iqr_interpolates() {
        assert_eq!(interquartile_range(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2.0);
        // standard Cauchy: quartiles at ±1
        let mut rng = RngStream::new(2, 0).rng();
        let q = oracle_iqr(1.0, 200_000, &mut rng).unwrap();
        assert!((q - 2.0).abs() < 0.05, "{q}");
    }

    #[test]
    fn critical_value_formula() {
        let c = ks_critical_value(0.01, 100, 100);
        assert!((c - 1.627_624_4 * (0.02_f64).sqrt()).abs() < 1e-6);
    }
}
