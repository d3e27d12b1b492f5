//! Fourth-moment increment functional of the truncated deterministic-weight sum
//!
//! ```text
//! T = E |Z̃_n(t2) - Z̃_n(t)|^2 |Z̃_n(t) - Z̃_n(t1)|^2
//!   <= d^2 sum_τ S_{n,τ} D̂_τ
//! ```
//!
//! `D̂_τ` bounds `E prod_j |U_j|` over the index pattern `τ`, where positions 1, 2
//! carry `A = Y(t) - Y(t1)` and positions 3, 4 carry `B = Y(t2) - Y(t)`. Blocks are
//! independent, so `D̂_τ` is a product of per-block bounds built from the moment
//! envelopes by Cauchy-Schwarz.

use rayon::prelude::*;
use serde::Serialize;

use super::moments::{check_triple, MomentEnvelope, Verdict};
use super::partitions::{enumerate_partitions, partition_sum, Partition};
use crate::error::{Error, Result};
use crate::lepage::{evaluate_partial_sum, EpsilonMode, SeriesSpec, WeightMode};
use crate::summation::{mean_and_se, CompensatedSum};

/// Envelope quantities entering `D̂_τ` for one triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncrementBounds {
    /// `|F1(t) - F1(t1)|^β1`, bounds `E|A|^2`.
    pub left: f64,
    /// `|F1(t2) - F1(t)|^β1`, bounds `E|B|^2`.
    pub right: f64,
    /// `|F2(t2) - F2(t1)|^β2`, bounds `sqrt(E|A|^2 |B|^2)`.
    pub joint: f64,
}

impl IncrementBounds {
    pub fn new(triple: (f64, f64, f64), c1: &MomentEnvelope, c2: &MomentEnvelope) -> Self {
        let (t1, t, t2) = triple;
        Self {
            left: c1.c1_bound(t1, t),
            right: c1.c1_bound(t, t2),
            joint: c2.spread(t1, t2).powf(c2.beta),
        }
    }

    /// `D̂_τ` as a product over blocks.
    pub fn dtau(&self, tau: &Partition) -> f64 {
        tau.blocks()
            .iter()
            .map(|b| {
                let a = b.iter().filter(|&&e| e <= 2).count();
                match (a, b.len() - a) {
                    (1, 0) => self.left.sqrt(),
                    (0, 1) => self.right.sqrt(),
                    (2, 0) => self.left,
                    (0, 2) => self.right,
                    (1, 1) => self.joint,
                    (2, 1) => self.joint * self.left.sqrt(),
                    (1, 2) => self.joint * self.right.sqrt(),
                    (2, 2) => self.joint * self.joint,
                    _ => unreachable!("blocks of a partition of 1..=4"),
                }
            })
            .product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionTerm {
    pub partition: String,
    pub sum: f64,
    pub dtau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessResult {
    pub n: usize,
    pub triple: (f64, f64, f64),
    pub replicates: usize,
    pub seed: u64,
    pub estimate: f64,
    pub se: f64,
    /// `d^2 sum_τ S_{n,τ} D̂_τ`.
    pub companion_bound: f64,
    pub bounds: IncrementBounds,
    pub terms: Vec<PartitionTerm>,
    pub verdict: Verdict,
}

/// Companion bound and its per-partition terms.
pub fn companion_bound(spec: &SeriesSpec, n: usize, bounds: &IncrementBounds) -> Result<(f64, Vec<PartitionTerm>)> {
    let terms = enumerate_partitions()
        .iter()
        .map(|tau| {
            Ok(PartitionTerm {
                partition: tau.to_string(),
                sum: partition_sum(tau, spec.alpha, &spec.epsilon, n as u64)?,
                dtau: bounds.dtau(tau),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let d = spec.dimension() as f64;
    let total = terms.iter().map(|t| t.sum * t.dtau).collect::<CompensatedSum>().value();
    Ok((d * d * total, terms))
}

/// Monte Carlo estimate of the functional, replicate `r` drawn from `spec.replicate_stream(r)`.
pub fn tightness_functional(
    spec: &SeriesSpec,
    n: usize,
    triple: (f64, f64, f64),
    replicates: usize,
    c1: &MomentEnvelope,
    c2: &MomentEnvelope,
) -> Result<TightnessResult> {
    let (t1, t, t2) = triple;
    check_triple(t1, t, t2)?;
    if spec.weight_mode != WeightMode::Deterministic || spec.epsilon_mode != EpsilonMode::Truncated {
        return Err(Error::Config(
            "tightness functional needs weight_mode = deterministic and epsilon_mode = truncated".into(),
        ));
    }
    c1.validate()?;
    c2.validate()?;
    let spec = spec.clone().with_truncation(n);
    spec.validate()?;
    let values = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let v = evaluate_partial_sum(&spec, &spec.replicate_stream(r), &[t1, t, t2])?;
            let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>();
            Ok(sq(&v[1], &v[2]) * sq(&v[0], &v[1]))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (estimate, se) = mean_and_se(&values);
    let bounds = IncrementBounds::new(triple, c1, c2);
    let (companion_bound, terms) = companion_bound(&spec, n, &bounds)?;
    Ok(TightnessResult {
        n,
        triple,
        replicates,
        seed: spec.seed,
        estimate,
        se,
        companion_bound,
        bounds,
        terms,
        verdict: Verdict::from_estimate(estimate, se, companion_bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random_inputs::{EpsilonSpec, YGeneratorSpec};

    fn spec(y: YGeneratorSpec) -> SeriesSpec {
        SeriesSpec::new(1.5, EpsilonSpec::rademacher(), y)
            .with_modes(WeightMode::Deterministic, EpsilonMode::Truncated)
            .with_seed(3)
    }

    #[test]
    fn zero_factor_when_t1_equals_t() {
        let id = MomentEnvelope::identity(1.0);
        let r = tightness_functional(&spec(YGeneratorSpec::Example1), 50, (0.4, 0.4, 0.9), 200, &id, &id).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.se, 0.0);
    }

    #[test]
    fn single_term_cannot_hit_both_intervals() {
        let id = MomentEnvelope::identity(1.0);
        let r = tightness_functional(&spec(YGeneratorSpec::Example1), 1, (0.2, 0.5, 0.8), 500, &id, &id).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn ordering_and_mode_errors() {
        let id = MomentEnvelope::identity(1.0);
        let s = spec(YGeneratorSpec::Example1);
        assert!(matches!(
            tightness_functional(&s, 5, (0.5, 0.4, 0.9), 10, &id, &id),
            Err(Error::Domain(_))
        ));
        let raw = s.clone().with_modes(WeightMode::Gamma, EpsilonMode::Truncated);
        assert!(tightness_functional(&raw, 5, (0.1, 0.4, 0.9), 10, &id, &id).is_err());
    }

    #[test]
    fn dtau_of_full_block_is_joint_squared() {
        let b = IncrementBounds {
            left: 0.25,
            right: 0.09,
            joint: 0.5,
        };
        let full = Partition::new(vec![vec![1, 2, 3, 4]]).unwrap();
        assert_eq!(b.dtau(&full), 0.25);
        let pairs = Partition::new(vec![vec![1, 2], vec![3, 4]]).unwrap();
        assert_eq!(b.dtau(&pairs), 0.25 * 0.09);
        let singles = Partition::new(vec![vec![1], vec![2], vec![3], vec![4]]).unwrap();
        assert!((b.dtau(&singles) - 0.25 * 0.09).abs() < 1e-16);
    }
}
