//! Monte Carlo checks of the increment moment conditions
//!
//! ```text
//! (C1)  E|Y(t2) - Y(t1)|^2                 <= |F1(t2) - F1(t1)|^β1
//! (C2)  E|Y(t2) - Y(t)|^2 |Y(t) - Y(t1)|^2 <= |F2(t2) - F2(t1)|^(2 β2)
//! ```
//!
//! A Monte Carlo mean can refute an inequality at confidence but never prove
//! it, hence the three-way [`Verdict`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random_inputs::{gen_path, MonotoneGrid, RngStream, YGeneratorSpec};
use crate::summation::mean_and_se;

/// Width of the confidence band, in standard errors.
pub const SE_BAND: f64 = 4.0;

/// Nondecreasing continuous `F` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvelopeFunction {
    Identity,
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// `sum_k c_k t^k` with nonnegative coefficients.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// `scale * sum_i F_i(t)` for cdf grids `F_i`.
    SumOfCdfs {
        cdfs: Vec<MonotoneGrid>,
        scale: f64,
    },
    /// Piecewise-linear interpolation of nondecreasing grid values.
    Grid {
        knots: Vec<f64>,
        values: Vec<f64>,
    },
}

impl EnvelopeFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            EnvelopeFunction::Identity => t,
            EnvelopeFunction::Affine { intercept, slope } => intercept + slope * t,
            EnvelopeFunction::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c),
            EnvelopeFunction::SumOfCdfs { cdfs, scale } => scale * cdfs.iter().map(|g| g.eval(t)).sum::<f64>(),
            EnvelopeFunction::Grid { knots, values } => {
                let k = knots.partition_point(|&x| x <= t);
                if k == 0 {
                    values[0]
                } else if k >= knots.len() {
                    values[values.len() - 1]
                } else {
                    let (x0, x1, y0, y1) = (knots[k - 1], knots[k], values[k - 1], values[k]);
                    y0 + (y1 - y0) * (t - x0) / (x1 - x0)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            EnvelopeFunction::Identity => true,
            EnvelopeFunction::Affine { intercept, slope } => intercept.is_finite() && *slope >= 0.0,
            EnvelopeFunction::Polynomial { coefficients } => {
                !coefficients.is_empty() && coefficients.iter().skip(1).all(|c| *c >= 0.0)
            }
            EnvelopeFunction::SumOfCdfs { cdfs, scale } => {
                for g in cdfs {
                    g.validate()?;
                }
                !cdfs.is_empty() && *scale >= 0.0
            }
            EnvelopeFunction::Grid { knots, values } => {
                knots.len() >= 2
                    && knots.len() == values.len()
                    && knots[0] <= 0.0
                    && knots[knots.len() - 1] >= 1.0
                    && knots.windows(2).all(|w| w[0] < w[1])
                    && values.windows(2).all(|w| w[0] <= w[1])
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "envelope function {self:?} is not nondecreasing on [0, 1]"
            )))
        }
    }
}

/// Right-hand side `|F(t2) - F(t1)|^β` of a moment condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentEnvelope {
    pub function: EnvelopeFunction,
    pub beta: f64,
}

impl MomentEnvelope {
    pub fn new(function: EnvelopeFunction, beta: f64) -> Result<Self> {
        let e = Self { function, beta };
        e.validate()?;
        Ok(e)
    }

    pub fn identity(beta: f64) -> Self {
        Self {
            function: EnvelopeFunction::Identity,
            beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.5) {
            return Err(Error::Config(format!(
                "envelope exponent beta = {} must exceed 1/2",
                self.beta
            )));
        }
        self.function.validate()
    }

    /// `|F(t2) - F(t1)|`.
    pub fn spread(&self, t1: f64, t2: f64) -> f64 {
        (self.function.eval(t2) - self.function.eval(t1)).abs()
    }

    /// C1 right-hand side `|F(t2) - F(t1)|^β`.
    pub fn c1_bound(&self, t1: f64, t2: f64) -> f64 {
        self.spread(t1, t2).powf(self.beta)
    }

    /// C2 right-hand side `|F(t2) - F(t1)|^(2β)`.
    pub fn c2_bound(&self, t1: f64, t2: f64) -> f64 {
        self.spread(t1, t2).powf(2.0 * self.beta)
    }
}

/// Envelopes `(C1, C2)` under which the built-in generators satisfy the conditions.
///
/// * Example 1: `F = t`, `β1 = β2 = 1`.
/// * Example 3: `F = λt + λ²t²`, `β1 = β2 = 1`; both increment moments are
///   bounded by the corresponding increments of `F`.
/// * Example 2: `F = p √M · sum_i F_i`, `β1 = β2 = 1`.
///
/// User generators have no default envelope.
pub fn default_envelopes(y: &YGeneratorSpec) -> Option<(MomentEnvelope, MomentEnvelope)> {
    match y {
        YGeneratorSpec::Example1 => Some((MomentEnvelope::identity(1.0), MomentEnvelope::identity(1.0))),
        YGeneratorSpec::Example3 { lambda } => {
            let f = EnvelopeFunction::Polynomial {
                coefficients: vec![0.0, *lambda, lambda * lambda],
            };
            let e = MomentEnvelope { function: f, beta: 1.0 };
            Some((e.clone(), e))
        }
        YGeneratorSpec::Example2(s) => {
            let scale = s.jump_count() as f64 * s.fourth_moment_bound.sqrt();
            let e = MomentEnvelope {
                function: EnvelopeFunction::SumOfCdfs {
                    cdfs: s.cdfs.clone(),
                    scale,
                },
                beta: 1.0,
            };
            Some((e.clone(), e))
        }
        YGeneratorSpec::User(_) => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn from_estimate(estimate: f64, se: f64, envelope: f64) -> Verdict {
        if estimate - SE_BAND * se > envelope {
            Verdict::Violated
        } else if estimate + SE_BAND * se <= envelope {
            Verdict::Satisfied
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    C1,
    C2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEntry {
    pub t1: f64,
    /// Middle time; absent for C1 pairs.
    pub t: Option<f64>,
    pub t2: f64,
    pub estimate: f64,
    pub se: f64,
    pub envelope: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub condition: Condition,
    pub replicates: usize,
    pub seed: u64,
    pub envelope: MomentEnvelope,
    pub entries: Vec<MomentEntry>,
}

impl MomentReport {
    pub fn any_violated(&self) -> bool {
        self.entries.iter().any(|e| e.verdict == Verdict::Violated)
    }
}

pub const MIN_REPLICATES: usize = 100;

fn check_replicates(replicates: usize) -> Result<()> {
    if replicates < MIN_REPLICATES {
        return Err(Error::Config(format!(
            "moment estimates need at least {MIN_REPLICATES} replicates, got {replicates}"
        )));
    }
    Ok(())
}

fn check_pair(t1: f64, t2: f64) -> Result<()> {
    if !(0.0 <= t1 && t1 <= t2 && t2 <= 1.0) {
        return Err(Error::Domain(format!(
            "pair ({t1}, {t2}) must satisfy 0 <= t1 <= t2 <= 1"
        )));
    }
    Ok(())
}

pub(crate) fn check_triple(t1: f64, t: f64, t2: f64) -> Result<()> {
    if !(0.0 <= t1 && t1 <= t && t <= t2 && t2 <= 1.0) {
        return Err(Error::Domain(format!(
            "triple ({t1}, {t}, {t2}) must satisfy 0 <= t1 <= t <= t2 <= 1"
        )));
    }
    Ok(())
}

/// Per-replicate values of `f` on one path of replicate `r`, replicate-ordered.
fn per_replicate<F>(y: &YGeneratorSpec, replicates: usize, seed: u64, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&crate::paths::StepPath) -> Result<Vec<f64>> + Sync,
{
    y.validate()?;
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r).rng();
            let path = gen_path(y, &mut rng)?;
            f(&path)
        })
        .collect()
}

fn column(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

/// Estimates `E|Y(t2) - Y(t1)|^2` per pair; replicate `r` uses `RngStream::new(seed, r)`.
pub fn estimate_c1(
    y: &YGeneratorSpec,
    pairs: &[(f64, f64)],
    replicates: usize,
    envelope: &MomentEnvelope,
    seed: u64,
) -> Result<MomentReport> {
    check_replicates(replicates)?;
    envelope.validate()?;
    for &(t1, t2) in pairs {
        check_pair(t1, t2)?;
    }
    let rows = per_replicate(y, replicates, seed, |p| {
        pairs.iter().map(|&(t1, t2)| p.increment_sq(t1, t2)).collect()
    })?;
    let entries = pairs
        .iter()
        .enumerate()
        .map(|(k, &(t1, t2))| {
            let (estimate, se) = mean_and_se(&column(&rows, k));
            let bound = envelope.c1_bound(t1, t2);
            MomentEntry {
                t1,
                t: None,
                t2,
                estimate,
                se,
                envelope: bound,
                verdict: Verdict::from_estimate(estimate, se, bound),
            }
        })
        .collect();
    Ok(MomentReport {
        condition: Condition::C1,
        replicates,
        seed,
        envelope: envelope.clone(),
        entries,
    })
}

/// Estimates `E|Y(t2) - Y(t)|^2 |Y(t) - Y(t1)|^2` per triple.
pub fn estimate_c2(
    y: &YGeneratorSpec,
    triples: &[(f64, f64, f64)],
    replicates: usize,
    envelope: &MomentEnvelope,
    seed: u64,
) -> Result<MomentReport> {
    Ok(estimate_c2_raw(y, triples, replicates, envelope, seed)?.0)
}

/// Like [`estimate_c2`], also returning the per-replicate products (rows by replicate).
pub fn estimate_c2_raw(
    y: &YGeneratorSpec,
    triples: &[(f64, f64, f64)],
    replicates: usize,
    envelope: &MomentEnvelope,
    seed: u64,
) -> Result<(MomentReport, Vec<Vec<f64>>)> {
    check_replicates(replicates)?;
    envelope.validate()?;
    for &(t1, t, t2) in triples {
        check_triple(t1, t, t2)?;
    }
    let rows = per_replicate(y, replicates, seed, |p| {
        triples
            .iter()
            .map(|&(t1, t, t2)| Ok(p.increment_sq(t, t2)? * p.increment_sq(t1, t)?))
            .collect()
    })?;
    let entries = triples
        .iter()
        .enumerate()
        .map(|(k, &(t1, t, t2))| {
            let (estimate, se) = mean_and_se(&column(&rows, k));
            let bound = envelope.c2_bound(t1, t2);
            MomentEntry {
                t1,
                t: Some(t),
                t2,
                estimate,
                se,
                envelope: bound,
                verdict: Verdict::from_estimate(estimate, se, bound),
            }
        })
        .collect();
    let report = MomentReport {
        condition: Condition::C2,
        replicates,
        seed,
        envelope: envelope.clone(),
        entries,
    };
    Ok((report, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_bands() {
        assert_eq!(Verdict::from_estimate(1.0, 0.1, 2.0), Verdict::Satisfied);
        assert_eq!(Verdict::from_estimate(2.0, 0.1, 1.0), Verdict::Violated);
        assert_eq!(Verdict::from_estimate(1.0, 0.1, 1.2), Verdict::Inconclusive);
        assert_eq!(Verdict::from_estimate(0.0, 0.0, 0.0), Verdict::Satisfied);
    }

    #[test]
    fn envelope_validation() {
        assert!(MomentEnvelope::identity(0.5).validate().is_err());
        assert!(MomentEnvelope::new(
            EnvelopeFunction::Affine {
                intercept: 0.0,
                slope: -1.0
            },
            1.0
        )
        .is_err());
        let poly = MomentEnvelope::new(
            EnvelopeFunction::Polynomial {
                coefficients: vec![0.0, 2.0, 4.0],
            },
            1.0,
        )
        .unwrap();
        assert_eq!(poly.c1_bound(0.0, 0.5), 2.0);
        assert_eq!(poly.c2_bound(0.0, 0.5), 4.0);
    }

    #[test]
    fn ordering_errors() {
        let e = MomentEnvelope::identity(1.0);
        let y = YGeneratorSpec::Example1;
        assert!(matches!(
            estimate_c1(&y, &[(0.6, 0.2)], 100, &e, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            estimate_c2(&y, &[(0.1, 0.7, 0.5)], 100, &e, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            estimate_c1(&y, &[(0.1, 0.2)], 10, &e, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_width_pairs_are_exactly_zero() {
        let e = MomentEnvelope::identity(1.0);
        let y = YGeneratorSpec::Example3 { lambda: 3.0 };
        let r = estimate_c1(&y, &[(0.4, 0.4)], 200, &e, 1).unwrap();
        assert_eq!(r.entries[0].estimate, 0.0);
        assert_eq!(r.entries[0].se, 0.0);
        let r = estimate_c2(&y, &[(0.3, 0.3, 0.3)], 200, &e, 1).unwrap();
        assert_eq!(r.entries[0].estimate, 0.0);
    }
}
