//! Normalizing quantiles and the regular-variation limit
//!
//! ```text
//! n P(‖X‖ > r b_n)                      -> r^{-α}
//! P(X/‖X‖ ∈ A | ‖X‖ > r b_n)            -> σ(A)      when σ(∂A) = 0
//! ```

use rayon::prelude::*;
use serde::Serialize;

use super::samples::SampleSet;
use super::spectral::{NamedEvent, SpectralEstimate, SphereSample};
use crate::error::{Error, Result};
use crate::paths::StepPath;

/// Upper-tail quantile `inf{r : P̂(‖X‖ > r) <= 1/n}` over the sample values.
pub fn tail_quantile_bn(norms: &SampleSet, n: usize) -> Result<f64> {
    norms.require_nonempty()?;
    let samples = norms.len();
    if n == 0 || samples < n {
        return Err(Error::QuantileResolution { samples, n });
    }
    let mut v = norms.values().to_vec();
    v.sort_by(f64::total_cmp);
    let k = samples / n;
    Ok(v[(samples - 1).saturating_sub(k)])
}

/// Norm of a path and the events its normalized version falls in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub norm: f64,
    pub hits: Vec<bool>,
}

pub fn summarize_path(path: &StepPath, events: &[NamedEvent]) -> PathSummary {
    let norm = path.sup_norm();
    let hits = if norm > 0.0 {
        let s = SphereSample {
            sign: 1.0,
            path,
            raw_norm: norm,
        };
        events.iter().map(|e| e.contains(&s)).collect()
    } else {
        vec![false; events.len()]
    };
    PathSummary { norm, hits }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRow {
    pub name: String,
    pub hits: usize,
    /// `None` when there are no exceedances ("no data").
    pub probability: Option<f64>,
    pub se: Option<f64>,
    /// `σ̂(A)` from the spectral estimate, if it has an event of that name.
    pub predicted: Option<f64>,
    pub predicted_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusRow {
    pub r: f64,
    pub threshold: f64,
    pub exceedances: usize,
    /// `n P̂(‖X‖ > r b_n)`.
    pub scaled_tail: f64,
    /// `r^{-α}`.
    pub predicted_tail: f64,
    /// `k_r / k_ref` against the first radius of the grid.
    pub tail_ratio: Option<f64>,
    pub tail_ratio_se: Option<f64>,
    /// `(r / r_ref)^{-α}`.
    pub predicted_ratio: f64,
    pub events: Vec<EventRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularVariationTable {
    pub alpha: f64,
    pub n: usize,
    pub b_n: f64,
    pub samples: usize,
    pub rows: Vec<RadiusRow>,
    pub notes: Vec<String>,
}

/// Which quantile `b_n` denotes.
pub const BN_CONVENTION: &str = "b_n = inf{r : P(‖X‖ > r) <= 1/n} (upper tail); the literal reading \
     inf{r > 0 : P(‖X‖ < r) <= 1/n} is a lower quantile and is not used";

fn binomial_se(p: f64, k: usize) -> f64 {
    (p * (1.0 - p) / k as f64).sqrt()
}

/// Table built from pre-computed path summaries, so large path sets need not be stored.
pub fn regular_variation_from_summaries(
    summaries: &[PathSummary],
    events: &[NamedEvent],
    r_grid: &[f64],
    n: usize,
    alpha: f64,
    sigma: Option<&SpectralEstimate>,
) -> Result<RegularVariationTable> {
    if let Some(r) = r_grid.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::Domain(format!("radius {r} must be positive")));
    }
    if summaries.iter().any(|s| s.hits.len() != events.len()) {
        return Err(Error::Domain("path summaries do not match the event list".into()));
    }
    let norms = SampleSet::new(summaries.iter().map(|s| s.norm).collect());
    let b_n = tail_quantile_bn(&norms, n)?;
    let total = summaries.len() as f64;
    let reference = r_grid.first().map(|&r| {
        let t = r * b_n;
        (r, summaries.iter().filter(|s| s.norm > t).count())
    });

    let rows = r_grid
        .iter()
        .map(|&r| {
            let threshold = r * b_n;
            let exceed: Vec<&PathSummary> = summaries.iter().filter(|s| s.norm > threshold).collect();
            let k = exceed.len();
            let (tail_ratio, tail_ratio_se, predicted_ratio) = match reference {
                Some((r0, k0)) if k0 > 0 => {
                    let p = k as f64 / k0 as f64;
                    (Some(p), Some(binomial_se(p, k0)), (r / r0).powf(-alpha))
                }
                Some((r0, _)) => (None, None, (r / r0).powf(-alpha)),
                None => (None, None, f64::NAN),
            };
            let events = events
                .iter()
                .enumerate()
                .map(|(j, ev)| {
                    let hits = exceed.iter().filter(|s| s.hits[j]).count();
                    let probability = (k > 0).then(|| hits as f64 / k as f64);
                    let predicted = sigma.and_then(|s| s.mass(&ev.name));
                    EventRow {
                        name: ev.name.clone(),
                        hits,
                        probability,
                        se: probability.map(|p| binomial_se(p, k)),
                        predicted: predicted.map(|m| m.mass),
                        predicted_se: predicted.map(|m| m.se),
                    }
                })
                .collect();
            RadiusRow {
                r,
                threshold,
                exceedances: k,
                scaled_tail: n as f64 * k as f64 / total,
                predicted_tail: r.powf(-alpha),
                tail_ratio,
                tail_ratio_se,
                predicted_ratio,
                events,
            }
        })
        .collect();
    Ok(RegularVariationTable {
        alpha,
        n,
        b_n,
        samples: summaries.len(),
        rows,
        notes: vec![BN_CONVENTION.to_string()],
    })
}

pub fn regular_variation_table(
    paths: &[StepPath],
    events: &[NamedEvent],
    r_grid: &[f64],
    n: usize,
    alpha: f64,
    sigma: Option<&SpectralEstimate>,
) -> Result<RegularVariationTable> {
    let summaries: Vec<PathSummary> = paths.par_iter().map(|p| summarize_path(p, events)).collect();
    regular_variation_from_summaries(&summaries, events, r_grid, n, alpha, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable_checks::SphereEvent;

    #[test]
    fn order_statistic_examples() {
        let s = SampleSet::new((1..=100).map(f64::from).collect());
        assert_eq!(tail_quantile_bn(&s, 10).unwrap(), 90.0);
        assert_eq!(tail_quantile_bn(&s, 100).unwrap(), 99.0);
        assert_eq!(tail_quantile_bn(&s, 1).unwrap(), 1.0);
        assert!(matches!(
            tail_quantile_bn(&s, 101),
            Err(Error::QuantileResolution { .. })
        ));
        let mut prev = 0.0;
        for n in 1..=100 {
            let b = tail_quantile_bn(&s, n).unwrap();
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn full_sphere_conditional_is_one_and_no_data_marked() {
        let paths: Vec<StepPath> = (1..=50)
            .map(|k| StepPath::unit_jump(0.5, if k % 2 == 0 { k as f64 } else { -(k as f64) }).unwrap())
            .collect();
        let events = [
            NamedEvent::builtin("sphere", SphereEvent::FullSphere),
            NamedEvent::builtin("positive", SphereEvent::PositivePeak),
        ];
        let t = regular_variation_table(&paths, &events, &[1.0, 1e9], 5, 1.5, None).unwrap();
        assert_eq!(t.rows[0].events[0].probability, Some(1.0));
        assert_eq!(t.rows[1].exceedances, 0);
        assert_eq!(t.rows[1].events[0].probability, None);
        assert_eq!(t.rows[0].tail_ratio, Some(1.0));
    }
}
