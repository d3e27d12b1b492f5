//! Spectral measure of the limit
//!
//! ```text
//! σ(A) = E(|ε|^α ‖Y‖^α 1{sign(ε) Y/‖Y‖ ∈ A}) / E(|ε|^α ‖Y‖^α)
//! ```
//!
//! estimated as a ratio of Monte Carlo sums over one replicate set.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::StepPath;
use crate::random_inputs::{gen_path, EpsilonSpec, RngStream, YGeneratorSpec};
use crate::summation::{mean_and_se, ExactSum};

/// A point `sign · path / raw_norm` of the unit sphere, kept unnormalized.
#[derive(Debug, Clone, Copy)]
pub struct SphereSample<'a> {
    pub sign: f64,
    pub path: &'a StepPath,
    /// `‖path‖` before normalization.
    pub raw_norm: f64,
}

impl SphereSample<'_> {
    /// Value of the normalized point at `t`.
    pub fn value_at(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self
            .path
            .evaluate(t)?
            .iter()
            .map(|x| self.sign * x / self.raw_norm)
            .collect())
    }

    /// Smallest and largest coordinate value of the normalized point.
    pub fn range(&self) -> (f64, f64) {
        let (lo, hi) = self.path.value_range();
        if self.sign >= 0.0 {
            (lo / self.raw_norm, hi / self.raw_norm)
        } else {
            (-hi / self.raw_norm, -lo / self.raw_norm)
        }
    }
}

/// Built-in sphere events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SphereEvent {
    FullSphere,
    /// Every coordinate of the point is `>= 0` at all times.
    Nonnegative,
    Nonpositive,
    /// The uniform norm is attained by a positive value (ties count as positive).
    PositivePeak,
    NegativePeak,
    /// `|raw_norm - value| <= tolerance · value`.
    RawNormEquals {
        value: f64,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    RawNormAbove {
        value: f64,
    },
    /// Coordinate `coordinate` of the point exceeds `level` at time `t`.
    ValueAbove {
        t: f64,
        #[serde(default)]
        coordinate: usize,
        level: f64,
    },
}

fn default_tolerance() -> f64 {
    1e-9
}

impl SphereEvent {
    pub fn contains(&self, s: &SphereSample<'_>) -> bool {
        match self {
            SphereEvent::FullSphere => true,
            SphereEvent::Nonnegative => s.range().0 >= 0.0,
            SphereEvent::Nonpositive => s.range().1 <= 0.0,
            SphereEvent::PositivePeak => {
                let (lo, hi) = s.range();
                hi >= -lo
            }
            SphereEvent::NegativePeak => {
                let (lo, hi) = s.range();
                hi < -lo
            }
            SphereEvent::RawNormEquals { value, tolerance } => (s.raw_norm - value).abs() <= tolerance * value.abs(),
            SphereEvent::RawNormAbove { value } => s.raw_norm > *value,
            SphereEvent::ValueAbove { t, coordinate, level } => s
                .value_at(*t)
                .ok()
                .and_then(|v| v.get(*coordinate).copied())
                .is_some_and(|x| x > *level),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            SphereEvent::RawNormEquals { value, tolerance } => value.is_finite() && *tolerance >= 0.0,
            SphereEvent::RawNormAbove { value } => value.is_finite(),
            SphereEvent::ValueAbove { t, level, .. } => (0.0..=1.0).contains(t) && level.is_finite(),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid sphere event {self:?}")))
        }
    }
}

type Predicate = Arc<dyn Fn(&SphereSample<'_>) -> bool + Send + Sync>;

/// Sphere event with a display name.
#[derive(Clone)]
pub struct NamedEvent {
    pub name: String,
    pub builtin: Option<SphereEvent>,
    predicate: Predicate,
}

impl NamedEvent {
    pub fn builtin(name: impl Into<String>, event: SphereEvent) -> Self {
        let e = event.clone();
        Self {
            name: name.into(),
            builtin: Some(event),
            predicate: Arc::new(move |s| e.contains(s)),
        }
    }

    pub fn custom<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&SphereSample<'_>) -> bool + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            builtin: None,
            predicate: Arc::new(f),
        }
    }

    pub fn contains(&self, s: &SphereSample<'_>) -> bool {
        (self.predicate)(s)
    }
}

impl fmt::Debug for NamedEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NamedEvent")
            .field("name", &self.name)
            .field("builtin", &self.builtin)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventMass {
    pub name: String,
    pub mass: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralEstimate {
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    pub event_masses: Vec<EventMass>,
    /// Estimate of `E(|ε|^α ‖Y‖^α)`.
    pub normalizer: f64,
    pub normalizer_se: f64,
}

impl SpectralEstimate {
    pub fn mass(&self, name: &str) -> Option<&EventMass> {
        self.event_masses.iter().find(|m| m.name == name)
    }
}

pub const MIN_SPECTRAL_REPLICATES: usize = 1000;

/// Ratio estimate of `σ(A)` per event, with a delta-method SE. Replicate `r`
/// draws `ε` then `Y` from `RngStream::new(seed, r)`.
pub fn spectral_estimate(
    eps: &EpsilonSpec,
    y: &YGeneratorSpec,
    alpha: f64,
    events: &[NamedEvent],
    replicates: usize,
    seed: u64,
) -> Result<SpectralEstimate> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Config(format!("alpha = {alpha} must satisfy α ∈ (0,2)")));
    }
    if replicates < MIN_SPECTRAL_REPLICATES {
        return Err(Error::Config(format!(
            "spectral estimate needs at least {MIN_SPECTRAL_REPLICATES} replicates, got {replicates}"
        )));
    }
    eps.validate(Some(alpha))?;
    y.validate()?;
    for e in events {
        if let Some(b) = &e.builtin {
            b.validate()?;
        }
    }
    let rows: Vec<(f64, Vec<bool>)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r).rng();
            let e = eps.sample(&mut rng);
            let path = gen_path(y, &mut rng)?;
            let norm = path.sup_norm();
            if norm == 0.0 || e == 0.0 {
                return Ok((0.0, vec![false; events.len()]));
            }
            let s = SphereSample {
                sign: e.signum(),
                path: &path,
                raw_norm: norm,
            };
            let w = e.abs().powf(alpha) * norm.powf(alpha);
            Ok((w, events.iter().map(|ev| ev.contains(&s)).collect()))
        })
        .collect::<Result<_>>()?;

    let weights: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut den = ExactSum::new();
    for &w in &weights {
        den.add(w);
    }
    let den = den.value();
    if !(den > 0.0) {
        return Err(Error::Degenerate(
            "E(|ε|^α ‖Y‖^α) estimate is 0: the generator never produces a nonzero weighted path".into(),
        ));
    }
    let event_masses = events
        .iter()
        .enumerate()
        .map(|(k, ev)| {
            let mut num = ExactSum::new();
            for (w, hits) in &rows {
                if hits[k] {
                    num.add(*w);
                }
            }
            let mass = num.value() / den;
            let mut var = ExactSum::new();
            for (w, hits) in &rows {
                let d = w * (f64::from(u8::from(hits[k])) - mass);
                var.add(d * d);
            }
            EventMass {
                name: ev.name.clone(),
                mass,
                se: var.value().sqrt() / den,
            }
        })
        .collect();
    let (normalizer, normalizer_se) = mean_and_se(&weights);
    Ok(SpectralEstimate {
        alpha,
        replicates,
        seed,
        event_masses,
        normalizer,
        normalizer_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_respects_sign() {
        let p = StepPath::unit_jump(0.5, 2.0).unwrap();
        let s = SphereSample {
            sign: -1.0,
            path: &p,
            raw_norm: 2.0,
        };
        assert_eq!(s.range(), (-1.0, 0.0));
        assert!(SphereEvent::Nonpositive.contains(&s));
        assert!(SphereEvent::NegativePeak.contains(&s));
        assert!(!SphereEvent::PositivePeak.contains(&s));
        assert!(SphereEvent::RawNormEquals {
            value: 2.0,
            tolerance: 0.0
        }
        .contains(&s));
        assert!(SphereEvent::ValueAbove {
            t: 0.2,
            coordinate: 0,
            level: -0.5
        }
        .contains(&s));
        assert!(!SphereEvent::ValueAbove {
            t: 0.7,
            coordinate: 0,
            level: -0.5
        }
        .contains(&s));
    }

    #[test]
    fn full_sphere_is_one() {
        let events = [
            NamedEvent::builtin("sphere", SphereEvent::FullSphere),
            NamedEvent::custom("early", |s| s.value_at(0.25).map(|v| v[0] != 0.0).unwrap_or(false)),
        ];
        let est = spectral_estimate(
            &EpsilonSpec::rademacher(),
            &YGeneratorSpec::Example1,
            1.5,
            &events,
            2000,
            9,
        )
        .unwrap();
        assert_eq!(est.event_masses[0].mass, 1.0);
        assert_eq!(est.event_masses[0].se, 0.0);
        // Y = 1{U <= t}: P(U <= 1/4) = 1/4
        let e = &est.event_masses[1];
        assert!((e.mass - 0.25).abs() <= 4.0 * e.se, "{e:?}");
        assert!((est.normalizer - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_few_replicates() {
        let ev = [NamedEvent::builtin("s", SphereEvent::FullSphere)];
        assert!(spectral_estimate(&EpsilonSpec::rademacher(), &YGeneratorSpec::Example1, 1.5, &ev, 10, 0).is_err());
    }
}
