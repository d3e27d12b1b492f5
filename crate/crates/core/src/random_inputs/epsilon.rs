use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::stream::open01;
use crate::error::{Error, Result};

const MEAN_TOL: f64 = 1e-12;

/// Law of the multipliers `ε_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsilonFamily {
    Rademacher,
    /// Uniform on `[-a, a]`.
    UniformSymmetric {
        a: f64,
    },
    /// `x_neg` with probability `p`, `x_pos` with probability `1 - p`.
    TwoPoint {
        p: f64,
        x_neg: f64,
        x_pos: f64,
    },
    Table {
        values: Vec<f64>,
        probabilities: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSpec {
    pub family: EpsilonFamily,
    /// User-declared value of `E|ε|^α`, echoed next to the computed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_moment_hint: Option<f64>,
}

impl From<EpsilonFamily> for EpsilonSpec {
    fn from(family: EpsilonFamily) -> Self {
        Self {
            family,
            alpha_moment_hint: None,
        }
    }
}

impl EpsilonSpec {
    pub fn rademacher() -> Self {
        EpsilonFamily::Rademacher.into()
    }

    pub fn uniform_symmetric(a: f64) -> Self {
        EpsilonFamily::UniformSymmetric { a }.into()
    }

    pub fn two_point(p: f64, x_neg: f64, x_pos: f64) -> Self {
        EpsilonFamily::TwoPoint { p, x_neg, x_pos }.into()
    }

    pub fn table(values: Vec<f64>, probabilities: Vec<f64>) -> Self {
        EpsilonFamily::Table { values, probabilities }.into()
    }

    /// Checks well-formedness, and the zero-mean requirement when `alpha >= 1`.
    pub fn validate(&self, alpha: Option<f64>) -> Result<()> {
        match &self.family {
            EpsilonFamily::Rademacher => {}
            EpsilonFamily::UniformSymmetric { a } => {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(Error::Config(format!(
                        "uniform_symmetric half-width a = {a} must be positive"
                    )));
                }
            }
            EpsilonFamily::TwoPoint { p, x_neg, x_pos } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::Config(format!("two_point probability p = {p} not in [0, 1]")));
                }
                if !(x_neg.is_finite() && x_pos.is_finite()) {
                    return Err(Error::Config("two_point atoms must be finite".into()));
                }
            }
            EpsilonFamily::Table { values, probabilities } => {
                if values.is_empty() || values.len() != probabilities.len() {
                    return Err(Error::Config(format!(
                        "table needs matching nonempty values/probabilities, got {} and {}",
                        values.len(),
                        probabilities.len()
                    )));
                }
                if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::Config("table probabilities must lie in [0, 1]".into()));
                }
                let total: f64 = probabilities.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::Config(format!("table probabilities sum to {total}, not 1")));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config("table values must be finite".into()));
                }
            }
        }
        if let Some(alpha) = alpha {
            if alpha >= 1.0 && !self.is_mean_zero() {
                return Err(Error::Config(format!(
                    "alpha = {alpha} >= 1 requires a mean-zero multiplier law (E ε_1 = 0), but the mean is {}",
                    self.mean()
                )));
            }
        }
        Ok(())
    }

    pub fn is_mean_zero(&self) -> bool {
        let scale = self.abs_moment(1.0).max(f64::MIN_POSITIVE);
        self.mean().abs() <= MEAN_TOL * scale
    }

    /// Atoms `(value, probability)` for discrete families.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.family {
            EpsilonFamily::Rademacher => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            EpsilonFamily::UniformSymmetric { .. } => None,
            EpsilonFamily::TwoPoint { p, x_neg, x_pos } => Some(vec![(*x_neg, *p), (*x_pos, 1.0 - p)]),
            EpsilonFamily::Table { values, probabilities } => {
                Some(values.iter().copied().zip(probabilities.iter().copied()).collect())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self.atoms() {
            Some(atoms) => atoms.iter().map(|(x, p)| x * p).sum(),
            None => 0.0,
        }
    }

    /// `E|ε|^m`.
    pub fn abs_moment(&self, m: f64) -> f64 {
        match (&self.family, self.atoms()) {
            (_, Some(atoms)) => atoms.iter().map(|(x, p)| x.abs().powf(m) * p).sum(),
            (EpsilonFamily::UniformSymmetric { a }, None) => a.powf(m) / (m + 1.0),
            _ => unreachable!(),
        }
    }

    /// Whether `x` survives the truncation `|x|^α <= index`.
    #[inline]
    pub fn kept(x: f64, index: u64, alpha: f64) -> bool {
        x.abs().powf(alpha) <= index as f64
    }

    /// `E[|ε|^m 1{|ε|^α <= index}]`.
    pub fn truncated_abs_moment(&self, m: f64, index: u64, alpha: f64) -> f64 {
        match (&self.family, self.atoms()) {
            (_, Some(atoms)) => atoms
                .iter()
                .filter(|(x, _)| Self::kept(*x, index, alpha))
                .map(|(x, p)| x.abs().powf(m) * p)
                .sum(),
            (EpsilonFamily::UniformSymmetric { a }, None) => {
                let c = a.min((index as f64).powf(1.0 / alpha));
                c.powf(m + 1.0) / ((m + 1.0) * a)
            }
            _ => unreachable!(),
        }
    }

    /// Signed truncated moment `E[ε^k 1{|ε|^α <= index}]` for integer `k >= 1`.
    pub fn truncated_moment(&self, k: u32, index: u64, alpha: f64) -> f64 {
        match (&self.family, self.atoms()) {
            (_, Some(atoms)) => atoms
                .iter()
                .filter(|(x, _)| Self::kept(*x, index, alpha))
                .map(|(x, p)| x.powi(k as i32) * p)
                .sum(),
            (EpsilonFamily::UniformSymmetric { .. }, None) => {
                if k % 2 == 1 {
                    0.0
                } else {
                    self.truncated_abs_moment(k as f64, index, alpha)
                }
            }
            _ => unreachable!(),
        }
    }

    /// `P(|ε|^α > index)`.
    pub fn tail_probability(&self, index: u64, alpha: f64) -> f64 {
        match (&self.family, self.atoms()) {
            (_, Some(atoms)) => atoms
                .iter()
                .filter(|(x, _)| !Self::kept(*x, index, alpha))
                .map(|(_, p)| p)
                .sum(),
            (EpsilonFamily::UniformSymmetric { a }, None) => {
                let c = (index as f64).powf(1.0 / alpha);
                (1.0 - c / a).max(0.0)
            }
            _ => unreachable!(),
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.family {
            EpsilonFamily::Rademacher => {
                if rng.next_u64() >> 63 == 0 {
                    -1.0
                } else {
                    1.0
                }
            }
            EpsilonFamily::UniformSymmetric { a } => a * (2.0 * open01(rng) - 1.0),
            EpsilonFamily::TwoPoint { p, x_neg, x_pos } => {
                if open01(rng) < *p {
                    *x_neg
                } else {
                    *x_pos
                }
            }
            EpsilonFamily::Table { values, probabilities } => {
                let u = open01(rng);
                let mut cum = 0.0;
                for (v, p) in values.iter().zip(probabilities) {
                    cum += p;
                    if u < cum {
                        return *v;
                    }
                }
                // Rounding in the cumulative sum; fall back to the last positive atom.
                values
                    .iter()
                    .zip(probabilities)
                    .rev()
                    .find(|(_, &p)| p > 0.0)
                    .map(|(v, _)| *v)
                    .unwrap_or(values[values.len() - 1])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random_inputs::RngStream;
    use crate::summation::mean_and_se;

    #[test]
    fn two_point_mean_zero_accepted() {
        let e = EpsilonSpec::two_point(0.8, -1.0, 4.0);
        // 1 - 0.8 is not exactly 0.2 in binary
        assert!(e.mean().abs() < 1e-15);
        assert!(e.is_mean_zero());
        e.validate(Some(1.5)).unwrap();
    }

    #[test]
    fn nonzero_mean_rejected_when_alpha_at_least_one() {
        let e = EpsilonSpec::two_point(0.5, -1.0, 4.0);
        assert!(matches!(e.validate(Some(1.5)), Err(Error::Config(_))));
        assert!(matches!(e.validate(Some(1.0)), Err(Error::Config(_))));
        e.validate(Some(0.7)).unwrap();
    }

    #[test]
    fn table_probabilities_must_sum_to_one() {
        let e = EpsilonSpec::table(vec![-1.0, 1.0], vec![0.5, 0.6]);
        assert!(matches!(e.validate(None), Err(Error::Config(_))));
        let e = EpsilonSpec::table(vec![-1.0, 1.0], vec![0.5]);
        assert!(e.validate(None).is_err());
    }

    #[test]
    fn truncation_boundary_is_inclusive() {
        // 4^1.5 = 8: the positive atom enters at index 8.
        let e = EpsilonSpec::two_point(0.8, -1.0, 4.0);
        assert!(!EpsilonSpec::kept(4.0, 7, 1.5));
        assert!(EpsilonSpec::kept(4.0, 8, 1.5));
        assert_eq!(e.truncated_abs_moment(4.0, 7, 1.5), 0.8);
        assert!((e.truncated_abs_moment(4.0, 8, 1.5) - (0.8 + 0.2 * 256.0)).abs() < 1e-12);
    }

    #[test]
    fn uniform_closed_forms() {
        let e = EpsilonSpec::uniform_symmetric(3.0);
        // untruncated: a^m/(m+1)
        assert!((e.truncated_abs_moment(2.0, 100, 1.0) - 3.0).abs() < 1e-15);
        // truncated at |x| <= 2: 2^3/(3*3)
        assert!((e.truncated_abs_moment(2.0, 2, 1.0) - 8.0 / 9.0).abs() < 1e-15);
        assert!((e.tail_probability(2, 1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.truncated_moment(3, 2, 1.0), 0.0);
    }

    #[test]
    fn rademacher_frequencies() {
        let e = EpsilonSpec::rademacher();
        let mut rng = RngStream::new(5, 0).rng();
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| e.sample(&mut rng)).collect();
        assert!(draws.iter().all(|&x| x == 1.0 || x == -1.0));
        let plus: Vec<f64> = draws.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect();
        let (freq, se) = mean_and_se(&plus);
        assert!((freq - 0.5).abs() <= 4.0 * se, "freq {freq} se {se}");
        let (mean, se) = mean_and_se(&draws);
        assert!(mean.abs() <= 4.0 * se);
    }

    #[test]
    fn mean_zero_families_sample_mean() {
        let mut rng = RngStream::new(9, 1).rng();
        for e in [
            EpsilonSpec::uniform_symmetric(2.0),
            EpsilonSpec::two_point(0.8, -1.0, 4.0),
            EpsilonSpec::table(vec![-2.0, 0.0, 1.0], vec![0.2, 0.4, 0.4]),
        ] {
            e.validate(Some(1.5)).unwrap();
            let draws: Vec<f64> = (0..1_000_000).map(|_| e.sample(&mut rng)).collect();
            let (mean, se) = mean_and_se(&draws);
            assert!(mean.abs() <= 4.0 * se, "{e:?}: mean {mean} se {se}");
        }
    }
}
