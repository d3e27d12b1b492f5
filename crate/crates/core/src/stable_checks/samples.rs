//! Sample containers, the empirical characteristic function and the
//! log-log tail-index regression.
//!
//! For a symmetric α-stable law `-log|φ(u)| = σ^α |u|^α`, so
//! `log(-log|φ̂(u)|)` is affine in `log u` with slope α.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::summation::{mean_and_se, ExactSum};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleMeta {
    /// Echo of the generating specification, if any.
    pub source: serde_json::Value,
    /// Evaluation time for marginal samples.
    pub t: Option<f64>,
    /// Whether the values are norms `‖X‖`.
    pub norms: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    values: Vec<f64>,
    pub meta: SampleMeta,
}

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            meta: SampleMeta {
                source: serde_json::Value::Null,
                t: None,
                norms: false,
            },
        }
    }

    pub fn marginal(values: Vec<f64>, source: serde_json::Value, t: f64) -> Self {
        Self {
            values,
            meta: SampleMeta {
                source,
                t: Some(t),
                norms: false,
            },
        }
    }

    pub fn norms(values: Vec<f64>, source: serde_json::Value) -> Result<Self> {
        if let Some(x) = values.iter().find(|x| !(**x >= 0.0)) {
            return Err(Error::Domain(format!("norm sample {x} is not a nonnegative number")));
        }
        Ok(Self {
            values,
            meta: SampleMeta {
                source,
                t: None,
                norms: true,
            },
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn require_nonempty(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Degenerate("empty sample set".into()));
        }
        Ok(())
    }
}

fn ecf_at(xs: &[f64], u: f64) -> Complex64 {
    let mut re = ExactSum::new();
    let mut im = ExactSum::new();
    for &x in xs {
        let (s, c) = (u * x).sin_cos();
        re.add(c);
        im.add(s);
    }
    let n = xs.len() as f64;
    Complex64::new(re.value() / n, im.value() / n)
}

/// `φ̂(u) = mean exp(i u x)` for each `u` in the grid.
pub fn ecf(samples: &SampleSet, u_grid: &[f64]) -> Result<Vec<Complex64>> {
    samples.require_nonempty()?;
    if let Some(u) = u_grid.iter().find(|u| **u == 0.0 || !u.is_finite()) {
        return Err(Error::Domain(format!("ecf probe u = {u} must be finite and nonzero")));
    }
    Ok(u_grid.iter().map(|&u| ecf_at(samples.values(), u)).collect())
}

/// Levels of `|φ̂|` at the ends of an automatically chosen window.
pub const AUTO_WINDOW_LEVELS: (f64, f64) = (0.9, 0.1);

/// Number of contiguous batches behind the standard error of the slope.
pub const SE_BATCHES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaEstimate {
    pub alpha: f64,
    pub se: f64,
    /// Fitted `α log σ`.
    pub intercept: f64,
    pub window: (f64, f64),
    pub grid_size: usize,
    pub batch_slopes: Vec<f64>,
}

fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![(lo * hi).sqrt()];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..k)
        .map(|j| (a + (b - a) * j as f64 / (k - 1) as f64).exp())
        .collect()
}

/// Least-squares slope and intercept.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn regress(xs: &[f64], grid: &[f64]) -> Result<(f64, f64)> {
    let mut lx = Vec::with_capacity(grid.len());
    let mut ly = Vec::with_capacity(grid.len());
    for &u in grid {
        let m = ecf_at(xs, u).norm();
        if !(m > 0.0 && m < 1.0) || !(-m.ln()).ln().is_finite() {
            return Err(Error::Window(format!(
                "|φ̂({u})| = {m} leaves (0, 1); move the window so that |φ̂| stays inside (0.05, 0.95), \
                 i.e. shrink u_max if |φ̂| vanishes and raise u_min if it reaches 1"
            )));
        }
        lx.push(u.ln());
        ly.push((-m.ln()).ln());
    }
    Ok(ols(&lx, &ly))
}

/// Crossing point of `|φ̂(u)| = level`, found by bisection in `log u` from a
/// bracket seeded at the reciprocal median absolute sample.
fn crossing(xs: &[f64], level: f64) -> Result<f64> {
    let mut abs: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let mid = abs[abs.len() / 2];
    let scale = if mid > 0.0 { mid } else { abs[abs.len() - 1] };
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Window("samples are degenerate at 0; no window exists".into()));
    }
    let m = |u: f64| ecf_at(xs, u).norm();
    let (mut lo, mut hi) = (1.0 / scale, 1.0 / scale);
    let mut steps = 0;
    while m(lo) <= level {
        lo *= 0.5;
        steps += 1;
        if steps > 200 {
            return Err(Error::Window(format!(
                "|φ̂| never exceeds {level}; supply u_window explicitly"
            )));
        }
    }
    steps = 0;
    while m(hi) > level {
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(Error::Window(format!(
                "|φ̂| never drops to {level}; supply u_window explicitly"
            )));
        }
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..60 {
        let c = 0.5 * (a + b);
        if m(c.exp()) > level {
            a = c;
        } else {
            b = c;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Window `(u_min, u_max)` where `|φ̂|` falls from [`AUTO_WINDOW_LEVELS`]`.0` to `.1`.
pub fn auto_window(samples: &SampleSet) -> Result<(f64, f64)> {
    samples.require_nonempty()?;
    let (hi_level, lo_level) = AUTO_WINDOW_LEVELS;
    let xs = samples.values();
    Ok((crossing(xs, hi_level)?, crossing(xs, lo_level)?))
}

/// Tail index from the log-log ecf regression; `u_window = None` picks the window
/// with [`auto_window`]. The SE is the spread of slopes over contiguous batches.
pub fn estimate_alpha(samples: &SampleSet, u_window: Option<(f64, f64)>, grid_size: usize) -> Result<AlphaEstimate> {
    samples.require_nonempty()?;
    if grid_size < 2 {
        return Err(Error::Domain("slope regression needs at least two grid points".into()));
    }
    let window = match u_window {
        Some(w) => w,
        None => auto_window(samples)?,
    };
    let (u_min, u_max) = window;
    if !(0.0 < u_min && u_min < u_max && u_max.is_finite()) {
        return Err(Error::Window(format!(
            "window ({u_min}, {u_max}) must satisfy 0 < u_min < u_max"
        )));
    }
    let grid = log_grid(u_min, u_max, grid_size);
    let xs = samples.values();
    let (alpha, intercept) = regress(xs, &grid)?;

    let batch = xs.len() / SE_BATCHES;
    let batch_slopes: Vec<f64> = if batch >= 2 {
        xs.chunks_exact(batch)
            .take(SE_BATCHES)
            .filter_map(|c| regress(c, &grid).ok().map(|r| r.0))
            .collect()
    } else {
        Vec::new()
    };
    let se = if batch_slopes.len() >= 2 {
        // batches are 1/B the size, so their spread overstates the full-sample one by sqrt(B)
        let (_, se_of_mean) = mean_and_se(&batch_slopes);
        se_of_mean
    } else {
        f64::NAN
    };
    Ok(AlphaEstimate {
        alpha,
        se,
        intercept,
        window,
        grid_size,
        batch_slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_unit_modulus() {
        let s = SampleSet::new(vec![0.7; 5]);
        for (u, v) in [0.3, -1.0, 5.0].iter().zip(ecf(&s, &[0.3, -1.0, 5.0]).unwrap()) {
            assert!((v.norm() - 1.0).abs() < 1e-15);
            assert!((v.arg() - (u * 0.7_f64).sin().atan2((u * 0.7_f64).cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_samples_are_real() {
        let base = [0.3, 1.7, -2.2, 9.0, 0.01];
        let mut xs: Vec<f64> = base.to_vec();
        xs.extend(base.iter().map(|x| -x));
        let v = ecf(&SampleSet::new(xs), &[0.5, 2.0, 13.0]).unwrap();
        assert!(v.iter().all(|c| c.im == 0.0));
    }

    #[test]
    fn conjugate_symmetry() {
        let s = SampleSet::new(vec![0.3, 1.7, -2.2, 9.0, 0.01, 4.4]);
        let a = ecf(&s, &[0.7, 3.1]).unwrap();
        let b = ecf(&s, &[-0.7, -3.1]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(*x, y.conj());
        }
    }

    #[test]
    fn errors() {
        assert!(ecf(&SampleSet::new(vec![]), &[1.0]).is_err());
        assert!(ecf(&SampleSet::new(vec![1.0]), &[0.0]).is_err());
        assert!(SampleSet::norms(vec![1.0, -0.5], serde_json::Value::Null).is_err());
        let s = SampleSet::new(vec![0.0; 10]);
        assert!(matches!(estimate_alpha(&s, Some((0.1, 1.0)), 5), Err(Error::Window(_))));
        assert!(matches!(estimate_alpha(&s, None, 5), Err(Error::Window(_))));
    }
}
