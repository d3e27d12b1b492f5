//! Truncated-multiplier moment sums
//!
//! ```text
//! C(α, m) = sum_i i^{-m/α} E|ε̃_i|^m          (m > α)
//! C(α, 1) = sum_i i^{-1/α} |E ε̃_i|
//! B       = sum_i P(|ε|^α > i)  <=  E|ε|^α
//! ```
//!
//! with `ε̃_i = ε_i 1{|ε_i|^α <= i}`. All expectations are closed-form for the
//! supported multiplier families.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::random_inputs::EpsilonSpec;
use crate::summation::CompensatedSum;

/// Relative mass of the last decade below which a truncated sum is flagged converged.
pub const CONVERGENCE_MASS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentConstant {
    pub alpha: f64,
    pub m: f64,
    pub n_max: u64,
    pub value: f64,
    /// Share of `value` contributed by indices in `(n_max/10, n_max]`.
    pub last_decade_fraction: f64,
    pub converged: bool,
}

fn last_decade_sum<F: Fn(u64) -> f64>(n_max: u64, term: F) -> (f64, f64) {
    let cut = n_max / 10;
    let mut head = CompensatedSum::new();
    let mut tail = CompensatedSum::new();
    for i in 1..=n_max {
        if i <= cut {
            head.add(term(i));
        } else {
            tail.add(term(i));
        }
    }
    let total = head.value() + tail.value();
    let frac = if total > 0.0 { tail.value() / total } else { 0.0 };
    (total, frac)
}

/// `C(α, m)` truncated at `n_max`.
pub fn moment_constant(alpha: f64, m: f64, eps: &EpsilonSpec, n_max: u64) -> Result<MomentConstant> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Config(format!("alpha = {alpha} must satisfy α ∈ (0,2)")));
    }
    if !(m > alpha) {
        return Err(Error::DivergentRegime { alpha, m });
    }
    eps.validate(None)?;
    let (value, frac) = last_decade_sum(n_max, |i| {
        (i as f64).powf(-m / alpha) * eps.truncated_abs_moment(m, i, alpha)
    });
    Ok(MomentConstant {
        alpha,
        m,
        n_max,
        value,
        last_decade_fraction: frac,
        converged: frac < CONVERGENCE_MASS,
    })
}

/// `C(α, 1) = sum_{i <= n_max} i^{-1/α} |E ε̃_i|` for a mean-zero law.
pub fn centered_first_moment_sum(alpha: f64, eps: &EpsilonSpec, n_max: u64) -> Result<f64> {
    eps.validate(None)?;
    if !eps.is_mean_zero() {
        return Err(Error::Config(format!(
            "centered first-moment sum requires E ε = 0, got mean {}",
            eps.mean()
        )));
    }
    Ok((1..=n_max)
        .map(|i| (i as f64).powf(-1.0 / alpha) * eps.truncated_moment(1, i, alpha).abs())
        .collect::<CompensatedSum>()
        .value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BorelCantelli {
    pub n_max: u64,
    /// `sum_{i <= n_max} P(|ε|^α > i)`.
    pub sum: f64,
    /// `E|ε|^α`.
    pub alpha_moment: f64,
    pub within_bound: bool,
}

pub fn borel_cantelli_sum(alpha: f64, eps: &EpsilonSpec, n_max: u64) -> Result<BorelCantelli> {
    eps.validate(None)?;
    let mut sum = CompensatedSum::new();
    for i in 1..=n_max {
        let p = eps.tail_probability(i, alpha);
        if p == 0.0 {
            // tail probabilities are nonincreasing in i
            break;
        }
        sum.add(p);
    }
    let sum = sum.value();
    let alpha_moment = eps.abs_moment(alpha);
    Ok(BorelCantelli {
        n_max,
        sum,
        alpha_moment,
        within_bound: sum <= alpha_moment * (1.0 + 1e-12),
    })
}

/// `sum_{i >= start} i^{-s}` for `s > 1`: direct summation up to a cutoff and
/// an Euler-Maclaurin remainder beyond it.
pub fn zeta_tail(s: f64, start: u64) -> f64 {
    assert!(s > 1.0, "zeta tail needs s > 1");
    let start = start.max(1);
    let cutoff = start.max(64);
    let direct: f64 = (start..cutoff)
        .map(|i| (i as f64).powf(-s))
        .collect::<CompensatedSum>()
        .value();
    let n = cutoff as f64;
    let rem = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0;
    direct + rem
}

/// Grid supremum of `x^{m/α - 1} sum_{i >= x} i^{-m/α}`, the constant `C` of
/// the moment-constant bound. Tends to `α/(m - α)` as `x -> ∞`.
pub fn tail_sum_constant(alpha: f64, m: f64, grid: &[f64]) -> Result<f64> {
    if !(m > alpha) {
        return Err(Error::DivergentRegime { alpha, m });
    }
    let s = m / alpha;
    Ok(grid
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x.powf(s - 1.0) * zeta_tail(s, x.ceil() as u64))
        .fold(0.0, f64::max))
}

/// Grid supremum of `x^{1/α - 1} sum_{i <= x} i^{-1/α}`, the constant `C'`.
pub fn head_sum_constant(alpha: f64, grid: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = grid.iter().copied().filter(|&x| x > 0.0).collect();
    sorted.sort_by(f64::total_cmp);
    let mut acc = CompensatedSum::new();
    let mut next = 1u64;
    let mut best = 0.0_f64;
    for x in sorted {
        while (next as f64) <= x {
            acc.add((next as f64).powf(-1.0 / alpha));
            next += 1;
        }
        best = best.max(x.powf(1.0 / alpha - 1.0) * acc.value());
    }
    best
}

/// Geometric grid on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect()
}
