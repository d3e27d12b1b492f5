//! Truncated Le Page series `sum_{i<=n} w_i ε_i Y_i` and the variants used to
//! study their convergence: deterministic weights `i^{-1/α}` and multipliers
//! truncated to `ε_i 1{|ε_i|^α <= i}`.
//!
//! Term `i` of replicate `r` draws, in order, its exponential increment, its
//! multiplier and its path from the sub-stream `RngStream::new(seed, r).child(i)`.
//! Raising the truncation depth therefore extends a realization instead of
//! redrawing it, and every weight/multiplier mode sees the same draws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::StepPath;
use crate::random_inputs::{gen_path, EpsilonSpec, GammaSequence, RngStream, YGeneratorSpec};
use crate::summation::{CompensatedSum, ExactSum};

pub const DEFAULT_TRUNCATION: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `Γ_i^{-1/α}`
    Gamma,
    /// `i^{-1/α}`
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMode {
    Raw,
    Truncated,
}

#[derive(Debug, Clone)]
pub struct SeriesSpec {
    pub alpha: f64,
    pub truncation_n: usize,
    pub epsilon: EpsilonSpec,
    pub y_gen: YGeneratorSpec,
    pub seed: u64,
    pub weight_mode: WeightMode,
    pub epsilon_mode: EpsilonMode,
}

impl SeriesSpec {
    pub fn new(alpha: f64, epsilon: EpsilonSpec, y_gen: YGeneratorSpec) -> Self {
        Self {
            alpha,
            truncation_n: DEFAULT_TRUNCATION,
            epsilon,
            y_gen,
            seed: 0,
            weight_mode: WeightMode::Gamma,
            epsilon_mode: EpsilonMode::Raw,
        }
    }

    pub fn with_truncation(mut self, n: usize) -> Self {
        self.truncation_n = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_modes(mut self, weight_mode: WeightMode, epsilon_mode: EpsilonMode) -> Self {
        self.weight_mode = weight_mode;
        self.epsilon_mode = epsilon_mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::Config(format!("alpha = {} must satisfy α ∈ (0,2)", self.alpha)));
        }
        self.epsilon.validate(Some(self.alpha))?;
        self.y_gen.validate()
    }

    pub fn dimension(&self) -> usize {
        self.y_gen.dimension()
    }

    pub fn replicate_stream(&self, replicate: u64) -> RngStream {
        RngStream::new(self.seed, replicate)
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha": self.alpha,
            "truncation_n": self.truncation_n,
            "epsilon": self.epsilon,
            "y": self.y_gen.echo(),
            "seed": self.seed,
            "weight_mode": self.weight_mode,
            "epsilon_mode": self.epsilon_mode,
        })
    }
}

/// `ε` if `|ε|^α <= index`, else 0.
pub fn truncate_epsilon(eps: f64, index: u64, alpha: f64) -> f64 {
    if EpsilonSpec::kept(eps, index, alpha) {
        eps
    } else {
        0.0
    }
}

/// The random ingredients of one series term.
#[derive(Debug, Clone)]
pub struct Term {
    /// 1-based term index.
    pub index: u64,
    pub gamma: f64,
    pub epsilon: f64,
    pub path: StepPath,
}

impl Term {
    pub fn weight(&self, alpha: f64, mode: WeightMode) -> f64 {
        match mode {
            WeightMode::Gamma => self.gamma.powf(-1.0 / alpha),
            WeightMode::Deterministic => (self.index as f64).powf(-1.0 / alpha),
        }
    }

    pub fn multiplier(&self, alpha: f64, mode: EpsilonMode) -> f64 {
        match mode {
            EpsilonMode::Raw => self.epsilon,
            EpsilonMode::Truncated => truncate_epsilon(self.epsilon, self.index, alpha),
        }
    }

    pub fn coefficient(&self, spec: &SeriesSpec) -> f64 {
        self.weight(spec.alpha, spec.weight_mode) * self.multiplier(spec.alpha, spec.epsilon_mode)
    }
}

/// Draws terms `1..=n` of a replicate.
pub fn draw_terms(spec: &SeriesSpec, replicate: &RngStream, n: usize) -> Result<Vec<Term>> {
    let mut gammas = GammaSequence::default();
    (1..=n as u64)
        .map(|index| {
            let mut rng = replicate.child(index).rng();
            let gamma = crate::random_inputs::next_arrival(&mut gammas, &mut rng);
            let epsilon = spec.epsilon.sample(&mut rng);
            let path = gen_path(&spec.y_gen, &mut rng)?;
            Ok(Term {
                index,
                gamma,
                epsilon,
                path,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PartialSumResult {
    pub path: StepPath,
    pub terms_used: usize,
    pub weight_mode: WeightMode,
    pub epsilon_mode: EpsilonMode,
    /// `|w_i ε_i| · ‖Y_i‖` per term, with the multiplier mode applied.
    pub per_term_norms: Option<Vec<f64>>,
}

fn combine_terms(spec: &SeriesSpec, terms: &[Term]) -> Result<PartialSumResult> {
    let coeffs: Vec<f64> = terms.iter().map(|t| t.coefficient(spec)).collect();
    let path = StepPath::linear_combine(
        spec.dimension(),
        coeffs.iter().copied().zip(terms.iter().map(|t| &t.path)),
    )?;
    let norms = coeffs
        .iter()
        .zip(terms)
        .map(|(c, t)| c.abs() * t.path.sup_norm())
        .collect();
    Ok(PartialSumResult {
        path,
        terms_used: terms.len(),
        weight_mode: spec.weight_mode,
        epsilon_mode: spec.epsilon_mode,
        per_term_norms: Some(norms),
    })
}

/// Partial sum over the first `spec.truncation_n` terms of replicate `replicate`.
pub fn partial_sum(spec: &SeriesSpec, replicate: &RngStream) -> Result<PartialSumResult> {
    spec.validate()?;
    let terms = draw_terms(spec, replicate, spec.truncation_n)?;
    combine_terms(spec, &terms)
}

/// Sum of terms `from+1..=to` alone, on the same realization.
pub fn partial_sum_range(spec: &SeriesSpec, replicate: &RngStream, from: usize, to: usize) -> Result<StepPath> {
    spec.validate()?;
    if from > to {
        return Err(Error::Domain(format!("empty term range {from}..{to}")));
    }
    let terms = draw_terms(spec, replicate, to)?;
    Ok(combine_terms(spec, &terms[from..])?.path)
}

/// One realization observed at several truncation depths.
pub fn coupled_partial_sums(
    spec: &SeriesSpec,
    replicate: &RngStream,
    checkpoints: &[usize],
) -> Result<Vec<PartialSumResult>> {
    spec.validate()?;
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!(
            "checkpoints must be strictly increasing: {checkpoints:?}"
        )));
    }
    let max = checkpoints.last().copied().unwrap_or(0);
    let terms = draw_terms(spec, replicate, max)?;
    checkpoints.iter().map(|&n| combine_terms(spec, &terms[..n])).collect()
}

/// Sup-norm distances between consecutive coupled partial sums.
pub fn cauchy_increments(spec: &SeriesSpec, replicate: &RngStream, checkpoints: &[usize]) -> Result<Vec<f64>> {
    let sums = coupled_partial_sums(spec, replicate, checkpoints)?;
    sums.windows(2)
        .map(|w| Ok(w[1].path.sub(&w[0].path)?.sup_norm()))
        .collect()
}

/// `sum_{i<=n} |Γ_i^{-1/α} - i^{-1/α}| |ε_i| ‖Y_i‖` for each checkpoint `n`.
pub fn gamma_deterministic_gap_at(spec: &SeriesSpec, replicate: &RngStream, checkpoints: &[usize]) -> Result<Vec<f64>> {
    spec.validate()?;
    if checkpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain("checkpoints must be nondecreasing".into()));
    }
    let max = checkpoints.last().copied().unwrap_or(0);
    let terms = draw_terms(spec, replicate, max)?;
    let mut acc = CompensatedSum::new();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    while next.peek() == Some(&&0) {
        out.push(0.0);
        next.next();
    }
    for (k, t) in terms.iter().enumerate() {
        let gap = (t.weight(spec.alpha, WeightMode::Gamma) - t.weight(spec.alpha, WeightMode::Deterministic)).abs();
        acc.add(gap * t.epsilon.abs() * t.path.sup_norm());
        while next.peek() == Some(&&(k + 1)) {
            out.push(acc.value());
            next.next();
        }
    }
    Ok(out)
}

pub fn gamma_deterministic_gap(spec: &SeriesSpec, replicate: &RngStream) -> Result<f64> {
    Ok(gamma_deterministic_gap_at(spec, replicate, &[spec.truncation_n])?[0])
}

/// Number of indices `i <= n` with `ε̃_i != ε_i`.
pub fn truncation_mismatches(spec: &SeriesSpec, replicate: &RngStream) -> Result<usize> {
    spec.validate()?;
    let terms = draw_terms(spec, replicate, spec.truncation_n)?;
    Ok(terms
        .iter()
        .filter(|t| truncate_epsilon(t.epsilon, t.index, spec.alpha) != t.epsilon)
        .count())
}

/// Values of the partial sum at the given times, accumulated directly from the
/// terms without building the merged path.
pub fn evaluate_partial_sum(spec: &SeriesSpec, replicate: &RngStream, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    for &t in times {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("time {t} outside [0, 1]")));
        }
    }
    let d = spec.dimension();
    let terms = draw_terms(spec, replicate, spec.truncation_n)?;
    let mut acc = vec![vec![ExactSum::new(); d]; times.len()];
    for term in &terms {
        let c = term.coefficient(spec);
        for (slot, &t) in acc.iter_mut().zip(times) {
            for (a, y) in slot.iter_mut().zip(term.path.evaluate(t)?) {
                a.add(c * y);
            }
        }
    }
    Ok(acc
        .iter()
        .map(|slot| slot.iter().map(ExactSum::value).collect())
        .collect())
}

/// First coordinate of `X(t)` for replicates `0..replicates`, in replicate order.
pub fn marginal_samples(spec: &SeriesSpec, t: f64, replicates: usize) -> Result<Vec<f64>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| Ok(evaluate_partial_sum(spec, &spec.replicate_stream(r), &[t])?[0][0]))
        .collect()
}

/// Partial-sum paths for replicates `0..replicates`, in replicate order.
pub fn sample_paths(spec: &SeriesSpec, replicates: usize) -> Result<Vec<StepPath>> {
    spec.validate()?;
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| Ok(partial_sum(spec, &spec.replicate_stream(r))?.path))
        .collect()
}
