use serde::{Deserialize, Serialize};

use super::stream::{exp1, RngStream};

/// Arrival times `Γ_1 < Γ_2 < ...` of a unit-rate Poisson process.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GammaSequence {
    values: Vec<f64>,
}

impl GammaSequence {
    /// Accumulates exponential increments. An increment too small to move the
    /// running sum in floating point is rejected by returning `None`.
    pub(crate) fn push_increment(&mut self, gamma: f64) -> Option<f64> {
        let last = self.values.last().copied().unwrap_or(0.0);
        let next = last + gamma;
        if next > last {
            self.values.push(next);
            Some(next)
        } else {
            None
        }
    }

    pub(crate) fn with_capacity(n: usize) -> Self {
        Self {
            values: Vec::with_capacity(n),
        }
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

    pub fn increments(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.values
            .iter()
            .map(|&g| {
                let d = g - prev;
                prev = g;
                d
            })
            .collect()
    }
}

/// Draws the exponential increment of term `index` (1-based) from its sub-stream.
///
/// Every consumer of term `index` (Γ sequence, series assembly) reads the
/// increment as the first draw of `replicate.child(index)`.
pub(crate) fn next_arrival<R: rand::RngCore>(seq: &mut GammaSequence, rng: &mut R) -> f64 {
    loop {
        if let Some(g) = seq.push_increment(exp1(rng)) {
            return g;
        }
    }
}

/// First `n` Poisson arrival times of the replicate stream.
pub fn gamma_sequence(n: usize, replicate: &RngStream) -> GammaSequence {
    let mut seq = GammaSequence::with_capacity(n);
    for i in 1..=n as u64 {
        let mut rng = replicate.child(i).rng();
        next_arrival(&mut seq, &mut rng);
    }
    seq
}
