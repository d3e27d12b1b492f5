//! Index-pattern decomposition of the fourth-moment sum.
//!
//! For `i = (i1, i2, i3, i4)` the equivalence `j ~ j'  <=>  i_j = i_j'` is a set
//! partition `τ(i)` of `{1, 2, 3, 4}`, and
//!
//! ```text
//! S_{n,τ} = sum_{i in [1,n]^4, τ(i) = τ} (i1 i2 i3 i4)^{-1/α} |E(ε̃_i1 ε̃_i2 ε̃_i3 ε̃_i4)|
//! ```
//!
//! Indices in distinct blocks are distinct, so by independence the expectation
//! factors into `prod_blocks E(ε̃_j^{|block|})`.

use std::fmt;

use serde::Serialize;

use super::constants::moment_constant;
use crate::error::{Error, Result};
use crate::random_inputs::EpsilonSpec;
use crate::summation::CompensatedSum;

/// Largest `n` for which [`partition_sum`] enumerates index tuples directly.
pub const ENUMERATION_CAP: u64 = 60;

/// Partition count reported in the source derivation; enumeration finds 15.
pub const STATED_PARTITION_COUNT: usize = 13;

/// Set partition of `{1, ..., k}`; blocks sorted by least element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds from arbitrary blocks; they must cover `1..=k` exactly once.
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.retain(|b| !b.is_empty());
        blocks.sort();
        let mut all: Vec<usize> = blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        if all.iter().enumerate().any(|(k, &e)| e != k + 1) {
            return Err(Error::Domain(format!(
                "{blocks:?} is not a set partition of 1..={}",
                all.len()
            )));
        }
        Ok(Self { blocks })
    }

    /// Restricted growth string `labels[j]` = block of element `j + 1`.
    fn from_labels(labels: &[usize]) -> Self {
        let nblocks = labels.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); nblocks];
        for (j, &l) in labels.iter().enumerate() {
            blocks[l].push(j + 1);
        }
        Self { blocks }
    }

    /// Pattern `τ(i)` of an index tuple.
    pub fn of_tuple(indices: &[u64]) -> Self {
        let mut labels = Vec::with_capacity(indices.len());
        let mut seen: Vec<u64> = Vec::new();
        for &i in indices {
            let l = match seen.iter().position(|&s| s == i) {
                Some(l) => l,
                None => {
                    seen.push(i);
                    seen.len() - 1
                }
            };
            labels.push(l);
        }
        Self::from_labels(&labels)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn element_count(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            let inner: Vec<String> = b.iter().map(|e| e.to_string()).collect();
            write!(f, "{{{}}}", inner.join(","))?;
        }
        Ok(())
    }
}

/// All set partitions of `{1, ..., k}` in restricted-growth-string order.
pub fn set_partitions(k: usize) -> Vec<Partition> {
    if k == 0 {
        return vec![Partition { blocks: Vec::new() }];
    }
    let mut out = Vec::new();
    let mut labels = vec![0usize; k];
    fn rec(pos: usize, max: usize, labels: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if pos == labels.len() {
            out.push(Partition::from_labels(labels));
            return;
        }
        for l in 0..=max + 1 {
            labels[pos] = l;
            rec(pos + 1, max.max(l), labels, out);
        }
    }
    rec(1, 0, &mut labels, &mut out);
    out
}

/// The 15 set partitions of `{1, 2, 3, 4}`.
pub fn enumerate_partitions() -> Vec<Partition> {
    set_partitions(4)
}

/// Per-block factors `f_k(j) = j^{-k/α} |E ε̃_j^k|` for `k = 1..=4`, `j = 1..=n`.
struct BlockFactors {
    table: [Vec<f64>; 4],
}

impl BlockFactors {
    fn new(alpha: f64, eps: &EpsilonSpec, n: u64) -> Self {
        let row = |k: u32| -> Vec<f64> {
            (1..=n)
                .map(|j| (j as f64).powf(-(k as f64) / alpha) * eps.truncated_moment(k, j, alpha).abs())
                .collect()
        };
        Self {
            table: [row(1), row(2), row(3), row(4)],
        }
    }

    #[inline]
    fn get(&self, k: usize, j: usize) -> f64 {
        self.table[k - 1][j]
    }
}

fn enumerate_distinct(sizes: &[usize], f: &BlockFactors, n: usize) -> f64 {
    fn rec(sizes: &[usize], f: &BlockFactors, n: usize, used: &mut Vec<usize>, prod: f64, acc: &mut CompensatedSum) {
        let Some((&k, rest)) = sizes.split_first() else {
            acc.add(prod);
            return;
        };
        for j in 0..n {
            if used.contains(&j) {
                continue;
            }
            let v = f.get(k, j);
            if v == 0.0 {
                continue;
            }
            used.push(j);
            rec(rest, f, n, used, prod * v, acc);
            used.pop();
        }
    }
    let mut acc = CompensatedSum::new();
    rec(sizes, f, n, &mut Vec::new(), 1.0, &mut acc);
    acc.value()
}

/// Sum over distinct block indices by Möbius inversion on the partition lattice
/// of the blocks: `mu(0, π) = prod_B (-1)^{|B|-1} (|B|-1)!`.
fn inclusion_exclusion(sizes: &[usize], f: &BlockFactors, n: usize) -> f64 {
    let mut total = CompensatedSum::new();
    for pi in set_partitions(sizes.len()) {
        let mut term = 1.0;
        for block in pi.blocks() {
            let b = block.len();
            let mu = if b % 2 == 1 { 1.0 } else { -1.0 } * (1..b).product::<usize>() as f64;
            let merged: f64 = (0..n)
                .map(|j| block.iter().map(|&e| f.get(sizes[e - 1], j)).product::<f64>())
                .collect::<CompensatedSum>()
                .value();
            term *= mu * merged;
        }
        total.add(term);
    }
    total.value()
}

fn check_partition(tau: &Partition) -> Result<()> {
    if tau.element_count() != 4 || !enumerate_partitions().contains(tau) {
        return Err(Error::Domain(format!("{tau} is not a set partition of {{1,2,3,4}}")));
    }
    Ok(())
}

/// `S_{n,τ}`: exact tuple enumeration up to [`ENUMERATION_CAP`], inclusion-exclusion beyond.
pub fn partition_sum(tau: &Partition, alpha: f64, eps: &EpsilonSpec, n: u64) -> Result<f64> {
    check_partition(tau)?;
    eps.validate(None)?;
    if n == 0 {
        return Ok(0.0);
    }
    let f = BlockFactors::new(alpha, eps, n);
    let sizes = tau.block_sizes();
    Ok(if n <= ENUMERATION_CAP {
        enumerate_distinct(&sizes, &f, n as usize)
    } else {
        inclusion_exclusion(&sizes, &f, n as usize)
    })
}

/// [`partition_sum`] forced through inclusion-exclusion, for cross-checking.
pub fn partition_sum_factorized(tau: &Partition, alpha: f64, eps: &EpsilonSpec, n: u64) -> Result<f64> {
    check_partition(tau)?;
    if n == 0 {
        return Ok(0.0);
    }
    let f = BlockFactors::new(alpha, eps, n);
    Ok(inclusion_exclusion(&tau.block_sizes(), &f, n as usize))
}

/// Exponent of `|F(t2) - F(t1)|` in the bound on `D_τ`, as coefficients of `(β1, β2)`.
///
/// Positions 1, 2 carry the increment over `[t1, t]`, positions 3, 4 the one over
/// `[t, t2]`. Per block with `a` left and `b` right positions, Cauchy-Schwarz gives
/// `(1,0),(0,1) -> β1/2`, `(2,0),(0,2) -> β1`, `(1,1) -> β2`, `(2,1),(1,2) -> β2 + β1/2`,
/// `(2,2) -> 2β2`.
pub fn dtau_exponent(tau: &Partition) -> (f64, f64) {
    tau.blocks()
        .iter()
        .map(|b| {
            let a = b.iter().filter(|&&e| e <= 2).count();
            let r = b.len() - a;
            match (a, r) {
                (1, 0) | (0, 1) => (0.5, 0.0),
                (2, 0) | (0, 2) => (1.0, 0.0),
                (1, 1) => (0.0, 1.0),
                (2, 1) | (1, 2) => (0.5, 1.0),
                (2, 2) => (0.0, 2.0),
                _ => unreachable!("blocks of a partition of 1..=4"),
            }
        })
        .fold((0.0, 0.0), |(x, y), (a, b)| (x + a, y + b))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundProduct {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionRow {
    pub partition: String,
    pub block_sizes: Vec<usize>,
    /// `S_{n,τ}` for each `n` of the report grid.
    pub sums: Vec<f64>,
    /// Product of moment constants bounding `S_{n,τ}` at the largest grid `n`.
    pub bound: BoundProduct,
    /// The literal product stated for `{1,2,3}{4}`, reported next to `bound`.
    pub alternative_bound: Option<BoundProduct>,
    /// `2 β_τ` as coefficients of `(β1, β2)`.
    pub dtau_exponent: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionReport {
    pub alpha: f64,
    pub epsilon: EpsilonSpec,
    pub n_grid: Vec<u64>,
    pub partition_count: usize,
    pub stated_partition_count: usize,
    pub notes: Vec<String>,
    pub rows: Vec<PartitionRow>,
    /// `sum_τ S_{n,τ}` per grid `n`.
    pub totals: Vec<f64>,
}

fn first_moment_sum(alpha: f64, eps: &EpsilonSpec, n: u64) -> f64 {
    (1..=n)
        .map(|i| (i as f64).powf(-1.0 / alpha) * eps.truncated_moment(1, i, alpha).abs())
        .collect::<CompensatedSum>()
        .value()
}

pub fn partition_report(alpha: f64, eps: &EpsilonSpec, n_grid: &[u64]) -> Result<PartitionReport> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Config(format!("alpha = {alpha} must satisfy α ∈ (0,2)")));
    }
    eps.validate(None)?;
    let n_max = n_grid.iter().copied().max().unwrap_or(0);
    let mut constants = [0.0; 5];
    constants[1] = first_moment_sum(alpha, eps, n_max);
    for k in 2..=4 {
        constants[k] = moment_constant(alpha, k as f64, eps, n_max)?.value;
    }
    let label = |k: usize| format!("C(α,{k})");

    let partitions = enumerate_partitions();
    let mut rows = Vec::with_capacity(partitions.len());
    for tau in &partitions {
        let sums = n_grid
            .iter()
            .map(|&n| partition_sum(tau, alpha, eps, n))
            .collect::<Result<Vec<_>>>()?;
        let sizes = tau.block_sizes();
        let bound = BoundProduct {
            label: sizes.iter().map(|&k| label(k)).collect::<Vec<_>>().join("·"),
            value: sizes.iter().map(|&k| constants[k]).product(),
        };
        let alternative_bound = (tau.blocks() == [vec![1, 2, 3], vec![4]]).then(|| BoundProduct {
            label: format!("{}·{}", label(3), label(3)),
            value: constants[3] * constants[3],
        });
        rows.push(PartitionRow {
            partition: tau.to_string(),
            block_sizes: sizes,
            sums,
            bound,
            alternative_bound,
            dtau_exponent: dtau_exponent(tau),
        });
    }
    let totals = (0..n_grid.len())
        .map(|k| rows.iter().map(|r| r.sums[k]).collect::<CompensatedSum>().value())
        .collect();
    let notes = vec![
        format!(
            "enumeration yields {} set partitions of {{1,2,3,4}} (Bell number B(4)); the stated cardinality is {}",
            partitions.len(),
            STATED_PARTITION_COUNT
        ),
        "for {1,2,3}{4} the stated bound C(α,3)·C(α,3) is reported next to C(α,3)·C(α,1)".to_string(),
        "C(α,1) is the sum of i^{-1/α}|E ε̃_i| truncated at the largest grid n".to_string(),
    ];
    Ok(PartitionReport {
        alpha,
        epsilon: eps.clone(),
        n_grid: n_grid.to_vec(),
        partition_count: partitions.len(),
        stated_partition_count: STATED_PARTITION_COUNT,
        notes,
        rows,
        totals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_partitions_with_extremes() {
        let ps = enumerate_partitions();
        assert_eq!(ps.len(), 15);
        assert_eq!(ps[0].to_string(), "{1,2,3,4}");
        assert!(ps.iter().any(|p| p.to_string() == "{1}{2}{3}{4}"));
        let mut sorted = ps.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 15);
    }

    #[test]
    fn tuple_patterns() {
        assert_eq!(Partition::of_tuple(&[3, 3, 3, 3]).to_string(), "{1,2,3,4}");
        assert_eq!(Partition::of_tuple(&[1, 2, 1, 5]).to_string(), "{1,3}{2}{4}");
        assert_eq!(Partition::of_tuple(&[4, 3, 2, 1]).to_string(), "{1}{2}{3}{4}");
    }

    #[test]
    fn invalid_partitions_rejected() {
        assert!(Partition::new(vec![vec![1, 2], vec![2, 3]]).is_err());
        let three = Partition::new(vec![vec![1, 2, 3]]).unwrap();
        assert!(partition_sum(&three, 1.5, &EpsilonSpec::rademacher(), 5).is_err());
    }

    #[test]
    fn n_equal_one() {
        let e = EpsilonSpec::rademacher();
        for tau in enumerate_partitions() {
            let s = partition_sum(&tau, 1.5, &e, 1).unwrap();
            if tau.blocks().len() == 1 {
                assert_eq!(s, 1.0);
            } else {
                assert_eq!(s, 0.0, "{tau}");
            }
        }
    }

    #[test]
    fn rademacher_singletons_vanish() {
        let tau = Partition::new(vec![vec![1], vec![2], vec![3], vec![4]]).unwrap();
        assert_eq!(partition_sum(&tau, 1.5, &EpsilonSpec::rademacher(), 30).unwrap(), 0.0);
    }

    #[test]
    fn exponents() {
        let full = Partition::new(vec![vec![1, 2, 3, 4]]).unwrap();
        assert_eq!(dtau_exponent(&full), (0.0, 2.0));
        let discrete = Partition::new(vec![vec![1], vec![2], vec![3], vec![4]]).unwrap();
        assert_eq!(dtau_exponent(&discrete), (2.0, 0.0));
        let mixed = Partition::new(vec![vec![1, 2, 3], vec![4]]).unwrap();
        assert_eq!(dtau_exponent(&mixed), (1.0, 1.0));
        // every partition keeps the exponent above 1 when β1, β2 > 1/2
        for tau in enumerate_partitions() {
            let (a, b) = dtau_exponent(&tau);
            assert!(a * 0.5 + b * 0.5 >= 1.0 - 1e-12, "{tau}");
        }
    }
}
