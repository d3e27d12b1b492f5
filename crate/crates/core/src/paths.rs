//! Càdlàg step functions on `[0, 1]` with values in `R^d`.
//!
//! A [`StepPath`] is stored as an initial value on `[0, t_1)` followed by the
//! value taken on each `[t_k, t_{k+1})`, the last segment being closed at 1.
//! All operations are exact on this representation: no grid resampling.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::ExactSum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStepPath")]
pub struct StepPath {
    dimension: usize,
    initial_value: Vec<f64>,
    jump_times: Vec<f64>,
    post_jump_values: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStepPath {
    dimension: usize,
    initial_value: Vec<f64>,
    jump_times: Vec<f64>,
    post_jump_values: Vec<Vec<f64>>,
}

impl TryFrom<RawStepPath> for StepPath {
    type Error = Error;

    fn try_from(raw: RawStepPath) -> Result<Self> {
        StepPath::from_parts(raw.dimension, raw.initial_value, raw.jump_times, raw.post_jump_values)
    }
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain(format!("time {t} outside [0, 1]")))
    }
}

impl StepPath {
    pub fn from_parts(
        dimension: usize,
        initial_value: Vec<f64>,
        jump_times: Vec<f64>,
        post_jump_values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidPath("dimension must be positive".into()));
        }
        if initial_value.len() != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                found: initial_value.len(),
            });
        }
        if jump_times.len() != post_jump_values.len() {
            return Err(Error::InvalidPath(format!(
                "{} jump times but {} post-jump values",
                jump_times.len(),
                post_jump_values.len()
            )));
        }
        let mut prev = 0.0;
        for &t in &jump_times {
            if !(t > prev && t <= 1.0) {
                return Err(Error::InvalidPath(format!(
                    "jump times must be strictly increasing in (0, 1]; got {t} after {prev}"
                )));
            }
            prev = t;
        }
        for v in &post_jump_values {
            if v.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: v.len(),
                });
            }
        }
        if initial_value
            .iter()
            .chain(post_jump_values.iter().flatten())
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidPath("segment values must be finite".into()));
        }
        Ok(Self {
            dimension,
            initial_value,
            jump_times,
            post_jump_values,
        })
    }

    /// Builds a path from `(time, value)` segments, the first of which must start at 0.
    pub fn from_segments(segments: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        let mut iter = segments.into_iter();
        let (t0, initial) = iter.next().ok_or_else(|| Error::InvalidPath("no segments".into()))?;
        if t0 != 0.0 {
            return Err(Error::InvalidPath(format!(
                "first segment must start at t=0, found {t0}"
            )));
        }
        let dimension = initial.len();
        let (times, values) = iter.unzip();
        Self::from_parts(dimension, initial, times, values)
    }

    pub fn zero(dimension: usize) -> Self {
        Self::constant(vec![0.0; dimension])
    }

    pub fn constant(value: Vec<f64>) -> Self {
        assert!(!value.is_empty(), "dimension must be positive");
        Self {
            dimension: value.len(),
            initial_value: value,
            jump_times: Vec::new(),
            post_jump_values: Vec::new(),
        }
    }

    /// Scalar path `height * 1{at <= t}`; a jump at 0 folds into the initial value.
    pub fn unit_jump(at: f64, height: f64) -> Result<Self> {
        check_time(at)?;
        if at == 0.0 {
            return Ok(Self::constant(vec![height]));
        }
        Self::from_parts(1, vec![0.0], vec![at], vec![vec![height]])
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn initial_value(&self) -> &[f64] {
        &self.initial_value
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn post_jump_values(&self) -> &[Vec<f64>] {
        &self.post_jump_values
    }

    pub fn segment_count(&self) -> usize {
        self.jump_times.len() + 1
    }

    /// Segment start times paired with segment values, starting at `t = 0`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        std::iter::once((0.0, self.initial_value.as_slice())).chain(
            self.jump_times
                .iter()
                .zip(&self.post_jump_values)
                .map(|(&t, v)| (t, v.as_slice())),
        )
    }

    fn segment_values(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.segments().map(|(_, v)| v)
    }

    /// Value at `t`; right-continuous at jump times.
    pub fn evaluate(&self, t: f64) -> Result<&[f64]> {
        check_time(t)?;
        Ok(self.value_at(t))
    }

    pub(crate) fn value_at(&self, t: f64) -> &[f64] {
        let idx = self.jump_times.partition_point(|&s| s <= t);
        if idx == 0 {
            &self.initial_value
        } else {
            &self.post_jump_values[idx - 1]
        }
    }

    /// `Y(t2) - Y(t1)` for `0 <= t1 <= t2 <= 1`.
    pub fn increment(&self, t1: f64, t2: f64) -> Result<Vec<f64>> {
        check_time(t1)?;
        check_time(t2)?;
        if t1 > t2 {
            return Err(Error::Domain(format!("increment requires t1 <= t2, got ({t1}, {t2})")));
        }
        let a = self.value_at(t1);
        let b = self.value_at(t2);
        Ok(b.iter().zip(a).map(|(y, x)| y - x).collect())
    }

    /// Squared Euclidean norm of the increment over `[t1, t2]`.
    pub fn increment_sq(&self, t1: f64, t2: f64) -> Result<f64> {
        Ok(self.increment(t1, t2)?.iter().map(|x| x * x).sum())
    }

    /// Uniform norm: supremum over time and coordinates of `|x_i(t)|`.
    pub fn sup_norm(&self) -> f64 {
        self.segment_values().flatten().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Largest and smallest coordinate value over all segments.
    pub fn value_range(&self) -> (f64, f64) {
        self.segment_values()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            })
    }

    pub fn scale(&self, c: f64) -> StepPath {
        let mul = |v: &Vec<f64>| v.iter().map(|x| c * x).collect::<Vec<_>>();
        StepPath {
            dimension: self.dimension,
            initial_value: mul(&self.initial_value),
            jump_times: self.jump_times.clone(),
            post_jump_values: self.post_jump_values.iter().map(mul).collect(),
        }
    }

    /// Linear combination `sum_k c_k * x_k` as an exact step path.
    ///
    /// The jump grid is the merged union of all input jump times. Each segment
    /// value is the faithfully rounded exact sum of the products `c_k * x_k(t)`.
    /// An empty term list yields the zero path of the given dimension.
    pub fn linear_combine<'a, I>(dimension: usize, terms: I) -> Result<StepPath>
    where
        I: IntoIterator<Item = (f64, &'a StepPath)>,
    {
        if dimension == 0 {
            return Err(Error::InvalidPath("dimension must be positive".into()));
        }
        let terms: Vec<(f64, &StepPath)> = terms.into_iter().collect();
        for (c, p) in &terms {
            if p.dimension != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: p.dimension,
                });
            }
            if !c.is_finite() {
                return Err(Error::Domain(format!("non-finite coefficient {c}")));
            }
        }

        let mut acc = vec![ExactSum::new(); dimension];
        for (c, p) in &terms {
            for (a, x) in acc.iter_mut().zip(&p.initial_value) {
                a.add(c * x);
            }
        }
        let initial_value: Vec<f64> = acc.iter().map(ExactSum::value).collect();

        let mut events: Vec<(f64, usize, usize)> = terms
            .iter()
            .enumerate()
            .flat_map(|(k, (_, p))| p.jump_times.iter().enumerate().map(move |(j, &t)| (t, k, j)))
            .collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut jump_times = Vec::new();
        let mut post_jump_values = Vec::new();
        let mut i = 0;
        while i < events.len() {
            let t = events[i].0;
            while i < events.len() && events[i].0 == t {
                let (_, k, j) = events[i];
                let (c, p) = terms[k];
                let old = if j == 0 {
                    &p.initial_value
                } else {
                    &p.post_jump_values[j - 1]
                };
                let new = &p.post_jump_values[j];
                for ((a, x_new), x_old) in acc.iter_mut().zip(new).zip(old) {
                    a.add(c * x_new);
                    a.add(-(c * x_old));
                }
                i += 1;
            }
            jump_times.push(t);
            post_jump_values.push(acc.iter().map(ExactSum::value).collect());
        }

        Ok(StepPath {
            dimension,
            initial_value,
            jump_times,
            post_jump_values,
        })
    }

    /// Difference `self - other` on the merged grid.
    pub fn sub(&self, other: &StepPath) -> Result<StepPath> {
        StepPath::linear_combine(self.dimension, [(1.0, self), (-1.0, other)])
    }

    /// Drops jumps that do not change the value.
    pub fn canonicalize(&self) -> StepPath {
        let mut jump_times = Vec::new();
        let mut post_jump_values: Vec<Vec<f64>> = Vec::new();
        let mut current = &self.initial_value;
        for (t, v) in self.jump_times.iter().zip(&self.post_jump_values) {
            if v != current {
                jump_times.push(*t);
                post_jump_values.push(v.clone());
                current = v;
            }
        }
        StepPath {
            dimension: self.dimension,
            initial_value: self.initial_value.clone(),
            jump_times,
            post_jump_values,
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.dimension).map(|i| format!("value_{i}")))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (t, v) in self.segments() {
            let row: Vec<String> = std::iter::once(format_f64(t))
                .chain(v.iter().map(|&x| format_f64(x)))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<StepPath> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty step-path CSV".into()))??;
        let cols: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
        if cols.first() != Some(&"t") || cols.len() < 2 {
            return Err(Error::Parse(format!("bad step-path CSV header: {header}")));
        }
        for (i, c) in cols[1..].iter().enumerate() {
            if *c != format!("value_{}", i + 1) {
                return Err(Error::Parse(format!("bad step-path CSV column {c:?}")));
            }
        }
        let dimension = cols.len() - 1;
        let mut segments = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("line {}: {f:?}: {e}", lineno + 2)))
                })
                .collect::<Result<_>>()?;
            if fields.len() != dimension + 1 {
                return Err(Error::Parse(format!(
                    "line {}: expected {} fields, found {}",
                    lineno + 2,
                    dimension + 1,
                    fields.len()
                )));
            }
            segments.push((fields[0], fields[1..].to_vec()));
        }
        StepPath::from_segments(segments)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("step paths serialize")
    }

    pub fn from_json(s: &str) -> Result<StepPath> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Locale-independent decimal with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        // Keeps the sign of negative zero out of output files.
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}
