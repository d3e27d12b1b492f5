//! Floating-point accumulators.
//!
//! [`ExactSum`] keeps a nonoverlapping expansion (Shewchuk) so that adding and
//! later subtracting the same value cancels exactly; [`CompensatedSum`] is the
//! cheaper Neumaier accumulator used by Monte Carlo reductions.

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Error-free running sum stored as a nonoverlapping expansion in increasing
/// magnitude order.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    parts: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        if x == 0.0 {
            return;
        }
        if !x.is_finite() {
            // Non-finite inputs poison the expansion; keep a single component.
            let total = self.value() + x;
            self.parts.clear();
            self.parts.push(total);
            return;
        }
        let mut q = x;
        let mut write = 0;
        for read in 0..self.parts.len() {
            let (s, e) = two_sum(q, self.parts[read]);
            if e != 0.0 {
                self.parts[write] = e;
                write += 1;
            }
            q = s;
        }
        self.parts.truncate(write);
        if q != 0.0 {
            self.parts.push(q);
        }
    }

    /// Faithfully rounded value of the exact sum.
    pub fn value(&self) -> f64 {
        self.parts.iter().sum()
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|&x| (x - mean) * (x - mean)));
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_sum_cancels_added_then_removed_terms() {
        let mut acc = ExactSum::new();
        acc.add(1e16);
        acc.add(1.0);
        acc.add(-1e16);
        assert_eq!(acc.value(), 1.0);

        let xs = [0.1, 0.7, 1e-9, 3.3e5, -2.25];
        for &x in &xs {
            acc.add(x);
        }
        for &x in xs.iter().rev() {
            acc.add(-x);
        }
        assert_eq!(acc.value(), 1.0);
    }

    #[test]
    fn exact_sum_of_tenths() {
        let mut acc = ExactSum::new();
        for _ in 0..10 {
            acc.add(0.1);
        }
        // The exact sum of ten copies of fl(0.1) rounds to 1.0.
        assert_eq!(acc.value(), 1.0);
    }

    #[test]
    fn compensated_beats_naive() {
        let mut xs = vec![1.0];
        xs.extend(std::iter::repeat_n(1e-16, 10_000));
        let naive: f64 = xs.iter().sum();
        assert_eq!(naive, 1.0);
        let comp = compensated_sum(xs.iter().copied());
        assert!((comp - (1.0 + 1e-12)).abs() < 1e-24);
    }

    #[test]
    fn mean_and_se_of_constant() {
        let (m, se) = mean_and_se(&[2.0; 50]);
        assert_eq!(m, 2.0);
        assert_eq!(se, 0.0);
    }
}
