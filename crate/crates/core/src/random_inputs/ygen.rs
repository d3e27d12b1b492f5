use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::stream::open01;
use crate::error::{Error, Result};
use crate::paths::StepPath;
use crate::summation::mean_and_se;

/// Nondecreasing continuous function on `[0, 1]` given by linear interpolation
/// between knots, with `F(0) = 0` and `F(1) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotoneGrid {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl MonotoneGrid {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let g = Self { knots, values };
        g.validate()?;
        Ok(g)
    }

    pub fn uniform() -> Self {
        Self {
            knots: vec![0.0, 1.0],
            values: vec![0.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (k, v) = (&self.knots, &self.values);
        if k.len() < 2 || k.len() != v.len() {
            return Err(Error::Config(
                "cdf grid needs at least two knots and matching values".into(),
            ));
        }
        if k[0] != 0.0 || k[k.len() - 1] != 1.0 || k.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("cdf knots must increase strictly from 0 to 1".into()));
        }
        if v[0] != 0.0 || v[v.len() - 1] != 1.0 || v.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Config("cdf values must be nondecreasing from 0 to 1".into()));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let k = self.knots.partition_point(|&x| x <= t);
        if k >= self.knots.len() {
            return self.values[self.values.len() - 1];
        }
        let (x0, x1) = (self.knots[k - 1], self.knots[k]);
        let (y0, y1) = (self.values[k - 1], self.values[k]);
        y0 + (y1 - y0) * (t - x0) / (x1 - x0)
    }

    /// Generalized inverse at `v` in (0, 1) by binary search and linear interpolation.
    pub fn inverse(&self, v: f64) -> f64 {
        let k = self.values.partition_point(|&y| y < v).max(1);
        let (x0, x1) = (self.knots[k - 1], self.knots[k]);
        let (y0, y1) = (self.values[k - 1], self.values[k]);
        if y1 <= y0 {
            return x1;
        }
        (x0 + (x1 - x0) * (v - y0) / (y1 - y0)).clamp(0.0, 1.0)
    }
}

/// Law of the jump heights `R_i` of Example 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HeightSampler {
    Constant {
        value: Vec<f64>,
    },
    Discrete {
        values: Vec<Vec<f64>>,
        probabilities: Vec<f64>,
    },
    /// I.i.d. centered Gaussian coordinates.
    Gaussian {
        sd: f64,
        dimension: usize,
    },
}

impl HeightSampler {
    pub fn dimension(&self) -> usize {
        match self {
            HeightSampler::Constant { value } => value.len(),
            HeightSampler::Discrete { values, .. } => values.first().map_or(0, Vec::len),
            HeightSampler::Gaussian { dimension, .. } => *dimension,
        }
    }

    fn validate(&self) -> Result<()> {
        let d = self.dimension();
        if d == 0 {
            return Err(Error::Config("jump heights must have positive dimension".into()));
        }
        match self {
            HeightSampler::Constant { .. } => {}
            HeightSampler::Discrete { values, probabilities } => {
                if values.len() != probabilities.len() || values.iter().any(|v| v.len() != d) {
                    return Err(Error::Config(
                        "discrete heights need matching values/probabilities of one dimension".into(),
                    ));
                }
                let total: f64 = probabilities.iter().sum();
                if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "height probabilities must lie in [0,1] and sum to 1 (sum {total})"
                    )));
                }
            }
            HeightSampler::Gaussian { sd, .. } => {
                if !(*sd >= 0.0) {
                    return Err(Error::Config("gaussian height sd must be nonnegative".into()));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            HeightSampler::Constant { value } => value.clone(),
            HeightSampler::Discrete { values, probabilities } => {
                let u = open01(rng);
                let mut cum = 0.0;
                for (v, p) in values.iter().zip(probabilities) {
                    cum += p;
                    if u < cum {
                        return v.clone();
                    }
                }
                values[values.len() - 1].clone()
            }
            HeightSampler::Gaussian { sd, dimension } => (0..*dimension)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut RngAdapter(rng));
                    sd * z
                })
                .collect(),
        }
    }
}

// rand_distr samplers need a sized `Rng`.
struct RngAdapter<'a, R: RngCore + ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Example 2: `Y(t) = sum_i R_i 1{U_i <= t}` with `U_i ~ F_i` independent of `R_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example2Spec {
    pub cdfs: Vec<MonotoneGrid>,
    pub heights: HeightSampler,
    /// Declared bound `M` on the conditional fourth moment of the heights.
    pub fourth_moment_bound: f64,
}

impl Example2Spec {
    pub fn jump_count(&self) -> usize {
        self.cdfs.len()
    }

    /// `F(t) = sum_i F_i(t)`.
    pub fn cdf_sum(&self, t: f64) -> f64 {
        self.cdfs.iter().map(|g| g.eval(t)).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.cdfs.is_empty() {
            return Err(Error::Config("example2 needs at least one jump (p >= 1)".into()));
        }
        for g in &self.cdfs {
            g.validate()?;
        }
        self.heights.validate()?;
        if !(self.fourth_moment_bound > 0.0) {
            return Err(Error::Config("example2 fourth-moment bound M must be positive".into()));
        }
        Ok(())
    }
}

/// Source of i.i.d. user paths.
pub trait PathSampler: Send + Sync {
    fn dimension(&self) -> usize;
    fn sample(&self, rng: &mut dyn RngCore) -> Result<StepPath>;
    fn describe(&self) -> serde_json::Value {
        json!({ "variant": "user" })
    }
}

/// Empirical law on a finite pool of paths; each draw picks one uniformly.
#[derive(Debug, Clone)]
pub struct PathPool {
    paths: Vec<StepPath>,
    sources: Vec<String>,
}

impl PathPool {
    pub fn new(paths: Vec<StepPath>, sources: Vec<String>) -> Result<Self> {
        let first = paths
            .first()
            .ok_or_else(|| Error::Config("user path pool is empty".into()))?;
        let d = first.dimension();
        if let Some(p) = paths.iter().find(|p| p.dimension() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.dimension(),
            });
        }
        Ok(Self { paths, sources })
    }

    pub fn paths(&self) -> &[StepPath] {
        &self.paths
    }
}

impl PathSampler for PathPool {
    fn dimension(&self) -> usize {
        self.paths[0].dimension()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<StepPath> {
        let k = if self.paths.len() == 1 {
            0
        } else {
            rng.random_range(0..self.paths.len())
        };
        Ok(self.paths[k].clone())
    }

    fn describe(&self) -> serde_json::Value {
        json!({ "variant": "user", "pool_size": self.paths.len(), "sources": self.sources })
    }
}

#[derive(Clone)]
pub enum YGeneratorSpec {
    /// Single unit jump at `U ~ Uniform[0, 1]`.
    Example1,
    Example2(Example2Spec),
    /// Poisson counting process with the given intensity.
    Example3 {
        lambda: f64,
    },
    User(Arc<dyn PathSampler>),
}

impl fmt::Debug for YGeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "YGeneratorSpec({})", self.echo())
    }
}

impl YGeneratorSpec {
    pub fn dimension(&self) -> usize {
        match self {
            YGeneratorSpec::Example1 | YGeneratorSpec::Example3 { .. } => 1,
            YGeneratorSpec::Example2(s) => s.heights.dimension(),
            YGeneratorSpec::User(s) => s.dimension(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            YGeneratorSpec::Example1 => Ok(()),
            YGeneratorSpec::Example2(s) => s.validate(),
            YGeneratorSpec::Example3 { lambda } => {
                if lambda.is_finite() && *lambda > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "example3 intensity lambda = {lambda} must be positive"
                    )))
                }
            }
            YGeneratorSpec::User(s) => {
                if s.dimension() == 0 {
                    Err(Error::Config("user sampler has zero dimension".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn echo(&self) -> serde_json::Value {
        match self {
            YGeneratorSpec::Example1 => json!({ "variant": "example1" }),
            YGeneratorSpec::Example2(s) => json!({ "variant": "example2", "spec": s }),
            YGeneratorSpec::Example3 { lambda } => json!({ "variant": "example3", "lambda": lambda }),
            YGeneratorSpec::User(s) => s.describe(),
        }
    }
}

pub fn example1_path(u: f64) -> Result<StepPath> {
    StepPath::unit_jump(u, 1.0)
}

/// Counting path with a unit jump at each of the given sorted times in (0, 1].
pub fn example3_path(times: &[f64]) -> Result<StepPath> {
    StepPath::from_parts(
        1,
        vec![0.0],
        times.to_vec(),
        (1..=times.len()).map(|k| vec![k as f64]).collect(),
    )
}

/// Jumps at `u <= 0` sort first and fold into the initial value.
fn example2_path(jumps: &mut [(f64, Vec<f64>)], dimension: usize) -> Result<StepPath> {
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut initial = vec![0.0; dimension];
    let mut times: Vec<f64> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (u, r) in jumps.iter() {
        if *u <= 0.0 {
            for (a, x) in initial.iter_mut().zip(r) {
                *a += x;
            }
            continue;
        }
        let base = values.last().cloned().unwrap_or_else(|| initial.clone());
        let next: Vec<f64> = base.iter().zip(r).map(|(a, x)| a + x).collect();
        if times.last() == Some(u) {
            *values.last_mut().unwrap() = next;
        } else {
            times.push(*u);
            values.push(next);
        }
    }
    StepPath::from_parts(dimension, initial, times, values)
}

pub fn gen_path<R: RngCore>(spec: &YGeneratorSpec, rng: &mut R) -> Result<StepPath> {
    match spec {
        YGeneratorSpec::Example1 => example1_path(open01(rng)),
        YGeneratorSpec::Example2(s) => {
            let d = s.heights.dimension();
            let mut jumps: Vec<(f64, Vec<f64>)> = s
                .cdfs
                .iter()
                .map(|g| {
                    let u = g.inverse(open01(rng));
                    let r = s.heights.sample(rng);
                    (u, r)
                })
                .collect();
            example2_path(&mut jumps, d)
        }
        YGeneratorSpec::Example3 { lambda } => {
            let count = Poisson::new(*lambda)
                .map_err(|e| Error::Config(format!("example3 intensity: {e}")))?
                .sample(rng) as usize;
            loop {
                let mut times: Vec<f64> = (0..count).map(|_| open01(rng)).collect();
                times.sort_by(f64::total_cmp);
                if times.windows(2).all(|w| w[0] < w[1]) {
                    return example3_path(&times);
                }
            }
        }
        YGeneratorSpec::User(s) => {
            let path = s.sample(rng)?;
            if path.dimension() != s.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: s.dimension(),
                    found: path.dimension(),
                });
            }
            Ok(path)
        }
    }
}

/// Monte Carlo estimate of `E|R|^4` compared with the declared bound `M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourthMomentAudit {
    pub estimate: f64,
    pub se: f64,
    pub bound: f64,
    pub exceeds_bound: bool,
}

pub fn audit_fourth_moment<R: RngCore>(spec: &Example2Spec, draws: usize, rng: &mut R) -> FourthMomentAudit {
    let values: Vec<f64> = (0..draws)
        .map(|_| {
            let r = spec.heights.sample(rng);
            let sq: f64 = r.iter().map(|x| x * x).sum();
            sq * sq
        })
        .collect();
    let (estimate, se) = mean_and_se(&values);
    FourthMomentAudit {
        estimate,
        se,
        bound: spec.fourth_moment_bound,
        exceeds_bound: estimate > spec.fourth_moment_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random_inputs::RngStream;

    #[test]
    fn forced_example1_path() {
        let p = example1_path(0.5).unwrap();
        assert_eq!(p.evaluate(0.4).unwrap(), &[0.0]);
        assert_eq!(p.evaluate(0.5).unwrap(), &[1.0]);
        assert_eq!(p.sup_norm(), 1.0);
    }

    #[test]
    fn grid_inverse_and_eval() {
        let g = MonotoneGrid::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.8, 1.0]).unwrap();
        assert!((g.eval(0.25) - 0.4).abs() < 1e-15);
        assert!((g.inverse(0.4) - 0.25).abs() < 1e-15);
        assert!((g.inverse(0.9) - 0.75).abs() < 1e-15);
        assert!(MonotoneGrid::new(vec![0.0, 1.0], vec![0.0, 0.9]).is_err());
        assert!(MonotoneGrid::new(vec![0.0, 0.6, 1.0], vec![0.0, 0.7, 0.5]).is_err());
        // flat part: inverse lands on a knot, still a valid jump location
        let flat = MonotoneGrid::new(vec![0.0, 0.3, 0.6, 1.0], vec![0.0, 0.5, 0.5, 1.0]).unwrap();
        assert!((flat.inverse(0.5) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn example2_unit_heights_total_increment() {
        let spec = YGeneratorSpec::Example2(Example2Spec {
            cdfs: vec![MonotoneGrid::uniform(), MonotoneGrid::uniform()],
            heights: HeightSampler::Constant { value: vec![1.0] },
            fourth_moment_bound: 1.0,
        });
        spec.validate().unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..1000 {
            let p = gen_path(&spec, &mut rng).unwrap();
            assert_eq!(p.increment_sq(0.0, 1.0).unwrap(), 4.0);
        }
    }

    #[test]
    fn example2_vector_heights() {
        let spec = YGeneratorSpec::Example2(Example2Spec {
            cdfs: vec![MonotoneGrid::uniform(); 3],
            heights: HeightSampler::Constant { value: vec![1.0, -2.0] },
            fourth_moment_bound: 25.0,
        });
        let mut rng = RngStream::new(4, 0).rng();
        let p = gen_path(&spec, &mut rng).unwrap();
        assert_eq!(p.dimension(), 2);
        assert_eq!(p.evaluate(1.0).unwrap(), &[3.0, -6.0]);
        assert_eq!(p.sup_norm(), 6.0);
    }

    #[test]
    fn example3_validation() {
        assert!(YGeneratorSpec::Example3 { lambda: 0.0 }.validate().is_err());
        assert!(YGeneratorSpec::Example3 { lambda: -1.0 }.validate().is_err());
        YGeneratorSpec::Example3 { lambda: 2.0 }.validate().unwrap();
    }

    struct BadSampler;
    impl PathSampler for BadSampler {
        fn dimension(&self) -> usize {
            2
        }
        fn sample(&self, _rng: &mut dyn RngCore) -> Result<StepPath> {
            Ok(StepPath::zero(1))
        }
    }

    #[test]
    fn user_sampler_errors_propagate() {
        let spec = YGeneratorSpec::User(Arc::new(BadSampler));
        let mut rng = RngStream::new(0, 0).rng();
        assert!(matches!(
            gen_path(&spec, &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fourth_moment_audit_warns() {
        let spec = Example2Spec {
            cdfs: vec![MonotoneGrid::uniform()],
            heights: HeightSampler::Discrete {
                values: vec![vec![1.0], vec![2.0]],
                probabilities: vec![0.5, 0.5],
            },
            fourth_moment_bound: 4.0,
        };
        let mut rng = RngStream::new(1, 0).rng();
        let audit = audit_fourth_moment(&spec, 10_000, &mut rng);
        // E R^4 = (1 + 16)/2 = 8.5 > 4
        assert!(audit.exceeds_bound);
        assert!((audit.estimate - 8.5).abs() < 4.0 * audit.se + 1e-12);
    }
}
