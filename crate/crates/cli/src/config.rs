//! Strict TOML experiment configuration.
//!
//! Series fields sit at the top level next to `command`:
//!
//! ```toml
//! command = "simulate"
//! alpha = 1.5
//! epsilon = "rademacher"
//! y = "example1"
//! ```
//!
//! Unknown keys, and keys that the chosen command does not read, are errors.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use lepage_core::diagnostics::MomentEnvelope;
use lepage_core::lepage::{EpsilonMode, SeriesSpec, WeightMode, DEFAULT_TRUNCATION};
use lepage_core::random_inputs::{EpsilonFamily, EpsilonSpec, Example2Spec, PathPool, YGeneratorSpec};
use lepage_core::stable_checks::{NamedEvent, SphereEvent};
use lepage_core::StepPath;
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use toml::Spanned;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("config{}: {message}", .line.map(|l| format!(" line {l}")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    CheckConditions,
    Constants,
    Partitions,
    Tightness,
    Stability,
    Spectral,
    Regvar,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::CheckConditions => "check-conditions",
            Command::Constants => "constants",
            Command::Partitions => "partitions",
            Command::Tightness => "tightness",
            Command::Stability => "stability",
            Command::Spectral => "spectral",
            Command::Regvar => "regvar",
        }
    }

    /// Command-specific keys this command reads.
    fn keys(&self) -> &'static [&'static str] {
        match self {
            Command::Simulate => &["times", "write_paths"],
            Command::CheckConditions => &["pairs", "triples", "envelope"],
            Command::Constants => &["n_max", "moments"],
            Command::Partitions => &["n_grid"],
            Command::Tightness => &["n", "triples", "envelope"],
            Command::Stability => &["t", "u_window", "grid_size", "oracle_compare"],
            Command::Spectral => &["events"],
            Command::Regvar => &["n", "r_grid", "events", "spectral_replicates"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?}; expected csv or json")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Threads {
    Auto,
    Count(usize),
}

impl std::str::FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "auto" => Ok(Threads::Auto),
            n => match n.parse::<usize>() {
                Ok(0) | Err(_) => Err(format!("threads must be a positive count or \"auto\", got {n:?}")),
                Ok(k) => Ok(Threads::Count(k)),
            },
        }
    }
}

impl<'de> Deserialize<'de> for Threads {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Threads;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive integer or \"auto\"")
            }
            fn visit_str<E: de::Error>(self, s: &str) -> Result<Threads, E> {
                s.parse().map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, n: i64) -> Result<Threads, E> {
                n.to_string().parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// `epsilon = "rademacher"` or `epsilon = { family = "two_point", p = 0.8, x_neg = -1, x_pos = 4 }`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonInput(pub EpsilonFamily);

impl<'de> Deserialize<'de> for EpsilonInput {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = EpsilonInput;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"rademacher\" or a table with a `family` key")
            }
            fn visit_str<E: de::Error>(self, s: &str) -> Result<EpsilonInput, E> {
                match s {
                    "rademacher" => Ok(EpsilonInput(EpsilonFamily::Rademacher)),
                    "uniform_symmetric" | "two_point" | "table" => {
                        Err(E::custom(format!("epsilon family {s:?} needs parameters; use a table")))
                    }
                    other => Err(E::custom(format!(
                        "unknown epsilon family {other:?}; expected rademacher, uniform_symmetric, two_point or table"
                    ))),
                }
            }
            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<EpsilonInput, A::Error> {
                EpsilonFamily::deserialize(de::value::MapAccessDeserializer::new(map)).map(EpsilonInput)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum YTable {
    Example1,
    Example2(Example2Spec),
    Example3 {
        #[serde(default = "unit")]
        lambda: f64,
    },
    /// The same path in every draw.
    Fixed {
        path: StepPath,
    },
    /// Uniform draw from step-path CSV files.
    Pool {
        files: Vec<PathBuf>,
    },
}

fn unit() -> f64 {
    1.0
}

/// `y = "example1"`, `y = "example3"` or a table with a `kind` key.
#[derive(Debug, Clone, PartialEq)]
pub struct YInput(pub YTable);

impl<'de> Deserialize<'de> for YInput {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = YInput;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"example1\", \"example3\" or a table with a `kind` key")
            }
            fn visit_str<E: de::Error>(self, s: &str) -> Result<YInput, E> {
                match s {
                    "example1" => Ok(YInput(YTable::Example1)),
                    "example3" => Ok(YInput(YTable::Example3 { lambda: 1.0 })),
                    "example2" | "fixed" | "pool" => {
                        Err(E::custom(format!("y kind {s:?} needs parameters; use a table")))
                    }
                    other => Err(E::custom(format!(
                        "unknown y generator {other:?}; expected example1, example2, example3, fixed or pool"
                    ))),
                }
            }
            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<YInput, A::Error> {
                YTable::deserialize(de::value::MapAccessDeserializer::new(map)).map(YInput)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeInput {
    pub c1: Option<MomentEnvelope>,
    pub c2: Option<MomentEnvelope>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EventInput {
    pub name: String,
    pub event: SphereEvent,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputInput {
    pub directory: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Spanned<Command>,
    alpha: Spanned<f64>,
    epsilon: Spanned<EpsilonInput>,
    y: Spanned<YInput>,
    truncation_n: Option<Spanned<u64>>,
    replicates: Option<Spanned<u64>>,
    seed: Option<u64>,
    threads: Option<Threads>,
    weight_mode: Option<Spanned<WeightMode>>,
    epsilon_mode: Option<Spanned<EpsilonMode>>,
    output: Option<OutputInput>,

    times: Option<Spanned<Vec<f64>>>,
    write_paths: Option<Spanned<bool>>,
    pairs: Option<Spanned<Vec<[f64; 2]>>>,
    triples: Option<Spanned<Vec<[f64; 3]>>>,
    envelope: Option<Spanned<EnvelopeInput>>,
    n_max: Option<Spanned<u64>>,
    moments: Option<Spanned<Vec<f64>>>,
    n_grid: Option<Spanned<Vec<u64>>>,
    n: Option<Spanned<u64>>,
    t: Option<Spanned<f64>>,
    u_window: Option<Spanned<[f64; 2]>>,
    grid_size: Option<Spanned<u64>>,
    oracle_compare: Option<Spanned<bool>>,
    events: Option<Spanned<Vec<EventInput>>>,
    r_grid: Option<Spanned<Vec<f64>>>,
    spectral_replicates: Option<Spanned<u64>>,
}

/// Validated configuration with defaults applied.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: Command,
    pub alpha: f64,
    pub epsilon: EpsilonFamily,
    pub y: YTable,
    pub truncation_n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub threads: Threads,
    pub weight_mode: Option<WeightMode>,
    pub epsilon_mode: Option<EpsilonMode>,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,

    pub times: Vec<f64>,
    pub write_paths: bool,
    pub pairs: Vec<(f64, f64)>,
    pub triples: Vec<(f64, f64, f64)>,
    pub envelope_c1: Option<MomentEnvelope>,
    pub envelope_c2: Option<MomentEnvelope>,
    pub n_max: u64,
    pub moments: Vec<f64>,
    pub n_grid: Vec<u64>,
    pub n: usize,
    pub t: f64,
    pub u_window: Option<(f64, f64)>,
    pub grid_size: usize,
    pub oracle_compare: bool,
    pub events: Vec<EventInput>,
    pub r_grid: Vec<f64>,
    pub spectral_replicates: usize,
}

pub const DEFAULT_OUTPUT_DIR: &str = "lepage-out";

fn grid_pairs() -> Vec<(f64, f64)> {
    (0..10)
        .map(|k| (k as f64 / 10.0, (k + 1) as f64 / 10.0 + k as f64 / 100.0))
        .map(|(a, b)| (a, b.min(1.0)))
        .collect()
}

fn grid_triples() -> Vec<(f64, f64, f64)> {
    (0..10)
        .map(|k| {
            let t1 = k as f64 / 20.0;
            let t2 = (t1 + 0.1 + k as f64 / 20.0).min(1.0);
            (t1, 0.5 * (t1 + t2), t2)
        })
        .collect()
}

fn default_events() -> Vec<EventInput> {
    [
        ("full_sphere", SphereEvent::FullSphere),
        ("nonnegative", SphereEvent::Nonnegative),
        ("nonpositive", SphereEvent::Nonpositive),
        ("positive_peak", SphereEvent::PositivePeak),
        ("negative_peak", SphereEvent::NegativePeak),
    ]
    .into_iter()
    .map(|(name, event)| EventInput {
        name: name.into(),
        event,
    })
    .collect()
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err<T>(&self, span: std::ops::Range<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError {
            line: Some(line_of(self.text, span.start)),
            message: message.into(),
        })
    }
}

fn check_unit_interval(ctx: &Ctx, key: &str, span: std::ops::Range<usize>, xs: &[f64]) -> Result<(), ConfigError> {
    if let Some(x) = xs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return ctx.err(span, format!("`{key}`: time {x} outside [0, 1]"));
    }
    Ok(())
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    let ctx = Ctx { text };
    let command = *raw.command.get_ref();

    let present: [(&str, Option<std::ops::Range<usize>>); 15] = [
        ("times", raw.times.as_ref().map(Spanned::span)),
        ("write_paths", raw.write_paths.as_ref().map(Spanned::span)),
        ("pairs", raw.pairs.as_ref().map(Spanned::span)),
        ("triples", raw.triples.as_ref().map(Spanned::span)),
        ("envelope", raw.envelope.as_ref().map(Spanned::span)),
        ("n_max", raw.n_max.as_ref().map(Spanned::span)),
        ("moments", raw.moments.as_ref().map(Spanned::span)),
        ("n_grid", raw.n_grid.as_ref().map(Spanned::span)),
        ("n", raw.n.as_ref().map(Spanned::span)),
        ("t", raw.t.as_ref().map(Spanned::span)),
        ("u_window", raw.u_window.as_ref().map(Spanned::span)),
        ("grid_size", raw.grid_size.as_ref().map(Spanned::span)),
        ("oracle_compare", raw.oracle_compare.as_ref().map(Spanned::span)),
        ("events", raw.events.as_ref().map(Spanned::span)),
        ("r_grid", raw.r_grid.as_ref().map(Spanned::span)),
    ];
    for (key, span) in present {
        if let Some(span) = span {
            if !command.keys().contains(&key) {
                return ctx.err(
                    span,
                    format!("key `{key}` is not used by command `{}`", command.as_str()),
                );
            }
        }
    }
    if let Some(s) = &raw.spectral_replicates {
        if command != Command::Regvar {
            return ctx.err(
                s.span(),
                format!(
                    "key `spectral_replicates` is not used by command `{}`",
                    command.as_str()
                ),
            );
        }
    }

    let alpha = *raw.alpha.get_ref();
    if !(alpha > 0.0 && alpha < 2.0) {
        return ctx.err(raw.alpha.span(), format!("alpha = {alpha} violates α ∈ (0,2)"));
    }
    let epsilon = raw.epsilon.get_ref().0.clone();
    if let Err(e) = EpsilonSpec::from(epsilon.clone()).validate(Some(alpha)) {
        return ctx.err(raw.epsilon.span(), e.to_string());
    }

    let truncation_n = match &raw.truncation_n {
        Some(s) if *s.get_ref() == 0 => return ctx.err(s.span(), "truncation_n must be positive"),
        Some(s) => *s.get_ref() as usize,
        None => DEFAULT_TRUNCATION,
    };
    let replicates = raw.replicates.as_ref().map_or(1, |s| *s.get_ref() as usize);

    let times = match &raw.times {
        Some(s) => {
            check_unit_interval(&ctx, "times", s.span(), s.get_ref())?;
            s.get_ref().clone()
        }
        None => vec![0.25, 0.5, 0.75, 1.0],
    };
    let pairs = match &raw.pairs {
        Some(s) => {
            for p in s.get_ref() {
                if !(0.0 <= p[0] && p[0] <= p[1] && p[1] <= 1.0) {
                    return ctx.err(s.span(), format!("`pairs`: {p:?} must satisfy 0 <= t1 <= t2 <= 1"));
                }
            }
            s.get_ref().iter().map(|p| (p[0], p[1])).collect()
        }
        None => grid_pairs(),
    };
    let triples = match &raw.triples {
        Some(s) => {
            for p in s.get_ref() {
                if !(0.0 <= p[0] && p[0] <= p[1] && p[1] <= p[2] && p[2] <= 1.0) {
                    return ctx.err(
                        s.span(),
                        format!("`triples`: {p:?} must satisfy 0 <= t1 <= t <= t2 <= 1"),
                    );
                }
            }
            s.get_ref().iter().map(|p| (p[0], p[1], p[2])).collect()
        }
        None => grid_triples(),
    };
    let (envelope_c1, envelope_c2) = match &raw.envelope {
        Some(s) => {
            for e in [&s.get_ref().c1, &s.get_ref().c2].into_iter().flatten() {
                if let Err(err) = e.validate() {
                    return ctx.err(s.span(), format!("`envelope`: {err}"));
                }
            }
            (s.get_ref().c1.clone(), s.get_ref().c2.clone())
        }
        None => (None, None),
    };
    let moments = match &raw.moments {
        Some(s) => {
            if let Some(m) = s.get_ref().iter().find(|m| !(**m > alpha)) {
                return ctx.err(
                    s.span(),
                    format!("`moments`: m = {m} must exceed alpha = {alpha} (C(α,m) diverges)"),
                );
            }
            s.get_ref().clone()
        }
        None => [2.0, 3.0, 4.0].into_iter().filter(|m| *m > alpha).collect(),
    };
    let u_window = match &raw.u_window {
        Some(s) => {
            let [a, b] = *s.get_ref();
            if !(0.0 < a && a < b) {
                return ctx.err(s.span(), "`u_window` must satisfy 0 < u_min < u_max");
            }
            Some((a, b))
        }
        None => None,
    };
    let t = match &raw.t {
        Some(s) => {
            check_unit_interval(&ctx, "t", s.span(), &[*s.get_ref()])?;
            *s.get_ref()
        }
        None => 1.0,
    };
    let r_grid = match &raw.r_grid {
        Some(s) => {
            if s.get_ref().is_empty() || s.get_ref().iter().any(|r| !(*r > 0.0)) {
                return ctx.err(s.span(), "`r_grid` needs positive radii");
            }
            s.get_ref().clone()
        }
        None => vec![1.0, 2.0, 4.0],
    };
    let events = match &raw.events {
        Some(s) => {
            for e in s.get_ref() {
                if let Err(err) = e.event.validate() {
                    return ctx.err(s.span(), format!("event {:?}: {err}", e.name));
                }
            }
            s.get_ref().clone()
        }
        None => default_events(),
    };
    let n = match &raw.n {
        Some(s) if *s.get_ref() == 0 => return ctx.err(s.span(), "`n` must be positive"),
        Some(s) => *s.get_ref() as usize,
        None => 100,
    };
    let grid_size = match &raw.grid_size {
        Some(s) if *s.get_ref() < 2 => return ctx.err(s.span(), "`grid_size` must be at least 2"),
        Some(s) => *s.get_ref() as usize,
        None => 20,
    };

    let output = raw.output.unwrap_or_default();
    Ok(ExperimentConfig {
        command,
        alpha,
        epsilon,
        y: raw.y.into_inner().0,
        truncation_n,
        replicates,
        seed: raw.seed.unwrap_or(0),
        threads: raw.threads.unwrap_or(Threads::Auto),
        weight_mode: raw.weight_mode.map(Spanned::into_inner),
        epsilon_mode: raw.epsilon_mode.map(Spanned::into_inner),
        output_dir: output.directory.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        formats: output.formats.unwrap_or_else(|| vec![Format::Csv, Format::Json]),
        times,
        write_paths: raw.write_paths.is_some_and(Spanned::into_inner),
        pairs,
        triples,
        envelope_c1,
        envelope_c2,
        n_max: raw.n_max.map_or(100_000, Spanned::into_inner),
        moments,
        n_grid: raw
            .n_grid
            .map_or_else(|| vec![1, 2, 4, 8, 16, 32, 60], Spanned::into_inner),
        n,
        t,
        u_window,
        grid_size,
        oracle_compare: raw.oracle_compare.is_some_and(Spanned::into_inner),
        events,
        r_grid,
        spectral_replicates: raw.spectral_replicates.map_or(10_000, |s| s.into_inner() as usize),
    })
}

impl ExperimentConfig {
    pub fn epsilon_spec(&self) -> EpsilonSpec {
        self.epsilon.clone().into()
    }

    /// Builds the generator; pool files are resolved against `base`.
    pub fn y_spec(&self, base: &Path) -> anyhow::Result<YGeneratorSpec> {
        Ok(match &self.y {
            YTable::Example1 => YGeneratorSpec::Example1,
            YTable::Example2(s) => YGeneratorSpec::Example2(s.clone()),
            YTable::Example3 { lambda } => YGeneratorSpec::Example3 { lambda: *lambda },
            YTable::Fixed { path } => {
                YGeneratorSpec::User(Arc::new(PathPool::new(vec![path.clone()], vec!["config".into()])?))
            }
            YTable::Pool { files } => {
                let mut paths = Vec::with_capacity(files.len());
                for f in files {
                    let full = base.join(f);
                    let file = std::fs::File::open(&full)
                        .map_err(|e| anyhow::anyhow!("cannot open path file {}: {e}", full.display()))?;
                    let path = StepPath::read_csv(std::io::BufReader::new(file))
                        .map_err(|e| anyhow::anyhow!("{}: {e}", full.display()))?;
                    paths.push(path);
                }
                let sources = files.iter().map(|f| f.display().to_string()).collect();
                YGeneratorSpec::User(Arc::new(PathPool::new(paths, sources)?))
            }
        })
    }

    pub fn series_spec(&self, y: YGeneratorSpec) -> SeriesSpec {
        SeriesSpec::new(self.alpha, self.epsilon_spec(), y)
            .with_truncation(self.truncation_n)
            .with_seed(self.seed)
            .with_modes(
                self.weight_mode.unwrap_or(WeightMode::Gamma),
                self.epsilon_mode.unwrap_or(EpsilonMode::Raw),
            )
    }

    pub fn named_events(&self) -> Vec<NamedEvent> {
        self.events
            .iter()
            .map(|e| NamedEvent::builtin(e.name.clone(), e.event.clone()))
            .collect()
    }

    /// Everything that determines the results; excludes threads and the output location.
    pub fn echo(&self) -> serde_json::Value {
        let y = match &self.y {
            YTable::Example1 => serde_json::json!({ "kind": "example1" }),
            YTable::Example2(s) => serde_json::json!({ "kind": "example2", "spec": s }),
            YTable::Example3 { lambda } => serde_json::json!({ "kind": "example3", "lambda": lambda }),
            YTable::Fixed { path } => serde_json::json!({ "kind": "fixed", "path": path }),
            YTable::Pool { files } => serde_json::json!({ "kind": "pool", "files": files }),
        };
        let mut v = serde_json::json!({
            "command": self.command.as_str(),
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "y": y,
            "truncation_n": self.truncation_n,
            "replicates": self.replicates,
            "seed": self.seed,
            "weight_mode": self.weight_mode,
            "epsilon_mode": self.epsilon_mode,
        });
        let extra = match self.command {
            Command::Simulate => serde_json::json!({ "times": self.times, "write_paths": self.write_paths }),
            Command::CheckConditions => serde_json::json!({
                "pairs": self.pairs, "triples": self.triples,
                "envelope_c1": self.envelope_c1, "envelope_c2": self.envelope_c2,
            }),
            Command::Constants => serde_json::json!({ "n_max": self.n_max, "moments": self.moments }),
            Command::Partitions => serde_json::json!({ "n_grid": self.n_grid }),
            Command::Tightness => serde_json::json!({
                "n": self.n, "triples": self.triples,
                "envelope_c1": self.envelope_c1, "envelope_c2": self.envelope_c2,
            }),
            Command::Stability => serde_json::json!({
                "t": self.t, "u_window": self.u_window, "grid_size": self.grid_size,
                "oracle_compare": self.oracle_compare,
            }),
            Command::Spectral => serde_json::json!({ "events": self.events }),
            Command::Regvar => serde_json::json!({
                "n": self.n, "r_grid": self.r_grid, "events": self.events,
                "spectral_replicates": self.spectral_replicates,
            }),
        };
        if let (Some(obj), serde_json::Value::Object(extra)) = (v.as_object_mut(), extra) {
            obj.extend(extra);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "command = \"simulate\"\nalpha = 1.5\nepsilon = \"rademacher\"\ny = \"example1\"\n";

    #[test]
    fn minimal_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.truncation_n, 10_000);
        assert_eq!(c.replicates, 1);
        assert_eq!(c.seed, 0);
        assert_eq!(c.threads, Threads::Auto);
        assert_eq!(c.formats, vec![Format::Csv, Format::Json]);
    }

    #[test]
    fn alpha_two_rejected_with_line() {
        let e = parse_config(&MINIMAL.replace("alpha = 1.5", "alpha = 2.0")).unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("α ∈ (0,2)"), "{e}");
    }

    #[test]
    fn nonzero_mean_rejected() {
        let text = MINIMAL.replace(
            "epsilon = \"rademacher\"",
            "epsilon = { family = \"two_point\", p = 0.5, x_neg = -1.0, x_pos = 4.0 }",
        );
        let e = parse_config(&text).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("E ε_1 = 0"), "{e}");
    }

    #[test]
    fn unknown_and_misplaced_keys() {
        let e = parse_config(&format!("{MINIMAL}bogus = 3\n")).unwrap_err();
        assert!(e.message.contains("bogus"), "{e}");
        assert_eq!(e.line, Some(5));
        let e = parse_config(&format!("{MINIMAL}r_grid = [1.0]\n")).unwrap_err();
        assert!(e.message.contains("r_grid"), "{e}");
    }

    #[test]
    fn table_forms() {
        let text = "command = \"check-conditions\"\nalpha = 0.8\nreplicates = 200\n\
                    epsilon = { family = \"uniform_symmetric\", a = 2.0 }\n\
                    y = { kind = \"fixed\", path = { dimension = 1, initial_value = [0.0], jump_times = [0.5], post_jump_values = [[10.0]] } }\n\
                    [envelope]\nc1 = { function = { kind = \"identity\" }, beta = 1.0 }\n";
        let c = parse_config(text).unwrap();
        assert!(matches!(c.y, YTable::Fixed { .. }));
        assert!(c.envelope_c1.is_some());
        let e3 = parse_config(&MINIMAL.replace("\"example1\"", "{ kind = \"example3\", lambda = 2.0 }")).unwrap();
        assert_eq!(e3.y, YTable::Example3 { lambda: 2.0 });
    }

    #[test]
    fn threads_parse() {
        assert_eq!("auto".parse::<Threads>().unwrap(), Threads::Auto);
        assert_eq!("4".parse::<Threads>().unwrap(), Threads::Count(4));
        assert!("0".parse::<Threads>().is_err());
    }
}
