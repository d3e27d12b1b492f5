//! Command dispatch. Every command collects its results in replicate order
//! before writing, so outputs do not depend on the thread count.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use lepage_core::diagnostics::{
    borel_cantelli_sum, centered_first_moment_sum, default_envelopes, estimate_c1, estimate_c2, head_sum_constant,
    log_grid, moment_constant, partition_report, tail_sum_constant, tightness_functional, MomentEnvelope, MomentReport,
    Verdict,
};
use lepage_core::lepage::{marginal_samples, partial_sum, EpsilonMode, SeriesSpec, WeightMode};
use lepage_core::random_inputs::{RngStream, YGeneratorSpec};
use lepage_core::stable_checks::{
    estimate_alpha, oracle_comparison, regular_variation_from_summaries, spectral_estimate, sum_stability_test,
    summarize_path, PathSummary, SampleSet,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Command, ExperimentConfig, Threads};
use crate::output::{num, opt, sha256_hex, Output};

/// Stream id of the oracle draws in `stability`, disjoint from replicate ids.
pub const ORACLE_STREAM: u64 = u64::MAX;

/// Reference oracle pairs behind the oracle comparison.
pub const ORACLE_REFERENCE_PAIRS: usize = 5;

/// Seed offset separating the spectral estimate in `regvar` from the path replicates.
pub const SPECTRAL_SEED_OFFSET: u64 = 0x5eed_5bec;

/// Grid points for the sup constants of the `constants` command.
pub const CONSTANT_GRID_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunVerdict {
    Satisfied,
    Inconclusive,
    Violated,
    Passed,
    Failed,
}

impl RunVerdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunVerdict::Violated | RunVerdict::Failed => 2,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_id: String,
    pub output_dir: PathBuf,
    pub manifest: PathBuf,
    pub verdict: Option<RunVerdict>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.verdict.map_or(0, |v| v.exit_code())
    }
}

/// First 16 hex digits of the digest of the config echo.
pub fn run_id(config: &ExperimentConfig) -> String {
    let echo = serde_json::to_vec(&config.echo()).expect("config echo serializes");
    sha256_hex(&echo)[..16].to_string()
}

/// Runs the configured command; relative pool files resolve against `base_dir`.
pub fn run(config: &ExperimentConfig, base_dir: &Path) -> anyhow::Result<RunOutcome> {
    let threads = match config.threads {
        Threads::Auto => 0,
        Threads::Count(n) => n,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("cannot start the worker pool")?;
    let started = Instant::now();
    let id = run_id(config);
    let mut out = Output::new(&config.output_dir, &config.formats, &id, config.seed)?;
    let verdict = pool.install(|| dispatch(config, base_dir, &mut out))?;
    let manifest = serde_json::json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": config.command.as_str(),
        "run_id": id,
        "seed": config.seed,
        "threads": pool.current_num_threads(),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "config": config.echo(),
        "verdict": verdict,
    });
    let output_dir = out.dir().to_path_buf();
    let manifest = out.finish(manifest)?;
    Ok(RunOutcome {
        run_id: id,
        output_dir,
        manifest,
        verdict,
    })
}

fn dispatch(config: &ExperimentConfig, base: &Path, out: &mut Output) -> anyhow::Result<Option<RunVerdict>> {
    let y = config.y_spec(base)?;
    match config.command {
        Command::Simulate => simulate(config, y, out).map(|_| None),
        Command::CheckConditions => check_conditions(config, y, out).map(Some),
        Command::Constants => constants(config, out).map(|_| None),
        Command::Partitions => partitions(config, out).map(|_| None),
        Command::Tightness => tightness(config, y, out).map(Some),
        Command::Stability => stability(config, y, out).map(Some),
        Command::Spectral => spectral(config, y, out).map(|_| None),
        Command::Regvar => regvar(config, y, out).map(|_| None),
    }
}

fn simulate(config: &ExperimentConfig, y: YGeneratorSpec, out: &mut Output) -> anyhow::Result<()> {
    let spec = config.series_spec(y);
    spec.validate()?;
    let paths = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| Ok(partial_sum(&spec, &spec.replicate_stream(r))?.path))
        .collect::<lepage_core::Result<Vec<_>>>()?;

    let mut marginals = Vec::new();
    let mut norms = Vec::new();
    let mut segments = Vec::new();
    for (r, path) in paths.iter().enumerate() {
        for &t in &config.times {
            for (k, x) in path.evaluate(t)?.iter().enumerate() {
                marginals.push(vec![r.to_string(), num(t), k.to_string(), num(*x)]);
            }
        }
        norms.push(vec![
            r.to_string(),
            num(path.sup_norm()),
            path.jump_times().len().to_string(),
        ]);
        if config.write_paths {
            for (start, value) in path.segments() {
                for (k, x) in value.iter().enumerate() {
                    segments.push(vec![r.to_string(), num(start), k.to_string(), num(*x)]);
                }
            }
        }
    }
    out.table("marginals", &["replicate", "t", "coordinate", "value"], &marginals)?;
    out.table("norms", &["replicate", "sup_norm", "jumps"], &norms)?;
    if config.write_paths {
        out.table(
            "paths",
            &["replicate", "segment_start", "coordinate", "value"],
            &segments,
        )?;
    }
    out.json(
        "simulate",
        &serde_json::json!({
            "series": spec.echo(),
            "replicates": config.replicates,
            "times": config.times,
            "sup_norms": paths.iter().map(|p| p.sup_norm()).collect::<Vec<_>>(),
            "paths": if config.write_paths { serde_json::to_value(&paths)? } else { serde_json::Value::Null },
        }),
    )
}

/// Config envelopes first, then the example defaults; C2 falls back to the C1 envelope.
fn envelopes(config: &ExperimentConfig, y: &YGeneratorSpec) -> anyhow::Result<(MomentEnvelope, MomentEnvelope)> {
    let defaults = default_envelopes(y);
    let c1 = config
        .envelope_c1
        .clone()
        .or_else(|| defaults.as_ref().map(|d| d.0.clone()))
        .context("no default moment envelope for a user generator; set [envelope] c1")?;
    let c2 = config
        .envelope_c2
        .clone()
        .or_else(|| defaults.as_ref().map(|d| d.1.clone()))
        .unwrap_or_else(|| c1.clone());
    Ok((c1, c2))
}

fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> RunVerdict {
    let mut result = RunVerdict::Satisfied;
    for v in verdicts {
        match v {
            Verdict::Violated => return RunVerdict::Violated,
            Verdict::Inconclusive => result = RunVerdict::Inconclusive,
            Verdict::Satisfied => {}
        }
    }
    result
}

fn moment_rows(report: &MomentReport, condition: &str, rows: &mut Vec<Vec<String>>) {
    for e in &report.entries {
        rows.push(vec![
            condition.to_string(),
            num(e.t1),
            opt(e.t),
            num(e.t2),
            num(e.estimate),
            num(e.se),
            num(e.envelope),
            e.verdict.as_str().to_string(),
        ]);
    }
}

fn check_conditions(config: &ExperimentConfig, y: YGeneratorSpec, out: &mut Output) -> anyhow::Result<RunVerdict> {
    let (c1, c2) = envelopes(config, &y)?;
    let r1 = estimate_c1(&y, &config.pairs, config.replicates, &c1, config.seed)?;
    let r2 = estimate_c2(&y, &config.triples, config.replicates, &c2, config.seed)?;
    let mut rows = Vec::new();
    moment_rows(&r1, "c1", &mut rows);
    moment_rows(&r2, "c2", &mut rows);
    out.table(
        "conditions",
        &["condition", "t1", "t", "t2", "estimate", "se", "envelope", "verdict"],
        &rows,
    )?;
    out.json("conditions", &serde_json::json!({ "c1": r1, "c2": r2 }))?;
    Ok(combine(r1.entries.iter().chain(&r2.entries).map(|e| e.verdict)))
}

fn constants(config: &ExperimentConfig, out: &mut Output) -> anyhow::Result<()> {
    let (alpha, n_max) = (config.alpha, config.n_max);
    let eps = config.epsilon_spec();
    let grid = log_grid(1.0, n_max.max(2) as f64, CONSTANT_GRID_POINTS);
    let mut rows = Vec::new();
    let mut doc = serde_json::Map::new();
    let mut moments = Vec::new();
    for &m in &config.moments {
        let c = moment_constant(alpha, m, &eps, n_max)?;
        let note = format!(
            "last decade share {}; {}",
            num(c.last_decade_fraction),
            if c.converged { "converged" } else { "not converged" }
        );
        rows.push(vec![
            "moment_constant".into(),
            num(m),
            n_max.to_string(),
            num(c.value),
            note,
        ]);
        let tail = tail_sum_constant(alpha, m, &grid)?;
        rows.push(vec![
            "tail_sum_constant".into(),
            num(m),
            n_max.to_string(),
            num(tail),
            format!("grid sup; limit α/(m-α) = {}", num(alpha / (m - alpha))),
        ]);
        moments.push(serde_json::json!({ "moment_constant": c, "tail_sum_constant": tail }));
    }
    doc.insert("moments".into(), moments.into());
    if eps.is_mean_zero() {
        let c = centered_first_moment_sum(alpha, &eps, n_max)?;
        rows.push(vec![
            "centered_first_moment_sum".into(),
            num(1.0),
            n_max.to_string(),
            num(c),
            "sum of i^(-1/α) |E ε̃_i|".into(),
        ]);
        doc.insert("centered_first_moment_sum".into(), c.into());
    }
    let bc = borel_cantelli_sum(alpha, &eps, n_max)?;
    rows.push(vec![
        "borel_cantelli_sum".into(),
        num(alpha),
        n_max.to_string(),
        num(bc.sum),
        format!(
            "E|ε|^α = {}; {}",
            num(bc.alpha_moment),
            if bc.within_bound {
                "within bound"
            } else {
                "exceeds bound"
            }
        ),
    ]);
    doc.insert("borel_cantelli".into(), serde_json::to_value(bc)?);
    if alpha > 1.0 {
        let c = head_sum_constant(alpha, &grid);
        rows.push(vec![
            "head_sum_constant".into(),
            num(1.0),
            n_max.to_string(),
            num(c),
            format!("grid sup; limit α/(α-1) = {}", num(alpha / (alpha - 1.0))),
        ]);
        doc.insert("head_sum_constant".into(), c.into());
    }
    out.table("constants", &["quantity", "m", "n_max", "value", "note"], &rows)?;
    out.json("constants", &doc)
}

fn partitions(config: &ExperimentConfig, out: &mut Output) -> anyhow::Result<()> {
    let report = partition_report(config.alpha, &config.epsilon_spec(), &config.n_grid)?;
    let mut sums = Vec::new();
    let mut bounds = Vec::new();
    for row in &report.rows {
        let sizes = row
            .block_sizes
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" ");
        for (n, s) in report.n_grid.iter().zip(&row.sums) {
            sums.push(vec![row.partition.clone(), sizes.clone(), n.to_string(), num(*s)]);
        }
        bounds.push(vec![
            row.partition.clone(),
            row.bound.label.clone(),
            num(row.bound.value),
            row.alternative_bound
                .as_ref()
                .map(|b| b.label.clone())
                .unwrap_or_default(),
            opt(row.alternative_bound.as_ref().map(|b| b.value)),
            num(row.dtau_exponent.0),
            num(row.dtau_exponent.1),
        ]);
    }
    let totals: Vec<Vec<String>> = report
        .n_grid
        .iter()
        .zip(&report.totals)
        .map(|(n, t)| vec![n.to_string(), num(*t)])
        .collect();
    let summary: Vec<Vec<String>> = [
        ("partition_count".to_string(), report.partition_count.to_string()),
        (
            "stated_partition_count".to_string(),
            report.stated_partition_count.to_string(),
        ),
    ]
    .into_iter()
    .chain(report.notes.iter().map(|n| ("note".to_string(), n.clone())))
    .map(|(k, v)| vec![k, v])
    .collect();
    out.table("partitions", &["partition", "block_sizes", "n", "sum"], &sums)?;
    out.table(
        "partition_bounds",
        &[
            "partition",
            "bound",
            "bound_value",
            "alternative_bound",
            "alternative_value",
            "beta1_exponent",
            "beta2_exponent",
        ],
        &bounds,
    )?;
    out.table("partition_totals", &["n", "total"], &totals)?;
    out.table("partition_summary", &["key", "value"], &summary)?;
    out.json("partitions", &report)
}

fn tightness(config: &ExperimentConfig, y: YGeneratorSpec, out: &mut Output) -> anyhow::Result<RunVerdict> {
    if config.weight_mode.is_some_and(|m| m != WeightMode::Deterministic)
        || config.epsilon_mode.is_some_and(|m| m != EpsilonMode::Truncated)
    {
        anyhow::bail!("tightness needs weight_mode = \"deterministic\" and epsilon_mode = \"truncated\"");
    }
    let (c1, c2) = envelopes(config, &y)?;
    let spec: SeriesSpec = config
        .series_spec(y)
        .with_modes(WeightMode::Deterministic, EpsilonMode::Truncated);
    let results = config
        .triples
        .iter()
        .map(|&triple| tightness_functional(&spec, config.n, triple, config.replicates, &c1, &c2))
        .collect::<lepage_core::Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut terms = Vec::new();
    for (k, r) in results.iter().enumerate() {
        let (t1, t, t2) = r.triple;
        rows.push(vec![
            k.to_string(),
            num(t1),
            num(t),
            num(t2),
            r.n.to_string(),
            num(r.estimate),
            num(r.se),
            num(r.companion_bound),
            num(r.bounds.left),
            num(r.bounds.right),
            num(r.bounds.joint),
            r.verdict.as_str().to_string(),
        ]);
        for term in &r.terms {
            terms.push(vec![
                k.to_string(),
                term.partition.clone(),
                num(term.sum),
                num(term.dtau),
            ]);
        }
    }
    out.table(
        "tightness",
        &[
            "triple",
            "t1",
            "t",
            "t2",
            "n",
            "estimate",
            "se",
            "companion_bound",
            "left",
            "right",
            "joint",
            "verdict",
        ],
        &rows,
    )?;
    out.table("tightness_terms", &["triple", "partition", "sum", "dtau"], &terms)?;
    out.json("tightness", &results)?;
    Ok(combine(results.iter().map(|r| r.verdict)))
}

fn stability(config: &ExperimentConfig, y: YGeneratorSpec, out: &mut Output) -> anyhow::Result<RunVerdict> {
    let spec = config.series_spec(y);
    let source = spec.echo();
    let values = marginal_samples(&spec, config.t, config.replicates)?;
    let samples = SampleSet::marginal(values, source, config.t);
    let estimate = estimate_alpha(&samples, config.u_window, config.grid_size)?;
    let test = sum_stability_test(&samples, config.alpha)?;
    let comparison = if config.oracle_compare {
        let mut rng = RngStream::new(config.seed, ORACLE_STREAM).rng();
        Some(oracle_comparison(
            &samples,
            config.alpha,
            ORACLE_REFERENCE_PAIRS,
            &mut rng,
        )?)
    } else {
        None
    };
    let passed = test.passes && comparison.as_ref().is_none_or(|c| c.passes);
    let mut rows = vec![
        vec![
            "alpha_estimate".into(),
            num(estimate.alpha),
            num(estimate.se),
            String::new(),
            String::new(),
        ],
        vec![
            "sum_stability_ks".into(),
            num(test.ks),
            String::new(),
            num(test.threshold),
            if test.passes { "pass" } else { "fail" }.into(),
        ],
    ];
    if let Some(c) = &comparison {
        rows.push(vec![
            "oracle_ks".into(),
            num(c.ks),
            String::new(),
            num(2.0 * c.reference_median),
            if c.passes { "pass" } else { "fail" }.into(),
        ]);
    }
    out.table("stability", &["quantity", "value", "se", "threshold", "result"], &rows)?;
    out.json(
        "stability",
        &serde_json::json!({
            "samples": samples.len(),
            "low_power": test.low_power,
            "alpha_estimate": estimate,
            "sum_stability": test,
            "oracle_comparison": comparison,
        }),
    )?;
    Ok(if passed { RunVerdict::Passed } else { RunVerdict::Failed })
}

fn spectral(config: &ExperimentConfig, y: YGeneratorSpec, out: &mut Output) -> anyhow::Result<()> {
    let events = config.named_events();
    let est = spectral_estimate(
        &config.epsilon_spec(),
        &y,
        config.alpha,
        &events,
        config.replicates,
        config.seed,
    )?;
    let mut rows: Vec<Vec<String>> = est
        .event_masses
        .iter()
        .map(|m| vec![m.name.clone(), num(m.mass), num(m.se)])
        .collect();
    rows.push(vec!["normalizer".into(), num(est.normalizer), num(est.normalizer_se)]);
    out.table("spectral", &["event", "mass", "se"], &rows)?;
    out.json("spectral", &est)
}

fn regvar(config: &ExperimentConfig, y: YGeneratorSpec, out: &mut Output) -> anyhow::Result<()> {
    let events = config.named_events();
    let sigma = spectral_estimate(
        &config.epsilon_spec(),
        &y,
        config.alpha,
        &events,
        config.spectral_replicates,
        config.seed.wrapping_add(SPECTRAL_SEED_OFFSET),
    )?;
    let spec = config.series_spec(y);
    spec.validate()?;
    let summaries = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| {
            Ok(summarize_path(
                &partial_sum(&spec, &spec.replicate_stream(r))?.path,
                &events,
            ))
        })
        .collect::<lepage_core::Result<Vec<PathSummary>>>()?;
    let table = regular_variation_from_summaries(
        &summaries,
        &events,
        &config.r_grid,
        config.n,
        config.alpha,
        Some(&sigma),
    )?;
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.r),
                num(r.threshold),
                r.exceedances.to_string(),
                num(r.scaled_tail),
                num(r.predicted_tail),
                opt(r.tail_ratio),
                opt(r.tail_ratio_se),
                num(r.predicted_ratio),
            ]
        })
        .collect();
    let event_rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .flat_map(|r| {
            r.events.iter().map(move |e| {
                vec![
                    num(r.r),
                    e.name.clone(),
                    e.hits.to_string(),
                    opt(e.probability),
                    opt(e.se),
                    opt(e.predicted),
                    opt(e.predicted_se),
                ]
            })
        })
        .collect();
    out.table(
        "regvar",
        &[
            "r",
            "threshold",
            "exceedances",
            "scaled_tail",
            "predicted_tail",
            "tail_ratio",
            "tail_ratio_se",
            "predicted_ratio",
        ],
        &rows,
    )?;
    out.table(
        "regvar_events",
        &["r", "event", "hits", "probability", "se", "predicted", "predicted_se"],
        &event_rows,
    )?;
    out.json("regvar", &serde_json::json!({ "table": table, "spectral": sigma }))
}
