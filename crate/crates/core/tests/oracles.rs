//! Cross-checks of library results against independent recomputations.

use lepage_core::diagnostics::*;
use lepage_core::lepage::*;
use lepage_core::random_inputs::*;
use lepage_core::StepPath;

fn example1_spec(alpha: f64, n: usize, seed: u64) -> SeriesSpec {
    SeriesSpec::new(alpha, EpsilonSpec::rademacher(), YGeneratorSpec::Example1)
        .with_truncation(n)
        .with_seed(seed)
}

/// Direct scalar evaluation of `sum Γ_i^{-1/α} ε_i 1{U_i <= t}` from the raw draws.
fn scalar_series(alpha: f64, n: usize, seed: u64, replicate: u64, t: f64) -> f64 {
    let stream = RngStream::new(seed, replicate);
    let mut gamma = 0.0;
    let mut x = 0.0;
    for i in 1..=n as u64 {
        let mut rng = stream.child(i).rng();
        gamma += exp1(&mut rng);
        let eps = EpsilonSpec::rademacher().sample(&mut rng);
        let u = open01(&mut rng);
        if u <= t {
            x += gamma.powf(-1.0 / alpha) * eps;
        }
    }
    x
}

#[test]
fn partial_sum_matches_scalar_loop() {
    for &alpha in &[0.7, 1.5] {
        let spec = example1_spec(alpha, 300, 11);
        for r in 0..5 {
            let path = partial_sum(&spec, &spec.replicate_stream(r)).unwrap().path;
            for &t in &[0.0, 0.1, 0.5, 0.999, 1.0] {
                let a = path.evaluate(t).unwrap()[0];
                let b = scalar_series(alpha, 300, 11, r, t);
                assert!(
                    (a - b).abs() <= 1e-10 * (1.0 + b.abs()),
                    "α={alpha} r={r} t={t}: {a} vs {b}"
                );
            }
        }
    }
}

#[test]
fn gamma_sequence_is_cumulative_exponentials() {
    let stream = RngStream::new(4, 2);
    let g = gamma_sequence(50, &stream);
    let mut acc = 0.0;
    for (i, v) in g.values().iter().enumerate() {
        let mut rng = stream.child(i as u64 + 1).rng();
        acc += exp1(&mut rng);
        assert_eq!(*v, acc);
    }
}

#[test]
fn gamma_mean_tracks_index() {
    let reps = 2000u64;
    let mut sum10 = 0.0;
    for r in 0..reps {
        let g = gamma_sequence(10, &RngStream::new(8, r));
        assert!(g.values().windows(2).all(|w| w[0] < w[1]));
        sum10 += g.values()[9];
    }
    let mean = sum10 / reps as f64;
    assert!((mean - 10.0).abs() <= 4.0 * (10.0 / reps as f64).sqrt(), "{mean}");
}

#[test]
fn example3_moments_match_closed_form() {
    let lambda = 2.0;
    let y = YGeneratorSpec::Example3 { lambda };
    let env = MomentEnvelope::identity(1.0);
    let pairs = [(0.1, 0.4), (0.0, 1.0)];
    let rep = estimate_c1(&y, &pairs, 20_000, &env, 3).unwrap();
    for e in &rep.entries {
        let d = e.t2 - e.t1;
        let exact = lambda * d + lambda * lambda * d * d;
        assert!((e.estimate - exact).abs() <= 4.0 * e.se, "{e:?} vs {exact}");
    }
    let triples = [(0.1, 0.3, 0.7)];
    let rep = estimate_c2(&y, &triples, 20_000, &env, 4).unwrap();
    let m = |d: f64| lambda * d + lambda * lambda * d * d;
    let exact = m(0.2) * m(0.4);
    let e = &rep.entries[0];
    assert!((e.estimate - exact).abs() <= 4.0 * e.se, "{e:?} vs {exact}");
}

#[test]
fn example1_cross_moment_vanishes() {
    let env = MomentEnvelope::identity(1.0);
    let (_, rows) = estimate_c2_raw(
        &YGeneratorSpec::Example1,
        &[(0.1, 0.5, 0.9), (0.0, 0.0, 1.0)],
        500,
        &env,
        1,
    )
    .unwrap();
    assert!(rows.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn moment_constant_matches_power_sum() {
    let e = EpsilonSpec::rademacher();
    for &(alpha, m) in &[(1.5, 2.0), (1.2, 3.0)] {
        let c = moment_constant(alpha, m, &e, 50_000).unwrap();
        let mut direct = 0.0;
        for i in (1..=50_000u64).rev() {
            direct += (i as f64).powf(-m / alpha);
        }
        assert!(((c.value - direct) / direct).abs() < 1e-12);
    }
    let small = moment_constant(1.5, 2.0, &e, 1000).unwrap().value;
    let large = moment_constant(1.5, 2.0, &e, 2000).unwrap().value;
    assert!(small <= large);
    assert!(moment_constant(1.5, 3.0, &e, 1000).unwrap().value < small);
}

#[test]
fn borel_cantelli_below_alpha_moment() {
    let e = EpsilonSpec::two_point(0.8, -1.0, 4.0);
    let r = borel_cantelli_sum(1.0, &e, 1_000_000).unwrap();
    // P(|ε| > i) = 0.2 for i < 4, else 0: sum = 0.6 <= E|ε| = 1.6
    assert!((r.sum - 0.6).abs() < 1e-15);
    assert!(r.within_bound);
}

/// Atoms of `ε̃_i`, merged on value.
fn truncated_atoms(eps: &EpsilonSpec, i: u64, alpha: f64) -> Vec<(f64, f64)> {
    eps.atoms()
        .unwrap()
        .into_iter()
        .map(|(x, p)| (truncate_epsilon(x, i, alpha), p))
        .collect()
}

/// `|E prod_j ε̃_{i_j}|` by joint enumeration over the distinct indices.
fn joint_moment(eps: &EpsilonSpec, idx: &[u64; 4], alpha: f64) -> f64 {
    let mut distinct: Vec<u64> = idx.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let atoms: Vec<Vec<(f64, f64)>> = distinct.iter().map(|&i| truncated_atoms(eps, i, alpha)).collect();
    let mut total = 0.0;
    let mut choice = vec![0usize; distinct.len()];
    loop {
        let mut p = 1.0;
        let mut prod = 1.0;
        for (k, &c) in choice.iter().enumerate() {
            p *= atoms[k][c].1;
        }
        for i in idx {
            let k = distinct.iter().position(|d| d == i).unwrap();
            prod *= atoms[k][choice[k]].0;
        }
        total += p * prod;
        let mut k = 0;
        loop {
            if k == choice.len() {
                return total.abs();
            }
            choice[k] += 1;
            if choice[k] < atoms[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

fn brute_force(eps: &EpsilonSpec, alpha: f64, n: u64) -> Vec<(String, f64)> {
    let mut by_pattern: std::collections::BTreeMap<String, f64> = Default::default();
    for a in 1..=n {
        for b in 1..=n {
            for c in 1..=n {
                for d in 1..=n {
                    let idx = [a, b, c, d];
                    let w = ((a * b * c * d) as f64).powf(-1.0 / alpha);
                    let key = Partition::of_tuple(&idx).to_string();
                    *by_pattern.entry(key).or_default() += w * joint_moment(eps, &idx, alpha);
                }
            }
        }
    }
    by_pattern.into_iter().collect()
}

#[test]
fn partition_sums_match_brute_force() {
    for (eps, alpha) in [
        (EpsilonSpec::rademacher(), 1.5),
        (EpsilonSpec::two_point(0.8, -1.0, 4.0), 1.0),
        (EpsilonSpec::two_point(0.8, -1.0, 4.0), 1.5),
    ] {
        let n = 8;
        let brute = brute_force(&eps, alpha, n);
        let total_brute: f64 = brute.iter().map(|x| x.1).sum();
        // a zero mean in exact arithmetic leaves ~1e-17 residues in floating point
        let floor = 1e-12 * total_brute;
        let mut total_lib = 0.0;
        for tau in enumerate_partitions() {
            let s = partition_sum(&tau, alpha, &eps, n).unwrap();
            let b = brute.iter().find(|(k, _)| *k == tau.to_string()).map_or(0.0, |x| x.1);
            assert!((s - b).abs() <= 1e-12 * b.abs() + floor, "{tau}: {s} vs {b}");
            let f = partition_sum_factorized(&tau, alpha, &eps, n).unwrap();
            assert!((f - s).abs() <= 1e-12 * s.abs() + floor, "{tau}: factorized {f} vs {s}");
            total_lib += s;
        }
        assert!(((total_lib - total_brute) / total_brute).abs() < 1e-12);
    }
}

#[test]
fn full_block_sum_is_fourth_moment_constant() {
    let e = EpsilonSpec::rademacher();
    let full = Partition::new(vec![vec![1, 2, 3, 4]]).unwrap();
    for n in [10, 60, 500] {
        let s = partition_sum(&full, 1.5, &e, n).unwrap();
        let c = moment_constant(1.5, 4.0, &e, n).unwrap().value;
        assert!(((s - c) / c).abs() < 1e-14, "{s} vs {c}");
    }
}

#[test]
fn partition_sums_nondecreasing_across_methods() {
    let e = EpsilonSpec::two_point(0.8, -1.0, 4.0);
    for tau in enumerate_partitions() {
        let mut prev = 0.0;
        for n in [1, 5, 30, 60, 61, 200] {
            let s = partition_sum(&tau, 1.2, &e, n).unwrap();
            assert!(s >= prev * (1.0 - 1e-12), "{tau} n={n}: {s} < {prev}");
            prev = s;
        }
    }
}

#[test]
fn partition_report_surfaces_count_discrepancy() {
    let r = partition_report(1.5, &EpsilonSpec::rademacher(), &[4, 16]).unwrap();
    assert_eq!(r.partition_count, 15);
    assert_eq!(r.stated_partition_count, 13);
    assert!(r.notes.iter().any(|n| n.contains("15") && n.contains("13")));
    let odd = r.rows.iter().find(|row| row.partition == "{1,2,3}{4}").unwrap();
    assert!(odd.alternative_bound.is_some());
}

#[test]
fn tightness_within_companion_bound() {
    let spec = SeriesSpec::new(1.5, EpsilonSpec::rademacher(), YGeneratorSpec::Example3 { lambda: 1.0 })
        .with_modes(WeightMode::Deterministic, EpsilonMode::Truncated)
        .with_seed(21);
    let (c1, c2) = default_envelopes(&spec.y_gen).unwrap();
    let r = tightness_functional(&spec, 100, (0.2, 0.5, 0.8), 3000, &c1, &c2).unwrap();
    assert!(r.estimate <= r.companion_bound + 4.0 * r.se, "{r:?}");
    assert_ne!(r.verdict, Verdict::Violated);
}

#[test]
fn coupled_sums_agree_with_direct_partial_sums() {
    let spec = example1_spec(1.2, 400, 6);
    let stream = spec.replicate_stream(3);
    let coupled = coupled_partial_sums(&spec, &stream, &[100, 400]).unwrap();
    let direct = partial_sum(&spec.clone().with_truncation(100), &stream).unwrap();
    assert_eq!(coupled[0].path, direct.path);
    let whole = partial_sum(&spec, &stream).unwrap();
    assert_eq!(coupled[1].path, whole.path);
    let _: &StepPath = &whole.path;
}
