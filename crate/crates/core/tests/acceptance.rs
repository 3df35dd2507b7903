//! Acceptance criteria. Each test prints one PASS/FAIL line with the number
//! it was judged on and its wall time, then asserts.

use std::process::Command;
use std::time::{Duration, Instant};

use qlab::dynamics::{audit_convex_linearity, canonical_witness, DEFAULT_AUDIT_TOL};
use qlab::gpt::{certificate_pairs, gpt_convex_linearity_check, DEFAULT_GPT_TOL};
use qlab::kernel::{c64, ComplexMatrix};
use qlab::lab::{run_friend_protocol, theorem1_verify, LabScenario};
use qlab::suite::{
    linear_map, purify_branch, quarter_decompositions, suite_scenarios, taxonomy, taxonomy_verdicts, BRANCH_WEIGHTS,
};
use qlab::{build_ic_povm, sampling, DecoratedState, DensityMatrix, DynamicalMap, Povm, Preparation, Verdict};

fn verdict(n: u32, name: &str, ok: bool, detail: String, elapsed: Duration, limit: Duration) {
    let in_time = elapsed < limit;
    println!(
        "criterion {n} [{}] {name}: {detail} ({:.1} ms, limit {} s)",
        if ok && in_time { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64() * 1e3,
        limit.as_secs()
    );
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
    assert!(in_time, "criterion {n} ({name}) exceeded {limit:?}: took {elapsed:?}");
}

/// `sum_k lambda_k <k|E|k>` for each effect: the statistics of
/// `diag(lambda)` computed entrywise.
fn diagonal_statistics(povm: &Povm, lambda: &[f64]) -> Vec<f64> {
    povm.effects()
        .iter()
        .map(|e| lambda.iter().enumerate().map(|(k, l)| l * e[(k, k)].re).sum())
        .collect()
}

#[test]
fn criterion_1_reduced_marginals() {
    let t = Instant::now();
    let frames: Vec<_> = (0..=5).map(|d| (d >= 2).then(|| build_ic_povm(d, 0).unwrap())).collect();
    let mut gap = 0.0f64;
    let mut oracle_gap = 0.0f64;
    for s in suite_scenarios(0) {
        let ic = frames[s.system_dim()].as_ref().unwrap();
        gap = gap.max(theorem1_verify(&s, ic).unwrap());
        let expect = diagonal_statistics(ic.povm(), s.weights());
        let got = ic.povm().born(s.reduced_superposition().unwrap().density()).unwrap();
        let diff = got.probabilities().iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        oracle_gap = oracle_gap.max(diff);
    }
    verdict(
        1,
        "ensemble and superposition agree on S1",
        gap < 1e-10 && oracle_gap < 1e-10,
        format!("max IC gap {gap:.2e}, vs diag(lambda) oracle {oracle_gap:.2e}, 100 scenarios"),
        t.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_2_linear_maps_pass() {
    let t = Instant::now();
    let mut gap = 0.0f64;
    let mut all_linear = true;
    for i in 0..100 {
        let m = linear_map(0, i);
        let r = audit_convex_linearity(&m, m.dim(), 20, i as u64, DEFAULT_AUDIT_TOL).unwrap();
        gap = r.gaps.iter().copied().fold(gap, f64::max);
        all_linear &= r.verdict == Verdict::ConvexLinear;
    }
    verdict(
        2,
        "unitary and Kraus maps are convex-linear",
        gap < 1e-9 && all_linear,
        format!("max gap {gap:.2e} over 100 maps x 20 mixtures, dims 2..4"),
        t.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_3_purify_witness() {
    let t = Instant::now();
    let gap = DynamicalMap::purify(2).convexity_gap(&canonical_witness(2)).unwrap();
    // mixture [[3/4,1/4],[1/4,1/4]] squares to [[5/8,1/4],[1/4,1/8]], trace 3/4;
    // pure members are fixed, so the difference is traceless 2x2 with
    // trace distance sqrt(a^2 + |b|^2)
    let a: f64 = (5.0 / 6.0) - 0.75;
    let b = (1.0 / 3.0) - 0.25;
    let oracle = (a * a + b * b).sqrt();
    verdict(
        3,
        "purification breaks the witness mixture",
        (gap - oracle).abs() < 1e-10 && (oracle - 2f64.sqrt() / 12.0).abs() < 1e-15,
        format!("gap {gap:.12}, oracle {oracle:.12}"),
        t.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_4_equivalence_biconditional() {
    let t = Instant::now();
    let rows = taxonomy_verdicts(0).unwrap();
    let breaking: Vec<&str> = rows.iter().filter(|r| r.2).map(|r| r.0.as_str()).collect();
    let failing: Vec<&str> = rows.iter().filter(|r| r.1).map(|r| r.0.as_str()).collect();
    let expected_ok = rows.iter().all(|(_, fails, _, linear)| fails != linear);

    // the probability-level check sorts the taxonomy the same way
    let ic = build_ic_povm(2, 0).unwrap();
    let gpt_agrees = taxonomy(0).iter().zip(&rows).all(|((m, _), row)| {
        let g = gpt_convex_linearity_check(m, &ic, 20, 0, DEFAULT_GPT_TOL).unwrap();
        (g.verdict == Verdict::NonConvexLinear) == row.1
    });
    verdict(
        4,
        "breaks equivalence iff fails the audit",
        breaking == failing && expected_ok && gpt_agrees && breaking.len() == 3,
        format!("breaking = failing = [{}]", breaking.join(", ")),
        t.elapsed(),
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_5_local_definiteness() {
    let t = Instant::now();
    let frames: Vec<_> = (0..=5).map(|d| (d >= 2).then(|| build_ic_povm(d, 0).unwrap())).collect();
    let mut worst = 0.0f64;
    for (i, s) in suite_scenarios(0).iter().enumerate() {
        let d = s.system_dim();
        let mut rng = sampling::rng(1000 + i as u64);
        let maps = [
            DynamicalMap::identity(d),
            DynamicalMap::unitary(sampling::random_unitary(d, &mut rng)).unwrap(),
            DynamicalMap::kraus(sampling::random_kraus(d, 3, &mut rng)).unwrap(),
            DynamicalMap::quasi_linear(DynamicalMap::unitary(sampling::random_unitary(d, &mut rng)).unwrap(), 1.0)
                .unwrap(),
        ];
        for m in &maps {
            for p in [Povm::computational_basis(d), frames[d].as_ref().unwrap().povm().clone()] {
                worst = worst.max(run_friend_protocol(s, m, &p, 1e-6).unwrap().tv_distance);
            }
        }
    }
    let quarter = LabScenario::new(vec![0.25, 0.75], 2, None).unwrap();
    let purify = run_friend_protocol(&quarter, &DynamicalMap::purify(2), &Povm::computational_basis(2), 1e-6)
        .unwrap()
        .tv_distance;
    // (1/16) / (1/16 + 9/16) = 0.1
    let oracle = (0.25f64 - 0.1).abs();
    verdict(
        5,
        "friend protocols see nothing unless the map is nonlinear",
        worst < 1e-8 && purify >= 0.15 - 1e-6 && (purify - oracle).abs() < 1e-12,
        format!("worst convex-linear tv {worst:.2e}; purify tv {purify:.12} (oracle {oracle})"),
        t.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_6_quasi_linear_reduction() {
    let t = Instant::now();
    let mut gap = 0.0f64;
    for i in 0..50 {
        let mut rng = sampling::rng(500 + i);
        let d = 2 + (i as usize) % 3;
        let e = sampling::random_ensemble(d, &mut rng);
        let u = sampling::random_unitary(d, &mut rng);
        let ql = DynamicalMap::quasi_linear(DynamicalMap::unitary(u.clone()).unwrap(), 1.0).unwrap();
        let out = ql.apply_quasilinear(&DecoratedState::from_ensemble(&e)).unwrap();
        // component-wise: sum_k lambda_k U rho_k U^dagger
        let linear = e.components().iter().fold(ComplexMatrix::zeros(d, d), |acc, (w, rho)| {
            &acc + &u.conjugate(rho.matrix()).unwrap().scale_real(*w)
        });
        gap = gap.max(out.density().matrix().max_abs_diff(&linear));
    }

    let sq = DynamicalMap::quasi_linear(DynamicalMap::identity(2), 2.0).unwrap();
    let (pointer, tilted) = quarter_decompositions();
    let witness = sq
        .apply_quasilinear(&pointer)
        .unwrap()
        .density()
        .trace_distance(sq.apply_quasilinear(&tilted).unwrap().density())
        .unwrap();

    // I/2 in the pointer basis and in the |+/-> basis; both symmetric
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DensityMatrix::new(ComplexMatrix::outer(&[c64(h, 0.0), c64(h, 0.0)])).unwrap();
    let minus = DensityMatrix::new(ComplexMatrix::outer(&[c64(h, 0.0), c64(-h, 0.0)])).unwrap();
    let z = DecoratedState::new(vec![(0.5, DensityMatrix::basis(2, 0)), (0.5, DensityMatrix::basis(2, 1))]).unwrap();
    let x = DecoratedState::new(vec![(0.5, plus), (0.5, minus)]).unwrap();
    let symmetric = sq
        .apply_quasilinear(&z)
        .unwrap()
        .density()
        .trace_distance(sq.apply_quasilinear(&x).unwrap().density())
        .unwrap();

    verdict(
        6,
        "quasi-linear maps reduce to linear at gamma = 1",
        gap < 1e-12 && witness > 1e-3 && (witness - 0.15).abs() < 1e-12,
        format!(
            "gamma=1 gap {gap:.2e} on 50 states; gamma=2 witness {witness:.6}; symmetric I/2 pair {symmetric:.2e}"
        ),
        t.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_7_stochastic_branch() {
    let t = Instant::now();
    let quarter = LabScenario::new(vec![0.25, 0.75], 2, None).unwrap();
    let tvs: Vec<f64> = BRANCH_WEIGHTS
        .iter()
        .map(|&w| {
            run_friend_protocol(&quarter, &purify_branch(w).unwrap(), &Povm::computational_basis(2), 1e-6)
                .unwrap()
                .tv_distance
        })
        .collect();
    // the purified branch moves P(0) from 1/4 to 1/10 with probability w
    let oracle_ok = BRANCH_WEIGHTS.iter().zip(&tvs).all(|(w, tv)| (tv - 0.15 * w).abs() < 1e-12);
    let monotone = tvs.windows(2).all(|p| p[1] > p[0]);
    verdict(
        7,
        "one nonlinear branch is visible at any weight",
        monotone && tvs[0] > 1e-4 && oracle_ok,
        format!("tv at w = {BRANCH_WEIGHTS:?}: {tvs:.6?}"),
        t.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_8_tomography_roundtrip() {
    let t = Instant::now();
    let mut err = 0.0f64;
    for d in 2..=4 {
        let ic = build_ic_povm(d, 42).unwrap();
        let mut rng = sampling::rng(d as u64);
        for _ in 0..100 {
            let rho = sampling::random_density(d, &mut rng);
            let back = ic.reconstruct(&ic.prob_vector(&rho).unwrap()).unwrap();
            err = err.max(back.max_abs_diff(&rho));
        }
    }
    verdict(
        8,
        "IC tomography roundtrip",
        err < 1e-8,
        format!("max entry error {err:.2e} over 300 states"),
        t.elapsed(),
        Duration::from_secs(5),
    );
}

fn run_suite(seed: u64, dir: &std::path::Path) -> (i32, Vec<u8>) {
    let out = dir.join(format!("suite-{seed}-{}.json", rand_suffix()));
    let status = Command::new(env!("CARGO_BIN_EXE_qlab"))
        .args(["paper-suite", "--seed", &seed.to_string(), "--out"])
        .arg(&out)
        .status()
        .unwrap();
    (status.code().unwrap(), std::fs::read(&out).unwrap())
}

fn rand_suffix() -> u64 {
    use std::sync::atomic::{AtomicU64, Ordering};
    static N: AtomicU64 = AtomicU64::new(0);
    N.fetch_add(1, Ordering::Relaxed)
}

fn pattern(payload: &[u8]) -> Vec<(String, String)> {
    let v: serde_json::Value = serde_json::from_slice(payload).unwrap();
    v["report"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["check_name"].as_str().unwrap().to_string(), c["status"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn criterion_9_determinism() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let (c1, a) = run_suite(0, dir.path());
    let (c2, b) = run_suite(0, dir.path());
    let identical = a == b;
    let base = pattern(&a);
    let mut stable = c1 == 0 && c2 == 0;
    for seed in 1..=5 {
        let (code, payload) = run_suite(seed, dir.path());
        stable &= code == c1 && pattern(&payload) == base;
    }
    let all_pass = base.iter().all(|(_, s)| s == "pass");
    verdict(
        9,
        "suite is deterministic",
        identical && stable && all_pass,
        format!("byte-identical rerun: {identical}; same pattern over 5 seeds: {stable}; {} checks", base.len()),
        t.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn ensemble_and_state_stay_distinct_types() {
    // the witness ensemble and its collapse give equal statistics but are
    // not interchangeable inputs
    let w = canonical_witness(2);
    let p = Preparation::Ensemble(w.clone());
    assert!(p.is_ensemble());
    let ic = build_ic_povm(2, 0).unwrap();
    let pairs = certificate_pairs(2, 0, 0);
    assert_eq!(pairs.len(), 2);
    assert!(ic.equivalence_gap(&p, &Preparation::State(w.collapse())).unwrap() < 1e-12);
}
