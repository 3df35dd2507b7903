//! The bundled check suite behind `qlab paper-suite`.
//!
//! Each check returns a pass/fail status and the number it was judged on.
//! Timings are returned separately so the report payload itself stays a
//! deterministic function of the seed.

use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::dynamics::{
    audit_convex_linearity, audit_with_probes, canonical_witness, DecoratedState, DynamicalMap, MeanField, Verdict,
    DEFAULT_AUDIT_TOL,
};
use crate::error::Result;
use crate::gpt::{certificate_pairs, equivalence_preservation_certificate};
use crate::kernel::{c64, ComplexMatrix};
use crate::lab::{run_friend_protocol, theorem1_verify, LabScenario, DEFAULT_LD_THRESHOLD};
use crate::measurements::{build_ic_povm, IcPovm, Povm};
use crate::sampling;
use crate::states::{DensityMatrix, PureState};

pub const SCENARIOS: usize = 100;
pub const LINEAR_MAPS: usize = 100;
pub const AUDIT_TRIALS: usize = 20;
pub const CERTIFICATE_ENSEMBLES: usize = 10;
pub const DECORATED_STATES: usize = 50;
pub const TOMOGRAPHY_STATES: usize = 100;
pub const BRANCH_WEIGHTS: [f64; 3] = [0.01, 0.5, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl From<bool> for Status {
    fn from(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check_name: &'static str,
    pub status: Status,
    pub gap: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(check_name: &'static str, ok: bool, gap: f64, detail: String) -> Self {
        Self { check_name, status: ok.into(), gap, detail }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub check_name: &'static str,
    pub runtime_ms: f64,
}

fn ic_frames(dims: impl Iterator<Item = usize>, seed: u64) -> Result<Vec<Option<IcPovm>>> {
    let dims: Vec<usize> = dims.collect();
    let max = dims.iter().copied().max().unwrap_or(0);
    (0..=max).map(|d| if dims.contains(&d) { build_ic_povm(d, seed).map(Some) } else { Ok(None) }).collect()
}

/// The seeded scenarios shared by the marginal and friend-protocol checks.
pub fn suite_scenarios(seed: u64) -> Vec<LabScenario> {
    (0..SCENARIOS)
        .map(|i| {
            let mut rng = sampling::trial_rng(seed, i);
            LabScenario::random(2 + i % 4, &mut rng)
        })
        .collect()
}

pub fn check_reduced_marginals(seed: u64) -> Result<CheckResult> {
    let frames = ic_frames(2..=5, seed)?;
    let gap = suite_scenarios(seed)
        .iter()
        .map(|s| theorem1_verify(s, frames[s.system_dim()].as_ref().expect("frame")))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(CheckResult::new("reduced_marginals_agree", gap < 1e-10, gap, format!("{SCENARIOS} scenarios, K in 2..5")))
}

/// Seeded unitary (even index) or Kraus (odd index) map on dims 2..4.
pub fn linear_map(seed: u64, i: usize) -> DynamicalMap {
    let mut rng = sampling::trial_rng(seed ^ 0x5eed, i);
    let d = 2 + i % 3;
    if i.is_multiple_of(2) {
        DynamicalMap::unitary(sampling::random_unitary(d, &mut rng)).expect("haar unitary")
    } else {
        let n = 1 + (i / 2) % 3;
        DynamicalMap::kraus(sampling::random_kraus(d, n, &mut rng)).expect("isometry blocks")
    }
}

pub fn check_linear_maps(seed: u64) -> Result<CheckResult> {
    let mut gap = 0.0f64;
    for i in 0..LINEAR_MAPS {
        let m = linear_map(seed, i);
        gap = gap.max(audit_convex_linearity(&m, m.dim(), AUDIT_TRIALS, seed, DEFAULT_AUDIT_TOL)?.max_gap);
    }
    Ok(CheckResult::new(
        "linear_maps_pass_audit",
        gap < 1e-9,
        gap,
        format!("{LINEAR_MAPS} maps x {AUDIT_TRIALS} mixtures"),
    ))
}

pub fn check_purify_witness() -> Result<CheckResult> {
    let gap = DynamicalMap::purify(2).convexity_gap(&canonical_witness(2))?;
    let oracle = 2f64.sqrt() / 12.0;
    Ok(CheckResult::new(
        "purify_witness_gap",
        (gap - oracle).abs() < 1e-10,
        gap,
        format!("expected sqrt(2)/12 = {oracle:.12}"),
    ))
}

/// Mean-field flow used in the taxonomy: `H0 = X`, `A = Z`.
pub fn taxonomy_mean_field(g: f64) -> DynamicalMap {
    DynamicalMap::mean_field(MeanField {
        h0: ComplexMatrix::pauli_x(),
        coupling: ComplexMatrix::pauli_z(),
        g,
        tau: 1.0,
        steps: 1000,
    })
    .expect("hermitian generators")
}

/// The built-in taxonomy, each map tagged with whether it is expected to be
/// convex-linear.
pub fn taxonomy(seed: u64) -> Vec<(DynamicalMap, bool)> {
    let mut rng = sampling::rng(seed ^ 0x7a40);
    let u1 = DynamicalMap::unitary(sampling::random_unitary(2, &mut rng)).expect("unitary");
    let u2 = DynamicalMap::unitary(sampling::random_unitary(2, &mut rng)).expect("unitary");
    let k1 = DynamicalMap::kraus(sampling::random_kraus(2, 2, &mut rng)).expect("kraus");
    let k2 = DynamicalMap::kraus(sampling::random_kraus(2, 3, &mut rng)).expect("kraus");
    let ql1 = DynamicalMap::quasi_linear(u1.clone(), 1.0).expect("gamma");
    let ql2 = DynamicalMap::quasi_linear(u1.clone(), 2.0).expect("gamma");
    vec![
        (u1, true),
        (u2, true),
        (k1, true),
        (k2, true),
        (DynamicalMap::purify(2), false),
        (taxonomy_mean_field(0.5), false),
        (ql1, true),
        (ql2, false),
    ]
}

/// Per map: does the audit find a gap, and does the certificate find a
/// broken pair. Returns `(map, audit_fails, certificate_breaks, expected_linear)`.
pub fn taxonomy_verdicts(seed: u64) -> Result<Vec<(String, bool, bool, bool)>> {
    let ic = build_ic_povm(2, seed)?;
    let pairs = certificate_pairs(2, CERTIFICATE_ENSEMBLES, seed);
    taxonomy(seed)
        .into_iter()
        .map(|(map, linear)| {
            let audit = audit_with_probes(&map, 2, AUDIT_TRIALS, seed, DEFAULT_AUDIT_TOL, &[canonical_witness(2)])?;
            let cert = equivalence_preservation_certificate(&map, &ic, &pairs, DEFAULT_AUDIT_TOL)?;
            Ok((map.describe(), audit.verdict == Verdict::NonConvexLinear, !cert.preserves_equivalence(), linear))
        })
        .collect()
}

pub fn check_equivalence_biconditional(seed: u64) -> Result<CheckResult> {
    let rows = taxonomy_verdicts(seed)?;
    let ok = rows.iter().all(|(_, fails, breaks, linear)| fails == breaks && *fails != *linear);
    let broken: Vec<&str> = rows.iter().filter(|r| r.2).map(|r| r.0.as_str()).collect();
    Ok(CheckResult::new(
        "equivalence_biconditional",
        ok,
        rows.iter().filter(|r| r.1 != r.2).count() as f64,
        format!("breaking: {}", broken.join("; ")),
    ))
}

/// Friend protocols: every convex-linear map leaves the two worlds
/// indistinguishable; purification on `(1/4, 3/4)` does not.
pub fn check_local_definiteness(seed: u64) -> Result<CheckResult> {
    let frames = ic_frames(2..=5, seed)?;
    let mut worst = 0.0f64;
    for (i, s) in suite_scenarios(seed).iter().enumerate() {
        let d = s.system_dim();
        let mut rng = sampling::trial_rng(seed ^ 0xf21e, i);
        let maps = [
            DynamicalMap::identity(d),
            DynamicalMap::unitary(sampling::random_unitary(d, &mut rng))?,
            DynamicalMap::kraus(sampling::random_kraus(d, 2, &mut rng))?,
        ];
        let povms = [Povm::computational_basis(d), frames[d].as_ref().expect("frame").povm().clone()];
        for m in &maps {
            for p in &povms {
                worst = worst.max(run_friend_protocol(s, m, p, DEFAULT_LD_THRESHOLD)?.tv_distance);
            }
        }
    }
    let quarter = LabScenario::new(vec![0.25, 0.75], 2, None)?;
    let purify =
        run_friend_protocol(&quarter, &DynamicalMap::purify(2), &Povm::computational_basis(2), DEFAULT_LD_THRESHOLD)?
            .tv_distance;
    Ok(CheckResult::new(
        "local_definiteness",
        worst < 1e-8 && purify >= 0.15 - 1e-6,
        worst,
        format!("purify tv = {purify:.12}"),
    ))
}

/// `diag(1/4, 3/4)` written two ways: pointer basis with weights
/// `(1/4, 3/4)`, and `{1/2 : psi_+, 1/2 : psi_-}` with
/// `psi_(+/-) = (|0> +/- sqrt(3)|1>) / 2`.
pub fn quarter_decompositions() -> (DecoratedState, DecoratedState) {
    let pointer = DecoratedState::new(vec![(0.25, DensityMatrix::basis(2, 0)), (0.75, DensityMatrix::basis(2, 1))])
        .expect("valid");
    let r3 = 3f64.sqrt() / 2.0;
    let psi = |s: f64| PureState::new(vec![c64(0.5, 0.0), c64(s * r3, 0.0)]).expect("unit").density();
    let tilted = DecoratedState::new(vec![(0.5, psi(1.0)), (0.5, psi(-1.0))]).expect("valid");
    (pointer, tilted)
}

pub fn check_quasi_linear_reduction(seed: u64) -> Result<CheckResult> {
    let mut linear_gap = 0.0f64;
    for i in 0..DECORATED_STATES {
        let mut rng = sampling::trial_rng(seed ^ 0x9a11, i);
        let d = 2 + i % 3;
        let e = sampling::random_ensemble(d, &mut rng);
        let base = DynamicalMap::unitary(sampling::random_unitary(d, &mut rng))?;
        let ql = DynamicalMap::quasi_linear(base.clone(), 1.0)?;
        let s = DecoratedState::from_ensemble(&e);
        let out = ql.apply_quasilinear(&s)?;
        linear_gap = linear_gap.max(out.density().max_abs_diff(&base.apply(s.density())?));
    }
    let (a, b) = quarter_decompositions();
    let sq = DynamicalMap::quasi_linear(DynamicalMap::identity(2), 2.0)?;
    let witness = sq.apply_quasilinear(&a)?.density().trace_distance(sq.apply_quasilinear(&b)?.density())?;
    Ok(CheckResult::new(
        "quasi_linear_reduction",
        linear_gap < 1e-12 && witness > 1e-3,
        linear_gap,
        format!("gamma=2 decomposition witness = {witness:.12}"),
    ))
}

/// `{w : purify, 1 - w : identity}`.
pub fn purify_branch(w: f64) -> Result<DynamicalMap> {
    DynamicalMap::stochastic(vec![(w, DynamicalMap::purify(2)), (1.0 - w, DynamicalMap::identity(2))])
}

pub fn stochastic_tvs() -> Result<Vec<f64>> {
    let quarter = LabScenario::new(vec![0.25, 0.75], 2, None)?;
    BRANCH_WEIGHTS
        .iter()
        .map(|&w| {
            Ok(run_friend_protocol(&quarter, &purify_branch(w)?, &Povm::computational_basis(2), DEFAULT_LD_THRESHOLD)?
                .tv_distance)
        })
        .collect()
}

pub fn check_stochastic_branches() -> Result<CheckResult> {
    let tvs = stochastic_tvs()?;
    let monotone = tvs.windows(2).all(|w| w[1] > w[0]);
    Ok(CheckResult::new(
        "stochastic_branch_weight",
        monotone && tvs[0] > 1e-4,
        tvs[0],
        format!("tv at w = {BRANCH_WEIGHTS:?}: {tvs:?}"),
    ))
}

pub fn check_tomography(seed: u64) -> Result<CheckResult> {
    let mut err = 0.0f64;
    for d in 2..=4 {
        let ic = build_ic_povm(d, seed)?;
        for i in 0..TOMOGRAPHY_STATES {
            let rho = sampling::random_density(d, &mut sampling::trial_rng(seed ^ 0x70e0, i * 8 + d));
            err = err.max(ic.reconstruct(&ic.prob_vector(&rho)?)?.max_abs_diff(&rho));
        }
    }
    Ok(CheckResult::new(
        "ic_tomography_roundtrip",
        err < 1e-8,
        err,
        format!("{TOMOGRAPHY_STATES} states per dim in 2..4"),
    ))
}

/// Every supplied descriptor must parse into a valid map. An invalid one
/// (say a Kraus set that does not preserve trace) fails the check.
pub fn check_map_invariants(seed: u64, extra: &[Value]) -> Result<CheckResult> {
    let mut bad = Vec::new();
    let built_in = taxonomy(seed).into_iter().map(|(m, _)| serde_json::to_value(&m).expect("serializable"));
    for (i, v) in built_in.chain(extra.iter().cloned()).enumerate() {
        if let Err(e) = serde_json::from_value::<DynamicalMap>(v) {
            bad.push(format!("map {i}: {e}"));
        }
    }
    Ok(CheckResult::new("map_invariants", bad.is_empty(), bad.len() as f64, bad.join("; ")))
}

/// Runs every check. `extra_maps` are additional map descriptors put
/// through the invariant check.
pub fn run_paper_suite(seed: u64, extra_maps: &[Value]) -> Result<(SuiteReport, Vec<Timing>)> {
    type Check<'a> = Box<dyn Fn() -> Result<CheckResult> + 'a>;
    let checks: Vec<Check> = vec![
        Box::new(|| check_map_invariants(seed, extra_maps)),
        Box::new(|| check_reduced_marginals(seed)),
        Box::new(|| check_linear_maps(seed)),
        Box::new(check_purify_witness),
        Box::new(|| check_equivalence_biconditional(seed)),
        Box::new(|| check_local_definiteness(seed)),
        Box::new(|| check_quasi_linear_reduction(seed)),
        Box::new(check_stochastic_branches),
        Box::new(|| check_tomography(seed)),
    ];
    let mut results = Vec::with_capacity(checks.len());
    let mut timings = Vec::with_capacity(checks.len());
    for c in checks {
        let t = Instant::now();
        let r = c()?;
        timings.push(Timing { check_name: r.check_name, runtime_ms: t.elapsed().as_secs_f64() * 1e3 });
        results.push(r);
    }
    let passed = results.iter().all(CheckResult::passed);
    Ok((SuiteReport { seed, passed, checks: results }, timings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decompositions_share_a_density() {
        let (a, b) = quarter_decompositions();
        assert!(a.density().max_abs_diff(b.density()) < 1e-15);
    }

    #[test]
    fn stochastic_tv_is_linear_in_weight() {
        for (w, tv) in BRANCH_WEIGHTS.iter().zip(stochastic_tvs().unwrap()) {
            assert!((tv - 0.15 * w).abs() < 1e-12);
        }
    }

    #[test]
    fn mislabeled_kraus_fails_invariants() {
        let bad = serde_json::json!({
            "kind": "kraus", "dim": 2,
            "parameters": {"operators": [{"rows": 2, "cols": 2, "entries": [[0.5, 0], [0, 0], [0, 0], [0.5, 0]]}]}
        });
        assert!(!check_map_invariants(1, &[bad]).unwrap().passed());
        assert!(check_map_invariants(1, &[]).unwrap().passed());
    }
}
