//! The sealed laboratory.
//!
//! System S1 (dimension K) and the friend's pointer S2 are either in the
//! ensemble `{lambda_k : |k><k| (x) |k><k|}` or in the pure superposition
//! `sum_k phase_k sqrt(lambda_k) |k>|k>`. The friend acts on S1 alone: a map
//! followed by a measurement. Local Definiteness says no such protocol tells
//! the two apart.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{DecoratedState, DynamicalMap, MeanField, SingleState};
use crate::error::{check_dim, Error, Result};
use crate::kernel::{c64, ComplexMatrix, Subsystem, C64};
use crate::measurements::{IcPovm, OutcomeDistribution, Povm};
use crate::optimize;
use crate::states::{lab_superposition, reduced_ensemble, validate_probabilities, DensityMatrix, Ensemble, Preparation};

pub const DEFAULT_LD_THRESHOLD: f64 = 1e-6;
pub const PHASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabScenario {
    weights: Vec<f64>,
    pointer_dim: usize,
    phases: Vec<C64>,
}

impl LabScenario {
    /// `phases` defaults to all ones.
    pub fn new(weights: Vec<f64>, pointer_dim: usize, phases: Option<Vec<C64>>) -> Result<Self> {
        validate_probabilities(&weights)?;
        let k = weights.len();
        if pointer_dim < k {
            return Err(Error::PointerTooSmall { pointer_dim, outcomes: k });
        }
        let phases = phases.unwrap_or_else(|| vec![c64(1.0, 0.0); k]);
        check_dim(k, phases.len())?;
        if let Some(p) = phases.iter().find(|p| (p.norm() - 1.0).abs() > PHASE_TOL) {
            return Err(Error::InvalidState(format!("phase {p} is not unimodular")));
        }
        Ok(Self { weights, pointer_dim, phases })
    }

    /// Random weights and phases; pointer one level larger half the time.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let weights = crate::sampling::random_weights(k, rng);
        let phases = (0..k)
            .map(|_| C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        let pointer_dim = k + rng.random_range(0..=1);
        Self::new(weights, pointer_dim, Some(phases)).expect("valid by construction")
    }

    pub fn outcome_count(&self) -> usize {
        self.weights.len()
    }

    pub fn system_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn pointer_dim(&self) -> usize {
        self.pointer_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn phases(&self) -> &[C64] {
        &self.phases
    }

    fn dims(&self) -> (usize, usize) {
        (self.system_dim(), self.pointer_dim)
    }

    /// The system state `sum lambda_k |k><k|`, decorated with that
    /// decomposition (zero weights dropped).
    pub fn reduced_superposition(&self) -> Result<DecoratedState> {
        let sup = self.build()?.superposition;
        let rho1 = sup.partial_trace(self.dims(), Subsystem::First)?;
        let d = self.system_dim();
        let decomposition = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(k, w)| (*w, DensityMatrix::basis(d, k)))
            .collect();
        DecoratedState::with_density(rho1, decomposition)
    }

    pub fn reduced_ensemble(&self) -> Result<Preparation> {
        reduced_ensemble(&self.build()?.ensemble, self.dims(), Subsystem::First)
    }

    pub fn build(&self) -> Result<Scenario> {
        build_scenario(self)
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub ensemble: Preparation,
    pub superposition: DensityMatrix,
}

pub fn build_scenario(s: &LabScenario) -> Result<Scenario> {
    let (d1, d2) = s.dims();
    let comps = s
        .weights
        .iter()
        .enumerate()
        .map(|(k, &w)| (w, DensityMatrix::basis(d1, k).tensor(&DensityMatrix::basis(d2, k))))
        .collect();
    let ensemble = Ensemble::new(comps)?;
    let superposition = lab_superposition(&s.weights, d2, Some(&s.phases))?.density();
    Ok(Scenario { ensemble, superposition })
}

/// Max difference of IC statistics on S1 between the reduced ensemble and
/// the reduced superposition.
pub fn theorem1_verify(s: &LabScenario, ic: &IcPovm) -> Result<f64> {
    check_dim(s.system_dim(), ic.dim())?;
    let sc = s.build()?;
    let p_ens = ic.povm().born_ensemble(&reduced_ensemble(&sc.ensemble, s.dims(), Subsystem::First)?)?;
    let p_sup = ic.povm().born(&sc.superposition.partial_trace(s.dims(), Subsystem::First)?)?;
    Ok(p_ens.max_abs_diff(&p_sup))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LdVerdict {
    LdHolds,
    LdViolated,
}

#[derive(Debug, Clone, Serialize)]
pub struct Protocol {
    pub map: DynamicalMap,
    pub measurement: Povm,
}

#[derive(Debug, Clone, Serialize)]
pub struct LdReport {
    pub tv_distance: f64,
    pub threshold: f64,
    pub verdict: LdVerdict,
    pub ensemble_side: Vec<f64>,
    pub superposition_side: Vec<f64>,
    pub protocol: Protocol,
}

fn friend_distributions(
    s: &LabScenario,
    t1: &DynamicalMap,
    m1: &Povm,
) -> Result<(OutcomeDistribution, OutcomeDistribution)> {
    check_dim(s.system_dim(), t1.dim())?;
    check_dim(s.system_dim(), m1.dim())?;
    let ens = t1.apply_ensemble(&s.reduced_ensemble()?)?;
    let sup = t1.evolve(&SingleState::Decorated(s.reduced_superposition()?))?;
    Ok((m1.born_ensemble(&ens)?, m1.born_ensemble(&sup)?))
}

/// Friend applies `t1` then measures `m1`, once in each world.
pub fn run_friend_protocol(s: &LabScenario, t1: &DynamicalMap, m1: &Povm, threshold: f64) -> Result<LdReport> {
    let (pe, ps) = friend_distributions(s, t1, m1)?;
    let tv = pe.tv_distance(&ps);
    Ok(LdReport {
        tv_distance: tv,
        threshold,
        verdict: if tv > threshold { LdVerdict::LdViolated } else { LdVerdict::LdHolds },
        ensemble_side: pe.probabilities().to_vec(),
        superposition_side: ps.probabilities().to_vec(),
        protocol: Protocol { map: t1.clone(), measurement: m1.clone() },
    })
}

/// Parameterized map families for the protocol search.
#[derive(Debug, Clone)]
pub enum MapFamily {
    /// `exp(-i sum_j theta_j G_j)` with `theta_j` in `ranges[j]`.
    Unitary { generators: Vec<ComplexMatrix>, ranges: Vec<(f64, f64)> },
    MeanField { h0: ComplexMatrix, coupling: ComplexMatrix, tau: f64, steps: usize, g_range: (f64, f64) },
    QuasiLinear { base: DynamicalMap, gamma_range: (f64, f64) },
}

impl MapFamily {
    pub fn name(&self) -> &'static str {
        match self {
            MapFamily::Unitary { .. } => "unitary",
            MapFamily::MeanField { .. } => "nonlinear_meanfield",
            MapFamily::QuasiLinear { .. } => "quasi_linear",
        }
    }

    pub fn parameter_names(&self) -> Vec<String> {
        match self {
            MapFamily::Unitary { generators, .. } => (0..generators.len()).map(|j| format!("theta{j}")).collect(),
            MapFamily::MeanField { .. } => vec!["g".into()],
            MapFamily::QuasiLinear { .. } => vec!["gamma".into()],
        }
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        match self {
            MapFamily::Unitary { ranges, .. } => ranges.clone(),
            MapFamily::MeanField { g_range, .. } => vec![*g_range],
            MapFamily::QuasiLinear { gamma_range, .. } => vec![*gamma_range],
        }
    }

    fn validate(&self) -> Result<()> {
        let bounds = self.bounds();
        if bounds.is_empty() {
            return Err(Error::EmptySearchSpace(format!("{} family has no parameters", self.name())));
        }
        if let MapFamily::Unitary { generators, ranges } = self {
            if generators.len() != ranges.len() {
                return Err(Error::EmptySearchSpace("one range per generator required".into()));
            }
        }
        if bounds.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
            return Err(Error::EmptySearchSpace("parameter range is empty".into()));
        }
        Ok(())
    }

    pub fn instantiate(&self, params: &[f64]) -> Result<DynamicalMap> {
        match self {
            MapFamily::Unitary { generators, .. } => {
                let d = generators[0].rows();
                let h = generators
                    .iter()
                    .zip(params)
                    .fold(ComplexMatrix::zeros(d, d), |acc, (g, t)| &acc + &g.scale_real(*t));
                DynamicalMap::unitary(ComplexMatrix::unitary_from_hamiltonian(&h, 1.0)?)
            }
            MapFamily::MeanField { h0, coupling, tau, steps, .. } => DynamicalMap::mean_field(MeanField {
                h0: h0.clone(),
                coupling: coupling.clone(),
                g: params[0],
                tau: *tau,
                steps: *steps,
            }),
            MapFamily::QuasiLinear { base, .. } => DynamicalMap::quasi_linear(base.clone(), params[0]),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub family: String,
    pub params: Vec<f64>,
    pub measurement: usize,
    pub tv_distance: f64,
    pub verdict: LdVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub best: LdReport,
    pub params: Vec<f64>,
    pub parameter_names: Vec<String>,
    pub grid_best: f64,
    pub refinement_iterations: usize,
    pub evaluations: Vec<Evaluation>,
}

/// Grid points per axis so that the full grid stays within `budget`.
fn grid(bounds: &[(f64, f64)], budget: usize) -> Vec<Vec<f64>> {
    let n = bounds.len() as u32;
    let mut per_axis = 1usize;
    while (per_axis + 1).pow(n) <= budget {
        per_axis += 1;
    }
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            if per_axis == 1 || lo == hi {
                vec![lo]
            } else {
                (0..per_axis).map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64).collect()
            }
        })
        .collect();
    axes.iter().fold(vec![vec![]], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect()
    })
}

/// Best TV distance over the family: a grid within `budget` evaluations,
/// then Nelder–Mead from the best grid point. Each parameter point is scored
/// by its best measurement among `m_candidates`.
pub fn search_best_protocol(
    s: &LabScenario,
    family: &MapFamily,
    m_candidates: &[Povm],
    budget: usize,
    threshold: f64,
) -> Result<SearchResult> {
    family.validate()?;
    if m_candidates.is_empty() {
        return Err(Error::EmptySearchSpace("no candidate measurements".into()));
    }
    if budget == 0 {
        return Err(Error::EmptySearchSpace("zero evaluation budget".into()));
    }
    let score = |params: &[f64]| -> Result<Vec<f64>> {
        let map = family.instantiate(params)?;
        m_candidates
            .iter()
            .map(|m| {
                let (pe, ps) = friend_distributions(s, &map, m)?;
                Ok(pe.tv_distance(&ps))
            })
            .collect()
    };
    let verdict = |tv: f64| if tv > threshold { LdVerdict::LdViolated } else { LdVerdict::LdHolds };
    let rows = |params: &[f64], tvs: &[f64]| -> Vec<Evaluation> {
        tvs.iter()
            .enumerate()
            .map(|(m, &tv)| Evaluation {
                family: family.name().into(),
                params: params.to_vec(),
                measurement: m,
                tv_distance: tv,
                verdict: verdict(tv),
            })
            .collect()
    };

    let points = grid(&family.bounds(), budget);
    let scored = points
        .par_iter()
        .map(|p| Ok((p.clone(), score(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut evaluations: Vec<Evaluation> = scored.iter().flat_map(|(p, t)| rows(p, t)).collect();
    let best_of = |t: &[f64]| t.iter().copied().fold(0.0, f64::max);
    let (grid_point, grid_tvs) = scored
        .iter()
        .fold(&scored[0], |b, c| if best_of(&c.1) > best_of(&b.1) { c } else { b })
        .clone();
    let grid_best = best_of(&grid_tvs);

    let bounds = family.bounds();
    let step: Vec<f64> = bounds.iter().map(|(lo, hi)| ((hi - lo) * 0.05).max(1e-6)).collect();
    let mut failure = None;
    let refined = optimize::nelder_mead_max(
        |p| match score(p) {
            Ok(t) => {
                evaluations.extend(rows(p, &t));
                best_of(&t)
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        &grid_point,
        &step,
        &bounds,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let params = if refined.value > grid_best { refined.point } else { grid_point };
    let tvs = score(&params)?;
    let m_best = (0..tvs.len()).fold(0, |b, i| if tvs[i] > tvs[b] { i } else { b });
    let best = run_friend_protocol(s, &family.instantiate(&params)?, &m_candidates[m_best], threshold)?;
    Ok(SearchResult {
        best,
        params,
        parameter_names: family.parameter_names(),
        grid_best,
        refinement_iterations: refined.iterations,
        evaluations,
    })
}
