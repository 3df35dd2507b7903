//! The operational layer: states as IC probability vectors.
//!
//! A dynamical map induces a map on probability vectors by reconstruct,
//! evolve, re-measure. Convex-linearity, the equivalence-preservation
//! certificate and the comparison with the matrix-level audit all live here.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{audit_convex_linearity, canonical_witness, DecoratedState, DynamicalMap, SingleState, Verdict};
use crate::error::{check_dim, Error, Result};
use crate::measurements::IcPovm;
use crate::sampling;
use crate::states::{Ensemble, Preparation};

pub const ENTRY_TOL: f64 = 1e-12;
pub const SUM_TOL: f64 = 1e-9;
pub const DEFAULT_GPT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbVector {
    entries: Vec<f64>,
    ic_ref: String,
}

impl ProbVector {
    pub fn new(entries: Vec<f64>, ic_ref: impl Into<String>) -> Result<Self> {
        if let Some(x) = entries.iter().find(|x| !(-ENTRY_TOL..=1.0 + ENTRY_TOL).contains(*x)) {
            return Err(Error::NotAStateVector(format!("entry {x} outside [0, 1]")));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::NotAStateVector(format!("entries sum to {sum}")));
        }
        Ok(Self { entries, ic_ref: ic_ref.into() })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn ic_ref(&self) -> &str {
        &self.ic_ref
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `sum_k lambda_k p_k`. All vectors must share a frame.
    pub fn mixture(weights: &[f64], vectors: &[ProbVector]) -> Result<Self> {
        let first = vectors.first().ok_or_else(|| Error::InvalidWeights("empty mixture".into()))?;
        let mut acc = vec![0.0; first.entries.len()];
        for (w, p) in weights.iter().zip(vectors) {
            check_dim(acc.len(), p.entries.len())?;
            if p.ic_ref != first.ic_ref {
                return Err(Error::InvalidConfig("mixing vectors from different IC frames".into()));
            }
            acc.iter_mut().zip(&p.entries).for_each(|(a, x)| *a += w * x);
        }
        Self::new(acc, first.ic_ref.clone())
    }
}

/// `p -> T(p)`: reconstruct, apply the map, re-measure.
#[derive(Debug, Clone)]
pub struct InducedMap<'a> {
    underlying: &'a DynamicalMap,
    ic: &'a IcPovm,
}

impl<'a> InducedMap<'a> {
    pub fn new(underlying: &'a DynamicalMap, ic: &'a IcPovm) -> Result<Self> {
        check_dim(ic.dim(), underlying.dim())?;
        Ok(Self { underlying, ic })
    }

    pub fn apply(&self, p: &ProbVector) -> Result<ProbVector> {
        let rho = self.ic.reconstruct(p)?;
        let image = self.underlying.evolve(&SingleState::Plain(rho))?;
        self.ic.prob_vector_of(&image)
    }

    /// Image of the mixture `sum lambda_k p_k`, taken as one state carrying
    /// the decomposition it was mixed from.
    pub fn apply_mixture(&self, weights: &[f64], parts: &[ProbVector]) -> Result<ProbVector> {
        let comps = weights
            .iter()
            .zip(parts)
            .map(|(w, p)| Ok((*w, self.ic.reconstruct(p)?)))
            .collect::<Result<Vec<_>>>()?;
        let s = SingleState::Decorated(DecoratedState::new(comps)?);
        self.ic.prob_vector_of(&self.underlying.evolve(&s)?)
    }
}

pub fn induce(map: &DynamicalMap, ic: &IcPovm, p: &ProbVector) -> Result<ProbVector> {
    InducedMap::new(map, ic)?.apply(p)
}

/// Max-norm gap between `T(sum lambda_k p_k)` and `sum lambda_k T(p_k)`.
pub fn gpt_gap(map: &DynamicalMap, ic: &IcPovm, e: &Ensemble) -> Result<f64> {
    let t = InducedMap::new(map, ic)?;
    let parts = e.components().iter().map(|(_, rho)| ic.prob_vector(rho)).collect::<Result<Vec<_>>>()?;
    let weights = e.weights();
    let lhs = t.apply_mixture(&weights, &parts)?;
    let images = parts.iter().map(|p| t.apply(p)).collect::<Result<Vec<_>>>()?;
    let rhs = ProbVector::mixture(&weights, &images)?;
    Ok(lhs.max_abs_diff(&rhs))
}

#[derive(Debug, Clone, Serialize)]
pub struct GptWitness {
    pub ensemble: Ensemble,
    pub gap: f64,
    pub trial: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GptReport {
    pub map: String,
    pub ic_ref: String,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub verdict: Verdict,
    pub max_gap: f64,
    pub gaps: Vec<f64>,
    pub witness: Option<GptWitness>,
}

/// Convex-linearity on IC probability vectors over `trials` random
/// mixtures. Trial `i` draws the same ensemble as the matrix-level audit.
pub fn gpt_convex_linearity_check(
    map: &DynamicalMap,
    ic: &IcPovm,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<GptReport> {
    gpt_check_with_probes(map, ic, trials, seed, tol, &[])
}

pub fn gpt_check_with_probes(
    map: &DynamicalMap,
    ic: &IcPovm,
    trials: usize,
    seed: u64,
    tol: f64,
    probes: &[Ensemble],
) -> Result<GptReport> {
    check_dim(ic.dim(), map.dim())?;
    if trials == 0 && probes.is_empty() {
        return Err(Error::InvalidConfig("gpt check needs at least one trial".into()));
    }
    let d = map.dim();
    let mut all: Vec<(Option<usize>, Ensemble, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let e = sampling::random_ensemble(d, &mut sampling::trial_rng(seed, i));
            let g = gpt_gap(map, ic, &e)?;
            Ok((Some(i), e, g))
        })
        .collect::<Result<Vec<_>>>()?;
    for p in probes {
        all.push((None, p.clone(), gpt_gap(map, ic, p)?));
    }
    let gaps: Vec<f64> = all.iter().map(|t| t.2).collect();
    let best = (0..all.len()).fold(0, |b, i| if all[i].2 > all[b].2 { i } else { b });
    let max_gap = all[best].2;
    let verdict = if max_gap > tol { Verdict::NonConvexLinear } else { Verdict::ConvexLinear };
    let witness = (verdict == Verdict::NonConvexLinear).then(|| {
        let (trial, e, gap) = &all[best];
        GptWitness { ensemble: e.clone(), gap: *gap, trial: *trial }
    });
    Ok(GptReport {
        map: map.describe(),
        ic_ref: ic.id().to_string(),
        trials,
        seed,
        tol,
        verdict,
        max_gap,
        gaps,
        witness,
    })
}

/// A state and an ensemble claimed to be statistically equivalent.
#[derive(Debug, Clone)]
pub struct EquivalentPair {
    pub state: SingleState,
    pub ensemble: Ensemble,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairOutcome {
    pub index: usize,
    pub decorated: bool,
    pub preserved: bool,
    pub ic_gap: f64,
    pub trace_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub map: String,
    pub ic_ref: String,
    pub tol: f64,
    pub preserved: usize,
    pub broken: usize,
    pub pairs: Vec<PairOutcome>,
}

impl CertificateReport {
    pub fn preserves_equivalence(&self) -> bool {
        self.broken == 0
    }
}

/// For each pair: the state goes through the map directly, the ensemble
/// member by member, and the images are compared on IC statistics.
pub fn equivalence_preservation_certificate(
    map: &DynamicalMap,
    ic: &IcPovm,
    pairs: &[EquivalentPair],
    tol: f64,
) -> Result<CertificateReport> {
    check_dim(ic.dim(), map.dim())?;
    let outcomes = pairs
        .par_iter()
        .enumerate()
        .map(|(index, pair)| {
            let as_state = Preparation::State(pair.state.density().clone());
            let ens = Preparation::Ensemble(pair.ensemble.clone());
            let before = ic.equivalence_gap(&as_state, &ens)?;
            if before > tol {
                return Err(Error::NotEquivalentInput { index, gap: before });
            }
            let lhs = map.evolve(&pair.state)?;
            let rhs = map.apply_ensemble(&ens)?;
            let ic_gap = ic.equivalence_gap(&lhs, &rhs)?;
            let trace_gap = lhs.collapse().trace_distance(&rhs.collapse())?;
            Ok(PairOutcome {
                index,
                decorated: matches!(pair.state, SingleState::Decorated(_)),
                preserved: ic_gap <= tol,
                ic_gap,
                trace_gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let preserved = outcomes.iter().filter(|o| o.preserved).count();
    Ok(CertificateReport {
        map: map.describe(),
        ic_ref: ic.id().to_string(),
        tol,
        preserved,
        broken: outcomes.len() - preserved,
        pairs: outcomes,
    })
}

/// The canonical witness followed by `n` seeded random ensembles, each
/// paired once with its bare mixture and once with the mixture decorated
/// by the ensemble's own decomposition.
pub fn certificate_pairs(dim: usize, n: usize, seed: u64) -> Vec<EquivalentPair> {
    std::iter::once(canonical_witness(dim))
        .chain((0..n).map(|i| sampling::random_ensemble(dim, &mut sampling::trial_rng(seed, i))))
        .flat_map(|e| {
            [
                EquivalentPair { state: SingleState::Plain(e.collapse()), ensemble: e.clone() },
                EquivalentPair { state: SingleState::Decorated(DecoratedState::from_ensemble(&e)), ensemble: e },
            ]
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub map: String,
    pub frame_constant: f64,
    pub matrix_verdict: Verdict,
    pub gpt_verdict: Verdict,
    pub matrix_max_gap: f64,
    pub gpt_max_gap: f64,
    /// Every trial satisfied `c * D <= g <= 2 * D`.
    pub bounds_hold: bool,
    pub agree: bool,
}

/// Runs the matrix-level audit and the probability-level check on the same
/// trials. A matrix gap above `tol` must show up as an IC gap above
/// `c * tol`, and conversely.
pub fn quantum_reduction_check(
    map: &DynamicalMap,
    ic: &IcPovm,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<ReductionReport> {
    let audit = audit_convex_linearity(map, map.dim(), trials, seed, tol)?;
    let c = ic.frame_constant();
    let gpt = gpt_convex_linearity_check(map, ic, trials, seed, tol * c)?;
    const SLACK: f64 = 1e-10;
    let bounds_hold = audit
        .gaps
        .iter()
        .zip(&gpt.gaps)
        .all(|(&d, &g)| g + SLACK >= c * d && g <= 2.0 * d + SLACK);
    Ok(ReductionReport {
        map: map.describe(),
        frame_constant: c,
        matrix_verdict: audit.verdict,
        gpt_verdict: gpt.verdict,
        matrix_max_gap: audit.max_gap,
        gpt_max_gap: gpt.max_gap,
        bounds_hold,
        agree: audit.verdict == gpt.verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::ComplexMatrix;
    use crate::measurements::build_ic_povm;
    use crate::states::DensityMatrix;

    fn ic2() -> IcPovm {
        build_ic_povm(2, 7).unwrap()
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![0.5, 0.5], "x").is_ok());
        assert_eq!(ProbVector::new(vec![0.7, 0.7], "x").unwrap_err().code(), "not-a-state-vector");
        assert_eq!(ProbVector::new(vec![1.2, -0.2], "x").unwrap_err().code(), "not-a-state-vector");
    }

    #[test]
    fn induce_examples() {
        let ic = ic2();
        let rho = DensityMatrix::new(ComplexMatrix::from_real(&[&[0.75, 0.25], &[0.25, 0.25]]).unwrap()).unwrap();
        let p = ic.prob_vector(&rho).unwrap();
        let same = induce(&DynamicalMap::identity(2), &ic, &p).unwrap();
        assert!(same.max_abs_diff(&p) < 1e-12);

        let mm = ic.prob_vector(&DensityMatrix::maximally_mixed(2)).unwrap();
        let u = DynamicalMap::unitary(sampling::random_unitary(2, &mut sampling::rng(1))).unwrap();
        assert!(induce(&u, &ic, &mm).unwrap().max_abs_diff(&mm) < 1e-12);

        let out = induce(&DynamicalMap::purify(2), &ic, &p).unwrap();
        let expect = DensityMatrix::new(
            ComplexMatrix::from_real(&[&[5.0 / 6.0, 1.0 / 3.0], &[1.0 / 3.0, 1.0 / 6.0]]).unwrap(),
        )
        .unwrap();
        assert!(out.max_abs_diff(&ic.prob_vector(&expect).unwrap()) < 1e-12);
    }

    #[test]
    fn non_state_vectors_are_rejected() {
        let ic = ic2();
        let mut e = vec![0.0; 4];
        // all weight on one effect is not the statistics of any state for a
        // generic frame
        e[0] = 1.0;
        let p = ProbVector::new(e, ic.id()).unwrap();
        assert_eq!(induce(&DynamicalMap::identity(2), &ic, &p).unwrap_err().code(), "not-a-state-vector");
    }

    #[test]
    fn gpt_check_examples() {
        let ic = ic2();
        let k = DynamicalMap::kraus(sampling::random_kraus(2, 3, &mut sampling::rng(8))).unwrap();
        assert!(gpt_convex_linearity_check(&k, &ic, 10, 3, DEFAULT_GPT_TOL).unwrap().max_gap < 1e-9);

        let ql = DynamicalMap::quasi_linear(DynamicalMap::identity(2), 1.0).unwrap();
        assert!(gpt_convex_linearity_check(&ql, &ic, 10, 3, DEFAULT_GPT_TOL).unwrap().max_gap < 1e-9);

        let g = gpt_gap(&DynamicalMap::purify(2), &ic, &canonical_witness(2)).unwrap();
        assert!(g > 0.01, "gap {g}");
    }

    fn diag_pair(w: f64, decorated: bool) -> EquivalentPair {
        let comps = vec![(w, DensityMatrix::basis(2, 0)), (1.0 - w, DensityMatrix::basis(2, 1))];
        let ensemble = Ensemble::new(comps.clone()).unwrap().as_ensemble().unwrap().clone();
        let state = if decorated {
            SingleState::Decorated(DecoratedState::new(comps).unwrap())
        } else {
            SingleState::Plain(ensemble.collapse())
        };
        EquivalentPair { state, ensemble }
    }

    #[test]
    fn certificate_examples() {
        let ic = ic2();
        let u = DynamicalMap::unitary(sampling::random_unitary(2, &mut sampling::rng(3))).unwrap();
        let r = equivalence_preservation_certificate(&u, &ic, &[diag_pair(0.5, false)], DEFAULT_GPT_TOL).unwrap();
        assert!(r.preserves_equivalence());

        let r = equivalence_preservation_certificate(&DynamicalMap::purify(2), &ic, &[diag_pair(0.75, false)], 1e-8)
            .unwrap();
        assert_eq!(r.broken, 1);
        assert!((r.pairs[0].trace_gap - 0.15).abs() < 1e-12);

        let ql = DynamicalMap::quasi_linear(DynamicalMap::identity(2), 2.0).unwrap();
        let r = equivalence_preservation_certificate(&ql, &ic, &[diag_pair(0.5, true), diag_pair(0.25, true)], 1e-8)
            .unwrap();
        assert!(r.pairs[0].preserved);
        assert!(!r.pairs[1].preserved);
        assert!((r.pairs[1].trace_gap - 0.15).abs() < 1e-12);
    }

    #[test]
    fn certificate_rejects_inequivalent_pairs() {
        let ic = ic2();
        let mut pair = diag_pair(0.5, false);
        pair.state = SingleState::Plain(DensityMatrix::basis(2, 0));
        let err = equivalence_preservation_certificate(&DynamicalMap::identity(2), &ic, &[pair], 1e-8).unwrap_err();
        assert_eq!(err.code(), "not-equivalent-input");
    }

    #[test]
    fn reduction_examples() {
        let ic = ic2();
        let u = DynamicalMap::unitary(sampling::random_unitary(2, &mut sampling::rng(5))).unwrap();
        let r = quantum_reduction_check(&u, &ic, 10, 1, DEFAULT_GPT_TOL).unwrap();
        assert!(r.agree && r.bounds_hold);
        assert_eq!(r.matrix_verdict, Verdict::ConvexLinear);

        let r = quantum_reduction_check(&DynamicalMap::purify(2), &ic, 10, 1, DEFAULT_GPT_TOL).unwrap();
        assert!(r.agree && r.bounds_hold);
        assert_eq!(r.gpt_verdict, Verdict::NonConvexLinear);
    }
}
