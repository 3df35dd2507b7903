//! Dynamical maps and the convex-linearity audit.
//!
//! A map acts on a single state directly and on an ensemble member by
//! member, leaving the epistemic weights alone. Whether those two routes agree
//! on `sum_k lambda_k rho_k` is exactly convex-linearity, and
//! [`audit_convex_linearity`] searches for ensembles where they do not.
//!
//! Quasi-linear maps need more than a density matrix: they act on a
//! [`DecoratedState`], a density matrix carrying one particular convex
//! decomposition. Stochastic maps send a state to an ensemble of branch
//! images.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{check_dim, Error, Result};
use crate::kernel::{c64, ComplexMatrix, HERMITIAN_TOL};
use crate::sampling;
use crate::states::{
    collapse_components, flatten, validate_probabilities, DensityMatrix, Ensemble, Preparation, PureState,
};

pub const UNITARY_TOL: f64 = 1e-10;
pub const KRAUS_TOL: f64 = 1e-9;
pub const DEFAULT_AUDIT_TOL: f64 = 1e-8;
pub const DECOMPOSITION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Unitary,
    Kraus,
    NonlinearPurify,
    NonlinearMeanfield,
    QuasiLinear,
    Stochastic,
}

impl MapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MapKind::Unitary => "unitary",
            MapKind::Kraus => "kraus",
            MapKind::NonlinearPurify => "nonlinear_purify",
            MapKind::NonlinearMeanfield => "nonlinear_meanfield",
            MapKind::QuasiLinear => "quasi_linear",
            MapKind::Stochastic => "stochastic",
        }
    }
}

/// Mean-field flow `d rho/dt = -i [H0 + g tr(rho A) A, rho]`, integrated with
/// RK4 for time `tau` in `steps` equal steps.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanField {
    pub h0: ComplexMatrix,
    pub coupling: ComplexMatrix,
    pub g: f64,
    pub tau: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Spec {
    Unitary(ComplexMatrix),
    Kraus(Vec<ComplexMatrix>),
    Purify,
    MeanField(MeanField),
    QuasiLinear { base: Box<DynamicalMap>, gamma: f64 },
    Stochastic(Vec<(f64, DynamicalMap)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalMap {
    dim: usize,
    spec: Spec,
}

impl DynamicalMap {
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::InvalidMap("unitary must be square".into()));
        }
        let d = u.rows();
        let dev = u.adjoint().matmul(&u)?.max_abs_diff(&ComplexMatrix::identity(d));
        if dev >= UNITARY_TOL {
            return Err(Error::InvalidMap(format!("U^dagger U deviates from I by {dev:.3e}")));
        }
        Ok(Self { dim: d, spec: Spec::Unitary(u) })
    }

    pub fn identity(d: usize) -> Self {
        Self { dim: d, spec: Spec::Unitary(ComplexMatrix::identity(d)) }
    }

    pub fn kraus(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::InvalidMap("no Kraus operators".into()))?;
        let d = first.cols();
        let mut sum = ComplexMatrix::zeros(d, d);
        for k in &ops {
            if k.rows() != d || k.cols() != d {
                return Err(Error::InvalidMap("Kraus operators must all be d x d".into()));
            }
            sum = &sum + &k.adjoint().matmul(k)?;
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(d));
        if dev >= KRAUS_TOL {
            return Err(Error::InvalidMap(format!("sum K^dagger K deviates from I by {dev:.3e}")));
        }
        Ok(Self { dim: d, spec: Spec::Kraus(ops) })
    }

    /// `rho -> rho^2 / tr(rho^2)`.
    pub fn purify(d: usize) -> Self {
        Self { dim: d, spec: Spec::Purify }
    }

    pub fn mean_field(mf: MeanField) -> Result<Self> {
        let d = mf.h0.rows();
        for (name, m) in [("h0", &mf.h0), ("coupling", &mf.coupling)] {
            if !m.is_square() || m.rows() != d || !m.is_hermitian(HERMITIAN_TOL) {
                return Err(Error::InvalidMap(format!("{name} must be a Hermitian {d}x{d} matrix")));
            }
        }
        if mf.steps == 0 || !mf.tau.is_finite() || mf.tau < 0.0 || !mf.g.is_finite() {
            return Err(Error::InvalidMap("mean-field needs steps >= 1 and finite g, tau >= 0".into()));
        }
        Ok(Self { dim: d, spec: Spec::MeanField(mf) })
    }

    /// Power-law reweighting `lambda_k -> lambda_k^gamma / sum_j lambda_j^gamma`
    /// on top of a deterministic component map.
    pub fn quasi_linear(base: DynamicalMap, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::BadExponent(gamma));
        }
        if matches!(base.spec, Spec::Stochastic(_) | Spec::QuasiLinear { .. }) {
            return Err(Error::InvalidMap("quasi-linear base map must be a plain deterministic map".into()));
        }
        Ok(Self { dim: base.dim, spec: Spec::QuasiLinear { base: Box::new(base), gamma } })
    }

    /// Epistemic mixture of deterministic branches `{lambda_k : T_k}`.
    pub fn stochastic(branches: Vec<(f64, DynamicalMap)>) -> Result<Self> {
        let first = branches.first().ok_or_else(|| Error::BadBranchWeights("no branches".into()))?;
        let d = first.1.dim;
        let weights: Vec<f64> = branches.iter().map(|(w, _)| *w).collect();
        validate_probabilities(&weights).map_err(|e| Error::BadBranchWeights(e.to_string()))?;
        for (_, b) in &branches {
            check_dim(d, b.dim)?;
            if b.is_stochastic() {
                return Err(Error::InvalidMap("stochastic branches must be deterministic maps".into()));
            }
        }
        Ok(Self { dim: d, spec: Spec::Stochastic(branches) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> MapKind {
        match self.spec {
            Spec::Unitary(_) => MapKind::Unitary,
            Spec::Kraus(_) => MapKind::Kraus,
            Spec::Purify => MapKind::NonlinearPurify,
            Spec::MeanField(_) => MapKind::NonlinearMeanfield,
            Spec::QuasiLinear { .. } => MapKind::QuasiLinear,
            Spec::Stochastic(_) => MapKind::Stochastic,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self.spec, Spec::Stochastic(_))
    }

    /// Short human-readable tag, e.g. `quasi_linear(gamma=2)`.
    pub fn describe(&self) -> String {
        match &self.spec {
            Spec::MeanField(mf) => format!("nonlinear_meanfield(g={})", mf.g),
            Spec::QuasiLinear { base, gamma } => format!("quasi_linear(gamma={gamma}, base={})", base.describe()),
            Spec::Stochastic(b) => {
                let parts: Vec<String> = b.iter().map(|(w, m)| format!("{w}:{}", m.describe())).collect();
                format!("stochastic[{}]", parts.join(", "))
            }
            _ => self.kind().as_str().to_string(),
        }
    }

    /// Action on a bare state. Stochastic maps have no single-state image;
    /// use [`DynamicalMap::apply_stochastic`] or [`DynamicalMap::evolve`].
    pub fn apply(&self, state: &DensityMatrix) -> Result<DensityMatrix> {
        check_dim(self.dim, state.dim())?;
        let rho = state.matrix();
        let out = match &self.spec {
            Spec::Unitary(u) => u.conjugate(rho)?,
            Spec::Kraus(ops) => {
                let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
                for k in ops {
                    acc = &acc + &k.conjugate(rho)?;
                }
                acc
            }
            Spec::Purify => {
                let sq = rho.matmul(rho)?;
                let tr = sq.trace().re;
                sq.scale_real(1.0 / tr)
            }
            Spec::MeanField(mf) => mf.integrate(rho)?,
            Spec::QuasiLinear { base, .. } => return base.apply(state),
            Spec::Stochastic(_) => {
                return Err(Error::InvalidMap("stochastic maps output ensembles; use apply_stochastic".into()))
            }
        };
        DensityMatrix::new(out).map_err(|e| Error::MapBrokeState(format!("{}: {e}", self.describe())))
    }

    /// `{lambda_k : T_k(rho)}` for a stochastic map.
    pub fn apply_stochastic(&self, state: &DensityMatrix) -> Result<StochasticOutcome> {
        let Spec::Stochastic(branches) = &self.spec else {
            return Err(Error::InvalidMap(format!("{} is not stochastic", self.describe())));
        };
        let comps = branches.iter().map(|(w, t)| Ok((*w, t.apply(state)?))).collect::<Result<Vec<_>>>()?;
        Ok(StochasticOutcome { result: Ensemble::new(comps)? })
    }

    /// Quasi-linear action: components mapped by the base map, weights
    /// reweighted by the power law.
    pub fn apply_quasilinear(&self, s: &DecoratedState) -> Result<DecoratedState> {
        let Spec::QuasiLinear { base, gamma } = &self.spec else {
            return Err(Error::InvalidMap(format!("{} is not quasi-linear", self.describe())));
        };
        check_dim(self.dim, s.density.dim())?;
        let raw: Vec<f64> = s.decomposition.iter().map(|(w, _)| w.powf(*gamma)).collect();
        let total: f64 = raw.iter().sum();
        let total = if (total - 1.0).abs() > 64.0 * f64::EPSILON { total } else { 1.0 };
        let decomposition = s
            .decomposition
            .iter()
            .zip(raw)
            .map(|((_, c), r)| Ok((r / total, base.apply(c)?)))
            .collect::<Result<Vec<_>>>()?;
        let density = DensityMatrix::new(collapse_components(&decomposition).matrix().clone())
            .map_err(|e| Error::MapBrokeState(e.to_string()))?;
        Ok(DecoratedState { density, decomposition })
    }

    /// Image of a single (possibly decorated) state. Deterministic maps
    /// return a bare state; stochastic maps return the branch ensemble.
    pub fn evolve(&self, s: &SingleState) -> Result<Preparation> {
        match (&self.spec, s) {
            (Spec::Stochastic(branches), _) => {
                let meta = branches.iter().map(|(w, t)| Ok((*w, t.evolve(s)?))).collect::<Result<Vec<_>>>()?;
                flatten(meta)
            }
            (Spec::QuasiLinear { .. }, SingleState::Decorated(d)) => {
                Ok(Preparation::State(self.apply_quasilinear(d)?.density))
            }
            _ => Ok(Preparation::State(self.apply(s.density())?)),
        }
    }

    /// Member-wise action on a state or ensemble. Each member keeps its
    /// weight; duplicates among the images are merged afterwards.
    pub fn apply_ensemble(&self, prep: &Preparation) -> Result<Preparation> {
        let meta = prep
            .components()
            .into_iter()
            .map(|(w, rho)| Ok((w, self.evolve(&SingleState::Plain(rho.clone()))?)))
            .collect::<Result<Vec<_>>>()?;
        flatten(meta)
    }

    /// Image of the single improper state `sum_k lambda_k rho_k` that carries
    /// the ensemble's decomposition as its parameters.
    pub fn mixture_image(&self, e: &Ensemble) -> Result<DensityMatrix> {
        let s = SingleState::Decorated(DecoratedState::from_ensemble(e));
        Ok(self.evolve(&s)?.collapse())
    }

    /// `D(T(rho(E)), rho(T(E)))` in trace distance.
    pub fn convexity_gap(&self, e: &Ensemble) -> Result<f64> {
        let lhs = self.mixture_image(e)?;
        let rhs = self.apply_ensemble(&Preparation::Ensemble(e.clone()))?.collapse();
        lhs.trace_distance(&rhs)
    }
}

impl MeanField {
    fn generator(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let field = self.g * rho.trace_product(&self.coupling)?.re;
        let h = &self.h0 + &self.coupling.scale_real(field);
        Ok(h.commutator(rho)?.scale(c64(0.0, -1.0)))
    }

    fn integrate(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let h = self.tau / self.steps as f64;
        let mut r = rho.clone();
        for _ in 0..self.steps {
            let k1 = self.generator(&r)?;
            let k2 = self.generator(&(&r + &k1.scale_real(h / 2.0)))?;
            let k3 = self.generator(&(&r + &k2.scale_real(h / 2.0)))?;
            let k4 = self.generator(&(&r + &k3.scale_real(h)))?;
            let incr = &(&k1 + &k4) + &(&k2 + &k3).scale_real(2.0);
            r = (&r + &incr.scale_real(h / 6.0)).hermitian_part();
            let tr = r.trace().re;
            r = r.scale_real(1.0 / tr);
        }
        Ok(r)
    }
}

/// A density matrix together with a chosen convex decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct DecoratedState {
    density: DensityMatrix,
    decomposition: Vec<(f64, DensityMatrix)>,
}

impl DecoratedState {
    /// Density computed from the decomposition.
    pub fn new(decomposition: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        let weights: Vec<f64> = decomposition.iter().map(|(w, _)| *w).collect();
        validate_probabilities(&weights)?;
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidWeights("decomposition weights must be positive".into()));
        }
        let d = decomposition[0].1.dim();
        for (_, c) in &decomposition {
            check_dim(d, c.dim())?;
        }
        let total: f64 = weights.iter().sum();
        let decomposition: Vec<_> = decomposition.into_iter().map(|(w, c)| (w / total, c)).collect();
        let density = collapse_components(&decomposition);
        Ok(Self { density, decomposition })
    }

    /// Checks that `decomposition` really sums to `density`.
    pub fn with_density(density: DensityMatrix, decomposition: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        let s = Self::new(decomposition)?;
        let dev = s.density.max_abs_diff(&density);
        if dev >= DECOMPOSITION_TOL {
            return Err(Error::InvalidState(format!("decomposition misses the density by {dev:.3e}")));
        }
        Ok(Self { density, decomposition: s.decomposition })
    }

    pub fn trivial(density: DensityMatrix) -> Self {
        Self { decomposition: vec![(1.0, density.clone())], density }
    }

    pub fn from_ensemble(e: &Ensemble) -> Self {
        Self { density: e.collapse(), decomposition: e.components().to_vec() }
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.density
    }

    pub fn decomposition(&self) -> &[(f64, DensityMatrix)] {
        &self.decomposition
    }

    pub fn weights(&self) -> Vec<f64> {
        self.decomposition.iter().map(|(w, _)| *w).collect()
    }
}

/// Anything that is a state rather than an ensemble.
#[derive(Debug, Clone)]
pub enum SingleState {
    Plain(DensityMatrix),
    Decorated(DecoratedState),
}

impl SingleState {
    pub fn density(&self) -> &DensityMatrix {
        match self {
            SingleState::Plain(d) => d,
            SingleState::Decorated(s) => s.density(),
        }
    }
}

impl From<DensityMatrix> for SingleState {
    fn from(d: DensityMatrix) -> Self {
        SingleState::Plain(d)
    }
}

impl From<DecoratedState> for SingleState {
    fn from(d: DecoratedState) -> Self {
        SingleState::Decorated(d)
    }
}

#[derive(Debug, Clone)]
pub struct StochasticOutcome {
    pub result: Preparation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// No sampled mixture exceeded the tolerance. A sampling audit supports
    /// this only inductively.
    ConvexLinear,
    NonConvexLinear,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub ensemble: Ensemble,
    pub gap: f64,
    /// Trial index, or `None` for a caller-supplied probe.
    pub trial: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub map: String,
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub verdict: Verdict,
    pub max_gap: f64,
    pub gaps: Vec<f64>,
    pub witness: Option<Witness>,
}

/// `{1/2 : |0><0|, 1/2 : |+><+|}` embedded in the first two levels of `d`.
pub fn canonical_witness(d: usize) -> Ensemble {
    assert!(d >= 2, "witness needs d >= 2");
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut plus = vec![c64(0.0, 0.0); d];
    plus[0] = c64(h, 0.0);
    plus[1] = c64(h, 0.0);
    let plus = PureState::new(plus).expect("unit vector").density();
    match Ensemble::new(vec![(0.5, DensityMatrix::basis(d, 0)), (0.5, plus)]).expect("valid") {
        Preparation::Ensemble(e) => e,
        Preparation::State(_) => unreachable!(),
    }
}

/// Compares `T(rho(E))` with `rho(T(E))` over `trials` seeded random
/// ensembles (trial `i` uses seed `seed + i`).
pub fn audit_convex_linearity(map: &DynamicalMap, dim: usize, trials: usize, seed: u64, tol: f64) -> Result<AuditReport> {
    audit_with_probes(map, dim, trials, seed, tol, &[])
}

/// Like [`audit_convex_linearity`], with extra fixed ensembles checked
/// after the random trials.
pub fn audit_with_probes(
    map: &DynamicalMap,
    dim: usize,
    trials: usize,
    seed: u64,
    tol: f64,
    probes: &[Ensemble],
) -> Result<AuditReport> {
    check_dim(map.dim(), dim)?;
    if trials == 0 && probes.is_empty() {
        return Err(Error::InvalidConfig("audit needs at least one trial".into()));
    }
    let sampled: Vec<(Option<usize>, Ensemble, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let e = sampling::random_ensemble(dim, &mut sampling::trial_rng(seed, i));
            let gap = map.convexity_gap(&e)?;
            Ok((Some(i), e, gap))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut all = sampled;
    for p in probes {
        check_dim(dim, p.dim())?;
        all.push((None, p.clone(), map.convexity_gap(p)?));
    }
    let gaps: Vec<f64> = all.iter().map(|(_, _, g)| *g).collect();
    let best = all
        .iter()
        .enumerate()
        .fold(0, |b, (i, (_, _, g))| if *g > all[b].2 { i } else { b });
    let max_gap = all[best].2;
    let verdict = if max_gap > tol { Verdict::NonConvexLinear } else { Verdict::ConvexLinear };
    let witness = (verdict == Verdict::NonConvexLinear).then(|| {
        let (trial, e, gap) = &all[best];
        Witness { ensemble: e.clone(), gap: *gap, trial: *trial }
    });
    Ok(AuditReport { map: map.describe(), dim, trials, seed, tol, verdict, max_gap, gaps, witness })
}

// ---- JSON descriptors ----

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Descriptor {
    kind: MapKind,
    dim: usize,
    #[serde(default)]
    parameters: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitaryParams {
    matrix: ComplexMatrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KrausParams {
    operators: Vec<ComplexMatrix>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeanFieldParams {
    h0: ComplexMatrix,
    coupling: ComplexMatrix,
    g: f64,
    tau: f64,
    steps: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuasiLinearParams {
    base: DynamicalMap,
    gamma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchParams {
    weight: f64,
    map: DynamicalMap,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StochasticParams {
    branches: Vec<BranchParams>,
}

fn params<T: serde::de::DeserializeOwned>(v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::InvalidMap(e.to_string()))
}

impl DynamicalMap {
    fn from_descriptor(d: Descriptor) -> Result<Self> {
        let map = match d.kind {
            MapKind::Unitary => Self::unitary(params::<UnitaryParams>(d.parameters)?.matrix)?,
            MapKind::Kraus => Self::kraus(params::<KrausParams>(d.parameters)?.operators)?,
            MapKind::NonlinearPurify => {
                if !(d.parameters.is_null() || d.parameters.as_object().is_some_and(|o| o.is_empty())) {
                    return Err(Error::InvalidMap("nonlinear_purify takes no parameters".into()));
                }
                Self::purify(d.dim)
            }
            MapKind::NonlinearMeanfield => {
                let p: MeanFieldParams = params(d.parameters)?;
                Self::mean_field(MeanField { h0: p.h0, coupling: p.coupling, g: p.g, tau: p.tau, steps: p.steps })?
            }
            MapKind::QuasiLinear => {
                let p: QuasiLinearParams = params(d.parameters)?;
                Self::quasi_linear(p.base, p.gamma)?
            }
            MapKind::Stochastic => {
                let p: StochasticParams = params(d.parameters)?;
                Self::stochastic(p.branches.into_iter().map(|b| (b.weight, b.map)).collect())?
            }
        };
        if map.dim != d.dim {
            return Err(Error::InvalidMap(format!("declared dim {} but parameters act on {}", d.dim, map.dim)));
        }
        Ok(map)
    }

    fn to_descriptor(&self) -> Descriptor {
        let parameters = match &self.spec {
            Spec::Unitary(u) => json!({ "matrix": u }),
            Spec::Kraus(ops) => json!({ "operators": ops }),
            Spec::Purify => json!({}),
            Spec::MeanField(mf) => json!({
                "h0": mf.h0, "coupling": mf.coupling, "g": mf.g, "tau": mf.tau, "steps": mf.steps
            }),
            Spec::QuasiLinear { base, gamma } => json!({ "base": base, "gamma": gamma }),
            Spec::Stochastic(b) => json!({
                "branches": b.iter().map(|(w, m)| json!({ "weight": w, "map": m })).collect::<Vec<_>>()
            }),
        };
        Descriptor { kind: self.kind(), dim: self.dim, parameters }
    }
}

impl Serialize for DynamicalMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_descriptor().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DynamicalMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let desc = Descriptor::deserialize(d)?;
        DynamicalMap::from_descriptor(desc).map_err(serde::de::Error::custom)
    }
}
