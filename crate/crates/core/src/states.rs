//! Kinematics: pure states, density matrices and epistemic ensembles.
//!
//! A [`DensityMatrix`] is a single state whose mixedness is not attributed to
//! anyone's ignorance. An [`Ensemble`] is a weighted list of states expressing
//! strictly epistemic uncertainty about which one applies. The two produce the
//! same statistics whenever `collapse()` agrees, but maps are free to treat them
//! differently, which is what the rest of the crate probes.
//!
//! An ensemble with a single member is the member itself, so constructors
//! return a [`Preparation`] that is either a bare state or a genuine ensemble.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::kernel::{c64, entries_from_wire, entries_to_wire, ComplexMatrix, Subsystem, C64, HERMITIAN_TOL};

/// Positivity slack for the smallest eigenvalue of a density matrix.
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Entrywise distance below which two components count as the same state.
pub const MERGE_TOL: f64 = 1e-9;
/// Weights below this are dropped and the remainder renormalized.
pub const WEIGHT_FLOOR: f64 = 1e-12;
/// Accepted slack in the sum of caller-supplied probability weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Wraps a unit vector, fixing the global phase so the first nonzero
    /// amplitude is real and nonnegative.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if amplitudes.is_empty() || (norm2 - 1.0).abs() >= 1e-10 {
            return Err(Error::InvalidState(format!("squared norm {norm2} is not 1")));
        }
        Ok(Self { amplitudes: fix_phase(amplitudes) })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if amplitudes.is_empty() || norm <= 1e-12 || !norm.is_finite() {
            return Err(Error::NullSuperposition);
        }
        Ok(Self { amplitudes: fix_phase(amplitudes.into_iter().map(|a| a / norm).collect()) })
    }

    pub fn basis(d: usize, k: usize) -> Self {
        assert!(k < d, "basis index {k} out of range for dimension {d}");
        let mut v = vec![C64::default(); d];
        v[k] = c64(1.0, 0.0);
        Self { amplitudes: v }
    }

    /// `(|0> + |1>)/sqrt 2`.
    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { amplitudes: vec![c64(h, 0.0), c64(h, 0.0)] }
    }

    /// `(|0> - |1>)/sqrt 2`.
    pub fn minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { amplitudes: vec![c64(h, 0.0), c64(-h, 0.0)] }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix { matrix: self.projector(), label: None }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let amplitudes =
            self.amplitudes.iter().flat_map(|a| other.amplitudes.iter().map(move |b| a * b)).collect();
        Self { amplitudes }
    }

    /// Equality up to a global phase.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let overlap: C64 =
            self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum();
        self.dim() == other.dim() && (1.0 - overlap.norm()).abs() < tol
    }
}

fn fix_phase(mut v: Vec<C64>) -> Vec<C64> {
    if let Some(first) = v.iter().find(|a| a.norm() > 1e-12).copied() {
        let rot = first.conj() / first.norm();
        for a in &mut v {
            *a *= rot;
        }
    }
    v
}

/// Normalized coherent sum `sum_j alpha_j |psi_j>`.
pub fn superpose(terms: &[(C64, PureState)]) -> Result<PureState> {
    let d = terms.first().ok_or(Error::NullSuperposition)?.1.dim();
    let mut acc = vec![C64::default(); d];
    for (alpha, psi) in terms {
        check_dim(d, psi.dim())?;
        for (slot, a) in acc.iter_mut().zip(psi.amplitudes()) {
            *slot += alpha * a;
        }
    }
    PureState::normalized(acc)
}

/// The entangled lab state `sum_k phase_k sqrt(lambda_k) |k>|k>` on
/// `K * pointer_dim`, where `K = weights.len()` and the pointer states are the
/// computational basis of the second factor.
pub fn lab_superposition(weights: &[f64], pointer_dim: usize, phases: Option<&[C64]>) -> Result<PureState> {
    let k = weights.len();
    validate_probabilities(weights)?;
    if pointer_dim < k {
        return Err(Error::PointerTooSmall { pointer_dim, outcomes: k });
    }
    if let Some(ph) = phases {
        check_dim(k, ph.len())?;
    }
    let mut amps = vec![C64::default(); k * pointer_dim];
    for (i, &w) in weights.iter().enumerate() {
        let phase = phases.map_or(c64(1.0, 0.0), |p| p[i]);
        amps[i * pointer_dim + i] = phase * w.max(0.0).sqrt();
    }
    PureState::normalized(amps)
}

pub(crate) fn validate_probabilities(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidWeights("no weights".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidWeights(format!("weights must be finite and nonnegative: {weights:?}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    label: Option<String>,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and unit trace. The stored matrix is
    /// the Hermitian part of the input.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState(format!("{}x{} is not square", matrix.rows(), matrix.cols())));
        }
        let herr = matrix.hermiticity_error();
        if herr > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (error {herr:.3e})")));
        }
        let matrix = matrix.hermitian_part();
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() >= TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = matrix.eig_hermitian()?.values[0];
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { matrix, label: None })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(d).scale_real(1.0 / d as f64), label: None }
    }

    pub fn basis(d: usize, k: usize) -> Self {
        PureState::basis(d, k).density()
    }

    /// `diag(p)` for a probability vector `p`.
    pub fn diagonal(p: &[f64]) -> Result<Self> {
        validate_probabilities(p)?;
        Self::new(ComplexMatrix::diag(p))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { matrix: self.matrix.tensor(&other.matrix), label: None }
    }

    pub fn partial_trace(&self, dims: (usize, usize), keep: Subsystem) -> Result<Self> {
        Ok(Self { matrix: self.matrix.partial_trace(dims, keep)?, label: None })
    }

    /// `1/2 || a - b ||_1`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(0.5 * (&self.matrix - &other.matrix).trace_norm()?)
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).map(|z| z.re).unwrap_or(f64::NAN)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }

    /// Same state within [`MERGE_TOL`], ignoring labels.
    pub fn same_state(&self, other: &Self) -> bool {
        self.max_abs_diff(other) < MERGE_TOL
    }
}

impl From<&PureState> for DensityMatrix {
    fn from(psi: &PureState) -> Self {
        psi.density()
    }
}

/// Epistemic mixture of at least two distinct states.
#[derive(Debug, Clone)]
pub struct Ensemble {
    components: Vec<(f64, DensityMatrix)>,
}

/// What gets assigned to a system: a single state or a genuine ensemble.
#[derive(Debug, Clone)]
pub enum Preparation {
    State(DensityMatrix),
    Ensemble(Ensemble),
}

impl Ensemble {
    /// Builds `{w_k : rho_k}`. Weights below [`WEIGHT_FLOOR`] are dropped,
    /// duplicate states merged by weight addition, and the result
    /// renormalized. A single surviving component comes back as a bare state.
    #[allow(clippy::new_ret_no_self)]
    pub fn new(components: Vec<(f64, DensityMatrix)>) -> Result<Preparation> {
        let weights: Vec<f64> = components.iter().map(|(w, _)| *w).collect();
        validate_probabilities(&weights)?;
        let d = components[0].1.dim();
        for (_, s) in &components {
            check_dim(d, s.dim())?;
        }

        let mut merged: Vec<(f64, DensityMatrix)> = Vec::with_capacity(components.len());
        for (w, state) in components {
            if w < WEIGHT_FLOOR {
                continue;
            }
            match merged.iter_mut().find(|(_, s)| s.same_state(&state)) {
                Some((acc, _)) => *acc += w,
                None => merged.push((w, state)),
            }
        }
        // weights already normalized up to rounding pass through untouched
        let total: f64 = merged.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 64.0 * f64::EPSILON {
            for (w, _) in &mut merged {
                *w /= total;
            }
        }
        if merged.len() == 1 {
            Ok(Preparation::State(merged.pop().unwrap().1))
        } else {
            Ok(Preparation::Ensemble(Self { components: merged }))
        }
    }

    pub fn components(&self) -> &[(f64, DensityMatrix)] {
        &self.components
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|(w, _)| *w).collect()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].1.dim()
    }

    /// `sum_k lambda_k rho_k`.
    pub fn collapse(&self) -> DensityMatrix {
        collapse_components(&self.components)
    }
}

pub(crate) fn collapse_components(components: &[(f64, DensityMatrix)]) -> DensityMatrix {
    let d = components[0].1.dim();
    let mut acc = ComplexMatrix::zeros(d, d);
    for (w, s) in components {
        acc = &acc + &s.matrix().scale_real(*w);
    }
    DensityMatrix { matrix: acc.hermitian_part(), label: None }
}

impl Preparation {
    pub fn dim(&self) -> usize {
        match self {
            Preparation::State(s) => s.dim(),
            Preparation::Ensemble(e) => e.dim(),
        }
    }

    pub fn is_ensemble(&self) -> bool {
        matches!(self, Preparation::Ensemble(_))
    }

    pub fn as_state(&self) -> Option<&DensityMatrix> {
        match self {
            Preparation::State(s) => Some(s),
            Preparation::Ensemble(_) => None,
        }
    }

    pub fn as_ensemble(&self) -> Option<&Ensemble> {
        match self {
            Preparation::State(_) => None,
            Preparation::Ensemble(e) => Some(e),
        }
    }

    /// Weighted members; a bare state is `{1 : S}`.
    pub fn components(&self) -> Vec<(f64, &DensityMatrix)> {
        match self {
            Preparation::State(s) => vec![(1.0, s)],
            Preparation::Ensemble(e) => e.components.iter().map(|(w, s)| (*w, s)).collect(),
        }
    }

    pub fn into_components(self) -> Vec<(f64, DensityMatrix)> {
        match self {
            Preparation::State(s) => vec![(1.0, s)],
            Preparation::Ensemble(e) => e.components,
        }
    }

    /// The single density matrix with the same statistics.
    pub fn collapse(&self) -> DensityMatrix {
        match self {
            Preparation::State(s) => s.clone(),
            Preparation::Ensemble(e) => e.collapse(),
        }
    }
}

impl From<DensityMatrix> for Preparation {
    fn from(s: DensityMatrix) -> Self {
        Preparation::State(s)
    }
}

/// Collapses an ensemble of preparations into one: each member's weight is
/// the sum over parents of `p_parent * lambda_parent`.
pub fn flatten(meta: Vec<(f64, Preparation)>) -> Result<Preparation> {
    let ps: Vec<f64> = meta.iter().map(|(p, _)| *p).collect();
    validate_probabilities(&ps)?;
    let mut union = Vec::new();
    for (p, prep) in meta {
        union.extend(prep.into_components().into_iter().map(|(w, s)| (p * w, s)));
    }
    Ensemble::new(union)
}

/// Partial-traces every member and keeps the weights.
pub fn reduced_ensemble(prep: &Preparation, dims: (usize, usize), keep: Subsystem) -> Result<Preparation> {
    let reduced = prep
        .components()
        .into_iter()
        .map(|(w, s)| Ok((w, s.partial_trace(dims, keep)?)))
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(reduced)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityWire {
    dim: usize,
    entries: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DensityWire {
            dim: self.dim(),
            entries: entries_to_wire(self.matrix.as_slice()),
            label: self.label.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = DensityWire::deserialize(d)?;
        let m = ComplexMatrix::new(w.dim, w.dim, entries_from_wire(&w.entries))
            .map_err(serde::de::Error::custom)?;
        let mut s = DensityMatrix::new(m).map_err(serde::de::Error::custom)?;
        s.label = w.label;
        Ok(s)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentWire {
    weight: f64,
    state: DensityMatrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleWire {
    components: Vec<ComponentWire>,
}

impl Serialize for Ensemble {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EnsembleWire {
            components: self
                .components
                .iter()
                .map(|(w, st)| ComponentWire { weight: *w, state: st.clone() })
                .collect(),
        }
        .serialize(s)
    }
}

/// Serialized in the ensemble layout; a bare state is a single component.
impl Serialize for Preparation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Preparation::Ensemble(e) => e.serialize(s),
            Preparation::State(st) => EnsembleWire {
                components: vec![ComponentWire { weight: 1.0, state: st.clone() }],
            }
            .serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Preparation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = EnsembleWire::deserialize(d)?;
        if w.components.is_empty() {
            return Err(serde::de::Error::custom("ensemble without components"));
        }
        Ensemble::new(w.components.into_iter().map(|c| (c.weight, c.state)).collect())
            .map_err(serde::de::Error::custom)
    }
}
