//! POVMs, Born statistics and informationally-complete frames.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gpt::ProbVector;
use crate::kernel::{ComplexMatrix, HERMITIAN_TOL};
use crate::sampling;
use crate::states::{DensityMatrix, Preparation, PSD_TOL};

pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Default max-norm tolerance on IC probability vectors for calling two
/// preparations statistically equivalent.
pub const DEFAULT_EQUIVALENCE_TOL: f64 = 1e-9;
pub const DEFAULT_QUASI_SUPERPOSITION_THRESHOLD: f64 = 1e-6;
/// Retries (with incremented seed) before IC construction gives up.
pub const IC_MAX_RETRIES: u64 = 16;
pub const IC_MAX_CONDITION: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
    outcome_labels: Vec<i64>,
}

impl Povm {
    /// Effects labelled `0..n`.
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let labels = (0..effects.len() as i64).collect();
        Self::with_labels(effects, labels)
    }

    pub fn with_labels(effects: Vec<ComplexMatrix>, outcome_labels: Vec<i64>) -> Result<Self> {
        let first = effects.first().ok_or_else(|| Error::InvalidPovm("no effects".into()))?;
        if outcome_labels.len() != effects.len() {
            return Err(Error::InvalidPovm(format!(
                "{} labels for {} effects",
                outcome_labels.len(),
                effects.len()
            )));
        }
        let d = first.rows();
        let mut sum = ComplexMatrix::zeros(d, d);
        for (k, e) in effects.iter().enumerate() {
            if !e.is_square() || e.rows() != d {
                return Err(Error::InvalidPovm(format!("effect {k} is not {d}x{d}")));
            }
            if !e.is_hermitian(HERMITIAN_TOL) {
                return Err(Error::InvalidPovm(format!("effect {k} is not Hermitian")));
            }
            let min = e.eig_hermitian()?.values[0];
            if min < -PSD_TOL {
                return Err(Error::InvalidPovm(format!("effect {k} has eigenvalue {min:.3e}")));
            }
            sum = &sum + e;
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(d));
        if dev >= COMPLETENESS_TOL {
            return Err(Error::InvalidPovm(format!("effects sum to identity only within {dev:.3e}")));
        }
        let effects = effects.into_iter().map(|e| e.hermitian_part()).collect();
        Ok(Self { effects, outcome_labels })
    }

    /// Projective measurement in the computational basis.
    pub fn computational_basis(d: usize) -> Self {
        let effects = (0..d).map(|k| DensityMatrix::basis(d, k).matrix().clone()).collect();
        Self { effects, outcome_labels: (0..d as i64).collect() }
    }

    /// Pointer readout on the second factor of `d1 * d2`: effects
    /// `I (x) |k><k|`.
    pub fn pointer(d1: usize, d2: usize) -> Self {
        let id = ComplexMatrix::identity(d1);
        let effects = (0..d2).map(|k| id.tensor(DensityMatrix::basis(d2, k).matrix())).collect();
        Self { effects, outcome_labels: (0..d2 as i64).collect() }
    }

    pub fn dim(&self) -> usize {
        self.effects[0].rows()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn labels(&self) -> &[i64] {
        &self.outcome_labels
    }

    /// Same effects conjugated by a unitary: `{U E U^dagger}`.
    pub fn rotated(&self, u: &ComplexMatrix) -> Result<Self> {
        let effects = self.effects.iter().map(|e| u.conjugate(e)).collect::<Result<Vec<_>>>()?;
        Self::with_labels(effects, self.outcome_labels.clone())
    }

    /// `Pr(k) = tr(rho M_k)`.
    pub fn born(&self, state: &DensityMatrix) -> Result<OutcomeDistribution> {
        check_dim(self.dim(), state.dim())?;
        let probs = self
            .effects
            .iter()
            .map(|e| Ok(state.matrix().trace_product(e)?.re))
            .collect::<Result<Vec<f64>>>()?;
        OutcomeDistribution::new(probs, self.outcome_labels.clone())
    }

    /// Mixture of the members' distributions, weighted by their epistemic
    /// weights.
    pub fn born_ensemble(&self, prep: &Preparation) -> Result<OutcomeDistribution> {
        check_dim(self.dim(), prep.dim())?;
        let mut acc = vec![0.0; self.len()];
        for (w, s) in prep.components() {
            let dist = self.born(s)?;
            for (a, p) in acc.iter_mut().zip(dist.probabilities()) {
                *a += w * p;
            }
        }
        OutcomeDistribution::new(acc, self.outcome_labels.clone())
    }

    /// Whether the effects are mutually orthogonal projectors.
    pub fn is_projective(&self, tol: f64) -> bool {
        self.effects.iter().enumerate().all(|(i, a)| {
            let aa = a.matmul(a).expect("square");
            aa.max_abs_diff(a) < tol
                && self.effects[i + 1..]
                    .iter()
                    .all(|b| a.matmul(b).expect("square").max_abs() < tol)
        })
    }
}

impl<'de> Deserialize<'de> for Povm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Wire {
            effects: Vec<ComplexMatrix>,
            #[serde(default)]
            outcome_labels: Option<Vec<i64>>,
        }
        let w = Wire::deserialize(d)?;
        let labels = w.outcome_labels.unwrap_or_else(|| (0..w.effects.len() as i64).collect());
        Povm::with_labels(w.effects, labels).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    probabilities: Vec<f64>,
    labels: Vec<i64>,
}

impl OutcomeDistribution {
    /// Clamps float noise in `[-1e-12, 1 + 1e-12]` to `[0, 1]`; anything
    /// further out, or a total off by more than 1e-9, is rejected.
    pub fn new(probabilities: Vec<f64>, labels: Vec<i64>) -> Result<Self> {
        if probabilities.len() != labels.len() {
            return Err(Error::DimMismatch { expected: labels.len(), found: probabilities.len() });
        }
        if probabilities.iter().any(|p| !(-1e-12..=1.0 + 1e-12).contains(p)) {
            return Err(Error::InvalidWeights(format!("probabilities out of range: {probabilities:?}")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights(format!("probabilities sum to {total}")));
        }
        let probabilities = probabilities.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
        Ok(Self { probabilities, labels })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    /// `1/2 sum_j |p_j - q_j|`.
    pub fn tv_distance(&self, other: &Self) -> f64 {
        0.5 * self.probabilities.iter().zip(&other.probabilities).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probabilities.iter().zip(&other.probabilities).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// A POVM verified to be informationally complete, together with the data
/// needed to invert its statistics.
#[derive(Debug, Clone)]
pub struct IcPovm {
    povm: Povm,
    id: String,
    gram_pinv: DMatrix<f64>,
    gram_min: f64,
    gram_max: f64,
}

impl IcPovm {
    /// Random-frame IC-POVM: `d^2` seeded Haar states dressed by
    /// `F^{-1/2}` so the effects sum to the identity. Falls back to
    /// `seed + 1, seed + 2, ...` when the frame is degenerate or badly
    /// conditioned.
    pub fn build(d: usize, seed: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidConfig(format!("IC construction needs d >= 2, got {d}")));
        }
        for attempt in 0..=IC_MAX_RETRIES {
            let s = seed.wrapping_add(attempt);
            if let Some(ic) = Self::try_frame(d, s) {
                return Ok(ic);
            }
        }
        Err(Error::IcConstructionFailed(d))
    }

    fn try_frame(d: usize, seed: u64) -> Option<Self> {
        let mut rng = sampling::rng(seed);
        let kets: Vec<_> = (0..d * d).map(|_| sampling::haar_pure_state(d, &mut rng)).collect();
        let mut frame = ComplexMatrix::zeros(d, d);
        for k in &kets {
            frame = &frame + &k.projector();
        }
        let dress = frame.inv_sqrt_psd(1e-10).ok()?;
        let effects = kets
            .iter()
            .map(|k| ComplexMatrix::outer(&dress.apply(k.amplitudes()).expect("dims")))
            .collect();
        let povm = Povm::new(effects).ok()?;
        Self::with_id(povm, format!("ic-d{d}-seed{seed}")).ok()
    }

    /// Checks an arbitrary POVM for informational completeness via the rank
    /// and conditioning of its effect Gram matrix.
    pub fn from_povm(povm: Povm, id: impl Into<String>) -> Result<Self> {
        Self::with_id(povm, id.into())
    }

    fn with_id(povm: Povm, id: String) -> Result<Self> {
        let d = povm.dim();
        let n = povm.len();
        if n < d * d {
            return Err(Error::NotInformationallyComplete(format!("{n} effects cannot span {} dimensions", d * d)));
        }
        let gram = DMatrix::from_fn(n, n, |i, j| {
            povm.effects[i].trace_product(&povm.effects[j]).expect("dims").re
        });
        let eig = SymmetricEigen::new(gram);
        let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let cutoff = max * 1e-12;
        let rank = eig.eigenvalues.iter().filter(|&&l| l > cutoff).count();
        if rank != d * d {
            return Err(Error::NotInformationallyComplete(format!("Gram rank {rank}, need {}", d * d)));
        }
        let min = eig.eigenvalues.iter().copied().filter(|&l| l > cutoff).fold(f64::INFINITY, f64::min);
        if max / min >= IC_MAX_CONDITION {
            return Err(Error::NotInformationallyComplete(format!("Gram condition number {:.3e}", max / min)));
        }
        let inv = eig.eigenvalues.map(|l| if l > cutoff { 1.0 / l } else { 0.0 });
        let v = &eig.eigenvectors;
        let gram_pinv = v * DMatrix::from_diagonal(&inv) * v.transpose();
        Ok(Self { povm, id, gram_pinv, gram_min: min, gram_max: max })
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.povm.dim()
    }

    pub fn gram_rank(&self) -> usize {
        self.dim() * self.dim()
    }

    pub fn gram_condition(&self) -> f64 {
        self.gram_max / self.gram_min
    }

    /// `p_S = {tr(rho Pi_i)}_i`.
    pub fn prob_vector(&self, state: &DensityMatrix) -> Result<ProbVector> {
        let dist = self.povm.born(state)?;
        ProbVector::new(dist.probabilities().to_vec(), self.id.clone())
    }

    /// IC statistics of a state or ensemble.
    pub fn prob_vector_of(&self, prep: &Preparation) -> Result<ProbVector> {
        let dist = self.povm.born_ensemble(prep)?;
        ProbVector::new(dist.probabilities().to_vec(), self.id.clone())
    }

    /// The unique operator in the span of the effects with the given
    /// statistics, without any positivity repair.
    pub fn linear_inversion(&self, probabilities: &[f64]) -> Result<ComplexMatrix> {
        check_dim(self.povm.len(), probabilities.len())?;
        let p = nalgebra::DVector::from_column_slice(probabilities);
        let coeffs = &self.gram_pinv * p;
        let d = self.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (c, e) in coeffs.iter().zip(&self.povm.effects) {
            acc = &acc + &e.scale_real(*c);
        }
        Ok(acc.hermitian_part())
    }

    /// Linear inversion, then clipping of eigenvalues in `[-1e-8, 0)` and
    /// trace renormalization.
    pub fn reconstruct(&self, p: &ProbVector) -> Result<DensityMatrix> {
        if p.ic_ref() != self.id {
            return Err(Error::NotAStateVector(format!("vector from frame {}, not {}", p.ic_ref(), self.id)));
        }
        let raw = self.linear_inversion(p.entries())?;
        let eig = raw.eig_hermitian()?;
        if eig.values[0] < -1e-8 {
            return Err(Error::NotAStateVector(format!("reconstructed eigenvalue {:.3e}", eig.values[0])));
        }
        let clipped = eig.reassemble(|l| crate::kernel::c64(l.max(0.0), 0.0));
        let tr = clipped.trace().re;
        DensityMatrix::new(clipped.scale_real(1.0 / tr)).map_err(|e| Error::NotAStateVector(e.to_string()))
    }

    /// Lower bound `c` with `max_i |tr(X Pi_i)| >= c * D` for any pair of
    /// states at trace distance `D`.
    pub fn frame_constant(&self) -> f64 {
        let n = self.povm.len() as f64;
        let max_tr = self.povm.effects.iter().map(|e| e.trace().re).fold(0.0, f64::max);
        2.0 * self.gram_min / (n * max_tr)
    }

    /// Max-norm distance between IC statistics.
    pub fn equivalence_gap(&self, a: &Preparation, b: &Preparation) -> Result<f64> {
        Ok(self.prob_vector_of(a)?.max_abs_diff(&self.prob_vector_of(b)?))
    }
}

/// Shorthand for [`IcPovm::build`].
pub fn build_ic_povm(d: usize, seed: u64) -> Result<IcPovm> {
    IcPovm::build(d, seed)
}

/// Whether two preparations produce the same IC statistics within `tol`.
/// Mismatched dimensions are never equivalent.
pub fn same_equivalence_class(a: &Preparation, b: &Preparation, ic: &IcPovm, tol: f64) -> bool {
    ic.equivalence_gap(a, b).map(|g| g < tol).unwrap_or(false)
}

/// A state (never an ensemble) that leaves at least two outcomes of the
/// classical measurement above `threshold`.
pub fn is_quasi_superposition(state: &DensityMatrix, classical: &Povm, threshold: f64) -> Result<bool> {
    if !classical.is_projective(1e-9) {
        return Err(Error::NotClassicalMeasurement("effects are not orthogonal projectors".into()));
    }
    let dist = classical.born(state)?;
    Ok(dist.probabilities().iter().filter(|&&p| p > threshold).count() >= 2)
}
