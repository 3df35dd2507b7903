//! Seeded random states, ensembles, unitaries and channels.
//!
//! All generators take an explicit RNG; [`rng`] builds the crate's standard
//! ChaCha stream from a `u64` seed so results are reproducible across runs and
//! platforms.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::kernel::{c64, ComplexMatrix, C64};
use crate::states::{DensityMatrix, Ensemble, Preparation, PureState};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-trial stream: `seed + trial`, so trials can run in any order.
pub fn trial_rng(seed: u64, trial: usize) -> SeededRng {
    rng(seed.wrapping_add(trial as u64))
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im)
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn haar_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureState {
    let v: Vec<C64> = (0..d).map(|_| complex_gaussian(rng)).collect();
    PureState::normalized(v).expect("gaussian vector has nonzero norm")
}

/// Full-rank mixed state `G G^dagger / tr(G G^dagger)`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(d, d, rng);
    let w = g.matmul(&g.adjoint()).expect("square");
    let tr = w.trace().re;
    DensityMatrix::new(w.scale_real(1.0 / tr)).expect("wishart matrix is a valid state")
}

/// Flat Dirichlet sample.
pub fn random_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// 2 to 4 full-rank components with random weights.
pub fn random_ensemble<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Ensemble {
    let n = rng.random_range(2..=4);
    let weights = random_weights(n, rng);
    let comps = weights.into_iter().map(|w| (w, random_density(d, rng))).collect();
    match Ensemble::new(comps).expect("valid components") {
        Preparation::Ensemble(e) => e,
        Preparation::State(_) => unreachable!("distinct random states never merge"),
    }
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    ginibre(d, d, rng).hermitian_part()
}

/// Haar unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(d, d, rng);
    let na = DMatrix::from_fn(d, d, |i, j| g[(i, j)]);
    let qr = na.qr();
    let q = qr.q();
    let r = qr.r();
    ComplexMatrix::from_fn(d, d, |i, j| {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c64(1.0, 0.0) };
        q[(i, j)] * phase
    })
}

/// Kraus operators cut from a random isometry `d -> n d`.
pub fn random_kraus<R: Rng + ?Sized>(d: usize, n_ops: usize, rng: &mut R) -> Vec<ComplexMatrix> {
    let g = ginibre(n_ops * d, d, rng);
    let gram = g.adjoint().matmul(&g).expect("shapes agree");
    let v = g.matmul(&gram.inv_sqrt_psd(1e-12).expect("ginibre columns are independent")).expect("shapes");
    (0..n_ops)
        .map(|k| ComplexMatrix::from_fn(d, d, |i, j| v[(k * d + i, j)]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let a = random_density(3, &mut rng(11));
        let b = random_density(3, &mut rng(11));
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn unitaries_are_unitary() {
        let mut r = rng(3);
        for d in 2..=5 {
            let u = random_unitary(d, &mut r);
            let uu = u.adjoint().matmul(&u).unwrap();
            assert!(uu.max_abs_diff(&ComplexMatrix::identity(d)) < 1e-12);
        }
    }

    #[test]
    fn kraus_sets_are_trace_preserving() {
        let mut r = rng(5);
        let ks = random_kraus(3, 4, &mut r);
        let mut acc = ComplexMatrix::zeros(3, 3);
        for k in &ks {
            acc = &acc + &k.adjoint().matmul(k).unwrap();
        }
        assert!(acc.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn ensembles_have_two_to_four_members() {
        let mut r = rng(9);
        for _ in 0..20 {
            let e = random_ensemble(2, &mut r);
            assert!((2..=4).contains(&e.len()));
        }
    }
}
