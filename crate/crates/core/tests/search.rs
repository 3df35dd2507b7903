use qlab::kernel::ComplexMatrix;
use qlab::lab::{search_best_protocol, LabScenario, MapFamily};
use qlab::{DynamicalMap, Povm};

fn quarter() -> LabScenario {
    LabScenario::new(vec![0.25, 0.75], 2, None).unwrap()
}

fn mean_field(h0: ComplexMatrix, g_range: (f64, f64)) -> MapFamily {
    MapFamily::MeanField { h0, coupling: ComplexMatrix::pauli_z(), tau: 1.0, steps: 1000, g_range }
}

#[test]
fn unitary_family_never_separates_the_worlds() {
    let fam = MapFamily::Unitary {
        generators: vec![ComplexMatrix::pauli_x(), ComplexMatrix::pauli_y(), ComplexMatrix::pauli_z()],
        ranges: vec![(-2.0, 2.0); 3],
    };
    for budget in [1, 8, 27] {
        let r = search_best_protocol(&quarter(), &fam, &[Povm::computational_basis(2)], budget, 1e-6).unwrap();
        assert!(r.best.tv_distance < 1e-8, "budget {budget}: {}", r.best.tv_distance);
    }
}

#[test]
fn mean_field_at_zero_coupling_is_unitary() {
    let fam = mean_field(ComplexMatrix::pauli_x(), (0.0, 0.0));
    let r = search_best_protocol(&quarter(), &fam, &[Povm::computational_basis(2)], 5, 1e-6).unwrap();
    assert_eq!(r.params, vec![0.0]);
    assert!(r.best.tv_distance < 1e-6);
}

#[test]
fn diagonal_mean_field_is_stationary() {
    // H0 = A = Z commute with every diagonal state, so both worlds stay put
    let r = search_best_protocol(
        &quarter(),
        &mean_field(ComplexMatrix::pauli_z(), (0.0, 5.0)),
        &[Povm::computational_basis(2)],
        11,
        1e-6,
    )
    .unwrap();
    assert!(r.evaluations.iter().all(|e| e.tv_distance < 1e-12));
}

#[test]
fn transverse_mean_field_optimum_is_frozen() {
    let r = search_best_protocol(
        &quarter(),
        &mean_field(ComplexMatrix::pauli_x(), (0.0, 5.0)),
        &[Povm::computational_basis(2)],
        11,
        1e-6,
    )
    .unwrap();
    let at_zero = r.evaluations.iter().find(|e| e.params == [0.0]).unwrap().tv_distance;
    assert!(at_zero < 1e-6);
    assert!(r.best.tv_distance > at_zero);
    assert!(r.best.tv_distance >= r.grid_best);
    // regression values from the first seeded run
    assert!((r.params[0] - 3.0804).abs() < 1e-3, "g* = {}", r.params[0]);
    assert!((r.best.tv_distance - 0.246970).abs() < 1e-6, "tv = {}", r.best.tv_distance);
}

#[test]
fn quasi_linear_family_prefers_large_exponents() {
    let fam = MapFamily::QuasiLinear { base: DynamicalMap::identity(2), gamma_range: (0.5, 3.0) };
    let r = search_best_protocol(&quarter(), &fam, &[Povm::computational_basis(2)], 6, 1e-6).unwrap();
    assert!((r.params[0] - 3.0).abs() < 1e-9);
    // 1/28 vs 1/4
    assert!((r.best.tv_distance - (0.25 - 1.0 / 28.0)).abs() < 1e-12);
}
