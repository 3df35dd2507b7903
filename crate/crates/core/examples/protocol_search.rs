// Search a mean-field family for the coupling that best separates the two
// worlds. With H0 = Z the diagonal reduced states never move, so nothing
// is found; with H0 = X there is a clear optimum.

use qlab::kernel::ComplexMatrix;
use qlab::lab::{search_best_protocol, LabScenario, MapFamily};
use qlab::Povm;

pub fn run_example() -> qlab::Result<()> {
    let s = LabScenario::new(vec![0.25, 0.75], 2, None)?;
    for (name, h0) in [("Z", ComplexMatrix::pauli_z()), ("X", ComplexMatrix::pauli_x())] {
        let fam =
            MapFamily::MeanField { h0, coupling: ComplexMatrix::pauli_z(), tau: 1.0, steps: 1000, g_range: (0.0, 5.0) };
        let r = search_best_protocol(&s, &fam, &[Povm::computational_basis(2)], 11, 1e-6)?;
        println!(
            "H0 = {name}: g* = {:.4}, tv = {:.6} ({} evaluations)",
            r.params[0],
            r.best.tv_distance,
            r.evaluations.len()
        );
    }
    Ok(())
}

fn main() -> qlab::Result<()> {
    run_example()
}
