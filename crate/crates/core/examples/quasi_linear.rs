// Quasi-linear maps reweight a decomposition, so their action depends on
// which decomposition a state carries.

use qlab::suite::quarter_decompositions;
use qlab::{DensityMatrix, DecoratedState, DynamicalMap};

pub fn run_example() -> qlab::Result<()> {
    let s = DecoratedState::new(vec![(0.25, DensityMatrix::basis(2, 0)), (0.75, DensityMatrix::basis(2, 1))])?;
    for gamma in [1.0, 2.0, 3.0] {
        let m = DynamicalMap::quasi_linear(DynamicalMap::identity(2), gamma)?;
        println!("gamma = {gamma}: weights {:?}", m.apply_quasilinear(&s)?.weights());
    }

    let (pointer, tilted) = quarter_decompositions();
    let sq = DynamicalMap::quasi_linear(DynamicalMap::identity(2), 2.0)?;
    let a = sq.apply_quasilinear(&pointer)?;
    let b = sq.apply_quasilinear(&tilted)?;
    println!(
        "diag(1/4, 3/4) in two decompositions -> images {:.2} apart in trace distance",
        a.density().trace_distance(b.density())?
    );
    Ok(())
}

fn main() -> qlab::Result<()> {
    run_example()
}
