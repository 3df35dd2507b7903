// Tensor products, partial traces and trace distances.

use qlab::kernel::{ComplexMatrix, Subsystem};
use qlab::{DensityMatrix, PureState};

pub fn run_example() -> qlab::Result<()> {
    let x = ComplexMatrix::pauli_x();
    let xx = x.tensor(&x);
    let flipped = xx.apply(PureState::basis(4, 0).amplitudes())?;
    println!("XX|00> has amplitude {} on |11>", flipped[3]);

    let rho = DensityMatrix::diagonal(&[0.25, 0.75])?;
    let joint = rho.tensor(&PureState::plus().density());
    let back = joint.partial_trace((2, 2), Subsystem::First)?;
    println!("tr_2(rho (x) |+><+|) recovers rho: {}", back.same_state(&rho));

    let d = PureState::basis(2, 0).density().trace_distance(&PureState::plus().density())?;
    println!("D(|0>, |+>) = {d:.6} (1/sqrt 2 = {:.6})", std::f64::consts::FRAC_1_SQRT_2);
    Ok(())
}

fn main() -> qlab::Result<()> {
    run_example()
}
