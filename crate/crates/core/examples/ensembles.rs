// An ensemble and the improper mixed state it collapses to are different
// objects, even though every measurement sees the same statistics.

use qlab::{DensityMatrix, Ensemble, Povm, Preparation, PureState};

pub fn run_example() -> qlab::Result<()> {
    let e = Ensemble::new(vec![(0.5, DensityMatrix::basis(2, 0)), (0.5, DensityMatrix::basis(2, 1))])?;
    let mixed = DensityMatrix::maximally_mixed(2);
    println!("ensemble members: {}", e.as_ensemble().map_or(1, |e| e.len()));
    println!("collapse equals I/2: {}", e.collapse().same_state(&mixed));

    let z = Povm::computational_basis(2);
    println!("Z statistics, ensemble: {:?}", z.born_ensemble(&e)?.probabilities());
    println!("Z statistics, I/2:      {:?}", z.born(&mixed)?.probabilities());

    // a one-member ensemble is just a state
    let single = Ensemble::new(vec![(1.0, PureState::plus().density())])?;
    println!("single member is a bare state: {}", matches!(single, Preparation::State(_)));

    // repeated members merge
    let merged = Ensemble::new(vec![(0.3, mixed.clone()), (0.7, mixed)])?;
    println!("duplicates merge to a state: {}", !merged.is_ensemble());
    Ok(())
}

fn main() -> qlab::Result<()> {
    run_example()
}
