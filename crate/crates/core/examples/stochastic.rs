// A stochastic map returns an ensemble of branch images. One nonlinear
// branch is enough to let the friend tell the two worlds apart.

use qlab::lab::{run_friend_protocol, LabScenario};
use qlab::suite::purify_branch;
use qlab::{DensityMatrix, Povm};

pub fn run_example() -> qlab::Result<()> {
    let rho = DensityMatrix::diagonal(&[0.25, 0.75])?;
    let out = purify_branch(0.5)?.apply_stochastic(&rho)?.result;
    for (w, s) in out.components() {
        println!("branch {w}: diag = ({:.3}, {:.3})", s.matrix()[(0, 0)].re, s.matrix()[(1, 1)].re);
    }

    let s = LabScenario::new(vec![0.25, 0.75], 2, None)?;
    for w in [0.01, 0.5, 0.99] {
        let r = run_friend_protocol(&s, &purify_branch(w)?, &Povm::computational_basis(2), 1e-6)?;
        println!("w = {w:<4}  tv = {:.5}  {:?}", r.tv_distance, r.verdict);
    }
    Ok(())
}

fn main() -> qlab::Result<()> {
    run_example()
}
