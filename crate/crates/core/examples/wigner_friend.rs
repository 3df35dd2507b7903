// The sealed laboratory: the reduced ensemble and the reduced
// superposition agree on every measurement, until a nonlinear map is
// allowed inside.

use qlab::lab::{run_friend_protocol, theorem1_verify, LabScenario};
use qlab::{build_ic_povm, C64, DynamicalMap, Povm};

pub fn run_example() -> qlab::Result<()> {
    let phases = vec![C64::from_polar(1.0, 0.3), C64::from_polar(1.0, 2.0)];
    let s = LabScenario::new(vec![0.25, 0.75], 2, Some(phases))?;
    let ic = build_ic_povm(2, 1)?;
    println!("marginal gap on IC statistics: {:.2e}", theorem1_verify(&s, &ic)?);

    let z = Povm::computational_basis(2);
    for map in [DynamicalMap::identity(2), DynamicalMap::purify(2)] {
        let r = run_friend_protocol(&s, &map, &z, 1e-6)?;
        println!(
            "{:<16} ensemble {:?}  superposition {:?}  tv {:.3}  {:?}",
            map.describe(),
            r.ensemble_side,
            r.superposition_side,
            r.tv_distance,
            r.verdict
        );
    }
    Ok(())
}

fn main() -> qlab::Result<()> {
    run_example()
}
