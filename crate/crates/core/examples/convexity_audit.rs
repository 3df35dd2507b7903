// Audit a few maps for convex-linearity on density matrices.

use qlab::dynamics::{audit_with_probes, canonical_witness, DEFAULT_AUDIT_TOL};
use qlab::{sampling, DynamicalMap};

pub fn run_example() -> qlab::Result<()> {
    let mut rng = sampling::rng(3);
    let maps = [
        DynamicalMap::unitary(sampling::random_unitary(2, &mut rng))?,
        DynamicalMap::kraus(sampling::random_kraus(2, 3, &mut rng))?,
        DynamicalMap::purify(2),
    ];
    for m in &maps {
        let r = audit_with_probes(m, 2, 50, 11, DEFAULT_AUDIT_TOL, &[canonical_witness(2)])?;
        println!("{:<18} {:?}  max gap {:.3e}", m.describe(), r.verdict, r.max_gap);
    }
    let gap = DynamicalMap::purify(2).convexity_gap(&canonical_witness(2))?;
    println!("purify on {{1/2: |0>, 1/2: |+>}}: {gap:.8} vs sqrt(2)/12 = {:.8}", 2f64.sqrt() / 12.0);
    Ok(())
}

fn main() -> qlab::Result<()> {
    run_example()
}
