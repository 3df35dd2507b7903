// Induced maps on IC probability vectors, and which maps keep equivalent
// preparations equivalent.

use qlab::gpt::{certificate_pairs, quantum_reduction_check, DEFAULT_GPT_TOL};
use qlab::suite::taxonomy;
use qlab::{build_ic_povm, equivalence_preservation_certificate, gpt_convex_linearity_check};

pub fn run_example() -> qlab::Result<()> {
    let ic = build_ic_povm(2, 5)?;
    let pairs = certificate_pairs(2, 5, 1);
    println!("{:<48} {:>18} {:>8} {:>8}", "map", "gpt verdict", "broken", "agree");
    for (map, _) in taxonomy(0) {
        let gpt = gpt_convex_linearity_check(&map, &ic, 20, 1, DEFAULT_GPT_TOL)?;
        let cert = equivalence_preservation_certificate(&map, &ic, &pairs, DEFAULT_GPT_TOL)?;
        let red = quantum_reduction_check(&map, &ic, 20, 1, DEFAULT_GPT_TOL)?;
        println!(
            "{:<48} {:>18} {:>8} {:>8}",
            map.describe(),
            format!("{:?}", gpt.verdict),
            cert.broken,
            red.agree && red.bounds_hold
        );
    }
    Ok(())
}

fn main() -> qlab::Result<()> {
    run_example()
}
