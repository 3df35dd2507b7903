// Build a seeded IC POVM and reconstruct states from their statistics.

use qlab::{build_ic_povm, sampling};

pub fn run_example() -> qlab::Result<()> {
    for d in 2..=4 {
        let ic = build_ic_povm(d, 7)?;
        let mut rng = sampling::rng(100 + d as u64);
        let worst = (0..20)
            .map(|_| {
                let rho = sampling::random_density(d, &mut rng);
                Ok(ic.reconstruct(&ic.prob_vector(&rho)?)?.max_abs_diff(&rho))
            })
            .collect::<qlab::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        println!(
            "{}: {} effects, Gram condition {:.1}, worst roundtrip error {worst:.2e}",
            ic.id(),
            ic.povm().len(),
            ic.gram_condition()
        );
    }
    Ok(())
}

fn main() -> qlab::Result<()> {
    run_example()
}
