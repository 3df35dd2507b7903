// Run the bundled checks and print one line each.

use qlab::suite::run_paper_suite;

pub fn run_example() -> qlab::Result<()> {
    let (report, timings) = run_paper_suite(0, &[])?;
    for (c, t) in report.checks.iter().zip(&timings) {
        println!("{:<26} {:?}  gap {:.3e}  {:.1} ms", c.check_name, c.status, c.gap, t.runtime_ms);
    }
    println!("all passed: {}", report.passed);
    Ok(())
}

fn main() -> qlab::Result<()> {
    run_example()
}
