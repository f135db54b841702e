//! Runs the monotone coupling of the two sorted urn chains and prints one
//! trajectory followed by a batch summary.

use treetails::harness::run_coupling;
use treetails::rng;
use treetails::urn_domination::coupled_run;

fn main() -> treetails::Result<()> {
    let run = coupled_run(12, 3, &mut rng::stream(2, 0))?;
    for m in 0..=12 {
        println!("step {m:>2}: upper {:?}  lower {:?}", run.upper_at(m), run.lower_at(m));
    }
    let summary = run_coupling(3, 200, 2000, 2, 1, 0.01)?;
    println!(
        "{} runs, {} violations, mean max counts {:.2} / {:.2}, KS reject: {}",
        summary.runs, summary.violations, summary.mean_upper_max, summary.mean_lower_max, summary.marginal_ks.reject
    );
    Ok(())
}
