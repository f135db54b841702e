//! Estimates the toll bound `D` empirically for a few weight families and
//! runs the toll summary at one size.

use treetails::harness::{run_toll, ExperimentConfig};
use treetails::recursion_core::estimate_d_bound;
use treetails::tree_models::WeightSampler;

fn main() -> treetails::Result<()> {
    for (b, spec) in [(2, "unit"), (3, "perm:1,0,0"), (4, "const:0.5,0.5,0.5,0.5")] {
        let sampler = WeightSampler::parse(spec, b)?;
        let est = estimate_d_bound(b, &sampler, 300, 60, 5, 1.1)?;
        println!(
            "b = {b}, weights {spec:<18} max |d| = {:.4} at n = {:>3}, D = {:.4}",
            est.raw_max, est.argmax_n, est.value
        );
    }
    let report = run_toll(&ExperimentConfig { n: 400, samples: 500, ..Default::default() })?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
