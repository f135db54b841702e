//! Grows weighted random trees and reports the mean path length and Wiener
//! index against the exact expectation recursion.

use treetails::exact_engine::expectations;
use treetails::harness::{simulate, ExperimentConfig};

fn main() -> treetails::Result<()> {
    let table = expectations(500, 2, 1.0)?;
    for n in [50, 200, 500] {
        let cfg = ExperimentConfig { n, samples: 4000, seed: 11, ..Default::default() };
        let pairs = simulate(&cfg)?;
        let k = pairs.len() as f64;
        let p = pairs.iter().map(|f| f.path_length).sum::<f64>() / k;
        let w = pairs.iter().map(|f| f.wiener).sum::<f64>() / k;
        println!(
            "n = {n:>3}: mean P = {p:>10.2} (exact {:>10.2}), mean W = {w:>12.1} (exact {:>12.1})",
            table.ep(n),
            table.ew(n)
        );
    }
    Ok(())
}
