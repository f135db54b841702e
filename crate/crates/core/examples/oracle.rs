//! Exact enumeration of small trees: the joint law of (P, W) with rational
//! probabilities and the law of the sorted root split.

use treetails::exact_engine::{enumerate, split_marginal};
use treetails::tree_models::WeightSampler;

fn main() -> treetails::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let e = enumerate(n, 2, &WeightSampler::unit(2)?)?;
    println!("joint law of (P, W) for n = {n}, b = 2:");
    for ((p, w), prob) in e.joint.atoms() {
        println!("  P = {:>4}  W = {:>5}  prob = {prob}", p.0, w.0);
    }
    println!("sorted root split:");
    for (split, prob) in e.sorted_split.atoms() {
        println!("  {split:?}  {prob}");
    }
    println!("closed-form marginal of I_1: {:?}", split_marginal(n, 2));
    println!("E[P] = {}", e.path_length().expect(|p| p.0));
    Ok(())
}
