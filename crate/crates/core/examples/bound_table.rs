//! Tabulates the five-piece tail bound for a toll bound `D` and compares it
//! with the direct Chernoff optimum at the same `t`.

use treetails::numerics::Constants;
use treetails::tail_bounds::{chernoff_optimize, upper_tail, PiecewiseBound};

fn main() -> treetails::Result<()> {
    let d = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let bound = PiecewiseBound::new(d, Constants::default())?;
    println!("D = {d}");
    println!("breakpoints: {:?}", bound.breakpoints);
    println!("{:>12} {:>13} {:>14} {:>14} {:>8}", "t", "piece", "bound", "chernoff", "regime");
    let ts = [0.5, 2.0, 5.0, 10.0, 20.0, 60.0, 150.0, 300.0, 1000.0, 5000.0];
    for t in ts.map(|t| t * d) {
        let opt = chernoff_optimize(t, &bound);
        println!(
            "{:>12.3} {:>13} {:>14.6e} {:>14.6e} {:>8}",
            t,
            format!("{:?}", bound.piece(t)),
            upper_tail(t, &bound),
            opt.exponent.exp().min(1.0),
            format!("{:?}", opt.regime),
        );
    }
    Ok(())
}
