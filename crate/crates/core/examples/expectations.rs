//! Expectation recursion for E[P_n] and E[W_n]; checks the binary search
//! tree case against 2(n+1)H_n − 4n.

use treetails::exact_engine::expectations;

fn main() -> treetails::Result<()> {
    let table = expectations(1000, 2, 1.0)?;
    let mut h = 0.0;
    for n in 1..=1000 {
        h += 1.0 / n as f64;
        if [1, 10, 100, 1000].contains(&n) {
            let closed = 2.0 * (n as f64 + 1.0) * h - 4.0 * n as f64;
            println!("n = {n:>4}: EP = {:>12.4} closed form {:>12.4} EW = {:>14.2}", table.ep(n), closed, table.ew(n));
        }
    }
    let ternary = expectations(100, 3, 2.0 / 3.0)?;
    println!("b = 3, mu = 2/3: EP(100) = {:.4}, EW(100) = {:.2}", ternary.ep(100), ternary.ew(100));
    Ok(())
}
