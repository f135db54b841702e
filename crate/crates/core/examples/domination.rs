//! Exact law of S_n from the sorted urn split and its comparison with the
//! dominating law 1 − U(1−U).

use treetails::urn_domination::{check_domination_range, kernel_domination_scan, DominatingLaw};

fn main() -> treetails::Result<()> {
    let law = DominatingLaw;
    println!("cdf_V(0.8) = {:.6}", law.cdf(0.8));
    for b in [2, 3, 4] {
        let scan = kernel_domination_scan(20, b)?;
        println!("b = {b}: kernel pairs checked {}, violations {}", scan.pairs, scan.violations.len());
        let reports = check_domination_range(60, b)?;
        let worst = reports
            .iter()
            .min_by(|a, c| a.exact_margin.total_cmp(&c.exact_margin))
            .expect("non-empty range");
        let held = reports.iter().filter(|r| r.holds()).count();
        println!(
            "       domination held for {held}/{} sizes; tightest exact margin {:.4e} at n = {}",
            reports.len(),
            worst.exact_margin,
            worst.n
        );
    }
    Ok(())
}
