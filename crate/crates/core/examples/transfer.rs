//! The linear recursive tree with β = b − 2 against the b-ary tree whose
//! weights are a random permutation of (1, 0, …, 0).

use treetails::harness::run_transfer;

fn main() -> treetails::Result<()> {
    for (b, n) in [(2, 6), (3, 6), (4, 40)] {
        let r = run_transfer(b, n, 4000, 9, 0.01, 1)?;
        println!(
            "b = {b}, n = {n:>2}: exact TV {:?}, KS path D = {:.4} (crit {:.4}), KS wiener D = {:.4}",
            r.exact_tv, r.ks_path.statistic, r.ks_path.critical, r.ks_wiener.statistic
        );
    }
    Ok(())
}
