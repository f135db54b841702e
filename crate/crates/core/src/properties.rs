//! Randomized invariants across modules.

use proptest::prelude::*;
use rand::Rng;

use crate::exact_engine::split_marginal;
use crate::functionals::{functionals, wiener_index_pairwise};
use crate::numerics::Constants;
use crate::recursion_core::{coeff_matrix, f_closed_form, op_norm_sq, toll_residual, ScaledVector};
use crate::rng;
use crate::tail_bounds::{upper_tail, PiecewiseBound};
use crate::tree_models::{grow_bary, grow_linear, WeightSampler};
use crate::urn_domination::{coupled_step, dominated, kernel, kernel_prime, leq, sorted_below, sum_inequality_check};

fn sorted_state(b: usize, max: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..=max, b).prop_map(|mut v| {
        v.sort_unstable_by(|a, c| c.cmp(a));
        v
    })
}

/// Sorted `y` on the (b+1)-simplex and `x_i = y_i + w_i y_{b+1}`, re-sorted.
fn refined_pair(b: usize, g: &mut impl Rng, skew: i32) -> (Vec<f64>, Vec<f64>) {
    let mut raw: Vec<f64> = (0..=b).map(|_| g.random::<f64>().powi(skew)).collect();
    raw.sort_unstable_by(|a, c| c.total_cmp(a));
    let total: f64 = raw.iter().sum();
    let y: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let w: Vec<f64> = (0..b).map(|_| g.random::<f64>()).collect();
    let ws: f64 = w.iter().sum();
    let mut x: Vec<f64> = (0..b).map(|i| y[i] + w[i] / ws * y[b]).collect();
    x.sort_unstable_by(|a, c| c.total_cmp(a));
    (x, y)
}

fn simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_map(|v| {
        let s: f64 = v.iter().sum();
        if s == 0.0 {
            let mut e = vec![0.0; v.len()];
            e[0] = 1.0;
            e
        } else {
            v.iter().map(|x| x / s).collect()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bound_depends_on_t_over_d(t in 0.0f64..2000.0, d in 0.05f64..20.0, c in 0.05f64..20.0) {
        let consts = Constants::default();
        let a = PiecewiseBound::new(d, consts).unwrap();
        let b = PiecewiseBound::new(c * d, consts).unwrap();
        let (ea, eb) = (a.log_upper_tail(t), b.log_upper_tail(c * t));
        prop_assert!((ea - eb).abs() <= 1e-9 * ea.abs().max(1.0), "{} vs {}", ea, eb);
        prop_assert!(upper_tail(t, &a) <= 1.0);
    }

    #[test]
    fn sum_inequality_on_refinements(b in 2usize..=5, seed in any::<u64>()) {
        let (x, y) = refined_pair(b, &mut rng::stream(seed, 0), 1);
        prop_assert!(sum_inequality_check(&x, &y).unwrap());
    }

    #[test]
    fn split_norms_sum_below_one(parts in simplex(4), n in 2u64..500) {
        // integer split of n − 1 with the given proportions
        let m = n - 1;
        let mut split: Vec<u64> = parts.iter().map(|p| (p * m as f64).floor() as u64).collect();
        let used: u64 = split.iter().sum();
        split[0] += m - used;
        let total: f64 = split.iter().map(|&i| op_norm_sq(&coeff_matrix(i, n).unwrap())).sum();
        prop_assert!(total <= f_closed_form(m as f64 / n as f64) + 1e-12);
        prop_assert!(total < 1.0);
    }

    #[test]
    fn trees_are_valid_and_functionals_agree(n in 1usize..60, b in 2usize..5, seed in any::<u64>()) {
        let mut values = vec![0.0; b];
        values[0] = 1.0;
        values[1] = 0.25;
        let sampler = WeightSampler::permutation(values).unwrap();
        let tree = grow_bary(n, b, &sampler, &mut rng::stream(seed, 1)).unwrap();
        tree.check_invariants().unwrap();
        let f = functionals(&tree);
        prop_assert!((f.wiener - wiener_index_pairwise(&tree)).abs() <= 1e-9 * (1.0 + f.wiener));
        prop_assert!(f.wiener <= (n as f64 - 1.0) * f.path_length + 1e-9);
        let lin = grow_linear(n, 1.5, &mut rng::stream(seed, 2)).unwrap();
        lin.check_invariants().unwrap();
    }

    #[test]
    fn toll_vanishes_for_single_nodes(seed in any::<u64>()) {
        let table = crate::exact_engine::expectations(3, 2, 1.0).unwrap();
        let tree = grow_bary(1, 2, &WeightSampler::unit(2).unwrap(), &mut rng::stream(seed, 0)).unwrap();
        prop_assert_eq!(toll_residual(&tree, &table).unwrap().d, [0.0, 0.0]);
        let x = ScaledVector::new(functionals(&tree), 1, &table).unwrap();
        prop_assert_eq!(x.x, [0.0, 0.0]);
    }

    #[test]
    fn split_marginal_is_a_pmf(n in 1usize..400, b in 2usize..7) {
        let p = split_marginal(n, b);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mean: f64 = p.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
        prop_assert!((mean - (n - 1) as f64 / b as f64).abs() < 1e-9 * n as f64);
    }

    #[test]
    fn displayed_kernel_domination_at_larger_n(x in sorted_state(4, 60), pick in any::<prop::sample::Index>()) {
        let n: u32 = x.iter().sum();
        let below = sorted_below(&x);
        let y = &below[pick.index(below.len())];
        let k = kernel(&x).unwrap();
        let kp = kernel_prime(y, n as u64).unwrap();
        prop_assert!(k.is_normalized() && kp.is_normalized());
        prop_assert!(dominated(&kp, &k));
    }

    #[test]
    fn coupled_steps_preserve_order(x in sorted_state(3, 80), pick in any::<prop::sample::Index>(), u in 0.0f64..1.0) {
        let m: u32 = x.iter().sum();
        let below = sorted_below(&x);
        let y = &below[pick.index(below.len())];
        let total = (3 + 2 * m as u64) * (4 + 3 * m as u64);
        let r = ((u * total as f64) as u64).min(total - 1);
        let (xn, yn) = coupled_step(&x, y, m as u64, r).unwrap();
        prop_assert!(leq(&yn, &xn), "{:?} -> {:?}, {:?} -> {:?}", x, xn, y, yn);
    }
}

#[test]
fn sum_inequality_hundred_thousand_pairs() {
    let mut g = rng::stream(6, 6);
    let mut failures = 0;
    for _ in 0..100_000 {
        let b = g.random_range(2..=5);
        let (x, y) = refined_pair(b, &mut g, 3);
        if !sum_inequality_check(&x, &y).unwrap() {
            failures += 1;
        }
    }
    assert_eq!(failures, 0);
    assert!(sum_inequality_check(&[0.6, 0.4], &[0.6, 0.4, 0.0]).unwrap());
    assert!(sum_inequality_check(&[0.4, 0.6], &[0.4, 0.3, 0.3]).is_err());
}
