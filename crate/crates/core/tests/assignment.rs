mod common;

use homodiff::{argmax_assign, constrained_assign, largest_remainder, StateMatrix, TargetDistribution};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn argmax_matches_scan_on_random_rows() {
    let mut rng = common::rng(51);
    let rows: Vec<Vec<f64>> = (0..100).map(|_| common::random_simplex_row(&mut rng, 4)).collect();
    let state = StateMatrix::from_rows(4, &rows).unwrap();
    let pred = argmax_assign(&state);
    for (x, row) in rows.iter().enumerate() {
        let mut best = 0;
        for k in 1..row.len() {
            if row[k] > row[best] {
                best = k;
            }
        }
        let a = pred.get(x as u32).unwrap();
        assert_eq!(a.category, best);
        assert_eq!(a.confidence, row[best]);
    }
}

/// Quotas from exact integer arithmetic on weights expressed in millionths.
fn quota_oracle(total: usize, weights: &[u64]) -> Vec<usize> {
    let sum: u64 = weights.iter().sum();
    let mut q: Vec<usize> = weights.iter().map(|&w| (total as u64 * w / sum) as usize).collect();
    let mut rem: Vec<(u64, usize)> =
        weights.iter().enumerate().map(|(k, &w)| (total as u64 * w % sum, k)).collect();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = total - q.iter().sum::<usize>();
    for &(_, k) in rem.iter().take(short) {
        q[k] += 1;
    }
    q
}

#[test]
fn largest_remainder_matches_integer_oracle() {
    let mut rng = common::rng(52);
    for _ in 0..500 {
        let d = rng.random_range(2..7);
        let w: Vec<u64> = (0..d).map(|_| rng.random_range(1..1000) * 1000).collect();
        let total = rng.random_range(1..500);
        let sum: u64 = w.iter().sum();
        let shares: Vec<f64> = w.iter().map(|&v| v as f64 / sum as f64).collect();
        assert_eq!(largest_remainder(total, &shares), quota_oracle(total, &w));
    }
}

fn state_and_target() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 1usize..150, 2usize..6)
}

proptest! {
    #[test]
    fn constrained_histogram_equals_quotas((seed, n, d) in state_and_target()) {
        let mut rng = common::rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| common::random_simplex_row(&mut rng, d)).collect();
        let state = StateMatrix::from_rows(d, &rows).unwrap();
        let target = TargetDistribution::new(common::random_simplex_row(&mut rng, d)).unwrap();
        let scope: Vec<u32> = (0..n as u32).collect();
        let pred = constrained_assign(&state, &target, &scope).unwrap();
        prop_assert_eq!(pred.histogram(d), largest_remainder(n, target.shares()));
        for (x, a) in pred.iter() {
            prop_assert_eq!(a.confidence, rows[x as usize][a.category]);
        }
    }

    #[test]
    fn constrained_equals_argmax_when_quotas_already_met((seed, n, d) in state_and_target()) {
        let mut rng = common::rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| common::random_simplex_row(&mut rng, d)).collect();
        let state = StateMatrix::from_rows(d, &rows).unwrap();
        let free = argmax_assign(&state);
        let hist = free.histogram(d);
        let target = TargetDistribution::new(hist.iter().map(|&c| c as f64 / n as f64).collect()).unwrap();
        prop_assume!(largest_remainder(n, target.shares()) == hist);
        let scope: Vec<u32> = (0..n as u32).collect();
        prop_assert_eq!(constrained_assign(&state, &target, &scope).unwrap(), free);
    }

    #[test]
    fn argmax_ignores_positive_scaling(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut rng = common::rng(seed);
        let row = common::random_simplex_row(&mut rng, 5);
        let scaled: Vec<f64> = row.iter().map(|v| v * c).collect();
        let s: f64 = scaled.iter().sum();
        let renorm: Vec<f64> = scaled.iter().map(|v| v / s).collect();
        let a = argmax_assign(&StateMatrix::from_rows(5, &[row]).unwrap());
        let b = argmax_assign(&StateMatrix::from_rows(5, &[renorm]).unwrap());
        prop_assert_eq!(a.get(0).unwrap().category, b.get(0).unwrap().category);
    }
}
