mod common;

use std::collections::{BTreeMap, HashSet};

use homodiff::evaluation::{Bucketing, NodeSet, Stratum};
use homodiff::{
    argmax_assign, distance_to_seeds, hits, seeds_in_neighborhood, stratified_hits,
    threshold_curve, Node, Prediction, StateMatrix,
};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::Rng;

fn random_seeds(rng: &mut rand_chacha::ChaCha8Rng, n: usize, k: usize) -> Vec<Node> {
    let mut s: Vec<Node> = sample(rng, n, k.min(n)).into_iter().map(|i| i as Node).collect();
    s.sort();
    s
}

#[test]
fn sin_matches_set_intersection() {
    let mut rng = common::rng(61);
    for _ in 0..30 {
        let n = rng.random_range(1..50);
        let (g, edges) = common::random_graph(&mut rng, n, 0.15);
        let k = rng.random_range(1..=n);
        let seeds = random_seeds(&mut rng, n, k);
        let seed_set: HashSet<Node> = seeds.iter().copied().collect();
        let ns = NodeSet::new(n, &seeds).unwrap();
        for x in 0..n as Node {
            let nbrs: HashSet<Node> = edges
                .iter()
                .filter_map(|&(a, b)| (a == x).then_some(b).or((b == x).then_some(a)))
                .collect();
            assert_eq!(seeds_in_neighborhood(&g, &ns, x), nbrs.intersection(&seed_set).count());
        }
    }
}

#[test]
fn dts_matches_pairwise_bfs() {
    let mut rng = common::rng(62);
    for _ in 0..30 {
        let n = 30;
        let (g, edges) = common::random_graph(&mut rng, n, 0.07);
        let adj = common::adjacency(n, &edges);
        let k = rng.random_range(1..5);
        let seeds = random_seeds(&mut rng, n, k);
        let got = distance_to_seeds(&g, &seeds).unwrap();
        let per_seed: Vec<_> = seeds.iter().map(|&s| common::bfs(&adj, s)).collect();
        for x in 0..n {
            let want = per_seed.iter().filter_map(|d| d[x]).min();
            assert_eq!(got[x], want);
        }
    }
}

fn fixture(seed: u64) -> (homodiff::Graph, homodiff::LabelStore, StateMatrix, Vec<Node>, Vec<Node>) {
    let mut rng = common::rng(seed);
    let n = rng.random_range(5..80);
    let p = rng.random_range(0.01..0.2);
    let (g, _) = common::random_graph(&mut rng, n, p);
    let cats: Vec<Option<usize>> = (0..n).map(|_| Some(rng.random_range(0..4))).collect();
    let truth = homodiff::LabelStore::from_categories(4, &cats).unwrap();
    let rows: Vec<Vec<f64>> = (0..n).map(|_| common::random_simplex_row(&mut rng, 4)).collect();
    let state = StateMatrix::from_rows(4, &rows).unwrap();
    let k = rng.random_range(1..=n / 2);
    let seeds = random_seeds(&mut rng, n, k);
    let scope: Vec<Node> = (0..n as Node).filter(|x| seeds.binary_search(x).is_err()).collect();
    (g, truth, state, seeds, scope)
}

fn correct(pred: &Prediction, truth: &homodiff::LabelStore, x: Node) -> bool {
    pred.get(x).unwrap().category == truth.get(x).unwrap()
}

#[test]
fn strata_match_group_by_recount() {
    for seed in 0..30 {
        let (g, truth, state, seeds, scope) = fixture(seed);
        let pred = argmax_assign(&state);
        let dist = distance_to_seeds(&g, &seeds).unwrap();
        let curve =
            stratified_hits(|x| dist[x as usize].map(u64::from), &pred, &truth, &scope, Bucketing::Identity)
                .unwrap();
        let mut groups: BTreeMap<Option<u32>, (usize, usize)> = BTreeMap::new();
        for &x in &scope {
            let e = groups.entry(dist[x as usize]).or_default();
            e.0 += correct(&pred, &truth, x) as usize;
            e.1 += 1;
        }
        assert_eq!(curve.len(), groups.len());
        for p in &curve {
            let key = match p.stratum {
                Stratum::Range { lo, hi } => {
                    assert_eq!(lo, hi);
                    Some(lo as u32)
                }
                Stratum::Unreachable => None,
            };
            let (c, n) = groups[&key];
            assert_eq!(p.population, n);
            assert_eq!(p.hits, c as f64 / n as f64);
        }

        let deg = stratified_hits(|x| Some(g.deg(x as usize) as u64), &pred, &truth, &scope, Bucketing::LogDegree)
            .unwrap();
        for p in &deg {
            let Stratum::Range { lo, hi } = p.stratum else { panic!("degree is always defined") };
            let members: Vec<Node> = scope
                .iter()
                .copied()
                .filter(|&x| (lo..=hi).contains(&(g.deg(x as usize) as u64)))
                .collect();
            assert_eq!(p.population, members.len());
        }
    }
}

#[test]
fn threshold_matches_filter_oracle() {
    for seed in 0..30 {
        let (_, truth, state, _, scope) = fixture(seed);
        let pred = argmax_assign(&state);
        let taus = [0.0, 0.2, 0.3, 0.35, 0.5, 0.7, 1.0];
        let curve = threshold_curve(&state, &pred, &truth, &scope, &taus).unwrap();
        for (pt, &tau) in curve.iter().zip(&taus) {
            let kept: Vec<Node> = scope
                .iter()
                .copied()
                .filter(|&x| state.row(x as usize).iter().cloned().fold(f64::MIN, f64::max) >= tau)
                .collect();
            assert_eq!(pt.retained, kept.len());
            let want = (!kept.is_empty()).then(|| {
                kept.iter().filter(|&&x| correct(&pred, &truth, x)).count() as f64 / kept.len() as f64
            });
            assert_eq!(pt.hits, want);
        }
    }
}

#[test]
fn twenty_node_hand_count() {
    // truth cycles 0,1,2,3; prediction always says 0 except where noted
    let truth = homodiff::LabelStore::from_categories(
        4,
        &(0..20).map(|i| Some(i % 4)).collect::<Vec<_>>(),
    )
    .unwrap();
    let rows: Vec<Vec<f64>> = (0..20)
        .map(|i| {
            let mut r = vec![0.1; 4];
            let k = if i < 12 { i % 4 } else { 0 };
            r[k] = 0.7;
            r
        })
        .collect();
    let pred = argmax_assign(&StateMatrix::from_rows(4, &rows).unwrap());
    let scope: Vec<Node> = (0..20).collect();
    // 12 right in the first block, then 16 and 20-4=16 → nodes 12 and 16 (category 0)
    assert_eq!(hits(&pred, &truth, &scope).unwrap(), 14.0 / 20.0);
}

proptest! {
    #[test]
    fn report_invariants(seed in any::<u64>()) {
        let (g, truth, state, seeds, scope) = fixture(seed);
        prop_assume!(!scope.is_empty());
        let pred = argmax_assign(&state);
        let report = homodiff::evaluate(
            &g, &seeds, &pred, &truth, &scope, Some(&state),
            &homodiff::evaluation::DEFAULT_TAUS, Bucketing::LogDegree,
        ).unwrap();
        for curve in [&report.sin, &report.dts, &report.degree] {
            prop_assert_eq!(curve.iter().map(|p| p.population).sum::<usize>(), scope.len());
            let weighted: f64 = curve.iter().map(|p| p.hits * p.population as f64).sum::<f64>()
                / scope.len() as f64;
            prop_assert!((weighted - report.overall_hits).abs() <= 1e-12);
            prop_assert!(curve.iter().all(|p| (0.0..=1.0).contains(&p.hits)));
        }
        prop_assert!(report.threshold.windows(2).all(|w| w[0].retained >= w[1].retained));

        let dist = distance_to_seeds(&g, &seeds).unwrap();
        for x in 0..g.node_count() {
            if let Some(dx) = dist[x] {
                if dx > 0 {
                    prop_assert!(g.adj(x).iter().any(|&y| dist[y as usize] == Some(dx - 1)));
                }
            }
        }
    }
}
