#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use homodiff::{Graph, LabelStore, Node};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random simple graph as an edge set of ordered pairs (a < b).
pub fn random_edge_set(rng: &mut ChaCha8Rng, n: usize, p: f64) -> BTreeSet<(Node, Node)> {
    let mut set = BTreeSet::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < p {
                set.insert((a as Node, b as Node));
            }
        }
    }
    set
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> (Graph, BTreeSet<(Node, Node)>) {
    let set = random_edge_set(rng, n, p);
    let edges: Vec<_> = set.iter().copied().collect();
    (Graph::from_edges(n, &edges).unwrap().0, set)
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, d: usize, p_labeled: f64) -> LabelStore {
    let cats: Vec<Option<usize>> = (0..n)
        .map(|_| (rng.random::<f64>() < p_labeled).then(|| rng.random_range(0..d)))
        .collect();
    LabelStore::from_categories(d, &cats).unwrap()
}

pub fn random_simplex_row(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Adjacency lists rebuilt straight from an edge set.
pub fn adjacency(n: usize, edges: &BTreeSet<(Node, Node)>) -> Vec<Vec<Node>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    adj
}

/// Plain single-source BFS over adjacency lists.
pub fn bfs(adj: &[Vec<Node>], src: Node) -> Vec<Option<u32>> {
    let mut dist = vec![None; adj.len()];
    dist[src as usize] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some(x) = q.pop_front() {
        let dx = dist[x as usize].unwrap();
        for &y in &adj[x as usize] {
            if dist[y as usize].is_none() {
                dist[y as usize] = Some(dx + 1);
                q.push_back(y);
            }
        }
    }
    dist
}
