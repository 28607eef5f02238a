//! Hit rates overall and stratified by topology relative to the seed set.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::assignment::Prediction;
use crate::diffusion::StateMatrix;
use crate::error::{Error, Result};
use crate::graph::{Graph, Node};
use crate::labels::LabelStore;

/// Membership mask over graph nodes.
#[derive(Debug, Clone)]
pub struct NodeSet {
    mask: Vec<bool>,
    len: usize,
}

impl NodeSet {
    pub fn new(node_count: usize, nodes: &[Node]) -> Result<Self> {
        let mut mask = vec![false; node_count];
        let mut len = 0;
        for &x in nodes {
            let slot = mask.get_mut(x as usize).ok_or(Error::NodeOutOfRange {
                index: x as usize,
                node_count,
            })?;
            if !*slot {
                *slot = true;
                len += 1;
            }
        }
        Ok(NodeSet { mask, len })
    }

    #[inline]
    pub fn contains(&self, x: Node) -> bool {
        self.mask.get(x as usize).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Fraction of `scope` nodes whose predicted category equals the true one.
pub fn hits(pred: &Prediction, truth: &LabelStore, scope: &[Node]) -> Result<f64> {
    if scope.is_empty() {
        return Err(Error::Empty("evaluation scope"));
    }
    let mut correct = 0usize;
    for &x in scope {
        let t = truth
            .get(x)
            .ok_or_else(|| Error::param(format!("scope node {x} has no true label")))?;
        let p = pred
            .get(x)
            .ok_or_else(|| Error::param(format!("scope node {x} has no prediction")))?;
        correct += usize::from(p.category == t);
    }
    Ok(correct as f64 / scope.len() as f64)
}

/// Number of `x`'s neighbors that are seeds.
pub fn seeds_in_neighborhood(g: &Graph, seeds: &NodeSet, x: Node) -> usize {
    g.adj(x as usize).iter().filter(|&&y| seeds.contains(y)).count()
}

/// Hop distance from every node to its nearest seed; `None` when unreachable.
///
/// Level-synchronous multi-source BFS.
pub fn distance_to_seeds(g: &Graph, seeds: &[Node]) -> Result<Vec<Option<u32>>> {
    if seeds.is_empty() {
        return Err(Error::Empty("seed set"));
    }
    let n = g.node_count();
    let mut dist: Vec<Option<u32>> = vec![None; n];
    let mut frontier = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let slot = dist.get_mut(s as usize).ok_or(Error::NodeOutOfRange {
            index: s as usize,
            node_count: n,
        })?;
        if slot.is_none() {
            *slot = Some(0);
            frontier.push(s);
        }
    }
    let mut level = 0u32;
    let mut next = Vec::new();
    while !frontier.is_empty() {
        level += 1;
        for &x in &frontier {
            for &y in g.adj(x as usize) {
                if dist[y as usize].is_none() {
                    dist[y as usize] = Some(level);
                    next.push(y);
                }
            }
        }
        std::mem::swap(&mut frontier, &mut next);
        next.clear();
    }
    Ok(dist)
}

/// How metric values are grouped into strata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bucketing {
    Identity,
    /// 0, 1, 2, 3–4, 5–8, 9–16, …
    LogDegree,
}

impl Bucketing {
    fn bucket(self, v: u64) -> (u64, u64) {
        match self {
            Bucketing::Identity => (v, v),
            Bucketing::LogDegree => {
                if v <= 2 {
                    (v, v)
                } else {
                    let hi = v.next_power_of_two();
                    (hi / 2 + 1, hi)
                }
            }
        }
    }
}

/// Inclusive value range of a stratum, or the stratum of nodes where the metric is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Stratum {
    Range { lo: u64, hi: u64 },
    Unreachable,
}

impl std::fmt::Display for Stratum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stratum::Range { lo, hi } if lo == hi => write!(f, "{lo}"),
            Stratum::Range { lo, hi } => write!(f, "{lo}-{hi}"),
            Stratum::Unreachable => write!(f, "unreachable"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StratumPoint {
    pub stratum: Stratum,
    pub hits: f64,
    pub population: usize,
}

/// Hit rate per stratum of `metric` over `scope`. `metric` returning `None`
/// places the node in the [`Stratum::Unreachable`] group. Empty strata are omitted.
pub fn stratified_hits<F>(
    metric: F,
    pred: &Prediction,
    truth: &LabelStore,
    scope: &[Node],
    bucketing: Bucketing,
) -> Result<Vec<StratumPoint>>
where
    F: Fn(Node) -> Option<u64>,
{
    let mut groups: BTreeMap<Stratum, (usize, usize)> = BTreeMap::new();
    for &x in scope {
        let stratum = match metric(x) {
            Some(v) => {
                let (lo, hi) = bucketing.bucket(v);
                Stratum::Range { lo, hi }
            }
            None => Stratum::Unreachable,
        };
        let t = truth
            .get(x)
            .ok_or_else(|| Error::param(format!("scope node {x} has no true label")))?;
        let p = pred
            .get(x)
            .ok_or_else(|| Error::param(format!("scope node {x} has no prediction")))?;
        let e = groups.entry(stratum).or_default();
        e.0 += usize::from(p.category == t);
        e.1 += 1;
    }
    Ok(groups
        .into_iter()
        .map(|(stratum, (c, n))| StratumPoint {
            stratum,
            hits: c as f64 / n as f64,
            population: n,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub tau: f64,
    /// `None` when no node clears the threshold.
    pub hits: Option<f64>,
    pub retained: usize,
    pub retained_fraction: f64,
}

/// Hit rate restricted to nodes whose chosen category has probability ≥ τ in `state`.
pub fn threshold_curve(
    state: &StateMatrix,
    pred: &Prediction,
    truth: &LabelStore,
    scope: &[Node],
    taus: &[f64],
) -> Result<Vec<ThresholdPoint>> {
    if let Some(t) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::param(format!("threshold {t} not in [0, 1]")));
    }
    let mut scored = Vec::with_capacity(scope.len());
    for &x in scope {
        let t = truth
            .get(x)
            .ok_or_else(|| Error::param(format!("scope node {x} has no true label")))?;
        let p = pred
            .get(x)
            .ok_or_else(|| Error::param(format!("scope node {x} has no prediction")))?;
        let conf = state.row(x as usize)[p.category];
        scored.push((conf, p.category == t));
    }
    Ok(taus
        .iter()
        .map(|&tau| {
            let (kept, correct) = scored
                .iter()
                .filter(|(c, _)| *c >= tau)
                .fold((0usize, 0usize), |(k, c), &(_, ok)| (k + 1, c + usize::from(ok)));
            ThresholdPoint {
                tau,
                hits: (kept > 0).then(|| correct as f64 / kept as f64),
                retained: kept,
                retained_fraction: if scope.is_empty() {
                    0.0
                } else {
                    kept as f64 / scope.len() as f64
                },
            }
        })
        .collect())
}

/// Everything the topological evaluation produces for one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scope_size: usize,
    pub overall_hits: f64,
    pub sin: Vec<StratumPoint>,
    pub dts: Vec<StratumPoint>,
    pub degree: Vec<StratumPoint>,
    pub threshold: Vec<ThresholdPoint>,
}

/// Default τ grid.
pub const DEFAULT_TAUS: [f64; 9] = [0.0, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6];

/// Run every stratification over `scope`. The τ curve needs `state`; without it
/// the curve is left empty.
pub fn evaluate(
    g: &Graph,
    seeds: &[Node],
    pred: &Prediction,
    truth: &LabelStore,
    scope: &[Node],
    state: Option<&StateMatrix>,
    taus: &[f64],
    degree_bucketing: Bucketing,
) -> Result<EvalReport> {
    let overall_hits = hits(pred, truth, scope)?;
    let seed_set = NodeSet::new(g.node_count(), seeds)?;
    let dist = distance_to_seeds(g, seeds)?;
    let sin = stratified_hits(
        |x| Some(seeds_in_neighborhood(g, &seed_set, x) as u64),
        pred,
        truth,
        scope,
        Bucketing::Identity,
    )?;
    let dts = stratified_hits(
        |x| dist[x as usize].map(u64::from),
        pred,
        truth,
        scope,
        Bucketing::Identity,
    )?;
    let degree = stratified_hits(
        |x| Some(g.deg(x as usize) as u64),
        pred,
        truth,
        scope,
        degree_bucketing,
    )?;
    let threshold = match state {
        Some(s) => threshold_curve(s, pred, truth, scope, taus)?,
        None => Vec::new(),
    };
    Ok(EvalReport {
        scope_size: scope.len(),
        overall_hits,
        sin,
        dts,
        degree,
        threshold,
    })
}

pub fn write_strata_csv<W: Write>(points: &[StratumPoint], mut out: W) -> Result<()> {
    writeln!(out, "stratum,hits,population")?;
    for p in points {
        writeln!(out, "{},{},{}", p.stratum, p.hits, p.population)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_threshold_csv<W: Write>(points: &[ThresholdPoint], mut out: W) -> Result<()> {
    writeln!(out, "tau,hits,retained,retained_fraction")?;
    for p in points {
        match p.hits {
            Some(h) => writeln!(out, "{},{h},{},{}", p.tau, p.retained, p.retained_fraction)?,
            None => writeln!(out, "{},,{},{}", p.tau, p.retained, p.retained_fraction)?,
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{argmax_assign, Assigned};

    fn pred_of(cats: &[usize]) -> Prediction {
        let mut p = Prediction::empty(cats.len());
        for (x, &c) in cats.iter().enumerate() {
            p.set(x as Node, Assigned { category: c, confidence: 1.0 });
        }
        p
    }

    fn truth_of(d: usize, cats: &[usize]) -> LabelStore {
        let v: Vec<Option<usize>> = cats.iter().map(|&c| Some(c)).collect();
        LabelStore::from_categories(d, &v).unwrap()
    }

    #[test]
    fn hits_cases() {
        let t = truth_of(4, &[0, 1, 2, 3, 0, 1, 2, 3]);
        let all: Vec<Node> = (0..8).collect();
        assert_eq!(hits(&pred_of(&[0, 1, 2, 3, 0, 1, 2, 3]), &t, &all).unwrap(), 1.0);
        assert_eq!(hits(&pred_of(&[2; 8]), &t, &all).unwrap(), 0.25);
        assert!(hits(&pred_of(&[2; 8]), &t, &[]).is_err());
    }

    #[test]
    fn hits_twenty_node_fixture() {
        // predictions agree on nodes 0..13 (hand count: 13 of 20)
        let truth: Vec<usize> = (0..20).map(|i| i % 4).collect();
        let pred: Vec<usize> = (0..20).map(|i| if i < 13 { i % 4 } else { (i + 1) % 4 }).collect();
        let scope: Vec<Node> = (0..20).collect();
        assert_eq!(hits(&pred_of(&pred), &truth_of(4, &truth), &scope).unwrap(), 13.0 / 20.0);
    }

    #[test]
    fn sin_star() {
        let (g, _) = Graph::from_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let seeds = NodeSet::new(6, &[1, 2, 3, 4]).unwrap();
        assert_eq!(seeds_in_neighborhood(&g, &seeds, 0), 4);
        assert_eq!(seeds_in_neighborhood(&g, &seeds, 1), 0);
        assert_eq!(seeds_in_neighborhood(&g, &seeds, 5), 0);
    }

    #[test]
    fn dts_path_and_unreachable() {
        let (g, _) = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let d = distance_to_seeds(&g, &[0]).unwrap();
        assert_eq!(d, vec![Some(0), Some(1), Some(2), Some(3), None]);
        assert!(distance_to_seeds(&g, &[]).is_err());
        assert!(distance_to_seeds(&g, &[9]).is_err());
    }

    #[test]
    fn strata_single_and_split() {
        let t = truth_of(2, &[0, 0, 1, 1]);
        let p = pred_of(&[0, 0, 0, 0]);
        let scope: Vec<Node> = (0..4).collect();
        let one = stratified_hits(|_| Some(7), &p, &t, &scope, Bucketing::Identity).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].hits, hits(&p, &t, &scope).unwrap());

        let two = stratified_hits(|x| Some(u64::from(x / 2)), &p, &t, &scope, Bucketing::Identity)
            .unwrap();
        assert_eq!((two[0].hits, two[0].population), (1.0, 2));
        assert_eq!((two[1].hits, two[1].population), (0.0, 2));

        let un = stratified_hits(|x| (x > 0).then_some(1), &p, &t, &scope, Bucketing::Identity)
            .unwrap();
        assert_eq!(un.last().unwrap().stratum, Stratum::Unreachable);
    }

    #[test]
    fn log_buckets() {
        let b = Bucketing::LogDegree;
        let got: Vec<(u64, u64)> = [0, 1, 2, 3, 4, 5, 8, 9, 16, 17].iter().map(|&v| b.bucket(v)).collect();
        assert_eq!(
            got,
            vec![(0, 0), (1, 1), (2, 2), (3, 4), (3, 4), (5, 8), (5, 8), (9, 16), (9, 16), (17, 32)]
        );
    }

    #[test]
    fn threshold_basics() {
        let s = StateMatrix::from_rows(2, &[vec![0.9, 0.1], vec![0.6, 0.4], vec![0.45, 0.55]])
            .unwrap();
        let p = argmax_assign(&s);
        let t = truth_of(2, &[0, 1, 1]);
        let scope = [0, 1, 2];
        let c = threshold_curve(&s, &p, &t, &scope, &[0.0, 0.56, 0.95]).unwrap();
        assert_eq!(c[0].hits, Some(2.0 / 3.0));
        assert_eq!(c[0].retained, 3);
        assert_eq!((c[1].hits, c[1].retained), (Some(0.5), 2));
        assert_eq!((c[2].hits, c[2].retained, c[2].retained_fraction), (None, 0, 0.0));
        assert!(threshold_curve(&s, &p, &t, &scope, &[1.2]).is_err());
    }
}
