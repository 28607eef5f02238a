//! Turning probability vectors into category decisions.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::diffusion::StateMatrix;
use crate::error::{Error, Result};
use crate::graph::{Node, NodeIdMap};
use crate::labels::LabelStore;

/// Tolerance on the sum of a target distribution.
pub const TARGET_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assigned {
    pub category: usize,
    /// Probability of the chosen category in the node's state.
    pub confidence: f64,
}

/// Partial map from node to chosen category.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    entries: Vec<Option<Assigned>>,
}

impl Prediction {
    pub fn empty(node_count: usize) -> Self {
        Prediction {
            entries: vec![None; node_count],
        }
    }

    pub fn get(&self, x: Node) -> Option<Assigned> {
        self.entries.get(x as usize).copied().flatten()
    }

    pub fn set(&mut self, x: Node, a: Assigned) {
        self.entries[x as usize] = Some(a);
    }

    pub fn node_count(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Node, Assigned)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(x, a)| a.map(|a| (x as Node, a)))
    }

    pub fn histogram(&self, d: usize) -> Vec<usize> {
        let mut h = vec![0; d];
        for (_, a) in self.iter() {
            h[a.category] += 1;
        }
        h
    }

    /// `external_id,category,confidence` with a header line, ascending internal index.
    pub fn write_csv<W: Write>(&self, map: &NodeIdMap, mut out: W) -> Result<()> {
        writeln!(out, "external_id,category,confidence")?;
        for (x, a) in self.iter() {
            writeln!(out, "{},{},{}", map.external(x), a.category, a.confidence)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R, map: &NodeIdMap) -> Result<Prediction> {
        let mut p = Prediction::empty(map.len());
        for (no, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = no + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') || (lineno == 1 && t.starts_with("external_id"))
            {
                continue;
            }
            let f: Vec<&str> = t.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(Error::malformed(lineno, "expected `id,category,confidence`"));
            }
            let x = map.get(f[0]).ok_or_else(|| Error::UnknownId(f[0].to_owned()))?;
            let category = f[1]
                .parse()
                .map_err(|_| Error::malformed(lineno, format!("bad category {:?}", f[1])))?;
            let confidence: f64 = f[2]
                .parse()
                .map_err(|_| Error::malformed(lineno, format!("bad confidence {:?}", f[2])))?;
            if !(0.0..=1.0).contains(&confidence) {
                return Err(Error::malformed(lineno, "confidence outside [0, 1]"));
            }
            p.set(x, Assigned { category, confidence });
        }
        Ok(p)
    }
}

/// Category shares, on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDistribution(Vec<f64>);

impl TargetDistribution {
    pub fn new(shares: Vec<f64>) -> Result<Self> {
        if shares.is_empty() {
            return Err(Error::Empty("target distribution"));
        }
        if shares.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
            return Err(Error::param("target shares must be finite and nonnegative"));
        }
        let sum: f64 = shares.iter().sum();
        if (sum - 1.0).abs() > TARGET_SUM_TOL {
            return Err(Error::param(format!("target shares sum to {sum}, not 1")));
        }
        Ok(TargetDistribution(shares))
    }

    pub fn shares(&self) -> &[f64] {
        &self.0
    }
}

/// Category frequencies of a label store.
pub fn empirical_distribution(labels: &LabelStore) -> Result<TargetDistribution> {
    if labels.is_empty() {
        return Err(Error::Empty("label store"));
    }
    let n = labels.len() as f64;
    TargetDistribution::new(labels.histogram().into_iter().map(|c| c as f64 / n).collect())
}

/// Hamilton apportionment of `total` across `weights` (normalized internally).
///
/// Each part gets `floor(total · w)`, and the leftover units go to the largest
/// fractional remainders, lower index first on ties. The result sums to `total`.
pub fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || !(sum > 0.0) {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let rem: Vec<f64> = exact.iter().zip(&quotas).map(|(e, &q)| e - q as f64).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| rem[b].total_cmp(&rem[a]).then(a.cmp(&b)));

    let assigned: usize = quotas.iter().sum();
    if assigned <= total {
        for &k in order.iter().cycle().take(total - assigned) {
            quotas[k] += 1;
        }
    } else {
        // Only reachable through rounding of the normalization.
        let mut excess = assigned - total;
        for &k in order.iter().rev() {
            if excess == 0 {
                break;
            }
            if quotas[k] > 0 {
                quotas[k] -= 1;
                excess -= 1;
            }
        }
    }
    quotas
}

/// Highest-probability category per node; ties go to the lowest index.
pub fn argmax_assign(state: &StateMatrix) -> Prediction {
    let mut p = Prediction::empty(state.node_count());
    for x in 0..state.node_count() {
        let row = state.row(x);
        let mut best = 0;
        for k in 1..row.len() {
            if row[k] > row[best] {
                best = k;
            }
        }
        p.entries[x] = Some(Assigned {
            category: best,
            confidence: row[best],
        });
    }
    p
}

/// Assign every node in `scope` so category counts equal the largest-remainder
/// quotas of `|scope| · target`.
///
/// All (node, category) pairs are visited in order of decreasing probability
/// (then node, then category); a node takes the first pair whose category still
/// has quota left.
pub fn constrained_assign(
    state: &StateMatrix,
    target: &TargetDistribution,
    scope: &[Node],
) -> Result<Prediction> {
    let d = state.d();
    if target.0.len() != d {
        return Err(Error::ShapeMismatch(format!(
            "target has {} categories, state has {d}",
            target.0.len()
        )));
    }
    TargetDistribution::new(target.0.clone())?;
    if scope.is_empty() {
        return Err(Error::Empty("assignment scope"));
    }
    let mut in_scope = vec![false; state.node_count()];
    for &x in scope {
        let slot = in_scope.get_mut(x as usize).ok_or(Error::NodeOutOfRange {
            index: x as usize,
            node_count: state.node_count(),
        })?;
        if std::mem::replace(slot, true) {
            return Err(Error::param(format!("node {x} repeated in scope")));
        }
    }

    let mut quota = largest_remainder(scope.len(), &target.0);
    let mut triples: Vec<(f64, Node, u16)> = Vec::with_capacity(scope.len() * d);
    for &x in scope {
        for (k, &p) in state.row(x as usize).iter().enumerate() {
            triples.push((p, x, k as u16));
        }
    }
    triples.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut pred = Prediction::empty(state.node_count());
    let mut remaining = scope.len();
    for (p, x, k) in triples {
        let k = k as usize;
        if pred.entries[x as usize].is_some() || quota[k] == 0 {
            continue;
        }
        quota[k] -= 1;
        pred.entries[x as usize] = Some(Assigned {
            category: k,
            confidence: p,
        });
        remaining -= 1;
        if remaining == 0 {
            break;
        }
    }
    debug_assert_eq!(remaining, 0);
    Ok(pred)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(rows: &[&[f64]]) -> StateMatrix {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        StateMatrix::from_rows(rows[0].len(), &rows).unwrap()
    }

    #[test]
    fn argmax_basic_and_ties() {
        let s = state(&[&[0.1, 0.2, 0.6, 0.1], &[0.25, 0.25, 0.25, 0.25], &[0.1, 0.4, 0.1, 0.4]]);
        let p = argmax_assign(&s);
        assert_eq!(p.get(0), Some(Assigned { category: 2, confidence: 0.6 }));
        assert_eq!(p.get(1), Some(Assigned { category: 0, confidence: 0.25 }));
        assert_eq!(p.get(2).unwrap().category, 1);
    }

    #[test]
    fn constrained_one_hot_rows() {
        let s = state(&[
            &[0.0, 0.0, 1.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 1.0, 0.0, 0.0],
        ]);
        let t = TargetDistribution::new(vec![0.25; 4]).unwrap();
        let p = constrained_assign(&s, &t, &[0, 1, 2, 3]).unwrap();
        assert_eq!(p, argmax_assign(&s));
    }

    #[test]
    fn constrained_greedy_trace() {
        let s = state(&[&[0.9, 0.1], &[0.6, 0.4]]);
        let t = TargetDistribution::new(vec![0.5, 0.5]).unwrap();
        let p = constrained_assign(&s, &t, &[0, 1]).unwrap();
        assert_eq!(p.get(0).unwrap().category, 0);
        assert_eq!(p.get(1), Some(Assigned { category: 1, confidence: 0.4 }));
    }

    #[test]
    fn constrained_scope_is_respected() {
        let s = state(&[&[0.9, 0.1], &[0.6, 0.4], &[0.5, 0.5]]);
        let t = TargetDistribution::new(vec![0.0, 1.0]).unwrap();
        let p = constrained_assign(&s, &t, &[2, 0]).unwrap();
        assert_eq!(p.get(1), None);
        assert_eq!(p.histogram(2), vec![0, 2]);
    }

    #[test]
    fn constrained_errors() {
        let s = state(&[&[0.9, 0.1]]);
        let t = TargetDistribution::new(vec![0.5, 0.5]).unwrap();
        assert!(constrained_assign(&s, &t, &[]).is_err());
        assert!(constrained_assign(&s, &t, &[0, 0]).is_err());
        assert!(constrained_assign(&s, &t, &[3]).is_err());
        let t3 = TargetDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(constrained_assign(&s, &t3, &[0]).is_err());
        assert!(TargetDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(TargetDistribution::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn apportionment() {
        assert_eq!(largest_remainder(10, &[0.25; 4]), vec![3, 3, 2, 2]);
        assert_eq!(largest_remainder(7, &[0.5, 0.5]), vec![4, 3]);
        assert_eq!(largest_remainder(100, &[0.36, 0.14, 0.3, 0.2]), vec![36, 14, 30, 20]);
        assert_eq!(largest_remainder(3, &[0.0, 1.0]), vec![0, 3]);
        assert_eq!(largest_remainder(5, &[1.0, 1.0, 1.0]).iter().sum::<usize>(), 5);
    }

    #[test]
    fn empirical() {
        let l = LabelStore::from_categories(2, &[Some(0); 5].iter().chain(&[Some(1); 5]).copied().collect::<Vec<_>>()).unwrap();
        assert_eq!(empirical_distribution(&l).unwrap().shares(), &[0.5, 0.5]);
        let one = LabelStore::from_categories(3, &[Some(2)]).unwrap();
        assert_eq!(empirical_distribution(&one).unwrap().shares(), &[0.0, 0.0, 1.0]);
        assert!(empirical_distribution(&LabelStore::new(2, 2).unwrap()).is_err());
    }

    #[test]
    fn prediction_csv_round_trip() {
        let s = state(&[&[0.1, 0.9], &[0.7, 0.3]]);
        let p = argmax_assign(&s);
        let map = NodeIdMap::identity(2);
        let mut buf = Vec::new();
        p.write_csv(&map, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "external_id,category,confidence\n0,1,0.9\n1,0,0.7\n"
        );
        assert_eq!(Prediction::read_csv(buf.as_slice(), &map).unwrap(), p);
    }
}
