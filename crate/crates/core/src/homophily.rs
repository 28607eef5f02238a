//! Label mixing diagnostics: observed edge counts between label pairs, the
//! expected counts under a fixed-edge-count independence null, and their log ratio.
//!
//! Only edges with both endpoints labeled take part.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::labels::LabelStore;

/// Symmetric k×k matrix of (expected) edge counts between label values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingMatrix {
    pub labels: Vec<String>,
    values: Vec<f64>,
}

impl MixingMatrix {
    fn zeros(labels: Vec<String>) -> Self {
        let k = labels.len();
        MixingMatrix {
            labels,
            values: vec![0.0; k * k],
        }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size() + j]
    }

    fn add_pair(&mut self, i: usize, j: usize, v: f64) {
        let k = self.size();
        self.values[i * k + j] += v;
        if i != j {
            self.values[j * k + i] += v;
        }
    }

    /// Sum over the upper triangle including the diagonal (each unordered pair once).
    pub fn upper_sum(&self) -> f64 {
        let k = self.size();
        (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).map(|(i, j)| self.get(i, j)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.size().max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let cells: Vec<Option<f64>> = self.values.iter().map(|&v| Some(v)).collect();
        write_matrix_csv(&self.labels, &cells, out)
    }

    pub fn to_json(&self) -> Result<String> {
        let cells: Vec<Option<f64>> = self.values.iter().map(|&v| Some(v)).collect();
        matrix_json(&self.labels, &cells)
    }
}

/// Log ratio of observed to expected counts. `None` marks an undefined cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SocialEffect {
    pub labels: Vec<String>,
    values: Vec<Option<f64>>,
}

impl SocialEffect {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.size() + j]
    }

    /// Mean of the defined diagonal and off-diagonal cells.
    pub fn diagonal_contrast(&self) -> (Option<f64>, Option<f64>) {
        let k = self.size();
        let (mut dsum, mut dn, mut osum, mut on) = (0.0, 0usize, 0.0, 0usize);
        for i in 0..k {
            for j in 0..k {
                if let Some(v) = self.get(i, j) {
                    if i == j {
                        dsum += v;
                        dn += 1;
                    } else {
                        osum += v;
                        on += 1;
                    }
                }
            }
        }
        let mean = |s: f64, n: usize| (n > 0).then(|| s / n as f64);
        (mean(dsum, dn), mean(osum, on))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_matrix_csv(&self.labels, &self.values, out)
    }

    pub fn to_json(&self) -> Result<String> {
        matrix_json(&self.labels, &self.values)
    }
}

fn write_matrix_csv<W: Write>(labels: &[String], cells: &[Option<f64>], mut out: W) -> Result<()> {
    let k = labels.len();
    write!(out, "label")?;
    for l in labels {
        write!(out, ",{l}")?;
    }
    writeln!(out)?;
    for (i, l) in labels.iter().enumerate() {
        write!(out, "{l}")?;
        for c in &cells[i * k..(i + 1) * k] {
            match c {
                Some(v) => write!(out, ",{v}")?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn matrix_json(labels: &[String], cells: &[Option<f64>]) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a> {
        labels: &'a [String],
        values: Vec<&'a [Option<f64>]>,
    }
    let doc = Doc {
        labels,
        values: cells.chunks(labels.len().max(1)).collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Edges split by whether both endpoints carry a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EdgeTally {
    pub labeled: u64,
    pub skipped: u64,
}

pub fn tally_edges(g: &Graph, labels: &LabelStore) -> EdgeTally {
    let mut t = EdgeTally {
        labeled: 0,
        skipped: 0,
    };
    for (x, y) in g.edges() {
        if labels.get(x).is_some() && labels.get(y).is_some() {
            t.labeled += 1;
        } else {
            t.skipped += 1;
        }
    }
    t
}

fn default_axis(labels: &LabelStore) -> Vec<String> {
    (0..labels.d()).map(|i| i.to_string()).collect()
}

/// Observed counts: each both-labeled edge adds one to its unordered label cell.
pub fn communication_matrix(g: &Graph, labels: &LabelStore) -> MixingMatrix {
    communication_matrix_with_axis(g, labels, default_axis(labels))
}

pub fn communication_matrix_with_axis(
    g: &Graph,
    labels: &LabelStore,
    axis: Vec<String>,
) -> MixingMatrix {
    let mut c = MixingMatrix::zeros(axis);
    for (x, y) in g.edges() {
        if let (Some(i), Some(j)) = (labels.get(x), labels.get(y)) {
            c.add_pair(i, j, 1.0);
        }
    }
    c
}

/// Expected counts with the same number of both-labeled edges placed uniformly
/// over unordered pairs of labeled nodes.
pub fn surrogate_matrix(g: &Graph, labels: &LabelStore) -> Result<MixingMatrix> {
    surrogate_matrix_with_axis(g, labels, default_axis(labels))
}

pub fn surrogate_matrix_with_axis(
    g: &Graph,
    labels: &LabelStore,
    axis: Vec<String>,
) -> Result<MixingMatrix> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::param(format!(
            "surrogate matrix needs at least 2 labeled nodes, found {n}"
        )));
    }
    let m = tally_edges(g, labels).labeled as f64;
    let counts = labels.histogram();
    let pairs = n as f64 * (n as f64 - 1.0);
    let mut r = MixingMatrix::zeros(axis);
    let k = r.size();
    for i in 0..k {
        let ni = counts[i] as f64;
        r.values[i * k + i] = m * ni * (ni - 1.0) / pairs;
        for j in i + 1..k {
            let v = m * 2.0 * ni * counts[j] as f64 / pairs;
            r.values[i * k + j] = v;
            r.values[j * k + i] = v;
        }
    }
    Ok(r)
}

/// `ln(C + p) − ln(R + p)` per cell. With `p = 0`, cells where either side is zero are masked.
pub fn social_effect_matrix(
    c: &MixingMatrix,
    r: &MixingMatrix,
    pseudocount: f64,
) -> Result<SocialEffect> {
    if c.size() != r.size() {
        return Err(Error::ShapeMismatch(format!(
            "communication matrix is {0}x{0}, surrogate is {1}x{1}",
            c.size(),
            r.size()
        )));
    }
    if !(pseudocount >= 0.0) || !pseudocount.is_finite() {
        return Err(Error::param(format!("pseudocount {pseudocount} must be >= 0")));
    }
    let values = c
        .values
        .iter()
        .zip(&r.values)
        .map(|(&cv, &rv)| {
            let (a, b) = (cv + pseudocount, rv + pseudocount);
            (a > 0.0 && b > 0.0).then(|| a.ln() - b.ln())
        })
        .collect();
    Ok(SocialEffect {
        labels: c.labels.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(d: usize, cats: &[Option<usize>]) -> LabelStore {
        LabelStore::from_categories(d, cats).unwrap()
    }

    #[test]
    fn triangle_same_label() {
        let (g, _) = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let l = store(4, &[Some(0), Some(0), Some(0)]);
        let c = communication_matrix(&g, &l);
        assert_eq!(c.get(0, 0), 3.0);
        assert_eq!(c.upper_sum(), 3.0);
        let r = surrogate_matrix(&g, &l).unwrap();
        assert_eq!(r.get(0, 0), 3.0);
        assert_eq!(r.upper_sum(), 3.0);
    }

    #[test]
    fn cross_edge_is_symmetric() {
        let (g, _) = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let l = store(4, &[Some(0), Some(2)]);
        let c = communication_matrix(&g, &l);
        assert_eq!((c.get(0, 2), c.get(2, 0)), (1.0, 1.0));
        assert_eq!(c.upper_sum(), 1.0);
    }

    #[test]
    fn unlabeled_endpoints_skipped() {
        let (g, _) = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let l = store(2, &[Some(0), Some(1), None]);
        assert_eq!(tally_edges(&g, &l), EdgeTally { labeled: 1, skipped: 1 });
        assert_eq!(communication_matrix(&g, &l).upper_sum(), 1.0);
    }

    #[test]
    fn surrogate_two_by_two() {
        // 4 labeled nodes, two per label, 2 labeled edges.
        let (g, _) = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let l = store(2, &[Some(0), Some(0), Some(1), Some(1)]);
        let r = surrogate_matrix(&g, &l).unwrap();
        assert!((r.get(0, 1) - 4.0 / 3.0).abs() < 1e-12);
        assert!((r.get(0, 0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.get(1, 1) - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.upper_sum() - 2.0).abs() < 1e-12);

        let c = communication_matrix(&g, &l);
        assert_eq!(c.get(0, 0), 1.0);
        let s = social_effect_matrix(&c, &r, 0.0).unwrap();
        assert!((s.get(0, 0).unwrap() - 3f64.ln()).abs() < 1e-12);
        // C_01 = 0: masked rather than -inf
        assert_eq!(s.get(0, 1), None);
    }

    #[test]
    fn surrogate_needs_two_labels() {
        let (g, _) = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(surrogate_matrix(&g, &store(2, &[Some(0), None])).is_err());
    }

    #[test]
    fn social_effect_identity_and_log_ratio() {
        let mut c = MixingMatrix::zeros(vec!["a".into(), "b".into()]);
        let mut r = c.clone();
        c.add_pair(0, 0, 2.0);
        r.add_pair(0, 0, 2.0);
        let s = social_effect_matrix(&c, &r, 0.0).unwrap();
        assert_eq!(s.get(0, 0), Some(0.0));
        assert_eq!(s.get(1, 1), None);

        c.add_pair(0, 1, std::f64::consts::E);
        r.add_pair(0, 1, 1.0);
        let s = social_effect_matrix(&c, &r, 0.0).unwrap();
        assert!((s.get(0, 1).unwrap() - 1.0).abs() < 1e-12);

        let s = social_effect_matrix(&c, &r, 1.0).unwrap();
        assert_eq!(s.get(1, 1), Some(0.0));
        assert!(social_effect_matrix(&c, &r, -1.0).is_err());
        let big = MixingMatrix::zeros(vec!["a".into(); 3]);
        assert!(matches!(
            social_effect_matrix(&c, &big, 0.0),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn csv_masks_empty_cells() {
        let mut c = MixingMatrix::zeros(vec!["x".into(), "y".into()]);
        c.add_pair(0, 1, 1.0);
        let r = c.clone();
        let s = social_effect_matrix(&c, &r, 0.0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "label,x,y\nx,,0\ny,0,\n");
        let json: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert!(json["values"][0][0].is_null());
        assert_eq!(json["values"][0][1], 0.0);
    }
}
