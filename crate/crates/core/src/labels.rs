//! Ground-truth ages, their binning into categories, and seed/validation splits.

use std::io::BufRead;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::largest_remainder;
use crate::error::{Error, Result};
use crate::graph::{Delimiter, Node, NodeIdMap};

/// Category boundaries as inclusive upper bounds in years; the last category is unbounded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeBinning {
    bounds: Vec<u32>,
    names: Vec<String>,
}

impl Default for AgeBinning {
    /// Four groups: up to 24, 25–34, 35–50, over 50.
    fn default() -> Self {
        AgeBinning {
            bounds: vec![24, 34, 50],
            names: vec!["<=24".into(), "25-34".into(), "35-50".into(), ">50".into()],
        }
    }
}

impl AgeBinning {
    /// `bounds` are the d−1 finite inclusive upper bounds, strictly increasing.
    pub fn new(bounds: Vec<u32>, names: Option<Vec<String>>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::param("age binning needs at least two categories"));
        }
        if bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("age bounds must be strictly increasing"));
        }
        let d = bounds.len() + 1;
        let names = match names {
            Some(n) if n.len() != d => {
                return Err(Error::param(format!("expected {d} category names, got {}", n.len())))
            }
            Some(n) => n,
            None => {
                let mut lo = 0u32;
                let mut names: Vec<String> = bounds
                    .iter()
                    .map(|&b| {
                        let s = format!("{lo}-{b}");
                        lo = b + 1;
                        s
                    })
                    .collect();
                names.push(format!(">{}", bounds.last().unwrap()));
                names
            }
        };
        Ok(AgeBinning { bounds, names })
    }

    pub fn categories(&self) -> usize {
        self.bounds.len() + 1
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Finite inclusive upper bounds (d − 1 of them).
    pub fn bounds(&self) -> &[u32] {
        &self.bounds
    }

    /// Smallest category whose upper bound is at least `age`.
    pub fn bin(&self, age: i64) -> Result<usize> {
        if age < 0 {
            return Err(Error::param(format!("negative age {age}")));
        }
        Ok(self
            .bounds
            .iter()
            .position(|&b| age <= b as i64)
            .unwrap_or(self.bounds.len()))
    }
}

pub fn bin_age(age: i64, binning: &AgeBinning) -> Result<usize> {
    binning.bin(age)
}

/// Partial map from node to category in `0..d`, optionally keeping the raw ages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelStore {
    d: usize,
    categories: Vec<Option<u16>>,
    ages: Vec<Option<u32>>,
    len: usize,
}

impl LabelStore {
    pub fn new(node_count: usize, d: usize) -> Result<Self> {
        if d < 2 || d > u16::MAX as usize {
            return Err(Error::param(format!("category count {d} out of range")));
        }
        Ok(LabelStore {
            d,
            categories: vec![None; node_count],
            ages: Vec::new(),
            len: 0,
        })
    }

    pub fn from_categories(d: usize, categories: &[Option<usize>]) -> Result<Self> {
        let mut store = LabelStore::new(categories.len(), d)?;
        for (x, c) in categories.iter().enumerate() {
            if let Some(c) = *c {
                store.set(x as Node, c)?;
            }
        }
        Ok(store)
    }

    pub fn set(&mut self, node: Node, category: usize) -> Result<()> {
        if category >= self.d {
            return Err(Error::param(format!("category {category} >= d = {}", self.d)));
        }
        let node_count = self.categories.len();
        let slot = self
            .categories
            .get_mut(node as usize)
            .ok_or(Error::NodeOutOfRange {
                index: node as usize,
                node_count,
            })?;
        if slot.is_none() {
            self.len += 1;
        }
        *slot = Some(category as u16);
        Ok(())
    }

    pub(crate) fn set_age(&mut self, node: Node, age: u32) {
        if self.ages.is_empty() {
            self.ages = vec![None; self.categories.len()];
        }
        self.ages[node as usize] = Some(age);
    }

    #[inline]
    pub fn get(&self, node: Node) -> Option<usize> {
        self.categories
            .get(node as usize)
            .copied()
            .flatten()
            .map(usize::from)
    }

    pub fn age(&self, node: Node) -> Option<u32> {
        self.ages.get(node as usize).copied().flatten()
    }

    pub fn has_ages(&self) -> bool {
        !self.ages.is_empty()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn node_count(&self) -> usize {
        self.categories.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Labeled nodes in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = (Node, usize)> + '_ {
        self.categories
            .iter()
            .enumerate()
            .filter_map(|(x, c)| c.map(|c| (x as Node, c as usize)))
    }

    pub fn nodes(&self) -> Vec<Node> {
        self.iter().map(|(x, _)| x).collect()
    }

    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.d];
        for (_, c) in self.iter() {
            h[c] += 1;
        }
        h
    }

    /// Keep only the listed nodes.
    pub fn restrict(&self, nodes: &[Node]) -> LabelStore {
        let mut out = LabelStore {
            d: self.d,
            categories: vec![None; self.categories.len()],
            ages: Vec::new(),
            len: 0,
        };
        for &x in nodes {
            if let Some(c) = self.get(x) {
                out.categories[x as usize] = Some(c as u16);
                out.len += 1;
                if let Some(a) = self.age(x) {
                    out.set_age(x, a);
                }
            }
        }
        out
    }

    /// Relabel by raw age year: category `i` is year `min_age + i`.
    ///
    /// Returns the per-year store and the axis labels. Fails if ages were not retained.
    pub fn by_year(&self) -> Result<(LabelStore, Vec<String>)> {
        if !self.has_ages() {
            return Err(Error::param("per-year granularity requires raw ages"));
        }
        let years: Vec<(Node, u32)> = self
            .iter()
            .filter_map(|(x, _)| self.age(x).map(|a| (x, a)))
            .collect();
        let lo = years.iter().map(|&(_, a)| a).min().ok_or(Error::Empty("label store"))?;
        let hi = years.iter().map(|&(_, a)| a).max().unwrap();
        let d = ((hi - lo + 1) as usize).max(2);
        let mut store = LabelStore::new(self.categories.len(), d)?;
        for (x, a) in years {
            store.set(x, (a - lo) as usize)?;
            store.set_age(x, a);
        }
        let axis = (0..d).map(|i| (lo as usize + i).to_string()).collect();
        Ok((store, axis))
    }
}

/// Write `id<delim>age` lines for every labeled node. Requires retained ages.
pub fn write_label_file<W: std::io::Write>(
    labels: &LabelStore,
    map: &NodeIdMap,
    delimiter: Delimiter,
    mut out: W,
) -> Result<()> {
    let sep = delimiter.as_char();
    for (x, _) in labels.iter() {
        let age = labels
            .age(x)
            .ok_or_else(|| Error::param(format!("node {x} has no raw age to write")))?;
        writeln!(out, "{}{sep}{age}", map.external(x))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelLoadStats {
    pub lines: usize,
    pub unmapped: usize,
    pub repeated: usize,
}

/// Read `id<delim>age` lines, binning each age. Ids missing from `map` are skipped.
///
/// Repeating an id with the same age is tolerated; a conflicting age is an error.
pub fn load_ground_truth<R: BufRead>(
    reader: R,
    map: &NodeIdMap,
    binning: &AgeBinning,
    delimiter: Delimiter,
) -> Result<(LabelStore, LabelLoadStats)> {
    let mut store = LabelStore::new(map.len(), binning.categories())?;
    store.ages = vec![None; map.len()];
    let mut stats = LabelLoadStats::default();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        stats.lines += 1;
        let fields = delimiter.split(trimmed);
        if fields.len() != 2 || fields[0].is_empty() {
            return Err(Error::malformed(lineno, "expected `id<delim>age`"));
        }
        let age: i64 = fields[1]
            .parse()
            .map_err(|_| Error::malformed(lineno, format!("bad age {:?}", fields[1])))?;
        if age < 0 || age > u32::MAX as i64 {
            return Err(Error::malformed(lineno, format!("age {age} out of range")));
        }
        let Some(node) = map.get(fields[0]) else {
            stats.unmapped += 1;
            continue;
        };
        if let Some(prev) = store.age(node) {
            if prev as i64 != age {
                return Err(Error::ConflictingLabel {
                    line: lineno,
                    id: fields[0].to_owned(),
                    first: prev,
                    second: age as u32,
                });
            }
            stats.repeated += 1;
            continue;
        }
        let cat = binning.bin(age)?;
        store.set(node, cat)?;
        store.set_age(node, age as u32);
    }
    Ok((store, stats))
}

/// Seed nodes and held-out validation nodes; both sorted ascending and disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub seeds: Vec<Node>,
    pub validation: Vec<Node>,
    pub rng_seed: u64,
}

/// Hold out `round(fraction · |labels|)` labeled nodes for validation.
///
/// Sampling is uniform without replacement from a ChaCha8 stream seeded with
/// `rng_seed`. In stratified mode the held-out total is apportioned across
/// categories by largest remainder, then sampled within each category.
pub fn split_train_validation(
    labels: &LabelStore,
    validation_fraction: f64,
    rng_seed: u64,
    stratified: bool,
) -> Result<Split> {
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(Error::param(format!(
            "validation fraction {validation_fraction} not in (0, 1)"
        )));
    }
    if labels.is_empty() {
        return Err(Error::Empty("label store"));
    }
    let n = labels.len();
    let k = (validation_fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let mut held = vec![false; labels.node_count()];
    if stratified {
        let mut groups: Vec<Vec<Node>> = vec![Vec::new(); labels.d()];
        for (x, c) in labels.iter() {
            groups[c].push(x);
        }
        let weights: Vec<f64> = groups.iter().map(|g| g.len() as f64 / n as f64).collect();
        let quotas = largest_remainder(k, &weights);
        for (group, &q) in groups.iter().zip(&quotas) {
            let q = q.min(group.len());
            for i in sample(&mut rng, group.len(), q) {
                held[group[i] as usize] = true;
            }
        }
    } else {
        let nodes = labels.nodes();
        for i in sample(&mut rng, n, k) {
            held[nodes[i] as usize] = true;
        }
    }

    let (validation, seeds): (Vec<Node>, Vec<Node>) =
        labels.iter().map(|(x, _)| x).partition(|&x| held[x as usize]);
    Ok(Split {
        seeds,
        validation,
        rng_seed,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct SplitFile {
    rng_seed: u64,
    seeds: Vec<String>,
    validation: Vec<String>,
}

impl Split {
    pub fn to_json(&self, map: &NodeIdMap) -> Result<String> {
        let ext = |v: &[Node]| v.iter().map(|&x| map.external(x).to_owned()).collect();
        let file = SplitFile {
            rng_seed: self.rng_seed,
            seeds: ext(&self.seeds),
            validation: ext(&self.validation),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str, map: &NodeIdMap) -> Result<Split> {
        let file: SplitFile = serde_json::from_str(text)?;
        let int = |v: &[String]| -> Result<Vec<Node>> {
            let mut out = v
                .iter()
                .map(|id| map.get(id).ok_or_else(|| Error::UnknownId(id.clone())))
                .collect::<Result<Vec<_>>>()?;
            out.sort_unstable();
            Ok(out)
        };
        let split = Split {
            seeds: int(&file.seeds)?,
            validation: int(&file.validation)?,
            rng_seed: file.rng_seed,
        };
        let mut all: Vec<Node> = split.seeds.iter().chain(&split.validation).copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("seed and validation sets overlap or repeat ids"));
        }
        Ok(split)
    }
}
