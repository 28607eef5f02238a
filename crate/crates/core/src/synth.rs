//! Planted-homophily graphs from a stochastic block model.
//!
//! Group `g` occupies a contiguous index range. Each unordered pair of nodes is an
//! edge independently with the probability configured for its pair of groups.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Node};
use crate::labels::{AgeBinning, LabelStore};

/// Edge probabilities between groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mixing {
    /// Full symmetric group × group matrix.
    Matrix(Vec<Vec<f64>>),
    /// `p_in` inside a group, `p_out` across groups.
    Planted { p_in: f64, p_out: f64 },
}

/// How pairs are visited while sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairSampling {
    /// One Bernoulli draw per pair, O(n²).
    PairScan,
    /// Jump straight to the next edge with geometric gaps, O(n + m).
    #[default]
    GeometricSkip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub group_sizes: Vec<usize>,
    pub mixing: Mixing,
    /// Fraction of nodes whose label is revealed, in (0, 1].
    pub labeled_fraction: f64,
    pub rng_seed: u64,
    #[serde(default)]
    pub sampling: PairSampling,
}

impl SynthConfig {
    /// Equal-sized groups with the given expected intra- and inter-group degrees.
    pub fn from_mean_degrees(
        groups: usize,
        group_size: usize,
        intra_degree: f64,
        inter_degree: f64,
        labeled_fraction: f64,
        rng_seed: u64,
    ) -> Result<Self> {
        if groups < 2 || group_size < 2 {
            return Err(Error::param("need at least 2 groups of at least 2 nodes"));
        }
        let p_in = intra_degree / (group_size - 1) as f64;
        let p_out = inter_degree / ((groups - 1) * group_size) as f64;
        Ok(SynthConfig {
            group_sizes: vec![group_size; groups],
            mixing: Mixing::Planted { p_in, p_out },
            labeled_fraction,
            rng_seed,
            sampling: PairSampling::default(),
        })
    }

    /// Four groups of 2,500, mean intra-degree 8, mean inter-degree 3, 10% labeled.
    pub fn acceptance_default(rng_seed: u64) -> Self {
        Self::from_mean_degrees(4, 2500, 8.0, 3.0, 0.1, rng_seed).unwrap()
    }

    pub fn node_count(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    /// Resolved probability matrix.
    pub fn probabilities(&self) -> Vec<Vec<f64>> {
        let k = self.group_sizes.len();
        match &self.mixing {
            Mixing::Matrix(m) => m.clone(),
            Mixing::Planted { p_in, p_out } => (0..k)
                .map(|a| (0..k).map(|b| if a == b { *p_in } else { *p_out }).collect())
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.group_sizes.len();
        if k < 2 {
            return Err(Error::param("need at least 2 groups"));
        }
        if !(self.labeled_fraction > 0.0 && self.labeled_fraction <= 1.0) {
            return Err(Error::param(format!(
                "labeled fraction {} not in (0, 1]",
                self.labeled_fraction
            )));
        }
        let p = self.probabilities();
        if p.len() != k || p.iter().any(|r| r.len() != k) {
            return Err(Error::ShapeMismatch(format!("mixing matrix must be {k}x{k}")));
        }
        for a in 0..k {
            for b in 0..k {
                if !(0.0..=1.0).contains(&p[a][b]) {
                    return Err(Error::param(format!("probability {} not in [0, 1]", p[a][b])));
                }
                if p[a][b] != p[b][a] {
                    return Err(Error::param("mixing matrix must be symmetric"));
                }
                let empty = self.group_sizes[a] == 0 || self.group_sizes[b] == 0;
                if empty && p[a][b] > 0.0 {
                    return Err(Error::param(format!(
                        "group {} is empty but has nonzero edge probability",
                        if self.group_sizes[a] == 0 { a } else { b }
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Generated graph with the complete planted labels and the revealed subset.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub graph: Graph,
    pub truth: LabelStore,
    pub observed: LabelStore,
}

/// Sample a graph and labels. Ages use the default binning when there are four
/// groups and ten-year bins starting at 27 otherwise.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    let k = config.group_sizes.len();
    let binning = if k == AgeBinning::default().categories() || k < 2 {
        AgeBinning::default()
    } else {
        AgeBinning::new((1..k as u32).map(|i| 17 + 10 * i).collect(), None)?
    };
    generate_with_binning(config, &binning)
}

/// As [`generate`], also attaching a synthetic age to every node drawn uniformly
/// from its group's age range under `binning`.
pub fn generate_with_binning(config: &SynthConfig, binning: &AgeBinning) -> Result<SynthOutput> {
    config.validate()?;
    let k = config.group_sizes.len();
    if binning.categories() != k {
        return Err(Error::param(format!(
            "{k} groups but binning has {} categories",
            binning.categories()
        )));
    }
    let n = config.node_count();
    if n > Node::MAX as usize {
        return Err(Error::param("too many nodes"));
    }
    let mut starts = vec![0usize; k + 1];
    for (g, &s) in config.group_sizes.iter().enumerate() {
        starts[g + 1] = starts[g] + s;
    }
    let p = config.probabilities();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);

    let mut edges: Vec<(Node, Node)> = Vec::new();
    for a in 0..k {
        for b in a..k {
            let prob = p[a][b];
            if prob <= 0.0 {
                continue;
            }
            let (na, nb) = (config.group_sizes[a], config.group_sizes[b]);
            let (oa, ob) = (starts[a] as Node, starts[b] as Node);
            let pairs = if a == b { na * na.saturating_sub(1) / 2 } else { na * nb };
            let mut emit = |idx: usize| {
                let (i, j) = if a == b { triangle_pair(idx) } else { (idx / nb, idx % nb) };
                edges.push((oa + i as Node, ob + j as Node));
            };
            match config.sampling {
                PairSampling::PairScan => {
                    for idx in 0..pairs {
                        if rng.random::<f64>() < prob {
                            emit(idx);
                        }
                    }
                }
                PairSampling::GeometricSkip => {
                    if prob >= 1.0 {
                        (0..pairs).for_each(&mut emit);
                        continue;
                    }
                    let log_q = (-prob).ln_1p();
                    let mut idx: usize = 0;
                    loop {
                        // 1 - U lies in (0, 1], so the log is finite.
                        let u: f64 = 1.0 - rng.random::<f64>();
                        let gap = (u.ln() / log_q).floor();
                        if gap >= (pairs - idx) as f64 {
                            break;
                        }
                        idx += gap as usize;
                        emit(idx);
                        idx += 1;
                        if idx >= pairs {
                            break;
                        }
                    }
                }
            }
        }
    }
    let (graph, _) = Graph::from_edges(n, &edges)?;
    drop(edges);

    let mut truth = LabelStore::new(n, k)?;
    for g in 0..k {
        let lo = range_low(binning, g);
        let hi = range_high(binning, g, lo);
        for x in starts[g]..starts[g + 1] {
            truth.set(x as Node, g)?;
            truth.set_age(x as Node, rng.random_range(lo..=hi));
        }
    }
    let revealed = (config.labeled_fraction * n as f64).round() as usize;
    let mut picked: Vec<Node> = sample(&mut rng, n, revealed)
        .into_iter()
        .map(|i| i as Node)
        .collect();
    picked.sort_unstable();
    let observed = truth.restrict(&picked);
    Ok(SynthOutput {
        graph,
        truth,
        observed,
    })
}

/// Pairs `(i, j)` with `i < j`, enumerated column by column: 0→(0,1), 1→(0,2), 2→(1,2), 3→(0,3), …
fn triangle_pair(idx: usize) -> (usize, usize) {
    // largest j with j(j-1)/2 <= idx
    let mut j = ((1.0 + (1.0 + 8.0 * idx as f64).sqrt()) / 2.0) as usize;
    while j * (j - 1) / 2 > idx {
        j -= 1;
    }
    while (j + 1) * j / 2 <= idx {
        j += 1;
    }
    let i = idx - j * (j - 1) / 2;
    (i, j)
}

fn range_low(binning: &AgeBinning, cat: usize) -> u32 {
    if cat == 0 {
        binning.bounds()[0].min(18)
    } else {
        binning.bounds()[cat - 1] + 1
    }
}

fn range_high(binning: &AgeBinning, cat: usize, lo: u32) -> u32 {
    binning.bounds().get(cat).copied().unwrap_or(lo + 29)
}
