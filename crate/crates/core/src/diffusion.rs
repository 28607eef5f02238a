//! Reaction-diffusion with memory over per-node probability vectors.
//!
//! Every node starts from a vector `g0` (one-hot at the known category for seeds,
//! uniform otherwise) and is updated synchronously as
//!
//! ```text
//! g_t(x) = (1 − λ) g0(x) + λ · mean_{y ~ x} g_{t−1}(y)
//! ```
//!
//! An entry whose neighbor mean already equals its initial value is left at that
//! value, so nodes the seeds have not reached stay bit-identical to their uniform
//! start. Nodes without neighbors keep `g0`.
//!
//! All reads come from the previous snapshot (double buffering), and each row sums
//! its neighbors in ascending index order, so the result does not depend on how
//! rows are scheduled across threads.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Node, NodeIdMap};
use crate::labels::LabelStore;

/// Row sums further than this from 1 are renormalized after a step.
pub const RENORMALIZE_DRIFT: f64 = 1e-12;

const PAR_MIN_ROWS: usize = 2048;

/// `node_count × d` row-major matrix; row `x` is the probability vector of node `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    d: usize,
    data: Vec<f64>,
}

impl StateMatrix {
    pub fn uniform(node_count: usize, d: usize) -> Self {
        StateMatrix {
            d,
            data: vec![1.0 / d as f64; node_count * d],
        }
    }

    pub fn from_rows(d: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("state width must be positive"));
        }
        let mut data = Vec::with_capacity(rows.len() * d);
        for (x, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::ShapeMismatch(format!(
                    "row {x} has {} entries, expected {d}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(StateMatrix { d, data })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn node_count(&self) -> usize {
        self.data.len() / self.d
    }

    #[inline]
    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.d..(x + 1) * self.d]
    }

    #[inline]
    pub fn row_mut(&mut self, x: usize) -> &mut [f64] {
        &mut self.data[x * self.d..(x + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute entrywise difference.
    pub fn linf_distance(&self, other: &StateMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Checks every row is nonnegative and sums to 1 within `tol`.
    pub fn check_simplex(&self, tol: f64) -> Result<()> {
        for x in 0..self.node_count() {
            let r = self.row(x);
            if r.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::param(format!("row {x} has a negative or NaN entry")));
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::param(format!("row {x} sums to {s}")));
            }
        }
        Ok(())
    }

    fn check_shape(&self, g: &Graph, what: &str) -> Result<()> {
        if self.node_count() != g.node_count() {
            return Err(Error::ShapeMismatch(format!(
                "{what} has {} rows, graph has {} nodes",
                self.node_count(),
                g.node_count()
            )));
        }
        Ok(())
    }
}

/// Knobs of a diffusion run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    /// Weight of the neighbor mean; `1 − lambda` weights the initial state.
    pub lambda: f64,
    pub d: usize,
    pub max_iterations: usize,
    /// Stop once the L∞ change between consecutive states drops below this.
    pub convergence_tolerance: f64,
    /// Hold seed rows at their one-hot start. Not part of the base update rule.
    pub clamp_seeds: bool,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        DiffusionParams {
            lambda: 0.5,
            d: 4,
            max_iterations: 20,
            convergence_tolerance: 1e-6,
            clamp_seeds: false,
        }
    }
}

impl DiffusionParams {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if self.d < 2 {
            return Err(Error::param(format!("d = {} must be at least 2", self.d)));
        }
        if self.max_iterations < 1 {
            return Err(Error::param("max_iterations must be at least 1"));
        }
        if !(self.convergence_tolerance > 0.0) {
            return Err(Error::param(format!(
                "convergence tolerance {} must be positive",
                self.convergence_tolerance
            )));
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::param(format!("lambda {lambda} not in [0, 1]")));
    }
    Ok(())
}

/// Initial vectors: one-hot at the seed's category, uniform `1/d` elsewhere.
pub fn init_state(g: &Graph, seeds: &[Node], labels: &LabelStore, d: usize) -> Result<StateMatrix> {
    if d < 2 {
        return Err(Error::param(format!("d = {d} must be at least 2")));
    }
    let mut state = StateMatrix::uniform(g.node_count(), d);
    for &s in seeds {
        if s as usize >= g.node_count() {
            return Err(Error::NodeOutOfRange {
                index: s as usize,
                node_count: g.node_count(),
            });
        }
        let cat = labels.get(s).ok_or(Error::UnlabeledSeed(s))?;
        if cat >= d {
            return Err(Error::param(format!("seed {s} has category {cat} >= d = {d}")));
        }
        let row = state.row_mut(s as usize);
        row.fill(0.0);
        row[cat] = 1.0;
    }
    Ok(state)
}

/// One synchronous update. See the module docs for the rule.
pub fn step(
    g: &Graph,
    current: &StateMatrix,
    initial: &StateMatrix,
    lambda: f64,
) -> Result<StateMatrix> {
    let mut out = StateMatrix {
        d: current.d,
        data: vec![0.0; current.data.len()],
    };
    step_into(g, current, initial, lambda, None, &mut out)?;
    Ok(out)
}

/// Writes the next state into `out` and returns how many rows were renormalized.
///
/// Rows flagged in `clamp` are copied from `initial` unchanged.
pub fn step_into(
    g: &Graph,
    current: &StateMatrix,
    initial: &StateMatrix,
    lambda: f64,
    clamp: Option<&[bool]>,
    out: &mut StateMatrix,
) -> Result<usize> {
    check_lambda(lambda)?;
    current.check_shape(g, "current state")?;
    initial.check_shape(g, "initial state")?;
    out.check_shape(g, "output state")?;
    if current.d != initial.d || current.d != out.d {
        return Err(Error::ShapeMismatch(format!(
            "state widths differ: {}, {}, {}",
            current.d, initial.d, out.d
        )));
    }
    if let Some(c) = clamp {
        if c.len() != g.node_count() {
            return Err(Error::ShapeMismatch("clamp mask length".into()));
        }
    }
    let d = current.d;
    let renormalized = out
        .data
        .par_chunks_mut(d)
        .with_min_len(PAR_MIN_ROWS)
        .enumerate()
        .map(|(x, row)| {
            let init = initial.row(x);
            let nbrs = g.adj(x);
            if nbrs.is_empty() || clamp.is_some_and(|c| c[x]) {
                row.copy_from_slice(init);
                return 0usize;
            }
            row.fill(0.0);
            for &y in nbrs {
                for (acc, &p) in row.iter_mut().zip(current.row(y as usize)) {
                    *acc += p;
                }
            }
            let deg = nbrs.len() as f64;
            for (v, &g0) in row.iter_mut().zip(init) {
                let mean = *v / deg;
                *v = if mean == g0 {
                    g0
                } else {
                    (1.0 - lambda) * g0 + lambda * mean
                };
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > RENORMALIZE_DRIFT {
                row.iter_mut().for_each(|v| *v /= s);
                1
            } else {
                0
            }
        })
        .sum();
    Ok(renormalized)
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub state: StateMatrix,
    pub initial: StateMatrix,
    pub iterations: usize,
    /// L∞ change of the last step.
    pub final_delta: f64,
    pub converged: bool,
    pub renormalized_rows: usize,
}

/// Build the initial state from `seeds` and iterate until convergence or the budget runs out.
pub fn run(
    g: &Graph,
    seeds: &[Node],
    labels: &LabelStore,
    params: &DiffusionParams,
) -> Result<RunResult> {
    params.validate()?;
    let initial = init_state(g, seeds, labels, params.d)?;
    let clamp = params.clamp_seeds.then(|| seed_mask(g.node_count(), seeds));
    run_from(g, initial.clone(), initial, params, clamp.as_deref())
}

pub(crate) fn seed_mask(n: usize, seeds: &[Node]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &s in seeds {
        mask[s as usize] = true;
    }
    mask
}

/// Continue iterating from `current` (e.g. a checkpoint) with memory anchored at `initial`.
pub fn run_from(
    g: &Graph,
    initial: StateMatrix,
    current: StateMatrix,
    params: &DiffusionParams,
    clamp: Option<&[bool]>,
) -> Result<RunResult> {
    params.validate()?;
    if initial.d != params.d || current.d != params.d {
        return Err(Error::ShapeMismatch(format!(
            "state width does not match d = {}",
            params.d
        )));
    }
    let mut state = current;
    let mut next = StateMatrix {
        d: state.d,
        data: vec![0.0; state.data.len()],
    };
    let mut iterations = 0;
    let mut delta = f64::INFINITY;
    let mut renormalized_rows = 0;
    while iterations < params.max_iterations {
        renormalized_rows += step_into(g, &state, &initial, params.lambda, clamp, &mut next)?;
        delta = next.linf_distance(&state);
        std::mem::swap(&mut state, &mut next);
        iterations += 1;
        log::debug!("iteration {iterations}: delta {delta:e}");
        if delta < params.convergence_tolerance {
            break;
        }
    }
    if renormalized_rows > 0 {
        log::info!("renormalized {renormalized_rows} rows");
    }
    Ok(RunResult {
        state,
        initial,
        iterations,
        final_delta: delta,
        converged: delta < params.convergence_tolerance,
        renormalized_rows,
    })
}

/// Discrepancy between a step and its graph-Laplacian form.
///
/// With `L = I − D⁻¹A`, a step satisfies
/// `g_t − g_{t−1} = (1 − λ)(g_0 − g_{t−1}) − λ L g_{t−1}` on every node with neighbors.
/// Isolated nodes have no Laplacian row; for them the discrepancy is `|g_t − g_0|`.
/// Returns the L∞ norm over all entries.
pub fn laplacian_residual(
    g: &Graph,
    state_t: &StateMatrix,
    state_prev: &StateMatrix,
    initial: &StateMatrix,
    lambda: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    for (s, what) in [(state_t, "state_t"), (state_prev, "state_prev"), (initial, "initial")] {
        s.check_shape(g, what)?;
        if s.d != state_t.d {
            return Err(Error::ShapeMismatch(format!("{what} width differs")));
        }
    }
    let d = state_t.d;
    let mut lap = vec![0.0; d];
    let mut worst = 0.0f64;
    for x in 0..g.node_count() {
        let (gt, prev, g0) = (state_t.row(x), state_prev.row(x), initial.row(x));
        let nbrs = g.adj(x);
        if nbrs.is_empty() {
            for k in 0..d {
                worst = worst.max((gt[k] - g0[k]).abs());
            }
            continue;
        }
        lap.fill(0.0);
        for &y in nbrs {
            for (l, &p) in lap.iter_mut().zip(state_prev.row(y as usize)) {
                *l += p;
            }
        }
        let deg = nbrs.len() as f64;
        for k in 0..d {
            let lg = prev[k] - lap[k] / deg;
            let rhs = (1.0 - lambda) * (g0[k] - prev[k]) - lambda * lg;
            worst = worst.max(((gt[k] - prev[k]) - rhs).abs());
        }
    }
    Ok(worst)
}

/// Metadata carried in a state checkpoint header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateMeta {
    pub lambda: f64,
    pub iterations: usize,
    pub d: usize,
}

/// CSV checkpoint: `#`-prefixed `key=value` header lines, a column header, then
/// `external_id,p0,..,p{d-1}` per node in internal index order.
pub fn write_state_csv<W: Write>(
    state: &StateMatrix,
    map: &NodeIdMap,
    meta: &StateMeta,
    mut out: W,
) -> Result<()> {
    if map.len() != state.node_count() {
        return Err(Error::ShapeMismatch("id map and state disagree on node count".into()));
    }
    writeln!(out, "# homodiff-state v1")?;
    writeln!(out, "# lambda={}", meta.lambda)?;
    writeln!(out, "# iterations={}", meta.iterations)?;
    writeln!(out, "# d={}", state.d)?;
    write!(out, "id")?;
    for k in 0..state.d {
        write!(out, ",p{k}")?;
    }
    writeln!(out)?;
    for x in 0..state.node_count() {
        write!(out, "{}", map.external(x as Node))?;
        for p in state.row(x) {
            write!(out, ",{p}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_state_csv<R: BufRead>(reader: R, map: &NodeIdMap) -> Result<(StateMatrix, StateMeta)> {
    let mut header: HashMap<String, String> = HashMap::new();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; map.len()];
    let mut d: Option<usize> = None;
    let mut saw_columns = false;
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = no + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                header.insert(k.trim().to_owned(), v.trim().to_owned());
            }
            continue;
        }
        let fields: Vec<&str> = t.split(',').collect();
        if !saw_columns {
            saw_columns = true;
            d = Some(fields.len().saturating_sub(1));
            continue;
        }
        let width = d.unwrap();
        if fields.len() != width + 1 {
            return Err(Error::malformed(lineno, format!("expected {} fields", width + 1)));
        }
        let node = map
            .get(fields[0])
            .ok_or_else(|| Error::UnknownId(fields[0].to_owned()))?;
        let probs = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::malformed(lineno, e.to_string()))?;
        if rows[node as usize].replace(probs).is_some() {
            return Err(Error::malformed(lineno, format!("repeated id {:?}", fields[0])));
        }
    }
    let d = d.filter(|&d| d >= 1).ok_or(Error::EmptyInput)?;
    let parse = |k: &str| -> Result<&String> {
        header
            .get(k)
            .ok_or_else(|| Error::malformed(0, format!("missing header {k}")))
    };
    let meta = StateMeta {
        lambda: parse("lambda")?
            .parse()
            .map_err(|_| Error::malformed(0, "bad lambda header"))?,
        iterations: parse("iterations")?
            .parse()
            .map_err(|_| Error::malformed(0, "bad iterations header"))?,
        d: parse("d")?.parse().map_err(|_| Error::malformed(0, "bad d header"))?,
    };
    if meta.d != d {
        return Err(Error::ShapeMismatch(format!("header d = {} but rows have {d}", meta.d)));
    }
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(x, r)| r.ok_or_else(|| Error::UnknownId(map.external(x as Node).to_owned())))
        .collect::<Result<Vec<_>>>()?;
    Ok((StateMatrix::from_rows(d, &rows)?, meta))
}
