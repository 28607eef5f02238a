//! Immutable undirected graph in compressed sparse row form, plus edge-list ingestion.
//!
//! Edges are boolean: a pair of users either communicated or not, so any weight
//! column in the input is parsed and discarded. Self-loops are dropped and
//! duplicate edges collapse to one.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense internal node index.
pub type Node = u32;

/// Field separator for the line-oriented text formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    #[default]
    Comma,
    Tab,
    /// Any run of ASCII whitespace.
    Space,
}

impl Delimiter {
    pub fn as_char(self) -> char {
        match self {
            Delimiter::Comma => ',',
            Delimiter::Tab => '\t',
            Delimiter::Space => ' ',
        }
    }

    pub(crate) fn split(self, line: &str) -> Vec<&str> {
        match self {
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Tab => line.split('\t').map(str::trim).collect(),
            Delimiter::Space => line.split_whitespace().collect(),
        }
    }
}

impl std::str::FromStr for Delimiter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "comma" | "," => Ok(Delimiter::Comma),
            "tab" | "\t" | "\\t" => Ok(Delimiter::Tab),
            "space" | " " | "whitespace" => Ok(Delimiter::Space),
            other => Err(Error::param(format!("unknown delimiter {other:?}"))),
        }
    }
}

/// What to do when the same undirected edge appears on more than one line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    Collapse,
    Reject,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub delimiter: Delimiter,
    pub duplicates: DuplicatePolicy,
}

/// Counters gathered while building a graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadStats {
    pub lines: usize,
    pub self_loops: usize,
    pub duplicate_edges: usize,
}

/// Bijection between opaque external ids and dense internal indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeIdMap {
    ids: Vec<String>,
    index: HashMap<String, Node>,
}

impl NodeIdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Map `0..n` to the decimal strings `"0".."n-1"`.
    pub fn identity(n: usize) -> Self {
        let mut map = Self::new();
        for i in 0..n {
            map.intern(&i.to_string());
        }
        map
    }

    /// Returns the index for `id`, assigning the next free one if unseen.
    pub fn intern(&mut self, id: &str) -> Node {
        if let Some(&ix) = self.index.get(id) {
            return ix;
        }
        let ix = self.ids.len() as Node;
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), ix);
        ix
    }

    pub fn get(&self, id: &str) -> Option<Node> {
        self.index.get(id).copied()
    }

    pub fn external(&self, node: Node) -> &str {
        &self.ids[node as usize]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

/// Undirected simple graph. Neighbor lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<Node>,
}

impl Graph {
    /// Build from undirected pairs over `0..node_count`.
    ///
    /// Self-loops are dropped and repeated pairs collapse; both are counted in the
    /// returned stats (`lines` is left at zero).
    pub fn from_edges(node_count: usize, edges: &[(Node, Node)]) -> Result<(Graph, LoadStats)> {
        if node_count > Node::MAX as usize {
            return Err(Error::param(format!("{node_count} nodes exceeds index width")));
        }
        let mut stats = LoadStats::default();
        let mut degree = vec![0usize; node_count];
        for &(a, b) in edges {
            for x in [a, b] {
                if x as usize >= node_count {
                    return Err(Error::NodeOutOfRange {
                        index: x as usize,
                        node_count,
                    });
                }
            }
            if a == b {
                stats.self_loops += 1;
                continue;
            }
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }

        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0usize);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor: Vec<usize> = offsets[..node_count].to_vec();
        let mut targets = vec![0 as Node; offsets[node_count]];
        for &(a, b) in edges {
            if a == b {
                continue;
            }
            targets[cursor[a as usize]] = b;
            cursor[a as usize] += 1;
            targets[cursor[b as usize]] = a;
            cursor[b as usize] += 1;
        }
        drop(cursor);

        // Sort each row, then compact out duplicates in a single forward pass.
        let mut write = 0usize;
        let mut start = 0usize;
        for x in 0..node_count {
            let end = offsets[x + 1];
            targets[start..end].sort_unstable();
            let row_start = write;
            for r in start..end {
                let y = targets[r];
                if write > row_start && targets[write - 1] == y {
                    continue;
                }
                targets[write] = y;
                write += 1;
            }
            offsets[x] = row_start;
            start = end;
        }
        offsets[node_count] = write;
        let directed_dups = targets.len() - write;
        stats.duplicate_edges = directed_dups / 2;
        targets.truncate(write);
        targets.shrink_to_fit();

        Ok((Graph { offsets, targets }, stats))
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Undirected edges, each counted once.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    fn check(&self, x: usize) -> Result<()> {
        if x >= self.node_count() {
            return Err(Error::NodeOutOfRange {
                index: x,
                node_count: self.node_count(),
            });
        }
        Ok(())
    }

    pub fn neighbors(&self, x: usize) -> Result<&[Node]> {
        self.check(x)?;
        Ok(self.adj(x))
    }

    pub fn degree(&self, x: usize) -> Result<usize> {
        self.check(x)?;
        Ok(self.deg(x))
    }

    /// Unchecked neighbor slice; panics when `x` is out of range.
    #[inline]
    pub fn adj(&self, x: usize) -> &[Node] {
        &self.targets[self.offsets[x]..self.offsets[x + 1]]
    }

    #[inline]
    pub fn deg(&self, x: usize) -> usize {
        self.offsets[x + 1] - self.offsets[x]
    }

    /// Each undirected edge once, smaller index first, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (Node, Node)> + '_ {
        (0..self.node_count()).flat_map(move |x| {
            self.adj(x)
                .iter()
                .filter(move |&&y| (x as Node) < y)
                .map(move |&y| (x as Node, y))
        })
    }

    /// Approximate heap footprint in bytes.
    pub fn heap_bytes(&self) -> usize {
        self.offsets.capacity() * std::mem::size_of::<usize>()
            + self.targets.capacity() * std::mem::size_of::<Node>()
    }
}

/// Parse an edge list: `src<delim>dst[<delim>weight]` per line, `#` comments.
///
/// Blank lines are skipped. Every distinct endpoint token receives one index, in
/// order of first appearance.
pub fn load_edge_list<R: BufRead>(
    reader: R,
    options: LoadOptions,
) -> Result<(Graph, NodeIdMap, LoadStats)> {
    load_edge_list_into(reader, options, NodeIdMap::new())
}

/// Like [`load_edge_list`], but starts from an existing id map so previously
/// interned ids keep their indices.
pub fn load_edge_list_into<R: BufRead>(
    reader: R,
    options: LoadOptions,
    mut map: NodeIdMap,
) -> Result<(Graph, NodeIdMap, LoadStats)> {
    let mut edges = Vec::new();
    let mut seen: HashSet<(Node, Node)> = HashSet::new();
    let mut lines = 0usize;
    let mut self_loops = 0usize;
    let mut any = false;

    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        any = true;
        lines += 1;
        let fields = options.delimiter.split(trimmed);
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::malformed(
                lineno,
                format!("expected 2 or 3 fields, found {}", fields.len()),
            ));
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::malformed(lineno, "empty endpoint"));
        }
        if let Some(w) = fields.get(2) {
            if w.parse::<f64>().is_err() {
                return Err(Error::malformed(lineno, format!("bad weight {w:?}")));
            }
        }
        let a = map.intern(fields[0]);
        let b = map.intern(fields[1]);
        if a == b {
            self_loops += 1;
            continue;
        }
        if options.duplicates == DuplicatePolicy::Reject && !seen.insert((a.min(b), a.max(b))) {
            return Err(Error::DuplicateEdge {
                line: lineno,
                a: fields[0].to_owned(),
                b: fields[1].to_owned(),
            });
        }
        edges.push((a, b));
    }
    if !any {
        return Err(Error::EmptyInput);
    }

    let (graph, mut stats) = Graph::from_edges(map.len(), &edges)?;
    stats.lines = lines;
    stats.self_loops += self_loops;
    Ok((graph, map, stats))
}

/// Write each edge once, smaller internal index first.
pub fn write_edge_list<W: Write>(
    graph: &Graph,
    map: &NodeIdMap,
    delimiter: Delimiter,
    mut out: W,
) -> Result<()> {
    let sep = delimiter.as_char();
    for (a, b) in graph.edges() {
        writeln!(out, "{}{sep}{}", map.external(a), map.external(b))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> (Graph, NodeIdMap, LoadStats) {
        load_edge_list(text.as_bytes(), LoadOptions::default()).unwrap()
    }

    #[test]
    fn dedup_and_symmetry() {
        let (g, map, stats) = load("a,b\nb,c\na,b\n");
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.degree(map.get("b").unwrap() as usize).unwrap(), 2);
        assert_eq!(stats.duplicate_edges, 1);
    }

    #[test]
    fn self_loop_dropped_and_counted() {
        let (g, _, stats) = load("a,a\n");
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(stats.self_loops, 1);
    }

    #[test]
    fn path_star_and_isolated() {
        let (path, _) = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.neighbors(1).unwrap(), &[0, 2]);

        let (star, _) = Graph::from_edges(6, &[(0, 3), (0, 1), (0, 4), (2, 0)]).unwrap();
        assert_eq!(star.neighbors(0).unwrap(), &[1, 2, 3, 4]);
        assert_eq!(star.degree(0).unwrap(), 4);
        assert_eq!(star.neighbors(5).unwrap(), &[] as &[Node]);
        assert_eq!(star.degree(5).unwrap(), 0);
    }

    #[test]
    fn out_of_range_queries() {
        let (g, _) = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(matches!(g.neighbors(2), Err(Error::NodeOutOfRange { .. })));
        assert!(matches!(g.degree(7), Err(Error::NodeOutOfRange { .. })));
        assert!(Graph::from_edges(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn comments_weights_and_delimiters() {
        let text = "# header\nx\ty\t1\n\ny\tz\t0.5\n";
        let opts = LoadOptions {
            delimiter: Delimiter::Tab,
            ..Default::default()
        };
        let (g, _, stats) = load_edge_list(text.as_bytes(), opts).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(stats.lines, 2);

        let opts = LoadOptions {
            delimiter: Delimiter::Space,
            ..Default::default()
        };
        let (g, _, _) = load_edge_list("1   2\n2 3 7\n".as_bytes(), opts).unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn malformed_reports_line_number() {
        let err = load_edge_list("a,b\nc\n".as_bytes(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }), "{err}");
        let err = load_edge_list("a,b,c,d\n".as_bytes(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }));
        let err = load_edge_list("a,b,heavy\n".as_bytes(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }));
        let err = load_edge_list("a,\n".as_bytes(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }));
    }

    #[test]
    fn empty_input_is_error() {
        let err = load_edge_list("# nothing\n\n".as_bytes(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyInput));
    }

    #[test]
    fn reject_policy_flags_duplicates() {
        let opts = LoadOptions {
            duplicates: DuplicatePolicy::Reject,
            ..Default::default()
        };
        let err = load_edge_list("a,b\nb,a\n".as_bytes(), opts).unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge { line: 2, .. }));
    }

    #[test]
    fn export_reload_with_map_is_identical() {
        let (g, map, _) = load("q,w\nw,e\ne,q\nr,q\n");
        let mut buf = Vec::new();
        write_edge_list(&g, &map, Delimiter::Comma, &mut buf).unwrap();
        let (g2, map2, _) =
            load_edge_list_into(buf.as_slice(), LoadOptions::default(), map.clone()).unwrap();
        assert_eq!(g, g2);
        assert_eq!(map, map2);
    }
}
