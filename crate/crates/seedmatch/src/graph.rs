//! Undirected simple graphs, edge-list ingestion, and preprocessing.

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// An undirected simple graph on vertices `0..n`, stored as sorted adjacency
/// lists. Symmetry and a zero diagonal are enforced at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<u32>>,
}

impl Graph {
    /// Builds a graph from an edge iterator. Self-loops are dropped and
    /// duplicate edges collapsed.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Graph {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            assert!(u < n && v < n, "edge ({u},{v}) out of range for n={n}");
            if u == v {
                continue;
            }
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Graph { n, adj }
    }

    pub fn empty(n: usize) -> Graph {
        Graph { n, adj: vec![Vec::new(); n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&(v as u32)).is_ok()
    }

    /// Sorted neighbor list of `u`.
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// All edges as `(u, v)` pairs with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.adj[u]
                .iter()
                .filter(move |&&v| (v as usize) > u)
                .map(move |&v| (u, v as usize))
        })
    }

    /// Connected components as sorted vertex lists, discovered in ascending
    /// order of their minimum vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut head = 0;
            while head < comp.len() {
                let u = comp[head];
                head += 1;
                for &v in &self.adj[u] {
                    let v = v as usize;
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Bijection between external vertex labels and internal indices `0..n`.
#[derive(Debug, Clone, Default)]
pub struct VertexMap {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl VertexMap {
    pub fn new() -> VertexMap {
        VertexMap::default()
    }

    /// Returns the index for `label`, inserting it if unseen.
    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), i);
        i
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Reads a whitespace-separated edge list. Lines starting with `#` are
/// ignored; labels are opaque strings mapped to indices in first-appearance
/// order. Duplicate edges and self-loops are dropped.
pub fn load_edgelist(path: &Path) -> Result<(Graph, VertexMap)> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_edgelist(BufReader::new(file), &path.display().to_string())
}

pub fn parse_edgelist(reader: impl BufRead, path: &str) -> Result<(Graph, VertexMap)> {
    let mut map = VertexMap::new();
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_string(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (a, b) = match (tokens.next(), tokens.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno + 1,
                    message: "expected two vertex labels".to_string(),
                })
            }
        };
        let u = map.intern(a);
        let v = map.intern(b);
        edges.push((u, v));
    }
    Ok((Graph::from_edges(map.len(), edges), map))
}

/// Induced subgraph on the largest connected component, with the old-to-new
/// index map. Ties between equal-size components go to the one containing the
/// smallest vertex.
pub fn largest_connected_component(g: &Graph) -> (Graph, Vec<usize>) {
    let comps = g.components();
    let Some(best) = comps
        .iter()
        .max_by(|x, y| x.len().cmp(&y.len()).then(y[0].cmp(&x[0])))
    else {
        return (Graph::empty(0), Vec::new());
    };
    let mut new_index = vec![usize::MAX; g.n()];
    for (i, &v) in best.iter().enumerate() {
        new_index[v] = i;
    }
    let edges = g
        .edges()
        .filter(|&(u, v)| new_index[u] != usize::MAX && new_index[v] != usize::MAX)
        .map(|(u, v)| (new_index[u], new_index[v]));
    let sub = Graph::from_edges(best.len(), edges.collect::<Vec<_>>());
    (sub, best.clone())
}

/// The intersection graph: an edge (u, v) survives iff it is present in `g1`
/// and its image (pi(u), pi(v)) is present in `g2`.
pub fn intersect(g1: &Graph, g2: &Graph, pi: &[usize]) -> Result<Graph> {
    if g1.n() != g2.n() || pi.len() != g1.n() {
        return Err(Error::SizeMismatch(format!(
            "intersect: g1.n={}, g2.n={}, pi.len={}",
            g1.n(),
            g2.n(),
            pi.len()
        )));
    }
    let edges = g1
        .edges()
        .filter(|&(u, v)| g2.has_edge(pi[u], pi[v]))
        .collect::<Vec<_>>();
    Ok(Graph::from_edges(g1.n(), edges))
}

/// Restricts two labeled graphs to their common labels and reindexes both
/// consistently. The returned permutation is the induced identity
/// correspondence (ground truth for real graph pairs).
pub fn align_pair(
    g_a: &Graph,
    g_b: &Graph,
    map_a: &VertexMap,
    map_b: &VertexMap,
) -> Result<(Graph, Graph, Vec<usize>)> {
    let mut common: Vec<&str> = map_a
        .labels()
        .iter()
        .map(String::as_str)
        .filter(|l| map_b.get(l).is_some())
        .collect();
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    common.sort_unstable();
    let n = common.len();
    let restrict = |g: &Graph, map: &VertexMap| {
        let mut new_index = vec![usize::MAX; g.n()];
        for (i, label) in common.iter().enumerate() {
            new_index[map.get(label).unwrap()] = i;
        }
        let edges = g
            .edges()
            .filter(|&(u, v)| new_index[u] != usize::MAX && new_index[v] != usize::MAX)
            .map(|(u, v)| (new_index[u], new_index[v]))
            .collect::<Vec<_>>();
        Graph::from_edges(n, edges)
    };
    let a = restrict(g_a, map_a);
    let b = restrict(g_b, map_b);
    Ok((a, b, (0..n).collect()))
}
