//! Static undirected graphs, the bundled Zachary Karate Club network, and
//! two-way spectral clustering.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::symmetric_eigen_jacobi;
use crate::{Error, Result};

const KARATE_JSON: &str = include_str!("../data/karate.json");
const KARATE_LAYOUT_CSV: &str = include_str!("../data/karate_layout.csv");

/// Fiedler entries with magnitude below this are treated as zero.
const FIEDLER_ZERO: f64 = 1e-12;

/// Undirected simple graph over nodes `0..n`.
///
/// Edges are stored once, as `(i, j)` with `i < j`, in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct StaticGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// On-disk form: `{"n": int, "edges": [[i, j], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphFile> for StaticGraph {
    type Error = Error;

    fn try_from(file: GraphFile) -> Result<Self> {
        StaticGraph::new(file.n, file.edges.into_iter().map(|[i, j]| (i, j)))
    }
}

impl From<StaticGraph> for GraphFile {
    fn from(g: StaticGraph) -> Self {
        GraphFile {
            n: g.n,
            edges: g.edges.into_iter().map(|(i, j)| [i, j]).collect(),
        }
    }
}

impl StaticGraph {
    /// Builds a graph, rejecting self-loops, out-of-range endpoints and
    /// duplicate edges (after ordering each pair).
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph must have at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            let key = (a.min(b), a.max(b));
            if !set.insert(key) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", key.0, key.1)));
            }
        }
        Ok(StaticGraph {
            n,
            edges: set.into_iter().collect(),
        })
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, std::iter::empty())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    /// Symmetric 0/1 adjacency matrix with zero diagonal.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    /// Sorted neighbor lists.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            nb[i].push(j);
            nb[j].push(i);
        }
        for list in &mut nb {
            list.sort_unstable();
        }
        nb
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(i, j) in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    pub fn is_connected(&self) -> bool {
        let nb = self.neighbors();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &w in &nb[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Subgraph on the same node set keeping only edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, (usize, usize)) -> bool) -> StaticGraph {
        StaticGraph {
            n: self.n,
            edges: self
                .edges
                .iter()
                .enumerate()
                .filter(|&(k, &e)| keep(k, e))
                .map(|(_, &e)| e)
                .collect(),
        }
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<StaticGraph> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: perm.len(),
            });
        }
        StaticGraph::new(self.n, self.edges.iter().map(|&(i, j)| (perm[i], perm[j])))
    }
}

/// Zachary's Karate Club network: 34 members, 78 friendship ties.
pub fn karate() -> StaticGraph {
    serde_json::from_str(KARATE_JSON).expect("bundled karate dataset is valid")
}

/// Frozen 2-D drawing coordinates for [`karate`], one `(x, y)` per node.
pub fn karate_layout() -> Vec<(f64, f64)> {
    KARATE_LAYOUT_CSV
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let cols: Vec<f64> = line
                .split(',')
                .skip(1)
                .map(|c| c.trim().parse().expect("bundled layout is numeric"))
                .collect();
            (cols[0], cols[1])
        })
        .collect()
}

/// Two-way node partition; clusters are labelled 1 and 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub cluster_of: Vec<u8>,
}

impl Partition {
    pub fn members(&self, cluster: u8) -> Vec<usize> {
        (0..self.cluster_of.len()).filter(|&i| self.cluster_of[i] == cluster).collect()
    }

    /// Number of edges of `g` whose endpoints lie in different clusters.
    pub fn cut_size(&self, g: &StaticGraph) -> usize {
        g.edges().iter().filter(|&&(i, j)| self.cluster_of[i] != self.cluster_of[j]).count()
    }
}

/// Fiedler vector of the combinatorial Laplacian `Deg - A`, sign-normalized
/// so that node 0's entry is nonnegative.
pub fn fiedler_vector(g: &StaticGraph) -> Vec<f64> {
    let a = g.adjacency();
    let deg = DMatrix::from_diagonal(&a.column_sum());
    let eig = symmetric_eigen_jacobi(&(deg - a));
    let mut f: Vec<f64> = eig.vectors.column(1.min(g.n() - 1)).iter().copied().collect();
    if f[0] < 0.0 {
        f.iter_mut().for_each(|x| *x = -*x);
    }
    f
}

/// Splits a connected graph by the sign of its Fiedler vector. Near-zero
/// and positive entries go to cluster 1.
pub fn spectral_bisection(g: &StaticGraph) -> Result<Partition> {
    if !g.is_connected() {
        return Err(Error::NotConnected);
    }
    let f = fiedler_vector(g);
    let cluster_of = f.iter().map(|&x| if x.abs() < FIEDLER_ZERO || x > 0.0 { 1 } else { 2 }).collect();
    Ok(Partition { cluster_of })
}

/// Edge classes: 1 within cluster 1, 2 within cluster 2, 3 across.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeClassification {
    /// Class of `g.edges()[k]`.
    pub class_of: Vec<u8>,
}

impl EdgeClassification {
    pub fn count(&self, class: u8) -> usize {
        self.class_of.iter().filter(|&&c| c == class).count()
    }
}

pub fn classify_edges(g: &StaticGraph, p: &Partition) -> Result<EdgeClassification> {
    if p.cluster_of.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: p.cluster_of.len(),
        });
    }
    let class_of = g
        .edges()
        .iter()
        .map(|&(i, j)| match (p.cluster_of[i], p.cluster_of[j]) {
            (1, 1) => 1,
            (2, 2) => 2,
            _ => 3,
        })
        .collect();
    Ok(EdgeClassification { class_of })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacency_small_cases() {
        let path = StaticGraph::new(2, [(0, 1)]).unwrap();
        assert_eq!(path.adjacency(), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let tri = StaticGraph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let expected = DMatrix::from_element(3, 3, 1.0) - DMatrix::identity(3, 3);
        assert_eq!(tri.adjacency(), expected);
    }

    #[test]
    fn karate_dataset() {
        let g = karate();
        assert_eq!(g.n(), 34);
        assert_eq!(g.edge_count(), 78);
        let a = g.adjacency();
        assert_eq!(a.sum(), 156.0);
        assert_eq!(a, a.transpose());
        assert!((0..34).all(|i| a[(i, i)] == 0.0));
        assert_eq!(karate_layout().len(), 34);
    }

    #[test]
    fn reader_rejects_bad_edges() {
        assert!(serde_json::from_str::<StaticGraph>(r#"{"n":2,"edges":[[0,2]]}"#).is_err());
        assert!(serde_json::from_str::<StaticGraph>(r#"{"n":2,"edges":[[1,1]]}"#).is_err());
        assert!(serde_json::from_str::<StaticGraph>(r#"{"n":3,"edges":[[0,1],[1,0]]}"#).is_err());
        let ok: StaticGraph = serde_json::from_str(r#"{"n":3,"edges":[[2,1],[0,1]]}"#).unwrap();
        assert_eq!(ok.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn bisection_rejects_disconnected() {
        let g = StaticGraph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(spectral_bisection(&g), Err(Error::NotConnected)));
    }

    #[test]
    fn classification_small_cases() {
        let e = StaticGraph::new(2, [(0, 1)]).unwrap();
        let split = Partition { cluster_of: vec![1, 2] };
        assert_eq!(classify_edges(&e, &split).unwrap().class_of, vec![3]);
        let tri = StaticGraph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let all1 = Partition { cluster_of: vec![1, 1, 1] };
        assert_eq!(classify_edges(&tri, &all1).unwrap().class_of, vec![1, 1, 1]);
    }
}
