//! Finite weighted graphs: coupling matrix, distances and spanning-tree sums.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::linalg::dense_determinant;

/// Largest vertex count accepted by [`enumerate_spanning_trees`].
pub const ENUMERATION_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if v == self.i {
            self.j
        } else {
            self.i
        }
    }

    pub fn touches(&self, v: usize) -> bool {
        self.i == v || self.j == v
    }
}

/// A connected, undirected conductance network on vertices `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    n: usize,
    edges: Vec<Edge>,
    /// `adj[i]` lists `(neighbour, weight, edge index)`.
    adj: Vec<Vec<(usize, f64, usize)>>,
}

/// On-disk graph description: `{"n": 3, "edges": [[0, 1, 1.0], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl Network {
    pub fn new(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut adj: Vec<Vec<(usize, f64, usize)>> = vec![Vec::new(); n];
        let mut stored = Vec::with_capacity(edges.len());
        for &(i, j, w) in edges {
            for v in [i, j] {
                if v >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: v, n });
                }
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::BadWeight { i, j, w });
            }
            if adj[i].iter().any(|&(k, _, _)| k == j) {
                return Err(GraphError::DuplicateEdge(i.min(j), i.max(j)));
            }
            let idx = stored.len();
            let (a, b) = (i.min(j), i.max(j));
            stored.push(Edge { i: a, j: b, w });
            adj[i].push((j, w, idx));
            adj[j].push((i, w, idx));
        }
        let net = Network {
            n,
            edges: stored,
            adj,
        };
        let dist = net.bfs(0);
        if let Some(v) = dist.iter().position(|d| d.is_none()) {
            return Err(GraphError::Disconnected(v));
        }
        Ok(net)
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<Self, GraphError> {
        Self::new(spec.n, &spec.edges)
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let spec: GraphSpec =
            serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| GraphError::Parse(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            n: self.n,
            edges: self.edges.iter().map(|e| (e.i, e.j, e.w)).collect(),
        }
    }

    pub fn into_shared(self) -> Arc<Network> {
        Arc::new(self)
    }

    // A few standard shapes, mostly for tests and the verification suites.

    pub fn single_vertex() -> Self {
        Self::new(1, &[]).expect("single vertex is valid")
    }

    pub fn path(weights: &[f64]) -> Result<Self, GraphError> {
        let edges: Vec<_> = weights
            .iter()
            .enumerate()
            .map(|(k, &w)| (k, k + 1, w))
            .collect();
        Self::new(weights.len() + 1, &edges)
    }

    pub fn cycle(weights: &[f64]) -> Result<Self, GraphError> {
        let n = weights.len();
        let edges: Vec<_> = weights
            .iter()
            .enumerate()
            .map(|(k, &w)| (k, (k + 1) % n, w))
            .collect();
        Self::new(n, &edges)
    }

    pub fn complete(n: usize, w: f64) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j, w));
            }
        }
        Self::new(n, &edges)
    }

    pub fn star(weights: &[f64]) -> Result<Self, GraphError> {
        let edges: Vec<_> = weights
            .iter()
            .enumerate()
            .map(|(k, &w)| (0, k + 1, w))
            .collect();
        Self::new(weights.len() + 1, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbours of `i` as `(j, W_ij, edge index)`.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64, usize)] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    /// `W_ij`, zero when `{i, j}` is not an edge.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adj[i]
            .iter()
            .find(|&&(k, _, _)| k == j)
            .map_or(0.0, |&(_, w, _)| w)
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.adj
            .get(i)?
            .iter()
            .find(|&&(k, _, _)| k == j)
            .map(|&(_, _, e)| e)
    }

    /// `W_i = Σ_{j∼i} W_ij`.
    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|&(_, w, _)| w).sum()
    }

    /// Same graph with every edge weight replaced by `f(edge)`.
    pub fn reweighted(&self, mut f: impl FnMut(&Edge) -> f64) -> Result<Self, GraphError> {
        let edges: Vec<_> = self.edges.iter().map(|e| (e.i, e.j, f(e))).collect();
        Self::new(self.n, &edges)
    }

    /// Same graph with vertex `v` relabelled `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self, GraphError> {
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|e| (perm[e.i], perm[e.j], e.w))
            .collect();
        Self::new(self.n, &edges)
    }

    fn bfs(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &(k, _, _) in &self.adj[v] {
                if dist[k].is_none() {
                    dist[k] = Some(d + 1);
                    queue.push_back(k);
                }
            }
        }
        dist
    }

    /// Graph distances from `source` to every vertex.
    pub fn distances_from(&self, source: usize) -> Vec<usize> {
        self.bfs(source)
            .into_iter()
            .map(|d| d.expect("network is connected"))
            .collect()
    }
}

/// The matrix `P`: zero diagonal, `W_ij` off the diagonal.
pub fn coupling_matrix(net: &Network) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(net.n, net.n);
    for e in &net.edges {
        p[(e.i, e.j)] = e.w;
        p[(e.j, e.i)] = e.w;
    }
    p
}

pub fn graph_distance(net: &Network, i: usize, j: usize) -> usize {
    net.distances_from(i)[j]
}

/// Weighted Laplacian with conductance `c[e]` on edge `e`.
pub fn weighted_laplacian(net: &Network, c: &[f64]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(net.n, net.n);
    for (e, &ce) in net.edges.iter().zip(c) {
        l[(e.i, e.j)] -= ce;
        l[(e.j, e.i)] -= ce;
        l[(e.i, e.i)] += ce;
        l[(e.j, e.j)] += ce;
    }
    l
}

/// Principal cofactor of the Laplacian with row/column `deleted` removed.
pub fn laplacian_cofactor(net: &Network, c: &[f64], deleted: usize) -> f64 {
    if net.n == 1 {
        return 1.0;
    }
    let l = weighted_laplacian(net, c);
    let minor = l.remove_row(deleted).remove_column(deleted);
    dense_determinant(&minor)
}

/// Per-edge conductances `W_ij e^{u_i + u_j}`.
pub fn tilted_conductances(net: &Network, u: &[f64]) -> Vec<f64> {
    net.edges
        .iter()
        .map(|e| e.w * (u[e.i] + u[e.j]).exp())
        .collect()
}

/// `D(W, u) = Σ_T Π_{{i,j}∈T} W_ij e^{u_i+u_j}` by the matrix-tree theorem.
///
/// The single-vertex graph has one (empty) spanning tree, so `D ≡ 1` there.
pub fn spanning_tree_polynomial(net: &Network, u: &[f64]) -> f64 {
    assert_eq!(u.len(), net.n, "u must have one entry per vertex");
    laplacian_cofactor(net, &tilted_conductances(net, u), 0)
}

/// Spanning-tree sum for arbitrary per-edge conductances (`D(y)` of the magic formula).
pub fn spanning_tree_sum(net: &Network, conductances: &[f64]) -> f64 {
    assert_eq!(conductances.len(), net.edge_count());
    laplacian_cofactor(net, conductances, 0)
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn find(&self, mut v: usize) -> usize {
        while self.parent[v] != v {
            v = self.parent[v];
        }
        v
    }
}

/// All spanning trees as sorted lists of edge indices. Brute force; `n ≤ 10`.
pub fn enumerate_spanning_trees(net: &Network) -> Result<Vec<Vec<usize>>, GraphError> {
    if net.n > ENUMERATION_LIMIT {
        return Err(GraphError::TooLarge {
            n: net.n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut out = Vec::new();
    let mut dsu = Dsu {
        parent: (0..net.n).collect(),
    };
    let mut chosen = Vec::with_capacity(net.n.saturating_sub(1));
    extend_trees(net, 0, &mut dsu, &mut chosen, &mut out);
    Ok(out)
}

fn extend_trees(
    net: &Network,
    next: usize,
    dsu: &mut Dsu,
    chosen: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let need = net.n - 1 - chosen.len();
    if need == 0 {
        out.push(chosen.clone());
        return;
    }
    if net.edges.len() - next < need {
        return;
    }
    let e = net.edges[next];
    let (ri, rj) = (dsu.find(e.i), dsu.find(e.j));
    if ri != rj {
        // Union without path compression so it can be undone.
        dsu.parent[ri] = rj;
        chosen.push(next);
        extend_trees(net, next + 1, dsu, chosen, out);
        chosen.pop();
        dsu.parent[ri] = ri;
    }
    extend_trees(net, next + 1, dsu, chosen, out);
}

/// A permutation of the vertices: `order[k]` is the vertex eliminated at step `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct VertexOrdering {
    order: Arc<[usize]>,
    position: Arc<[usize]>,
}

impl TryFrom<Vec<usize>> for VertexOrdering {
    type Error = GraphError;

    fn try_from(order: Vec<usize>) -> Result<Self, GraphError> {
        Self::new(order)
    }
}

impl From<VertexOrdering> for Vec<usize> {
    fn from(o: VertexOrdering) -> Self {
        o.order.to_vec()
    }
}

impl VertexOrdering {
    pub fn identity(n: usize) -> Self {
        let v: Vec<usize> = (0..n).collect();
        Self {
            order: v.clone().into(),
            position: v.into(),
        }
    }

    pub fn new(order: Vec<usize>) -> Result<Self, GraphError> {
        let n = order.len();
        let mut position = vec![usize::MAX; n];
        for (k, &v) in order.iter().enumerate() {
            if v >= n || position[v] != usize::MAX {
                return Err(GraphError::BadOrdering(n));
            }
            position[v] = k;
        }
        Ok(Self {
            order: order.into(),
            position: position.into(),
        })
    }

    /// Vertices sorted by decreasing graph distance from `root`, `root` last.
    pub fn by_decreasing_distance(net: &Network, root: usize) -> Self {
        let dist = net.distances_from(root);
        let mut order: Vec<usize> = (0..net.n).collect();
        order.sort_by(|&a, &b| dist[b].cmp(&dist[a]).then(a.cmp(&b)));
        Self::new(order).expect("sorted vertex list is a permutation")
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Vertex at elimination step `k`.
    pub fn vertex(&self, k: usize) -> usize {
        self.order[k]
    }

    /// Elimination step of vertex `v`.
    pub fn position(&self, v: usize) -> usize {
        self.position[v]
    }
}
