//! Weighted directed networks, their Laplacians, and the strongly
//! connected structure that governs stabilizability of consensus dynamics.
//!
//! Edges are `from -> to` influence relations with positive weights. The
//! (in-degree) Laplacian `L` has `L[i][j] = -w(j -> i)` for `i != j` and
//! row sums zero, so `dx/dt = -L x` is the usual consensus iteration in
//! which every node tracks its in-neighbors.

use crate::{Matrix, Vector};
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

/// Errors from constructing or querying a network.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkError {
    /// Networks must have at least one node.
    EmptyNetwork,
    /// An edge references a node outside `0..n`.
    NodeOutOfRange { node: usize, n: usize },
    /// Self loops carry no information for consensus dynamics.
    SelfLoop { node: usize },
    /// Edge weights must be strictly positive and finite.
    BadWeight { from: usize, to: usize, weight: f64 },
    /// A subset index was out of range.
    NoSuchSubset { index: usize, count: usize },
}

impl core::fmt::Display for NetworkError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            NetworkError::EmptyNetwork => write!(f, "network must have at least one node"),
            NetworkError::NodeOutOfRange { node, n } => {
                write!(f, "node {node} out of range for a {n}-node network")
            }
            NetworkError::SelfLoop { node } => write!(f, "self loop at node {node}"),
            NetworkError::BadWeight { from, to, weight } => {
                write!(f, "edge {from} -> {to} has non-positive weight {weight}")
            }
            NetworkError::NoSuchSubset { index, count } => {
                write!(f, "subset index {index} out of range ({count} subsets)")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NetworkError {}

/// A weighted directed edge (`from` influences `to`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// The node subsets from which leaders must be drawn: one per source
/// strongly connected component (a component with no incoming edges).
/// A leader set stabilizes the network exactly when it intersects every
/// subset.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderSubsets {
    /// Sorted node lists, ordered by smallest member.
    pub subsets: Vec<Vec<usize>>,
}

impl LeaderSubsets {
    /// Number of subsets; any stabilizing leader set has at least this size.
    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// True when the (sorted or unsorted) leader list intersects every
    /// subset.
    pub fn is_covered(&self, leaders: &[usize]) -> bool {
        self.subsets
            .iter()
            .all(|s| s.iter().any(|i| leaders.contains(i)))
    }
}

/// A weighted digraph on nodes `0..n` with parallel edges merged by
/// summing weights. Strongly connected components and their condensation
/// are computed eagerly at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedNetwork {
    n: usize,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<(usize, f64)>>,
    sccs: Vec<Vec<usize>>,
    scc_of: Vec<usize>,
    source_sccs: Vec<usize>,
}

impl DirectedNetwork {
    /// Builds a network from raw `(from, to, weight)` triples. Self loops,
    /// out-of-range nodes, and non-positive or non-finite weights are
    /// rejected; parallel edges collapse into one edge with summed weight.
    pub fn new(
        n: usize,
        raw_edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, NetworkError> {
        if n == 0 {
            return Err(NetworkError::EmptyNetwork);
        }
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (from, to, weight) in raw_edges {
            if from >= n {
                return Err(NetworkError::NodeOutOfRange { node: from, n });
            }
            if to >= n {
                return Err(NetworkError::NodeOutOfRange { node: to, n });
            }
            if from == to {
                return Err(NetworkError::SelfLoop { node: from });
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(NetworkError::BadWeight { from, to, weight });
            }
            *merged.entry((from, to)).or_insert(0.0) += weight;
        }
        let edges: Vec<Edge> = merged
            .into_iter()
            .map(|((from, to), weight)| Edge { from, to, weight })
            .collect();
        let mut out_adj = vec![Vec::new(); n];
        for e in &edges {
            out_adj[e.from].push((e.to, e.weight));
        }
        let (sccs, scc_of) = tarjan(n, &out_adj);
        let mut has_incoming = vec![false; sccs.len()];
        for e in &edges {
            if scc_of[e.from] != scc_of[e.to] {
                has_incoming[scc_of[e.to]] = true;
            }
        }
        let source_sccs = (0..sccs.len()).filter(|&k| !has_incoming[k]).collect();
        Ok(DirectedNetwork {
            n,
            edges,
            out_adj,
            sccs,
            scc_of,
            source_sccs,
        })
    }

    /// Number of nodes.
    pub fn num_nodes(&self) -> usize {
        self.n
    }

    /// Merged edges, sorted by `(from, to)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// In-degree Laplacian; `-laplacian()` is Metzler with zero row sums.
    pub fn laplacian(&self) -> Matrix {
        let mut l = Matrix::zeros(self.n, self.n);
        for e in &self.edges {
            l[(e.to, e.from)] -= e.weight;
            l[(e.to, e.to)] += e.weight;
        }
        l
    }

    /// Strongly connected components: each sorted ascending, the list
    /// ordered by smallest member.
    pub fn strongly_connected_components(&self) -> &[Vec<usize>] {
        &self.sccs
    }

    /// Component index of each node, matching
    /// [`strongly_connected_components`](Self::strongly_connected_components).
    pub fn component_of(&self, node: usize) -> usize {
        self.scc_of[node]
    }

    /// True when the underlying undirected graph is connected.
    pub fn is_weakly_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut und = vec![Vec::new(); self.n];
        for e in &self.edges {
            und[e.from].push(e.to);
            und[e.to].push(e.from);
        }
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &und[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// True when every node's in-weight equals its out-weight.
    pub fn is_balanced(&self) -> bool {
        let mut in_w = vec![0.0f64; self.n];
        let mut out_w = vec![0.0f64; self.n];
        for e in &self.edges {
            out_w[e.from] += e.weight;
            in_w[e.to] += e.weight;
        }
        (0..self.n).all(|i| (in_w[i] - out_w[i]).abs() <= 1e-12 * (1.0 + in_w[i] + out_w[i]))
    }

    /// The leader subsets: node sets of the source components of the
    /// condensation, ordered by smallest member.
    pub fn leader_subsets(&self) -> LeaderSubsets {
        LeaderSubsets {
            subsets: self
                .source_sccs
                .iter()
                .map(|&k| self.sccs[k].clone())
                .collect(),
        }
    }

    /// Nonnegative left null vector of the Laplacian supported on the
    /// given leader subset, normalized to unit sum. Its existence (one per
    /// source component) is what ties stabilizability to the subsets.
    pub fn source_left_null_vector(&self, subset: usize) -> Result<Vector, NetworkError> {
        let count = self.source_sccs.len();
        if subset >= count {
            return Err(NetworkError::NoSuchSubset { index: subset, count });
        }
        let nodes = &self.sccs[self.source_sccs[subset]];
        let k = nodes.len();
        let l = self.laplacian();
        // Restricted to a source component the Laplacian has zero row sums,
        // so any row of its transpose is redundant; replacing the last row
        // with the normalization sum(v) = 1 gives a nonsingular system.
        let mut m = Matrix::zeros(k, k);
        for (r, &i) in nodes.iter().enumerate() {
            for (c, &j) in nodes.iter().enumerate() {
                m[(r, c)] = l[(j, i)];
            }
        }
        for c in 0..k {
            m[(k - 1, c)] = 1.0;
        }
        let mut rhs = Vector::zeros(k);
        rhs[k - 1] = 1.0;
        let sol = m
            .lu()
            .solve(&rhs)
            .expect("source component null-vector system is nonsingular");
        let mut v = Vector::zeros(self.n);
        for (r, &i) in nodes.iter().enumerate() {
            v[i] = sol[r];
        }
        Ok(v)
    }

    /// The network with every edge reversed.
    pub fn reverse(&self) -> DirectedNetwork {
        DirectedNetwork::new(self.n, self.edges.iter().map(|e| (e.to, e.from, e.weight)))
            .expect("reversing preserves validity")
    }
}

/// Tarjan's algorithm; components are normalized to sorted node lists
/// ordered by smallest member.
fn tarjan(n: usize, adj: &[Vec<(usize, f64)>]) -> (Vec<Vec<usize>>, Vec<usize>) {
    struct State<'a> {
        adj: &'a [Vec<(usize, f64)>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next_index: usize,
        comps: Vec<Vec<usize>>,
    }

    fn strong_connect(v: usize, st: &mut State<'_>) {
        st.index[v] = Some(st.next_index);
        st.low[v] = st.next_index;
        st.next_index += 1;
        st.stack.push(v);
        st.on_stack[v] = true;
        for &(w, _) in &st.adj[v] {
            match st.index[w] {
                None => {
                    strong_connect(w, st);
                    st.low[v] = st.low[v].min(st.low[w]);
                }
                Some(iw) => {
                    if st.on_stack[w] {
                        st.low[v] = st.low[v].min(iw);
                    }
                }
            }
        }
        if st.low[v] == st.index[v].unwrap() {
            let mut comp = Vec::new();
            loop {
                let w = st.stack.pop().unwrap();
                st.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            st.comps.push(comp);
        }
    }

    let mut st = State {
        adj,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next_index: 0,
        comps: Vec::new(),
    };
    for v in 0..n {
        if st.index[v].is_none() {
            strong_connect(v, &mut st);
        }
    }
    let mut comps = st.comps;
    comps.sort_by_key(|c| c[0]);
    let mut scc_of = vec![0; n];
    for (k, comp) in comps.iter().enumerate() {
        for &v in comp {
            scc_of[v] = k;
        }
    }
    (comps, scc_of)
}
