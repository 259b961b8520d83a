//! Communication graph between followers and the leader.
//!
//! Followers form an undirected graph with unit weights. A separate access
//! vector marks which followers receive the leader's state directly. The
//! consensus machinery works on `H = L + diag(leader_links)`, which is
//! positive definite once the follower graph is connected and at least one
//! follower hears the leader.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

/// Dense square matrix used for `L` and `H`.
pub type SquareMatrix = DMatrix<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("topology needs at least one follower")]
    Empty,
    #[error("adjacency row {row} has {len} entries, expected {n}")]
    RaggedRow { row: usize, len: usize, n: usize },
    #[error("leader_links has {len} entries, expected {n}")]
    LeaderLinksLength { len: usize, n: usize },
    #[error("adjacency entry ({i},{j}) = {value} is not 0 or 1 (weighted graphs are not supported)")]
    NonBinaryWeight { i: usize, j: usize, value: f64 },
    #[error("leader_links entry {i} = {value} is not 0 or 1")]
    NonBinaryLeaderLink { i: usize, value: f64 },
    #[error("adjacency is not symmetric at ({i},{j}); the follower graph must be undirected")]
    NotSymmetric { i: usize, j: usize },
    #[error("adjacency diagonal entry {i} is nonzero; self-loops are not allowed")]
    SelfLoop { i: usize },
    #[error("matrix is not symmetric at ({i},{j})")]
    MatrixNotSymmetric { i: usize, j: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    MatrixNotSquare { rows: usize, cols: usize },
}

/// Follower graph plus leader-access vector.
///
/// Construction enforces the structural invariants (square, symmetric,
/// zero diagonal, binary weights). Connectivity and leader access are
/// reported by [`validate`], since a caller may want to inspect an invalid
/// graph before rejecting it.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    adjacency: Vec<Vec<bool>>,
    leader_links: Vec<bool>,
}

fn binary(value: f64) -> Option<bool> {
    if value == 0.0 {
        Some(false)
    } else if value == 1.0 {
        Some(true)
    } else {
        None
    }
}

impl Topology {
    pub fn new(adjacency: &[Vec<f64>], leader_links: &[f64]) -> Result<Self, GraphError> {
        let n = adjacency.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if leader_links.len() != n {
            return Err(GraphError::LeaderLinksLength {
                len: leader_links.len(),
                n,
            });
        }
        let mut adj = vec![vec![false; n]; n];
        for (i, row) in adjacency.iter().enumerate() {
            if row.len() != n {
                return Err(GraphError::RaggedRow {
                    row: i,
                    len: row.len(),
                    n,
                });
            }
            for (j, &value) in row.iter().enumerate() {
                adj[i][j] = binary(value).ok_or(GraphError::NonBinaryWeight { i, j, value })?;
            }
        }
        for i in 0..n {
            if adj[i][i] {
                return Err(GraphError::SelfLoop { i });
            }
            for j in (i + 1)..n {
                if adj[i][j] != adj[j][i] {
                    return Err(GraphError::NotSymmetric { i, j });
                }
            }
        }
        let leader_links = leader_links
            .iter()
            .enumerate()
            .map(|(i, &value)| binary(value).ok_or(GraphError::NonBinaryLeaderLink { i, value }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            adjacency: adj,
            leader_links,
        })
    }

    /// Builds a topology from zero-based undirected edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], leader: &[usize]) -> Result<Self, GraphError> {
        let mut adjacency = vec![vec![0.0; n]; n];
        for &(i, j) in edges {
            adjacency[i][j] = 1.0;
            adjacency[j][i] = 1.0;
        }
        let mut links = vec![0.0; n];
        for &i in leader {
            links[i] = 1.0;
        }
        Self::new(&adjacency, &links)
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn is_linked(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j]
    }

    pub fn has_leader_link(&self, i: usize) -> bool {
        self.leader_links[i]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[i]
            .iter()
            .enumerate()
            .filter_map(|(j, &linked)| linked.then_some(j))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    /// Diagonal entry of `H` for follower `i`.
    pub fn h_diagonal(&self, i: usize) -> f64 {
        self.degree(i) as f64 + if self.leader_links[i] { 1.0 } else { 0.0 }
    }

    pub fn adjacency_rows(&self) -> Vec<Vec<f64>> {
        self.adjacency
            .iter()
            .map(|row| row.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    pub fn leader_link_values(&self) -> Vec<f64> {
        self.leader_links
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect()
    }
}

pub fn laplacian(topology: &Topology) -> SquareMatrix {
    let n = topology.len();
    let mut l = SquareMatrix::zeros(n, n);
    for i in 0..n {
        for j in topology.neighbors(i) {
            l[(i, j)] = -1.0;
            l[(i, i)] += 1.0;
        }
    }
    l
}

pub fn h_matrix(topology: &Topology) -> SquareMatrix {
    let mut h = laplacian(topology);
    for i in 0..topology.len() {
        if topology.has_leader_link(i) {
            h[(i, i)] += 1.0;
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFailure {
    Disconnected,
    NoLeaderAccess,
}

impl fmt::Display for GraphFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphFailure::Disconnected => f.write_str(
                "follower graph is not connected; every follower must be reachable from every other",
            ),
            GraphFailure::NoLeaderAccess => {
                f.write_str("no follower has a link to the leader; at least one is required")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub connected: bool,
    pub leader_access: bool,
    /// Smallest eigenvalue of `H`. Positive for every valid topology.
    pub min_h_eigenvalue: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.connected && self.leader_access
    }

    pub fn failures(&self) -> Vec<GraphFailure> {
        let mut out = Vec::new();
        if !self.connected {
            out.push(GraphFailure::Disconnected);
        }
        if !self.leader_access {
            out.push(GraphFailure::NoLeaderAccess);
        }
        out
    }
}

fn is_connected(topology: &Topology) -> bool {
    let n = topology.len();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for j in topology.neighbors(i) {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

pub fn validate(topology: &Topology) -> ValidationReport {
    let h = h_matrix(topology);
    ValidationReport {
        connected: is_connected(topology),
        leader_access: topology.leader_links.iter().any(|&b| b),
        min_h_eigenvalue: min_symmetric_eigenvalue(&h).expect("H is symmetric by construction"),
    }
}

pub fn min_symmetric_eigenvalue(m: &SquareMatrix) -> Result<f64, GraphError> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(GraphError::MatrixNotSquare { rows, cols });
    }
    for i in 0..rows {
        for j in (i + 1)..cols {
            if m[(i, j)] != m[(j, i)] {
                return Err(GraphError::MatrixNotSymmetric { i, j });
            }
        }
    }
    if rows == 0 {
        return Ok(0.0);
    }
    let eig = m.clone().symmetric_eigen();
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}
