//! Measurement graphs: topology, per-edge rotation measurements with
//! good/bad labels, corruption accounting, and the well-connectedness
//! check.
//!
//! Edges are stored once per unordered pair with `j < k`; the reversed
//! measurement is always derived as the transpose, so inconsistent
//! `R_jk`/`R_kj` pairs cannot be represented. Graphs are connected by
//! construction (disconnected inputs are rejected).

use rand::Rng;

use crate::error::{Result, SyncError};
use crate::manifold::{random_rotation, Rotation, UnitComplex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeLabel {
    Good,
    Bad,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub j: usize,
    pub k: usize,
    pub measurement: Rotation,
    pub label: EdgeLabel,
}

#[derive(Debug, Clone)]
pub struct MeasurementGraph {
    n: usize,
    dim: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>, // node -> (neighbor, edge index)
}

/// Per-node corruption counts and the worst per-node fraction `alpha_0`.
#[derive(Debug, Clone)]
pub struct CorruptionStats {
    pub alpha0: f64,
    pub per_node: Vec<NodeCorruption>,
}

#[derive(Debug, Clone, Copy)]
pub struct NodeCorruption {
    pub degree: usize,
    pub bad: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum WellConnectMode {
    /// Scan every subset J with #J <= n/2; capped at n = 24.
    Exhaustive,
    /// Monte-Carlo falsification with the given number of random subsets.
    Sampled { trials: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WellConnectedness {
    WellConnected,
    /// A subset J in which every node has at least as many neighbors
    /// inside J as outside.
    NotWellConnected { witness: Vec<usize> },
    /// Sampling found no counterexample; the property remains undecided.
    Unknown,
}

impl MeasurementGraph {
    pub fn new(n: usize, dim: usize, edges: Vec<Edge>) -> Result<Self> {
        if n < 2 {
            return Err(SyncError::InvalidInput(format!(
                "graph needs at least 2 nodes, got {n}"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            if e.j >= e.k {
                return Err(SyncError::InvalidInput(format!(
                    "edge ({}, {}) must satisfy j < k",
                    e.j, e.k
                )));
            }
            if e.k >= n {
                return Err(SyncError::InvalidInput(format!(
                    "edge ({}, {}) references a node >= n = {n}",
                    e.j, e.k
                )));
            }
            if e.measurement.dim() != dim {
                return Err(SyncError::DimensionMismatch {
                    expected: dim,
                    got: e.measurement.dim(),
                });
            }
            if !seen.insert((e.j, e.k)) {
                return Err(SyncError::InvalidInput(format!(
                    "duplicate edge ({}, {})",
                    e.j, e.k
                )));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            adj[e.j].push((e.k, idx));
            adj[e.k].push((e.j, idx));
        }
        let graph = MeasurementGraph { n, dim, edges, adj };
        if !graph.is_connected() {
            return Err(SyncError::InvalidInput(
                "measurement graph is not connected".into(),
            ));
        }
        Ok(graph)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degree(&self, j: usize) -> usize {
        self.adj[j].len()
    }

    /// Neighbors of `j` as (neighbor node, edge index) pairs.
    pub fn neighbors(&self, j: usize) -> &[(usize, usize)] {
        &self.adj[j]
    }

    /// The measurement oriented from `from` toward the edge's other node:
    /// the stored matrix if `from` is the edge's j, its transpose otherwise.
    pub fn oriented_measurement(&self, edge_idx: usize, from: usize) -> Rotation {
        let e = &self.edges[edge_idx];
        if from == e.j {
            e.measurement.clone()
        } else {
            e.measurement.transpose()
        }
    }

    pub fn is_labeled(&self) -> bool {
        self.edges.iter().all(|e| e.label != EdgeLabel::Unknown)
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.n * (self.n - 1) / 2
    }

    /// The neighborhood of `j` split into (all, good, bad).
    pub fn labeled_neighborhoods(&self, j: usize) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        let mut all = Vec::new();
        let mut good = Vec::new();
        let mut bad = Vec::new();
        for &(k, idx) in &self.adj[j] {
            all.push(k);
            match self.edges[idx].label {
                EdgeLabel::Good => good.push(k),
                EdgeLabel::Bad => bad.push(k),
                EdgeLabel::Unknown => return Err(SyncError::UnknownLabels),
            }
        }
        Ok((all, good, bad))
    }

    /// `alpha_0`, the worst per-node fraction of bad edges.
    pub fn corruption_stats(&self) -> Result<CorruptionStats> {
        let mut per_node = Vec::with_capacity(self.n);
        let mut alpha0 = 0.0f64;
        for j in 0..self.n {
            let (_, _, bad) = self.labeled_neighborhoods(j)?;
            let degree = self.degree(j);
            let fraction = if degree == 0 {
                0.0
            } else {
                bad.len() as f64 / degree as f64
            };
            alpha0 = alpha0.max(fraction);
            per_node.push(NodeCorruption {
                degree,
                bad: bad.len(),
                fraction,
            });
        }
        Ok(CorruptionStats { alpha0, per_node })
    }

    fn is_connected(&self) -> bool {
        let mut visited = vec![false; self.n];
        let mut stack = vec![0usize];
        visited[0] = true;
        let mut count = 1;
        while let Some(j) = stack.pop() {
            for &(k, _) in &self.adj[j] {
                if !visited[k] {
                    visited[k] = true;
                    count += 1;
                    stack.push(k);
                }
            }
        }
        count == self.n
    }

    /// Checks the well-connectedness condition: every J with #J <= n/2
    /// contains a node with strictly more neighbors outside J than inside.
    pub fn is_well_connected<R: Rng + ?Sized>(
        &self,
        mode: WellConnectMode,
        rng: &mut R,
    ) -> Result<WellConnectedness> {
        match mode {
            WellConnectMode::Exhaustive => {
                if self.n > 24 {
                    return Err(SyncError::TooLarge { n: self.n });
                }
                let adj_masks = self.adjacency_masks();
                let half = self.n / 2;
                for mask in 1u32..(1u32 << self.n) {
                    let size = mask.count_ones() as usize;
                    if size > half {
                        continue;
                    }
                    if !self.subset_has_outward_node(mask, &adj_masks) {
                        return Ok(WellConnectedness::NotWellConnected {
                            witness: mask_to_nodes(mask),
                        });
                    }
                }
                Ok(WellConnectedness::WellConnected)
            }
            WellConnectMode::Sampled { trials } => {
                let adj_masks = self.adjacency_masks();
                let half = (self.n / 2).max(1);
                for _ in 0..trials {
                    let size = rng.gen_range(1..=half);
                    let mut nodes: Vec<usize> = (0..self.n).collect();
                    for i in 0..size {
                        let j = i + rng.gen_range(0..(self.n - i));
                        nodes.swap(i, j);
                    }
                    let mut mask = 0u32;
                    for &v in &nodes[..size] {
                        mask |= 1 << v;
                    }
                    if !self.subset_has_outward_node(mask, &adj_masks) {
                        return Ok(WellConnectedness::NotWellConnected {
                            witness: mask_to_nodes(mask),
                        });
                    }
                }
                Ok(WellConnectedness::Unknown)
            }
        }
    }

    fn adjacency_masks(&self) -> Vec<u32> {
        let mut masks = vec![0u32; self.n];
        for (j, nbrs) in self.adj.iter().enumerate() {
            for &(k, _) in nbrs {
                masks[j] |= 1 << k;
            }
        }
        masks
    }

    fn subset_has_outward_node(&self, mask: u32, adj_masks: &[u32]) -> bool {
        let mut m = mask;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            m &= m - 1;
            let inside = (adj_masks[j] & mask).count_ones() as usize;
            let outside = self.degree(j) - inside;
            if outside > inside {
                return true;
            }
        }
        false
    }

    /// Complete graph with identity placeholder measurements.
    pub fn complete(n: usize, dim: usize) -> Result<Self> {
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for j in 0..n {
            for k in (j + 1)..n {
                edges.push(Edge {
                    j,
                    k,
                    measurement: Rotation::identity(dim),
                    label: EdgeLabel::Unknown,
                });
            }
        }
        MeasurementGraph::new(n, dim, edges)
    }

    /// Erdos-Renyi topology with edge probability `p`, resampled until
    /// connected (at most 100 attempts).
    pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, dim: usize, p: f64, rng: &mut R) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(SyncError::InvalidConfig(format!(
                "edge probability must be in (0, 1], got {p}"
            )));
        }
        const MAX_ATTEMPTS: usize = 100;
        for _ in 0..MAX_ATTEMPTS {
            let mut edges = Vec::new();
            for j in 0..n {
                for k in (j + 1)..n {
                    if rng.gen::<f64>() < p {
                        edges.push(Edge {
                            j,
                            k,
                            measurement: Rotation::identity(dim),
                            label: EdgeLabel::Unknown,
                        });
                    }
                }
            }
            match MeasurementGraph::new(n, dim, edges) {
                Ok(g) => return Ok(g),
                Err(_) => continue,
            }
        }
        Err(SyncError::Disconnected {
            attempts: MAX_ATTEMPTS,
        })
    }

    /// Replaces the measurement and label of an edge.
    pub fn set_edge(&mut self, edge_idx: usize, measurement: Rotation, label: EdgeLabel) {
        debug_assert_eq!(measurement.dim(), self.dim);
        self.edges[edge_idx].measurement = measurement;
        self.edges[edge_idx].label = label;
    }

    /// Fills every edge with a Haar-random measurement (used by tests).
    pub fn randomize_measurements<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for idx in 0..self.edges.len() {
            let m = random_rotation(self.dim, rng);
            self.edges[idx].measurement = m;
        }
    }
}

fn mask_to_nodes(mask: u32) -> Vec<usize> {
    let mut nodes = Vec::new();
    let mut m = mask;
    while m != 0 {
        nodes.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    nodes
}

// ---------------------------------------------------------------------------
// SO(2) angle view
// ---------------------------------------------------------------------------

/// Flattened angle view of a D = 2 measurement graph, used by the SO(2)
/// solvers: per-node oriented measurement angles and the edge list.
#[derive(Debug, Clone)]
pub struct So2View {
    pub n: usize,
    /// node -> (neighbor, oriented measurement angle of z_jk)
    pub neighbors: Vec<Vec<(usize, f64)>>,
    /// (j, k, angle of z_jk) per stored edge
    pub edges: Vec<(usize, usize, f64)>,
}

impl So2View {
    pub fn new(graph: &MeasurementGraph) -> Result<Self> {
        if graph.dim() != 2 {
            return Err(SyncError::DimensionMismatch {
                expected: 2,
                got: graph.dim(),
            });
        }
        let mut neighbors = vec![Vec::new(); graph.n()];
        let mut edges = Vec::with_capacity(graph.edges().len());
        for (idx, e) in graph.edges().iter().enumerate() {
            let angle = e.measurement.angle();
            neighbors[e.j].push((e.k, angle));
            neighbors[e.k].push((e.j, -angle));
            edges.push((e.j, e.k, angle));
            let _ = idx;
        }
        Ok(So2View {
            n: graph.n(),
            neighbors,
            edges,
        })
    }

    /// The measurement target `z_jk * z_k` seen from node j.
    pub fn target(&self, angle_jk: f64, z_k: &UnitComplex) -> UnitComplex {
        UnitComplex::from_angle(angle_jk + z_k.angle())
    }
}
