use std::collections::VecDeque;

use crate::grid::Point;

/// Unit-disk graph over the base station (node 0) and alive UAVs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityGraph {
    adjacency: Vec<Vec<usize>>,
}

/// Node of the base station in every graph built by [`build_graph`].
pub const BS_NODE: usize = 0;

/// Edge `{u, v}` iff the two positions are at most `tx_range` apart.
/// `positions[0]` is the base station.
pub fn build_graph(positions: &[Point], tx_range: f64) -> ConnectivityGraph {
    let n = positions.len();
    let mut adjacency = vec![Vec::new(); n];
    for u in 0..n {
        for v in (u + 1)..n {
            if positions[u].distance(positions[v]) <= tx_range {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
    }
    ConnectivityGraph { adjacency }
}

impl ConnectivityGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u != v && !adjacency[u].contains(&v) {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self { adjacency }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].contains(&v)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Breadth-first hop distance from `source`; `None` when unreachable.
    pub fn hops_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}
