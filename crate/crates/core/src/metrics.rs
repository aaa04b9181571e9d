//! Swarm evaluation statistics over ground-truth state.

use crate::grid::{CellCoord, GridSpec};
use crate::network::{ConnectivityGraph, BS_NODE};

/// Coverage threshold for the coverage-time statistic, in percent.
pub const COVERAGE_TARGET_PCT: f64 = 90.0;
/// Seconds between metric samples.
pub const SAMPLE_PERIOD_S: f64 = 10.0;

/// Per-cell visit counters.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitGrid {
    grid: GridSpec,
    counts: Vec<u64>,
}

impl VisitGrid {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            counts: vec![0; grid.n_cells()],
            grid,
        }
    }

    pub fn from_counts(grid: GridSpec, counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), grid.n_cells(), "count vector does not match grid");
        Self { grid, counts }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Records a visit and returns the count before it.
    pub fn visit(&mut self, cell: CellCoord) -> u64 {
        let i = self.grid.index(cell);
        let before = self.counts[i];
        self.counts[i] += 1;
        before
    }

    pub fn count(&self, cell: CellCoord) -> u64 {
        self.counts[self.grid.index(cell)]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn visited_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Percentage of cells visited at least once.
pub fn coverage(grid: &VisitGrid) -> f64 {
    100.0 * grid.visited_cells() as f64 / grid.counts.len() as f64
}

/// Time of the first sample at or above 90% coverage.
pub fn coverage_time(samples: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    samples
        .into_iter()
        .find(|&(_, pct)| pct >= COVERAGE_TARGET_PCT)
        .map(|(t, _)| t)
}

/// Jain's index over visit counts; `None` when nothing was visited.
pub fn fairness(counts: &[u64]) -> Option<f64> {
    let sum: f64 = counts.iter().map(|&c| c as f64).sum();
    let sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    if sq == 0.0 {
        None
    } else {
        Some(sum * sum / (counts.len() as f64 * sq))
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }

    pub fn component_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }
}

fn union_find(graph: &ConnectivityGraph) -> UnionFind {
    let mut uf = UnionFind::new(graph.node_count());
    for (u, v) in graph.edges() {
        uf.union(u, v);
    }
    uf
}

/// Component count and largest component size.
pub fn components(graph: &ConnectivityGraph) -> (usize, usize) {
    let n = graph.node_count();
    let mut uf = union_find(graph);
    let mut count = 0;
    let mut giant = 0;
    for v in 0..n {
        if uf.find(v) == v {
            count += 1;
            giant = giant.max(uf.component_size(v));
        }
    }
    (count, giant)
}

/// Mean degree of UAV nodes (every node except the BS at index 0). Edges to
/// the BS count toward a UAV's degree.
pub fn avg_node_degree(graph: &ConnectivityGraph) -> f64 {
    let n = graph.node_count();
    if n <= 1 {
        return 0.0;
    }
    let total: usize = (1..n).map(|u| graph.degree(u)).sum();
    total as f64 / (n - 1) as f64
}

/// For each UAV node (index 1..), whether it shares a component with the BS.
pub fn bs_connected(graph: &ConnectivityGraph) -> Vec<bool> {
    let mut uf = union_find(graph);
    let bs = uf.find(BS_NODE);
    (1..graph.node_count()).map(|u| uf.find(u) == bs).collect()
}

/// Percentage of (UAV, sample) pairs in the BS component.
pub fn tbs<'a>(samples: impl IntoIterator<Item = &'a [bool]>) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for s in samples {
        hit += s.iter().filter(|&&c| c).count();
        total += s.len();
    }
    if total == 0 {
        0.0
    } else {
        100.0 * hit as f64 / total as f64
    }
}

/// One periodic snapshot of network and coverage state.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSample {
    pub time: f64,
    pub ncc: usize,
    pub and: f64,
    /// One flag per alive UAV, ascending id.
    pub tbs_connected: Vec<bool>,
    pub giant: usize,
    pub coverage_pct: f64,
}

impl MetricsSample {
    /// Snapshot of a graph whose node 0 is the BS and whose other nodes are
    /// the alive UAVs.
    pub fn from_graph(time: f64, graph: &ConnectivityGraph, coverage_pct: f64) -> Self {
        let (ncc, giant) = components(graph);
        Self {
            time,
            ncc,
            and: avg_node_degree(graph),
            tbs_connected: bs_connected(graph),
            giant,
            coverage_pct,
        }
    }

    /// Percentage of alive UAVs connected to the BS in this sample.
    pub fn tbs_instant(&self) -> f64 {
        tbs(std::iter::once(self.tbs_connected.as_slice()))
    }
}

/// Per-run aggregate of a sample history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub coverage_end: f64,
    pub tc: Option<f64>,
    pub fairness: Option<f64>,
    pub ncc: f64,
    pub and: f64,
    pub tbs: f64,
    pub giant: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn summarize(samples: &[MetricsSample], visits: &VisitGrid) -> RunSummary {
    RunSummary {
        coverage_end: coverage(visits),
        tc: coverage_time(samples.iter().map(|s| (s.time, s.coverage_pct))),
        fairness: fairness(visits.counts()),
        ncc: mean(samples.iter().map(|s| s.ncc as f64)),
        and: mean(samples.iter().map(|s| s.and)),
        tbs: tbs(samples.iter().map(|s| s.tbs_connected.as_slice())),
        giant: mean(samples.iter().map(|s| s.giant as f64)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Point;
    use crate::network::build_graph;
    use proptest::prelude::*;

    #[test]
    fn coverage_counts() {
        let g = GridSpec::standard();
        let mut v = VisitGrid::new(g);
        assert_eq!(coverage(&v), 0.0);
        for i in 0..900 {
            v.visit(g.cell_at_index(i * 4));
        }
        assert_eq!(coverage(&v), 25.0);
        let full = VisitGrid::from_counts(g, vec![1; 3600]);
        assert_eq!(coverage(&full), 100.0);
    }

    #[test]
    fn visit_reports_previous_count() {
        let mut v = VisitGrid::new(GridSpec::standard());
        let c = CellCoord::new(3, 4);
        assert_eq!(v.visit(c), 0);
        assert_eq!(v.visit(c), 1);
        assert_eq!(v.count(c), 2);
    }

    #[test]
    fn coverage_time_threshold() {
        let s = [(740.0, 89.9), (750.0, 90.0), (760.0, 95.0)];
        assert_eq!(coverage_time(s), Some(750.0));
        assert_eq!(coverage_time([(10.0, 50.0), (20.0, 89.99)]), None);
        // crossing happened between 740 and 750: the sampling grid reports 750
        assert_eq!(coverage_time([(740.0, 88.0), (750.0, 91.0)]), Some(750.0));
    }

    #[test]
    fn fairness_values() {
        assert_eq!(fairness(&[3, 3, 3, 3]), Some(1.0));
        assert_eq!(fairness(&[1, 0]), Some(0.5));
        assert_eq!(fairness(&[0, 0, 0]), None);
    }

    #[test]
    fn component_cases() {
        let complete = ConnectivityGraph::from_edges(
            6,
            &(0..6).flat_map(|u| (u + 1..6).map(move |v| (u, v))).collect::<Vec<_>>(),
        );
        assert_eq!(components(&complete), (1, 6));
        let empty = ConnectivityGraph::from_edges(31, &[]);
        assert_eq!(components(&empty), (31, 1));
    }

    #[test]
    fn degree_cases() {
        // BS far away, five UAVs in a clique
        let mut pts = vec![Point::new(0.0, 0.0)];
        for i in 0..5 {
            pts.push(Point::new(5000.0 + i as f64 * 10.0, 5000.0));
        }
        assert_eq!(avg_node_degree(&build_graph(&pts, 1000.0)), 4.0);
        assert_eq!(avg_node_degree(&ConnectivityGraph::from_edges(4, &[])), 0.0);
        let path = ConnectivityGraph::from_edges(4, &[(1, 2), (2, 3)]);
        assert!((avg_node_degree(&path) - 4.0 / 3.0).abs() < 1e-15);
        // a BS edge is part of the UAV's degree
        let star = ConnectivityGraph::from_edges(3, &[(0, 1), (0, 2)]);
        assert_eq!(avg_node_degree(&star), 1.0);
    }

    #[test]
    fn tbs_cases() {
        let always = [vec![true; 4], vec![true; 4]];
        assert_eq!(tbs(always.iter().map(|v| v.as_slice())), 100.0);
        let half = [vec![true], vec![false]];
        assert_eq!(tbs(half.iter().map(|v| v.as_slice())), 50.0);
        let g = ConnectivityGraph::from_edges(4, &[(0, 1), (2, 3)]);
        assert_eq!(bs_connected(&g), vec![true, false, false]);
    }

    fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1usize..=10).prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec((0..n, 0..n), 0..(n * n)).prop_map(|e| {
                    e.into_iter().filter(|(a, b)| a != b).collect::<Vec<_>>()
                }),
            )
        })
    }

    proptest! {
        #[test]
        fn adding_an_edge_never_splits((n, edges) in arb_graph(), a in 0usize..10, b in 0usize..10) {
            let (a, b) = (a % n, b % n);
            prop_assume!(a != b);
            let before = components(&ConnectivityGraph::from_edges(n, &edges));
            let mut more = edges.clone();
            more.push((a, b));
            let after = components(&ConnectivityGraph::from_edges(n, &more));
            prop_assert!(after.0 <= before.0);
            prop_assert!(after.1 >= before.1);
        }

        #[test]
        fn fairness_scale_invariant(mut x in proptest::collection::vec(0u64..50, 1..40), c in 1u64..20) {
            x[0] += 1;
            let scaled: Vec<u64> = x.iter().map(|v| v * c).collect();
            let (f, g) = (fairness(&x).unwrap(), fairness(&scaled).unwrap());
            prop_assert!((f - g).abs() < 1e-12);
            prop_assert!(f >= 1.0 / x.len() as f64 - 1e-12 && f <= 1.0 + 1e-12);
        }

        #[test]
        fn sample_bounds((n, edges) in arb_graph()) {
            let g = ConnectivityGraph::from_edges(n, &edges);
            let s = MetricsSample::from_graph(0.0, &g, 0.0);
            prop_assert!(s.ncc >= 1 && s.ncc <= n);
            prop_assert!(s.giant <= n);
            prop_assert_eq!(s.tbs_connected.len(), n - 1);
        }
    }
}
