//! Links, beacons and the neighbourhood-derived connectivity estimates a UAV
//! uses to pick waypoints.

mod graph;
mod hello;
mod table;

pub use graph::{build_graph, ConnectivityGraph, BS_NODE};
pub use hello::{
    quantize_position, HelloMessage, BS_ID, HELLO_BYTES, MAX_ID, NO_ROUTE, POSITION_STEP_M,
    WAYPOINT_LIMIT,
};
pub use table::{BsRecord, NeighborRecord, NeighborTable, HELLO_PERIOD_S, STALENESS_S};

use crate::grid::{CellCoord, GridSpec, Point};

/// Transmission range used throughout, meters.
pub const TX_RANGE_M: f64 = 1000.0;
/// How long a UAV refuses equal-or-longer routes after losing its own.
pub const HOLDDOWN_S: f64 = 3.0 * HELLO_PERIOD_S;

/// Distance-weighted link strength: 1 within 60% of range, then linear
/// down to 0 at the range limit.
pub fn gamma(distance: f64, tx_range: f64) -> f64 {
    if distance <= 0.6 * tx_range {
        1.0
    } else if distance <= tx_range {
        2.5 * (1.0 - distance / tx_range)
    } else {
        0.0
    }
}

/// Predicted distance-weighted degree at a candidate cell, using each fresh
/// neighbour's announced next waypoint. The BS counts when heard directly.
pub fn weighted_degree(
    candidate: CellCoord,
    table: &NeighborTable,
    grid: &GridSpec,
    tx_range: f64,
) -> f64 {
    let at = grid.center(candidate);
    let mut k: f64 = table
        .neighbors()
        .map(|n| gamma(at.distance(grid.center(n.waypoint)), tx_range))
        .sum();
    if let Some(bs) = table.bs() {
        k += gamma(at.distance(bs.position), tx_range);
    }
    k
}

/// Own hop count from the table: 1 with a direct BS link, else one more than
/// the best neighbour, saturating at [`NO_ROUTE`].
pub fn update_bs_hops(table: &NeighborTable) -> u8 {
    if table.bs_direct() {
        return 1;
    }
    table
        .neighbors()
        .map(|n| n.hops)
        .min()
        .map_or(NO_ROUTE, |h| h.saturating_add(1).min(NO_ROUTE))
}

/// Whether a route to the BS is expected to survive a move to `candidate`:
/// the BS is in range of the cell, or the announced waypoint of a routed
/// neighbour is.
pub fn route_available_at(
    candidate: CellCoord,
    table: &NeighborTable,
    grid: &GridSpec,
    bs_position: Point,
    tx_range: f64,
) -> bool {
    let at = grid.center(candidate);
    if at.distance(bs_position) <= tx_range {
        return true;
    }
    table
        .neighbors()
        .any(|n| n.hops < NO_ROUTE && at.distance(grid.center(n.waypoint)) <= tx_range)
}

/// Stateful hop count with a feasibility condition: a UAV only adopts
/// neighbours advertising fewer hops than its own. Losing the last such
/// neighbour drops the route and starts a hold-down, during which only
/// neighbours below the lost hop count are accepted. Stale loops therefore
/// cannot keep a severed group believing it is routed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopState {
    hops: u8,
    lost_at: u8,
    holddown_until: f64,
}

impl Default for HopState {
    fn default() -> Self {
        Self {
            hops: NO_ROUTE,
            lost_at: NO_ROUTE,
            holddown_until: f64::NEG_INFINITY,
        }
    }
}

impl HopState {
    pub fn hops(&self) -> u8 {
        self.hops
    }

    /// Recomputes the hop count from a freshly evicted table at time `now`.
    pub fn update(&mut self, table: &NeighborTable, now: f64, holddown: f64) -> u8 {
        if table.bs_direct() {
            self.hops = 1;
            return self.hops;
        }
        let limit = if self.hops < NO_ROUTE {
            self.hops
        } else if now < self.holddown_until {
            self.lost_at
        } else {
            NO_ROUTE
        };
        match table.neighbors().map(|n| n.hops).filter(|&h| h < limit).min() {
            Some(h) => self.hops = h + 1,
            None => {
                if self.hops < NO_ROUTE {
                    self.lost_at = self.hops;
                    self.holddown_until = now + holddown;
                }
                self.hops = NO_ROUTE;
            }
        }
        self.hops
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pheromone::{PheromonePatch, PATCH_CELLS};
    use proptest::prelude::*;

    const BS: Point = Point::new(3000.0, 0.0);

    fn grid() -> GridSpec {
        GridSpec::standard()
    }

    /// Neighbour whose announced waypoint centre sits `d` meters east of
    /// the centre of `from`.
    fn neighbor_at(id: u8, from: CellCoord, d: f64, hops: u8) -> NeighborRecord {
        let g = grid();
        let c = g.center(from);
        let target = Point::new(c.x + d, c.y);
        let wp = g.cell_of(target);
        assert!((g.center(wp).distance(c) - d).abs() < 1e-9, "choose d as a multiple of 100");
        NeighborRecord {
            id,
            position: target,
            waypoint: wp,
            hops,
            last_heard: 0.0,
            patch: PheromonePatch::uniform(wp, 0),
        }
    }

    #[test]
    fn gamma_branches() {
        assert_eq!(gamma(500.0, 1000.0), 1.0);
        assert!((gamma(800.0, 1000.0) - 0.5).abs() < 1e-12);
        assert_eq!(gamma(1200.0, 1000.0), 0.0);
        assert_eq!(gamma(600.0, 1000.0), 1.0);
        assert!(gamma(600.0 + 1e-9, 1000.0) > 1.0 - 1e-6);
        assert_eq!(gamma(1000.0, 1000.0), 0.0);
    }

    proptest! {
        #[test]
        fn gamma_monotone(a in 0.0f64..2000.0, b in 0.0f64..2000.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(gamma(lo, 1000.0) >= gamma(hi, 1000.0));
        }
    }

    #[test]
    fn degree_cases() {
        let g = grid();
        let cand = CellCoord::new(10, 30);
        let mut t = NeighborTable::new();
        assert_eq!(weighted_degree(cand, &t, &g, TX_RANGE_M), 0.0);
        t.insert_record(neighbor_at(1, cand, 500.0, 3));
        assert_eq!(weighted_degree(cand, &t, &g, TX_RANGE_M), 1.0);
        t.insert_record(neighbor_at(2, cand, 800.0, 3));
        t.insert_record(neighbor_at(3, cand, 1200.0, 3));
        assert!((weighted_degree(cand, &t, &g, TX_RANGE_M) - 1.5).abs() < 1e-12);
        assert!(weighted_degree(cand, &t, &g, TX_RANGE_M) <= t.len() as f64);
    }

    #[test]
    fn hop_rules() {
        let mut t = NeighborTable::new();
        assert_eq!(update_bs_hops(&t), NO_ROUTE);
        let c = CellCoord::new(30, 30);
        t.insert_record(neighbor_at(1, c, 100.0, 3));
        t.insert_record(neighbor_at(2, c, 200.0, 5));
        t.insert_record(neighbor_at(3, c, 300.0, 15));
        assert_eq!(update_bs_hops(&t), 4);
        t.set_bs(Some(BsRecord {
            position: BS,
            degree: 2,
            last_heard: 0.0,
        }));
        assert_eq!(update_bs_hops(&t), 1);
        let mut routeless = NeighborTable::new();
        routeless.insert_record(neighbor_at(4, c, 100.0, 15));
        assert_eq!(update_bs_hops(&routeless), NO_ROUTE);
    }

    #[test]
    fn route_prediction() {
        let g = grid();
        // cell centre (3050, 850): 851 m from the BS
        let near_bs = CellCoord::new(30, 8);
        assert!(route_available_at(near_bs, &NeighborTable::new(), &g, BS, TX_RANGE_M));

        let far = CellCoord::new(10, 40);
        let mut t = NeighborTable::new();
        t.insert_record(neighbor_at(1, far, 300.0, NO_ROUTE));
        assert!(!route_available_at(far, &t, &g, BS, TX_RANGE_M));

        let mut t = NeighborTable::new();
        t.insert_record(neighbor_at(2, far, 1100.0, 2));
        assert!(!route_available_at(far, &t, &g, BS, TX_RANGE_M));
        t.insert_record(neighbor_at(3, far, 900.0, 2));
        assert!(route_available_at(far, &t, &g, BS, TX_RANGE_M));
    }

    #[test]
    fn eviction_by_age() {
        let g = grid();
        let mut t = NeighborTable::new();
        let m = HelloMessage::new(4, Point::new(100.0, 100.0), 61, [0; PATCH_CELLS], 2);
        t.receive(&m, &g, 0.0);
        let bs = HelloMessage::new(BS_ID, BS, 30, [3; PATCH_CELLS], 0);
        t.receive(&bs, &g, 1.0);
        assert!(t.bs_direct());
        assert_eq!(t.bs_degree(), 3);
        t.evict(5.0, STALENESS_S);
        assert_eq!(t.len(), 1);
        t.evict(5.5, STALENESS_S);
        assert_eq!(t.len(), 0);
        assert!(t.bs_direct());
        t.evict(6.5, STALENESS_S);
        assert!(!t.bs_direct());
    }

    /// Synchronous distance-vector rounds over the true graph converge to BFS
    /// hop counts within `diameter` rounds for nodes reachable in < 15 hops.
    #[test]
    fn hop_propagation_matches_bfs() {
        use rand::{Rng, SeedableRng};
        let g = grid();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(2..30);
            let mut pts = vec![BS];
            for _ in 0..n {
                pts.push(Point::new(rng.gen_range(0.0..6000.0), rng.gen_range(0.0..4000.0)));
            }
            let graph = build_graph(&pts, TX_RANGE_M);
            let bfs = graph.hops_from(BS_NODE);
            let mut hops = vec![NO_ROUTE; pts.len()];
            hops[0] = 0;
            let mut stateful = hops.clone();
            let mut states = vec![HopState::default(); pts.len()];
            for round in 0..pts.len() {
                let now = round as f64 * HELLO_PERIOD_S;
                let tables = |hops: &[u8], u: usize| {
                    let mut table = NeighborTable::new();
                    for &v in graph.neighbors(u) {
                        let id = if v == 0 { BS_ID } else { (v - 1) as u8 };
                        table.receive(&HelloMessage::new(id, pts[v], 0, [0; PATCH_CELLS], hops[v]), &g, now);
                    }
                    table
                };
                let mut next = hops.clone();
                let mut next_stateful = stateful.clone();
                for u in 1..pts.len() {
                    next[u] = update_bs_hops(&tables(&hops, u));
                    next_stateful[u] = states[u].update(&tables(&stateful, u), now, HOLDDOWN_S);
                }
                hops = next;
                stateful = next_stateful;
            }
            for u in 1..pts.len() {
                let expect = bfs[u].map_or(NO_ROUTE, |d| (d as u8).min(NO_ROUTE));
                assert_eq!(hops[u], expect, "node {u}");
                assert_eq!(stateful[u], expect, "node {u}");
            }
        }
    }

    #[test]
    fn severed_chain_drops_route_promptly() {
        // BS - a - b - c, then the BS link breaks: a, b and c hear only each other
        let g = grid();
        let hello = |id: u8, hops: u8| HelloMessage::new(id, Point::new(100.0, 100.0), 0, [0; PATCH_CELLS], hops);
        let mut st = [1u8, 2, 3].map(|hops| HopState { hops, ..Default::default() });
        let mut hops = [1u8, 2, 3];
        let links: [&[usize]; 3] = [&[1], &[0, 2], &[1]];
        let mut rounds = 0;
        while hops.iter().any(|&h| h < NO_ROUTE) {
            rounds += 1;
            assert!(rounds <= 3, "still routed after {rounds} rounds: {hops:?}");
            let now = rounds as f64 * HELLO_PERIOD_S;
            let prev = hops;
            for u in 0..3 {
                let mut table = NeighborTable::new();
                for &v in links[u] {
                    table.receive(&hello(v as u8 + 1, prev[v]), &g, now);
                }
                hops[u] = st[u].update(&table, now, HOLDDOWN_S);
            }
        }
        // the memoryless rule counts upward instead
        let mut plain = [1u8, 2, 3];
        for round in 1..=3 {
            let prev = plain;
            for u in 0..3 {
                let mut table = NeighborTable::new();
                for &v in links[u] {
                    table.receive(&hello(v as u8 + 1, prev[v]), &g, round as f64);
                }
                plain[u] = update_bs_hops(&table);
            }
        }
        assert!(plain.iter().all(|&h| h < NO_ROUTE), "{plain:?}");
    }

    #[test]
    fn holddown_still_accepts_shorter_routes() {
        let g = grid();
        let mut s = HopState { hops: 4, ..Default::default() };
        let mut table = NeighborTable::new();
        table.receive(&HelloMessage::new(9, Point::new(100.0, 100.0), 0, [0; PATCH_CELLS], 4), &g, 0.0);
        assert_eq!(s.update(&table, 0.0, HOLDDOWN_S), NO_ROUTE);
        // an equal-length claim is refused during the hold-down, a shorter one is not
        assert_eq!(s.update(&table, 2.0, HOLDDOWN_S), NO_ROUTE);
        table.receive(&HelloMessage::new(8, Point::new(100.0, 100.0), 0, [0; PATCH_CELLS], 2), &g, 2.0);
        assert_eq!(s.update(&table, 2.0, HOLDDOWN_S), 3);
        // after the hold-down any routed neighbour is accepted again
        let mut s = HopState { hops: 4, ..Default::default() };
        let mut only_five = NeighborTable::new();
        only_five.receive(&HelloMessage::new(9, Point::new(100.0, 100.0), 0, [0; PATCH_CELLS], 5), &g, 0.0);
        assert_eq!(s.update(&only_five, 0.0, HOLDDOWN_S), NO_ROUTE);
        assert_eq!(s.update(&only_five, HOLDDOWN_S + 0.1, HOLDDOWN_S), 6);
    }
}
