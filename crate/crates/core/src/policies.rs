//! Non-learned mobility policies: repel-pheromone descent, BS-CAP waypoint
//! selection and the ConCov potential-field heading rule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellCoord, GridSpec, Point};
use crate::kinematics::{candidate_waypoints, CandidateSet, UavState, N_SLOTS, STRAIGHT_SLOT};
use crate::network::{route_available_at, weighted_degree, NeighborTable};
use crate::pheromone::PheromoneMap;

/// Local view of one candidate waypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateObs {
    pub cell: CellCoord,
    /// Look-ahead pheromone.
    pub look_ahead: f64,
    /// Predicted distance-weighted degree.
    pub degree: f64,
    pub route: bool,
    /// Meters from the candidate centre to the neighbour with the shortest
    /// advertised BS route, if any neighbour has one.
    pub best_neighbor_distance: Option<f64>,
    /// Meters from the candidate centre to the BS.
    pub bs_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborSummary {
    pub id: u8,
    pub position: Point,
    pub hops: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub candidates: CandidateSet,
    pub slots: [Option<CandidateObs>; N_SLOTS],
    pub distance_to_bs: f64,
    pub bs_degree: u8,
    pub neighbors: Vec<NeighborSummary>,
}

impl Observation {
    pub fn present(&self) -> impl Iterator<Item = (usize, &CandidateObs)> + '_ {
        self.slots.iter().enumerate().filter_map(|(i, c)| c.as_ref().map(|c| (i, c)))
    }

    pub fn cell(&self, slot: usize) -> Option<CellCoord> {
        self.slots.get(slot).and_then(|s| s.map(|c| c.cell))
    }
}

/// Everything a UAV needs to observe its surroundings.
pub struct ObserveContext<'a> {
    pub grid: &'a GridSpec,
    pub map: &'a PheromoneMap,
    pub table: &'a NeighborTable,
    pub bs_position: Point,
    pub tx_range: f64,
}

/// Builds the per-candidate observation from the UAV's own pheromone map and
/// neighbour table. The table must already be evicted of stale entries.
pub fn observe(state: &UavState, ctx: &ObserveContext<'_>) -> Observation {
    let candidates = candidate_waypoints(state, ctx.grid);
    let best = ctx.table.best_routed_neighbor().map(|n| ctx.grid.center(n.waypoint));
    let mut slots = [None; N_SLOTS];
    for (slot, cell) in candidates.iter() {
        let at = ctx.grid.center(cell);
        slots[slot] = Some(CandidateObs {
            cell,
            look_ahead: ctx.map.look_ahead(cell).unwrap_or(1.0),
            degree: weighted_degree(cell, ctx.table, ctx.grid, ctx.tx_range),
            route: route_available_at(cell, ctx.table, ctx.grid, ctx.bs_position, ctx.tx_range),
            best_neighbor_distance: best.map(|b| at.distance(b)),
            bs_distance: at.distance(ctx.bs_position),
        });
    }
    Observation {
        candidates,
        slots,
        distance_to_bs: state.position.distance(ctx.bs_position),
        bs_degree: ctx.table.bs_degree(),
        neighbors: ctx
            .table
            .neighbors()
            .map(|n| NeighborSummary {
                id: n.id,
                position: n.position,
                hops: n.hops,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsCapParams {
    pub beta: f64,
    pub beta_prime: f64,
}

impl Default for BsCapParams {
    fn default() -> Self {
        Self {
            beta: 1.5,
            beta_prime: 3.0,
        }
    }
}

impl BsCapParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= self.beta_prime) {
            return Err(Error::config(format!(
                "need 0 < beta <= beta_prime, got beta={} beta_prime={}",
                self.beta, self.beta_prime
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConCovParams {
    pub omega: f64,
    pub sensing_period: f64,
    pub sensing_range: f64,
}

impl Default for ConCovParams {
    fn default() -> Self {
        Self {
            omega: 0.3,
            sensing_period: 5.0,
            sensing_range: 100.0,
        }
    }
}

impl ConCovParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(Error::config(format!("omega {} outside [0, 1]", self.omega)));
        }
        if self.sensing_period <= 0.0 || self.sensing_range <= 0.0 {
            return Err(Error::config("sensing period and range must be positive"));
        }
        Ok(())
    }
}

/// Normalized degree weight.
pub fn alpha(k: f64, params: &BsCapParams) -> f64 {
    if k <= params.beta {
        k / params.beta
    } else if k <= params.beta_prime {
        1.0
    } else {
        1.0 / 3.0
    }
}

pub fn bscap_score(look_ahead: f64, k: f64, route: bool, params: &BsCapParams) -> f64 {
    if route {
        alpha(k, params) * (1.0 - look_ahead)
    } else {
        0.0
    }
}

/// Picks the best slot among `(slot, score)` pairs. Exact ties go to the
/// smallest turn, then to a coin flip between the left and right turn.
pub fn pick_slot<R: Rng + ?Sized>(
    scored: impl IntoIterator<Item = (usize, f64)>,
    maximize: bool,
    rng: &mut R,
) -> Option<usize> {
    let mut best: Option<f64> = None;
    let mut tied: Vec<usize> = Vec::with_capacity(N_SLOTS);
    for (slot, score) in scored {
        let key = if maximize { score } else { -score };
        match best {
            Some(b) if key < b => {}
            Some(b) if key == b => tied.push(slot),
            _ => {
                best = Some(key);
                tied.clear();
                tied.push(slot);
            }
        }
    }
    let min_turn = tied.iter().map(|&s| CandidateSet::turn(s)).min()?;
    tied.retain(|&s| CandidateSet::turn(s) == min_turn);
    if tied.len() == 1 {
        Some(tied[0])
    } else {
        Some(tied[rng.gen_range(0..tied.len())])
    }
}

/// Straight ahead when present, else the gentlest remaining turn.
pub fn straightest(candidates: &CandidateSet) -> usize {
    candidates
        .iter()
        .map(|(slot, _)| slot)
        .min_by_key(|&s| (CandidateSet::turn(s), s))
        .unwrap_or(STRAIGHT_SLOT)
}

/// BS-CAP waypoint choice, returning the chosen slot. Without a routed
/// candidate the UAV closes on its best routed neighbour, or on the BS when
/// no neighbour has a route.
pub fn bscap_select_slot<R: Rng + ?Sized>(obs: &Observation, params: &BsCapParams, rng: &mut R) -> usize {
    let routed: Vec<(usize, f64)> = obs
        .present()
        .filter(|(_, c)| c.route)
        .map(|(slot, c)| (slot, bscap_score(c.look_ahead, c.degree, c.route, params)))
        .collect();
    if let Some(slot) = pick_slot(routed, true, rng) {
        return slot;
    }
    let toward_neighbor = obs
        .present()
        .filter_map(|(slot, c)| c.best_neighbor_distance.map(|d| (slot, d)));
    if let Some(slot) = pick_slot(toward_neighbor, false, rng) {
        return slot;
    }
    let toward_bs = obs.present().map(|(slot, c)| (slot, c.bs_distance));
    pick_slot(toward_bs, false, rng).unwrap_or_else(|| straightest(&obs.candidates))
}

pub fn bscap_select<R: Rng + ?Sized>(obs: &Observation, params: &BsCapParams, rng: &mut R) -> CellCoord {
    let slot = bscap_select_slot(obs, params, rng);
    obs.cell(slot).expect("selected slot is present")
}

pub fn pheromone_select_slot<R: Rng + ?Sized>(obs: &Observation, rng: &mut R) -> usize {
    let scored = obs.present().map(|(slot, c)| (slot, c.look_ahead));
    pick_slot(scored, false, rng).unwrap_or_else(|| straightest(&obs.candidates))
}

pub fn pheromone_select<R: Rng + ?Sized>(obs: &Observation, rng: &mut R) -> CellCoord {
    let slot = pheromone_select_slot(obs, rng);
    obs.cell(slot).expect("selected slot is present")
}

const ZERO_GUARD: f64 = 1e-9;

fn unit(angle: f64) -> (f64, f64) {
    (angle.cos(), angle.sin())
}

fn normalized_or(v: (f64, f64), fallback: (f64, f64)) -> (f64, f64) {
    let n = v.0.hypot(v.1);
    if n < ZERO_GUARD {
        fallback
    } else {
        (v.0 / n, v.1 / n)
    }
}

/// ConCov heading update: blend of a coverage repulsion and a BS-connectivity
/// attraction.
///
/// `neighbors` are positions of 1-hop neighbours. `route_after_ts` says whether
/// the UAV is predicted to still reach the BS one sensing period ahead;
/// `routed_neighbor_bearing` points toward a neighbour that has a route.
pub fn concov_heading(
    own: &UavState,
    neighbors: &[Point],
    route_after_ts: bool,
    routed_neighbor_bearing: Option<f64>,
    params: &ConCovParams,
) -> f64 {
    let current = unit(own.heading);

    let mut cov = (current.0 / params.sensing_range, current.1 / params.sensing_range);
    for &n in neighbors {
        let d = own.position.distance(n);
        if d < ZERO_GUARD {
            continue;
        }
        let away = ((own.position.x - n.x) / d, (own.position.y - n.y) / d);
        cov.0 += away.0 / d;
        cov.1 += away.1 / d;
    }

    let con = match (route_after_ts, routed_neighbor_bearing) {
        (false, Some(b)) => {
            let toward = unit(b);
            (current.0 + toward.0, current.1 + toward.1)
        }
        _ => current,
    };

    let cov = normalized_or(cov, current);
    let con = normalized_or(con, current);
    let w = params.omega;
    let r = (w * cov.0 + (1.0 - w) * con.0, w * cov.1 + (1.0 - w) * con.1);
    if r.0.hypot(r.1) < ZERO_GUARD {
        return own.heading;
    }
    crate::kinematics::normalize_angle(r.1.atan2(r.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    fn obs_from(entries: &[(f64, f64, bool, Option<f64>)]) -> Observation {
        let mut slots = [None; N_SLOTS];
        let mut cells = [None; N_SLOTS];
        for (i, &(p, k, route, d)) in entries.iter().enumerate() {
            let cell = CellCoord::new(10 + i as i32, 10);
            cells[i] = Some(cell);
            slots[i] = Some(CandidateObs {
                cell,
                look_ahead: p,
                degree: k,
                route,
                best_neighbor_distance: d,
                bs_distance: 3000.0,
            });
        }
        Observation {
            candidates: CandidateSet { sector: 0, slots: cells },
            slots,
            distance_to_bs: 1000.0,
            bs_degree: 0,
            neighbors: Vec::new(),
        }
    }

    #[test]
    fn alpha_branches() {
        let p = BsCapParams { beta: 1.5, beta_prime: 3.0 };
        assert_eq!(alpha(0.0, &p), 0.0);
        assert_eq!(alpha(2.0, &p), 1.0);
        assert_eq!(alpha(4.0, &p), 1.0 / 3.0);
        assert_eq!(alpha(1.5, &p), 1.0);
        assert_eq!(alpha(3.0, &p), 1.0);
        assert!((alpha(0.75, &p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn score_branches() {
        let p = BsCapParams::default();
        assert_eq!(bscap_score(0.2, 2.0, false, &p), 0.0);
        assert_eq!(bscap_score(0.0, p.beta, true, &p), 1.0);
        assert_eq!(bscap_score(1.0, 2.0, true, &p), 0.0);
        assert!(BsCapParams { beta: 3.5, beta_prime: 3.0 }.validate().is_err());
        assert!(BsCapParams { beta: 0.0, beta_prime: 3.0 }.validate().is_err());
    }

    #[test]
    fn bscap_argmax() {
        // W = {0.2, 0.8, 0.5, 0, 0} with alpha = 1 (K = 2) -> slot 1
        let o = obs_from(&[
            (0.8, 2.0, true, None),
            (0.2, 2.0, true, None),
            (0.5, 2.0, true, None),
            (1.0, 2.0, true, None),
            (1.0, 2.0, true, None),
        ]);
        assert_eq!(bscap_select_slot(&o, &BsCapParams::default(), &mut rng()), 1);
    }

    #[test]
    fn bscap_prefers_routed_even_with_zero_score() {
        let o = obs_from(&[
            (0.0, 2.0, false, None),
            (1.0, 2.0, true, None),
            (0.0, 2.0, false, None),
        ]);
        assert_eq!(bscap_select_slot(&o, &BsCapParams::default(), &mut rng()), 1);
    }

    #[test]
    fn bscap_fallback_to_routed_neighbor() {
        let o = obs_from(&[
            (0.1, 2.0, false, Some(900.0)),
            (0.1, 2.0, false, Some(400.0)),
            (0.1, 2.0, false, Some(700.0)),
        ]);
        assert_eq!(bscap_select_slot(&o, &BsCapParams::default(), &mut rng()), 1);
    }

    #[test]
    fn bscap_isolated_heads_for_bs() {
        let mut o = obs_from(&[
            (0.1, 0.0, false, None),
            (0.0, 0.0, false, None),
            (0.9, 0.0, false, None),
            (0.0, 0.0, false, None),
            (0.0, 0.0, false, None),
        ]);
        assert_eq!(bscap_select_slot(&o, &BsCapParams::default(), &mut rng()), STRAIGHT_SLOT);
        for (slot, d) in [(0, 2900.0), (3, 2800.0), (4, 2850.0)] {
            o.slots[slot].as_mut().unwrap().bs_distance = d;
        }
        assert_eq!(bscap_select_slot(&o, &BsCapParams::default(), &mut rng()), 3);
    }

    #[test]
    fn pheromone_argmin_and_ties() {
        let o = obs_from(&[(0.3, 0.0, false, None), (0.1, 0.0, false, None), (0.9, 0.0, false, None)]);
        assert_eq!(pheromone_select_slot(&o, &mut rng()), 1);
        let o = obs_from(&[(0.5, 0.0, false, None); 5]);
        assert_eq!(pheromone_select_slot(&o, &mut rng()), STRAIGHT_SLOT);
        let o = obs_from(&[
            (1.0, 0.0, false, None),
            (1.0, 0.0, false, None),
            (0.0, 0.0, false, None),
            (1.0, 0.0, false, None),
            (1.0, 0.0, false, None),
        ]);
        assert_eq!(pheromone_select_slot(&o, &mut rng()), 2);
    }

    #[test]
    fn symmetric_tie_uses_both_sides() {
        let o = obs_from(&[
            (0.5, 0.0, false, None),
            (0.1, 0.0, false, None),
            (0.5, 0.0, false, None),
            (0.1, 0.0, false, None),
            (0.5, 0.0, false, None),
        ]);
        let mut r = rng();
        let mut seen = [0usize; 5];
        for _ in 0..200 {
            seen[pheromone_select_slot(&o, &mut r)] += 1;
        }
        assert!(seen[1] > 50 && seen[3] > 50 && seen[1] + seen[3] == 200);
    }

    #[test]
    fn argmax_scale_invariant() {
        use rand::Rng;
        let mut r = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let entries: Vec<_> = (0..5)
                .map(|_| (r.gen_range(0.0..1.0), r.gen_range(0.0..5.0), r.gen_bool(0.7), None))
                .collect();
            let o = obs_from(&entries);
            let params = BsCapParams::default();
            let base = bscap_select_slot(&o, &params, &mut ChaCha8Rng::seed_from_u64(9));
            let scores: Vec<(usize, f64)> = o
                .present()
                .filter(|(_, c)| c.route)
                .map(|(s, c)| (s, 7.5 * bscap_score(c.look_ahead, c.degree, c.route, &params)))
                .collect();
            if !scores.is_empty() {
                let scaled = pick_slot(scores, true, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
                assert_eq!(base, scaled);
                assert!(o.slots[base].unwrap().route);
            }
        }
    }

    fn uav(heading: f64) -> UavState {
        UavState::new(0, Point::new(3000.0, 3000.0), heading, 20.0, CellCoord::new(30, 30))
    }

    #[test]
    fn concov_identity_cases() {
        let h = 1.1;
        let p = ConCovParams { omega: 1.0, ..Default::default() };
        assert!((concov_heading(&uav(h), &[], true, None, &p) - h).abs() < 1e-12);
        let p = ConCovParams { omega: 0.0, ..Default::default() };
        let neighbors = [Point::new(3100.0, 3000.0)];
        assert!((concov_heading(&uav(h), &neighbors, true, Some(0.3), &p) - h).abs() < 1e-12);
    }

    #[test]
    fn concov_single_neighbor_east() {
        let d = 250.0;
        let p = ConCovParams { omega: 1.0, sensing_period: 5.0, sensing_range: d };
        let neighbors = [Point::new(3000.0 + d, 3000.0)];
        let h = concov_heading(&uav(std::f64::consts::FRAC_PI_2), &neighbors, true, None, &p);
        assert!((h - 135f64.to_radians()).abs() < 1e-12, "{}", h.to_degrees());
    }

    #[test]
    fn concov_attraction_when_disconnected() {
        // heading east, routed neighbour due north, omega = 0 -> 45 degrees
        let p = ConCovParams { omega: 0.0, ..Default::default() };
        let h = concov_heading(&uav(0.0), &[], false, Some(std::f64::consts::FRAC_PI_2), &p);
        assert!((h - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn concov_guards_degenerate_vectors() {
        // attraction exactly opposite to heading cancels to zero and falls back
        let p = ConCovParams { omega: 0.0, ..Default::default() };
        let h = concov_heading(&uav(0.0), &[], false, Some(std::f64::consts::PI), &p);
        assert!(h.is_finite());
        assert!(h.abs() < 1e-12);
        let p = ConCovParams { omega: 0.5, ..Default::default() };
        let h = concov_heading(&uav(0.0), &[Point::new(3000.0, 3000.0)], false, None, &p);
        assert!(h.is_finite());
    }
}
