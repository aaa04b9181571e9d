//! Fixed-wing point-mass kinematics: heading sectors, the five forward-facing
//! candidate waypoints, and bounded-turn-rate motion toward a waypoint.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use crate::grid::{CellCoord, GridSpec, Point};

/// Waypoint spacing in cells.
pub const WAYPOINT_SPACING: i32 = 2;
/// Default turn-rate limit, rad/s (30 deg/s).
pub const MAX_TURN_RATE: f64 = 30.0 * PI / 180.0;
/// Kinematic integration step, seconds.
pub const DT: f64 = 0.1;
pub const N_SECTORS: u8 = 8;
/// Number of forward-facing candidate slots.
pub const N_SLOTS: usize = 5;
/// Slot holding the straight-ahead candidate.
pub const STRAIGHT_SLOT: usize = 2;

/// Unit compass offsets for sectors 0..8, counterclockwise from +x.
const COMPASS: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

#[derive(Debug, Clone, PartialEq)]
pub struct UavState {
    /// 7-bit identifier.
    pub id: u8,
    pub position: Point,
    /// Radians in `[0, 2pi)`, counterclockwise from +x.
    pub heading: f64,
    /// Meters per second; constant for a run.
    pub speed: f64,
    pub waypoint: CellCoord,
    pub alive: bool,
}

impl UavState {
    pub fn new(id: u8, position: Point, heading: f64, speed: f64, waypoint: CellCoord) -> Self {
        Self {
            id,
            position,
            heading: normalize_angle(heading),
            speed,
            waypoint,
            alive: true,
        }
    }
}

/// Wraps an angle into `[0, 2pi)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn angle_diff(a: f64) -> f64 {
    let mut d = a.rem_euclid(TAU);
    if d > PI {
        d -= TAU;
    }
    d
}

/// Nearest of the 8 compass sectors; sector 0 is +x, counterclockwise.
pub fn discretize_heading(heading: f64) -> u8 {
    ((normalize_angle(heading) / FRAC_PI_4).round() as i64).rem_euclid(N_SECTORS as i64) as u8
}

pub fn sector_angle(sector: u8) -> f64 {
    (sector % N_SECTORS) as f64 * FRAC_PI_4
}

/// Cell offset of the waypoint in a compass sector.
pub fn sector_offset(sector: u8) -> (i32, i32) {
    let (dx, dy) = COMPASS[(sector % N_SECTORS) as usize];
    (dx * WAYPOINT_SPACING, dy * WAYPOINT_SPACING)
}

/// Five forward-facing waypoints. Slot `j` holds the waypoint in sector
/// `sector + j - 2 (mod 8)`, so slot 2 is straight ahead and slots 0/4 are the
/// hardest turns. Off-grid slots are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateSet {
    pub sector: u8,
    pub slots: [Option<CellCoord>; N_SLOTS],
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.slots.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, slot: usize) -> Option<CellCoord> {
        self.slots.get(slot).copied().flatten()
    }

    /// Present candidates with their slot index, in slot order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, CellCoord)> + '_ {
        self.slots.iter().enumerate().filter_map(|(i, c)| c.map(|c| (i, c)))
    }

    pub fn slot_sector(&self, slot: usize) -> u8 {
        slot_sector(self.sector, slot)
    }

    /// Absolute turn, in sectors, implied by a slot.
    pub fn turn(slot: usize) -> usize {
        slot.abs_diff(STRAIGHT_SLOT)
    }
}

fn slot_sector(sector: u8, slot: usize) -> u8 {
    ((sector as i32 + slot as i32 - STRAIGHT_SLOT as i32).rem_euclid(N_SECTORS as i32)) as u8
}

fn window(cell: CellCoord, sector: u8, grid: &GridSpec) -> CandidateSet {
    let mut slots = [None; N_SLOTS];
    for (slot, entry) in slots.iter_mut().enumerate() {
        let (dx, dy) = sector_offset(slot_sector(sector, slot));
        let c = cell.offset(dx, dy);
        if grid.contains(c) {
            *entry = Some(c);
        }
    }
    CandidateSet { sector, slots }
}

/// Forward-facing candidates from the UAV's current cell.
///
/// If every forward cell is off the map (heading straight out of a corner),
/// the window is rotated to the nearest sector that has an in-bounds waypoint.
pub fn candidate_waypoints(state: &UavState, grid: &GridSpec) -> CandidateSet {
    let cell = grid.cell_of(state.position);
    let sector = discretize_heading(state.heading);
    let set = window(cell, sector, grid);
    if !set.is_empty() {
        return set;
    }
    for step in 1..=4i32 {
        for sign in [1, -1] {
            let s = (sector as i32 + sign * step).rem_euclid(N_SECTORS as i32) as u8;
            let rotated = window(cell, s, grid);
            if !rotated.is_empty() {
                return rotated;
            }
        }
    }
    set
}

/// Turns toward the waypoint centre by at most `max_turn_rate * dt`, then
/// advances `speed * dt` along the new heading.
///
/// When the waypoint lies inside the turning circle on the side the UAV would
/// turn toward, the heading is held until the waypoint leaves that circle;
/// pure pursuit would otherwise orbit it forever.
pub fn step_motion(state: &UavState, grid: &GridSpec, dt: f64, max_turn_rate: f64) -> UavState {
    let mut next = state.clone();
    let target = grid.center(state.waypoint);
    let error = angle_diff(state.position.bearing_to(target) - state.heading);
    let max_turn = max_turn_rate * dt;

    let radius = state.speed / max_turn_rate;
    let side = if error >= 0.0 { 1.0 } else { -1.0 };
    let pivot = Point::new(
        state.position.x - side * radius * state.heading.sin(),
        state.position.y + side * radius * state.heading.cos(),
    );
    let turn = if pivot.distance(target) < radius {
        0.0
    } else {
        error.clamp(-max_turn, max_turn)
    };

    next.heading = normalize_angle(state.heading + turn);
    let step = state.speed * dt;
    let moved = Point::new(
        state.position.x + step * next.heading.cos(),
        state.position.y + step * next.heading.sin(),
    );
    next.position = grid.clamp_point(moved);
    next
}

/// Turns toward `desired` by at most `max_turn_rate * dt` and advances.
///
/// A step that would cross a map edge reflects both the heading and the
/// desired heading off that edge first. Returns the new state and the
/// (possibly reflected) desired heading.
pub fn step_heading(state: &UavState, desired: f64, grid: &GridSpec, dt: f64, max_turn_rate: f64) -> (UavState, f64) {
    let mut next = state.clone();
    let mut desired = normalize_angle(desired);
    let max_turn = max_turn_rate * dt;
    let error = angle_diff(desired - state.heading);
    let mut heading = normalize_angle(state.heading + error.clamp(-max_turn, max_turn));
    let step = state.speed * dt;

    let (w, h) = (grid.width_m(), grid.height_m());
    let nx = state.position.x + step * heading.cos();
    let ny = state.position.y + step * heading.sin();
    if nx < 0.0 || nx > w {
        heading = normalize_angle(PI - heading);
        desired = normalize_angle(PI - desired);
    }
    if ny < 0.0 || ny > h {
        heading = normalize_angle(-heading);
        desired = normalize_angle(-desired);
    }

    next.heading = heading;
    next.position = grid.clamp_point(Point::new(
        state.position.x + step * heading.cos(),
        state.position.y + step * heading.sin(),
    ));
    (next, desired)
}

/// True once the UAV is within half a cell of its waypoint centre.
pub fn reached(state: &UavState, grid: &GridSpec) -> bool {
    state.position.distance(grid.center(state.waypoint)) < 0.5 * grid.cell_size
}
