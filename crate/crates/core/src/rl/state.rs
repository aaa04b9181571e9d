use crate::kinematics::N_SLOTS;
use crate::policies::Observation;

pub const STATE_DIM: usize = 22;
pub const N_ACTIONS: usize = N_SLOTS;
/// Features per candidate slot.
const SLOT_FEATURES: usize = 4;
/// Degree normalization for the per-slot predicted degree.
pub const DEGREE_CAP: f64 = 10.0;
/// Normalization for the base station's node degree.
pub const BS_DEGREE_CAP: f64 = 15.0;
/// Values written into a boundary-clipped slot: fully visited, no degree,
/// no route, far away.
pub const MISSING_SLOT: [f64; SLOT_FEATURES] = [1.0, 0.0, 0.0, 1.0];

/// 22-entry DQN input; every entry in `[0, 1]`.
///
/// Layout: for each slot 0..5 `[look_ahead, degree / 10, route, distance to
/// best-routed neighbour / diagonal]`, then distance to BS / diagonal, then BS
/// degree / 15.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector(pub [f64; STATE_DIM]);

impl StateVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-slot validity mask for action selection.
pub fn action_mask(obs: &Observation) -> [bool; N_ACTIONS] {
    let mut mask = [false; N_ACTIONS];
    for (slot, _) in obs.present() {
        mask[slot] = true;
    }
    mask
}

fn unit(v: f64) -> f64 {
    if v.is_nan() {
        1.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Encodes an observation; distances are normalized by `diagonal_m`.
pub fn featurize(obs: &Observation, diagonal_m: f64) -> StateVector {
    let mut s = [0.0; STATE_DIM];
    for slot in 0..N_SLOTS {
        let base = slot * SLOT_FEATURES;
        let features = match &obs.slots[slot] {
            Some(c) => [
                unit(c.look_ahead),
                unit(c.degree / DEGREE_CAP),
                if c.route { 1.0 } else { 0.0 },
                c.best_neighbor_distance.map_or(1.0, |d| unit(d / diagonal_m)),
            ],
            None => MISSING_SLOT,
        };
        s[base..base + SLOT_FEATURES].copy_from_slice(&features);
    }
    s[20] = unit(obs.distance_to_bs / diagonal_m);
    s[21] = unit(obs.bs_degree as f64 / BS_DEGREE_CAP);
    StateVector(s)
}
