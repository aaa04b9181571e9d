use std::collections::BTreeMap;

use crate::grid::{CellCoord, GridSpec, Point};
use crate::pheromone::PheromonePatch;

use super::hello::{HelloMessage, BS_ID, NO_ROUTE};

/// Hello period, seconds.
pub const HELLO_PERIOD_S: f64 = 2.0;
/// Records older than this are dropped.
pub const STALENESS_S: f64 = 2.5 * HELLO_PERIOD_S;

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborRecord {
    pub id: u8,
    pub position: Point,
    pub waypoint: CellCoord,
    pub hops: u8,
    pub last_heard: f64,
    pub patch: PheromonePatch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsRecord {
    pub position: Point,
    pub degree: u8,
    pub last_heard: f64,
}

/// One UAV's view of its 1-hop neighbourhood, built from received hellos.
#[derive(Debug, Clone, Default)]
pub struct NeighborTable {
    records: BTreeMap<u8, NeighborRecord>,
    bs: Option<BsRecord>,
}

impl NeighborTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores a decoded hello heard at time `now`.
    pub fn receive(&mut self, msg: &HelloMessage, grid: &GridSpec, now: f64) {
        if msg.uav_id == BS_ID && msg.hops == 0 {
            self.bs = Some(BsRecord {
                position: msg.position(),
                degree: msg.patch[0],
                last_heard: now,
            });
            return;
        }
        let waypoint = grid.cell_at_index(msg.waypoint as usize);
        let center = grid.cell_of(msg.position());
        self.records.insert(
            msg.uav_id,
            NeighborRecord {
                id: msg.uav_id,
                position: msg.position(),
                waypoint,
                hops: msg.hops.min(NO_ROUTE),
                last_heard: now,
                patch: PheromonePatch {
                    center,
                    levels: msg.patch,
                },
            },
        );
    }

    /// Drops every record last heard more than `staleness` seconds ago.
    pub fn evict(&mut self, now: f64, staleness: f64) {
        self.records.retain(|_, r| now - r.last_heard <= staleness);
        if self.bs.is_some_and(|b| now - b.last_heard > staleness) {
            self.bs = None;
        }
    }

    pub fn forget(&mut self, id: u8) {
        self.records.remove(&id);
    }

    pub fn neighbors(&self) -> impl Iterator<Item = &NeighborRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn bs_direct(&self) -> bool {
        self.bs.is_some()
    }

    pub fn bs(&self) -> Option<&BsRecord> {
        self.bs.as_ref()
    }

    pub fn bs_degree(&self) -> u8 {
        self.bs.map_or(0, |b| b.degree)
    }

    /// Neighbour advertising the shortest route to the BS. Ties go to the
    /// lowest id.
    pub fn best_routed_neighbor(&self) -> Option<&NeighborRecord> {
        self.records
            .values()
            .filter(|r| r.hops < NO_ROUTE)
            .min_by_key(|r| (r.hops, r.id))
    }

    pub fn insert_record(&mut self, record: NeighborRecord) {
        self.records.insert(record.id, record);
    }

    pub fn set_bs(&mut self, bs: Option<BsRecord>) {
        self.bs = bs;
    }
}
