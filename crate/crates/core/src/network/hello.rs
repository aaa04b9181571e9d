//! 24-byte hello beacon.
//!
//! Fields are packed most-significant-bit first, in this order:
//!
//! | field        | bits | notes                                        |
//! |--------------|------|----------------------------------------------|
//! | uav id       | 7    | 127 is reserved for the base station         |
//! | x            | 9    | 10 m steps, saturates at 5110 m              |
//! | y            | 9    | 10 m steps, saturates at 5110 m              |
//! | waypoint     | 12   | row-major cell index, must be < 3600         |
//! | patch        | 150  | 25 x 6-bit levels, row-major                 |
//! | hop count    | 4    | shortest known route to the BS, 15 = none    |
//! | padding      | 1    | zero                                         |

use crate::error::{Error, Result};
use crate::grid::Point;
use crate::pheromone::{MAX_LEVEL, PATCH_CELLS};

pub const HELLO_BYTES: usize = 24;
/// Identifier carried by base-station beacons.
pub const BS_ID: u8 = 127;
pub const MAX_ID: u8 = 127;
/// Hop count meaning "no route".
pub const NO_ROUTE: u8 = 15;
/// Position quantization step, meters.
pub const POSITION_STEP_M: f64 = 10.0;
pub const MAX_POSITION_LEVEL: u16 = (1 << 9) - 1;
/// Exclusive upper bound on the waypoint cell index (60 x 60 grid).
pub const WAYPOINT_LIMIT: u16 = 3600;

/// A hello beacon in wire resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HelloMessage {
    pub uav_id: u8,
    /// Quantized x in 10 m steps.
    pub x: u16,
    /// Quantized y in 10 m steps.
    pub y: u16,
    pub waypoint: u16,
    pub patch: [u8; PATCH_CELLS],
    pub hops: u8,
}

pub fn quantize_position(meters: f64) -> u16 {
    let q = (meters.max(0.0) / POSITION_STEP_M).round();
    if q >= MAX_POSITION_LEVEL as f64 {
        MAX_POSITION_LEVEL
    } else {
        q as u16
    }
}

impl HelloMessage {
    pub fn new(uav_id: u8, position: Point, waypoint: u16, patch: [u8; PATCH_CELLS], hops: u8) -> Self {
        Self {
            uav_id,
            x: quantize_position(position.x),
            y: quantize_position(position.y),
            waypoint,
            patch,
            hops: hops.min(NO_ROUTE),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x as f64 * POSITION_STEP_M, self.y as f64 * POSITION_STEP_M)
    }

    fn validate(&self) -> Result<()> {
        if self.uav_id > MAX_ID {
            return Err(Error::HelloInvalid(format!("id {} exceeds 7 bits", self.uav_id)));
        }
        if self.x > MAX_POSITION_LEVEL || self.y > MAX_POSITION_LEVEL {
            return Err(Error::HelloInvalid("position exceeds 9 bits per axis".into()));
        }
        if self.waypoint >= WAYPOINT_LIMIT {
            return Err(Error::HelloInvalid(format!("waypoint index {}", self.waypoint)));
        }
        if let Some(l) = self.patch.iter().find(|&&l| l > MAX_LEVEL) {
            return Err(Error::HelloInvalid(format!("patch level {l} exceeds 6 bits")));
        }
        if self.hops > NO_ROUTE {
            return Err(Error::HelloInvalid(format!("hop count {}", self.hops)));
        }
        Ok(())
    }

    pub fn encode(&self) -> Result<[u8; HELLO_BYTES]> {
        self.validate()?;
        let mut w = BitWriter::default();
        w.put(self.uav_id as u32, 7);
        w.put(self.x as u32, 9);
        w.put(self.y as u32, 9);
        w.put(self.waypoint as u32, 12);
        for &level in &self.patch {
            w.put(level as u32, 6);
        }
        w.put(self.hops as u32, 4);
        w.put(0, 1);
        debug_assert_eq!(w.bit, HELLO_BYTES * 8);
        Ok(w.buf)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != HELLO_BYTES {
            return Err(Error::HelloLength {
                expected: HELLO_BYTES,
                actual: bytes.len(),
            });
        }
        let mut r = BitReader { buf: bytes, bit: 0 };
        let uav_id = r.take(7) as u8;
        let x = r.take(9) as u16;
        let y = r.take(9) as u16;
        let waypoint = r.take(12) as u16;
        let mut patch = [0u8; PATCH_CELLS];
        for level in patch.iter_mut() {
            *level = r.take(6) as u8;
        }
        let hops = r.take(4) as u8;
        if r.take(1) != 0 {
            return Err(Error::HelloInvalid("padding bit set".into()));
        }
        let msg = Self {
            uav_id,
            x,
            y,
            waypoint,
            patch,
            hops,
        };
        msg.validate()?;
        Ok(msg)
    }
}

#[derive(Default)]
struct BitWriter {
    buf: [u8; HELLO_BYTES],
    bit: usize,
}

impl BitWriter {
    fn put(&mut self, value: u32, width: usize) {
        for k in (0..width).rev() {
            if (value >> k) & 1 == 1 {
                self.buf[self.bit / 8] |= 0x80 >> (self.bit % 8);
            }
            self.bit += 1;
        }
    }
}

struct BitReader<'a> {
    buf: &'a [u8],
    bit: usize,
}

impl BitReader<'_> {
    fn take(&mut self, width: usize) -> u32 {
        let mut v = 0u32;
        for _ in 0..width {
            let b = (self.buf[self.bit / 8] >> (7 - self.bit % 8)) & 1;
            v = (v << 1) | b as u32;
            self.bit += 1;
        }
        v
    }
}
