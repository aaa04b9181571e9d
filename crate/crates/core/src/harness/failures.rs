use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

/// Scheduled permanent UAV failures, sorted by time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FailureSchedule {
    pub events: Vec<(u8, f64)>,
}

impl FailureSchedule {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Picks `floor(n * pct / 100)` distinct UAVs and failure times uniform over
/// `(0, horizon]`. UAV ids are `1..=n`.
pub fn make_failure_schedule<R: Rng + ?Sized>(
    n_uavs: usize,
    failure_pct: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<FailureSchedule> {
    if !(0.0..=100.0).contains(&failure_pct) {
        return Err(Error::config(format!("failure_pct {failure_pct} outside [0, 100]")));
    }
    if !(horizon > 0.0) {
        return Err(Error::config(format!("failure horizon {horizon} must be positive")));
    }
    let count = ((n_uavs as f64 * failure_pct / 100.0) + 1e-9).floor() as usize;
    let count = count.min(n_uavs);
    let chosen = index::sample(rng, n_uavs, count).into_vec();
    let mut events: Vec<(u8, f64)> = chosen
        .into_iter()
        .map(|i| {
            // 1 - U with U in [0, 1) lies in (0, 1]
            let t = horizon * (1.0 - rng.gen::<f64>());
            (i as u8 + 1, t)
        })
        .collect();
    events.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(FailureSchedule { events })
}
