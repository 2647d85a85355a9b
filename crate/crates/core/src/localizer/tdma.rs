use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{AnchorFrame, MAX_ANCHORS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub anchor_id: u8,
    /// s from the start of the round.
    pub start: f64,
    /// s.
    pub length: f64,
}

/// Consecutive default-length frame slots in ascending id order.
pub fn tdma_schedule(anchor_ids: &[u8]) -> Result<Vec<Slot>> {
    tdma_schedule_with(anchor_ids, AnchorFrame::default().duration())
}

pub fn tdma_schedule_with(anchor_ids: &[u8], slot_length: f64) -> Result<Vec<Slot>> {
    if anchor_ids.len() > MAX_ANCHORS {
        return Err(Error::Capacity {
            count: anchor_ids.len(),
            max: MAX_ANCHORS,
        });
    }
    if !(slot_length > 0.0) {
        return Err(Error::InvalidArgument("slot length must be positive".into()));
    }
    let mut ids = anchor_ids.to_vec();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("duplicate anchor ids in schedule".into()));
    }
    if let Some(&id) = ids.iter().find(|&&id| id as usize >= MAX_ANCHORS) {
        return Err(Error::InvalidArgument(format!("anchor id {id} exceeds 7 bits")));
    }
    Ok(ids
        .into_iter()
        .enumerate()
        .map(|(i, anchor_id)| Slot {
            anchor_id,
            start: i as f64 * slot_length,
            length: slot_length,
        })
        .collect())
}
