//! Frame-memory recurrence.
//!
//! Video decoders in this family carry a recurrent state from frame to
//! frame so earlier observations can sharpen later ones. The recurrence has
//! one hard rule: at a key-frame timestep the decoder's output IS the key
//! frame (the color sensor delivered the real thing), and the carried state
//! resets to zero so stale context cannot leak across key boundaries.

use crate::error::Result;

use super::FeatureMap;

/// Recurrent state driver. The cell itself is a caller-supplied function
/// from (input, state) to (output, next state).
#[derive(Debug, Clone)]
pub struct FrameMemory {
    state: FeatureMap,
}

impl FrameMemory {
    /// Fresh memory with an all-zero state of the given shape.
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self {
            state: FeatureMap::zeros(width, height, channels),
        }
    }

    pub fn state(&self) -> &FeatureMap {
        &self.state
    }

    /// Advance one timestep.
    ///
    /// * Key step: the input passes through bit for bit and the state is
    ///   zeroed. The cell is not consulted.
    /// * Regular step: the cell maps (input, state) to (output, new state).
    pub fn step<F>(&mut self, input: &FeatureMap, is_key: bool, cell: F) -> Result<FeatureMap>
    where
        F: FnOnce(&FeatureMap, &FeatureMap) -> Result<(FeatureMap, FeatureMap)>,
    {
        if is_key {
            let (w, h, c) = self.state.shape();
            self.state = FeatureMap::zeros(w, h, c);
            return Ok(input.clone());
        }
        let (output, next) = cell(input, &self.state)?;
        self.state = next;
        Ok(output)
    }
}
