use std::collections::HashMap;

use super::{DestId, IngestError};

/// Environment variable capping the number of distinct destinations.
pub const MAX_DESTS_ENV: &str = "EWS_MAX_DESTS";
pub const DEFAULT_MAX_DESTS: usize = 65_536;

/// Reads `EWS_MAX_DESTS`, falling back to [`DEFAULT_MAX_DESTS`] when unset or unparseable.
pub fn max_dests_from_env() -> usize {
    std::env::var(MAX_DESTS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or(DEFAULT_MAX_DESTS)
}

/// Injective mapping from raw destination addresses (4 or 16 bytes) to
/// dense [`DestId`]s, handed out from 0 in order of first appearance.
#[derive(Debug, Clone)]
pub struct DestTable {
    ids: HashMap<Vec<u8>, DestId>,
    limit: usize,
}

impl Default for DestTable {
    fn default() -> Self {
        Self::with_limit(DEFAULT_MAX_DESTS)
    }
}

impl DestTable {
    pub fn with_limit(limit: usize) -> Self {
        Self { ids: HashMap::new(), limit }
    }

    pub fn from_env() -> Self {
        Self::with_limit(max_dests_from_env())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, raw: &[u8]) -> Option<DestId> {
        self.ids.get(raw).copied()
    }

    /// Returns the id of `raw`, assigning the next unused one if it is new.
    pub fn map_destination(&mut self, raw: &[u8]) -> Result<DestId, IngestError> {
        debug_assert!(raw.len() == 4 || raw.len() == 16);
        if let Some(id) = self.ids.get(raw) {
            return Ok(*id);
        }
        if self.ids.len() >= self.limit {
            return Err(IngestError::TooManyDestinations { limit: self.limit });
        }
        let id = DestId(self.ids.len() as u32);
        self.ids.insert(raw.to_vec(), id);
        Ok(id)
    }
}
