//! Fixed-equipment hierarchy: one root server over a row of leaf servers.

use super::{EndpointId, ProtocolError};

/// The backend server topology.
///
/// A deployment runs one root (FE id 0) coordinating `leaf_count` leaves
/// (FE ids 1..=leaf_count). Every user device and object is pinned to
/// exactly one leaf by a deterministic hash of its id, so repeated runs
/// shard identically. The root holds no data of its own; it exists so a
/// leaf can resolve queries that span the whole tree.
#[derive(Debug, Clone)]
pub struct FeTree {
    root: EndpointId,
    leaves: Vec<EndpointId>,
}

impl FeTree {
    pub fn new(leaf_count: usize) -> Result<Self, ProtocolError> {
        if leaf_count == 0 {
            return Err(ProtocolError::NoLeaves);
        }
        let leaves = (1..=leaf_count as u64).map(EndpointId::fe).collect();
        Ok(Self { root: EndpointId::fe(0), leaves })
    }

    pub fn root(&self) -> EndpointId {
        self.root
    }

    pub fn leaves(&self) -> &[EndpointId] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Leaf server responsible for the endpoint with this raw id.
    pub fn leaf_for(&self, endpoint_id: u64) -> EndpointId {
        let slot = splitmix64(endpoint_id) % self.leaves.len() as u64;
        self.leaves[slot as usize]
    }
}

/// Finalizer of the splitmix64 generator, used as an id-scrambling hash so
/// that consecutive ids do not all land on the same leaf.
fn splitmix64(id: u64) -> u64 {
    let mut z = id.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
