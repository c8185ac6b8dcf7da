//! Per-node route cache: one single-bit mask per destination.
//!
//! A trained entry stores the ordinal `k` of the outgoing edge toward a
//! destination as the value `2^(k-1)` — exactly one bit set, so a whole
//! forwarding decision costs one bit of state per destination and decodes
//! with a trailing-zero count instead of a table walk.

use std::fmt;

use crate::graph::{Graph, GraphError, NodeId};

/// Widest edge ordinal a mask can hold.
pub const MASK_WIDTH: u32 = 128;

#[derive(Debug, Clone, PartialEq)]
pub enum CacheError {
    OrdinalZero,
    OrdinalTooWide { ordinal: u32 },
    UntrainedMask,
    CorruptMask { bits: u32 },
    OwnerAsDestination { owner: u32 },
    DestinationOutOfRange { dest: u32, node_count: u32 },
    DeadOwner { owner: u32 },
}

impl fmt::Display for CacheError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CacheError::OrdinalZero => write!(f, "edge ordinals start at 1"),
            CacheError::OrdinalTooWide { ordinal } => {
                write!(f, "edge ordinal {ordinal} exceeds mask width {MASK_WIDTH}")
            }
            CacheError::UntrainedMask => write!(f, "mask holds no trained edge"),
            CacheError::CorruptMask { bits } => {
                write!(f, "mask has {bits} bits set, expected exactly one")
            }
            CacheError::OwnerAsDestination { owner } => {
                write!(f, "table owner {owner} cannot be its own destination")
            }
            CacheError::DestinationOutOfRange { dest, node_count } => {
                write!(f, "destination {dest} out of range 1..={node_count}")
            }
            CacheError::DeadOwner { owner } => write!(f, "table owner {owner} is not alive"),
        }
    }
}

impl std::error::Error for CacheError {}

/// Zero-or-one-bit cache value. Zero means untrained; `2^(k-1)` caches edge
/// ordinal `k`.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct EdgeMask(u128);

impl EdgeMask {
    pub const UNTRAINED: EdgeMask = EdgeMask(0);

    /// Encodes edge ordinal `k` (1-based) as the single bit `2^(k-1)`.
    pub fn encode(k: u32) -> Result<EdgeMask, CacheError> {
        if k == 0 {
            return Err(CacheError::OrdinalZero);
        }
        if k > MASK_WIDTH {
            return Err(CacheError::OrdinalTooWide { ordinal: k });
        }
        Ok(EdgeMask(1u128 << (k - 1)))
    }

    /// Recovers the edge ordinal: position of the single set bit, 1-based.
    pub fn decode(self) -> Result<u32, CacheError> {
        match self.0.count_ones() {
            0 => Err(CacheError::UntrainedMask),
            1 => Ok(self.0.trailing_zeros() + 1),
            bits => Err(CacheError::CorruptMask { bits }),
        }
    }

    pub fn is_trained(self) -> bool {
        self.0 != 0
    }

    pub fn bits(self) -> u128 {
        self.0
    }
}

impl fmt::Debug for EdgeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EdgeMask({:b})", self.0)
    }
}

/// Forwarding decision for one destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextHop {
    /// Trained entry resolved to an alive neighbor.
    Hop(NodeId),
    /// No entry for this destination yet.
    Untrained,
    /// Entry exists but its ordinal no longer resolves at the current
    /// topology (neighborhood shrank since training).
    Stale,
}

/// One node's cache: a mask and a sent-packet counter per destination.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteTable {
    owner: NodeId,
    entries: Vec<EdgeMask>,
    traffic: Vec<u64>,
}

impl RouteTable {
    pub fn new(owner: NodeId, node_count: u32) -> RouteTable {
        RouteTable {
            owner,
            entries: vec![EdgeMask::UNTRAINED; node_count as usize],
            traffic: vec![0; node_count as usize],
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    fn slot(&self, dest: NodeId) -> Result<usize, CacheError> {
        let d = dest.get();
        if d < 1 || d as usize > self.entries.len() {
            return Err(CacheError::DestinationOutOfRange {
                dest: d,
                node_count: self.entries.len() as u32,
            });
        }
        if dest == self.owner {
            return Err(CacheError::OwnerAsDestination { owner: self.owner.get() });
        }
        Ok((d - 1) as usize)
    }

    /// Caches edge ordinal `k` for `dest`. A later write overwrites an
    /// earlier one.
    pub fn set_entry(&mut self, dest: NodeId, k: u32) -> Result<(), CacheError> {
        let slot = self.slot(dest)?;
        self.entries[slot] = EdgeMask::encode(k)?;
        Ok(())
    }

    pub fn entry(&self, dest: NodeId) -> Result<EdgeMask, CacheError> {
        Ok(self.entries[self.slot(dest)?])
    }

    /// Resolves the cached mask for `dest` against the current topology.
    pub fn next_hop(&self, graph: &Graph, dest: NodeId) -> Result<NextHop, CacheError> {
        if !graph.is_alive(self.owner) {
            return Err(CacheError::DeadOwner { owner: self.owner.get() });
        }
        let mask = self.entry(dest)?;
        if !mask.is_trained() {
            return Ok(NextHop::Untrained);
        }
        let k = mask.decode()?;
        match graph.index_vertex(self.owner, k) {
            Ok(v) => Ok(NextHop::Hop(v)),
            Err(GraphError::OrdinalOutOfRange { .. }) => Ok(NextHop::Stale),
            // owner aliveness was checked above; other errors cannot occur
            Err(e) => unreachable!("ordinal resolution failed: {e}"),
        }
    }

    /// Clears one entry. Returns whether it was trained.
    pub fn clear_entry(&mut self, dest: NodeId) -> Result<bool, CacheError> {
        let slot = self.slot(dest)?;
        let was = self.entries[slot].is_trained();
        self.entries[slot] = EdgeMask::UNTRAINED;
        Ok(was)
    }

    /// Clears every entry, returning how many were trained. Traffic counts
    /// survive; they describe the past, not the topology.
    pub fn clear_all(&mut self) -> usize {
        let trained = self.entries.iter().filter(|m| m.is_trained()).count();
        self.entries.fill(EdgeMask::UNTRAINED);
        trained
    }

    /// Invalidation hook for a neighbor's departure or arrival: every ordinal
    /// at this node may have shifted, so the whole table goes. Non-neighbors
    /// keep their entries (resolution detects the rare stale ordinal lazily).
    pub fn invalidate_for_topology_change(&mut self, was_adjacent: bool) -> usize {
        if was_adjacent {
            self.clear_all()
        } else {
            0
        }
    }

    /// Bytes this table occupies: one mask of `ceil(degree/8)` bytes (at
    /// least one) per possible destination.
    pub fn byte_size(&self, graph: &Graph) -> u64 {
        let mask_bytes = (graph.degree(self.owner) as u64).div_ceil(8).max(1);
        self.entries.len() as u64 * mask_bytes
    }

    /// Extends the destination axis after a node joins.
    pub fn grow(&mut self, node_count: u32) {
        let n = node_count as usize;
        if n > self.entries.len() {
            self.entries.resize(n, EdgeMask::UNTRAINED);
            self.traffic.resize(n, 0);
        }
    }

    /// Counts one packet sent from this node toward `dest`.
    pub fn record_forward(&mut self, dest: NodeId) -> Result<(), CacheError> {
        let slot = self.slot(dest)?;
        self.traffic[slot] += 1;
        Ok(())
    }

    pub fn traffic(&self, dest: NodeId) -> Result<u64, CacheError> {
        Ok(self.traffic[self.slot(dest)?])
    }

    /// Trained `(destination, ordinal)` pairs in destination order.
    pub fn trained_entries(&self) -> impl Iterator<Item = (NodeId, u32)> + '_ {
        self.entries.iter().enumerate().filter_map(|(i, m)| {
            m.decode().ok().map(|k| (NodeId::new(i as u32 + 1), k))
        })
    }

    /// Nonzero `(destination, packets sent)` counters in destination order.
    pub fn traffic_entries(&self) -> impl Iterator<Item = (NodeId, u64)> + '_ {
        self.traffic
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(i, &c)| (NodeId::new(i as u32 + 1), c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn n(id: u32) -> NodeId {
        NodeId::new(id)
    }

    fn desk() -> Graph {
        Graph::build(5, &[(1, 3), (1, 4), (2, 4), (3, 5), (4, 5)]).unwrap()
    }

    #[test]
    fn encode_second_edge_is_binary_10() {
        let m = EdgeMask::encode(2).unwrap();
        assert_eq!(m.bits(), 0b10);
        assert_eq!(m.decode().unwrap(), 2);
        assert_eq!(format!("{m:?}"), "EdgeMask(10)");
    }

    #[test]
    fn encode_decode_round_trip_full_width() {
        for k in 1..=MASK_WIDTH {
            let m = EdgeMask::encode(k).unwrap();
            assert_eq!(m.bits().count_ones(), 1);
            assert_eq!(m.decode().unwrap(), k);
        }
    }

    #[test]
    fn encode_rejects_out_of_width() {
        assert_eq!(EdgeMask::encode(0).unwrap_err(), CacheError::OrdinalZero);
        assert_eq!(
            EdgeMask::encode(MASK_WIDTH + 1).unwrap_err(),
            CacheError::OrdinalTooWide { ordinal: 129 }
        );
    }

    #[test]
    fn decode_flags_untrained_and_corrupt() {
        assert_eq!(EdgeMask::UNTRAINED.decode().unwrap_err(), CacheError::UntrainedMask);
        assert!(!EdgeMask::UNTRAINED.is_trained());
        let corrupt = EdgeMask(0b101);
        assert_eq!(corrupt.decode().unwrap_err(), CacheError::CorruptMask { bits: 2 });
    }

    #[test]
    fn table_stores_and_resolves() {
        let g = desk();
        let mut t = RouteTable::new(n(1), 5);
        t.set_entry(n(2), 2).unwrap(); // 1's second edge leads to 4
        assert_eq!(t.entry(n(2)).unwrap().bits(), 0b10);
        assert_eq!(t.next_hop(&g, n(2)).unwrap(), NextHop::Hop(n(4)));
        assert_eq!(t.next_hop(&g, n(5)).unwrap(), NextHop::Untrained);
    }

    #[test]
    fn owner_is_not_a_destination() {
        let mut t = RouteTable::new(n(3), 5);
        assert_eq!(
            t.set_entry(n(3), 1).unwrap_err(),
            CacheError::OwnerAsDestination { owner: 3 }
        );
        assert_eq!(
            t.entry(n(9)).unwrap_err(),
            CacheError::DestinationOutOfRange { dest: 9, node_count: 5 }
        );
    }

    #[test]
    fn stale_when_neighborhood_shrinks() {
        let mut g = desk();
        let mut t = RouteTable::new(n(4), 5);
        t.set_entry(n(5), 3).unwrap(); // 4's third edge leads to 5
        assert_eq!(t.next_hop(&g, n(5)).unwrap(), NextHop::Hop(n(5)));
        g.remove_node(n(1)).unwrap(); // 4's degree drops to 2; ordinal 3 dangles
        assert_eq!(t.next_hop(&g, n(5)).unwrap(), NextHop::Stale);
    }

    #[test]
    fn dead_owner_cannot_resolve() {
        let mut g = desk();
        let t = RouteTable::new(n(2), 5);
        g.remove_node(n(2)).unwrap();
        assert_eq!(t.next_hop(&g, n(5)).unwrap_err(), CacheError::DeadOwner { owner: 2 });
    }

    #[test]
    fn clear_all_reports_trained_count_and_keeps_traffic() {
        let mut t = RouteTable::new(n(1), 5);
        t.set_entry(n(2), 2).unwrap();
        t.set_entry(n(5), 1).unwrap();
        t.record_forward(n(2)).unwrap();
        assert_eq!(t.clear_all(), 2);
        assert_eq!(t.clear_all(), 0);
        assert_eq!(t.traffic(n(2)).unwrap(), 1);
        assert_eq!(t.next_hop(&desk(), n(2)).unwrap(), NextHop::Untrained);
    }

    #[test]
    fn invalidation_only_touches_neighbors() {
        let mut t = RouteTable::new(n(1), 5);
        t.set_entry(n(2), 2).unwrap();
        assert_eq!(t.invalidate_for_topology_change(false), 0);
        assert!(t.entry(n(2)).unwrap().is_trained());
        assert_eq!(t.invalidate_for_topology_change(true), 1);
        assert!(!t.entry(n(2)).unwrap().is_trained());
    }

    #[test]
    fn byte_size_one_byte_per_destination_at_low_degree() {
        let g = desk();
        for id in 1..=5 {
            let t = RouteTable::new(n(id), 5);
            assert_eq!(t.byte_size(&g), 5);
        }
        let lone = Graph::build(1, &[]).unwrap();
        assert_eq!(RouteTable::new(n(1), 1).byte_size(&lone), 1);
    }

    #[test]
    fn byte_size_widens_with_degree() {
        // star center with nine spokes needs two bytes per destination
        let edges: Vec<(u32, u32)> = (2..=10).map(|j| (1, j)).collect();
        let g = Graph::build(10, &edges).unwrap();
        assert_eq!(RouteTable::new(n(1), 10).byte_size(&g), 20);
        assert_eq!(RouteTable::new(n(2), 10).byte_size(&g), 10);
    }

    #[test]
    fn traffic_counts_accumulate_per_destination() {
        let mut t = RouteTable::new(n(4), 5);
        for _ in 0..5 {
            t.record_forward(n(2)).unwrap();
        }
        t.record_forward(n(5)).unwrap();
        assert_eq!(t.traffic(n(2)).unwrap(), 5);
        assert_eq!(t.traffic(n(5)).unwrap(), 1);
        assert_eq!(t.traffic(n(3)).unwrap(), 0);
    }

    #[test]
    fn grow_preserves_existing_state() {
        let mut t = RouteTable::new(n(1), 3);
        t.set_entry(n(2), 1).unwrap();
        t.record_forward(n(2)).unwrap();
        t.grow(5);
        assert_eq!(t.entry(n(2)).unwrap().decode().unwrap(), 1);
        assert_eq!(t.traffic(n(2)).unwrap(), 1);
        assert_eq!(t.next_hop(&desk(), n(5)).unwrap(), NextHop::Untrained);
    }

    #[test]
    fn trained_entries_lists_in_destination_order() {
        let mut t = RouteTable::new(n(4), 5);
        t.set_entry(n(5), 3).unwrap();
        t.set_entry(n(2), 2).unwrap();
        let pairs: Vec<_> = t.trained_entries().collect();
        assert_eq!(pairs, vec![(n(2), 2), (n(5), 3)]);
    }
}
