//! Train-on-miss forwarding over cached edge masks.
//!
//! A transfer consults only the local cache at each node it visits. The
//! first transfer toward a destination misses, triggers one discovery, and
//! the discovered route trains every node along it in the same pass — so
//! later transfers from anywhere on that route forward without any routing
//! work. Caches invalidate wholesale at the neighbors of a node that leaves
//! or joins (their edge ordinals may shift); everything else repairs lazily
//! from wherever a packet strands.

use std::fmt;

use crate::cache::{CacheError, NextHop, RouteTable};
use crate::discovery::{discover, Backend, DiscoveryError, Route};
use crate::graph::{Graph, GraphError, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolError {
    Graph(GraphError),
    Cache(CacheError),
    Discovery(DiscoveryError),
}

impl fmt::Display for ProtocolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolError::Graph(e) => write!(f, "{e}"),
            ProtocolError::Cache(e) => write!(f, "{e}"),
            ProtocolError::Discovery(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ProtocolError {}

impl From<GraphError> for ProtocolError {
    fn from(e: GraphError) -> ProtocolError {
        ProtocolError::Graph(e)
    }
}

impl From<CacheError> for ProtocolError {
    fn from(e: CacheError) -> ProtocolError {
        ProtocolError::Cache(e)
    }
}

impl From<DiscoveryError> for ProtocolError {
    fn from(e: DiscoveryError) -> ProtocolError {
        ProtocolError::Discovery(e)
    }
}

/// Cost of one training attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingOutcome {
    pub discoveries: u64,
    pub control_messages: u64,
    pub route_found: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryOutcome {
    Delivered,
    Undeliverable,
}

/// Everything one transfer did: where the packet went and what it cost.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryReport {
    pub outcome: DeliveryOutcome,
    /// Nodes visited in order, starting at the source. A node may repeat if
    /// a repair detoured the packet.
    pub path: Vec<NodeId>,
    pub data_hops: u64,
    pub discoveries_triggered: u64,
    pub control_messages: u64,
    /// Delivered without invoking discovery at all.
    pub cache_hit: bool,
}

impl DeliveryReport {
    pub fn delivered(&self) -> bool {
        self.outcome == DeliveryOutcome::Delivered
    }

    fn finish(mut self, outcome: DeliveryOutcome) -> DeliveryReport {
        self.outcome = outcome;
        self.cache_hit = outcome == DeliveryOutcome::Delivered && self.discoveries_triggered == 0;
        self
    }
}

/// A topology plus one route cache per node, driven by one discovery
/// backend.
#[derive(Debug, Clone)]
pub struct Network {
    graph: Graph,
    tables: Vec<RouteTable>,
    backend: Backend,
}

impl Network {
    pub fn new(graph: Graph, backend: Backend) -> Network {
        let n = graph.node_count();
        let tables = (1..=n).map(|id| RouteTable::new(NodeId::new(id), n)).collect();
        Network { graph, tables, backend }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn table(&self, v: NodeId) -> Result<&RouteTable, ProtocolError> {
        self.check_known(v)?;
        Ok(&self.tables[(v.get() - 1) as usize])
    }

    /// Mutable cache access, for pre-seeding or fault injection.
    pub fn table_mut(&mut self, v: NodeId) -> Result<&mut RouteTable, ProtocolError> {
        self.check_known(v)?;
        Ok(&mut self.tables[(v.get() - 1) as usize])
    }

    pub fn tables(&self) -> impl Iterator<Item = &RouteTable> {
        self.tables.iter()
    }

    fn check_known(&self, v: NodeId) -> Result<(), ProtocolError> {
        if !self.graph.contains(v) {
            return Err(GraphError::IdOutOfRange {
                id: v.get(),
                node_count: self.graph.node_count(),
            }
            .into());
        }
        Ok(())
    }

    fn slot(v: NodeId) -> usize {
        (v.get() - 1) as usize
    }

    /// Packets `node` has sent toward `dest`, dead nodes included.
    pub fn traffic_count(&self, node: NodeId, dest: NodeId) -> Result<u64, ProtocolError> {
        self.check_known(node)?;
        Ok(self.tables[Self::slot(node)].traffic(dest)?)
    }

    /// Total cache bytes across alive nodes.
    pub fn table_bytes_total(&self) -> u64 {
        self.graph
            .alive_nodes()
            .map(|v| self.tables[Self::slot(v)].byte_size(&self.graph))
            .sum()
    }

    /// Ensures `source` holds a usable entry for `dest`, discovering and
    /// training the whole route on a miss. A usable entry costs nothing.
    pub fn train(&mut self, source: NodeId, dest: NodeId) -> Result<TrainingOutcome, ProtocolError> {
        match self.tables[self.checked_slot(source)?].next_hop(&self.graph, dest)? {
            NextHop::Hop(_) => {
                return Ok(TrainingOutcome {
                    discoveries: 0,
                    control_messages: 0,
                    route_found: true,
                })
            }
            NextHop::Stale => {
                self.tables[Self::slot(source)].clear_entry(dest)?;
            }
            NextHop::Untrained => {}
        }
        let outcome = discover(self.backend, &self.graph, source, dest)?;
        let route_found = outcome.route.is_some();
        if let Some(route) = outcome.route {
            self.train_route(&route, dest);
        }
        Ok(TrainingOutcome {
            discoveries: 1,
            control_messages: outcome.control_messages,
            route_found,
        })
    }

    fn checked_slot(&self, v: NodeId) -> Result<usize, ProtocolError> {
        self.check_known(v)?;
        if !self.graph.is_alive(v) {
            return Err(GraphError::DeadNode { id: v.get() }.into());
        }
        Ok(Self::slot(v))
    }

    /// Writes the edge ordinal toward `dest` at every node on `route` except
    /// the destination itself. Returns how many entries were written.
    fn train_route(&mut self, route: &Route, dest: NodeId) -> usize {
        let mut written = 0;
        for pair in route.nodes().windows(2) {
            let Ok(k) = self.graph.index_edge(pair[0], pair[1]) else {
                break;
            };
            if self.tables[Self::slot(pair[0])].set_entry(dest, k).is_err() {
                break;
            }
            written += 1;
        }
        written
    }

    /// Moves one data packet from `source` to `dest` using only cached
    /// entries, training on a miss at whatever node the packet is stranded.
    /// Returns an error only for a bad source; failures to deliver are data.
    pub fn transfer(
        &mut self,
        source: NodeId,
        dest: NodeId,
    ) -> Result<DeliveryReport, ProtocolError> {
        self.checked_slot(source)?;
        let mut report = DeliveryReport {
            outcome: DeliveryOutcome::Undeliverable,
            path: vec![source],
            data_hops: 0,
            discoveries_triggered: 0,
            control_messages: 0,
            cache_hit: false,
        };
        if source == dest {
            return Ok(report.finish(DeliveryOutcome::Delivered));
        }
        if !self.graph.is_alive(dest) {
            // nothing to discover toward a missing node; drop at the source
            return Ok(report.finish(DeliveryOutcome::Undeliverable));
        }

        let budget = self.graph.node_count() as usize;
        let mut cur = source;
        loop {
            if cur == dest {
                return Ok(report.finish(DeliveryOutcome::Delivered));
            }
            if report.path.len() > budget {
                return Ok(report.finish(DeliveryOutcome::Undeliverable));
            }
            let decision = self.tables[Self::slot(cur)].next_hop(&self.graph, dest)?;
            let next = match decision {
                NextHop::Hop(next) => next,
                NextHop::Untrained | NextHop::Stale => {
                    // repair from right here: the packet waits while the
                    // route from the stranded node is discovered and trained
                    let training = self.train(cur, dest)?;
                    report.discoveries_triggered += training.discoveries;
                    report.control_messages += training.control_messages;
                    if !training.route_found {
                        return Ok(report.finish(DeliveryOutcome::Undeliverable));
                    }
                    match self.tables[Self::slot(cur)].next_hop(&self.graph, dest)? {
                        NextHop::Hop(next) => next,
                        // training just wrote this entry; anything else
                        // means the cache cannot make progress
                        _ => return Ok(report.finish(DeliveryOutcome::Undeliverable)),
                    }
                }
            };
            self.tables[Self::slot(cur)].record_forward(dest)?;
            report.data_hops += 1;
            report.path.push(next);
            cur = next;
        }
    }

    /// Takes `v` out of the network. Every former neighbor's whole cache is
    /// dropped — their edge ordinals may have shifted — while the rest of
    /// the network keeps its entries. Returns how many neighbor caches were
    /// dropped.
    pub fn remove_node(&mut self, v: NodeId) -> Result<usize, ProtocolError> {
        let former = self.graph.remove_node(v)?;
        for &u in &former {
            self.tables[Self::slot(u)].invalidate_for_topology_change(true);
        }
        Ok(former.len())
    }

    /// Adds node `id` wired to `neighbors`. Each new neighbor's cache is
    /// dropped under the same rule as removal; every table gains a slot for
    /// the new destination.
    pub fn add_node(&mut self, id: u32, neighbors: &[u32]) -> Result<NodeId, ProtocolError> {
        let v = self.graph.add_node(id, neighbors)?;
        let n = self.graph.node_count();
        for t in &mut self.tables {
            t.grow(n);
        }
        self.tables.push(RouteTable::new(v, n));
        for &u in neighbors {
            self.tables[Self::slot(NodeId::new(u))].invalidate_for_topology_change(true);
        }
        Ok(v)
    }
}
