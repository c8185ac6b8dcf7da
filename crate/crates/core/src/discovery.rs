//! Route discovery backends.
//!
//! Two interchangeable strategies produce the same kind of answer — a
//! min-cost route plus the number of control messages spent finding it:
//!
//! * `LinkState` assumes every node already holds the full topology, so a
//!   route costs zero control messages to compute.
//! * `Flood` models a request flood: each node rebroadcasts the request once
//!   to every alive neighbor except the link it arrived on, and the
//!   destination unicasts a reply back along the discovered path. Every
//!   per-link transmission counts.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::graph::{Graph, GraphError, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    LinkState,
    Flood,
}

impl Backend {
    pub const ALL: [Backend; 2] = [Backend::LinkState, Backend::Flood];

    pub fn name(self) -> &'static str {
        match self {
            Backend::LinkState => "link_state",
            Backend::Flood => "flood",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownBackend(pub String);

impl fmt::Display for UnknownBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown backend {:?}, expected link_state or flood", self.0)
    }
}

impl std::error::Error for UnknownBackend {}

impl FromStr for Backend {
    type Err = UnknownBackend;

    fn from_str(s: &str) -> Result<Backend, UnknownBackend> {
        match s {
            "link_state" => Ok(Backend::LinkState),
            "flood" => Ok(Backend::Flood),
            other => Err(UnknownBackend(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiscoveryError {
    SameEndpoints { id: u32 },
    Graph(GraphError),
}

impl fmt::Display for DiscoveryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiscoveryError::SameEndpoints { id } => {
                write!(f, "discovery needs two distinct endpoints, got {id} twice")
            }
            DiscoveryError::Graph(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for DiscoveryError {}

impl From<GraphError> for DiscoveryError {
    fn from(e: GraphError) -> DiscoveryError {
        DiscoveryError::Graph(e)
    }
}

/// A concrete node sequence from source to destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route(Vec<NodeId>);

impl Route {
    fn new(nodes: Vec<NodeId>) -> Route {
        debug_assert!(nodes.len() >= 2);
        Route(nodes)
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    pub fn source(&self) -> NodeId {
        self.0[0]
    }

    pub fn dest(&self) -> NodeId {
        *self.0.last().expect("routes are non-empty")
    }

    pub fn hops(&self) -> u32 {
        (self.0.len() - 1) as u32
    }

    /// True when every step crosses an existing edge between alive nodes and
    /// no node repeats.
    pub fn is_valid_in(&self, graph: &Graph) -> bool {
        let all_alive = self.0.iter().all(|&v| graph.is_alive(v));
        let all_edges = self.0.windows(2).all(|w| graph.are_adjacent(w[0], w[1]));
        let mut seen = self.0.clone();
        seen.sort_unstable();
        seen.dedup();
        all_alive && all_edges && seen.len() == self.0.len()
    }
}

/// What a discovery attempt produced and what it cost.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryOutcome {
    /// `None` when the destination is unreachable.
    pub route: Option<Route>,
    /// Per-link transmissions spent on the attempt.
    pub control_messages: u64,
    pub backend: Backend,
}

/// Finds a min-cost route from `source` to `dest` under the given backend.
///
/// Both endpoints must be alive and distinct. An unreachable destination is
/// a normal outcome, not an error; flooding still reports the messages it
/// spent learning that.
pub fn discover(
    backend: Backend,
    graph: &Graph,
    source: NodeId,
    dest: NodeId,
) -> Result<DiscoveryOutcome, DiscoveryError> {
    for v in [source, dest] {
        if !graph.is_alive(v) {
            return Err(if graph.contains(v) {
                GraphError::DeadNode { id: v.get() }.into()
            } else {
                GraphError::IdOutOfRange { id: v.get(), node_count: graph.node_count() }.into()
            });
        }
    }
    if source == dest {
        return Err(DiscoveryError::SameEndpoints { id: source.get() });
    }
    Ok(match backend {
        Backend::LinkState => link_state_route(graph, source, dest),
        Backend::Flood => flood_route(graph, source, dest),
    })
}

/// Heap entry ordered so the cheapest (then lowest-id) node pops first.
struct Pending {
    cost: f64,
    node: NodeId,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Pending) -> bool {
        self.cost == other.cost && self.node == other.node
    }
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Pending) -> Ordering {
        // reversed: BinaryHeap is a max-heap. Costs are finite sums of
        // finite positive weights, never NaN.
        other
            .cost
            .partial_cmp(&self.cost)
            .expect("path costs are never NaN")
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Pending) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cheapest route by weight, lowest node ids on ties, zero control cost.
///
/// Runs a cheapest-distance pass rooted at the destination, then walks
/// forward from the source always taking the lowest-id neighbor that still
/// lies on some cheapest path. Distances strictly decrease along the walk,
/// so it terminates at the destination.
fn link_state_route(graph: &Graph, source: NodeId, dest: NodeId) -> DiscoveryOutcome {
    let n = graph.node_count() as usize;
    let mut dist = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    let slot = |v: NodeId| (v.get() - 1) as usize;

    dist[slot(dest)] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Pending { cost: 0.0, node: dest });
    while let Some(Pending { cost, node }) = heap.pop() {
        if settled[slot(node)] {
            continue;
        }
        settled[slot(node)] = true;
        for u in graph.neighbors(node).expect("queued nodes are alive") {
            let w = graph.weight(node, u).expect("neighbors share an edge");
            let next = cost + w;
            if next < dist[slot(u)] {
                dist[slot(u)] = next;
                heap.push(Pending { cost: next, node: u });
            }
        }
    }

    if dist[slot(source)].is_infinite() {
        return DiscoveryOutcome { route: None, control_messages: 0, backend: Backend::LinkState };
    }

    let mut nodes = vec![source];
    let mut cur = source;
    while cur != dest {
        let step = graph
            .neighbors(cur)
            .expect("walk stays on alive nodes")
            .into_iter()
            .find(|&u| {
                let w = graph.weight(cur, u).expect("neighbors share an edge");
                dist[slot(u)] + w == dist[slot(cur)]
            })
            .expect("a finite distance always has a predecessor");
        nodes.push(step);
        cur = step;
    }
    DiscoveryOutcome {
        route: Some(Route::new(nodes)),
        control_messages: 0,
        backend: Backend::LinkState,
    }
}

/// Request flood with a unicast reply; every per-link send is counted.
///
/// Nodes rebroadcast the request once, on first receipt, to every alive
/// neighbor except the one it came from; the destination answers instead of
/// rebroadcasting. There is no stop signal, so late copies still propagate.
/// The reply retraces the first-receipt parent chain, one message per hop.
fn flood_route(graph: &Graph, source: NodeId, dest: NodeId) -> DiscoveryOutcome {
    let n = graph.node_count() as usize;
    let slot = |v: NodeId| (v.get() - 1) as usize;
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut received = vec![false; n];
    let mut transmissions: u64 = 0;

    received[slot(source)] = true;
    let mut queue = VecDeque::new();
    queue.push_back(source);
    while let Some(x) = queue.pop_front() {
        if x == dest {
            continue; // the destination replies; it does not rebroadcast
        }
        let from = parent[slot(x)];
        for u in graph.neighbors(x).expect("queued nodes are alive") {
            if Some(u) == from {
                continue;
            }
            transmissions += 1;
            if !received[slot(u)] {
                received[slot(u)] = true;
                parent[slot(u)] = Some(x);
                queue.push_back(u);
            }
        }
    }

    if !received[slot(dest)] {
        return DiscoveryOutcome {
            route: None,
            control_messages: transmissions,
            backend: Backend::Flood,
        };
    }

    let mut nodes = vec![dest];
    let mut cur = dest;
    while let Some(p) = parent[slot(cur)] {
        nodes.push(p);
        cur = p;
    }
    nodes.reverse();
    let reply_hops = (nodes.len() - 1) as u64;
    DiscoveryOutcome {
        route: Some(Route::new(nodes)),
        control_messages: transmissions + reply_hops,
        backend: Backend::Flood,
    }
}
