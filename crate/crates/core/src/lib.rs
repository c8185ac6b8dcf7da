//! Deterministic ad-hoc network simulation with trained route caches.
//!
//! The idea under test: route discovery is the expensive part of ad-hoc
//! routing, so pay for it once. The first transfer between two nodes runs a
//! discovery and *trains* every node along the found route — each stores the
//! ordinal of its outgoing edge toward the destination as a single set bit.
//! From then on data forwards by decoding that bit at each hop, with no
//! routing work at all, until the topology changes out from under a cache
//! and a stranded packet retrains from wherever it stopped.
//!
//! Layers, bottom up:
//!
//! * [`graph`] — adjacency bit matrix with the edge-ordinal bijection
//!   ([`Graph::index_edge`] / [`Graph::index_vertex`]).
//! * [`cache`] — [`EdgeMask`] single-bit entries and per-node
//!   [`RouteTable`]s with traffic counters.
//! * [`discovery`] — interchangeable route finders: zero-cost link-state
//!   and a counted request flood.
//! * [`protocol`] — [`Network`]: train-on-miss transfers, mid-path repair,
//!   cache invalidation on churn.
//! * [`sim`] — seeded, reproducible scenarios and their metrics.
//!
//! ```
//! use masknet::{Backend, Graph, Network, NodeId};
//!
//! let graph = Graph::build(5, &[(1, 3), (1, 4), (2, 4), (3, 5), (4, 5)]).unwrap();
//! let mut net = Network::new(graph, Backend::LinkState);
//!
//! let first = net.transfer(NodeId::new(1), NodeId::new(2)).unwrap();
//! assert_eq!(first.discoveries_triggered, 1);
//!
//! let second = net.transfer(NodeId::new(1), NodeId::new(2)).unwrap();
//! assert!(second.cache_hit); // no discovery, no control messages
//! ```

pub mod cache;
pub mod discovery;
pub mod graph;
pub mod protocol;
pub mod sim;

pub use cache::{CacheError, EdgeMask, NextHop, RouteTable, MASK_WIDTH};
pub use discovery::{
    discover, Backend, DiscoveryError, DiscoveryOutcome, Route, UnknownBackend,
};
pub use graph::{Graph, GraphError, NodeId};
pub use protocol::{
    DeliveryOutcome, DeliveryReport, Network, ProtocolError, TrainingOutcome,
};
pub use sim::{
    compare_backends, expand, generate_random_scenario, run_scenario, run_scenario_with_hook,
    BackendComparison, GraphSpec, Metrics, PairStats, RunOutput, Scenario, ScenarioEvent,
    SimError, TransferRecord, WorkloadSpec,
};
