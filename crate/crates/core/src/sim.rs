//! Deterministic scenario runner.
//!
//! A [`Scenario`] is a declarative run description: a topology (explicit
//! edges or a seeded random graph), an optional random workload, and an
//! ordered event list. Expansion turns it into a concrete graph plus a flat
//! event sequence using a single seeded RNG stream, so the same scenario
//! always produces byte-identical results. Logical time is the event index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::cache::MASK_WIDTH;
use crate::discovery::Backend;
use crate::graph::{Graph, GraphError, NodeId};
use crate::protocol::{DeliveryReport, Network, ProtocolError};

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    Graph(GraphError),
    Protocol(ProtocolError),
    BadProbability { edge_prob: f64 },
    GenerationFailed { nodes: u32, edge_prob: f64, attempts: u32 },
    DegreeTooHigh { node: u32, degree: u32 },
    WorkloadNeedsTwoNodes { alive: u32 },
    TooManyDistinctPairs { requested: u64, possible: u64 },
    Event { index: usize, cause: ProtocolError },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Graph(e) => write!(f, "{e}"),
            SimError::Protocol(e) => write!(f, "{e}"),
            SimError::BadProbability { edge_prob } => {
                write!(f, "edge probability {edge_prob} is not in 0..=1")
            }
            SimError::GenerationFailed { nodes, edge_prob, attempts } => write!(
                f,
                "no connected graph on {nodes} nodes after {attempts} attempts \
                 at edge probability {edge_prob}; raise the probability"
            ),
            SimError::DegreeTooHigh { node, degree } => write!(
                f,
                "node {node} has degree {degree}, above the cache mask width {MASK_WIDTH}"
            ),
            SimError::WorkloadNeedsTwoNodes { alive } => {
                write!(f, "workload needs at least 2 alive nodes, have {alive}")
            }
            SimError::TooManyDistinctPairs { requested, possible } => {
                write!(f, "{requested} distinct pairs requested, only {possible} exist")
            }
            SimError::Event { index, cause } => write!(f, "event {index}: {cause}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<GraphError> for SimError {
    fn from(e: GraphError) -> SimError {
        SimError::Graph(e)
    }
}

impl From<ProtocolError> for SimError {
    fn from(e: ProtocolError) -> SimError {
        SimError::Protocol(e)
    }
}

/// Initial topology: given outright, or grown from a seeded random model.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Explicit { nodes: u32, edges: Vec<(u32, u32)> },
    /// Each unordered pair becomes an edge with probability `edge_prob`;
    /// sampling retries until the graph comes out connected.
    Generated { nodes: u32, edge_prob: f64 },
}

/// Randomized traffic to append after the explicit events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkloadSpec {
    pub transfers: u64,
    /// Restrict the draws to this many distinct source/destination pairs.
    pub distinct_pairs: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioEvent {
    Transfer { source: u32, dest: u32 },
    Remove { node: u32 },
    Add { node: u32, neighbors: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub backend: Backend,
    pub seed: u64,
    pub graph: GraphSpec,
    pub workload: Option<WorkloadSpec>,
    pub events: Vec<ScenarioEvent>,
}

/// Per source/destination pair tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairStats {
    pub transfers: u64,
    pub deliveries: u64,
    pub cache_hits: u64,
    pub discoveries: u64,
    pub data_hops: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub transfers: u64,
    pub deliveries: u64,
    pub failures: u64,
    /// Deliveries that never invoked discovery.
    pub cache_hits: u64,
    pub discoveries: u64,
    pub control_messages: u64,
    pub data_hops_total: u64,
    pub per_pair: BTreeMap<(u32, u32), PairStats>,
    /// Total cache bytes at the start and after every topology change.
    pub table_bytes_by_epoch: Vec<u64>,
    /// Packets each node sent toward each destination, zero rows omitted.
    pub traffic: BTreeMap<(u32, u32), u64>,
}

/// One executed transfer: its global event index and full delivery report.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferRecord {
    pub index: usize,
    pub source: u32,
    pub dest: u32,
    pub report: DeliveryReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub scenario_name: String,
    pub backend: Backend,
    pub metrics: Metrics,
    pub log: Vec<TransferRecord>,
    /// Final `(owner, destination, edge ordinal)` cache contents.
    pub trained: Vec<(u32, u32, u32)>,
}

/// Same scenario executed under both discovery backends.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendComparison {
    pub link_state: RunOutput,
    pub flood: RunOutput,
}

fn is_connected(graph: &Graph) -> bool {
    let mut alive = graph.alive_nodes();
    let Some(start) = alive.next() else {
        return true;
    };
    let n = graph.node_count() as usize;
    let mut seen = vec![false; n];
    seen[(start.get() - 1) as usize] = true;
    let mut stack = vec![start];
    let mut reached = 1;
    while let Some(v) = stack.pop() {
        for u in graph.neighbors(v).expect("alive nodes have neighbor lists") {
            let slot = (u.get() - 1) as usize;
            if !seen[slot] {
                seen[slot] = true;
                reached += 1;
                stack.push(u);
            }
        }
    }
    reached == graph.alive_count()
}

/// Samples edge sets until one yields a connected graph.
fn generate_connected_edges(
    rng: &mut ChaCha20Rng,
    nodes: u32,
    edge_prob: f64,
) -> Result<Vec<(u32, u32)>, SimError> {
    if !edge_prob.is_finite() || !(0.0..=1.0).contains(&edge_prob) {
        return Err(SimError::BadProbability { edge_prob });
    }
    const ATTEMPTS: u32 = 64;
    for _ in 0..ATTEMPTS {
        let mut edges = Vec::new();
        for i in 1..=nodes {
            for j in i + 1..=nodes {
                if rng.gen_bool(edge_prob) {
                    edges.push((i, j));
                }
            }
        }
        let graph = Graph::build(nodes, &edges)?;
        if is_connected(&graph) {
            return Ok(edges);
        }
    }
    Err(SimError::GenerationFailed { nodes, edge_prob, attempts: ATTEMPTS })
}

fn check_degrees(graph: &Graph) -> Result<(), SimError> {
    for v in graph.alive_nodes() {
        let degree = graph.degree(v);
        if degree > MASK_WIDTH {
            return Err(SimError::DegreeTooHigh { node: v.get(), degree });
        }
    }
    Ok(())
}

/// Draws a source and a distinct destination uniformly from `alive`.
fn draw_pair(rng: &mut ChaCha20Rng, alive: &[u32]) -> (u32, u32) {
    let s = alive[rng.gen_range(0..alive.len())];
    loop {
        let d = alive[rng.gen_range(0..alive.len())];
        if d != s {
            return (s, d);
        }
    }
}

/// Turns a scenario into its initial graph and fully materialized event
/// list: the graph is built (or generated), the explicit events are
/// validated by replaying them on a scratch copy, and the workload is
/// expanded into concrete transfers over whatever nodes are alive after the
/// explicit events.
pub fn expand(scenario: &Scenario) -> Result<(Graph, Vec<ScenarioEvent>), SimError> {
    let mut rng = ChaCha20Rng::seed_from_u64(scenario.seed);
    let graph = match &scenario.graph {
        GraphSpec::Explicit { nodes, edges } => Graph::build(*nodes, edges)?,
        GraphSpec::Generated { nodes, edge_prob } => {
            let edges = generate_connected_edges(&mut rng, *nodes, *edge_prob)?;
            Graph::build(*nodes, &edges)?
        }
    };
    check_degrees(&graph)?;

    // replay the explicit events on a scratch graph so a bad scenario fails
    // up front, before any protocol state exists
    let mut replay = graph.clone();
    let mut events = scenario.events.clone();
    for (index, event) in events.iter().enumerate() {
        let fail = |cause: GraphError| SimError::Event { index, cause: cause.into() };
        let in_range = |id: u32, g: &Graph| id >= 1 && id <= g.node_count();
        match event {
            ScenarioEvent::Transfer { source, dest } => {
                for id in [*source, *dest] {
                    if !in_range(id, &replay) {
                        return Err(fail(GraphError::IdOutOfRange {
                            id,
                            node_count: replay.node_count(),
                        }));
                    }
                }
                // a dead destination is allowed (the transfer will fail as
                // data); a dead source cannot originate anything
                if !replay.is_alive(NodeId::new(*source)) {
                    return Err(fail(GraphError::DeadNode { id: *source }));
                }
            }
            ScenarioEvent::Remove { node } => {
                if !in_range(*node, &replay) {
                    return Err(fail(GraphError::IdOutOfRange {
                        id: *node,
                        node_count: replay.node_count(),
                    }));
                }
                replay.remove_node(NodeId::new(*node)).map_err(fail)?;
            }
            ScenarioEvent::Add { node, neighbors } => {
                replay.add_node(*node, neighbors).map_err(fail)?;
                check_degrees(&replay)?;
            }
        }
    }

    if let Some(workload) = scenario.workload {
        let alive: Vec<u32> = replay.alive_nodes().map(|v| v.get()).collect();
        if alive.len() < 2 {
            return Err(SimError::WorkloadNeedsTwoNodes { alive: alive.len() as u32 });
        }
        let pool: Option<Vec<(u32, u32)>> = match workload.distinct_pairs {
            Some(count) => {
                let possible = alive.len() as u64 * (alive.len() as u64 - 1);
                if count > possible {
                    return Err(SimError::TooManyDistinctPairs { requested: count, possible });
                }
                let mut seen = BTreeSet::new();
                let mut pool = Vec::with_capacity(count as usize);
                while (pool.len() as u64) < count {
                    let pair = draw_pair(&mut rng, &alive);
                    if seen.insert(pair) {
                        pool.push(pair);
                    }
                }
                Some(pool)
            }
            None => None,
        };
        for _ in 0..workload.transfers {
            let (source, dest) = match &pool {
                Some(pool) => pool[rng.gen_range(0..pool.len())],
                None => draw_pair(&mut rng, &alive),
            };
            events.push(ScenarioEvent::Transfer { source, dest });
        }
    }

    Ok((graph, events))
}

/// Expands and executes a scenario, collecting metrics, a per-transfer log,
/// and the final cache contents.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutput, SimError> {
    run_scenario_with_hook(scenario, |_| {})
}

/// [`run_scenario`] with a hook that may inspect or perturb the network
/// after setup and before the first event — useful for pre-seeding caches
/// or injecting faults.
pub fn run_scenario_with_hook(
    scenario: &Scenario,
    hook: impl FnOnce(&mut Network),
) -> Result<RunOutput, SimError> {
    let (graph, events) = expand(scenario)?;
    let mut net = Network::new(graph, scenario.backend);
    hook(&mut net);

    let mut metrics = Metrics::default();
    let mut log = Vec::new();
    metrics.table_bytes_by_epoch.push(net.table_bytes_total());
    for (index, event) in events.iter().enumerate() {
        let fail = |cause: ProtocolError| SimError::Event { index, cause };
        match event {
            ScenarioEvent::Transfer { source, dest } => {
                let report = net
                    .transfer(NodeId::new(*source), NodeId::new(*dest))
                    .map_err(fail)?;
                metrics.transfers += 1;
                if report.delivered() {
                    metrics.deliveries += 1;
                } else {
                    metrics.failures += 1;
                }
                if report.cache_hit {
                    metrics.cache_hits += 1;
                }
                metrics.discoveries += report.discoveries_triggered;
                metrics.control_messages += report.control_messages;
                metrics.data_hops_total += report.data_hops;
                let pair = metrics.per_pair.entry((*source, *dest)).or_default();
                pair.transfers += 1;
                pair.deliveries += u64::from(report.delivered());
                pair.cache_hits += u64::from(report.cache_hit);
                pair.discoveries += report.discoveries_triggered;
                pair.data_hops += report.data_hops;
                log.push(TransferRecord { index, source: *source, dest: *dest, report });
            }
            ScenarioEvent::Remove { node } => {
                net.remove_node(NodeId::new(*node)).map_err(fail)?;
                metrics.table_bytes_by_epoch.push(net.table_bytes_total());
            }
            ScenarioEvent::Add { node, neighbors } => {
                net.add_node(*node, neighbors).map_err(fail)?;
                metrics.table_bytes_by_epoch.push(net.table_bytes_total());
            }
        }
    }

    for table in net.tables() {
        let owner = table.owner().get();
        for (dest, count) in table.traffic_entries() {
            metrics.traffic.insert((owner, dest.get()), count);
        }
    }
    let trained = net
        .tables()
        .flat_map(|t| {
            let owner = t.owner().get();
            t.trained_entries().map(move |(d, k)| (owner, d.get(), k))
        })
        .collect();

    Ok(RunOutput {
        scenario_name: scenario.name.clone(),
        backend: scenario.backend,
        metrics,
        log,
        trained,
    })
}

/// Runs the same scenario under both backends, in parallel.
pub fn compare_backends(scenario: &Scenario) -> Result<BackendComparison, SimError> {
    let ls = Scenario { backend: Backend::LinkState, ..scenario.clone() };
    let fl = Scenario { backend: Backend::Flood, ..scenario.clone() };
    std::thread::scope(|scope| {
        let ls_run = scope.spawn(|| run_scenario(&ls));
        let fl_run = scope.spawn(|| run_scenario(&fl));
        Ok(BackendComparison {
            link_state: ls_run.join().expect("runner does not panic")?,
            flood: fl_run.join().expect("runner does not panic")?,
        })
    })
}

/// Builds a fully explicit random scenario: a connected graph, `transfers`
/// random transfers, and up to `churn` node removals at uniformly random
/// positions. Victims are drawn only from nodes whose removal keeps the
/// survivors connected and at least two strong; a churn slot with no such
/// candidate is dropped.
pub fn generate_random_scenario(
    nodes: u32,
    edge_prob: f64,
    transfers: u64,
    churn: u64,
    seed: u64,
) -> Result<Scenario, SimError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let edges = generate_connected_edges(&mut rng, nodes, edge_prob)?;
    let graph = Graph::build(nodes, &edges)?;
    check_degrees(&graph)?;

    let mut replay = graph.clone();
    let mut events = Vec::with_capacity((transfers + churn) as usize);
    let total_slots = transfers + churn;
    let mut churn_left = churn;
    for slot in 0..total_slots {
        let slots_left = total_slots - slot;
        let churn_now = churn_left > 0 && rng.gen_range(0..slots_left) < churn_left;
        if churn_now {
            churn_left -= 1;
            let victims: Vec<u32> = replay
                .alive_nodes()
                .filter(|&v| {
                    if replay.alive_count() <= 3 {
                        return false;
                    }
                    let mut probe = replay.clone();
                    probe.remove_node(v).expect("candidate is alive");
                    is_connected(&probe)
                })
                .map(|v| v.get())
                .collect();
            if victims.is_empty() {
                continue; // no safe victim at this point; drop the slot
            }
            let victim = victims[rng.gen_range(0..victims.len())];
            replay.remove_node(NodeId::new(victim)).expect("victim is alive");
            events.push(ScenarioEvent::Remove { node: victim });
        } else {
            let alive: Vec<u32> = replay.alive_nodes().map(|v| v.get()).collect();
            let (source, dest) = draw_pair(&mut rng, &alive);
            events.push(ScenarioEvent::Transfer { source, dest });
        }
    }

    Ok(Scenario {
        name: format!("rand-n{nodes}-p{edge_prob:.2}-t{transfers}-c{churn}-s{seed}"),
        backend: Backend::LinkState,
        seed,
        graph: GraphSpec::Explicit { nodes, edges },
        workload: None,
        events,
    })
}
