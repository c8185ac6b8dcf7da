//! Shortest-path referee for simulator output.
//!
//! Re-runs a scenario and checks every delivered transfer against hop
//! distances computed by this module's own breadth-first search, which reads
//! nothing from the simulator but the adjacency itself. Topology-changing
//! events are refused: after churn a detour can be legitimate, and the
//! referee would cry wolf.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use masknet::sim::{expand, run_scenario, Scenario, ScenarioEvent, SimError};
use masknet::{Backend, Graph, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    Sim(SimError),
    ChurnUnsupported { index: usize },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::Sim(e) => write!(f, "{e}"),
            OracleError::ChurnUnsupported { index } => write!(
                f,
                "event {index} changes the topology; the referee only handles static runs"
            ),
        }
    }
}

impl std::error::Error for OracleError {}

impl From<SimError> for OracleError {
    fn from(e: SimError) -> OracleError {
        OracleError::Sim(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MismatchDetail {
    /// Delivered, but not over a fewest-hop path.
    HopsDiffer { expected: u32, actual: u64 },
    /// Delivered although the referee finds no path at all.
    DeliveredUnreachable,
    /// Dropped although the referee finds a path.
    UndeliveredReachable { expected: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleMismatch {
    pub index: usize,
    pub source: u32,
    pub dest: u32,
    pub detail: MismatchDetail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub scenario_name: String,
    pub backend: Backend,
    pub checked: usize,
    pub mismatches: Vec<OracleMismatch>,
}

impl OracleReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }

    /// The check gates only the backend that promises exact shortest paths.
    pub fn gate_failed(&self) -> bool {
        self.backend == Backend::LinkState && !self.ok()
    }
}

/// Hop distances from `source` over adjacency, by a scan this module owns.
fn referee_distances(adjacency: &BTreeMap<u32, Vec<u32>>, source: u32) -> BTreeMap<u32, u32> {
    let mut dist = BTreeMap::from([(source, 0)]);
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        for &u in adjacency.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            if let std::collections::btree_map::Entry::Vacant(slot) = dist.entry(u) {
                slot.insert(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

fn adjacency_of(graph: &Graph) -> BTreeMap<u32, Vec<u32>> {
    graph
        .alive_nodes()
        .map(|v| {
            let row = graph
                .neighbors(v)
                .expect("alive nodes enumerate neighbors")
                .into_iter()
                .map(NodeId::get)
                .collect();
            (v.get(), row)
        })
        .collect()
}

/// Runs the scenario and referees every transfer in its log.
pub fn check_scenario(scenario: &Scenario) -> Result<OracleReport, OracleError> {
    let (graph, events) = expand(scenario)?;
    for (index, event) in events.iter().enumerate() {
        if matches!(event, ScenarioEvent::Remove { .. } | ScenarioEvent::Add { .. }) {
            return Err(OracleError::ChurnUnsupported { index });
        }
    }
    let adjacency = adjacency_of(&graph);
    let run = run_scenario(scenario)?;

    let mut by_source: BTreeMap<u32, BTreeMap<u32, u32>> = BTreeMap::new();
    let mut mismatches = Vec::new();
    for record in &run.log {
        let dist = by_source
            .entry(record.source)
            .or_insert_with(|| referee_distances(&adjacency, record.source));
        let expected = dist.get(&record.dest).copied();
        let detail = match (record.report.delivered(), expected) {
            (true, Some(hops)) if u64::from(hops) == record.report.data_hops => continue,
            (true, Some(hops)) => MismatchDetail::HopsDiffer {
                expected: hops,
                actual: record.report.data_hops,
            },
            (true, None) => MismatchDetail::DeliveredUnreachable,
            (false, Some(hops)) => MismatchDetail::UndeliveredReachable { expected: hops },
            (false, None) => continue,
        };
        mismatches.push(OracleMismatch {
            index: record.index,
            source: record.source,
            dest: record.dest,
            detail,
        });
    }

    Ok(OracleReport {
        scenario_name: run.scenario_name,
        backend: run.backend,
        checked: run.log.len(),
        mismatches,
    })
}

/// Renders a report as one heading plus one line per finding.
pub fn render_oracle_report(report: &OracleReport) -> String {
    let mut out = format!(
        "# oracle scenario={} backend={}\n",
        report.scenario_name, report.backend
    );
    for m in &report.mismatches {
        let what = match &m.detail {
            MismatchDetail::HopsDiffer { expected, actual } => {
                format!("expected_hops={expected} actual_hops={actual}")
            }
            MismatchDetail::DeliveredUnreachable => "delivered_but_unreachable".to_string(),
            MismatchDetail::UndeliveredReachable { expected } => {
                format!("dropped_but_reachable expected_hops={expected}")
            }
        };
        out.push_str(&format!(
            "mismatch event={} pair={}>{} {}\n",
            m.index, m.source, m.dest, what
        ));
    }
    out.push_str(&format!(
        "checked={} mismatches={} verdict={}\n",
        report.checked,
        report.mismatches.len(),
        if report.ok() { "ok" } else { "mismatch" }
    ));
    out
}
