//! Scenario file format: a small INI-style dialect.
//!
//! ```text
//! # comments run to end of line
//! [graph]
//! nodes = 5
//! edges = 1-3, 1-4, 2-4, 3-5, 4-5   # or: edge_prob = 0.3
//!
//! [run]
//! name = desk
//! backend = link_state
//! seed = 7
//!
//! [workload]        # optional random traffic, appended after the events
//! transfers = 1000
//! pairs = 20
//!
//! [events]          # optional, executed in file order
//! transfer 1 2
//! remove 4
//! add 6: 1 5
//! ```
//!
//! Unknown sections and keys are warnings by default and errors under
//! strict parsing; malformed values are always errors. [`render_scenario`]
//! prints the canonical form, which parses back to the same scenario.

use std::fmt;

use masknet::sim::{GraphSpec, Scenario, ScenarioEvent, WorkloadSpec};
use masknet::Backend;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    /// 1-based source line, or 0 for whole-file problems.
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    UnknownSection(String),
    KeyOutsideSection,
    MalformedLine(String),
    MalformedEdge(String),
    BadNumber { key: String, value: String },
    DuplicateKey(String),
    UnknownKey { section: &'static str, key: String },
    MalformedEvent(String),
    MissingSection(&'static str),
    MissingKey { section: &'static str, key: &'static str },
    ExclusiveGraphKeys,
    BadName(String),
    BadBackend(String),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: ", self.line)?;
        }
        match &self.kind {
            ParseErrorKind::UnknownSection(name) => write!(f, "unknown section [{name}]"),
            ParseErrorKind::KeyOutsideSection => write!(f, "content before any [section]"),
            ParseErrorKind::MalformedLine(line) => write!(f, "expected `key = value`, got {line:?}"),
            ParseErrorKind::MalformedEdge(token) => {
                write!(f, "expected an edge like `1-3`, got {token:?}")
            }
            ParseErrorKind::BadNumber { key, value } => {
                write!(f, "bad number {value:?} for {key}")
            }
            ParseErrorKind::DuplicateKey(key) => write!(f, "{key} given twice"),
            ParseErrorKind::UnknownKey { section, key } => {
                write!(f, "unknown key {key:?} in [{section}]")
            }
            ParseErrorKind::MalformedEvent(line) => write!(
                f,
                "expected `transfer S D`, `remove V` or `add V: N..`, got {line:?}"
            ),
            ParseErrorKind::MissingSection(name) => write!(f, "missing [{name}] section"),
            ParseErrorKind::MissingKey { section, key } => {
                write!(f, "missing {key} in [{section}]")
            }
            ParseErrorKind::ExclusiveGraphKeys => {
                write!(f, "edges and edge_prob cannot both be given")
            }
            ParseErrorKind::BadName(name) => write!(
                f,
                "name {name:?} may only use letters, digits, `_`, `.` and `-`"
            ),
            ParseErrorKind::BadBackend(value) => {
                write!(f, "bad backend {value:?}, expected link_state or flood")
            }
        }
    }
}

impl std::error::Error for ParseError {}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Graph,
    Run,
    Workload,
    Events,
    /// Unknown section accepted in lenient mode; its lines are skipped.
    Ignored,
}

impl Section {
    fn name(self) -> &'static str {
        match self {
            Section::Graph => "graph",
            Section::Run => "run",
            Section::Workload => "workload",
            Section::Events => "events",
            Section::Ignored => "?",
        }
    }
}

#[derive(Default)]
struct Builder {
    nodes: Option<u32>,
    edges: Vec<(u32, u32)>,
    edges_seen: bool,
    edge_prob: Option<f64>,
    name: Option<String>,
    backend: Option<Backend>,
    seed: Option<u64>,
    saw_graph: bool,
    saw_run: bool,
    saw_workload: bool,
    transfers: Option<u64>,
    pairs: Option<u64>,
    events: Vec<ScenarioEvent>,
}

fn parse_number<T: std::str::FromStr>(
    line: usize,
    key: &str,
    value: &str,
) -> Result<T, ParseError> {
    value.parse().map_err(|_| {
        err(line, ParseErrorKind::BadNumber { key: key.to_string(), value: value.to_string() })
    })
}

fn set_once<T>(
    slot: &mut Option<T>,
    value: T,
    line: usize,
    key: &str,
) -> Result<(), ParseError> {
    if slot.is_some() {
        return Err(err(line, ParseErrorKind::DuplicateKey(key.to_string())));
    }
    *slot = Some(value);
    Ok(())
}

fn parse_edge_list(line: usize, value: &str, into: &mut Vec<(u32, u32)>) -> Result<(), ParseError> {
    for token in value.split(',') {
        let token = token.trim();
        let malformed = || err(line, ParseErrorKind::MalformedEdge(token.to_string()));
        let (a, b) = token.split_once('-').ok_or_else(malformed)?;
        let a: u32 = a.trim().parse().map_err(|_| malformed())?;
        let b: u32 = b.trim().parse().map_err(|_| malformed())?;
        into.push((a, b));
    }
    Ok(())
}

fn parse_event(line: usize, text: &str) -> Result<ScenarioEvent, ParseError> {
    let malformed = || err(line, ParseErrorKind::MalformedEvent(text.to_string()));
    let mut words = text.split_whitespace();
    let verb = words.next().ok_or_else(malformed)?;
    match verb {
        "transfer" => {
            let source = words.next().and_then(|w| w.parse().ok()).ok_or_else(malformed)?;
            let dest = words.next().and_then(|w| w.parse().ok()).ok_or_else(malformed)?;
            if words.next().is_some() {
                return Err(malformed());
            }
            Ok(ScenarioEvent::Transfer { source, dest })
        }
        "remove" => {
            let node = words.next().and_then(|w| w.parse().ok()).ok_or_else(malformed)?;
            if words.next().is_some() {
                return Err(malformed());
            }
            Ok(ScenarioEvent::Remove { node })
        }
        "add" => {
            let rest = text.trim_start().strip_prefix("add").unwrap_or("");
            let (node, neighbors) = rest.split_once(':').ok_or_else(malformed)?;
            let node: u32 = node.trim().parse().map_err(|_| malformed())?;
            let neighbors = neighbors
                .split_whitespace()
                .map(|w| w.parse().map_err(|_| malformed()))
                .collect::<Result<Vec<u32>, ParseError>>()?;
            Ok(ScenarioEvent::Add { node, neighbors })
        }
        _ => Err(malformed()),
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

/// Parses a scenario file. Returns the scenario plus any lenient-mode
/// warnings (unknown keys or sections); under `strict` those warnings are
/// promoted to errors.
pub fn parse_scenario(text: &str, strict: bool) -> Result<(Scenario, Vec<String>), ParseError> {
    let mut b = Builder::default();
    let mut warnings = Vec::new();
    let mut section: Option<Section> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }

        if let Some(header) = content.strip_prefix('[') {
            let name = header
                .strip_suffix(']')
                .ok_or_else(|| err(line, ParseErrorKind::MalformedLine(content.to_string())))?
                .trim();
            section = Some(match name {
                "graph" => {
                    b.saw_graph = true;
                    Section::Graph
                }
                "run" => {
                    b.saw_run = true;
                    Section::Run
                }
                "workload" => {
                    b.saw_workload = true;
                    Section::Workload
                }
                "events" => Section::Events,
                other => {
                    if strict {
                        return Err(err(line, ParseErrorKind::UnknownSection(other.to_string())));
                    }
                    warnings.push(format!("line {line}: ignoring unknown section [{other}]"));
                    Section::Ignored
                }
            });
            continue;
        }

        let Some(section) = section else {
            return Err(err(line, ParseErrorKind::KeyOutsideSection));
        };

        if section == Section::Ignored {
            continue;
        }
        if section == Section::Events {
            b.events.push(parse_event(line, content)?);
            continue;
        }

        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, ParseErrorKind::MalformedLine(content.to_string())))?;
        let (key, value) = (key.trim(), value.trim());
        let unknown = |warnings: &mut Vec<String>| -> Result<(), ParseError> {
            if strict {
                return Err(err(
                    line,
                    ParseErrorKind::UnknownKey { section: section.name(), key: key.to_string() },
                ));
            }
            warnings.push(format!(
                "line {line}: ignoring unknown key {key:?} in [{}]",
                section.name()
            ));
            Ok(())
        };

        match (section, key) {
            (Section::Graph, "nodes") => {
                set_once(&mut b.nodes, parse_number(line, key, value)?, line, key)?;
            }
            (Section::Graph, "edges") => {
                b.edges_seen = true;
                parse_edge_list(line, value, &mut b.edges)?;
            }
            (Section::Graph, "edge_prob") => {
                set_once(&mut b.edge_prob, parse_number(line, key, value)?, line, key)?;
            }
            (Section::Run, "name") => {
                if !valid_name(value) {
                    return Err(err(line, ParseErrorKind::BadName(value.to_string())));
                }
                set_once(&mut b.name, value.to_string(), line, key)?;
            }
            (Section::Run, "backend") => {
                let backend = value
                    .parse()
                    .map_err(|_| err(line, ParseErrorKind::BadBackend(value.to_string())))?;
                set_once(&mut b.backend, backend, line, key)?;
            }
            (Section::Run, "seed") => {
                set_once(&mut b.seed, parse_number(line, key, value)?, line, key)?;
            }
            (Section::Workload, "transfers") => {
                set_once(&mut b.transfers, parse_number(line, key, value)?, line, key)?;
            }
            (Section::Workload, "pairs") => {
                set_once(&mut b.pairs, parse_number(line, key, value)?, line, key)?;
            }
            _ => unknown(&mut warnings)?,
        }
    }

    if !b.saw_graph {
        return Err(err(0, ParseErrorKind::MissingSection("graph")));
    }
    let nodes = b
        .nodes
        .ok_or_else(|| err(0, ParseErrorKind::MissingKey { section: "graph", key: "nodes" }))?;
    if !b.saw_run {
        return Err(err(0, ParseErrorKind::MissingSection("run")));
    }
    let backend = b
        .backend
        .ok_or_else(|| err(0, ParseErrorKind::MissingKey { section: "run", key: "backend" }))?;
    let seed = b
        .seed
        .ok_or_else(|| err(0, ParseErrorKind::MissingKey { section: "run", key: "seed" }))?;

    let graph = match b.edge_prob {
        Some(edge_prob) => {
            if b.edges_seen {
                return Err(err(0, ParseErrorKind::ExclusiveGraphKeys));
            }
            GraphSpec::Generated { nodes, edge_prob }
        }
        None => GraphSpec::Explicit { nodes, edges: b.edges },
    };

    let workload = if b.saw_workload {
        let transfers = b.transfers.ok_or_else(|| {
            err(0, ParseErrorKind::MissingKey { section: "workload", key: "transfers" })
        })?;
        Some(WorkloadSpec { transfers, distinct_pairs: b.pairs })
    } else {
        None
    };

    Ok((
        Scenario {
            name: b.name.unwrap_or_else(|| "scenario".to_string()),
            backend,
            seed,
            graph,
            workload,
            events: b.events,
        },
        warnings,
    ))
}

/// Prints a scenario in the canonical file form.
pub fn render_scenario(scenario: &Scenario) -> String {
    let mut out = String::new();
    out.push_str("[graph]\n");
    match &scenario.graph {
        GraphSpec::Explicit { nodes, edges } => {
            out.push_str(&format!("nodes = {nodes}\n"));
            for chunk in edges.chunks(8) {
                let list: Vec<String> =
                    chunk.iter().map(|(a, b)| format!("{a}-{b}")).collect();
                out.push_str(&format!("edges = {}\n", list.join(", ")));
            }
        }
        GraphSpec::Generated { nodes, edge_prob } => {
            out.push_str(&format!("nodes = {nodes}\n"));
            out.push_str(&format!("edge_prob = {edge_prob}\n"));
        }
    }
    out.push_str("\n[run]\n");
    out.push_str(&format!("name = {}\n", scenario.name));
    out.push_str(&format!("backend = {}\n", scenario.backend));
    out.push_str(&format!("seed = {}\n", scenario.seed));
    if let Some(workload) = scenario.workload {
        out.push_str("\n[workload]\n");
        out.push_str(&format!("transfers = {}\n", workload.transfers));
        if let Some(pairs) = workload.distinct_pairs {
            out.push_str(&format!("pairs = {pairs}\n"));
        }
    }
    if !scenario.events.is_empty() {
        out.push_str("\n[events]\n");
        for event in &scenario.events {
            match event {
                ScenarioEvent::Transfer { source, dest } => {
                    out.push_str(&format!("transfer {source} {dest}\n"));
                }
                ScenarioEvent::Remove { node } => {
                    out.push_str(&format!("remove {node}\n"));
                }
                ScenarioEvent::Add { node, neighbors } => {
                    let list: Vec<String> = neighbors.iter().map(u32::to_string).collect();
                    out.push_str(&format!("add {node}: {}\n", list.join(" ")));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const DESK: &str = "\
# bench topology
[graph]
nodes = 5
edges = 1-3, 1-4, 2-4, 3-5, 4-5

[run]
name = desk
backend = link_state
seed = 7

[events]
transfer 1 2
transfer 1 2
transfer 4 2
";

    #[test]
    fn parses_the_bench_scenario() {
        let (scenario, warnings) = parse_scenario(DESK, true).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(scenario.name, "desk");
        assert_eq!(scenario.backend, Backend::LinkState);
        assert_eq!(scenario.seed, 7);
        assert_eq!(
            scenario.graph,
            GraphSpec::Explicit {
                nodes: 5,
                edges: vec![(1, 3), (1, 4), (2, 4), (3, 5), (4, 5)]
            }
        );
        assert_eq!(scenario.workload, None);
        assert_eq!(scenario.events.len(), 3);
        assert_eq!(scenario.events[2], ScenarioEvent::Transfer { source: 4, dest: 2 });
    }

    #[test]
    fn print_then_parse_is_identity() {
        let (scenario, _) = parse_scenario(DESK, true).unwrap();
        let printed = render_scenario(&scenario);
        let (reparsed, warnings) = parse_scenario(&printed, true).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(reparsed, scenario);
        assert_eq!(render_scenario(&reparsed), printed);
    }

    #[test]
    fn generated_graph_and_workload_round_trip() {
        let text = "\
[graph]
nodes = 30
edge_prob = 0.35

[run]
backend = flood
seed = 1003

[workload]
transfers = 1000
pairs = 20

[events]
remove 7
add 31: 3 9
";
        let (scenario, _) = parse_scenario(text, true).unwrap();
        assert_eq!(scenario.name, "scenario"); // default
        assert_eq!(scenario.graph, GraphSpec::Generated { nodes: 30, edge_prob: 0.35 });
        assert_eq!(
            scenario.workload,
            Some(WorkloadSpec { transfers: 1000, distinct_pairs: Some(20) })
        );
        assert_eq!(scenario.events[0], ScenarioEvent::Remove { node: 7 });
        assert_eq!(
            scenario.events[1],
            ScenarioEvent::Add { node: 31, neighbors: vec![3, 9] }
        );
        let printed = render_scenario(&scenario);
        assert_eq!(parse_scenario(&printed, true).unwrap().0, scenario);
    }

    #[test]
    fn add_event_with_no_neighbors() {
        let text = "\
[graph]
nodes = 2
edges = 1-2

[run]
backend = link_state
seed = 0

[events]
add 3:
";
        let (scenario, _) = parse_scenario(text, true).unwrap();
        assert_eq!(scenario.events[0], ScenarioEvent::Add { node: 3, neighbors: vec![] });
        let printed = render_scenario(&scenario);
        assert_eq!(parse_scenario(&printed, true).unwrap().0, scenario);
    }

    #[test]
    fn repeated_edges_lines_append() {
        let text = "\
[graph]
nodes = 5
edges = 1-3, 1-4
edges = 2-4, 3-5
edges = 4-5

[run]
backend = link_state
seed = 7
";
        let (scenario, _) = parse_scenario(text, true).unwrap();
        assert_eq!(
            scenario.graph,
            GraphSpec::Explicit {
                nodes: 5,
                edges: vec![(1, 3), (1, 4), (2, 4), (3, 5), (4, 5)]
            }
        );
    }

    fn line_and_kind(text: &str) -> (usize, ParseErrorKind) {
        let e = parse_scenario(text, true).unwrap_err();
        (e.line, e.kind)
    }

    #[test]
    fn malformed_edges_are_rejected_with_line_numbers() {
        let text = "[graph]\nnodes = 3\nedges = 1-\n\n[run]\nbackend = flood\nseed = 0\n";
        assert_eq!(
            line_and_kind(text),
            (3, ParseErrorKind::MalformedEdge("1-".to_string()))
        );
        let text = "[graph]\nnodes = 3\nedges = 1-2, , 2-3\n\n[run]\nbackend = flood\nseed = 0\n";
        assert_eq!(
            line_and_kind(text),
            (3, ParseErrorKind::MalformedEdge(String::new()))
        );
    }

    #[test]
    fn structural_errors() {
        assert_eq!(
            line_and_kind("nodes = 5\n"),
            (1, ParseErrorKind::KeyOutsideSection)
        );
        assert_eq!(
            line_and_kind("[graph]\nnodes = 5\nnodes = 6\n"),
            (3, ParseErrorKind::DuplicateKey("nodes".to_string()))
        );
        assert_eq!(
            line_and_kind("[graph]\nnodes = five\n"),
            (
                2,
                ParseErrorKind::BadNumber { key: "nodes".to_string(), value: "five".to_string() }
            )
        );
        assert_eq!(
            line_and_kind("[graph]\nnodes = 5\n[run]\nbackend = ospf\nseed = 1\n"),
            (4, ParseErrorKind::BadBackend("ospf".to_string()))
        );
        assert_eq!(
            line_and_kind("[graph]\nnodes = 5\n[run]\nname = a b\nbackend = flood\nseed = 1\n"),
            (4, ParseErrorKind::BadName("a b".to_string()))
        );
        assert_eq!(
            line_and_kind("[graph]\nnodes = 5\nedges = 1-2\nedge_prob = 0.5\n[run]\nbackend = flood\nseed = 1\n"),
            (0, ParseErrorKind::ExclusiveGraphKeys)
        );
    }

    #[test]
    fn missing_pieces() {
        assert_eq!(line_and_kind(""), (0, ParseErrorKind::MissingSection("graph")));
        assert_eq!(
            line_and_kind("[graph]\nnodes = 2\n"),
            (0, ParseErrorKind::MissingSection("run"))
        );
        assert_eq!(
            line_and_kind("[graph]\nnodes = 2\n[run]\nseed = 1\n"),
            (0, ParseErrorKind::MissingKey { section: "run", key: "backend" })
        );
        assert_eq!(
            line_and_kind("[graph]\nnodes = 2\n[run]\nbackend = flood\n"),
            (0, ParseErrorKind::MissingKey { section: "run", key: "seed" })
        );
        assert_eq!(
            line_and_kind(
                "[graph]\nnodes = 2\n[run]\nbackend = flood\nseed = 1\n[workload]\npairs = 3\n"
            ),
            (0, ParseErrorKind::MissingKey { section: "workload", key: "transfers" })
        );
    }

    #[test]
    fn malformed_events() {
        let base = "[graph]\nnodes = 3\nedges = 1-2, 2-3\n[run]\nbackend = flood\nseed = 1\n[events]\n";
        for bad in ["transfer 1", "transfer 1 2 3", "remove", "add 4 1 2", "teleport 1 2"] {
            let e = parse_scenario(&format!("{base}{bad}\n"), false).unwrap_err();
            assert_eq!(e.line, 8);
            assert_eq!(e.kind, ParseErrorKind::MalformedEvent(bad.to_string()));
        }
    }

    #[test]
    fn strictness_gates_unknown_keys_and_sections() {
        let text = "\
[graph]
nodes = 2
edges = 1-2
color = blue

[run]
backend = flood
seed = 1

[notes]
anything goes here = yes
";
        let (scenario, warnings) = parse_scenario(text, false).unwrap();
        assert_eq!(scenario.seed, 1);
        assert_eq!(warnings.len(), 2);
        assert!(warnings[0].contains("color"));
        assert!(warnings[1].contains("notes"));

        let e = parse_scenario(text, true).unwrap_err();
        assert_eq!(e.line, 4);
        assert_eq!(
            e.kind,
            ParseErrorKind::UnknownKey { section: "graph", key: "color".to_string() }
        );
    }

    #[test]
    fn comments_and_blank_lines_are_invisible() {
        let text = "\n\n# header\n[graph]  # section\nnodes = 2   # two\nedges = 1-2\n# done\n[run]\nbackend = flood\nseed = 1\n";
        let (scenario, _) = parse_scenario(text, true).unwrap();
        assert_eq!(scenario.seed, 1);
    }
}
