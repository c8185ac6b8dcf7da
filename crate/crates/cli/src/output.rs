//! Plain-text metrics rendering.
//!
//! One summary table for all runs, then one block group per run: the
//! per-transfer event log, cache size by epoch, final cache contents,
//! per-node traffic counters, and per-pair tallies. Every block is a CSV
//! table under a `#`-prefixed heading, so the output is both greppable and
//! trivially importable. Rendering is pure string building — identical runs
//! render byte-identically.

use std::fmt::Write;

use masknet::sim::RunOutput;
use masknet::DeliveryOutcome;

/// Schema marker emitted as the first line.
pub const SCHEMA_HEADER: &str = "# masknet metrics schema v1";

pub const SUMMARY_COLUMNS: &str = "scenario,backend,transfers,deliveries,cache_hits,discoveries,control_messages,data_hops_total,table_bytes";

/// Final cache footprint: the last epoch snapshot.
fn final_table_bytes(run: &RunOutput) -> u64 {
    run.metrics.table_bytes_by_epoch.last().copied().unwrap_or(0)
}

/// Renders one or more runs (several for a backend comparison).
pub fn render_metrics_output(runs: &[RunOutput]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SCHEMA_HEADER}");
    let _ = writeln!(out, "{SUMMARY_COLUMNS}");
    for run in runs {
        let m = &run.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            run.scenario_name,
            run.backend,
            m.transfers,
            m.deliveries,
            m.cache_hits,
            m.discoveries,
            m.control_messages,
            m.data_hops_total,
            final_table_bytes(run),
        );
    }
    for run in runs {
        render_run_blocks(&mut out, run);
    }
    out
}

fn render_run_blocks(out: &mut String, run: &RunOutput) {
    let tag = format!("scenario={} backend={}", run.scenario_name, run.backend);
    let m = &run.metrics;

    let _ = writeln!(out, "\n# events {tag}");
    let _ = writeln!(out, "event,source,dest,outcome,data_hops,discoveries,control_messages,cache_hit,path");
    for record in &run.log {
        let r = &record.report;
        let outcome = match r.outcome {
            DeliveryOutcome::Delivered => "delivered",
            DeliveryOutcome::Undeliverable => "undeliverable",
        };
        let path: Vec<String> = r.path.iter().map(|v| v.get().to_string()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            record.index,
            record.source,
            record.dest,
            outcome,
            r.data_hops,
            r.discoveries_triggered,
            r.control_messages,
            u8::from(r.cache_hit),
            path.join(">"),
        );
    }

    let _ = writeln!(out, "\n# epochs {tag}");
    let _ = writeln!(out, "epoch,table_bytes");
    for (epoch, bytes) in m.table_bytes_by_epoch.iter().enumerate() {
        let _ = writeln!(out, "{epoch},{bytes}");
    }

    let _ = writeln!(out, "\n# tables {tag} bytes={}", final_table_bytes(run));
    let _ = writeln!(out, "owner,dest,ordinal");
    for (owner, dest, ordinal) in &run.trained {
        let _ = writeln!(out, "{owner},{dest},{ordinal}");
    }

    let _ = writeln!(out, "\n# traffic {tag}");
    let _ = writeln!(out, "node,dest,packets");
    for ((node, dest), packets) in &m.traffic {
        let _ = writeln!(out, "{node},{dest},{packets}");
    }

    let _ = writeln!(out, "\n# pairs {tag}");
    let _ = writeln!(out, "source,dest,transfers,deliveries,cache_hits,discoveries,data_hops_total");
    for ((source, dest), p) in &m.per_pair {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            source, dest, p.transfers, p.deliveries, p.cache_hits, p.discoveries, p.data_hops,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use masknet::run_scenario;
    use masknet::sim::{GraphSpec, Scenario, ScenarioEvent};
    use masknet::Backend;

    fn desk_run() -> RunOutput {
        let scenario = Scenario {
            name: "desk".into(),
            backend: Backend::LinkState,
            seed: 7,
            graph: GraphSpec::Explicit {
                nodes: 5,
                edges: vec![(1, 3), (1, 4), (2, 4), (3, 5), (4, 5)],
            },
            workload: None,
            events: vec![
                ScenarioEvent::Transfer { source: 1, dest: 2 },
                ScenarioEvent::Transfer { source: 1, dest: 2 },
                ScenarioEvent::Transfer { source: 4, dest: 2 },
            ],
        };
        run_scenario(&scenario).unwrap()
    }

    #[test]
    fn summary_row_pins_the_format() {
        let text = render_metrics_output(&[desk_run()]);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SCHEMA_HEADER));
        assert_eq!(lines.next(), Some(SUMMARY_COLUMNS));
        assert_eq!(lines.next(), Some("desk,link_state,3,3,2,1,0,5,25"));
    }

    #[test]
    fn event_rows_carry_paths() {
        let text = render_metrics_output(&[desk_run()]);
        assert!(text.contains("\n# events scenario=desk backend=link_state\n"));
        assert!(text.contains("\n0,1,2,delivered,2,1,0,0,1>4>2\n"));
        assert!(text.contains("\n1,1,2,delivered,2,0,0,1,1>4>2\n"));
        assert!(text.contains("\n2,4,2,delivered,1,0,0,1,4>2\n"));
    }

    #[test]
    fn state_blocks_list_tables_traffic_and_pairs() {
        let text = render_metrics_output(&[desk_run()]);
        assert!(text.contains("\n# tables scenario=desk backend=link_state bytes=25\n"));
        assert!(text.contains("\nowner,dest,ordinal\n1,2,2\n4,2,2\n"));
        assert!(text.contains("\n# traffic scenario=desk backend=link_state\n"));
        assert!(text.contains("\nnode,dest,packets\n1,2,2\n4,2,3\n"));
        assert!(text.contains("\n# pairs scenario=desk backend=link_state\n"));
        assert!(text.contains("\n1,2,2,2,1,1,4\n"));
        assert!(text.contains("\n4,2,1,1,1,0,1\n"));
        assert!(text.contains("\n# epochs scenario=desk backend=link_state\nepoch,table_bytes\n0,25\n"));
    }

    #[test]
    fn rendering_is_deterministic() {
        assert_eq!(
            render_metrics_output(&[desk_run()]),
            render_metrics_output(&[desk_run()])
        );
    }
}
