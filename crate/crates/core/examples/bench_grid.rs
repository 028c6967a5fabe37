//! A small experiment grid through the harness: planners by criteria on
//! a-priori lattices, written as CSV and JSON lines, then one trace
//! replayed.
//!
//! cargo run --release --example bench_grid -- [out_dir]

use ippbeam::harness::{read_traces, run_experiment, ExperimentSpec};

const SPEC: &str = r#"{
  "name": "small",
  "scenario": {
    "kind": "graph",
    "grid": {"extent": 15, "gain_mode": "clustered", "seed": 0},
    "setting": {"kind": "a_priori"}
  },
  "planners": [
    {"planner": "nbs", "params": {"beam_width": 1, "depth": 100}},
    {"planner": "dbs", "params": {"beam_width": 100, "depth": 100}},
    {"planner": "spt", "params": {"alpha": 0.75}},
    {"planner": "tsp", "params": {"alpha": 0.75}}
  ],
  "criteria": ["gain", "ratio", "expected_gain"],
  "strategies": ["every_node", "no_replan"],
  "budgets": [30],
  "seeds": [1, 2, 3],
  "skip_invalid": true
}"#;

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/bench_grid".into());
    let mut spec = ExperimentSpec::from_json(SPEC)?;
    spec.output_dir = Some(out.clone().into());
    let report = run_experiment(&spec)?;
    for s in &report.summary {
        println!(
            "{:<4} {:<10} {:<14} {:<10} gain {:>7.1} ± {:>5.1}  plan {:.4} s",
            s.planner, s.params, s.criterion, s.strategy, s.gain_mean, s.gain_std, s.plan_time_mean
        );
    }
    let traces = read_traces(format!("{out}/traces.jsonl"))?;
    println!("wrote {} episodes to {out}; first replays identically: {}", traces.len(), traces[0].replay()?);
    Ok(())
}
