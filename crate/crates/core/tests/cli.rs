use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ippbeam"))
}

#[test]
fn gen_graph_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let st = bin()
            .args(["gen-graph", "--extent", "50", "--mode", "clustered", "--seed", "1", "-o"])
            .arg(p)
            .status()
            .unwrap();
        assert!(st.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let g = ippbeam::PlanGraph::from_json(&text).unwrap();
    assert_eq!(g.vertex_count(), 51 * 51);
}

#[test]
fn bench_single_cell_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["bench", "--extent", "10", "--planner", "nbs", "--beam", "1", "--seeds", "2", "--budget", "15", "-o"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2, "{summary}");
    assert!(summary.starts_with("scenario,planner,params,criterion,strategy,episodes,failed,gain_mean"));
    let st = bin().arg("replay").arg(dir.path().join("traces.jsonl")).status().unwrap();
    assert!(st.success());
}

#[test]
fn sim_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["sim", "--task", "exploration", "--planner", "spt", "--alpha", "1.0", "--seeds", "1", "--budget", "10", "-o"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let curves = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    // 10 s at 0.2 s per step
    assert_eq!(curves.lines().count(), 1 + 50);
}

#[test]
fn failing_cells_set_the_exit_code() {
    // the oracle refuses a 10 x 10 lattice
    let out = bin()
        .args(["bench", "--extent", "10", "--planner", "oracle", "--seeds", "1", "--budget", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAILED"));
}

#[test]
fn bad_flags_are_usage_errors() {
    let out = bin().args(["bench", "--planner", "astar"]).output().unwrap();
    assert!(!out.status.success());
    let out = bin().args(["sim", "--task", "mapping"]).output().unwrap();
    assert!(!out.status.success());
}
