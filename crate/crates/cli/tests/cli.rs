use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sbmconf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbmconf"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = sbmconf(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn critical_n_exact_is_25() {
    let out = stdout(&["critical-n", "--p", "0.9", "--q", "0.1", "--alpha", "0.05", "--mode", "exact"]);
    assert_eq!(out.trim(), "25");
}

#[test]
fn critical_n_json() {
    let out = stdout(&[
        "critical-n", "--p", "0.9", "--q", "0.1", "--alpha", "0.05", "--mode", "almost", "--a", "0.25",
        "--criterion", "half-level", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["experiment"], "critical-n");
    assert_eq!(v["results"][0]["critical_n"], 14);
}

#[test]
fn curve_shape_and_header() {
    let out = stdout(&[
        "curve", "--p", "0.9", "--q", "0.1", "--alpha", "0.05", "--mode", "exact", "--n-min", "2", "--n-max", "60",
    ]);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "n,required_level,mode,p,q,alpha,a");
    let rows: Vec<(usize, f64)> = lines
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            assert_eq!(cells.len(), 7);
            assert_eq!(cells[2], "exact");
            assert_eq!(cells[6], "");
            (cells[0].parse().unwrap(), cells[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 59);
    assert!(rows.windows(2).all(|w| w[1].0 == w[0].0 + 1));
    for &(n, level) in &rows {
        assert!((0.0..=1.0).contains(&level));
        if n <= 15 {
            assert_eq!(level, 1.0);
        }
    }
    let tail: Vec<f64> = rows.iter().filter(|r| r.0 >= 22).map(|r| r.1).collect();
    assert!(tail.windows(2).all(|w| w[1] < w[0]));
    let level_25 = rows.iter().find(|r| r.0 == 25).unwrap().1;
    assert!((level_25 - 0.4397).abs() < 5e-4);
}

#[test]
fn curve_almost_metadata() {
    let out = stdout(&[
        "curve", "--p", "0.9", "--q", "0.1", "--alpha", "0.05", "--mode", "almost", "--a", "0.1", "--n-min", "10",
        "--n-max", "30", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["config"]["critical_n_literal"], 24);
    assert_eq!(v["config"]["critical_n_half_level"], 20);
    assert_eq!(v["results"].as_array().unwrap().len(), 21);
}

#[test]
fn uniform_posterior_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    fs::write(&g, "n 3\n1 2\n").unwrap();
    let out = stdout(&["posterior", "--graph", path_str(&g), "--p", "0.5", "--q", "0.5", "--n", "3"]);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert_eq!(row.rsplit(',').next().unwrap(), "0.25");
    }
}

#[test]
fn sample_posterior_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g1 = dir.path().join("a.txt");
    let g2 = dir.path().join("b.txt");
    let t1 = dir.path().join("a.csv");
    let t2 = dir.path().join("b.csv");
    for (g, t) in [(&g1, &t1), (&g2, &t2)] {
        stdout(&["sample", "--n", "9", "--p", "0.8", "--q", "0.2", "--m", "3", "--seed", "17", "--out", path_str(g)]);
        stdout(&["posterior", "--graph", path_str(g), "--p", "0.8", "--q", "0.2", "--out", path_str(t)]);
    }
    assert_eq!(fs::read(&g1).unwrap(), fs::read(&g2).unwrap());
    assert_eq!(fs::read(&t1).unwrap(), fs::read(&t2).unwrap());
    let table = fs::read_to_string(&t1).unwrap();
    assert_eq!(table.lines().count(), 1 + 256);
    let total: f64 = table.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn sample_from_truth_file() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.txt");
    fs::write(&truth, "000111\n").unwrap();
    let out = stdout(&["sample", "--n", "6", "--p", "1", "--q", "0", "--truth", path_str(&truth), "--seed", "1"]);
    assert_eq!(out, "n 6\n1 2\n1 3\n2 3\n4 5\n4 6\n5 6\n");
}

#[test]
fn stochastic_commands_are_deterministic() {
    let runs = [
        vec!["coverage", "--n", "10", "--p", "0.8", "--q", "0.1", "--alpha", "0.5", "--reps", "100", "--seed", "3",
             "--random-truth", "--format", "json"],
        vec!["mcmc", "--graph", "GRAPH", "--p", "0.8", "--q", "0.2", "--steps", "5000", "--seed", "9"],
        vec!["lr-test", "--theta", "00001111", "--eta", "00000111", "--p", "0.7", "--q", "0.3", "--reps", "50",
             "--seed", "5", "--format", "json"],
        vec!["early-stop", "--n", "6", "--p", "0.9", "--q", "0.1", "--alpha", "0.5", "--lengths", "200,400",
             "--reps", "5", "--seed", "2"],
        vec!["concentration", "--n", "8", "--p", "0.9", "--q", "0.1", "--target", "ball", "--a", "0.2", "--reps",
             "20", "--seed", "2"],
    ];
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    stdout(&["sample", "--n", "8", "--p", "0.8", "--q", "0.2", "--seed", "1", "--out", path_str(&g)]);
    for run in runs {
        let args: Vec<&str> = run.iter().map(|&a| if a == "GRAPH" { path_str(&g) } else { a }).collect();
        assert_eq!(stdout(&args), stdout(&args), "{args:?}");
    }
}

#[test]
fn seed_changes_sample() {
    let a = stdout(&["sample", "--n", "12", "--p", "0.5", "--q", "0.5", "--seed", "1"]);
    let b = stdout(&["sample", "--n", "12", "--p", "0.5", "--q", "0.5", "--seed", "2"]);
    assert_ne!(a, b);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["critical-n", "--p", "0.9", "--q", "0.1", "--alpha", "0.05", "--nope"],
        vec!["frobnicate"],
        vec!["sample", "--n", "4", "--p", "0.5", "--q", "0.5"],
        vec!["curve", "--p", "0.9", "--q", "0.1", "--alpha", "0.05", "--mode", "almost"],
    ] {
        assert_eq!(sbmconf(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn computation_errors_exit_1_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    fs::write(&g, "n 3\n1 2\n").unwrap();
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["critical-n", "--p", "1.5", "--q", "0.1", "--alpha", "0.05"], "invalid_input"),
        (vec!["posterior", "--graph", "/nonexistent/g.txt", "--p", "0.5", "--q", "0.5"], "io"),
        (vec!["posterior", "--graph", path_str(&g), "--p", "0.5", "--q", "0.5", "--n", "4"], "dimension_mismatch"),
        (vec!["posterior", "--graph", path_str(&g), "--p", "0.5", "--q", "0.5", "--n-cap", "2"], "capacity"),
        (vec!["lr-test", "--theta", "0011", "--eta", "1100", "--p", "0.7", "--q", "0.3", "--seed", "1"], "invalid_input"),
    ];
    for (args, kind) in cases {
        let out = sbmconf(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(err["error"], kind, "{args:?}");
        assert!(err["message"].as_str().unwrap().len() > 5);
    }
}

#[test]
fn bad_graph_file_is_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    fs::write(&g, "n 3\n2 1\n").unwrap();
    let out = sbmconf(&["posterior", "--graph", path_str(&g), "--p", "0.5", "--q", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "parse");
}

#[test]
fn credible_and_enlarged_sets() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    stdout(&["sample", "--n", "10", "--p", "0.9", "--q", "0.1", "--seed", "4", "--out", path_str(&g)]);
    let out = stdout(&["credible", "--graph", path_str(&g), "--p", "0.9", "--q", "0.1", "--level", "0.5"]);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "rank,index,assignment,mass,cumulative");
    assert_eq!(rows.len(), 2);
    assert!(rows[1].contains("0000011111"));

    let out = stdout(&[
        "credible", "--graph", path_str(&g), "--p", "0.9", "--q", "0.1", "--level", "0.5", "--radius", "1",
        "--enlarge",
    ]);
    // the MAP assignment and its ten single flips
    assert_eq!(out.lines().count(), 1 + 11);
}

#[test]
fn json_report_schema_and_rounding() {
    let out = stdout(&["confidence", "--n", "25", "--p", "0.9", "--q", "0.1", "--alpha", "0.05", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for key in ["experiment", "config", "results", "timestamp", "seed"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["timestamp"], "1970-01-01T00:00:00Z");
    let level = &v["results"][0]["required_level"];
    assert_eq!(level.to_string(), "0.439680843682");
}

#[test]
fn conditions_sweep_grows() {
    let out = stdout(&["conditions", "--kind", "ch-exact-simple", "--coef1", "16", "--coef2", "1"]);
    let values: Vec<f64> = out.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 3);
    assert!(values.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn mcmc_trace_dump() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let trace = dir.path().join("trace.csv");
    stdout(&["sample", "--n", "6", "--p", "0.7", "--q", "0.3", "--seed", "1", "--out", path_str(&g)]);
    let out = stdout(&[
        "mcmc", "--graph", path_str(&g), "--p", "0.7", "--q", "0.3", "--steps", "300", "--seed", "2", "--trace",
        path_str(&trace), "--exact", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["config"]["tv_to_exact"].as_f64().unwrap() <= 1.0);
    let dump = fs::read_to_string(&trace).unwrap();
    assert_eq!(dump.lines().next().unwrap(), "step,index,log_likelihood");
    assert_eq!(dump.lines().count(), 301);
}
