use std::fs;
use std::path::Path;

use asymalign::cli::main_with_args;

fn run(out: &Path, args: &[&str]) -> i32 {
    let mut full = vec!["asymalign", "--out", out.to_str().unwrap()];
    full.extend_from_slice(args);
    main_with_args(full)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const HEADER: &str = "frame,pred_x,pred_y,pred_w,pred_h,gt_x,gt_y,gt_w,gt_h,present\n";

#[test]
fn refuses_non_empty_output_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert_eq!(run(&out, &["simulate", "--scene", "static-texture"]), 0);
    assert_eq!(run(&out, &["simulate", "--scene", "static-texture"]), 2);
    assert_eq!(run(&out, &["--force", "simulate", "--scene", "static-texture"]), 0);
}

#[test]
fn static_scene_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["simulate", "--scene", "static-texture"]), 0);
    assert_eq!(fs::read_to_string(dir.path().join("events.csv")).unwrap(), "t_us,x,y,polarity\n");
}

#[test]
fn moving_box_is_sparse_in_events() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["simulate"]), 0);
    let report = json(&dir.path().join("asymmetry.json"));
    assert!(report["r_event"].as_f64().unwrap() < 0.05);
    assert_eq!(report["r_rgb"].as_f64().unwrap(), 1.0);
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"scene": {"field": {"type": "moving_box", "velocity": 3}}}"#).unwrap();
    assert_eq!(run(&dir.path().join("o"), &["--config", cfg.to_str().unwrap(), "simulate"]), 2);
    fs::write(&cfg, r#"{"distill": {"train": {"stepz": 3}}}"#).unwrap();
    assert_eq!(run(&dir.path().join("o"), &["--config", cfg.to_str().unwrap(), "distill"]), 2);
    assert!(!dir.path().join("o").exists());
}

#[test]
fn dirac_demo_and_numeric_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&dir.path().join("std"), &["sinkhorn", "--dirac", "3"]), 3);
    let out = dir.path().join("log");
    assert_eq!(run(&out, &["sinkhorn", "--dirac", "3", "--log-domain"]), 0);
    assert_eq!(json(&out.join("plan_stats.json"))["cost"].as_f64().unwrap(), 9.0);
}

#[test]
fn oracle_gap_is_nonnegative_and_sweep_cost_non_increasing() {
    let dir = tempfile::tempdir().unwrap();
    for seed in ["1", "2", "3"] {
        let out = dir.path().join(seed);
        let args = ["--seed", seed, "sinkhorn", "--grid", "3", "--eps-sweep", "--oracle", "--log-domain", "--max-iters", "100000", "--marginal-tol", "1e-12"];
        assert_eq!(run(&out, &args), 0);
        let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').filter_map(|v| v.parse().ok()).collect())
            .collect();
        assert_eq!(rows.len(), 4);
        // epsilon, cost, feasible_cost, iterations, marginal_err, exact, gap
        for r in &rows {
            assert!(r[6] >= 0.0, "negative gap {r:?}");
        }
        for w in rows.windows(2) {
            assert!(w[1][1] <= w[0][1] + 1e-9, "{w:?}");
        }
    }
}

#[test]
fn maps_from_files_and_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    let q = dir.path().join("q.csv");
    fs::write(&p, "0,1\n2,0\n").unwrap();
    fs::write(&q, "1,0\n0,3\n").unwrap();
    let args = ["sinkhorn", "--p", p.to_str().unwrap(), "--q", q.to_str().unwrap(), "--epsilon", "1"];
    assert_eq!(run(&dir.path().join("ok"), &args), 0);
    fs::write(&q, "1,0\n0,x\n").unwrap();
    assert_eq!(run(&dir.path().join("bad"), &args), 2);
}

#[test]
fn metrics_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let perfect = dir.path().join("perfect.csv");
    fs::write(&perfect, format!("{HEADER}0,1,2,10,12,1,2,10,12,1\n1,3,2,10,12,3,2,10,12,1\n")).unwrap();
    assert_eq!(run(&dir.path().join("p"), &["metrics", perfect.to_str().unwrap()]), 0);
    let r = json(&dir.path().join("p/report.json"));
    for key in ["sr_auc", "pr_at_20", "npr_auc"] {
        assert_eq!(r[key].as_f64().unwrap(), 1.0);
    }

    let rows = "0,0,0,20,20,0,0,20,20,1\n1,30,0,20,20,0,0,20,20,1\n2,5,0,20,20,0,0,20,20,1\n";
    let with_absent = "0,0,0,20,20,0,0,20,20,1\n1,80,80,5,5,0,0,20,20,0\n2,30,0,20,20,0,0,20,20,1\n3,5,0,20,20,0,0,20,20,1\n4,9,9,1,1,0,0,20,20,0\n";
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    fs::write(&a, format!("{HEADER}{rows}")).unwrap();
    fs::write(&b, format!("{HEADER}{with_absent}")).unwrap();
    assert_eq!(run(&dir.path().join("ra"), &["metrics", a.to_str().unwrap()]), 0);
    assert_eq!(run(&dir.path().join("rb"), &["metrics", b.to_str().unwrap()]), 0);
    assert_eq!(
        fs::read(dir.path().join("ra/curves.csv")).unwrap(),
        fs::read(dir.path().join("rb/curves.csv")).unwrap()
    );

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, format!("{HEADER}0,0,0,20,20,0,0,20,20,1\n1,0,0,-2,20,0,0,20,20,1\n")).unwrap();
    assert_eq!(run(&dir.path().join("rbad"), &["metrics", bad.to_str().unwrap()]), 2);
}

#[test]
fn distill_echo_round_trips_and_divergence_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"ta": {"hidden_dim": 6, "latent_dim": 10},
            "distill": {"train": {"steps": 12, "scenario": {"grid": 8, "shift": 3, "feature_dim": 4}}}}"#,
    )
    .unwrap();
    let first = dir.path().join("first");
    assert_eq!(run(&first, &["--seed", "11", "--config", cfg.to_str().unwrap(), "distill", "--lambda2", "5"]), 0);
    let echo = first.join("config_echo.json");
    assert_eq!(json(&echo)["seed"].as_u64(), Some(11));
    let second = dir.path().join("second");
    assert_eq!(run(&second, &["--config", echo.to_str().unwrap(), "distill"]), 0);
    for f in ["trace.csv", "curves.csv", "sequence.csv", "response_maps.csv", "report.json"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
    assert_eq!(fs::read_to_string(first.join("trace.csv")).unwrap().lines().count(), 13);

    let args = ["--config", cfg.to_str().unwrap(), "distill", "--optimizer", "sgd", "--learning-rate", "1e300"];
    assert_eq!(run(&dir.path().join("boom"), &args), 4);
}

#[test]
fn sweep_emits_thirty_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"ta": {"hidden_dim": 4, "latent_dim": 6},
            "distill": {"train": {"steps": 2, "scenario": {"grid": 6, "shift": 2, "feature_dim": 3}}}}"#,
    )
    .unwrap();
    let out = dir.path().join("sweep");
    assert_eq!(run(&out, &["--config", cfg.to_str().unwrap(), "distill", "--sweep"]), 0);
    let text = fs::read_to_string(out.join("ablation.csv")).unwrap();
    assert_eq!(text.lines().count(), 31);
    assert!(text.starts_with("lambda1,lambda2,"));
}
