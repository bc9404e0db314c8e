//! End-to-end checks of the command-line driver: output schemas,
//! reproducibility, exit codes, and the metadata sidecar.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_bosonic-ising")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("bosonic_ising_cli").join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

const KMC_CONFIG: &str = r#"{
  "experiment": "kmc",
  "instance": {
    "type": "inline",
    "coupling": [[0.0, -10.0], [-10.0, 0.0]],
    "n": 3,
    "lambda": -0.5
  },
  "params": { "alpha": 1.0, "xi": 0.001, "beta": 0.0333333333333 },
  "init": "uniform",
  "t_grid": { "min": 0.5, "max": 8.0, "points": 6 },
  "n_traj": 400,
  "seed": 42
}"#;

#[test]
fn kmc_runs_are_byte_identical_across_invocations_and_threads() {
    let dir = scratch("kmc_determinism");
    let config = dir.join("kmc.json");
    write(&config, KMC_CONFIG);

    let csv_for = |name: &str, threads: &str| -> Vec<u8> {
        let out_path = dir.join(name);
        let output = run(&[
            "kmc",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "42",
            "--out",
            out_path.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(
            output.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        std::fs::read(out_path).unwrap()
    };

    let a = csv_for("a.csv", "1");
    let b = csv_for("b.csv", "1");
    let c = csv_for("c.csv", "2");
    assert_eq!(a, b);
    assert_eq!(a, c);

    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("t,error_est,error_stderr,mean_energy\n"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn seed_override_changes_the_ensemble() {
    let dir = scratch("kmc_seed");
    let config = dir.join("kmc.json");
    write(&config, KMC_CONFIG);
    let get = |seed: &str, name: &str| {
        let out_path = dir.join(name);
        let output = run(&[
            "kmc",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(output.status.success());
        std::fs::read(out_path).unwrap()
    };
    assert_ne!(get("1", "s1.csv"), get("2", "s2.csv"));
}

#[test]
fn equilibrium_schema_and_sidecar() {
    let dir = scratch("equilibrium");
    let config = dir.join("eq.json");
    write(
        &config,
        r#"{
  "experiment": "equilibrium",
  "instance": {
    "type": "inline",
    "coupling": [[0.0, -10.0], [-10.0, 0.0]],
    "n": 1,
    "lambda": -0.5
  },
  "n_list": [1, 2],
  "kt_over_jn": { "min": 0.5, "max": 3.0, "points": 5 },
  "j_scale": 10.0
}"#,
    );
    let out_path = dir.join("eq.csv");
    let output = run(&[
        "equilibrium",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("kind,N,kT_over_JN,mean_spin_over_N,error_prob\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 5);
    assert!(text.contains("bosonic,1,"));
    assert!(text.contains("distinguishable,2,"));

    let sidecar: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(format!("{}.meta.json", out_path.display())).unwrap(),
    )
    .unwrap();
    assert_eq!(sidecar["seed"], 42);
    assert_eq!(sidecar["version"], env!("CARGO_PKG_VERSION"));
    assert!(sidecar["wall_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(sidecar["config"]["experiment"], "equilibrium");
}

#[test]
fn ode_and_quantum_schemas() {
    let dir = scratch("schemas");
    let ode_config = dir.join("ode.json");
    write(
        &ode_config,
        r#"{
  "experiment": "ode",
  "instance": { "type": "two_level", "n": 8, "gap": 10.0 },
  "params": { "beta": 0.1 },
  "init": "half",
  "t_grid": { "min": 0.1, "max": 2.0, "points": 4 }
}"#,
    );
    let ode_csv = dir.join("ode.csv");
    let output = run(&[
        "ode",
        "--config",
        ode_config.to_str().unwrap(),
        "--out",
        ode_csv.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = std::fs::read_to_string(&ode_csv).unwrap();
    assert!(text.starts_with("t,L1_to_eq,ground_pop\n"));

    let q_config = dir.join("quantum.json");
    write(
        &q_config,
        r#"{
  "experiment": "quantum",
  "instance": {
    "type": "inline",
    "coupling": [[0.0, -0.5], [-0.5, 0.0]],
    "n": 1,
    "lambda": 0.0
  },
  "gamma_feedback": 0.3,
  "eta": 1.0,
  "gamma_meas": 0.4,
  "alpha": 1.0,
  "init": "maximally_mixed",
  "t_grid": { "min": 0.2, "max": 1.0, "points": 3 }
}"#,
    );
    let q_csv = dir.join("quantum.csv");
    let output = run(&[
        "quantum",
        "--config",
        q_config.to_str().unwrap(),
        "--out",
        q_csv.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let text = std::fs::read_to_string(&q_csv).unwrap();
    assert!(text.starts_with("t,trace_defect,offdiag_mass,max_residual\n"));
    for line in text.lines().skip(1) {
        let residual: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(residual < 1e-12);
    }
}

#[test]
fn anneal_schema() {
    let dir = scratch("anneal");
    let config = dir.join("anneal.json");
    write(
        &config,
        r#"{
  "experiment": "anneal",
  "instance": {
    "type": "inline",
    "coupling": [[0.0, -10.0], [-10.0, 0.0]],
    "n": 1,
    "lambda": -0.5
  },
  "n_list": [1, 2],
  "tau0_list": [1.0],
  "n_traj": 200
}"#,
    );
    let out_path = dir.join("anneal.csv");
    let output = run(&[
        "anneal",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("tau0,N,residual_energy,stderr\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn maxcut_reports_oracle_side_by_side() {
    let dir = scratch("maxcut");
    let graph = dir.join("g.txt");
    write(&graph, "0 1\n0 2\n1 2\n");
    let out_path = dir.join("cut.csv");
    let output = run(&[
        "maxcut",
        "--graph",
        graph.to_str().unwrap(),
        "--oracle",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("simulated best cut"));
    assert!(stdout.contains("brute-force optimum"));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("graph,n_vertices,sim_best_cut,oracle_cut\n"));
    let row = text.lines().nth(1).unwrap();
    assert!(row.ends_with(",3,2,2"), "row: {row}");
}

#[test]
fn exit_codes() {
    // Usage error: unknown subcommand.
    let output = run(&["frobnicate"]);
    assert_eq!(output.status.code(), Some(2));

    // Usage error: missing required option.
    let output = run(&["equilibrium"]);
    assert_eq!(output.status.code(), Some(2));

    // Runtime error: nonexistent config file.
    let output = run(&["kmc", "--config", "/no/such/config.json"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("error"));

    // Runtime error: config/subcommand mismatch.
    let dir = scratch("exit_codes");
    let config = dir.join("kmc.json");
    write(&config, KMC_CONFIG);
    let output = run(&["anneal", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
}
