//! End-to-end CLI behavior: exit codes, output files, overrides, and
//! the strict config schema as seen from the command line.

use std::fs;
use std::path::Path;

use micromix::cli::{run, run_command};
use micromix::config::parse_config_str;
use micromix::error::Error;

fn write_config(dir: &Path, name: &str, value: serde_json::Value) -> String {
    let path = dir.join(name);
    fs::write(&path, value.to_string()).unwrap();
    path.display().to_string()
}

fn simulate_config(out: &Path) -> serde_json::Value {
    serde_json::json!({
        "mode": "simulate",
        "network": {"hosts": 2, "edges": [[0, 1, 1.0]]},
        "dynamics": {"kind": "illustrative"},
        "gamma": 0.25,
        "horizon": 1.0,
        "samples": 11,
        "seed": 5,
        "output": out.display().to_string(),
        "init": {"kind": "vectors", "vectors": [[4.5, 4.5], [9.5, 9.5]]}
    })
}

#[test]
fn simulate_without_edges_writes_pure_flow() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut value = simulate_config(&out);
    value["network"] = serde_json::json!({"hosts": 2, "edges": []});
    let config_path = write_config(dir.path(), "cfg.json", value);
    let code = run(["micromix", "simulate", "--config", &config_path]);
    assert_eq!(code, 0);

    let events = fs::read_to_string(out.join("events.csv")).unwrap();
    assert_eq!(events.lines().count(), 1, "no events beyond the header");

    // the trajectory equals the pure local flow of each host
    let dyn_ = micromix::dynamics::builtin_illustrative();
    let cfg = micromix::integrator::IntegratorConfig::default();
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let starts = [[4.5, 4.5], [9.5, 9.5]];
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let time: f64 = fields[0].parse().unwrap();
        let host: usize = fields[1].parse().unwrap();
        let dim: usize = fields[2].parse().unwrap();
        let value: f64 = fields[3].parse().unwrap();
        let reference =
            micromix::dynamics::flow(&dyn_, &starts[host], time, &cfg).unwrap();
        assert!(
            (value - reference[dim]).abs() < 1e-7,
            "t = {time}, host {host}, dim {dim}"
        );
    }
    assert!(out.join("manifest.json").exists());
}

#[test]
fn lfa_mode_refuses_boundary_gamma_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let value = serde_json::json!({
        "mode": "lfa-pair",
        "network": {"hosts": 2, "edges": [[0, 1, 1.0]]},
        "dynamics": {"kind": "illustrative"},
        "gamma": 0.1,
        "horizon_star": 2.0,
        "samples": 11,
        "output": out.display().to_string(),
        "init": {"kind": "basin_probs", "probs": [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]]}
    });
    let config_path = write_config(dir.path(), "cfg.json", value.clone());
    let code = run(["micromix", "lfa", "--config", &config_path]);
    assert_eq!(code, 2);

    // the error message cites the full boundary set
    let cfg = parse_config_str(&value.to_string()).unwrap();
    let err = run_command(&cfg).unwrap_err();
    match err {
        Error::GammaOnBoundary { gamma, intervals } => {
            assert_eq!(gamma, 0.1);
            // bracket midpoints sit within 5e-7 of the true boundary
            assert!(
                intervals.contains("0.09999") || intervals.contains("0.10000"),
                "{intervals}"
            );
            assert!(
                intervals.contains("0.39999") || intervals.contains("0.40000"),
                "{intervals}"
            );
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn lfa_pair_mode_writes_singles_and_maps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let value = serde_json::json!({
        "mode": "lfa-pair",
        "network": {"hosts": 2, "edges": [[0, 1, 1.0]]},
        "dynamics": {"kind": "illustrative"},
        "gamma": 0.25,
        "horizon_star": 2.0,
        "samples": 11,
        "output": out.display().to_string(),
        "init": {"kind": "basin_probs", "probs": [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]]}
    });
    let config_path = write_config(dir.path(), "cfg.json", value);
    let code = run(["micromix", "lfa", "--config", &config_path]);
    assert_eq!(code, 0);
    let singles = fs::read_to_string(out.join("singles.csv")).unwrap();
    // header + 11 times x 2 hosts x 4 basins
    assert_eq!(singles.lines().count(), 1 + 11 * 2 * 4);
    let maps: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("transition_maps.json")).unwrap())
            .unwrap();
    assert_eq!(maps[0]["edge"], serde_json::json!([0, 1]));
    assert_eq!(maps[0]["map"].as_array().unwrap().len(), 16);
}

#[test]
fn lfa_full_variant_writes_mass_preserving_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let value = serde_json::json!({
        "mode": "lfa-pair",
        "network": {"hosts": 2, "edges": [[0, 1, 1.0]]},
        "dynamics": {"kind": "illustrative"},
        "gamma": 0.25,
        "horizon_star": 1.0,
        "samples": 5,
        "output": out.display().to_string(),
        "init": {"kind": "basin_probs", "probs": [[0.5, 0.5, 0.0, 0.0], [0.0, 0.0, 0.5, 0.5]]}
    });
    let config_path = write_config(dir.path(), "cfg.json", value);
    // the --variant flag overrides the config's pair mode
    let code = run([
        "micromix",
        "lfa",
        "--config",
        &config_path,
        "--variant",
        "full",
    ]);
    assert_eq!(code, 0);
    let tensor = fs::read_to_string(out.join("tensor.csv")).unwrap();
    assert_eq!(tensor.lines().next().unwrap(), "t_star,b0,b1,probability");
    // mass sums to 1 at every sampled time
    let mut mass = std::collections::BTreeMap::new();
    for line in tensor.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        *mass.entry(fields[0].to_string()).or_insert(0.0) +=
            fields[3].parse::<f64>().unwrap();
    }
    assert_eq!(mass.len(), 5);
    for (time, total) in mass {
        assert!((total - 1.0f64).abs() < 1e-9, "mass {total} at {time}");
    }
    assert!(out.join("singles.csv").exists());
}

#[test]
fn compare_mode_produces_error_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    // frequent, weak interactions against the synchronized mean
    let value = serde_json::json!({
        "mode": "compare",
        "comparator": "hfcsa",
        "network": {"hosts": 2, "edges": [[0, 1, 2500.0]]},
        "dynamics": {"kind": "illustrative"},
        "gamma": 0.02,
        "horizon": 1.0,
        "samples": 21,
        "seed": 9,
        "runs": 8,
        "output": out.display().to_string(),
        "init": {"kind": "vectors", "vectors": [[2.0, 2.0], [12.0, 12.0]]}
    });
    let config_path = write_config(dir.path(), "cfg.json", value);
    let code = run(["micromix", "compare", "--config", &config_path]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("error.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "gamma,lambda_tot,error,skipped,reason");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let error: f64 = row[2].parse().unwrap();
    assert!(error.is_finite() && error >= 0.0);
    assert_eq!(row[3], "0");
}

#[test]
fn sweep_mode_skips_boundary_cells_and_exit_4_when_all_skip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let base = serde_json::json!({
        "mode": "sweep",
        "comparator": "lfa-pair",
        "network": {"hosts": 2, "edges": [[0, 1, 1.0]]},
        "dynamics": {"kind": "illustrative"},
        "gamma": 0.25,
        "gamma_values": [0.1, 0.4],
        "lambda_tot_values": [0.025],
        "horizon_star": 1.0,
        "samples": 11,
        "runs": 4,
        "output": out.display().to_string(),
        "init": {"kind": "dirichlet"}
    });
    let config_path = write_config(dir.path(), "cfg.json", base.clone());
    let code = run(["micromix", "sweep", "--config", &config_path]);
    assert_eq!(code, 4, "both cells sit on the boundary set");
    let csv = fs::read_to_string(out.join("surface.csv")).unwrap();
    assert_eq!(csv.matches("GammaOnBoundary").count(), 2);

    // adding a valid gamma turns the exit code back to 0
    let mut partial = base;
    partial["gamma_values"] = serde_json::json!([0.1, 0.25]);
    let config_path = write_config(dir.path(), "cfg2.json", partial);
    let code = run(["micromix", "sweep", "--config", &config_path]);
    assert_eq!(code, 0);
}

#[test]
fn validate_config_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.json", simulate_config(dir.path()));
    assert_eq!(run(["micromix", "validate-config", "--config", &good]), 0);

    let bad = simulate_config(dir.path()).to_string().replace("\"gamma\"", "\"gama\"");
    let bad_path = dir.path().join("bad.json");
    fs::write(&bad_path, bad).unwrap();
    assert_eq!(
        run([
            "micromix",
            "validate-config",
            "--config",
            &bad_path.display().to_string()
        ]),
        2
    );

    assert_eq!(
        run(["micromix", "validate-config", "--config", "/nonexistent.json"]),
        2
    );
}

#[test]
fn flag_overrides_take_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let config_path = write_config(dir.path(), "cfg.json", simulate_config(&out_a));

    let code = run([
        "micromix",
        "simulate",
        "--config",
        &config_path,
        "--seed",
        "1234",
        "--out",
        &out_b.display().to_string(),
    ]);
    assert_eq!(code, 0);
    assert!(!out_a.exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_b.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["base_seed"], 1234);
    assert_eq!(manifest["config"]["seed"], 1234);
}

#[test]
fn network_and_init_round_trip_through_validate() {
    // parse -> serialize -> parse is the identity on a demo-scale config
    let net = micromix::network::demo_network_10().unwrap();
    let edges: Vec<serde_json::Value> = net
        .edges()
        .iter()
        .map(|&(i, j, r)| serde_json::json!([i, j, r]))
        .collect();
    let value = serde_json::json!({
        "mode": "hflsa",
        "network": {"hosts": 10, "edges": edges},
        "dynamics": {"kind": "illustrative"},
        "gamma": 0.02,
        "horizon": 1.0,
        "init": {"kind": "vectors", "vectors": [
            [12.0, 12.0], [2.0, 2.0], [12.0, 2.0], [2.0, 2.0], [12.0, 12.0],
            [12.0, 12.0], [2.0, 2.0], [12.0, 2.0], [2.0, 12.0], [2.0, 12.0]
        ]}
    });
    let cfg = parse_config_str(&value.to_string()).unwrap();
    let text = serde_json::to_string_pretty(&cfg).unwrap();
    let again = parse_config_str(&text).unwrap();
    assert_eq!(
        serde_json::to_string(&cfg).unwrap(),
        serde_json::to_string(&again).unwrap()
    );
}
