use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use risnoma::config::{parse_config, ExperimentConfig};
use risnoma::experiments::{run_sweep_links, run_sweep_power, run_sweep_rate};
use risnoma_core::system::LinkType;

fn risnoma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risnoma")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn run(dir: &Path, cmd: &str, text: &str, extra: &[&str]) -> Output {
    let cfg = write_config(dir, text);
    let out = dir.join("out");
    let mut args = vec![cmd, "--config", &cfg, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    risnoma(&args)
}

const SMALL: &str = "[sweep]\nn_elements = [0, 4, 64]\ntx_power_dbm = [30.0, 40.0]\ntarget_rate_bpc = [0.7, 1.5]\n";

#[test]
fn shipped_config_lists_the_defaults() {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/config.toml")).unwrap();
    assert_eq!(parse_config(&text).unwrap(), ExperimentConfig::default());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    let out = run(d, "sweep-links", "[scenario]\nbandwidth_hz = -1.0\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bandwidth_hz"));

    let out = run(d, "validate", "[validate]\ntolerance_cdf = 0\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tolerance_cdf"));

    let out = run(d, "sweep-links", "[scenario\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let out = risnoma(&["sweep-links", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(out.status.code(), Some(2));

    // β_1 = 0.5 cannot carry 1 bpc over interference 0.5.
    let out = run(d, "sweep-links", "[noma]\nbeta = [0.5, 0.3, 0.2]\n", &[]);
    assert_eq!(out.status.code(), Some(3));

    // Every UAV needs far more than the element budget at this power.
    let out = run(d, "ruom", "[scenario]\ntx_power_dbm = -10.0\nris_max_elements = 4\n[ruom]\nlambda = [0.5]\n", &[]);
    assert_eq!(out.status.code(), Some(3));
    let summary = fs::read_to_string(d.join("out/ruom/summary.json")).unwrap();
    assert!(summary.contains("\"all_below_delta\": false"));

    let out = run(d, "validate", "[validate]\ntolerance_closed = 1e-300\ngrid_points = 4\n", &["--no-mc"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(d, "sweep-links", SMALL, &[]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn sweep_links_csv_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), "sweep-links", SMALL, &[]);
    assert!(out.status.success());
    let csv = fs::read_to_string(tmp.path().join("out/sweep-links/outage.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sweep_var,sweep_value,uav,link_type,outage_analytic,outage_mc,mc_halfwidth,n_elements"
    );
    assert_eq!(lines.count(), 3 * 3 * 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/sweep-links/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "sweep-links");
    assert_eq!(manifest["seed"], 2);
    assert_eq!(manifest["config"]["sweep"]["n_elements"], serde_json::json!([0, 4, 64]));
    assert!(manifest["versions"]["risnoma_core"].is_string());
}

#[test]
fn seed_flag_changes_the_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let read = |seed: &str| {
        assert!(run(tmp.path(), "sweep-links", SMALL, &["--seed", seed]).status.success());
        fs::read_to_string(tmp.path().join("out/sweep-links/outage.csv")).unwrap()
    };
    let a = read("7");
    assert_eq!(a, read("7"));
    assert_ne!(a, read("8"));
}

#[test]
fn sweep_slices_agree_across_subcommands() {
    let mut cfg = parse_config(SMALL).unwrap();
    cfg.sweep.tx_power_dbm = vec![30.0, 37.0];
    cfg.sweep.target_rate_bpc = vec![1.0, 1.5];
    let links = run_sweep_links(&cfg, false).unwrap();
    let power = run_sweep_power(&cfg, false).unwrap();
    let rate = run_sweep_rate(&cfg, false).unwrap();
    for uav in 1..=3 {
        let composite = links.curve(None, uav, LinkType::Composite);
        assert_eq!(composite, power.curve(Some(37.0), uav, LinkType::Composite));
        assert_eq!(composite, rate.curve(Some(1.0), uav, LinkType::Composite));
        assert_eq!(composite[0], links.curve(None, uav, LinkType::Direct)[0]);
    }
}

#[test]
fn optimized_beta_drives_the_sweeps() {
    let cfg = parse_config(&format!("{SMALL}[noma]\nbeta = \"optimize\"\n[ruom]\nlambda = [0.1]\n")).unwrap();
    let table = run_sweep_links(&cfg, false).unwrap();
    assert!(table.rows.iter().all(|r| (0.0..=1.0).contains(&r.outage_analytic)));
    let fixed = run_sweep_links(&parse_config(SMALL).unwrap(), false).unwrap();
    assert_ne!(table, fixed);
}

#[test]
fn sweep_with_monte_carlo_columns() {
    let cfg = parse_config(
        "[scenario]\ntx_power_dbm = 30.0\n[sweep]\nn_elements = [0, 8]\n[mc]\ntrials = 40000\n",
    )
    .unwrap();
    let table = run_sweep_links(&cfg, true).unwrap();
    let mut compared = 0;
    for r in &table.rows {
        let (mc, hw) = (r.outage_mc.unwrap(), r.mc_halfwidth.unwrap());
        if r.outage_analytic >= 1e-2 {
            compared += 1;
            assert!((r.outage_analytic - mc).abs() <= 0.01 + hw, "{r:?}");
        }
    }
    assert!(compared > 0);
}

#[test]
fn underpowered_validation_is_flagged() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "[validate]\ntrials = 100\ntx_power_dbm = [30.0]\nn_elements = 4\ngrid_points = 5\n";
    let out = run(tmp.path(), "validate", text, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/validate/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["underpowered"], true);
    assert_eq!(summary["pass"], true);
    let checks = fs::read_to_string(tmp.path().join("out/validate/checks.csv")).unwrap();
    assert!(checks.lines().next().unwrap().starts_with("check,tx_power_dbm,uav,link_type,point"));
}

#[test]
fn ruom_report_has_one_trace_per_lambda() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), "ruom", "", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/ruom/summary.json")).unwrap()).unwrap();
    assert_eq!(summary.len(), 3);
    for s in &summary {
        assert_eq!(s["all_below_delta"], true);
        assert!(s["outage"].as_array().unwrap().iter().all(|p| p.as_f64().unwrap() < 1e-3));
        assert!(s["total_elements_final"].as_u64() <= s["total_elements_first"].as_u64());
    }
    let trace = fs::read_to_string(tmp.path().join("out/ruom/trace.csv")).unwrap();
    assert!(trace.starts_with("lambda,t,uav,ris,beta,outage,n_elements,total_elements,max_outage,capacity_exhausted\n"));
    let lambdas: std::collections::BTreeSet<&str> = trace.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(lambdas.len(), 3);
}
