use std::process::{Command, Output};

fn ctdnull(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctdnull"))
        .args(args)
        .env_remove("CTDNULL_WORKERS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// (header, data rows) of a CSV dataset.
fn table(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<String> {
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k].clone()).collect()
}

#[test]
fn theory_single_point() {
    let o = ctdnull(&["theory", "--kappa", "0.1", "--nb", "10", "--ns", "0.01", "--m", "10", "--M", "5000"]);
    assert!(o.status.success());
    let (header, rows) = table(&stdout(&o));
    assert_eq!(
        header,
        [
            "snr", "M", "alpha_one", "e_thermal", "p1", "p2", "P_cn_recursive", "P_ideal_exact",
            "P_ideal_approx", "P_EH", "P_CH", "P_CH_high_noise"
        ]
    );
    assert_eq!(rows.len(), 1);
    assert!(rows[0].iter().all(|c| !c.is_empty() && c != "null"));
    assert_eq!(rows[0][1], "5000");
}

#[test]
fn theory_log_grid_expands() {
    let o = ctdnull(&["theory", "--M", "1000:100000:log32"]);
    assert!(o.status.success());
    let (header, rows) = table(&stdout(&o));
    assert_eq!(rows.len(), 32);
    let m = column(&header, &rows, "M");
    assert_eq!(m.first().unwrap(), "1000");
    assert_eq!(m.last().unwrap(), "100000");
}

#[test]
fn invalid_parameters_exit_two() {
    for args in [
        &["theory", "--m", "1"][..],
        &["theory", "--kappa", "1.5"],
        &["theory", "--M", "1:2:foo"],
        &["simulate", "--trials", "50"],
        &["simulate", "--h", "11", "--M", "100"],
        &["rates", "--ns", "-1"],
        &["theory", "--bogus"],
    ] {
        let o = ctdnull(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn simulate_metadata_and_schema() {
    let o = ctdnull(&[
        "simulate", "--snr", "0.1:10:log20", "--trials", "auto", "--mc-max-modes", "2000",
        "--policy", "adaptive", "--quiet",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("# policy: adaptive"));
    assert!(text.contains("# snr_definition: SNR = M*kappa*N_S/N_B"));
    assert!(text.contains("# seed: 20240601"));
    let (header, rows) = table(&text);
    assert_eq!(rows.len(), 20);
    let mc = column(&header, &rows, "P_cn_mc");
    let se = column(&header, &rows, "P_cn_mc_se");
    let trials = column(&header, &rows, "mc_trials");
    let modes = column(&header, &rows, "M");
    for k in 0..20 {
        let m: u64 = modes[k].parse().unwrap();
        if m <= 2000 {
            assert!(mc[k] != "null" && se[k] != "null");
            assert!(trials[k].parse::<u64>().unwrap() >= 1000);
        } else {
            assert_eq!(mc[k], "null");
        }
    }
}

#[test]
fn json_output_matches_csv_fields() {
    let o = ctdnull(&["theory", "--M", "2000,4000", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["meta"]["kind"], "theory");
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["M"], 4000);
    assert!(rows[0]["P_cn_recursive"].as_f64().unwrap() > 0.0);
}

#[test]
fn rates_model_flag_restricts_columns() {
    let o = ctdnull(&["rates", "--ns", "1e-3", "--model", "helstrom", "--max-bins-log2", "6", "--quiet"]);
    assert!(o.status.success());
    let (header, rows) = table(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_ne!(column(&header, &rows, "R_H")[0], "null");
    assert_eq!(column(&header, &rows, "R_cn")[0], "null");
}

#[test]
fn rates_rows_are_ordered() {
    let o = ctdnull(&["rates", "--ns", "1e-4:1e-1:log4", "--max-bins-log2", "12", "--quiet"]);
    assert!(o.status.success());
    let (header, rows) = table(&stdout(&o));
    assert_eq!(rows.len(), 4);
    let f = |name| -> Vec<f64> {
        column(&header, &rows, name).iter().map(|x| x.parse().unwrap()).collect()
    };
    let (rc, rh, ce) = (f("R_cn"), f("R_H"), f("C_E"));
    for k in 0..4 {
        assert!(rc[k] <= rh[k] && rh[k] <= ce[k], "row {k}");
    }
}

#[test]
fn validate_reports_gates_and_fault_injection_fails() {
    let ok = ctdnull(&["validate", "--M", "2000", "--quiet"]);
    assert_eq!(ok.status.code(), Some(0));
    let (header, rows) = table(&stdout(&ok));
    assert_eq!(header, ["suite", "gate", "observed", "bound", "pass"]);
    assert!(rows.iter().all(|r| r[4] == "true"));
    assert!(rows.iter().any(|r| r[0] == "oracle"));

    let bad = ctdnull(&["validate", "--M", "2000", "--quiet", "--self-test-negative"]);
    assert_eq!(bad.status.code(), Some(1));
    let (_, rows) = table(&stdout(&bad));
    assert!(rows.iter().any(|r| r[0] == "oracle" && r[4] == "false"));
}

#[test]
fn output_file_is_written_and_seed_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let o = ctdnull(&[
            "simulate", "--seed", "42", "--M", "1000", "--trials", "200", "--quiet", "--output",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2);
}

#[test]
fn bad_worker_env_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_ctdnull"))
        .args(["theory", "--M", "1000"])
        .env("CTDNULL_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
