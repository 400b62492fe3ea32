use std::path::Path;
use std::process::{Command, Output};

fn qkdstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkdstat"))
        .args(args)
        .env_remove("QKDSTAT_PRECISION")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn data_rows(s: &str) -> Vec<&str> {
    s.lines().skip(1).filter(|l| !l.is_empty()).collect()
}

#[test]
fn bound_matches_threshold_command() {
    let b = qkdstat(&[
        "bound",
        "--kind",
        "serfling",
        "--population",
        "100000",
        "--n",
        "10000",
        "--eps",
        "1e-9",
        "--p-th",
        "0.04",
    ]);
    assert!(b.status.success());
    let text = stdout(&b);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    let value = rows[0].split(',').nth(8).unwrap();

    let t = qkdstat(&[
        "threshold",
        "--population",
        "100000",
        "--n",
        "10000",
        "--eps",
        "1e-9",
        "--p-th",
        "0.04",
        "--kind",
        "serfling",
    ]);
    assert!(t.status.success());
    let text = stdout(&t);
    let row = data_rows(&text)[0];
    assert_eq!(row.rsplit(',').next().unwrap(), value);
}

#[test]
fn all_flag_enumerates_applicable_families() {
    let t = qkdstat(&[
        "bound",
        "--all",
        "--population",
        "100000",
        "--n",
        "10000",
        "--eps",
        "1e-9",
        "--p-th",
        "0.04",
    ]);
    assert_eq!(data_rows(&stdout(&t)).len(), 6);
    let c = qkdstat(&[
        "bound",
        "--all",
        "--population",
        "1000",
        "--n",
        "200",
        "--count",
        "20",
        "--eps",
        "1e-6",
    ]);
    assert_eq!(data_rows(&stdout(&c)).len(), 4);
    let b = qkdstat(&[
        "bound",
        "--all",
        "--n",
        "1000",
        "--count",
        "30",
        "--eps",
        "1e-9",
        "--direction",
        "lower",
    ]);
    let text = stdout(&b);
    assert_eq!(data_rows(&text).len(), 4);
    assert!(text.contains("unclamped"));
}

#[test]
fn invalid_input_exits_with_config_code() {
    assert_eq!(qkdstat(&["bound", "--n", "5", "--eps", "0.1"]).status.code(), Some(2));
    assert_eq!(
        qkdstat(&["bound", "--kind", "serfling", "--n", "5", "--eps", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qkdstat(&["bound", "--kind", "nope", "--n", "5", "--eps", "0.1"])
            .status
            .code(),
        Some(2)
    );
    let o = qkdstat(&[
        "keyrate",
        "decoy",
        "--block",
        "1e6",
        "--family",
        "relaxed_chernoff",
        "--bernoulli",
        "relaxed_chernoff",
        "--params",
        "0.5,0.6,0.5,0.3,0.2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
}

#[test]
fn bad_config_is_rejected_with_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"protocol": "bbm92", "p_th": 0.7, "sweep": {"n_list": [1e4]}}"#,
    );
    let o = qkdstat(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("p_th"));

    let cfg = write(dir.path(), "d.json", r#"{"protocol": "bbm92", "bogus": 1}"#);
    assert_eq!(qkdstat(&["sweep", "--config", &cfg]).status.code(), Some(2));
    let cfg = write(
        dir.path(),
        "e.json",
        r#"{"protocol": "decoy", "channel": {"loss_db": 30, "eta": 0.001}}"#,
    );
    assert_eq!(qkdstat(&["sweep", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(
        qkdstat(&["sweep", "--config", "/nonexistent/x.json"]).status.code(),
        Some(3)
    );
}

#[test]
fn unwritable_output_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"protocol": "bbm92", "sweep": {"n_list": [1e4]}}"#,
    );
    let o = qkdstat(&["sweep", "--config", &cfg, "--output", "/nonexistent/dir/out.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_is_reproducible_and_keeps_infeasible_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"protocol": "bbm92", "seed": 5, "sweep": {"log_range": {"start": 1e3, "stop": 1e5, "points": 5}, "markers": [3100]}}"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = qkdstat(&[
            "sweep",
            "--config",
            &cfg,
            "--output",
            p.to_str().unwrap(),
            "--jobs",
            "2",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().next().unwrap(), "N,family,n_opt,l,rate,eps_sec,feasible");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 6 * 4);
    assert!(rows.iter().any(|r| r.starts_with("3100,")));
    assert!(rows
        .iter()
        .any(|r| r.starts_with("1000,") && r.ends_with(",0,0.0,5e-8,false")));

    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a.csv.meta.json")).unwrap()).unwrap();
    let hash = meta["config_sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert_eq!(meta["seed"], 5);
    let meta_b: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("b.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta_b["config_sha256"].as_str().unwrap(), hash);
}

#[test]
fn threshold_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"protocol": "threshold",
            "threshold": {"population": 1e5, "n": 1e4, "eps": 1e-9,
                          "p_th_range": {"start": 0.005, "stop": 0.04, "points": 8}}}"#,
    );
    let o = qkdstat(&["sweep", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "N,n,eps,p_th,family,q_th");
    assert_eq!(data_rows(&text).len(), 8 * 4);
}

#[test]
fn decoy_sweep_has_parameter_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"protocol": "decoy", "families": [{"sampling": "relaxed_chernoff", "bernoulli": "relaxed_chernoff"}],
            "sweep": {"n_list": [1e5, 1e6]}}"#,
    );
    let o = qkdstat(&["sweep", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("N,family,bernoulli_family,mu,nu,p_mu,p_nu,q_x,l,rate,eps_sec,feasible\n"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.ends_with(",7e-8,true")));
}

#[test]
fn minblock_reports_and_marks_infeasible_families() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"protocol": "bbm92", "families": [{"sampling": "relaxed_chernoff"}, {"sampling": "cp_hg"}]}"#,
    );
    let report = dir.path().join("r.json");
    let o = qkdstat(&["minblock", "--config", &cfg, "--report", report.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("N_min = 3031"), "{text}");
    assert!(text.contains("smaller"), "{text}");
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(json["families"].as_array().unwrap().len(), 2);

    // Above p_th ≈ 11% error correction alone eats the key at any N.
    let cfg = write(
        dir.path(),
        "d.json",
        r#"{"protocol": "bbm92", "p_th": 0.12, "families": [{"sampling": "relaxed_chernoff"}]}"#,
    );
    let o = qkdstat(&["minblock", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("infeasible below 1e8"));
}

#[test]
fn precision_env_override() {
    let run = |val: &str| {
        Command::new(env!("CARGO_BIN_EXE_qkdstat"))
            .args([
                "bound",
                "--kind",
                "cp_hg",
                "--population",
                "1000",
                "--n",
                "100",
                "--count",
                "5",
                "--eps",
                "1e-6",
            ])
            .env("QKDSTAT_PRECISION", val)
            .output()
            .unwrap()
    };
    let ok = run(r#"{"rel_tol": 1e-10}"#);
    assert!(ok.status.success());
    assert_eq!(
        stdout(&ok),
        stdout(&qkdstat(&[
            "bound",
            "--kind",
            "cp_hg",
            "--population",
            "1000",
            "--n",
            "100",
            "--count",
            "5",
            "--eps",
            "1e-6"
        ]))
    );
    assert_eq!(run(r#"{"rel_tol": 0.5}"#).status.code(), Some(2));
    assert_eq!(run("not json").status.code(), Some(2));
}

#[test]
fn keyrate_commands() {
    let o = qkdstat(&[
        "keyrate",
        "bbm92",
        "--block",
        "1e5",
        "--family",
        "relaxed_chernoff",
        "--n",
        "10000",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row = data_rows(&text)[0];
    assert!(row.starts_with("100000,relaxed_chernoff,10000,"), "{row}");

    let o = qkdstat(&[
        "keyrate",
        "decoy",
        "--block",
        "1e6",
        "--family",
        "relaxed_chernoff",
        "--bernoulli",
        "relaxed_chernoff",
        "--params",
        "0.5,0.1,0.1,0.5,0.3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(data_rows(&text)[0].contains(",0.5,0.1,0.1,0.5,0.3,"));
}
