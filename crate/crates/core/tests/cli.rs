use std::fs;
use std::process::{Command, Output};

fn supercode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supercode"))
        .args(args)
        .output()
        .expect("spawn supercode")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const UNIT: [&str; 6] = ["--sigma2", "1", "--power", "1", "--noise", "1"];

fn with_unit<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(&UNIT);
    v.extend_from_slice(extra);
    v
}

#[test]
fn theory_table_matches_closed_forms() {
    let o = supercode(&[
        "theory", "--sigma2", "1", "--power", "3", "--noise", "1", "--rho", "0,0.5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("C = 1\n"), "{out}");
    assert!(out.contains("D* = 0.25\n"), "{out}");
    let row = out.lines().find(|l| l.starts_with("0,")).expect("rho = 0 row");
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[1], "1");
    assert_eq!(cols[2], "1.73205081");
    assert_eq!(cols[3], "0.267949192");
}

#[test]
fn theory_reports_rate_at_capacity_per_row() {
    let o = supercode(&with_unit("theory", &["--rho", "0.1,0.5"]));
    assert_eq!(o.status.code(), Some(0));
    let bad = stdout(&o).lines().find(|l| l.starts_with("0.5,")).unwrap().to_string();
    assert!(bad.contains("capacity"), "{bad}");

    let o = supercode(&with_unit("theory", &["--rho", "0.5"]));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_variance_is_a_usage_error_naming_the_field() {
    let o = supercode(&[
        "run", "--power", "1", "--noise", "1", "--mode", "uncoded", "--trials", "10",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sigma2"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_and_bad_values_are_usage_errors() {
    assert_eq!(supercode(&["run", "--bogus"]).status.code(), Some(2));
    let o = supercode(&with_unit("run", &["--mode", "sideways"]));
    assert_eq!(o.status.code(), Some(2));
    let o = supercode(&with_unit("run", &["--rho", "0.6", "--n", "8", "--trials", "10"]));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("capacity"), "{}", stderr(&o));
}

#[test]
fn oversized_codebook_is_a_resource_error() {
    let o = supercode(&with_unit("run", &["--rho", "0.45", "--n", "96", "--trials", "10"]));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = supercode(&with_unit(
        "sweep",
        &["--rho", "0.45", "--n", "96", "--trials", "10", "--format", "csv"],
    ));
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn run_writes_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = supercode(&with_unit(
        "run",
        &[
            "--rho",
            "0.1",
            "--n",
            "16",
            "--trials",
            "200",
            "--mode",
            "genie",
            "--out",
            path.to_str().unwrap(),
        ],
    ));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = stdout(&o);
    for key in [
        "mode=genie",
        "rho=0.1",
        "n=16",
        "trials=200",
        "mean_distortion=",
        "ci95=[",
        "D*=0.5",
    ] {
        assert!(summary.contains(key), "{key} missing from {summary}");
    }
    let report = fs::read_to_string(&path).unwrap();
    assert!(report.contains("\"generated_at_unix\""));
    assert!(report.contains("\"num_trials\": 200"));
}

#[test]
fn deterministic_output_is_byte_identical() {
    let args = with_unit(
        "run",
        &[
            "--rho",
            "0.25",
            "--n",
            "16",
            "--trials",
            "300",
            "--seed",
            "9",
            "--deterministic",
        ],
    );
    let a = supercode(&args);
    let b = supercode(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(!stdout(&a).contains("generated_at_unix"));

    let other = supercode(&with_unit(
        "run",
        &[
            "--rho",
            "0.25",
            "--n",
            "16",
            "--trials",
            "300",
            "--seed",
            "10",
            "--deterministic",
        ],
    ));
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn sweep_rows_follow_the_grid_in_rho_major_order() {
    let o = supercode(&with_unit(
        "sweep",
        &[
            "--rho", "0,0.2", "--n", "8,12,16", "--trials", "50", "--mode", "genie", "--format", "csv",
        ],
    ));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    let header = lines.next().unwrap();
    assert!(
        header.starts_with("rho,n,M,num_trials,mode,mean_distortion,stderr,"),
        "{header}"
    );
    let keys: Vec<(String, String)> = lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0].to_string(), c[1].to_string())
        })
        .collect();
    let expect: Vec<(String, String)> = ["0", "0.2"]
        .iter()
        .flat_map(|r| ["8", "12", "16"].iter().map(move |n| (r.to_string(), n.to_string())))
        .collect();
    assert_eq!(keys, expect);
}

#[test]
fn sweep_keeps_going_past_bad_points() {
    let o = supercode(&with_unit(
        "sweep",
        &[
            "--rho", "0.1,0.7", "--n", "8", "--trials", "20", "--mode", "genie", "--format", "csv",
        ],
    ));
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let bad = out.lines().find(|l| l.starts_with("0.7,")).unwrap();
    assert!(bad.contains("capacity"), "{bad}");
    assert!(stderr(&o).contains("rho=0.7"));
}

#[test]
fn empty_grid_writes_header_only() {
    let o = supercode(&with_unit("sweep", &["--rho", "", "--format", "csv"]));
    // clap may reject an empty list outright; either way the exit code is 2
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    fs::write(
        &cfg,
        "sigma2 = 1.0\npower = 1.0\nnoise = 1.0\nrho = []\nformat = \"csv\"\n",
    )
    .unwrap();
    let o = supercode(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1, "{out}");
    assert!(out.starts_with("rho,n,M,"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        "sigma2 = 1.0\npower = 1.0\nnoise = 1.0\nrho = [0.1]\nn = [8]\ntrials = 40\nmode = \"genie\"\nseed = 3\n",
    )
    .unwrap();
    let o = supercode(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "60",
        "--deterministic",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("trials=60"));

    fs::write(&cfg, "sigma2 = 1.0\nwhatever = 2\n").unwrap();
    let o = supercode(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("whatever"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let o = supercode(&with_unit(
        "run",
        &[
            "--mode",
            "uncoded",
            "--n",
            "4",
            "--trials",
            "10",
            "--out",
            "/nonexistent/dir/report.json",
        ],
    ));
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}
