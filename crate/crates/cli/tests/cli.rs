use std::fs;
use std::process::{Command, Output};

fn dbsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dbsr"))
        .args(args)
        .env_remove("DBSR_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn zero_nodes_is_a_one_line_error() {
    let o = dbsr(&["--nodes", "0"]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("node_count") && err.contains(">= 1"), "{err}");
}

#[test]
fn unreadable_config_fails() {
    let o = dbsr(&["--config", "/no/such/file.conf"]);
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .contains("/no/such/file.conf"));
}

#[test]
fn unknown_key_in_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = dbsr(&["--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("colour"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "protocol = leach\nnode_count = 12\nrounds = 2\n").unwrap();
    let o = dbsr(&["--config", cfg.to_str().unwrap(), "--protocol", "heed"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let first_row = text.lines().nth(1).unwrap();
    assert!(first_row.starts_with("heed,0,1,"), "{first_row}");
}

#[test]
fn zero_rounds_writes_header_and_summary() {
    let o = dbsr(&["--nodes", "5", "--rounds", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with(
        "scenario,run,round,bs_x,bs_y,total_residual_j,alive_count,consumed_j,heads_count\n\nscenario,metric,value\n"
    ));
    assert!(text.contains("leach,fnd_median,NA"));
}

#[test]
fn output_file_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let common = [
        "--nodes",
        "30",
        "--rounds",
        "6",
        "--runs",
        "2",
        "--dbsr",
        "on",
        "--seed",
        "5",
        "--ga-pop",
        "30",
        "--ga-gens",
        "20",
    ];
    for path in [&a, &b] {
        let mut args = common.to_vec();
        args.extend(["--out", path.to_str().unwrap()]);
        let o = dbsr(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("leach-dbsr,0,1,"));
}

#[test]
fn env_seed_is_a_fallback() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_dbsr"));
        cmd.args(["--nodes", "20", "--rounds", "3"])
            .env_remove("DBSR_SEED");
        if let Some(e) = env {
            cmd.env("DBSR_SEED", e);
        }
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        let o = cmd.output().unwrap();
        assert!(o.status.success());
        o.stdout
    };
    assert_eq!(run(Some("11"), None), run(None, Some("11")));
    assert_ne!(run(Some("11"), None), run(None, Some("12")));
    // flag wins over the environment
    assert_eq!(run(Some("11"), Some("12")), run(None, Some("12")));
}

#[test]
fn compare_reports_improvements() {
    let o = dbsr(&[
        "--compare",
        "--nodes",
        "20",
        "--rounds",
        "3",
        "--ga-pop",
        "20",
        "--ga-gens",
        "10",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    for s in ["leach,", "leach-dbsr,", "heed,", "heed-dbsr,"] {
        assert!(text.lines().any(|l| l.starts_with(s)), "{s}");
    }
    assert!(text.contains("leach-dbsr,improvement_fnd_pct,"));
    assert!(text.contains("heed-dbsr,improvement_hna_pct,"));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(
        err.contains("leach: FND") && err.contains("heed: FND"),
        "{err}"
    );
}

#[test]
fn bad_area_flag() {
    let o = dbsr(&["--area", "200by200"]);
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("area"));
}
