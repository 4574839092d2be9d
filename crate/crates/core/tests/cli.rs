use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gglab::report::{read_report_csv, ConvergenceTable, Verdict};

fn gglab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gglab")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const TREND: &str = r#"
seed = 5
[[check]]
name = "quenched_free_energy"
N = [NLIST]
points = [{ beta = 1.0, gamma = 0.5, h = 0.3 }]
samples = 16
[[check]]
name = "gg_residual"
N = [NLIST]
points = [{ beta = 1.0, gamma = 0.5, h = 0.3 }]
samples = 16
draws = 32
"#;

#[test]
fn smoke_config_passes_with_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = gglab(&["run", "--config", configs().join("smoke.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let parsed = read_report_csv(std::io::BufReader::new(std::fs::File::open(dir.path().join("report.csv")).unwrap())).unwrap();
    assert_eq!(parsed.rows.len(), 1);
    assert_eq!(parsed.rows[0].check, "gg_residual_f1");
    assert_eq!(parsed.rows[0].size, Some(8));
    assert_eq!(parsed.rows[0].pass, Verdict::Pass);
    assert!(parsed.comments.contains_key("config_hash"));
    assert!(parsed.comments.contains_key("generated"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["metadata"]["config_hash"].as_str().unwrap(), parsed.comments["config_hash"]);
}

#[test]
fn unknown_check_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "seed = 1\n[[check]]\nname = \"no_such_check\"\nN = [4]\npoints = [{ gamma = 0.5 }]\n");
    let out = gglab(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_check"));
    assert!(!dir.path().join("report.csv").exists());
}

#[test]
fn malformed_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "seed = \n",
        "seed = 1\n",
        "seed = 1\n[[check]]\nname = \"gg_residual\"\nN = [4]\npoints = [{ gamma = 0.5 }]\nfunctional = \"nope\"\n",
        "seed = 1\n[[check]]\nname = \"gg_residual\"\nN = [4]\npoints = [{ gamma = 0.5 }]\nunknown_key = 3\n",
        "seed = 1\n[[check]]\nname = \"convexity\"\nN = [30]\npoints = [{ gamma = 0.5 }]\n",
        "seed = 1\n[[check]]\nname = \"gg_residual\"\nmodel = \"ising\"\nN = [4]\npoints = [{ gamma = 0.5 }]\n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{i}.toml"), text);
        let out = gglab(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "case {i}: {text}");
    }
    let out = gglab(&["run", "--config", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_override_changes_results_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("smoke.toml");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(gglab(&["run", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "--workers", "1"]).status.success());
    assert!(gglab(&["run", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed", "43"]).status.success());
    let read = |d: &Path| read_report_csv(std::io::BufReader::new(std::fs::File::open(d.join("report.csv")).unwrap())).unwrap();
    let (ra, rb) = (read(&a), read(&b));
    assert_ne!(ra.comments["config_hash"], rb.comments["config_hash"]);
    assert_ne!(ra.rows[0].estimate, rb.rows[0].estimate);
}

#[test]
fn convergence_table_merges_runs_across_n() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for n in [4, 6, 8] {
        let cfg = write(dir.path(), &format!("n{n}.toml"), &TREND.replace("NLIST", &n.to_string()));
        let out = dir.path().join(format!("run{n}"));
        let r = gglab(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        outs.push(out);
    }
    let table_path = dir.path().join("table.csv");
    let mut args = vec!["convergence-table", "--out", table_path.to_str().unwrap()];
    args.extend(outs.iter().map(|p| p.to_str().unwrap()));
    let r = gglab(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&table_path).unwrap();
    assert!(text.starts_with("N,quantity,estimate,std_error\n"));
    let table = ConvergenceTable::read_csv(text.as_bytes()).unwrap();
    assert_eq!(table.quantities().len(), 2);
    for q in table.quantities() {
        let ns: Vec<usize> = table.rows.iter().filter(|r| r.quantity == q).map(|r| r.size).collect();
        assert_eq!(ns, vec![4, 6, 8]);
    }

    // A different config cannot be merged in.
    let other = write(dir.path(), "other.toml", &TREND.replace("NLIST", "4").replace("seed = 5", "seed = 6"));
    let other_out = dir.path().join("other");
    assert!(gglab(&["run", "--config", other.to_str().unwrap(), "--out", other_out.to_str().unwrap()]).status.success());
    let r = gglab(&["convergence-table", outs[0].to_str().unwrap(), other_out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("mixed configs"));
}

#[test]
fn list_checks_names_every_check() {
    let out = gglab(&["list-checks"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for k in gglab::CheckKind::ALL {
        assert!(text.lines().any(|l| l == k.name()), "{}", k.name());
    }
}

#[test]
fn failing_contract_exits_1() {
    // Bands below 1 cannot hold.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "band.toml",
        "seed = 3\n[[check]]\nname = \"concentration\"\nN = [4, 6]\npoints = [{ beta = 1.0, gamma = 0.5, h = 0.3 }]\nsamples = 16\nband = 0.5\n",
    );
    let out = gglab(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("report.json").exists());
}
