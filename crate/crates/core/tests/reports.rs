use gglab::report::{
    read_report_csv, strip_timestamp, ConvergenceRow, ConvergenceTable, ExperimentReport, ReportRow, Verdict, CSV_COLUMNS,
};
use gglab::{run_experiment, CheckKind, ExperimentConfig};
use proptest::prelude::*;

fn config(n_list: &str, seed: u64) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
seed = {seed}
[[check]]
name = "gg_residual_f1"
N = [{n_list}]
points = [{{ beta = 1.0, gamma = 0.5, h = 0.3 }}, {{ beta = 0.0, gamma = 0.8, h = 0.0 }}]
samples = 16
draws = 32
[[check]]
name = "quenched_free_energy"
model = "ea"
rows = 2
N = [{n_list}]
points = [{{ gamma = 0.5 }}]
samples = 8
"#
    ))
    .unwrap()
}

#[test]
fn one_row_per_cell_per_check() {
    let r = run_experiment(&config("4, 6", 1)).unwrap();
    assert_eq!(r.rows.len(), 2 * 2 + 2);
    assert_eq!(r.details.len(), r.rows.len());
    // ordered by point, then N
    let sizes: Vec<Option<usize>> = r.rows.iter().map(|x| x.size).collect();
    assert_eq!(sizes, vec![Some(4), Some(6), Some(4), Some(6), Some(4), Some(6)]);
    assert!(r.rows.iter().filter(|x| x.check == "quenched_free_energy").all(|x| x.pass == Verdict::NotApplicable && x.contract.is_empty()));
    assert!(r.rows.iter().filter(|x| x.check == "gg_residual_f1").all(|x| !x.contract.is_empty()));
}

#[test]
fn csv_round_trip_and_determinism() {
    let cfg = config("4, 6", 2);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    let (ca, cb) = (a.csv_string().unwrap(), b.csv_string().unwrap());
    assert_eq!(strip_timestamp(&ca), strip_timestamp(&cb));
    let lines: Vec<&str> = ca.lines().collect();
    assert!(lines[0].starts_with("# config_hash: "));
    assert!(lines[1].starts_with("# generated: "));
    assert_eq!(lines[2], CSV_COLUMNS.join(","));
    let parsed = read_report_csv(ca.as_bytes()).unwrap();
    assert_eq!(parsed.rows, a.rows);
    assert_eq!(parsed.comments["config_hash"], cfg.hash());
}

#[test]
fn json_round_trip() {
    let r = run_experiment(&config("4", 3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    r.write_to(dir.path()).unwrap();
    let back = ExperimentReport::read_json(dir.path().join("report.json")).unwrap();
    assert_eq!(back, r);
}

#[test]
fn config_hash_ignores_layout_but_not_content() {
    let a = config("4, 6", 1);
    let text = "seed=1\n[[check]]\nname=\"gg_residual_f1\"\nN=[4,6]\npoints=[{beta=1.0,gamma=0.5,h=0.3},{beta=0.0,gamma=0.8,h=0.0}]\nsamples=16\ndraws=32\n[[check]]\nname=\"quenched_free_energy\"\nmodel=\"ea\"\nrows=2\nN=[4,6]\npoints=[{gamma=0.5}]\nsamples=8\n";
    let b = ExperimentConfig::from_toml(text).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), config("4, 6", 2).hash());
    assert_ne!(a.hash(), config("4", 1).hash());
    assert_eq!(a.comparable_hash(), config("4", 1).comparable_hash());
    assert_ne!(a.comparable_hash(), config("4", 2).comparable_hash());
}

#[test]
fn convergence_blocks() {
    let single = run_experiment(&config("4", 4)).unwrap();
    let t = ConvergenceTable::from_reports(std::slice::from_ref(&single)).unwrap();
    assert_eq!(t.rows.len(), single.rows.len());
    assert!(t.quantities().iter().all(|q| t.rows.iter().filter(|r| &r.quantity == q).count() == 1));

    let reports: Vec<ExperimentReport> = ["4", "6", "8"].iter().map(|n| run_experiment(&config(n, 4)).unwrap()).collect();
    let t = ConvergenceTable::from_reports(&reports).unwrap();
    assert_eq!(t.quantities().len(), 3);
    for q in t.quantities() {
        let block: Vec<usize> = t.rows.iter().filter(|r| r.quantity == q).map(|r| r.size).collect();
        assert_eq!(block, vec![4, 6, 8]);
    }
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    assert_eq!(ConvergenceTable::read_csv(buf.as_slice()).unwrap(), t);

    let mixed = [reports[0].clone(), run_experiment(&config("6", 5)).unwrap()];
    assert!(ConvergenceTable::from_reports(&mixed).is_err());
    assert!(ConvergenceTable::from_reports(&[]).is_err());
}

#[test]
fn every_check_resolves_by_name() {
    for k in CheckKind::ALL {
        assert_eq!(CheckKind::from_name(k.name()).unwrap(), *k);
    }
    assert!(CheckKind::from_name("gg_residual_f2").is_err());
}

#[test]
fn trend_checks_emit_summary_rows() {
    let cfg = ExperimentConfig::from_toml(
        r#"
seed = 9
[[check]]
name = "gg_trend"
N = [4, 6]
points = [{ beta = 1.0, gamma = 0.5, h = 0.3 }]
samples = 8
draws = 16
[[check]]
name = "averaged_scan"
N = [4, 6]
points = [{ beta = 1.0, gamma = 0.5, h = 0.3 }]
samples = 8
draws = 16
[[check]]
name = "concentration"
N = [4, 6]
points = [{ beta = 1.0, gamma = 0.0, h = 0.3 }]
samples = 8
"#,
    )
    .unwrap();
    let r = run_experiment(&cfg).unwrap();
    let summaries: Vec<&ReportRow> = r.rows.iter().filter(|x| x.size.is_none()).collect();
    assert_eq!(summaries.len(), 2 + 1 + 1);
    let skipped = r.rows.iter().find(|x| x.check == "concentration").unwrap();
    assert_eq!(skipped.functional, "skipped");
    assert_eq!(skipped.pass, Verdict::NotApplicable);
    assert!(r.notes.iter().any(|n| n.contains("differentiability")));
}

fn label() -> impl Strategy<Value = String> {
    "[a-z_:=0-9.]{1,12}"
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convergence_csv_round_trips(rows in prop::collection::vec((1usize..40, label(), -1e6f64..1e6, 0.0f64..10.0), 0..20)) {
        let t = ConvergenceTable {
            rows: rows.into_iter().map(|(size, quantity, estimate, std_error)| ConvergenceRow { size, quantity, estimate, std_error }).collect(),
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        prop_assert_eq!(ConvergenceTable::read_csv(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn report_rows_round_trip(
        estimate in -1e9f64..1e9,
        se in 0.0f64..1e3,
        size in prop::option::of(1usize..30),
        n in prop::option::of(2usize..5),
        functional in label(),
        verdict in prop::sample::select(vec![Verdict::Pass, Verdict::Fail, Verdict::NotApplicable]),
    ) {
        let row = ReportRow {
            check: "gg_residual".into(), model: "sk".into(), size, beta: 1.0, gamma: -0.5, h: 0.25, n,
            functional, estimate, std_error: se, contract: "|estimate| <= 3 std_error".into(), pass: verdict,
        };
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.serialize(&row).unwrap();
        }
        let parsed = read_report_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(&parsed.rows[0], &row);
    }
}
