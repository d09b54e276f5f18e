use std::path::PathBuf;
use std::process::{Command, Output};

fn abprop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abprop")).args(args).output().expect("run abprop")
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let head = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (head, rows)
}

fn col(head: &[String], name: &str) -> usize {
    head.iter().position(|h| h == name).unwrap()
}

#[test]
fn negative_eps_is_a_config_error() {
    let o = abprop(&["verify", "--set", "eps=-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("eps"), "{}", stderr(&o));
}

#[test]
fn unknown_key_and_suite_are_config_errors() {
    assert_eq!(abprop(&["verify", "--set", "bogus=1"]).status.code(), Some(2));
    let o = abprop(&["verify", "--suite", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("suite"));
}

#[test]
fn bad_sweep_spec_names_the_field() {
    let o = abprop(&["sweep", "--sweep", "phi:0:1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sweep"));
    // eps swept through zero fails validation before any output
    let o = abprop(&["sweep", "--sweep", "eps:-1:1:3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).is_empty());
}

#[test]
fn bad_measure_reports_the_line() {
    let path = tmp("bad_measure.txt");
    std::fs::write(&path, "0.5 1 0\n0.5 oops 0\n").unwrap();
    let o = abprop(&["series", "--measure", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn single_suite_filter() {
    let o = abprop(&["verify", "--suite", "poisson"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("[PASS] poisson"));
    assert!(text.contains("1 of 1 suites passed"));
}

#[test]
fn verify_table_lists_every_suite() {
    let path = tmp("verify.csv");
    let o = abprop(&["verify", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (head, rows) = csv_rows(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(head, ["suite", "passed", "detail"]);
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r[1] == "true"));
}

#[test]
fn one_step_sweep_has_one_row() {
    let o = abprop(&["sweep", "--sweep", "phi:0.3:0.3:1"]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
}

#[test]
fn csv_values_round_trip() {
    let o = abprop(&["sweep", "--sweep", "phi:0:1:11"]);
    let (head, rows) = csv_rows(&stdout(&o));
    assert_eq!(
        head,
        ["index", "variable", "value", "phase_re", "phase_im", "phase_arg", "magnitude", "detectable"]
    );
    let (v, re, im, mag) = (col(&head, "value"), col(&head, "phase_re"), col(&head, "phase_im"), col(&head, "magnitude"));
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[v].parse::<f64>().unwrap(), i as f64 / 10.0);
        let (x, y): (f64, f64) = (r[re].parse().unwrap(), r[im].parse().unwrap());
        assert!((x.hypot(y) - r[mag].parse::<f64>().unwrap()).abs() < 1e-15);
        assert!((x.hypot(y) - 1.0).abs() < 1e-14);
    }
}

#[test]
fn json_output_matches_csv() {
    let csv_out = stdout(&abprop(&["sweep", "--sweep", "alpha:0:2:5"]));
    let json_out = stdout(&abprop(&["sweep", "--sweep", "alpha:0:2:5", "--format", "json"]));
    let items: Vec<serde_json::Value> = serde_json::from_str(&json_out).unwrap();
    let (head, rows) = csv_rows(&csv_out);
    assert_eq!(items.len(), rows.len());
    for (item, row) in items.iter().zip(&rows) {
        let re = item["phase_re"].as_f64().unwrap();
        assert_eq!(re, row[col(&head, "phase_re")].parse::<f64>().unwrap());
    }
    // alpha = 0, 1, 2 are undetectable, 0.5 and 1.5 are not
    let det: Vec<bool> = items.iter().map(|i| i["detectable"].as_bool().unwrap()).collect();
    assert_eq!(det, [false, true, false, true, false]);
}

#[test]
fn eps_sweep_magnitude_decreases() {
    let o = abprop(&["sweep", "--set", "p1=1.1", "--sweep", "eps:5e-3:1e-4:8:log"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (head, rows) = csv_rows(&stdout(&o));
    let m: Vec<f64> = rows.iter().map(|r| r[col(&head, "magnitude")].parse().unwrap()).collect();
    assert!(m.windows(2).all(|w| w[1] < w[0]), "{m:?}");
}

#[test]
fn series_error_within_remainder_bound() {
    let path = tmp("measure.txt");
    std::fs::write(&path, "# two atoms\n0.5 0.3 0.1\n-1.0 0.2 0\n").unwrap();
    let o = abprop(&["series", "--measure", path.to_str().unwrap(), "--set", "n_max=15"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (head, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 16);
    let (e, b) = (col(&head, "error"), col(&head, "remainder_bound"));
    for r in &rows {
        let (err, bound): (f64, f64) = (r[e].parse().unwrap(), r[b].parse().unwrap());
        assert!(err <= bound + 1e-14, "{err} > {bound}");
    }
}

#[test]
fn default_series_third_order_error() {
    let (head, rows) = csv_rows(&stdout(&abprop(&["series", "--set", "n_max=3"])));
    let err: f64 = rows[3][col(&head, "error")].parse().unwrap();
    assert!((err - 0.0411).abs() < 1e-3);
}

#[test]
fn empty_measure_gives_one_exact_row() {
    let path = tmp("empty.txt");
    std::fs::write(&path, "# nothing\n\n").unwrap();
    let o = abprop(&["series", "--measure", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (head, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][col(&head, "error")].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn poisson_demo_agrees() {
    let o = abprop(&["poisson-demo", "--set", "comb_points=101"]);
    let (head, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 101);
    let d = col(&head, "abs_diff");
    assert!(rows.iter().all(|r| r[d].parse::<f64>().unwrap() < 1e-6));
}

#[test]
fn set_overrides_config_file() {
    let path = tmp("run.conf");
    std::fs::write(&path, "# base\np0 = 3\nsweep = phi:0:1:4\nformat = json\n").unwrap();
    let conf = path.to_str().unwrap();
    let items: Vec<serde_json::Value> = serde_json::from_str(&stdout(&abprop(&["sweep", "--config", conf]))).unwrap();
    assert_eq!(items.len(), 4);

    let o = abprop(&["sweep", "--config", conf, "--set", "sweep=phi:0:1:2", "--format", "csv"]);
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);

    std::fs::write(&path, "p0 = 3\neps = 0\n").unwrap();
    let o = abprop(&["verify", "--config", conf]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("eps"));
}
