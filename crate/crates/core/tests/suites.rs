use abprop_core::verify::{run_all, VerifyConfig};

#[test]
fn default_suites_pass() {
    let results = run_all(&VerifyConfig::default()).unwrap();
    for r in &results {
        println!("{:<14} {} {}", r.name, if r.passed { "pass" } else { "FAIL" }, r.detail);
    }
    assert!(results.iter().all(|r| r.passed));
}
