use std::process::Command;

fn logsing(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_logsing")).args(args).output().expect("binary runs")
}

fn rows(out: &std::process::Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).expect("JSON line")).collect()
}

#[test]
fn divergent_integral_exits_two() {
    let out = logsing(&["integrate", "--f", "x1*x2", "--p", "1", "--samples", "20000", "--j-max", "16"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["schema_version"], 1);
    assert_eq!(rows[0]["command"], "integrate");
    assert_eq!(rows[0]["payload"]["verdict"], "DIVERGENT");
}

#[test]
fn convergent_integral_exits_zero() {
    let out = logsing(&["integrate", "--f", "x1^2 + x2^2", "--p", "1", "--samples", "20000", "--j-max", "16"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(rows(&out)[0]["payload"]["verdict"], "CONVERGENT");
}

#[test]
fn usage_errors_exit_one() {
    let out = logsing(&["integrate", "--p", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--f"));
    assert_eq!(logsing(&["cutoff", "--f", "x1", "--eps", "0.3"]).status.code(), Some(1));
    assert_eq!(logsing(&["integrate", "--f", "x1 +* x2"]).status.code(), Some(1));
}

#[test]
fn identical_inputs_give_identical_payloads() {
    let args = ["log-lp", "--f", "x1*x2", "--p", "2", "--samples", "20000", "--j-max", "16", "--seed", "7"];
    let strip = |mut v: serde_json::Value| {
        v.as_object_mut().unwrap().remove("wall_time_ms");
        v
    };
    let a = strip(rows(&logsing(&args)).remove(0));
    let b = strip(rows(&logsing(&args)).remove(0));
    assert_eq!(a, b);
}
