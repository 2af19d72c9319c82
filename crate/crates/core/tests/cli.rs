use std::path::Path;

use chromalg::cli::run;
use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn chromalg(args: &[&str]) -> Run {
    let mut out = vec![];
    let mut err = vec![];
    let mut argv = vec!["chromalg"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    Run { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn json(r: &Run) -> Value {
    serde_json::from_str(&r.stdout).unwrap_or_else(|e| panic!("{e}: {}", r.stdout))
}

fn write(dir: &Path, name: &str, args: &[&str]) -> String {
    let r = chromalg(args);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let path = dir.join(name);
    std::fs::write(&path, &r.stdout).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let na = write(dir.path(), "na.json", &["generate", "module", "na", "--p", "3", "--prec", "8", "--a", "1"]);
    assert_eq!(chromalg(&["validate", &na]).code, 0);

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"ring": {"p": 3, "d": 1, "N": 5}, "rank": 1, "F": [[{"coords": [1]}]], "V": [[{"coords": [1]}]]}"#,
    )
    .unwrap();
    let r = chromalg(&["validate", bad.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert_eq!(json(&r)["verdict"], "FAIL");

    let text = std::fs::read_to_string(&na).unwrap();
    let cut = dir.path().join("cut.json");
    std::fs::write(&cut, &text[..text.len() / 2]).unwrap();
    let r = chromalg(&["validate", cut.to_str().unwrap()]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("error"));

    assert_eq!(chromalg(&["validate", "/nonexistent/m.json"]).code, 2);
}

#[test]
fn exterior_square_of_n_minus_one_is_gm() {
    let dir = TempDir::new().unwrap();
    let na = write(dir.path(), "na.json", &["generate", "module", "na", "--p", "5", "--prec", "6", "--a", "-1"]);
    let ext = write(dir.path(), "ext.json", &["exterior", "--m", "2", &na]);
    let r = chromalg(&["detect-gm", &ext]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert_eq!(json(&r)["verdict"], "ISO");

    let other = write(dir.path(), "n2.json", &["generate", "module", "na", "--p", "5", "--prec", "6", "--a", "2"]);
    let r = chromalg(&["detect-gm", &other]);
    assert_eq!(r.code, 1);
    assert_eq!(json(&r)["verdict"], "NOT-ISO");
}

#[test]
fn first_exterior_power_is_identity() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "h.json", &["generate", "module", "honda", "--p", "3", "--prec", "5", "--height", "3"]);
    let r = chromalg(&["exterior", "--m", "1", &m]);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout, std::fs::read_to_string(&m).unwrap());
}

#[test]
fn honda_height_two_is_not_gm_at_odd_p() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "h.json", &["generate", "module", "honda", "--p", "3", "--prec", "6", "--height", "2"]);
    let r = chromalg(&["detect-gm", &m]);
    assert_eq!(r.code, 1);
    assert_eq!(json(&r)["verdict"], "NOT-ISO");
}

#[test]
fn fgl_commands() {
    let dir = TempDir::new().unwrap();
    let gm = write(dir.path(), "gm.json", &["generate", "fgl", "gm", "--p", "3", "--degree", "9"]);
    let r = chromalg(&["fgl", "pseries", &gm]);
    assert_eq!(r.code, 0);
    assert_eq!(json(&r)["p_series"]["render"], "x^3");
    let r = chromalg(&["fgl", "height", &gm]);
    assert_eq!(json(&r)["render"], "1");

    let gm2 = write(dir.path(), "gm2.json", &["generate", "fgl", "gm", "--p", "2", "--degree", "8"]);
    let r = chromalg(&["fgl", "westerland", &gm2, "--degree", "6"]);
    assert_eq!(r.code, 0);
    let v = json(&r);
    let renders: Vec<&str> = v["solutions"].as_array().unwrap().iter().map(|s| s["render"].as_str().unwrap()).collect();
    assert!(renders.contains(&"x"), "{renders:?}");
    assert!(renders.contains(&"x^2"), "{renders:?}");
    assert_eq!(v["count"], 8);

    let r = chromalg(&["fgl", "detect", &gm2]);
    assert_eq!(r.code, 0);
    assert_eq!(json(&r)["verdict"], "ISO-TO-DEGREE-8");

    let honda = write(dir.path(), "honda.json", &["generate", "fgl", "honda", "--p", "3", "--height", "2", "--degree", "27"]);
    let r = chromalg(&["fgl", "detect", &honda, "--degree", "27"]);
    assert_eq!(r.code, 1);
    assert_eq!(json(&r)["verdict"], "NO-NONZERO-HOM-TO-DEGREE-27");

    assert_eq!(chromalg(&["fgl", "detect", &gm2, "--degree", "40"]).code, 2);
}

#[test]
fn hopf_commands() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cert.json");
    let r = chromalg(&["hopf", "verify-xpzero", "--p", "2", "--h", "1", "--n", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.is_empty());
    let cert: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(cert["verdict"], "VERIFIED");
    assert_eq!(cert["steps"].as_array().unwrap().len(), 3);

    let r = chromalg(&["hopf", "verify-xpzero", "--p", "2", "--h", "1", "--n", "2"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("n > h + 1"));

    let r = chromalg(&["hopf", "f0", "--p", "2", "--h", "1", "--m", "5"]);
    assert_eq!(r.code, 0);
    let v = json(&r);
    assert_eq!(v["rows"][4]["power"], "v^31f");
}

#[test]
fn config_supplies_defaults_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "p = 3\nN = 4\nD = 9\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let r = chromalg(&["--config", cfg, "generate", "module", "gm"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(json(&r)["ring"]["p"], 3);
    let r = chromalg(&["--config", cfg, "generate", "module", "gm", "--p", "5"]);
    assert_eq!(json(&r)["ring"]["p"], 5);
    let r = chromalg(&["--config", cfg, "generate", "fgl", "ga"]);
    assert_eq!(json(&r)["D"], 9);
    let r = chromalg(&["generate", "module", "gm"]);
    assert_eq!(r.code, 2);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "q = 1\n").unwrap();
    assert_eq!(chromalg(&["--config", bad.to_str().unwrap(), "hopf", "f0", "--h", "1", "--m", "2"]).code, 2);
}

#[test]
fn outputs_are_deterministic_and_tables_render_json() {
    let args = ["hopf", "verify-xpzero", "--p", "3", "--h", "1", "--n", "3"];
    let a = chromalg(&args);
    let b = chromalg(&args);
    assert_eq!(a.stdout, b.stdout);
    let mut targs = args.to_vec();
    targs.extend(["--format", "table"]);
    let t = chromalg(&targs);
    assert_eq!(t.code, 0);
    assert!(t.stdout.contains("verdict"));
    assert!(t.stdout.contains("VERIFIED"));
    assert_eq!(t.stdout, chromalg::cli::render_table(&json(&a)));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(chromalg(&["frobnicate"]).code, 2);
    assert_eq!(chromalg(&["hopf", "f0", "--p", "2"]).code, 2);
    assert_eq!(chromalg(&["--help"]).code, 0);
}
