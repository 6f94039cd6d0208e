use std::path::PathBuf;
use std::process::{Command, Output};

fn stickel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stickel")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn example_spec() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("specs/example.toml")
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stickel-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn theta_prints_the_worked_examples() {
    let out = stickel(&["theta", "--f", "4", "--subgroup", "", "--b", "7", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "σ1: 2, σ3: 2\n");
    let out = stickel(&["theta", "--f", "12", "--b", "7", "--n", "1", "--csv"]);
    assert_eq!(stdout(&out), "element,coefficient\nσ1,-27\nσ5,23\nσ7,23\nσ11,-27\n");
}

#[test]
fn theta_over_a_subfield_and_in_json() {
    // Q(i) inside Q(μ_12), i.e. H = {1, 5}.
    let out = stickel(&["theta", "--f", "12", "--subgroup", "5", "--b", "7", "--n", "1", "--json"]);
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let coefficients: Vec<&str> =
        value["coefficients"].as_array().unwrap().iter().map(|c| c["coefficient"].as_str().unwrap()).collect();
    assert_eq!(coefficients, ["-4", "-4"]);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(stickel(&["theta", "--f", "4", "--n", "1"]).status.code(), Some(2));
    assert_eq!(stickel(&["theta", "--f", "4", "--b", "6", "--n", "1"]).status.code(), Some(2));
    assert_eq!(stickel(&["wn", "--f", "4", "--n", "0"]).status.code(), Some(2));
    assert_eq!(stickel(&["verify", "no-such-suite", "--f", "4"]).status.code(), Some(2));
}

#[test]
fn wn_agrees_with_the_search() {
    let out = stickel(&["wn", "--f", "1", "--n", "2", "--brute", "200"]);
    assert_eq!(stdout(&out), "w_2 = 24\nlargest admissible m ≤ 200: 24\n");
}

#[test]
fn zeta_values_are_exact_rationals() {
    let out = stickel(&["zeta", "--f", "5", "--a", "2", "--n", "1"]);
    assert_eq!(stdout(&out), "ζ_5(2, -1) = 11/60\n");
}

#[test]
fn congruence_hypothesis_gate_reports_not_applicable() {
    let out = stickel(&["verify", "congruence", "--f", "4", "--b", "3", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("N/A congruence"), "{text}");
    assert!(text.contains("w_2 = 24"), "{text}");
}

#[test]
fn sweeps_pass() {
    for args in [
        &["verify", "conductor-change", "--fmax", "30", "--n", "2"][..],
        &["verify", "quillen", "--qmax", "5", "--kdeg", "1,2"],
        &["verify", "integrality", "--fmax", "20"],
        &["verify", "character", "--fmax", "12", "--n", "2"],
        &["verify", "distribution", "--fmax", "12", "--l", "2,3", "--n", "2"],
        &["verify", "tower", "--fmax", "5", "--n", "2"],
        &["verify", "congruence", "--fmax", "20", "--scope", "conductor"],
    ] {
        let out = stickel(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}\n{}", stdout(&out));
        assert!(stdout(&out).contains(" 0 FAIL"));
    }
}

#[test]
fn failures_carry_a_reproducing_command() {
    // Δ_2(1, 7, 3) = 4 and 7·Δ_1(1, 7, 3) = 1 differ modulo 2 | w_1 = 6.
    let out = stickel(&["verify", "congruence", "--fmax", "5", "--b", "7", "--n", "1", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let failure = report["checks"].as_array().unwrap().iter().find(|c| c["status"] == "FAIL").unwrap();
    assert!(failure["witness"].as_str().unwrap().contains("Delta_2=4"));
    let reproduce = failure["reproduce"].as_str().unwrap();
    assert_eq!(reproduce, "stickel verify congruence --f 3 --b 7 --nmin 0 --n 1 --m 0");
    let args: Vec<&str> = reproduce.split(' ').skip(1).collect();
    let rerun = stickel(&args);
    assert_eq!(rerun.status.code(), Some(1));
    assert!(stdout(&rerun).contains("Delta_2=4"));
}

#[test]
fn reports_are_byte_stable() {
    let args = ["verify", "character", "--fmax", "10", "--n", "1", "--json", "--seed", "3"];
    assert_eq!(stickel(&args).stdout, stickel(&args).stdout);
    let spec = example_spec();
    let spec = spec.to_str().unwrap();
    let sim = ["simulate", "--spec", spec, "--seed", "4", "--json"];
    assert_eq!(stickel(&sim).stdout, stickel(&sim).stdout);
}

#[test]
fn bundled_spec_passes_both_suites() {
    let spec = example_spec();
    for suite in ["splitting", "euler"] {
        let out = stickel(&["simulate", "--spec", spec.to_str().unwrap(), "--suite", suite]);
        assert_eq!(out.status.code(), Some(0), "{suite}\n{}", stdout(&out));
    }
}

#[test]
fn mutated_spec_fails_with_witnesses() {
    let text = std::fs::read_to_string(example_spec()).unwrap() + "mutation = \"corrupt-transfer\"\n";
    let path = scratch("mutated.toml", &text);
    let out = stickel(&["simulate", "--spec", path.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let failures: Vec<_> = report["checks"].as_array().unwrap().iter().filter(|c| c["status"] == "FAIL").collect();
    assert!(!failures.is_empty());
    for f in failures {
        assert!(f["witness"].is_string() && f["reproduce"].as_str().unwrap().contains("--seed 0"), "{f}");
    }
}

#[test]
fn euler_suite_on_one_layer_is_the_splitting_suite() {
    let text = std::fs::read_to_string(example_spec()).unwrap().replace("bound = 13", "bound = 10");
    let path = scratch("one-layer.toml", &text);
    let path = path.to_str().unwrap();
    let euler = stickel(&["simulate", "--spec", path, "--suite", "euler", "--json"]);
    let splitting = stickel(&["simulate", "--spec", path, "--suite", "splitting", "--json"]);
    let checks = |o: &Output| serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["checks"].clone();
    assert_eq!(checks(&euler), checks(&splitting));
}

#[test]
fn spec_errors_point_at_the_line() {
    let path = scratch("typo.toml", "modulus = 4\nprime = 5\nl = 3\nm = 1\nn = 2\nb = 7\nk_max = 2\ncolour = 1\n");
    let out = stickel(&["simulate", "--spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 8"));
}

#[test]
fn ingested_tables_round_trip_through_the_cli() {
    let document = stdout(&stickel(&["zeta", "--f", "12", "--n", "2", "--document"]));
    let ingested = document.replace("Q mod 12", "abstract") + "prime | p7 | 7 | 7\n";
    let path = scratch("table.txt", &ingested);
    let path = path.to_str().unwrap();
    let out = stickel(&["ingest-check", "--table", path]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let theta = stdout(&stickel(&["theta", "--table", path, "--b", "p7", "--n", "2"]));
    assert_eq!(theta, "1: -525, 5: -335, 7: 335, 11: 525\n");
    let truncated: String = ingested.lines().filter(|l| !l.starts_with("1·1=")).map(|l| format!("{l}\n")).collect();
    let broken = scratch("broken.txt", &truncated);
    assert_eq!(stickel(&["ingest-check", "--table", broken.to_str().unwrap()]).status.code(), Some(2));
}
