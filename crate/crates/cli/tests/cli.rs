//! Command-line contract tests: help screens against golden files, exit-code
//! conventions, documented stdout rows, fixture emission round-trips, and
//! filesystem purity (no writes beyond the declared outputs).

use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use gridthreat_core::fixtures::fixture_text;

fn gridthreat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridthreat"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(dir: &Path, args: &[&str]) -> String {
    let out = gridthreat(dir, args);
    assert!(
        out.status.success(),
        "gridthreat {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_fixtures(dir: &Path) {
    for name in ["3bus", "ieee14"] {
        std::fs::write(dir.join(format!("{name}.grid")), fixture_text(name).unwrap()).unwrap();
    }
}

fn dir_entries(dir: &Path) -> BTreeSet<String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect()
}

#[test]
fn help_screens_match_goldens() {
    let dir = tempfile::tempdir().unwrap();
    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut checked = 0;
    for (args, golden) in [
        (vec!["--help"], "help.txt"),
        (vec!["powerflow", "--help"], "help_powerflow.txt"),
        (vec!["lodf", "--help"], "help_lodf.txt"),
        (vec!["estimate", "--help"], "help_estimate.txt"),
        (vec!["scopf", "--help"], "help_scopf.txt"),
        (vec!["synthesize", "--help"], "help_synthesize.txt"),
        (vec!["verify", "--help"], "help_verify.txt"),
        (vec!["sweep", "--help"], "help_sweep.txt"),
        (vec!["fixtures", "--help"], "help_fixtures.txt"),
    ] {
        let actual = stdout_of(dir.path(), &args);
        let expected = std::fs::read_to_string(golden_dir.join(golden)).unwrap();
        assert_eq!(actual, expected, "help screen for {args:?} drifted from {golden}");
        checked += 1;
    }
    assert_eq!(checked, 9);
}

#[test]
fn exit_codes_follow_the_convention() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());

    // 0: success.
    let ok = gridthreat(dir.path(), &["scopf", "--case", "3bus.grid"]);
    assert_eq!(ok.status.code(), Some(0));

    // 0: a clean unsat verdict is still a successful analysis.
    let unsat = gridthreat(
        dir.path(),
        &["synthesize", "--case", "ieee14.grid", "--max-buses", "2"],
    );
    assert_eq!(unsat.status.code(), Some(0));
    let text = String::from_utf8(unsat.stdout).unwrap();
    assert!(text.contains("verdict: unsat"), "stdout was: {text}");
    assert!(text.contains("exhaustive up to 2 compromised buses"), "stdout was: {text}");

    // 1: usage errors (unknown flag, missing required flag, no subcommand).
    for args in [
        vec!["powerflow", "--frobnicate"],
        vec!["powerflow"],
        vec![],
    ] {
        let out = gridthreat(dir.path(), &args);
        assert_eq!(out.status.code(), Some(1), "args {args:?}");
        assert!(!out.stderr.is_empty());
    }

    // 2: input errors (missing file, unparseable case, bad flag value).
    std::fs::write(dir.path().join("broken.grid"), "bus 1 nonsense\n").unwrap();
    for args in [
        vec!["powerflow", "--case", "no-such-file.grid"],
        vec!["powerflow", "--case", "broken.grid"],
        vec!["synthesize", "--case", "3bus.grid", "--delta-b", "250"],
        vec!["powerflow", "--case", "3bus.grid", "--slack", "99"],
    ] {
        let out = gridthreat(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.starts_with("error: "), "stderr was: {err}");
    }
}

#[test]
fn scopf_prints_the_documented_cost() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let text = stdout_of(dir.path(), &["scopf", "--case", "3bus.grid"]);
    assert!(text.contains("cost,4330.00"), "stdout was: {text}");
    assert!(text.contains("bus,p_gen_pu"), "stdout was: {text}");
    assert!(text.contains("kind,subject"), "stdout was: {text}");
}

#[test]
fn every_fixture_drives_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());

    // The cheap analyses run on both bundled cases with no extra flags.
    for case in ["3bus.grid", "ieee14.grid"] {
        for sub in ["powerflow", "lodf", "estimate", "scopf"] {
            let text = stdout_of(dir.path(), &[sub, "--case", case]);
            assert!(!text.trim().is_empty(), "{sub} on {case} printed nothing");
        }
    }

    // The search pipeline runs end to end on the small case: synthesize a
    // vector, replay it, sweep the default grid.
    let syn = stdout_of(dir.path(), &["synthesize", "--case", "3bus.grid", "--out", "."]);
    assert!(syn.contains("verdict: sat"), "stdout was: {syn}");
    let rep = stdout_of(
        dir.path(),
        &["verify", "--case", "3bus.grid", "--vector", "attack_vector.kv"],
    );
    assert!(rep.contains("stealthy: yes"), "stdout was: {rep}");
    assert!(rep.contains("line,outage,flow_pu,loading_pct,excess_pct"), "stdout was: {rep}");
    let sweep = stdout_of(dir.path(), &["sweep", "--case", "3bus.grid", "--out", "run"]);
    assert!(sweep.contains("attack_space.csv"), "stdout was: {sweep}");
    assert!(dir.path().join("run/attack_space.csv").exists());
    assert!(dir.path().join("run/bus_frequency.csv").exists());
}

#[test]
fn fixture_emission_round_trips() {
    let dir = tempfile::tempdir().unwrap();

    let listing = stdout_of(dir.path(), &["fixtures"]);
    assert!(listing.contains("3bus"), "stdout was: {listing}");
    assert!(listing.contains("ieee14"), "stdout was: {listing}");

    for name in ["3bus", "ieee14"] {
        stdout_of(dir.path(), &["fixtures", "--emit", name, "--out", "cases"]);
        let emitted = std::fs::read_to_string(dir.path().join(format!("cases/{name}.grid"))).unwrap();
        assert_eq!(emitted, fixture_text(name).unwrap(), "{name} emission drifted");
    }

    // Emitted files are valid inputs.
    let text = stdout_of(dir.path(), &["scopf", "--case", "cases/3bus.grid"]);
    assert!(text.contains("cost,4330.00"));
}

#[test]
fn subcommands_touch_only_their_declared_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    // A vector file so `verify` has input; written before the snapshot.
    stdout_of(dir.path(), &["synthesize", "--case", "3bus.grid", "--out", "."]);
    let before = dir_entries(dir.path());

    for args in [
        vec!["powerflow", "--case", "3bus.grid"],
        vec!["lodf", "--case", "3bus.grid"],
        vec!["estimate", "--case", "3bus.grid"],
        vec!["scopf", "--case", "ieee14.grid"],
        vec!["synthesize", "--case", "3bus.grid"],
        vec!["verify", "--case", "3bus.grid", "--vector", "attack_vector.kv"],
        vec!["fixtures"],
    ] {
        stdout_of(dir.path(), &args);
        assert_eq!(
            dir_entries(dir.path()),
            before,
            "gridthreat {args:?} wrote files without --out"
        );
    }

    // With --out, exactly the declared files appear and nothing else leaks
    // into the working directory.
    stdout_of(dir.path(), &["scopf", "--case", "3bus.grid", "--out", "opt"]);
    assert_eq!(
        dir_entries(&dir.path().join("opt")),
        BTreeSet::from(["dispatch.csv".into(), "binding.csv".into(), "flows.csv".into()])
    );
    let mut with_opt = before.clone();
    with_opt.insert("opt".into());
    assert_eq!(dir_entries(dir.path()), with_opt);
}

#[cfg(unix)]
#[test]
fn closed_stdout_pipe_does_not_panic() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let mut child = Command::new(env!("CARGO_BIN_EXE_gridthreat"))
        .current_dir(dir.path())
        .args(["lodf", "--case", "ieee14.grid"])
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let out = child.wait_with_output().unwrap();
    assert_ne!(out.status.code(), Some(101), "binary panicked on a closed pipe");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(!err.contains("panicked"), "stderr was: {err}");
}

#[test]
fn verify_grades_a_corrupted_vector_as_detectable() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    stdout_of(dir.path(), &["synthesize", "--case", "3bus.grid", "--out", "."]);

    // Nudging one flow corruption away from the angle shifts keeps the file
    // within every budget, but the corruption no longer lies in the
    // estimator's column space: the replay must grade it detectable, not
    // crash.
    let path = dir.path().join("attack_vector.kv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut nudged = false;
    let tampered: String = text
        .lines()
        .map(|l| {
            if let Some(rest) = l.strip_prefix("delta_line = ") {
                let mut vals: Vec<f64> =
                    rest.split(',').map(|v| v.trim().parse().unwrap()).collect();
                vals[0] += 0.5;
                nudged = true;
                format!(
                    "delta_line = {}",
                    vals.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
                )
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    assert!(nudged, "vector file had no delta_line entry:\n{text}");
    std::fs::write(&path, tampered + "\n").unwrap();

    let rep = stdout_of(
        dir.path(),
        &["verify", "--case", "3bus.grid", "--vector", "attack_vector.kv"],
    );
    assert!(rep.contains("stealthy: no"), "stdout was: {rep}");
}
