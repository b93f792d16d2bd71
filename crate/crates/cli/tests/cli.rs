use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impulse-game"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn key(text: &str, k: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{k}=")).map(str::to_string))
}

#[test]
fn validate_proportional_costs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["validate"], &config("peak.toml"), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let s = stdout(&o);
    assert_eq!(key(&s, "proportional_h2_ok").as_deref(), Some("true"));
    assert_eq!(key(&s, "passed").as_deref(), Some("true"));
}

#[test]
fn validate_flags_superadditive_costs() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("peak.toml"))
        .unwrap()
        .replace("{ kind = \"proportional\", k1 = 0.4 }", "{ kind = \"quadratic\", k2 = 1.0 }")
        .replace("actions = [[-0.5], [0.5]]\ncost = { kind = \"quadratic\"", "actions = [[-0.5], [0.5], [1.0]]\ncost = { kind = \"quadratic\"");
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, text).unwrap();
    let o = run(&["validate"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert_eq!(key(&stdout(&o), "subadditivity_c_ok").as_deref(), Some("false"));
}

#[test]
fn solve_constant_instance() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve"], &config("constant.toml"), dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("value.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 1.0).abs() <= 1e-8, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 101);
    let policy = std::fs::read_to_string(dir.path().join("policy.csv")).unwrap();
    assert!(policy.lines().skip(1).all(|l| l.contains(",CONTINUE,")));
}

#[test]
fn residual_reads_value_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("peak.toml");
    assert_eq!(run(&["solve"], &cfg, dir.path()).status.code(), Some(0));
    let value = dir.path().join("value.csv");
    let o = run(&["residual", "--value", value.to_str().unwrap()], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("residual.csv").exists());

    // re-solving from the written file as the initial guess reproduces it bit for bit
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("initial_guess = \"upper_bound\"", "initial_guess = \"file\"\ninitial_guess_file = \"value.csv\"");
    let cfg2 = dir.path().join("restart.toml");
    std::fs::write(&cfg2, text).unwrap();
    let again = dir.path().join("again");
    let o = run(&["solve"], &cfg2, &again);
    assert_eq!(o.status.code(), Some(0));
    let first = std::fs::read_to_string(&value).unwrap();
    let parse = |t: &str| -> Vec<u64> {
        t.lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap().to_bits())
            .collect()
    };
    let re = std::fs::read_to_string(again.join("value.csv")).unwrap();
    // one more sweep moves values by at most tol
    for (a, b) in parse(&first).iter().zip(parse(&re)) {
        assert!((f64::from_bits(*a) - f64::from_bits(b)).abs() <= 1e-8);
    }
    // and the text itself round-trips through f64 parsing
    for (line, bits) in first.lines().skip(1).zip(parse(&first)) {
        assert_eq!(line.split(',').nth(1).unwrap(), f64::from_bits(bits).to_string());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("peak.toml");
    for args in [&["solve"][..], &["oracle"], &["simulate"]] {
        let oa = run(args, &cfg, a.path());
        let ob = run(args, &cfg, b.path());
        assert_eq!(oa.stdout, ob.stdout);
    }
    let seq = tempfile::tempdir().unwrap();
    run(&["solve", "--sequential"], &cfg, seq.path());
    for f in ["value.csv", "policy.csv", "lower.csv", "upper.csv", "trajectory.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    for f in ["value.csv", "policy.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(seq.path().join(f)).unwrap(),
        );
    }
}

#[test]
fn oracle_and_dpp_on_impulse_instance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("peak.toml");
    let o = run(&["oracle"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0));
    let gap: f64 = key(&stdout(&o), "value_gap").unwrap().parse().unwrap();
    assert!(gap <= 5e-2);
    let o = run(&["dpp-check"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(key(&stdout(&o), "dpp_passed").as_deref(), Some("true"));
}

#[test]
fn simulate_reports_eta_priority() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate"], &config("peak.toml"), dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(key(&s, "suppressed_jumps").as_deref(), Some("1"));
    assert_eq!(key(&s, "xi_cost_total").as_deref(), Some("0.2"));
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,x_1,jump_player,jump_suppressed\n0,0.7,xi,false\n"));
    assert!(traj.contains(",eta,true\n"));
}

#[test]
fn compare_lists_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["compare"], &config("peak.toml"), dir.path());
    let s = stdout(&o);
    for name in [
        "solver_converged",
        "oracle_equivalence",
        "value_gap",
        "upper_obstacle",
        "lower_obstacle",
        "uniqueness",
        "residual_cross_check",
        "strict_supersolution",
        "dpp_gap",
    ] {
        let line = s.lines().find(|l| l.contains(&format!(" {name} "))).unwrap_or_else(|| panic!("{name} missing"));
        assert!(line.starts_with("PASS ") || line.starts_with("FAIL "));
        assert!(line.contains("measured=") && line.contains("allowed="));
    }
    // the exit status follows the summary
    let passed = key(&s, "passed").unwrap() == "true";
    assert_eq!(o.status.code(), Some(if passed { 0 } else { 1 }));
    assert!(s.lines().any(|l| l.starts_with("PASS oracle_equivalence")));
}

#[test]
fn transform_emits_grid_and_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("peak.toml");
    run(&["solve"], &cfg, dir.path());
    let value = dir.path().join("value.csv");
    let o = run(
        &["transform", "--value", value.to_str().unwrap(), "--mu", "0.9", "--alpha", "0.01", "--k", "2"],
        &cfg,
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(key(&stdout(&o), "strict_supersolution").is_some());
    assert!(dir.path().join("transform.csv").exists());
    // α beyond the admissible limit is rejected
    let o = run(
        &["transform", "--value", value.to_str().unwrap(), "--mu", "0.9", "--alpha", "0.5", "--k", "2"],
        &cfg,
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.toml");
    std::fs::write(&broken, "dimension = \"one\"\n").unwrap();
    assert_eq!(run(&["solve"], &broken, dir.path()).status.code(), Some(2));

    let text = std::fs::read_to_string(config("constant.toml"))
        .unwrap()
        .replace("tol = 1e-8", "tol = 1e-12\nmax_iters = 5");
    let slow = dir.path().join("slow.toml");
    std::fs::write(&slow, text).unwrap();
    let o = run(&["solve"], &slow, dir.path());
    assert_eq!(o.status.code(), Some(3));
    let s = stdout(&o);
    assert_eq!(key(&s, "converged").as_deref(), Some("false"));
    assert!(key(&s, "recent_changes").is_some());
}
