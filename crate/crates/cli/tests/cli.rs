use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ancestry"));
    cmd.env_remove("ANCESTRY_OUT_DIR");
    cmd
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out-dir").arg(out).output().expect("binary runs")
}

fn ok(args: &[&str], out: &Path) {
    let o = run(args, out);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
}

/// Data rows of a result file, split on commas.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn meta(path: &Path, key: &str) -> Option<String> {
    let prefix = format!("# {key}=");
    fs::read_to_string(path).unwrap().lines().find_map(|l| l.strip_prefix(&prefix).map(String::from))
}

fn assert_same_dirs(a: &Path, b: &Path) {
    let mut names: Vec<_> = fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?} differs");
    }
}

fn replay_matches(args: &[&str], first_file: &str) {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(args, &a);
    let file = a.join(first_file);
    ok(&["replay", file.to_str().unwrap()], &b);
    assert_same_dirs(&a, &b);
}

#[test]
fn two_agents_one_cycle() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "--initial", "2", "--target", "1", "--p", "1", "--seed", "7"], dir.path());
    assert_eq!(rows(&dir.path().join("simulation.csv")).len(), 1);
    assert_eq!(rows(&dir.path().join("simulation.csv"))[0][1], "1");
    assert_eq!(meta(&dir.path().join("simulation.csv"), "cycles_run").as_deref(), Some("1"));
}

#[test]
fn repeated_simulation_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--initial", "500", "--target", "200", "--p", "0.002", "--seed", "3", "--history"];
    ok(&args, &dir.path().join("a"));
    ok(&args, &dir.path().join("b"));
    assert_same_dirs(&dir.path().join("a"), &dir.path().join("b"));
}

#[test]
fn default_probability_run_conserves() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "--initial", "20000", "--target", "10000", "--p", "0.000025", "--seed", "1"], dir.path());
    let survivors = rows(&dir.path().join("simulation.csv"));
    let total: u64 = survivors.iter().map(|r| r[1].parse::<u64>().unwrap()).sum();
    assert!(survivors.len() <= 10_000);
    assert_eq!(survivors.len() as u64 + total, 20_000);
}

#[test]
fn replays_reproduce_every_subcommand() {
    replay_matches(&["simulate", "--initial", "300", "--target", "100", "--p", "0.004", "--seed", "11", "--baseline"], "zipf.csv");
    replay_matches(
        &["ensemble", "--initial", "200", "--target", "80", "--p", "0.004", "--runs", "6", "--seed", "5", "--binning", "linear:2"],
        "rank_envelope.csv",
    );
    let events = fixture("events.csv");
    let panel = fixture("panel.csv");
    let gdp = fixture("gdp.csv");
    let aliases = fixture("aliases.csv");
    let (e, p, g, al) = (events.to_str().unwrap(), panel.to_str().unwrap(), gdp.to_str().unwrap(), aliases.to_str().unwrap());
    replay_matches(&["ancestry", "--events", e, "--alias", al, "--as-of", "2000-01-01", "--as-of", "2010-01-01"], "ancestry.csv");
    replay_matches(&["growth", "--events", e, "--panel", p, "--gdp", g, "--start", "1992", "--end", "2013"], "growth.csv");
    replay_matches(&["rank-compare", "--events", e, "--panel", p, "--years", "2000", "--group-size", "2"], "rank_compare_top.csv");
    replay_matches(&["market-share", "--panel", p, "--tag", "shares"], "shares_market_share.csv");
    replay_matches(&["simulate", "--events", e, "--alias", al, "--p", "0.05", "--seed", "2"], "simulation.csv");
}

#[test]
fn zipf_of_small_counts() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.csv");
    fs::write(&counts, "ancestry\n5\n3\n3\n").unwrap();
    ok(&["zipf", "--counts", counts.to_str().unwrap()], dir.path());
    let series = rows(&dir.path().join("zipf.csv"));
    assert_eq!(series, vec![vec!["1", "5"], vec!["2", "3"], vec!["3", "3"]]);
}

#[test]
fn growth_matches_hand_arithmetic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "growth",
        "--events",
        fixture("events.csv").to_str().unwrap(),
        "--alias",
        fixture("aliases.csv").to_str().unwrap(),
        "--panel",
        fixture("panel.csv").to_str().unwrap(),
        "--gdp",
        fixture("gdp.csv").to_str().unwrap(),
        "--start",
        "1992",
        "--end",
        "2013",
    ]
    .map(String::from);
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>(), dir.path());
    let table = rows(&dir.path().join("growth.csv"));
    let index = |id: &str| -> f64 { table.iter().find(|r| r[0] == id).unwrap()[4].parse().unwrap() };
    // BankS: (10 + 20 + 30) * 2.5 = 150 against 600. BankR went before 1992.
    assert!((index("BankS") - 4f64.log10()).abs() < 1e-11);
    // BankF: (8 + 4) * 2.5 = 30 against 30.
    assert!(index("BankF").abs() < 1e-12);
    // BankA: (50 + 5 + 5 + 6 + 20 + 2 + 3) * 2.5 = 227.5 against 400.
    assert!((index("BankA") - (400.0f64 / 227.5).log10()).abs() < 1e-11);
}

#[test]
fn ancestry_applies_aliases() {
    let dir = tempfile::tempdir().unwrap();
    let e = fixture("events.csv");
    let al = fixture("aliases.csv");
    ok(&["ancestry", "--events", e.to_str().unwrap(), "--alias", al.to_str().unwrap()], dir.path());
    let table = rows(&dir.path().join("ancestry.csv"));
    let found: Vec<(&str, &str)> = table.iter().map(|r| (r[1].as_str(), r[2].as_str())).collect();
    assert_eq!(found, vec![("BankA", "6"), ("BankF", "1"), ("BankS", "3")]);
}

#[test]
fn market_share_of_equal_entities() {
    let dir = tempfile::tempdir().unwrap();
    let panel = dir.path().join("panel.csv");
    let mut body = String::from("entity_id,year,balance\n");
    for i in 0..100 {
        body.push_str(&format!("E{i:03},2000,7.5\n"));
    }
    fs::write(&panel, body).unwrap();
    ok(&["market-share", "--panel", panel.to_str().unwrap()], dir.path());
    let table = rows(&dir.path().join("market_share.csv"));
    assert_eq!(table.len(), 100);
    assert!(table.iter().all(|r| r[3] == "0.01"));
}

#[test]
fn rank_compare_counts_forward_mergers() {
    let dir = tempfile::tempdir().unwrap();
    let e = fixture("events.csv");
    let p = fixture("panel.csv");
    let al = fixture("aliases.csv");
    ok(
        &["rank-compare", "--events", e.to_str().unwrap(), "--alias", al.to_str().unwrap(), "--panel", p.to_str().unwrap(), "--years", "2000", "--group-size", "1"],
        dir.path(),
    );
    // Ranked at the close of 1999, BankA leads both orderings and absorbs BankD in 2001.
    let top = rows(&dir.path().join("rank_compare_top.csv"));
    assert_eq!(top, vec![vec!["2000", "1", "1"]]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["simulate", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(run(&["simulate", "--initial", "5", "--target", "9"], dir.path()).status.code(), Some(1));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "date,acquirer_id,target_id\n2000-01-01,A,A\n").unwrap();
    let o = run(&["ancestry", "--events", bad.to_str().unwrap(), "--strict"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":2:"));

    let missing = dir.path().join("missing.csv");
    assert_eq!(run(&["ancestry", "--events", missing.to_str().unwrap()], dir.path()).status.code(), Some(2));

    let stuck = run(&["simulate", "--initial", "50", "--target", "1", "--p", "0.0001", "--max-cycles", "3"], dir.path());
    assert_eq!(stuck.status.code(), Some(3));
    assert_eq!(meta(&dir.path().join("simulation.csv"), "outcome").as_deref(), Some("max_cycles_reached"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .env("ANCESTRY_OUT_DIR", dir.path())
        .args(["simulate", "--initial", "10", "--target", "5", "--p", "0.5"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("simulation.csv").exists());
}

#[test]
fn ensemble_comparison_reports_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let model = ["--initial", "300", "--target", "100", "--p", "0.004"];
    let member = dir.path().join("member");
    ok(&[&["simulate"][..], &model, &["--seed", "999"]].concat(), &member);
    let counts = member.join("simulation.csv");
    let env = dir.path().join("env");
    ok(&[&["ensemble"][..], &model, &["--runs", "20", "--compare", counts.to_str().unwrap()]].concat(), &env);
    let cov: f64 = meta(&env.join("coverage_rank.csv"), "coverage").unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&cov));
    assert!(env.join("coverage_distribution.csv").exists());

    // A log2 histogram cannot be overlaid on a linear-binned ensemble.
    let dist = member.join("distribution.csv");
    let o = run(&[&["ensemble"][..], &model, &["--runs", "3", "--binning", "linear:5", "--compare", dist.to_str().unwrap()]].concat(), &env);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("axis mismatch"));
}
