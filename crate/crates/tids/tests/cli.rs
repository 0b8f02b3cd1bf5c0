use std::path::Path;
use std::process::{Command, Output};

use tids_core::analysis::availability;
use tids_core::ledger::{fns, GasSchedule};

fn tids(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tids"))
        .args(args)
        .current_dir(dir)
        .env_remove("TIDS_GAS_SCHEDULE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status, String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    std::fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

/// Parses a CSV table into its header and rows.
fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>());
    let header = lines.next().unwrap();
    (header, lines.collect())
}

fn col(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn honest_run_is_lightweight() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&tids(&["run"], dir.path()));
    let g = GasSchedule::default();
    let gas =
        g.gas(fns::DEPLOY_SWITCH).unwrap() + g.gas(fns::NEW_SERVICE).unwrap() + g.gas(fns::RECIPIENT_RECEIPT).unwrap();
    assert!(out.contains("status        delivered_light\n"), "{out}");
    assert!(out.contains(&format!("total gas     {gas}\n")), "{out}");
    assert!(out.contains(&format!("total USD     {}  ", g.usd(gas))), "{out}");
    assert!(out.contains("delivered     yes, plaintext matches\n"));
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none(), "run without --out wrote files");
}

#[test]
fn t_above_n_is_rejected_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "seed = 1\nl = 2\nn = 5\nt = 6\n");
    let o = tids(&["run", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml:4: t = 6"), "{err}");

    let cfg = write(dir.path(), "typo.toml", "l = 3\n\n[adversary]\nbride_per_key = 2\n");
    let o = tids(&["run", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("typo.toml:4:"));
}

#[test]
fn same_config_and_seed_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "seed = 11\navailability = 0.9\n[[mailman]]\nindex = 2\npolicy = \"fake\"\nfrom = 2\n",
    );
    let mut outputs = Vec::new();
    for (sub, fmt) in [("a", "jsonl"), ("b", "jsonl"), ("c", "csv")] {
        let o = tids(&["run", "--config", &cfg, "--out", sub, "--format", fmt], dir.path());
        stdout(&o);
        outputs.push(o.stdout);
    }
    assert_eq!(outputs[0], outputs[1]);
    for f in ["trace.jsonl", "summary.txt"] {
        assert_eq!(
            std::fs::read(dir.path().join("a").join(f)).unwrap(),
            std::fs::read(dir.path().join("b").join(f)).unwrap()
        );
    }
    let trace = std::fs::read_to_string(dir.path().join("a/trace.jsonl")).unwrap();
    for line in trace.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(["tx", "msg", "outcome"].contains(&v["record"].as_str().unwrap()));
    }
    assert_eq!(trace.lines().last().map(|l| l.starts_with("{\"record\":\"outcome\"")), Some(true));
    let csv_trace = std::fs::read_to_string(dir.path().join("c/trace.csv")).unwrap();
    assert!(csv_trace.starts_with("seq,phase,epoch,function,"));

    let mut names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names, ["a", "b", "c", "c.toml"]);
}

#[test]
fn analyze_examples() {
    let dir = tempfile::tempdir().unwrap();
    let a = stdout(&tids(&["analyze", "availability", "3", "4", "10", "0.95"], dir.path()));
    let want = availability(3, 4, 10, 0.95).unwrap();
    assert!(a.starts_with(&format!("availability {want:.6}\n")), "{a}");
    assert!((want - 0.9999).abs() < 5e-4);

    let g = GasSchedule::default();
    let fixed = [fns::DEPLOY_SWITCH, fns::NEW_SERVICE, fns::DEPLOY_SUPPLEMENTARY, fns::RECIPIENT_RECEIPT]
        .iter()
        .map(|f| g.gas(f).unwrap())
        .sum::<u64>();
    let heavy = fixed + 20 * (g.c_id() + g.c_pk());
    let c = stdout(&tids(&["analyze", "cost", "heavyweight", "20"], dir.path()));
    assert!(c.contains(&format!("total        {heavy} gas  {}\n", g.usd(heavy))), "{c}");

    let s = stdout(&tids(&["analyze", "sybil", "3", "100", "1.0"], dir.path()));
    assert!(s.contains("min deposit  200.0\n"), "{s}");

    let o = tids(&["analyze", "availability", "3", "11", "10", "0.95"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn gas_schedule_file_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let gas = write(dir.path(), "gas.toml", "ether_to_usd = \"350\"\n[gas]\nnewService = 100000\n");
    let o = Command::new(env!("CARGO_BIN_EXE_tids"))
        .args(["analyze", "cost", "light", "5"])
        .current_dir(dir.path())
        .env("TIDS_GAS_SCHEDULE", &gas)
        .output()
        .unwrap();
    let text = stdout(&o);
    let g = GasSchedule::with_overrides(
        [(fns::NEW_SERVICE.to_string(), 100_000)],
        None,
        tids_core::ledger::parse_ratio("350"),
    )
    .unwrap();
    let total = 616_666 + 100_000 + 54_291;
    assert!(text.contains(&format!("total        {total} gas  {}\n", g.usd(total))), "{text}");

    let bad = write(dir.path(), "bad_gas.toml", "[gas]\nfrobnicate = 3\n");
    let o = Command::new(env!("CARGO_BIN_EXE_tids"))
        .args(["analyze", "cost", "light", "5"])
        .env("TIDS_GAS_SCHEDULE", dir.path().join(bad))
        .output()
        .unwrap();
    assert!(!o.status.success());
}

#[test]
fn sweep_n_light_gas_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&tids(&["sweep", "--sweep-axis", "n", "--sweep-range", "5,10,20,50"], dir.path()));
    let (h, rows) = csv(&text);
    let n = col(&h, &rows, "n");
    let light = col(&h, &rows, "light_gas");
    assert_eq!(n, [5.0, 10.0, 20.0, 50.0]);
    assert!(light.iter().all(|g| *g == light[0]));
    assert_eq!(light, col(&h, &rows, "light_gas_analytic"));
    let heavy = col(&h, &rows, "heavy_gas");
    assert_eq!(heavy, col(&h, &rows, "heavy_gas_analytic"));
    let g = GasSchedule::default();
    assert_eq!(heavy[1] - heavy[0], 5.0 * (g.c_id() + g.c_pk()) as f64);
    let straw = col(&h, &rows, "strawman_gas");
    assert!(straw.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn sweep_availability_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "l = 4\nt = 4\nn = 10\n");
    let text = stdout(&tids(
        &["sweep", "--config", &cfg, "--sweep-axis", "A_T", "--sweep-range", "0.80:1.0:0.02", "--trials", "20000"],
        dir.path(),
    ));
    let (h, rows) = csv(&text);
    let a_t = col(&h, &rows, "a_t");
    let analytic = col(&h, &rows, "availability");
    let mc = col(&h, &rows, "availability_mc");
    assert_eq!(a_t.len(), 11);
    assert!(analytic.windows(2).all(|w| w[1] >= w[0]));
    for ((a, want), got) in a_t.iter().zip(&analytic).zip(&mc) {
        assert!((availability(4, 4, 10, *a).unwrap() - want).abs() < 1e-12);
        let se = (want * (1.0 - want) / 20_000.0).sqrt();
        assert!((got - want).abs() <= 4.0 * se + 1e-12, "A_T {a}: {got} vs {want}");
    }
    // Steep below 0.9, above three nines from 0.96 on.
    assert!(analytic[0] < 0.7 && analytic[5] > 0.97 && analytic[8] > 0.999);
}

#[test]
fn sweep_x_minimum_near_l_minus_one_v() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "l = 3\nt = 4\nn = 10\n[adversary]\nsybil_v = 100\n");
    let args = ["sweep", "--config", &cfg, "--sweep-axis", "x", "--sweep-range", "50:600:10", "--trials", "10000"];
    let o = tids(&args, dir.path());
    let text = stdout(&o);
    let (h, rows) = csv(&text);
    let xs = col(&h, &rows, "x");
    let cost = col(&h, &rows, "expected_deposit");
    let best = (0..xs.len()).min_by(|a, b| cost[*a].total_cmp(&cost[*b])).unwrap();
    assert!((170.0..=230.0).contains(&xs[best]), "minimum at {}", xs[best]);
    assert!(String::from_utf8_lossy(&o.stderr).contains(&format!("empirical minimum at x = {}", xs[best])));

    let again = stdout(&tids(&args, dir.path()));
    assert_eq!(text, again);
}

#[test]
fn sweep_writes_only_into_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[output]\ndir = \"results\"\n");
    let o = tids(
        &[
            "sweep",
            "--config",
            &cfg,
            "--sweep-axis",
            "l",
            "--sweep-range",
            "2:3",
            "--trials",
            "500",
            "--format",
            "jsonl",
        ],
        dir.path(),
    );
    assert_eq!(stdout(&o), "2 points on axis l\n");
    let table = std::fs::read_to_string(dir.path().join("results/sweep_l.jsonl")).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.starts_with("{\"l\":2,"));
    let mut names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names, ["c.toml", "results"]);
}
