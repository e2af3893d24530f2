use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dynbin::format::load_instance;
use dynbin::report::{read_csv, CSV_COLUMNS};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dynbin"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn dynbin")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn fig2_fixture_costs() {
    let f = fixture("fig2_k4_mu10.jsonl");
    let o = run(&["run", "--instance", f.to_str().unwrap(), "--alg", "firstfit"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("firstfit: cost 40 "));
    let o = run(&["opt", f.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["opt_total"], 13.0);
}

#[test]
fn delay_fixture_and_result_file() {
    let dir = tempfile::tempdir().unwrap();
    let res = dir.path().join("r.json");
    let trace = dir.path().join("t.jsonl");
    let f = fixture("delay_single.jsonl");
    let o = run(&[
        "run",
        "--instance",
        f.to_str().unwrap(),
        "--alg",
        "delay",
        "--delay-c",
        "100",
        "--result",
        res.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&res).unwrap()).unwrap();
    assert_eq!(v["total_active_time"], 225.0);
    assert_eq!(v["migrations"]["unit"], 2);
    assert!(run(&["verify", "--trace", trace.to_str().unwrap()]).status.success());
}

#[test]
fn uniform_fixture_verifies_under_every_policy() {
    let f = fixture("uniform_n30_s7.jsonl");
    assert_eq!(load_instance(&f).unwrap().len(), 30);
    for alg in [
        &["--alg", "firstfit"][..],
        &["--alg", "alg1", "--alpha", "0.2", "--f", "0.75"],
        &["--alg", "alg2", "--alpha", "0.25", "--mig-order", "size-desc"],
        &["--alg", "sizecost", "--alpha", "0.1"],
        &["--alg", "delay", "--delay-c", "4"],
    ] {
        let mut args = vec!["verify", f.to_str().unwrap()];
        args.extend_from_slice(alg);
        let o = run(&args);
        assert!(o.status.success(), "{:?}: {}", alg, stdout(&o));
        assert!(!stdout(&o).contains("FAIL"));
    }
}

#[test]
fn corrupted_trace_is_rejected() {
    let o = run(&["verify", "--trace", fixture("corrupt_overflow.trace.jsonl").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("capacity overflow"));
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(run(&["gen", "--family", "fig2", "--params", "k=0"]).status.code(), Some(2));
    assert_eq!(run(&["gen", "--family", "nope"]).status.code(), Some(2));
    assert_eq!(
        run(&["run", "--family", "fig2", "--alg", "alg2", "--alpha", "0.7"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["run", "--family", "fig2", "--alg", "delay", "--delay-c", "0.5"]).status.code(),
        Some(2)
    );
}

#[test]
fn gen_is_deterministic_per_seed() {
    let a = run(&["gen", "--family", "tradeoff", "--params", "inv_s=4,k=8,mu=16", "--seed", "3"]);
    let b = run(&["gen", "--family", "tradeoff", "--params", "inv_s=4,k=8,mu=16", "--seed", "3"]);
    let c = run(&["gen", "--family", "tradeoff", "--params", "inv_s=4,k=8,mu=16", "--seed", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert!(stdout(&a).starts_with("{\"scale\":4,\"seed\":3,\"rng\":\"chacha8\""));
}

#[test]
fn config_file_run_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let json = dir.path().join("t.json");
    let cfg = dir.path().join("c.json");
    let config = serde_json::json!({
        "algorithm": {"alg": "sizecost", "alpha": 0.25, "mig_order": "size-desc"},
        "family": {"family": "uniform", "n": 40, "scale": 64, "size_min": 1, "size_max": 64,
                   "dur_min": 1.0, "dur_max": 8.0, "window": 30.0, "quantum": 0.0009765625, "max_live": 12},
        "trials": 6,
        "base_seed": 100,
        "csv": csv,
        "json": json,
    });
    std::fs::write(&cfg, serde_json::to_string(&config).unwrap()).unwrap();
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    let rows = read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(rows.iter().map(|r| r.seed).collect::<Vec<_>>(), (100..106).collect::<Vec<_>>());
    assert!(rows.iter().all(|r| r.alg == "sizecost" && r.f == Some(0.75)));
    let header = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(header.lines().next().unwrap(), CSV_COLUMNS.join(","));

    let o = run(&["report", json.to_str().unwrap(), "--rows"]);
    assert!(o.status.success());
    assert!(o.stderr.is_empty(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("trials: 6, failed: 0"));
}

#[test]
fn smoke_matrix() {
    let families = [
        ("fig2", "k=3,mu=5"),
        ("tradeoff", "inv_s=2,k=4,mu=4"),
        ("delaylb", "c=16"),
        ("basiclb", "k=4,mu=4"),
        ("uniform", "n=25,max_live=8"),
    ];
    let algs: [&[&str]; 5] = [
        &["--alg", "firstfit"],
        &["--alg", "alg1", "--alpha", "0.25", "--f", "0.5"],
        &["--alg", "alg2", "--alpha", "0.25"],
        &["--alg", "sizecost", "--alpha", "0.25"],
        &["--alg", "delay", "--delay-c", "16"],
    ];
    for (family, params) in families {
        for alg in algs {
            let mut args = vec!["run", "--family", family, "--params", params, "--trials", "3"];
            args.extend_from_slice(alg);
            let o = run(&args);
            assert!(
                o.status.success(),
                "{} {:?}: {}{}",
                family,
                alg,
                stdout(&o),
                String::from_utf8_lossy(&o.stderr)
            );
        }
    }
}
