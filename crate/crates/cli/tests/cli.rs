use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use drivemap_core::explorer::{ExperimentSpec, ResultArchive};
use drivemap_core::library::load_library;
use drivemap_core::{CellKey, GateFunction};
use drivemap_testkit as tk;

fn drivemap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drivemap"))
        .args(args)
        .env_remove("DRIVEMAP_JOBS")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn genlib_writes_a_library_that_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lib.json");
    let c17 = tk::benchmark("c17.bench");
    let o = drivemap(&["genlib", "--functions-from", path(&c17), "-o", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lib = load_library(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(lib.function(CellKey::new(GateFunction::Nand, 2)).is_some());
    assert!(lib.function(CellKey::new(GateFunction::Not, 1)).is_some());
    assert_eq!(lib.functions().len(), 2);
}

#[test]
fn genlib_without_a_bench_is_a_usage_error() {
    let o = drivemap(&["genlib", "-o", "x.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_prints_one_row() {
    let c17 = tk::benchmark("c17.bench");
    let o = drivemap(&["eval", "--bench", path(&c17)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "id,d_wc,wns,timing_met,switching,internal,leakage,p_total,a_gate"
    );
    assert!(lines[1].starts_with("c17,"));
}

#[test]
fn eval_reports_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.bench");
    std::fs::write(&bad, "INPUT(a)\nOUTPUT(b)\nb = FOO(a)\n").unwrap();
    let o = drivemap(&["eval", "--bench", path(&bad)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let c17 = tk::benchmark("c17.bench");
    let o = drivemap(&["eval", "--bench", path(&c17), "--tr", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_reads_an_assignment() {
    let dir = tempfile::tempdir().unwrap();
    let c17 = tk::benchmark("c17.bench");
    let text =
        "N10 NAND2 D4\nN11 NAND2 D0\nN16 NAND2 D0\nN19 NAND2 D0\nN22 NAND2 D0\nN23 NAND2 D0\n";
    let a = dir.path().join("a.txt");
    std::fs::write(&a, text).unwrap();
    let base = drivemap(&["eval", "--bench", path(&c17)]);
    let sized = drivemap(&["eval", "--bench", path(&c17), "--assignment", path(&a)]);
    assert!(sized.status.success(), "{}", stderr(&sized));
    assert_ne!(stdout(&base), stdout(&sized));
}

#[test]
fn optimize_smoke_run_is_fast_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let c17 = tk::benchmark("c17.bench");
    let mut pareto = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let start = Instant::now();
        let o = drivemap(&[
            "optimize",
            "--bench",
            path(&c17),
            "--pop",
            "16",
            "--gen",
            "10",
            "--seed-rng",
            "7",
            "-o",
            path(&out),
        ]);
        assert!(start.elapsed() < Duration::from_secs(10));
        assert!(o.status.success(), "{}", stderr(&o));
        let err = stderr(&o);
        assert!(err.contains("# resolved configuration"));
        assert_eq!(err.lines().filter(|l| l.starts_with("gen ")).count(), 11);
        pareto.push(std::fs::read(out.join("pareto.csv")).unwrap());
        ResultArchive::load(&out).unwrap();
    }
    assert_eq!(pareto[0], pareto[1]);
}

#[test]
fn zero_mutation_rate_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let c17 = tk::benchmark("c17.bench");
    let out = dir.path().join("x");
    let o = drivemap(&[
        "optimize",
        "--bench",
        path(&c17),
        "--rho",
        "0",
        "-o",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mutation rate"));
    assert!(!out.exists());
}

#[test]
fn sweep_without_optimize_writes_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let c17 = tk::benchmark("c17.bench");
    let out = dir.path().join("s");
    let o = drivemap(&[
        "sweep",
        "--bench",
        path(&c17),
        "--tr-max",
        "0.1",
        "--tr-min",
        "0.04",
        "--steps",
        "10",
        "-o",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let seeds = std::fs::read_to_string(out.join("seeds.csv")).unwrap();
    assert_eq!(seeds.lines().count(), 11);
    assert!(out.join("frontier.csv").exists());

    let o = drivemap(&[
        "sweep",
        "--bench",
        path(&c17),
        "--tr-max",
        "0.04",
        "--tr-min",
        "0.1",
        "--steps",
        "10",
        "-o",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_with_optimize_prints_hypervolumes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let c432 = tk::benchmark("c432.bench");
    let out = dir.path().join("m");
    let o = drivemap(&[
        "sweep",
        "--bench",
        path(&c432),
        "--tr-max",
        "1",
        "--tr-min",
        "0.4",
        "--steps",
        "4",
        "--load",
        "d1",
        "--optimize",
        "--gen",
        "3",
        "--jobs",
        "2",
        "-q",
        "-o",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let line = text
        .lines()
        .find(|l| l.starts_with("hypervolume final"))
        .unwrap();
    let v: Vec<f64> = line
        .split_whitespace()
        .filter_map(|w| w.parse().ok())
        .collect();
    assert!(v[0] >= v[1], "{line}");

    let r = drivemap(&["report", path(&out)]);
    assert!(r.status.success(), "{}", stderr(&r));
    let archive = ResultArchive::from_json(&stdout(&r)).unwrap();
    assert_eq!(archive.seeds.len(), 4);
    assert_eq!(archive.population.len(), 20);
    assert_eq!(archive.spec.moea.jobs, Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let bench = tk::benchmark("c17.bench");
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "benchmark = {:?}\noutput = \"from_config\"\n\n[moea]\npopulation_size = 40\ngenerations = 2\n",
            path(&bench)
        ),
    )
    .unwrap();
    let o = drivemap(&["optimize", "--config", path(&config), "--pop", "8", "-q"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("from_config");
    let spec: ExperimentSpec =
        serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(spec.moea.population_size, 8);
    assert_eq!(spec.moea.generations, 2);

    std::fs::write(&config, "benchmark = \"c17.bench\"\nsurprise = 1\n").unwrap();
    let o = drivemap(&["optimize", "--config", path(&config), "-o", "unused"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("surprise"), "{}", stderr(&o));
}

#[test]
fn jobs_default_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let c17 = tk::benchmark("c17.bench");
    let out = dir.path().join("j");
    let o = Command::new(env!("CARGO_BIN_EXE_drivemap"))
        .args([
            "optimize",
            "--bench",
            path(&c17),
            "--pop",
            "4",
            "--gen",
            "1",
            "-q",
            "-o",
        ])
        .arg(&out)
        .env("DRIVEMAP_JOBS", "3")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let archive = ResultArchive::load(&out).unwrap();
    assert_eq!(archive.spec.moea.jobs, Some(3));
}

#[test]
fn shipped_configs_parse() {
    let root = tk::benchmark("").join("../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let text = std::fs::read_to_string(&p).unwrap();
            let mut table: toml::Table = toml::from_str(&text).unwrap();
            let mode = if table.contains_key("sweep") {
                "multi_seed"
            } else {
                "single_seed"
            };
            table.insert("mode".to_owned(), mode.into());
            let spec: ExperimentSpec = table.try_into().unwrap_or_else(|e| panic!("{p:?}: {e}"));
            spec.validate().unwrap_or_else(|e| panic!("{p:?}: {e}"));
            assert!(p.parent().unwrap().join(&spec.benchmark).exists(), "{p:?}");
            seen += 1;
        }
    }
    assert!(seen >= 5);
}

#[test]
fn help_names_units() {
    for sub in ["genlib", "eval", "optimize", "sweep"] {
        let o = drivemap(&[sub, "--help"]);
        assert!(o.status.success());
        assert!(stdout(&o).contains("Units:"), "{sub}");
    }
    let o = drivemap(&["optimize", "--help"]);
    let text = stdout(&o);
    for flag in [
        "--tr <NS>",
        "--clock <NS>",
        "--load",
        "in fF",
        "--pop",
        "--gen",
        "--rho",
        "--seed-rng",
        "--jobs",
        "--out",
    ] {
        assert!(text.contains(flag), "{flag}");
    }
}
