//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use drivemap_core::eval::{
    compute_arrival_times, evaluate_design, evaluate_full, total_area, DesignEvaluator,
};
use drivemap_core::explorer::{
    load_design, run_multi_seed, run_single_seed, ExperimentSpec, LibrarySource, Mode,
    ResultArchive,
};
use drivemap_core::moea::{fast_non_dominated_sort, mutate, GenerationStats};
use drivemap_core::netlist::{map_to_library, parse_bench};
use drivemap_core::seeding::{greedy_timing_sizer, LoadScenario, SweepConfig};
use drivemap_core::{
    evolve, CellKey, Chromosome, GateFunction, GeneSpace, MappedDesign, MoeaConfig,
    ObjectiveVector, ScalingProfile, TimingScenario,
};
use drivemap_testkit as tk;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Histories of every evolution run in this suite, for the elitism check.
type Log = Vec<(String, Vec<GenerationStats>)>;
type Check = Box<dyn FnOnce(&mut Log) -> Outcome>;

fn main() {
    let mut log: Log = Vec::new();
    let criteria: Vec<(&str, Check)> = vec![
        ("1 sorting oracle", Box::new(|_| sorting_oracle())),
        ("2 timing oracle", Box::new(|_| timing_oracle())),
        ("3 exhaustive Pareto recovery", Box::new(pareto_recovery)),
        (
            "4 single-seed improvement",
            Box::new(single_seed_improvement),
        ),
        ("6 multi-seed frontier push", Box::new(frontier_push)),
        (
            "7 determinism under parallelism",
            Box::new(parallel_determinism),
        ),
        ("8 physics sanity", Box::new(|_| physics())),
    ];
    let mut results = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check(&mut log);
        report(name, &o, start.elapsed().as_secs_f64());
        results.push(o.pass);
    }
    let start = Instant::now();
    let o = elitism(&log);
    report("5 elitism monotonicity", &o, start.elapsed().as_secs_f64());
    results.push(o.pass);

    if results.iter().any(|p| !p) {
        std::process::exit(1);
    }
}

fn report(name: &str, o: &Outcome, secs: f64) {
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!("{verdict} criterion {name} ({secs:.1} s): {}", o.detail);
}

fn within(o: Outcome, secs: f64, limit: f64) -> Outcome {
    if secs < limit {
        o
    } else {
        Outcome {
            pass: false,
            detail: format!("{} [took {secs:.0} s, limit {limit:.0} s]", o.detail),
        }
    }
}

fn design_for(netlist_text: &str, labels: &[&str]) -> MappedDesign {
    let netlist = parse_bench(netlist_text).unwrap();
    let mut keys: std::collections::BTreeSet<CellKey> = netlist
        .gates
        .iter()
        .map(|g| CellKey::new(g.function, g.arity()))
        .collect();
    keys.insert(CellKey::new(GateFunction::Not, 1));
    let profile = ScalingProfile::default().with_labels(labels).unwrap();
    let lib = drivemap_core::library::generate_synthetic_library(&profile, &keys).unwrap();
    map_to_library(netlist, lib).unwrap()
}

fn sorting_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=200);
        let levels = rng.gen_range(2..=20);
        let mut pts: Vec<[f64; 3]> = (0..n)
            .map(|_| std::array::from_fn(|_| rng.gen_range(0..levels) as f64))
            .collect();
        // Explicit duplicates on top of the ones coarse levels produce.
        for _ in 0..n / 10 {
            let i = rng.gen_range(0..pts.len());
            pts.push(pts[i]);
        }
        let objs: Vec<ObjectiveVector> = pts
            .iter()
            .map(|&p| ObjectiveVector::from_array(p))
            .collect();
        let mut fast = fast_non_dominated_sort(&objs);
        for f in &mut fast {
            f.sort_unstable();
        }
        if fast != tk::pairwise_fronts(&pts) {
            mismatches += 1;
        }
    }
    let o = Outcome {
        pass: mismatches == 0,
        detail: format!("{mismatches} mismatches over 1000 populations"),
    };
    within(o, start.elapsed().as_secs_f64(), 60.0)
}

fn timing_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut cases: Vec<String> = vec![tk::read_benchmark("c17.bench")];
    for _ in 0..200 {
        let inputs = rng.gen_range(1..=8);
        let gates = rng.gen_range(1..=25);
        cases.push(tk::random_dag(&mut rng, inputs, gates));
    }
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for text in &cases {
        let design = design_for(text, &drivemap_core::library::FULL_LADDER);
        let genes: Vec<usize> = design
            .variant_counts()
            .iter()
            .map(|&n| rng.gen_range(0..n))
            .collect();
        let load = rng.gen_range(0.0..10e-15);
        let s = TimingScenario::with_required_time(1e-9, 4e-9, load).unwrap();
        let d = design
            .apply_chromosome(&Chromosome::new(genes.clone()))
            .unwrap();
        let fast = compute_arrival_times(&d, &s).worst_arrival;
        let c = tk::Conditions {
            required_time: s.required_time,
            clock_period: s.clock_period,
            output_load: s.output_load,
        };
        let slow = tk::path_enumeration_delay(design.netlist(), design.library(), &genes, &c);
        let rel = (fast - slow).abs() / slow.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        if rel > 1e-12 {
            failures += 1;
        }
    }
    let o = Outcome {
        pass: failures == 0,
        detail: format!(
            "{} designs, {failures} beyond 1e-12, worst relative error {worst:.1e}",
            cases.len()
        ),
    };
    within(o, start.elapsed().as_secs_f64(), 60.0)
}

/// Distinct rank-1 objective vectors, sorted.
fn distinct_front(points: impl Iterator<Item = [f64; 3]>) -> Vec<[f64; 3]> {
    let mut v: Vec<[f64; 3]> = points.collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}

fn recovery_rate(bench: &str, restrict: &[(&str, &[&str])], log: &mut Log) -> (usize, usize) {
    let mut spec = ExperimentSpec::new(tk::benchmark(bench), Mode::SingleSeed);
    spec.library = LibrarySource::Synthetic {
        profile: ScalingProfile::default(),
        restrict: restrict
            .iter()
            .map(|(c, l)| (c.to_string(), l.iter().map(|s| s.to_string()).collect()))
            .collect(),
    };
    spec.moea.population_size = 16;
    spec.moea.generations = 30;
    spec.moea.mutation_rate = 0.05;
    let design = load_design(&spec).unwrap();
    let scenario = TimingScenario::default();
    let all: Vec<[f64; 3]> = tk::all_chromosomes(&design.variant_counts())
        .into_iter()
        .map(|g| {
            evaluate_full(&design, &Chromosome::new(g), &scenario)
                .unwrap()
                .objectives()
                .as_array()
        })
        .collect();
    let truth = tk::pareto_set(&all);
    let mut hits = 0;
    for seed in 0..100 {
        spec.moea.rng_seed = seed;
        let a = run_single_seed(&spec, |_| {}).unwrap();
        let found = distinct_front(a.pareto().map(|r| r.evaluation.objectives().as_array()));
        if found == truth {
            hits += 1;
        }
        log.push((format!("{bench} recovery seed {seed}"), a.history));
    }
    (hits, truth.len())
}

fn pareto_recovery(log: &mut Log) -> Outcome {
    let start = Instant::now();
    let two: &[&str] = &["D1", "D2"];
    let (hits, size) = recovery_rate("c17_buffered.bench", &[("NAND2", two), ("BUF1", two)], log);
    let (small_hits, small_size) = recovery_rate("c17.bench", &[("NAND2", two)], log);
    let o = Outcome {
        pass: hits >= 95,
        detail: format!(
            "{hits}/100 seeds recover the {size}-point front of 1024 designs (need 95); \
             6-gate c17 with 64 designs: {small_hits}/100 recover its {small_size}-point front"
        ),
    };
    within(o, start.elapsed().as_secs_f64(), 300.0)
}

fn improvement(a: &ResultArchive, id: Option<u64>, k: usize) -> Option<f64> {
    let r = a.summary.reference.get(k);
    id.map(|id| (r - a.record(id).unwrap().evaluation.objectives().get(k)) / r)
}

fn single_seed_improvement(log: &mut Log) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for bench in ["c432.bench", "c499.bench"] {
        let start = Instant::now();
        let mut spec = ExperimentSpec::new(tk::benchmark(bench), Mode::SingleSeed);
        spec.moea.population_size = 40;
        spec.moea.generations = 50;
        spec.moea.mutation_rate = 0.01;
        let a = run_single_seed(&spec, |_| {}).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let s = &a.summary;
        let best = [
            improvement(&a, s.best_d_wc, 0),
            improvement(&a, s.best_p_total, 1),
            improvement(&a, s.best_a_gate, 2),
        ];
        let trade = s.trade_off.map(|id| {
            let v = a.record(id).unwrap().evaluation.objectives().as_array();
            let r = s.reference.as_array();
            [0, 1, 2].map(|k| (r[k] - v[k]) / r[k])
        });
        let ok = best.iter().all(|b| b.is_some_and(|x| x >= 0.01))
            && trade.is_some_and(|t| t.iter().all(|&x| x > 0.0))
            && secs < 900.0;
        pass &= ok;
        let pct = |x: Option<f64>| x.map_or("none".to_owned(), |x| format!("{:.2}%", 100.0 * x));
        parts.push(format!(
            "{bench} at T_r {:.3e} s: D {} P {} A {}, trade-off {} ({secs:.0} s)",
            s.required_time,
            pct(best[0]),
            pct(best[1]),
            pct(best[2]),
            trade.map_or("none".to_owned(), |t| format!(
                "{:.2}%/{:.2}%/{:.2}%",
                100.0 * t[0],
                100.0 * t[1],
                100.0 * t[2]
            )),
        ));
        log.push((format!("{bench} single seed"), a.history));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn frontier_push(log: &mut Log) -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut all_weak = true;
    let mut any_strict = false;
    for load in [LoadScenario::D1, LoadScenario::D8] {
        let mut spec = ExperimentSpec::new(tk::benchmark("c432.bench"), Mode::MultiSeed);
        let design = load_design(&spec).unwrap();
        let c = load.capacitance(design.library()).unwrap();
        let tc = spec.scenario.clock_period;
        let slow = evaluate_design(
            &design,
            &TimingScenario::with_required_time(tc, tc, c).unwrap(),
        )
        .d_wc;
        let fastest = greedy_timing_sizer(
            &design,
            &TimingScenario::with_required_time(1e-15, tc, c).unwrap(),
        )
        .unwrap()
        .evaluation
        .d_wc;
        spec.sweep = Some(SweepConfig {
            tr_max: slow,
            tr_min: fastest,
            steps: 20,
            load,
        });
        spec.copies = 5;
        spec.moea.generations = 40;
        spec.moea.mutation_rate = 0.01;
        let a = run_multi_seed(&spec, |_| {}).unwrap();
        let s = &a.summary;
        let gain = s.hv_final / s.hv_frontier - 1.0;
        all_weak &= s.hv_final >= s.hv_frontier;
        any_strict |= gain >= 0.02;
        parts.push(format!(
            "{load}: N {} HV frontier {:.4e} final {:.4e} ({:+.2}%), {}/{} seeds survive ({:.0}%)",
            s.population_size,
            s.hv_frontier,
            s.hv_final,
            100.0 * gain,
            s.survivors.len(),
            a.seeds.len(),
            100.0 * a.survival_fraction()
        ));
        log.push((format!("c432 multi seed {load}"), a.history));
    }
    let o = Outcome {
        pass: all_weak && any_strict,
        detail: parts.join("; "),
    };
    within(o, start.elapsed().as_secs_f64(), 1800.0)
}

fn parallel_determinism(log: &mut Log) -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let bench = tk::benchmark("c432.bench");
    let mut files = BTreeMap::new();
    let mut failures = Vec::new();
    for jobs in ["1", "8"] {
        for run in 0..2 {
            let out = dir.path().join(format!("j{jobs}_{run}"));
            let o = Command::new(env!("CARGO_BIN_EXE_drivemap"))
                .args(["optimize", "--bench"])
                .arg(&bench)
                .args([
                    "--pop",
                    "40",
                    "--gen",
                    "50",
                    "--rho",
                    "0.01",
                    "--seed-rng",
                    "11",
                ])
                .args(["--jobs", jobs, "-q", "-o"])
                .arg(&out)
                .output()
                .unwrap();
            if !o.status.success() {
                failures.push(String::from_utf8_lossy(&o.stderr).into_owned());
                continue;
            }
            files.insert((jobs, run), std::fs::read(out.join("pareto.csv")).unwrap());
            log.push((
                format!("cli jobs {jobs} run {run}"),
                ResultArchive::load(Path::new(&out)).unwrap().history,
            ));
        }
    }
    let reference = files.values().next().cloned();
    let identical = failures.is_empty()
        && files.len() == 4
        && files.values().all(|f| Some(f) == reference.as_ref());
    let o = Outcome {
        pass: identical,
        detail: if failures.is_empty() {
            format!(
                "4 runs (jobs 1 and 8, twice each): pareto.csv {}",
                if identical {
                    "byte-identical"
                } else {
                    "differs"
                }
            )
        } else {
            format!("runs failed: {}", failures.join(" | "))
        },
    };
    within(o, start.elapsed().as_secs_f64(), 300.0)
}

fn elitism(log: &Log) -> Outcome {
    let mut violations = 0;
    let mut steps = 0;
    for (_, history) in log {
        for w in history.windows(2) {
            steps += 1;
            if w[1].min_d_wc > w[0].min_d_wc
                || w[1].min_p_total > w[0].min_p_total
                || w[1].min_a_gate > w[0].min_a_gate
            {
                violations += 1;
            }
        }
    }
    Outcome {
        pass: violations == 0 && !log.is_empty(),
        detail: format!(
            "{violations} violations over {} runs and {steps} generation steps",
            log.len()
        ),
    }
}

fn physics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures: Vec<String> = Vec::new();
    let design = design_for(
        &tk::read_benchmark("c432.bench"),
        &drivemap_core::library::FULL_LADDER,
    );
    for trial in 0..20 {
        let genes: Vec<usize> = design
            .variant_counts()
            .iter()
            .map(|&n| rng.gen_range(0..n))
            .collect();
        let d = design.apply_chromosome(&Chromosome::new(genes)).unwrap();
        let tc: f64 = 4e-9;
        let tr: f64 = rng.gen_range(0.2e-9..tc);
        let load = rng.gen_range(0.0..10e-15);
        let at = |period: f64| {
            evaluate_design(
                &d,
                &TimingScenario::with_required_time(tr.min(period), period, load).unwrap(),
            )
        };
        let base = at(tc);
        for k in [2.0, 4.0] {
            let fast = at(tc / k);
            if fast.switching != k * base.switching || fast.internal != k * base.internal {
                failures.push(format!("trial {trial}: dynamic power not linear at F x{k}"));
            }
            if fast.leakage != base.leakage {
                failures.push(format!("trial {trial}: leakage changed with F"));
            }
        }
        if (base.d_wc + base.wns - tr).abs() > 4.0 * f64::EPSILON * tr.max(base.d_wc) {
            failures.push(format!("trial {trial}: D_wc + WNS != T_r"));
        }
        let summed = (0..d.gate_count()).fold(0.0, |acc, g| acc + d.variant(g).area);
        if total_area(&d) != summed || base.a_gate != summed {
            failures.push(format!("trial {trial}: area not additive"));
        }
    }

    let mut stats = Vec::new();
    for rate in [0.01, 0.05, 0.3] {
        let counts = vec![11usize; 100];
        let space = GeneSpace::new(counts);
        let parent = Chromosome::new((0..100).map(|i| i % 11).collect());
        let draws = 1_000_000usize;
        let mut changed = 0usize;
        let mut landed = [0usize; 11];
        for _ in 0..draws / 100 {
            let child = mutate(&parent, &space, rate, &mut rng);
            for (a, b) in parent.genes().iter().zip(child.genes()) {
                if a != b {
                    changed += 1;
                    landed[(b + 11 - a) % 11] += 1;
                }
            }
        }
        let mean = draws as f64 * rate;
        let sigma = (draws as f64 * rate * (1.0 - rate)).sqrt();
        if (changed as f64 - mean).abs() > 3.0 * sigma {
            failures.push(format!(
                "rate {rate}: {changed} changes, expected {mean} +- {sigma:.0}"
            ));
        }
        // Each of the 10 other variants is equally likely.
        let p = 0.1;
        let each = changed as f64 * p;
        let s = (changed as f64 * p * (1.0 - p)).sqrt();
        if landed[0] != 0
            || landed[1..]
                .iter()
                .any(|&c| (c as f64 - each).abs() > 3.0 * s)
        {
            failures.push(format!("rate {rate}: targets not uniform {landed:?}"));
        }
        stats.push(format!("rho {rate}: {changed}/{draws}"));
    }

    // A run that cannot change anything evaluates only its seed.
    let frozen = design_for(&tk::read_benchmark("c17.bench"), &["D1"]);
    let ev = DesignEvaluator::new(frozen.clone(), TimingScenario::default());
    let e = evolve(
        &GeneSpace::new(frozen.variant_counts()),
        &ev,
        &MoeaConfig {
            population_size: 4,
            generations: 3,
            ..MoeaConfig::default()
        },
        &[frozen.extract_chromosome()],
    )
    .unwrap();
    if e.evaluations != 1 {
        failures.push(format!("frozen design evaluated {} times", e.evaluations));
    }

    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!(
                "F x2/x4 linear, leakage fixed, D_wc + WNS = T_r, area additive over 20 designs; mutation {}",
                stats.join(", ")
            )
        } else {
            failures.join("; ")
        },
    }
}
