//! `drivemap`: drive-strength remapping from the command line.
//!
//! Times on the command line are in nanoseconds and loads in femtofarads;
//! config files and archives use SI units throughout.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drivemap_core::eval::{evaluate_full, evaluation_csv};
use drivemap_core::explorer::{
    load_design, run_multi_seed, run_single_seed, ExperimentSpec, LibrarySource, Mode,
    ResultArchive,
};
use drivemap_core::library::{generate_synthetic_library, serialize_library};
use drivemap_core::moea::GenerationStats;
use drivemap_core::netlist::{parse_bench, read_assignment};
use drivemap_core::seeding::{
    constraint_sweep, seeds_csv, syn_frontier, LoadScenario, SweepConfig,
};
use drivemap_core::{CellKey, Error, GateFunction, ScalingProfile, TimingScenario};

const NS_PER_S: f64 = 1e9;

const UNITS: &str = "Units: times in ns on the command line, seconds in config files; \
loads in fF (or d1/d8); power in W; area in um2.";

#[derive(Parser)]
#[command(
    name = "drivemap",
    version,
    about = "Multi-objective drive-strength remapping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cell library for the cells a benchmark uses
    #[command(after_help = UNITS)]
    Genlib(GenlibArgs),
    /// Evaluate one design and print its objectives as CSV
    #[command(after_help = UNITS)]
    Eval(EvalArgs),
    /// Optimise from the sizer's seed at the tightest met constraint
    #[command(after_help = UNITS)]
    Optimize(OptimizeArgs),
    /// Sweep the timing constraint, optionally evolving from every seed
    #[command(after_help = UNITS)]
    Sweep(SweepArgs),
    /// Print an archive directory as one JSON document
    Report(ReportArgs),
}

#[derive(Args)]
struct GenlibArgs {
    /// Benchmark whose (function, arity) pairs are generated; NOT1 is always added
    #[arg(long, value_name = "BENCH")]
    functions_from: PathBuf,
    /// Scaling profile (TOML); defaults to the built-in profile
    #[arg(long, value_name = "FILE")]
    profile: Option<PathBuf>,
    /// Comma-separated strength labels, e.g. D1,D2,D4
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    /// Output library document (JSON)
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// ISCAS-85 .bench netlist
    #[arg(long)]
    bench: PathBuf,
    /// Library document (JSON); defaults to the synthetic library
    #[arg(long)]
    lib: Option<PathBuf>,
    /// Assignment file (`<instance> <cell> <strength>` per line); defaults to all-minimum
    #[arg(long)]
    assignment: Option<PathBuf>,
    /// Required time T_r in ns [default: the clock period]
    #[arg(long, value_name = "NS")]
    tr: Option<f64>,
    /// Clock period T_c in ns
    #[arg(long, value_name = "NS", default_value_t = 4.0)]
    clock: f64,
    /// Primary-output load: none, d1, d8 (NOT1 input cap) or a value in fF
    #[arg(long, default_value = "none")]
    load: LoadScenario,
}

#[derive(Args)]
struct DesignArgs {
    /// Experiment config (TOML, SI units); flags override its values
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// ISCAS-85 .bench netlist
    #[arg(long)]
    bench: Option<PathBuf>,
    /// Library document (JSON); defaults to the synthetic library
    #[arg(long)]
    lib: Option<PathBuf>,
    /// Keep only these strengths of a synthetic cell, e.g. NAND2=D0 (repeatable)
    #[arg(long, value_name = "CELL=LABELS")]
    restrict: Vec<String>,
    /// Comma-separated strength ladder of the synthetic library
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    /// Only gates of these functions change strength, e.g. NOT,BUF
    #[arg(long, value_delimiter = ',')]
    parameterise: Option<Vec<GateFunction>>,
    /// Clock period T_c in ns [default: 4]
    #[arg(long, value_name = "NS")]
    clock: Option<f64>,
    /// Primary-output load: none, d1, d8 (NOT1 input cap) or a value in fF
    #[arg(long)]
    load: Option<LoadScenario>,
    /// Archive directory
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Suppress per-generation progress lines
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct MoeaArgs {
    /// Population size N (even) [default: 200]
    #[arg(long)]
    pop: Option<usize>,
    /// Generations M [default: 200]
    #[arg(long)]
    gen: Option<usize>,
    /// Per-gene mutation probability rho in (0, 1] [default: 0.01]
    #[arg(long)]
    rho: Option<f64>,
    /// Root seed of the random streams [default: 1]
    #[arg(long)]
    seed_rng: Option<u64>,
    /// Worker threads for evaluation [default: all cores]
    #[arg(long, env = "DRIVEMAP_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[command(flatten)]
    moea: MoeaArgs,
    /// Required time T_r in ns [default: searched, tightest the sizer meets]
    #[arg(long, value_name = "NS")]
    tr: Option<f64>,
    /// Constraints tried by the search
    #[arg(long)]
    probe_steps: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[command(flatten)]
    moea: MoeaArgs,
    /// Loosest required time in ns
    #[arg(long, value_name = "NS")]
    tr_max: Option<f64>,
    /// Tightest required time in ns
    #[arg(long, value_name = "NS")]
    tr_min: Option<f64>,
    /// Number of required times, endpoints included
    #[arg(long)]
    steps: Option<usize>,
    /// Continue into evolution seeded with every sweep solution
    #[arg(long)]
    optimize: bool,
    /// Copies of each seed in the population (N = copies * steps) [default: 5]
    #[arg(long)]
    copies: Option<usize>,
    /// Required time in ns that flags the evolved designs [default: the clock period]
    #[arg(long, value_name = "NS")]
    tr: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Archive directory written by optimize or sweep
    archive: PathBuf,
    /// Write the JSON here instead of standard output
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Failure with the exit code it maps to.
enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidConstraint(_) => Failure::Usage(e.to_string()),
            e => Failure::Run(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Genlib(a) => genlib(a),
        Command::Eval(a) => eval(a),
        Command::Optimize(a) => optimize(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::FAILURE
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Run(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

/// Writes to standard output; a closed pipe is not an error.
fn emit(text: &str) -> CliResult {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(Failure::Run(format!("writing output: {e}")))
        }
        _ => Ok(()),
    }
}

fn seconds(ns: f64, flag: &str) -> CliResult<f64> {
    if ns.is_finite() && ns > 0.0 {
        Ok(ns / NS_PER_S)
    } else {
        Err(Failure::Usage(format!(
            "--{flag} must be a positive number of ns, got {ns}"
        )))
    }
}

fn profile_with(
    profile: ScalingProfile,
    labels: &Option<Vec<String>>,
) -> CliResult<ScalingProfile> {
    match labels {
        Some(l) => {
            let l: Vec<&str> = l.iter().map(String::as_str).collect();
            profile.with_labels(&l).map_err(Failure::from)
        }
        None => Ok(profile),
    }
}

fn genlib(a: GenlibArgs) -> CliResult {
    let netlist = parse_bench(&read(&a.functions_from)?)
        .map_err(|e| Failure::Run(format!("{}: {e}", a.functions_from.display())))?;
    let profile = match &a.profile {
        Some(p) => toml::from_str(&read(p)?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => ScalingProfile::default(),
    };
    let profile = profile_with(profile, &a.labels)?;
    let mut keys: BTreeSet<CellKey> = netlist
        .gates
        .iter()
        .map(|g| CellKey::new(g.function, g.arity()))
        .collect();
    keys.insert(CellKey::new(GateFunction::Not, 1));
    let library = generate_synthetic_library(&profile, &keys)?;
    write(&a.out, &serialize_library(&library))?;
    eprintln!(
        "wrote {} functions x {} strengths to {}",
        library.functions().len(),
        profile.strengths.len(),
        a.out.display()
    );
    Ok(())
}

fn eval(a: EvalArgs) -> CliResult {
    let mut spec = ExperimentSpec::new(&a.bench, Mode::SingleSeed);
    if let Some(lib) = &a.lib {
        spec.library = LibrarySource::Document { path: lib.clone() };
    }
    let design = load_design(&spec).map_err(|e| in_file(&a.bench, e))?;
    let chromosome = match &a.assignment {
        Some(p) => read_assignment(&design, &read(p)?).map_err(|e| in_file(p, e))?,
        None => design.extract_chromosome(),
    };
    let clock = seconds(a.clock, "clock")?;
    let tr = match a.tr {
        Some(t) => seconds(t, "tr")?,
        None => clock,
    };
    let load = a.load.capacitance(design.library())?;
    let scenario = TimingScenario::with_required_time(tr, clock, load)?;
    let e = evaluate_full(&design, &chromosome, &scenario)?;
    let name = a
        .bench
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    emit(&evaluation_csv([(name.as_str(), &e)]))
}

/// Prefixes parse errors with the file they came from.
fn in_file(path: &Path, e: Error) -> Failure {
    match e {
        Error::Parse { .. } | Error::UnknownFunction { .. } | Error::InvalidNetlist(_) => {
            Failure::Run(format!("{}: {e}", path.display()))
        }
        e => e.into(),
    }
}

/// Builds the spec from the config file (if any) and the flags.
fn resolve(d: &DesignArgs, m: &MoeaArgs, mode: Mode) -> CliResult<ExperimentSpec> {
    let mut spec = match &d.config {
        Some(path) => spec_from_config(path, mode)?,
        None => {
            let bench = d
                .bench
                .clone()
                .ok_or_else(|| Failure::Usage("--bench is required without --config".to_owned()))?;
            ExperimentSpec::new(bench, mode)
        }
    };
    if let Some(b) = &d.bench {
        spec.benchmark = b.clone();
    }
    if let Some(lib) = &d.lib {
        spec.library = LibrarySource::Document { path: lib.clone() };
    }
    if !d.restrict.is_empty() || d.labels.is_some() {
        let LibrarySource::Synthetic { profile, restrict } = &mut spec.library else {
            return Err(Failure::Usage(
                "--restrict and --labels apply to the synthetic library only".to_owned(),
            ));
        };
        *profile = profile_with(profile.clone(), &d.labels)?;
        for item in &d.restrict {
            let (cell, labels) = item.split_once('=').ok_or_else(|| {
                Failure::Usage(format!(
                    "--restrict expects CELL=LABEL[,LABEL...], got `{item}`"
                ))
            })?;
            restrict.insert(
                cell.trim().to_ascii_uppercase(),
                labels.split(',').map(|l| l.trim().to_owned()).collect(),
            );
        }
    }
    if let Some(p) = &d.parameterise {
        spec.parameterised = Some(p.iter().copied().collect());
    }
    if let Some(c) = d.clock {
        spec.scenario.clock_period = seconds(c, "clock")?;
    }
    if let Some(l) = d.load {
        spec.scenario.load = l;
    }
    if let Some(o) = &d.out {
        spec.output = Some(o.clone());
    }
    if let Some(n) = m.pop {
        spec.moea.population_size = n;
    }
    if let Some(g) = m.gen {
        spec.moea.generations = g;
    }
    if let Some(r) = m.rho {
        spec.moea.mutation_rate = r;
    }
    if let Some(s) = m.seed_rng {
        spec.moea.rng_seed = s;
    }
    if m.jobs.is_some() {
        spec.moea.jobs = m.jobs;
    }
    Ok(spec)
}

fn spec_from_config(path: &Path, mode: Mode) -> CliResult<ExperimentSpec> {
    let bad = |m: String| Failure::Usage(format!("{}: {m}", path.display()));
    let mut table: toml::Table = toml::from_str(&read(path)?).map_err(|e| bad(e.to_string()))?;
    let name = match mode {
        Mode::SingleSeed => "single_seed",
        Mode::MultiSeed => "multi_seed",
    };
    match table.get("mode").and_then(|v| v.as_str()) {
        None => {
            table.insert("mode".to_owned(), name.into());
        }
        Some(m) if m == name => {}
        Some(m) => {
            return Err(bad(format!(
                "mode `{m}` does not match this command ({name})"
            )))
        }
    }
    let mut spec: ExperimentSpec = table.try_into().map_err(|e| bad(e.to_string()))?;
    // Paths in a config file are relative to the file.
    let base = path.parent().unwrap_or(Path::new(""));
    let rebase = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    rebase(&mut spec.benchmark);
    if let LibrarySource::Document { path } = &mut spec.library {
        rebase(path);
    }
    if let Some(o) = &mut spec.output {
        rebase(o);
    }
    Ok(spec)
}

fn echo(spec: &ExperimentSpec) {
    match toml::to_string(spec) {
        Ok(text) => eprintln!("# resolved configuration\n{text}"),
        Err(_) => eprintln!("# resolved configuration\n{}", pretty_json(spec)),
    }
}

fn pretty_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serialisable")
}

fn progress(quiet: bool) -> impl FnMut(&GenerationStats) {
    move |s: &GenerationStats| {
        if !quiet {
            eprintln!(
                "gen {:>4}  d_wc {:.4e} s  p_total {:.4e} W  a_gate {:.4e} um2  front {:>4}  hv {:.4e}",
                s.generation, s.min_d_wc, s.min_p_total, s.min_a_gate, s.front_size, s.hypervolume
            );
        }
    }
}

fn output_dir(spec: &ExperimentSpec) -> CliResult<PathBuf> {
    spec.output
        .clone()
        .ok_or_else(|| Failure::Usage("an output directory is required (--out)".to_owned()))
}

fn optimize(a: OptimizeArgs) -> CliResult {
    let mut spec = resolve(&a.design, &a.moea, Mode::SingleSeed)?;
    if let Some(t) = a.tr {
        spec.scenario.required_time = Some(seconds(t, "tr")?);
    }
    if let Some(p) = a.probe_steps {
        spec.probe_steps = p;
    }
    let out = output_dir(&spec)?;
    spec.validate()?;
    echo(&spec);
    let archive = run_single_seed(&spec, progress(a.design.quiet))?;
    finish(&archive, &out)
}

fn sweep(a: SweepArgs) -> CliResult {
    let mut spec = resolve(&a.design, &a.moea, Mode::MultiSeed)?;
    let given = spec.sweep.clone();
    let pick = |flag: Option<f64>, from: Option<f64>, name: &str| -> CliResult<f64> {
        match (flag, from) {
            (Some(ns), _) => seconds(ns, name),
            (None, Some(s)) => Ok(s),
            (None, None) => Err(Failure::Usage(format!("--{name} is required"))),
        }
    };
    let sweep = SweepConfig {
        tr_max: pick(a.tr_max, given.as_ref().map(|s| s.tr_max), "tr-max")?,
        tr_min: pick(a.tr_min, given.as_ref().map(|s| s.tr_min), "tr-min")?,
        steps: a
            .steps
            .or(given.as_ref().map(|s| s.steps))
            .ok_or_else(|| Failure::Usage("--steps is required".to_owned()))?,
        load: a
            .design
            .load
            .or(given.as_ref().map(|s| s.load))
            .unwrap_or(spec.scenario.load),
    };
    spec.scenario.load = sweep.load;
    spec.sweep = Some(sweep.clone());
    if let Some(c) = a.copies {
        spec.copies = c;
    }
    if let Some(t) = a.tr {
        spec.scenario.required_time = Some(seconds(t, "tr")?);
    }
    let out = output_dir(&spec)?;
    spec.validate()?;
    echo(&spec);

    if a.optimize {
        let archive = run_multi_seed(&spec, progress(a.design.quiet))?;
        finish(&archive, &out)?;
        return emit(&format!(
            "hypervolume final {:.6e} frontier {:.6e}\n",
            archive.summary.hv_final, archive.summary.hv_frontier
        ));
    }
    let design = load_design(&spec)?;
    let seeds = constraint_sweep(&design, &sweep, spec.scenario.clock_period)?;
    let frontier = syn_frontier(&seeds);
    let frontier_rows = frontier.iter().map(|f| {
        let i = seeds
            .iter()
            .position(|s| s == f)
            .expect("frontier members are seeds");
        (i, f)
    });
    write(
        &out.join("config.json"),
        &format!("{}\n", pretty_json(&spec)),
    )?;
    write(&out.join("seeds.csv"), &seeds_csv(seeds.iter().enumerate()))?;
    write(&out.join("frontier.csv"), &seeds_csv(frontier_rows))?;
    let met = seeds.iter().filter(|s| s.timing_met).count();
    emit(&format!(
        "{} seeds ({met} met), {} on the frontier, written to {}\n",
        seeds.len(),
        frontier.len(),
        out.display()
    ))
}

fn finish(archive: &ResultArchive, out: &Path) -> CliResult {
    archive.export(out)?;
    let s = &archive.summary;
    let show = |id: Option<u64>| id.map_or("none".to_owned(), |i| i.to_string());
    emit(&format!(
        "archive {}\nrequired_time {:.6e} s  evaluations {}\nbest_d_wc {}  best_p_total {}  best_a_gate {}  trade_off {}\nsurviving seeds {}/{}\n",
        out.display(),
        s.required_time,
        s.evaluations,
        show(s.best_d_wc),
        show(s.best_p_total),
        show(s.best_a_gate),
        show(s.trade_off),
        s.survivors.len(),
        archive.seeds.len()
    ))
}

fn report(a: ReportArgs) -> CliResult {
    let archive = ResultArchive::load(&a.archive)?;
    let json = archive.to_json();
    match &a.out {
        Some(p) => write(p, &json),
        None => emit(&json),
    }
}
