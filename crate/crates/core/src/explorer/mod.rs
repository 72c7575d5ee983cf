//! End-to-end experiments: single-seed optimisation and multi-seed
//! design-space exploration, with exportable result archives.

mod archive;
mod hypervolume;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{
    evaluate_design, evaluate_full, DesignEvaluator, Evaluation, ObjectiveVector, TimingScenario,
    DEFAULT_CLOCK_PERIOD,
};
use crate::library::{
    generate_synthetic_library, load_library, CellKey, CellLibrary, GateFunction, ScalingProfile,
};
use crate::moea::{
    evolve_with, trade_off_index, GeneSpace, GenerationStats, Individual, MoeaConfig, Provenance,
};
use crate::netlist::{map_to_library, parse_bench, write_assignment, Chromosome, MappedDesign};
use crate::seeding::{
    constraint_sweep, greedy_timing_sizer, seed_at, syn_frontier, LoadScenario, SeedSolution,
    SweepConfig,
};

pub use archive::{ArchiveRecord, ResultArchive, Summary};
pub use hypervolume::{hypervolume, hypervolume_dominating};

/// Required time used to find how far the sizer can push delay.
const UNREACHABLE_REQUIRED_TIME: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SingleSeed,
    MultiSeed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LibrarySource {
    /// A JSON library document.
    Document { path: PathBuf },
    /// Generated for the cells the benchmark uses (plus `NOT1`).
    Synthetic {
        #[serde(default)]
        profile: ScalingProfile,
        /// Per-cell allowed strength labels, e.g. `NAND2 = ["D0"]`. Cells not
        /// listed keep every strength.
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        restrict: BTreeMap<String, Vec<String>>,
    },
}

impl Default for LibrarySource {
    fn default() -> Self {
        LibrarySource::Synthetic {
            profile: ScalingProfile::default(),
            restrict: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    /// `T_c`, seconds.
    #[serde(default = "default_clock")]
    pub clock_period: f64,
    #[serde(default)]
    pub load: LoadScenario,
    /// `T_r`, seconds. Single-seed runs search for the tightest met value
    /// when absent; multi-seed runs flag the final population against it
    /// (default `T_c`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_time: Option<f64>,
}

fn default_clock() -> f64 {
    DEFAULT_CLOCK_PERIOD
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            clock_period: DEFAULT_CLOCK_PERIOD,
            load: LoadScenario::None,
            required_time: None,
        }
    }
}

fn default_copies() -> usize {
    5
}

fn default_probe_steps() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub benchmark: PathBuf,
    #[serde(default)]
    pub library: LibrarySource,
    #[serde(default)]
    pub scenario: ScenarioSpec,
    pub mode: Mode,
    /// Required for multi-seed runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub moea: MoeaConfig,
    /// Copies of each seed in a multi-seed population; the population size
    /// becomes `copies * seeds`.
    #[serde(default = "default_copies")]
    pub copies: usize,
    /// Required times tried when searching for the single-seed constraint.
    #[serde(default = "default_probe_steps")]
    pub probe_steps: usize,
    /// Only gates of these functions may change strength.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameterised: Option<BTreeSet<GateFunction>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(benchmark: impl Into<PathBuf>, mode: Mode) -> Self {
        ExperimentSpec {
            benchmark: benchmark.into(),
            library: LibrarySource::default(),
            scenario: ScenarioSpec::default(),
            mode,
            sweep: None,
            moea: MoeaConfig::default(),
            copies: default_copies(),
            probe_steps: default_probe_steps(),
            parameterised: None,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            Mode::SingleSeed => {
                self.moea.validate()?;
                if self.probe_steps < 2 {
                    return Err(Error::InvalidConfig(
                        "probe_steps must be at least 2".to_owned(),
                    ));
                }
            }
            Mode::MultiSeed => {
                let sweep = self.sweep.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("multi-seed runs need a sweep".to_owned())
                })?;
                sweep.validate()?;
                if self.copies == 0 {
                    return Err(Error::InvalidConfig("copies must be at least 1".to_owned()));
                }
                MoeaConfig {
                    population_size: self.copies * sweep.steps,
                    ..self.moea.clone()
                }
                .validate()?;
            }
        }
        Ok(())
    }
}

/// Reads the benchmark, builds or loads the library and maps every gate to
/// its weakest variant.
pub fn load_design(spec: &ExperimentSpec) -> Result<MappedDesign> {
    let text =
        std::fs::read_to_string(&spec.benchmark).map_err(|e| Error::io(&spec.benchmark, e))?;
    let netlist = parse_bench(&text)?;
    let library = match &spec.library {
        LibrarySource::Document { path } => {
            let doc = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            load_library(&doc)?
        }
        LibrarySource::Synthetic { profile, restrict } => {
            let mut keys: BTreeSet<CellKey> = netlist
                .gates
                .iter()
                .map(|g| CellKey::new(g.function, g.arity()))
                .collect();
            keys.insert(CellKey::new(GateFunction::Not, 1));
            let full = generate_synthetic_library(profile, &keys)?;
            restrict_library(&full, restrict)?
        }
    };
    map_to_library(netlist, library)
}

/// Applies per-cell label lists on top of the full contents of `library`.
pub fn restrict_library(
    library: &CellLibrary,
    restrict: &BTreeMap<String, Vec<String>>,
) -> Result<CellLibrary> {
    if restrict.is_empty() {
        return Ok(library.clone());
    }
    let mut allow = library.contents();
    for (cell, labels) in restrict {
        let key: CellKey = cell.parse().map_err(Error::InvalidConfig)?;
        if !allow.contains_key(&key) {
            return Err(Error::UnknownCell {
                function: key.function,
                arity: key.arity,
            });
        }
        allow.insert(key, labels.iter().cloned().collect());
    }
    library.restrict(&allow)
}

/// Best improvement of one objective over `reference` that worsens neither of
/// the others. Ties go to the earliest member.
pub fn best_improvement(
    points: &[ObjectiveVector],
    reference: &ObjectiveVector,
    objective: usize,
) -> Option<usize> {
    let r = reference.as_array();
    let mut best: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        let v = p.as_array();
        let others_ok = (0..ObjectiveVector::LEN).all(|k| k == objective || v[k] <= r[k]);
        if others_ok
            && v[objective] < r[objective]
            && best.is_none_or(|b| v[objective] < points[b].get(objective))
        {
            best = Some(i);
        }
    }
    best
}

/// Single-seed optimisation.
///
/// The seed is the sizer's solution at the tightest required time it meets,
/// found by sweeping from the all-minimum delay down to the delay the sizer
/// reaches under an impossible constraint. A fixed `scenario.required_time`
/// skips the search.
pub fn run_single_seed(
    spec: &ExperimentSpec,
    observe: impl FnMut(&GenerationStats),
) -> Result<ResultArchive> {
    if spec.mode != Mode::SingleSeed {
        return Err(Error::InvalidConfig(
            "expected a single-seed spec".to_owned(),
        ));
    }
    spec.validate()?;
    let design = load_design(spec)?;
    let tc = spec.scenario.clock_period;
    let load = spec.scenario.load.capacitance(design.library())?;
    let seed = match spec.scenario.required_time {
        Some(tr) => seed_at(&design, &TimingScenario::with_required_time(tr, tc, load)?)?,
        None => tightest_met_seed(&design, tc, load, spec.probe_steps)?,
    };
    let scenario = TimingScenario::with_required_time(seed.required_time, tc, load)?;
    let reference = seed.objectives();
    let seeds = vec![seed];
    run_moea(
        spec,
        design,
        scenario,
        seeds,
        spec.moea.clone(),
        reference,
        observe,
    )
}

fn tightest_met_seed(
    design: &MappedDesign,
    tc: f64,
    load: f64,
    steps: usize,
) -> Result<SeedSolution> {
    let loose = TimingScenario::with_required_time(tc, tc, load)?;
    let minimum = evaluate_design(design, &loose);
    let probe = greedy_timing_sizer(
        design,
        &TimingScenario::with_required_time(UNREACHABLE_REQUIRED_TIME, tc, load)?,
    )?;
    let tr_max = minimum.d_wc.min(tc);
    let tr_min = probe.evaluation.d_wc;
    if !(tr_min < tr_max) {
        return seed_at(
            design,
            &TimingScenario::with_required_time(tr_max, tc, load)?,
        );
    }
    let sweep = SweepConfig {
        tr_max,
        tr_min,
        steps,
        load: LoadScenario::Explicit(load),
    };
    let seeds = constraint_sweep(design, &sweep, tc)?;
    match seeds.into_iter().rev().find(|s| s.timing_met) {
        Some(s) => Ok(s),
        None => seed_at(design, &loose),
    }
}

/// Multi-seed exploration: constraint sweep, seed frontier, then evolution
/// from `copies` of every seed.
pub fn run_multi_seed(
    spec: &ExperimentSpec,
    observe: impl FnMut(&GenerationStats),
) -> Result<ResultArchive> {
    if spec.mode != Mode::MultiSeed {
        return Err(Error::InvalidConfig(
            "expected a multi-seed spec".to_owned(),
        ));
    }
    spec.validate()?;
    let sweep = spec.sweep.as_ref().expect("validated");
    let design = load_design(spec)?;
    let tc = spec.scenario.clock_period;
    let load = sweep.load.capacitance(design.library())?;
    let seeds = constraint_sweep(&design, sweep, tc)?;
    let tr = spec.scenario.required_time.unwrap_or(tc);
    let scenario = TimingScenario::with_required_time(tr, tc, load)?;
    let frontier = syn_frontier(&seeds);
    let reference = frontier[0].objectives();
    let moea = MoeaConfig {
        population_size: spec.copies * seeds.len(),
        ..spec.moea.clone()
    };
    run_moea(spec, design, scenario, seeds, moea, reference, observe)
}

/// Either mode, by `spec.mode`.
pub fn run(spec: &ExperimentSpec, observe: impl FnMut(&GenerationStats)) -> Result<ResultArchive> {
    match spec.mode {
        Mode::SingleSeed => run_single_seed(spec, observe),
        Mode::MultiSeed => run_multi_seed(spec, observe),
    }
}

fn run_moea(
    spec: &ExperimentSpec,
    design: MappedDesign,
    scenario: TimingScenario,
    seeds: Vec<SeedSolution>,
    moea: MoeaConfig,
    reference: ObjectiveVector,
    observe: impl FnMut(&GenerationStats),
) -> Result<ResultArchive> {
    let space = GeneSpace::from_design(&design, spec.parameterised.as_ref());
    let chromosomes: Vec<Chromosome> = seeds.iter().map(|s| s.chromosome.clone()).collect();
    let evaluator = DesignEvaluator::new(design.clone(), scenario);
    let evolution = evolve_with(&space, &evaluator, &moea, &chromosomes, observe)?;

    let records = evolution
        .population
        .iter()
        .map(|ind| record(&design, &scenario, ind))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<ObjectiveVector> = records.iter().map(|r| r.evaluation.objectives()).collect();
    let rank1: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].rank == Some(1))
        .collect();
    let front: Vec<ObjectiveVector> = rank1.iter().map(|&i| points[i]).collect();
    let trade_off = trade_off_index(&front, &reference).map(|k| records[rank1[k]].id);
    let best = [0, 1, 2].map(|k| best_improvement(&points, &reference, k).map(|i| records[i].id));

    let frontier = syn_frontier(&seeds);
    let frontier_index: Vec<usize> = frontier
        .iter()
        .map(|f| {
            seeds
                .iter()
                .position(|s| s == f)
                .expect("frontier members are seeds")
        })
        .collect();
    let seed_points: Vec<ObjectiveVector> = seeds.iter().map(SeedSolution::objectives).collect();
    let mut worst = [f64::NEG_INFINITY; 3];
    for p in seed_points.iter().chain(&points) {
        for (w, v) in worst.iter_mut().zip(p.as_array()) {
            *w = w.max(v);
        }
    }
    let hv_reference = ObjectiveVector::from_array(worst.map(|w| 1.1 * w));
    let frontier_points: Vec<ObjectiveVector> =
        frontier.iter().map(SeedSolution::objectives).collect();
    let survivors: Vec<usize> = evolution
        .population
        .iter()
        .filter_map(|i| match i.provenance {
            Provenance::Seed(s) => Some(s),
            Provenance::Mutant { .. } => None,
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut assignments = BTreeMap::new();
    for &i in &rank1 {
        let applied = design.apply_chromosome(&records[i].chromosome)?;
        assignments.insert(records[i].id, write_assignment(&applied));
    }

    let summary = Summary {
        required_time: scenario.required_time,
        clock_period: scenario.clock_period,
        output_load: scenario.output_load,
        population_size: moea.population_size,
        evaluations: evolution.evaluations,
        reference,
        best_d_wc: best[0],
        best_p_total: best[1],
        best_a_gate: best[2],
        trade_off,
        survivors,
        hv_reference,
        hv_frontier: hypervolume_dominating(&frontier_points, &hv_reference),
        hv_final: hypervolume_dominating(&front, &hv_reference),
        history_hv_reference: evolution.hv_reference,
    };
    Ok(ResultArchive {
        spec: spec.clone(),
        summary,
        seeds,
        frontier: frontier_index,
        history: evolution.history,
        population: records,
        assignments,
    })
}

fn record(
    design: &MappedDesign,
    scenario: &TimingScenario,
    ind: &Individual,
) -> Result<ArchiveRecord> {
    let evaluation: Evaluation = evaluate_full(design, &ind.chromosome, scenario)?;
    Ok(ArchiveRecord {
        id: ind.id,
        provenance: ind.provenance,
        rank: ind.rank,
        crowding: ind.crowding,
        evaluation,
        chromosome: ind.chromosome.clone(),
    })
}
