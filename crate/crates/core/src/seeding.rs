//! Seed generation: a greedy timing-driven sizer with a power-recovery pass,
//! swept over a range of required times.
//!
//! This is a stand-in for a synthesis tool. Seeds differ only in sizing; the
//! topology of the netlist is fixed.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{
    evaluate_full, propagate_probabilities, Evaluation, IncrementalTiming, ObjectiveVector,
    TimingScenario,
};
use crate::library::{CellLibrary, GateFunction};
use crate::moea::fast_non_dominated_sort;
use crate::netlist::{Chromosome, MappedDesign};

/// Capacitance placed on every primary output.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LoadScenario {
    #[default]
    None,
    /// Input pin capacitance of the library's `NOT` D1.
    D1,
    /// Input pin capacitance of the library's `NOT` D8.
    D8,
    /// Farads.
    Explicit(f64),
}

impl LoadScenario {
    /// The load in farads under `library`.
    pub fn capacitance(&self, library: &CellLibrary) -> Result<f64> {
        let inverter = |label: &str| {
            library
                .variant(GateFunction::Not, 1, label)
                .map(|v| v.input_cap_per_pin)
                .map_err(|_| {
                    Error::InvalidConstraint(format!(
                        "load scenario {self} needs a NOT1 {label} cell in the library"
                    ))
                })
        };
        match *self {
            LoadScenario::None => Ok(0.0),
            LoadScenario::D1 => inverter("D1"),
            LoadScenario::D8 => inverter("D8"),
            LoadScenario::Explicit(c) if c.is_finite() && c >= 0.0 => Ok(c),
            LoadScenario::Explicit(c) => Err(Error::InvalidConstraint(format!(
                "output load must be >= 0, got {c:e} F"
            ))),
        }
    }
}

impl fmt::Display for LoadScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadScenario::None => f.write_str("none"),
            LoadScenario::D1 => f.write_str("d1"),
            LoadScenario::D8 => f.write_str("d8"),
            LoadScenario::Explicit(c) => write!(f, "{c:e}F"),
        }
    }
}

impl FromStr for LoadScenario {
    type Err = String;

    /// `none`, `d1`, `d8`, a capacitance in femtofarads (`2.5` or `2.5fF`),
    /// or in farads (`2.5e-15F`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(LoadScenario::None),
            "d1" => Ok(LoadScenario::D1),
            "d8" => Ok(LoadScenario::D8),
            other => {
                let (number, scale) = match other.strip_suffix("ff") {
                    Some(n) => (n, 1e15),
                    None => match other.strip_suffix('f') {
                        Some(n) => (n, 1.0),
                        None => (other, 1e15),
                    },
                };
                match number.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() && v >= 0.0 => Ok(LoadScenario::Explicit(v / scale)),
                    _ => Err(format!(
                        "expected none, d1, d8 or a capacitance in fF, got `{s}`"
                    )),
                }
            }
        }
    }
}

impl TryFrom<String> for LoadScenario {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<LoadScenario> for String {
    fn from(l: LoadScenario) -> String {
        l.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Loosest required time, seconds.
    pub tr_max: f64,
    /// Tightest required time, seconds.
    pub tr_min: f64,
    pub steps: usize,
    #[serde(default)]
    pub load: LoadScenario,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tr_min.is_finite() && self.tr_min > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tr_min must be positive, got {:e} s",
                self.tr_min
            )));
        }
        if !(self.tr_max.is_finite() && self.tr_max > self.tr_min) {
            return Err(Error::InvalidConfig(format!(
                "tr_max ({:e} s) must exceed tr_min ({:e} s)",
                self.tr_max, self.tr_min
            )));
        }
        if self.steps < 2 {
            return Err(Error::InvalidConfig(format!(
                "a sweep needs at least 2 steps, got {}",
                self.steps
            )));
        }
        Ok(())
    }

    /// Evenly spaced required times, loosest first.
    pub fn required_times(&self) -> Vec<f64> {
        let span = self.tr_max - self.tr_min;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| match i {
                0 => self.tr_max,
                i if i == self.steps - 1 => self.tr_min,
                i => self.tr_max - span * (i as f64 / last),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSolution {
    pub required_time: f64,
    pub chromosome: Chromosome,
    pub evaluation: Evaluation,
    pub timing_met: bool,
}

impl SeedSolution {
    pub fn objectives(&self) -> ObjectiveVector {
        self.evaluation.objectives()
    }

    fn evaluate(
        design: &MappedDesign,
        chromosome: Chromosome,
        scenario: &TimingScenario,
    ) -> Result<Self> {
        let evaluation = evaluate_full(design, &chromosome, scenario)?;
        Ok(SeedSolution {
            required_time: scenario.required_time,
            timing_met: evaluation.timing_met,
            chromosome,
            evaluation,
        })
    }
}

/// Upsizes gates on the critical path until `scenario.required_time` is met.
///
/// Each step applies the single one-strength up-step, among critical-path
/// gates, with the best WNS gain per unit of added area (ties to the lowest
/// gate index). Stops when WNS >= 0 or no up-step improves WNS.
pub fn greedy_timing_sizer(
    design: &MappedDesign,
    scenario: &TimingScenario,
) -> Result<SeedSolution> {
    let mut timing = IncrementalTiming::new(design.clone(), *scenario);
    while timing.wns() < 0.0 {
        let wns = timing.wns();
        let mut path = timing.critical_path();
        path.sort_unstable();
        let mut best: Option<(usize, f64)> = None;
        for g in path {
            let from = timing.design().assignment()[g];
            if from + 1 >= timing.design().variants(g).len() {
                continue;
            }
            let extra_area = timing.design().variant_at(g, from + 1).area
                - timing.design().variant_at(g, from).area;
            timing.resize(g, from + 1);
            let gain = timing.wns() - wns;
            timing.resize(g, from);
            if gain > 0.0 {
                let score = if extra_area > 0.0 {
                    gain / extra_area
                } else {
                    f64::INFINITY
                };
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((g, score));
                }
            }
        }
        match best {
            Some((g, _)) => {
                let from = timing.design().assignment()[g];
                timing.resize(g, from + 1);
            }
            None => break,
        }
    }
    SeedSolution::evaluate(design, timing.design().extract_chromosome(), scenario)
}

/// Power change from moving `gate` from its current variant to `to`.
fn resize_power_delta(
    design: &MappedDesign,
    scenario: &TimingScenario,
    gate: usize,
    to: usize,
) -> f64 {
    let activity = propagate_probabilities(design);
    let circuit = design.circuit();
    let (a, b) = (design.variant(gate), design.variant_at(gate, to));
    let v2 = design.library().voltage * design.library().voltage;
    let f = scenario.frequency();
    let pins: f64 = circuit
        .gate_inputs(gate)
        .iter()
        .map(|&n| {
            0.5 * v2 * f * activity[n].toggle_rate * (b.input_cap_per_pin - a.input_cap_per_pin)
        })
        .sum();
    let internal = (b.internal_energy - a.internal_energy)
        * f
        * activity[circuit.gate_output(gate)].toggle_rate;
    pins + internal + (b.leakage_power - a.leakage_power)
}

/// Downsizes gates while timing stays met, taking the largest power saving
/// first. The input must meet `scenario.required_time`.
pub fn power_recovery(
    design: &MappedDesign,
    chromosome: &Chromosome,
    scenario: &TimingScenario,
) -> Result<Chromosome> {
    let mut timing = IncrementalTiming::new(design.apply_chromosome(chromosome)?, *scenario);
    if timing.wns() < 0.0 {
        return Err(Error::TimingNotMet { wns: timing.wns() });
    }
    loop {
        let current = timing.design();
        let mut moves: Vec<(usize, f64)> = (0..current.gate_count())
            .filter(|&g| current.assignment()[g] > 0)
            .map(|g| {
                (
                    g,
                    -resize_power_delta(current, scenario, g, current.assignment()[g] - 1),
                )
            })
            .filter(|&(_, saving)| saving > 0.0)
            .collect();
        moves.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut applied = false;
        for (g, _) in moves {
            let from = timing.design().assignment()[g];
            timing.resize(g, from - 1);
            if timing.wns() >= 0.0 {
                applied = true;
                break;
            }
            timing.resize(g, from);
        }
        if !applied {
            return Ok(timing.design().extract_chromosome());
        }
    }
}

/// One seed per required time in `sweep`, loosest first. Timing-failing seeds
/// are kept with `timing_met == false`. The clock period stays fixed.
pub fn constraint_sweep(
    design: &MappedDesign,
    sweep: &SweepConfig,
    clock_period: f64,
) -> Result<Vec<SeedSolution>> {
    sweep.validate()?;
    let load = sweep.load.capacitance(design.library())?;
    let scenarios = sweep
        .required_times()
        .into_iter()
        .map(|tr| TimingScenario::with_required_time(tr, clock_period, load))
        .collect::<Result<Vec<_>>>()?;
    scenarios.par_iter().map(|s| seed_at(design, s)).collect()
}

/// Sizer followed by power recovery (when timing is met) at one scenario.
pub fn seed_at(design: &MappedDesign, scenario: &TimingScenario) -> Result<SeedSolution> {
    let sized = greedy_timing_sizer(design, scenario)?;
    if !sized.timing_met {
        return Ok(sized);
    }
    let recovered = power_recovery(design, &sized.chromosome, scenario)?;
    SeedSolution::evaluate(design, recovered, scenario)
}

/// Rank-1 seeds with duplicate objective triples collapsed to their first
/// occurrence, ordered by ascending delay.
pub fn syn_frontier(seeds: &[SeedSolution]) -> Vec<SeedSolution> {
    let points: Vec<ObjectiveVector> = seeds.iter().map(SeedSolution::objectives).collect();
    let Some(first) = fast_non_dominated_sort(&points).into_iter().next() else {
        return Vec::new();
    };
    let mut kept: Vec<usize> = Vec::new();
    for i in first {
        if !kept.iter().any(|&k| points[k] == points[i]) {
            kept.push(i);
        }
    }
    kept.sort_by(|&a, &b| points[a].d_wc.total_cmp(&points[b].d_wc).then(a.cmp(&b)));
    kept.into_iter().map(|i| seeds[i].clone()).collect()
}

pub const SEED_HEADER: [&str; 11] = [
    "index",
    "required_time",
    "timing_met",
    "d_wc",
    "wns",
    "switching",
    "internal",
    "leakage",
    "p_total",
    "a_gate",
    "chromosome",
];

/// Seed table: required time, timing flag, evaluation and chromosome text.
pub fn seeds_csv<'a>(seeds: impl IntoIterator<Item = (usize, &'a SeedSolution)>) -> String {
    use crate::eval::fmt_f64;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SEED_HEADER).expect("in-memory write");
    for (i, s) in seeds {
        let e = &s.evaluation;
        w.write_record([
            i.to_string(),
            fmt_f64(s.required_time),
            s.timing_met.to_string(),
            fmt_f64(e.d_wc),
            fmt_f64(e.wns),
            fmt_f64(e.switching),
            fmt_f64(e.internal),
            fmt_f64(e.leakage),
            fmt_f64(e.p_total),
            fmt_f64(e.a_gate),
            s.chromosome.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Parses [`seeds_csv`] output back into `(index, seed)` pairs.
pub fn read_seeds_csv(text: &str) -> Result<Vec<(usize, SeedSolution)>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| csv_error(1, e))?.clone();
    if header.iter().ne(SEED_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", SEED_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (k, record) in r.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| csv_error(line, e))?;
        let num = |i: usize| -> Result<f64> {
            record[i].parse().map_err(|_| Error::Parse {
                line,
                message: format!(
                    "column {} is not a number: `{}`",
                    SEED_HEADER[i], &record[i]
                ),
            })
        };
        let flag = |i: usize| -> Result<bool> {
            record[i].parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {} is not true/false", SEED_HEADER[i]),
            })
        };
        let index = record[0].parse().map_err(|_| Error::Parse {
            line,
            message: "bad index".to_owned(),
        })?;
        let chromosome: Chromosome = record[10].parse().map_err(|e| Error::Parse {
            line,
            message: format!("bad chromosome: {e}"),
        })?;
        let timing_met = flag(2)?;
        let evaluation = Evaluation {
            d_wc: num(3)?,
            wns: num(4)?,
            timing_met,
            switching: num(5)?,
            internal: num(6)?,
            leakage: num(7)?,
            p_total: num(8)?,
            a_gate: num(9)?,
        };
        out.push((
            index,
            SeedSolution {
                required_time: num(1)?,
                chromosome,
                evaluation,
                timing_met,
            },
        ));
    }
    Ok(out)
}

fn csv_error(line: usize, e: csv::Error) -> Error {
    let line = e.position().map_or(line, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}
