//! Fitness evaluation: worst-case delay, total power and gate area.

mod power;
mod timing;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::netlist::{Chromosome, MappedDesign};

pub use power::{
    output_probability, propagate_probabilities, total_area, total_power, PowerReport,
    SignalActivity,
};
pub use timing::{
    compute_arrival_times, gate_delay, net_load, required_time, worst_case_delay,
    IncrementalTiming, TimingReport, TimingScenario, DEFAULT_CLOCK_PERIOD,
};

/// The minimised triple `(D_wc, P_total, A_gate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    /// Worst-case delay, seconds.
    pub d_wc: f64,
    /// Total power, watts.
    pub p_total: f64,
    /// Gate area, square micrometres.
    pub a_gate: f64,
}

impl ObjectiveVector {
    pub const LEN: usize = 3;

    pub fn new(d_wc: f64, p_total: f64, a_gate: f64) -> Self {
        ObjectiveVector {
            d_wc,
            p_total,
            a_gate,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.d_wc, self.p_total, self.a_gate]
    }

    pub fn from_array([d_wc, p_total, a_gate]: [f64; 3]) -> Self {
        ObjectiveVector {
            d_wc,
            p_total,
            a_gate,
        }
    }

    pub fn get(&self, k: usize) -> f64 {
        self.as_array()[k]
    }
}

/// Everything the evaluator reports for one design; one CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub d_wc: f64,
    pub wns: f64,
    pub timing_met: bool,
    pub switching: f64,
    pub internal: f64,
    pub leakage: f64,
    pub p_total: f64,
    pub a_gate: f64,
}

impl Evaluation {
    pub fn objectives(&self) -> ObjectiveVector {
        ObjectiveVector::new(self.d_wc, self.p_total, self.a_gate)
    }
}

/// Evaluates the design's current assignment.
pub fn evaluate_design(design: &MappedDesign, scenario: &TimingScenario) -> Evaluation {
    let loads = timing::all_net_loads(design, scenario);
    let t = timing::timing_report(design, scenario, &loads);
    let p = power::power_report(design, scenario, &loads);
    let (d_wc, timing_met) = t.worst_case_delay();
    Evaluation {
        d_wc,
        wns: t.wns,
        timing_met,
        switching: p.switching,
        internal: p.internal,
        leakage: p.leakage,
        p_total: p.total,
        a_gate: total_area(design),
    }
}

/// Applies `chromosome` to `design` and reports the full evaluation.
pub fn evaluate_full(
    design: &MappedDesign,
    chromosome: &Chromosome,
    scenario: &TimingScenario,
) -> Result<Evaluation> {
    let applied = design.apply_chromosome(chromosome)?;
    Ok(evaluate_design(&applied, scenario))
}

/// Objective triple for `chromosome`. Pure: equal inputs give bitwise-equal output.
pub fn evaluate(
    design: &MappedDesign,
    chromosome: &Chromosome,
    scenario: &TimingScenario,
) -> Result<ObjectiveVector> {
    evaluate_full(design, chromosome, scenario).map(|e| e.objectives())
}

/// Anything that maps a chromosome to its objectives. Implementations must be
/// pure so evaluation order and caching cannot change results.
pub trait Evaluate: Sync {
    fn evaluate(&self, chromosome: &Chromosome) -> Result<ObjectiveVector>;
}

/// The circuit model under a fixed scenario.
#[derive(Debug, Clone)]
pub struct DesignEvaluator {
    pub design: MappedDesign,
    pub scenario: TimingScenario,
}

impl DesignEvaluator {
    pub fn new(design: MappedDesign, scenario: TimingScenario) -> Self {
        DesignEvaluator { design, scenario }
    }
}

impl Evaluate for DesignEvaluator {
    fn evaluate(&self, chromosome: &Chromosome) -> Result<ObjectiveVector> {
        evaluate(&self.design, chromosome, &self.scenario)
    }
}

/// CSV with header `id,d_wc,wns,timing_met,switching,internal,leakage,p_total,a_gate`.
pub fn evaluation_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a Evaluation)>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(EVALUATION_HEADER).expect("in-memory write");
    for (id, e) in rows {
        w.write_record([
            id.to_owned(),
            fmt_f64(e.d_wc),
            fmt_f64(e.wns),
            e.timing_met.to_string(),
            fmt_f64(e.switching),
            fmt_f64(e.internal),
            fmt_f64(e.leakage),
            fmt_f64(e.p_total),
            fmt_f64(e.a_gate),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub const EVALUATION_HEADER: [&str; 9] = [
    "id",
    "d_wc",
    "wns",
    "timing_met",
    "switching",
    "internal",
    "leakage",
    "p_total",
    "a_gate",
];

/// Shortest representation that parses back to the same value.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}
