//! Average power from static signal probabilities.
//!
//! Primary inputs have probability 1/2. Each gate output probability follows
//! from its truth function assuming independent inputs, and the toggle rate
//! per cycle is `2p(1-p)`. Reconvergent fanout makes the independence
//! assumption inexact; the estimate is shared by every candidate so relative
//! comparisons hold.

use serde::{Deserialize, Serialize};

use super::timing::{all_net_loads, TimingScenario};
use crate::library::GateFunction;
use crate::netlist::MappedDesign;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalActivity {
    /// Probability the net is high.
    pub probability: f64,
    /// Expected toggles per clock cycle.
    pub toggle_rate: f64,
}

impl SignalActivity {
    fn from_probability(p: f64) -> Self {
        SignalActivity {
            probability: p,
            toggle_rate: 2.0 * p * (1.0 - p),
        }
    }
}

/// Output probability of `function` given independent input probabilities.
pub fn output_probability(function: GateFunction, inputs: &[f64]) -> f64 {
    let all_high = || inputs.iter().product::<f64>();
    let all_low = || inputs.iter().map(|p| 1.0 - p).product::<f64>();
    let odd = || {
        inputs
            .iter()
            .fold(0.0, |q, &p| q * (1.0 - p) + p * (1.0 - q))
    };
    match function {
        GateFunction::Not => 1.0 - inputs[0],
        GateFunction::Buf => inputs[0],
        GateFunction::And => all_high(),
        GateFunction::Nand => 1.0 - all_high(),
        GateFunction::Or => 1.0 - all_low(),
        GateFunction::Nor => all_low(),
        GateFunction::Xor => odd(),
        GateFunction::Xnor => 1.0 - odd(),
    }
}

/// Probability and toggle rate of every net (indexed by net id).
///
/// Depends only on connectivity, so the result is cached on the circuit.
pub fn propagate_probabilities(design: &MappedDesign) -> &[SignalActivity] {
    let circuit = design.circuit();
    circuit.activity.get_or_init(|| {
        let mut prob = vec![0.5; circuit.nets().len()];
        let mut inputs = Vec::new();
        for &g in circuit.topo_order() {
            inputs.clear();
            inputs.extend(circuit.gate_inputs(g).iter().map(|&n| prob[n]));
            prob[circuit.gate_output(g)] = output_probability(design.cell(g).function, &inputs);
        }
        prob.into_iter()
            .map(SignalActivity::from_probability)
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    /// Charging net capacitance, watts.
    pub switching: f64,
    /// Cell-internal, watts.
    pub internal: f64,
    pub leakage: f64,
    pub total: f64,
}

pub(crate) fn power_report(
    design: &MappedDesign,
    scenario: &TimingScenario,
    loads: &[f64],
) -> PowerReport {
    let activity = propagate_probabilities(design);
    let v2 = design.library().voltage * design.library().voltage;
    let f = scenario.frequency();
    let switching: f64 = loads
        .iter()
        .zip(activity)
        .map(|(&c, a)| 0.5 * c * v2 * f * a.toggle_rate)
        .sum();
    let circuit = design.circuit();
    let mut internal = 0.0;
    let mut leakage = 0.0;
    for g in 0..design.gate_count() {
        let v = design.variant(g);
        internal += v.internal_energy * f * activity[circuit.gate_output(g)].toggle_rate;
        leakage += v.leakage_power;
    }
    PowerReport {
        switching,
        internal,
        leakage,
        total: switching + internal + leakage,
    }
}

pub fn total_power(design: &MappedDesign, scenario: &TimingScenario) -> PowerReport {
    let loads = all_net_loads(design, scenario);
    power_report(design, scenario, &loads)
}

/// Sum of assigned cell areas.
pub fn total_area(design: &MappedDesign) -> f64 {
    (0..design.gate_count())
        .map(|g| design.variant(g).area)
        .sum()
}
