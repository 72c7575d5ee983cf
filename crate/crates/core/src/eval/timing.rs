//! First-order static timing analysis.
//!
//! Each gate is a single averaged arc: `intrinsic_delay + drive_resistance *
//! load`, where the load is the sum of reader pin capacitances, a lumped wire
//! capacitance per reader, and the scenario's output load on primary outputs.
//! Primary inputs arrive at time zero.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::CellVariant;
use crate::netlist::{Driver, MappedDesign};

/// 250 MHz.
pub const DEFAULT_CLOCK_PERIOD: f64 = 4.0e-9;

/// `T_r = T_c - T_od`. Requires `0 <= T_od < T_c`.
pub fn required_time(clock_period: f64, output_delay: f64) -> Result<f64> {
    if !(clock_period.is_finite() && clock_period > 0.0) {
        return Err(Error::InvalidConstraint(format!(
            "clock period must be positive, got {clock_period:e} s"
        )));
    }
    if !(output_delay.is_finite() && output_delay >= 0.0 && output_delay < clock_period) {
        return Err(Error::InvalidConstraint(format!(
            "output delay {output_delay:e} s must lie in [0, {clock_period:e}) s"
        )));
    }
    Ok(clock_period - output_delay)
}

/// Clocking and loading conditions for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingScenario {
    /// `T_c`, seconds.
    pub clock_period: f64,
    /// `T_od`, seconds.
    pub output_delay: f64,
    /// `T_r`, seconds.
    pub required_time: f64,
    /// Farads on every primary output.
    pub output_load: f64,
}

impl Default for TimingScenario {
    fn default() -> Self {
        TimingScenario {
            clock_period: DEFAULT_CLOCK_PERIOD,
            output_delay: 0.0,
            required_time: DEFAULT_CLOCK_PERIOD,
            output_load: 0.0,
        }
    }
}

impl TimingScenario {
    pub fn new(clock_period: f64, output_delay: f64, output_load: f64) -> Result<Self> {
        let required_time = required_time(clock_period, output_delay)?;
        Self::check_load(output_load)?;
        Ok(TimingScenario {
            clock_period,
            output_delay,
            required_time,
            output_load,
        })
    }

    /// Scenario meeting `T_r` exactly under clock `T_c` (so `T_od = T_c - T_r`).
    pub fn with_required_time(required: f64, clock_period: f64, output_load: f64) -> Result<Self> {
        if !(required.is_finite() && required > 0.0 && required <= clock_period) {
            return Err(Error::InvalidConstraint(format!(
                "required time {required:e} s must lie in (0, {clock_period:e}] s"
            )));
        }
        let output_delay = clock_period - required;
        required_time(clock_period, output_delay)?;
        Self::check_load(output_load)?;
        Ok(TimingScenario {
            clock_period,
            output_delay,
            required_time: required,
            output_load,
        })
    }

    fn check_load(load: f64) -> Result<()> {
        if !(load.is_finite() && load >= 0.0) {
            return Err(Error::InvalidConstraint(format!(
                "output load must be >= 0, got {load:e} F"
            )));
        }
        Ok(())
    }

    /// Hz.
    pub fn frequency(&self) -> f64 {
        1.0 / self.clock_period
    }
}

/// Capacitance on `net`: reader pins, per-reader wire, plus the output load on
/// primary outputs.
pub fn net_load(design: &MappedDesign, net: usize, scenario: &TimingScenario) -> f64 {
    let n = design.circuit().net(net);
    let wire = design.library().wire_cap_per_fanout;
    let mut load = 0.0;
    for &reader in &n.readers {
        load += design.variant(reader).input_cap_per_pin + wire;
    }
    if n.is_output {
        load += scenario.output_load;
    }
    load
}

pub(crate) fn all_net_loads(design: &MappedDesign, scenario: &TimingScenario) -> Vec<f64> {
    (0..design.circuit().nets().len())
        .map(|n| net_load(design, n, scenario))
        .collect()
}

pub fn gate_delay(variant: &CellVariant, load: f64) -> f64 {
    variant.intrinsic_delay + variant.drive_resistance * load
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    /// Arrival time per net id.
    pub arrival: Vec<f64>,
    /// Latest primary-output arrival.
    pub worst_arrival: f64,
    /// `T_r - worst_arrival`.
    pub wns: f64,
    /// Gates on one worst path, source to sink.
    pub critical_path: Vec<usize>,
}

impl TimingReport {
    /// `(D_wc, timing_met)`.
    pub fn worst_case_delay(&self) -> (f64, bool) {
        (self.worst_arrival, self.wns >= 0.0)
    }
}

fn gate_arrival(design: &MappedDesign, gate: usize, loads: &[f64], arrival: &[f64]) -> f64 {
    let circuit = design.circuit();
    let start = circuit
        .gate_inputs(gate)
        .iter()
        .map(|&n| arrival[n])
        .fold(0.0, f64::max);
    start + gate_delay(design.variant(gate), loads[circuit.gate_output(gate)])
}

fn worst_output_arrival(design: &MappedDesign, arrival: &[f64]) -> f64 {
    design
        .circuit()
        .outputs()
        .iter()
        .map(|&n| arrival[n])
        .fold(0.0, f64::max)
}

/// Traces one worst path back from the latest output. Ties go to the driver
/// with the smallest gate index.
fn critical_path(design: &MappedDesign, arrival: &[f64], worst: f64) -> Vec<usize> {
    let circuit = design.circuit();
    let driver_gate = |net: usize| match circuit.net(net).driver {
        Driver::Gate(g) => Some(g),
        Driver::Input(_) => None,
    };
    let endpoint = circuit
        .outputs()
        .iter()
        .filter(|&&n| arrival[n] == worst)
        .filter_map(|&n| driver_gate(n))
        .min();
    let mut path = Vec::new();
    let mut current = endpoint;
    while let Some(g) = current {
        path.push(g);
        let inputs = circuit.gate_inputs(g);
        let latest = inputs
            .iter()
            .map(|&n| arrival[n])
            .fold(f64::NEG_INFINITY, f64::max);
        current = inputs
            .iter()
            .filter(|&&n| arrival[n] == latest)
            .filter_map(|&n| driver_gate(n))
            .min();
    }
    path.reverse();
    path
}

pub(crate) fn arrival_times(design: &MappedDesign, loads: &[f64]) -> Vec<f64> {
    let circuit = design.circuit();
    let mut arrival = vec![0.0; circuit.nets().len()];
    for &g in circuit.topo_order() {
        arrival[circuit.gate_output(g)] = gate_arrival(design, g, loads, &arrival);
    }
    arrival
}

pub(crate) fn timing_report(
    design: &MappedDesign,
    scenario: &TimingScenario,
    loads: &[f64],
) -> TimingReport {
    let arrival = arrival_times(design, loads);
    let worst_arrival = worst_output_arrival(design, &arrival);
    let critical_path = critical_path(design, &arrival, worst_arrival);
    TimingReport {
        wns: scenario.required_time - worst_arrival,
        worst_arrival,
        critical_path,
        arrival,
    }
}

/// Full forward propagation over the current assignment.
pub fn compute_arrival_times(design: &MappedDesign, scenario: &TimingScenario) -> TimingReport {
    let loads = all_net_loads(design, scenario);
    timing_report(design, scenario, &loads)
}

/// `(D_wc, timing_met)` where `D_wc = T_r - WNS`.
pub fn worst_case_delay(report: &TimingReport, scenario: &TimingScenario) -> (f64, bool) {
    let _ = scenario;
    report.worst_case_delay()
}

/// Timing state that follows single-gate resizes by re-propagating only the
/// affected cone. Results are bitwise identical to a full recomputation.
#[derive(Debug, Clone)]
pub struct IncrementalTiming {
    design: MappedDesign,
    scenario: TimingScenario,
    loads: Vec<f64>,
    arrival: Vec<f64>,
    topo_pos: Vec<usize>,
}

impl IncrementalTiming {
    pub fn new(design: MappedDesign, scenario: TimingScenario) -> Self {
        let loads = all_net_loads(&design, &scenario);
        let arrival = arrival_times(&design, &loads);
        let mut topo_pos = vec![0; design.gate_count()];
        for (pos, &g) in design.circuit().topo_order().iter().enumerate() {
            topo_pos[g] = pos;
        }
        IncrementalTiming {
            design,
            scenario,
            loads,
            arrival,
            topo_pos,
        }
    }

    pub fn design(&self) -> &MappedDesign {
        &self.design
    }

    pub fn scenario(&self) -> &TimingScenario {
        &self.scenario
    }

    pub fn loads(&self) -> &[f64] {
        &self.loads
    }

    pub fn worst_arrival(&self) -> f64 {
        worst_output_arrival(&self.design, &self.arrival)
    }

    pub fn wns(&self) -> f64 {
        self.scenario.required_time - self.worst_arrival()
    }

    pub fn critical_path(&self) -> Vec<usize> {
        critical_path(&self.design, &self.arrival, self.worst_arrival())
    }

    pub fn report(&self) -> TimingReport {
        let worst_arrival = self.worst_arrival();
        TimingReport {
            arrival: self.arrival.clone(),
            worst_arrival,
            wns: self.scenario.required_time - worst_arrival,
            critical_path: self.critical_path(),
        }
    }

    /// Switches `gate` to `variant` and updates loads and arrivals.
    pub fn resize(&mut self, gate: usize, variant: usize) {
        if self.design.assignment()[gate] == variant {
            return;
        }
        self.design.set_variant(gate, variant);
        let mut dirty = BinaryHeap::new();
        dirty.push(Reverse((self.topo_pos[gate], gate)));
        let inputs = self.design.circuit().gate_inputs(gate).to_vec();
        for net in inputs {
            self.loads[net] = net_load(&self.design, net, &self.scenario);
            if let Driver::Gate(d) = self.design.circuit().net(net).driver {
                dirty.push(Reverse((self.topo_pos[d], d)));
            }
        }
        let mut last = None;
        while let Some(Reverse((pos, g))) = dirty.pop() {
            if last == Some(pos) {
                continue;
            }
            last = Some(pos);
            let out = self.design.circuit().gate_output(g);
            let updated = gate_arrival(&self.design, g, &self.loads, &self.arrival);
            if updated.to_bits() != self.arrival[out].to_bits() {
                self.arrival[out] = updated;
                for &r in &self.design.circuit().net(out).readers {
                    dirty.push(Reverse((self.topo_pos[r], r)));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::library::{generate_synthetic_library, CellKey, GateFunction, ScalingProfile};
    use crate::netlist::{map_to_library, parse_bench, Chromosome};

    fn inverter(r: f64, c: f64, d0: f64) -> CellVariant {
        CellVariant {
            function: GateFunction::Not,
            arity: 1,
            strength_label: "D1".into(),
            strength: 1.0,
            input_cap_per_pin: 1e-15,
            drive_resistance: r,
            intrinsic_delay: d0,
            area: 1.0,
            leakage_power: 1e-9,
            internal_energy: c,
        }
    }

    fn design(bench: &str, profile: &ScalingProfile) -> MappedDesign {
        let n = parse_bench(bench).unwrap();
        let req: BTreeSet<_> = n
            .gates
            .iter()
            .map(|g| CellKey::new(g.function, g.arity()))
            .collect();
        map_to_library(n, generate_synthetic_library(profile, &req).unwrap()).unwrap()
    }

    #[test]
    fn delay_formula() {
        let v = inverter(1000.0, 1e-15, 1e-12);
        assert_eq!(gate_delay(&v, 0.0), 1e-12);
        assert!((gate_delay(&v, 1e-15) - 2e-12).abs() < 1e-24);
        assert!(gate_delay(&v, 2e-15) > gate_delay(&v, 1e-15));
    }

    #[test]
    fn stronger_variant_is_faster_at_fixed_load() {
        let lib = generate_synthetic_library(
            &ScalingProfile::default(),
            &BTreeSet::from([CellKey::new(GateFunction::Nand, 3)]),
        )
        .unwrap();
        let ladder = lib.variants_of(GateFunction::Nand, 3).unwrap();
        for load in [0.5e-15, 5e-15, 50e-15] {
            for w in ladder.windows(2) {
                assert!(gate_delay(&w[1], load) < gate_delay(&w[0], load));
            }
        }
    }

    #[test]
    fn required_time_bounds() {
        assert_eq!(required_time(4e-9, 0.0).unwrap(), 4e-9);
        assert!((required_time(4e-9, 2.5e-9).unwrap() - 1.5e-9).abs() < 1e-21);
        assert!(matches!(
            required_time(4e-9, 4e-9),
            Err(Error::InvalidConstraint(_))
        ));
        assert!(required_time(4e-9, -1e-12).is_err());
        assert!(TimingScenario::with_required_time(0.0, 4e-9, 0.0).is_err());
    }

    #[test]
    fn loads() {
        let profile = ScalingProfile::default();
        let d = design(
            "INPUT(a)\nOUTPUT(y)\nOUTPUT(z)\nb = NOT(a)\ny = NOT(b)\nz = NOT(b)\n",
            &profile,
        );
        let s = TimingScenario::with_required_time(1e-9, 4e-9, 3e-15).unwrap();
        let c = profile.base_input_cap * 0.5;
        let w = profile.wire_cap_per_fanout;
        assert_eq!(net_load(&d, 1, &s), c + w + c + w);
        assert_eq!(net_load(&d, 2, &s), 3e-15);
        let no_load = TimingScenario::default();
        assert_eq!(net_load(&d, 2, &no_load), 0.0);
    }

    #[test]
    fn single_inverter() {
        let profile = ScalingProfile::default();
        let d = design("INPUT(a)\nOUTPUT(b)\nb = NOT(a)\n", &profile);
        let s = TimingScenario::default();
        let r = compute_arrival_times(&d, &s);
        assert_eq!(r.worst_arrival, d.variant(0).intrinsic_delay);
        assert_eq!(r.critical_path, vec![0]);
        let loaded = TimingScenario::with_required_time(4e-9, 4e-9, 2e-15).unwrap();
        let r = compute_arrival_times(&d, &loaded);
        assert_eq!(r.worst_arrival, gate_delay(d.variant(0), 2e-15));
    }

    #[test]
    fn three_inverter_chain_without_wire() {
        let profile = ScalingProfile {
            wire_cap_per_fanout: 0.0,
            base_input_cap: 1e-300,
            ..ScalingProfile::default()
        };
        let d = design(
            "INPUT(a)\nOUTPUT(d)\nb = NOT(a)\nc = NOT(b)\nd = NOT(c)\n",
            &profile,
        );
        let r = compute_arrival_times(&d, &TimingScenario::default());
        let d0 = profile.base_intrinsic_delay;
        assert!((r.worst_arrival - 3.0 * d0).abs() <= 1e-12 * d0);
        assert_eq!(r.critical_path, vec![0, 1, 2]);
    }

    #[test]
    fn slack_identity() {
        let d = design(
            "INPUT(a)\nOUTPUT(b)\nb = NOT(a)\n",
            &ScalingProfile::default(),
        );
        let s = TimingScenario::with_required_time(1e-12, 4e-9, 0.0).unwrap();
        let r = compute_arrival_times(&d, &s);
        let (dwc, met) = worst_case_delay(&r, &s);
        assert!(!met);
        assert!(r.wns < 0.0);
        assert!((dwc + r.wns - s.required_time).abs() <= 4.0 * f64::EPSILON * dwc);
    }

    #[test]
    fn incremental_matches_full() {
        let bench = "INPUT(a)\nINPUT(b)\nOUTPUT(y)\nOUTPUT(z)\nc = NAND(a, b)\nd = NOT(c)\ne = NOR(c, b)\ny = XOR(d, e)\nz = BUFF(e)\n";
        let d = design(bench, &ScalingProfile::default());
        let s = TimingScenario::with_required_time(1e-9, 4e-9, 1e-15).unwrap();
        let mut inc = IncrementalTiming::new(d.clone(), s);
        let moves = [(0, 3), (2, 10), (4, 1), (1, 7), (0, 0), (3, 5)];
        for (g, v) in moves {
            inc.resize(g, v);
            let full = compute_arrival_times(inc.design(), &s);
            assert_eq!(inc.report(), full);
        }
        let mut genes = vec![0; 5];
        for (g, v) in moves {
            genes[g] = v;
        }
        assert_eq!(
            inc.design(),
            &d.apply_chromosome(&Chromosome::new(genes)).unwrap()
        );
    }
}
