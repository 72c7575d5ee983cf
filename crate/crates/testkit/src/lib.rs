//! Slow, obviously-correct reference implementations used to check the fast
//! ones, plus fixture helpers and random netlist generation.
//!
//! Nothing here reuses the algorithms under test: connectivity is rebuilt from
//! net names, delays come from explicit path enumeration, probabilities from
//! truth-table sums, and fronts from repeated pairwise scans. Only the plain
//! data types (parsed netlists, library variants) are shared.

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use drivemap_core::library::{CellLibrary, CellVariant, GateFunction};
use drivemap_core::netlist::Netlist;
use rand::seq::SliceRandom;
use rand::Rng;

/// Path of a file in the repository's `benchmarks/` directory.
pub fn benchmark(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../benchmarks")
        .join(name)
}

pub fn read_benchmark(name: &str) -> String {
    std::fs::read_to_string(benchmark(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

/// Loading conditions the oracles need, in SI units.
#[derive(Debug, Clone, Copy)]
pub struct Conditions {
    pub required_time: f64,
    pub clock_period: f64,
    pub output_load: f64,
}

/// Objectives and breakdown computed the slow way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEvaluation {
    pub d_wc: f64,
    pub wns: f64,
    pub switching: f64,
    pub internal: f64,
    pub leakage: f64,
    pub p_total: f64,
    pub a_gate: f64,
}

impl OracleEvaluation {
    pub fn objectives(&self) -> [f64; 3] {
        [self.d_wc, self.p_total, self.a_gate]
    }
}

fn variant<'a>(
    library: &'a CellLibrary,
    netlist: &Netlist,
    genes: &[usize],
    g: usize,
) -> &'a CellVariant {
    let gate = &netlist.gates[g];
    &library
        .variants_of(gate.function, gate.inputs.len())
        .expect("cell in library")[genes[g]]
}

/// Capacitance on `net`, counting one reader per input pin.
fn load_of(
    netlist: &Netlist,
    library: &CellLibrary,
    genes: &[usize],
    c: &Conditions,
    net: &str,
) -> f64 {
    let mut load = 0.0;
    for (g, gate) in netlist.gates.iter().enumerate() {
        for pin in &gate.inputs {
            if pin == net {
                load += variant(library, netlist, genes, g).input_cap_per_pin
                    + library.wire_cap_per_fanout;
            }
        }
    }
    if netlist.primary_outputs.iter().any(|o| o == net) {
        load += c.output_load;
    }
    load
}

/// Longest-path arrival at `net` by enumerating every path into it.
pub fn path_enumeration_arrival(
    netlist: &Netlist,
    library: &CellLibrary,
    genes: &[usize],
    c: &Conditions,
    net: &str,
) -> f64 {
    let Some(g) = netlist.gates.iter().position(|gate| gate.output == net) else {
        return 0.0;
    };
    let v = variant(library, netlist, genes, g);
    let own = v.intrinsic_delay + v.drive_resistance * load_of(netlist, library, genes, c, net);
    let mut worst: f64 = 0.0;
    for pin in &netlist.gates[g].inputs {
        worst = worst.max(path_enumeration_arrival(netlist, library, genes, c, pin));
    }
    worst + own
}

/// Worst primary-output arrival by path enumeration.
pub fn path_enumeration_delay(
    netlist: &Netlist,
    library: &CellLibrary,
    genes: &[usize],
    c: &Conditions,
) -> f64 {
    netlist
        .primary_outputs
        .iter()
        .map(|o| path_enumeration_arrival(netlist, library, genes, c, o))
        .fold(0.0, f64::max)
}

/// Number of distinct input-to-output paths.
pub fn count_paths(netlist: &Netlist) -> usize {
    fn into(netlist: &Netlist, net: &str) -> usize {
        match netlist.gates.iter().find(|g| g.output == net) {
            None => 1,
            Some(g) => g.inputs.iter().map(|i| into(netlist, i)).sum(),
        }
    }
    netlist
        .primary_outputs
        .iter()
        .map(|o| into(netlist, o))
        .sum()
}

/// Probability that `net` is 1, with independent inputs at 0.5, by summing
/// each gate's truth table weighted by its input probabilities.
fn probability(netlist: &Netlist, net: &str, memo: &mut HashMap<String, f64>) -> f64 {
    if let Some(&p) = memo.get(net) {
        return p;
    }
    let p = match netlist.gates.iter().find(|g| g.output == net) {
        None => 0.5,
        Some(gate) => {
            let ps: Vec<f64> = gate
                .inputs
                .iter()
                .map(|i| probability(netlist, i, memo))
                .collect();
            let n = ps.len();
            let mut sum = 0.0;
            for row in 0..1u32 << n {
                let bits: Vec<bool> = (0..n).map(|k| row >> k & 1 == 1).collect();
                if truth(gate.function, &bits) {
                    sum += bits
                        .iter()
                        .zip(&ps)
                        .map(|(&b, &p)| if b { p } else { 1.0 - p })
                        .product::<f64>();
                }
            }
            sum
        }
    };
    memo.insert(net.to_owned(), p);
    p
}

/// Truth tables written out independently of the library's `eval`.
pub fn truth(function: GateFunction, bits: &[bool]) -> bool {
    let ones = bits.iter().filter(|&&b| b).count();
    match function {
        GateFunction::Not => !bits[0],
        GateFunction::Buf => bits[0],
        GateFunction::And => ones == bits.len(),
        GateFunction::Nand => ones != bits.len(),
        GateFunction::Or => ones > 0,
        GateFunction::Nor => ones == 0,
        GateFunction::Xor => ones % 2 == 1,
        GateFunction::Xnor => ones % 2 == 0,
    }
}

/// Full evaluation by name lookups, path enumeration and truth-table sums.
pub fn brute_force_evaluate(
    netlist: &Netlist,
    library: &CellLibrary,
    genes: &[usize],
    c: &Conditions,
) -> OracleEvaluation {
    let d_wc = path_enumeration_delay(netlist, library, genes, c);
    let f = 1.0 / c.clock_period;
    let v2 = library.voltage * library.voltage;
    let mut memo = HashMap::new();
    let mut nets: Vec<&str> = netlist.primary_inputs.iter().map(String::as_str).collect();
    nets.extend(netlist.gates.iter().map(|g| g.output.as_str()));
    let toggle = |p: f64| 2.0 * p * (1.0 - p);
    let mut switching = 0.0;
    for net in &nets {
        let a = toggle(probability(netlist, net, &mut memo));
        switching += 0.5 * load_of(netlist, library, genes, c, net) * v2 * f * a;
    }
    let mut internal = 0.0;
    let mut leakage = 0.0;
    let mut a_gate = 0.0;
    for (g, gate) in netlist.gates.iter().enumerate() {
        let v = variant(library, netlist, genes, g);
        internal += v.internal_energy * f * toggle(probability(netlist, &gate.output, &mut memo));
        leakage += v.leakage_power;
        a_gate += v.area;
    }
    OracleEvaluation {
        d_wc,
        wns: c.required_time - d_wc,
        switching,
        internal,
        leakage,
        p_total: switching + internal + leakage,
        a_gate,
    }
}

/// Every chromosome of a space with `counts[i]` variants for gene `i`.
pub fn all_chromosomes(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in counts {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..n).map(move |v| {
                    let mut c = prefix.clone();
                    c.push(v);
                    c
                })
            })
            .collect();
    }
    out
}

pub fn dominates(a: &[f64; 3], b: &[f64; 3]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Fronts by peeling: each round keeps the not-yet-assigned points that no
/// other unassigned point dominates. Indices within a front ascend.
pub fn pairwise_fronts(points: &[[f64; 3]]) -> Vec<Vec<usize>> {
    let mut left: BTreeSet<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| dominates(&points[j], &points[i])))
            .collect();
        for i in &front {
            left.remove(i);
        }
        fronts.push(front);
    }
    fronts
}

/// Distinct non-dominated objective vectors, sorted.
pub fn pareto_set(points: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let mut set: Vec<[f64; 3]> = points
        .iter()
        .filter(|p| !points.iter().any(|q| dominates(q, p)))
        .copied()
        .collect();
    set.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    set.dedup();
    set
}

/// Crowding distance written from the textbook definition, one objective at a time.
#[allow(clippy::needless_range_loop)]
pub fn crowding_oracle(front: &[[f64; 3]]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut d = vec![0.0; n];
    for k in 0..3 {
        let mut idx: Vec<usize> = (0..n).collect();
        // Stable insertion sort so ties keep input order.
        for i in 1..n {
            let mut j = i;
            while j > 0 && front[idx[j - 1]][k] > front[idx[j]][k] {
                idx.swap(j - 1, j);
                j -= 1;
            }
        }
        let lo = front[idx[0]][k];
        let hi = front[idx[n - 1]][k];
        if hi == lo {
            continue;
        }
        d[idx[0]] = f64::INFINITY;
        d[idx[n - 1]] = f64::INFINITY;
        for w in 1..n - 1 {
            d[idx[w]] += (front[idx[w + 1]][k] - front[idx[w - 1]][k]) / (hi - lo);
        }
    }
    d
}

/// Monte-Carlo hypervolume estimate and its standard error.
pub fn monte_carlo_hypervolume<R: Rng>(
    points: &[[f64; 3]],
    reference: &[f64; 3],
    samples: usize,
    rng: &mut R,
) -> (f64, f64) {
    if points.is_empty() {
        return (0.0, 0.0);
    }
    let mut lo = *reference;
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
        }
    }
    let box_volume: f64 = (0..3).map(|k| reference[k] - lo[k]).product();
    let mut hits = 0usize;
    for _ in 0..samples {
        let s: [f64; 3] = std::array::from_fn(|k| rng.gen_range(lo[k]..reference[k]));
        if points.iter().any(|p| (0..3).all(|k| p[k] <= s[k])) {
            hits += 1;
        }
    }
    let f = hits as f64 / samples as f64;
    (
        box_volume * f,
        box_volume * (f * (1.0 - f) / samples as f64).sqrt(),
    )
}

/// A random acyclic netlist in bench text, gate lines shuffled.
///
/// Gates read from primary inputs and earlier gates; every gate without a
/// reader becomes a primary output.
pub fn random_dag<R: Rng>(rng: &mut R, inputs: usize, gates: usize) -> String {
    const MULTI: [&str; 6] = ["AND", "NAND", "OR", "NOR", "XOR", "XNOR"];
    let mut nets: Vec<String> = (0..inputs).map(|i| format!("i{i}")).collect();
    let mut read = vec![false; inputs + gates];
    let mut lines = Vec::with_capacity(gates);
    for g in 0..gates {
        let unary = rng.gen_bool(0.25);
        let arity = if unary {
            1
        } else {
            rng.gen_range(2..=3.min(nets.len()).max(2))
        };
        let mut chosen: Vec<usize> = Vec::with_capacity(arity);
        for _ in 0..arity {
            chosen.push(rng.gen_range(0..nets.len()));
        }
        for &c in &chosen {
            read[c] = true;
        }
        let function = if unary {
            if rng.gen_bool(0.5) {
                "NOT"
            } else {
                "BUFF"
            }
        } else {
            MULTI[rng.gen_range(0..MULTI.len())]
        };
        let args: Vec<&str> = chosen.iter().map(|&c| nets[c].as_str()).collect();
        let out = format!("g{g}");
        lines.push(format!("{out} = {function}({})", args.join(", ")));
        nets.push(out);
    }
    lines.shuffle(rng);
    let mut text = String::new();
    for i in 0..inputs {
        text.push_str(&format!("INPUT(i{i})\n"));
    }
    let mut any_output = false;
    for g in 0..gates {
        if !read[inputs + g] || rng.gen_bool(0.1) {
            text.push_str(&format!("OUTPUT(g{g})\n"));
            any_output = true;
        }
    }
    if !any_output {
        text.push_str(&format!("OUTPUT({})\n", nets[nets.len() - 1]));
    }
    for l in lines {
        text.push_str(&l);
        text.push('\n');
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peeling_orders_a_chain() {
        let pts = [[2.0, 2.0, 2.0], [1.0, 1.0, 1.0], [3.0, 0.0, 3.0]];
        assert_eq!(pairwise_fronts(&pts), vec![vec![1, 2], vec![0]]);
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(all_chromosomes(&[2, 3]).len(), 6);
        assert_eq!(all_chromosomes(&[]).len(), 1);
    }

    #[test]
    fn truth_tables() {
        assert!(truth(GateFunction::Xor, &[true, false, false]));
        assert!(!truth(GateFunction::Nand, &[true, true]));
    }
}
