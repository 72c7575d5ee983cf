//! Gate-level combinational netlists.

mod bench;
mod design;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::library::GateFunction;

pub use bench::{parse_bench, write_bench};
pub use design::{
    map_to_library, read_assignment, write_assignment, Chromosome, Circuit, Driver, MappedDesign,
    Net,
};

/// One gate instance. `.bench` files carry no instance names, so the output
/// net name doubles as the instance name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub name: String,
    pub function: GateFunction,
    pub inputs: Vec<String>,
    pub output: String,
    /// Source line, when parsed from a file.
    pub line: Option<usize>,
}

impl Gate {
    pub fn arity(&self) -> usize {
        self.inputs.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Netlist {
    pub primary_inputs: Vec<String>,
    pub primary_outputs: Vec<String>,
    pub gates: Vec<Gate>,
}

/// A structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    /// A gate reads a net nothing drives.
    UndrivenNet {
        gate: String,
        net: String,
        line: Option<usize>,
    },
    /// A declared output has no driver.
    UndrivenOutput { net: String },
    /// A net has more than one driver.
    RedefinedNet { net: String, line: Option<usize> },
    /// Input count not supported for the function.
    BadArity {
        gate: String,
        function: GateFunction,
        arity: usize,
        line: Option<usize>,
    },
    /// Gates lying on (or between) combinational cycles.
    Cycle { gates: Vec<String> },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = |line: &Option<usize>| line.map(|l| format!("line {l}: ")).unwrap_or_default();
        match self {
            Diagnostic::UndrivenNet { gate, net, line } => {
                write!(f, "{}gate {gate} reads undriven net {net}", at(line))
            }
            Diagnostic::UndrivenOutput { net } => write!(f, "output {net} is undriven"),
            Diagnostic::RedefinedNet { net, line } => {
                write!(f, "{}net {net} is redefined", at(line))
            }
            Diagnostic::BadArity {
                gate,
                function,
                arity,
                line,
            } => write!(
                f,
                "{}gate {gate}: {function} cannot take {arity} inputs",
                at(line)
            ),
            Diagnostic::Cycle { gates } => {
                write!(f, "combinational cycle through {}", gates.join(", "))
            }
        }
    }
}

impl Netlist {
    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Maps each driven net to its driving gate.
    fn gate_drivers(&self) -> HashMap<&str, usize> {
        let mut drivers = HashMap::with_capacity(self.gates.len());
        for (i, g) in self.gates.iter().enumerate() {
            drivers.entry(g.output.as_str()).or_insert(i);
        }
        drivers
    }

    /// Gate-to-gate fanout lists (one entry per driven pin).
    fn gate_fanout(&self) -> (Vec<Vec<usize>>, Vec<usize>) {
        let drivers = self.gate_drivers();
        let mut fanout = vec![Vec::new(); self.gates.len()];
        let mut indegree = vec![0usize; self.gates.len()];
        for (reader, g) in self.gates.iter().enumerate() {
            for input in &g.inputs {
                if let Some(&driver) = drivers.get(input.as_str()) {
                    fanout[driver].push(reader);
                    indegree[reader] += 1;
                }
            }
        }
        (fanout, indegree)
    }
}

/// Checks every structural invariant; an empty result means the netlist is a
/// well-formed combinational DAG.
pub fn validate(netlist: &Netlist) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut driven: HashMap<&str, ()> = HashMap::new();
    for pi in &netlist.primary_inputs {
        if driven.insert(pi.as_str(), ()).is_some() {
            diags.push(Diagnostic::RedefinedNet {
                net: pi.clone(),
                line: None,
            });
        }
    }
    for g in &netlist.gates {
        if driven.insert(g.output.as_str(), ()).is_some() {
            diags.push(Diagnostic::RedefinedNet {
                net: g.output.clone(),
                line: g.line,
            });
        }
        if !g.function.arity_supported(g.arity()) {
            diags.push(Diagnostic::BadArity {
                gate: g.name.clone(),
                function: g.function,
                arity: g.arity(),
                line: g.line,
            });
        }
    }
    for g in &netlist.gates {
        for input in &g.inputs {
            if !driven.contains_key(input.as_str()) {
                diags.push(Diagnostic::UndrivenNet {
                    gate: g.name.clone(),
                    net: input.clone(),
                    line: g.line,
                });
            }
        }
    }
    for po in &netlist.primary_outputs {
        if !driven.contains_key(po.as_str()) {
            diags.push(Diagnostic::UndrivenOutput { net: po.clone() });
        }
    }
    if let Err(Error::Cycle { gates }) = topological_order(netlist) {
        diags.push(Diagnostic::Cycle { gates });
    }
    diags
}

/// Kahn's algorithm; among ready gates the one earliest in the netlist goes
/// first, so the order is deterministic.
pub fn topological_order(netlist: &Netlist) -> Result<Vec<usize>> {
    let n = netlist.gates.len();
    let (fanout, mut indegree) = netlist.gate_fanout();
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&g| indegree[g] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(g)) = ready.pop() {
        order.push(g);
        for &r in &fanout[g] {
            indegree[r] -= 1;
            if indegree[r] == 0 {
                ready.push(Reverse(r));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }

    // Gates left over sit on a cycle or downstream of one. Peel off the ones
    // with no remaining successors until only cycle members (and gates
    // strung between cycles) are left.
    let mut alive = vec![true; n];
    for &g in &order {
        alive[g] = false;
    }
    loop {
        let mut removed = false;
        for g in 0..n {
            if alive[g] && !fanout[g].iter().any(|&r| alive[r]) {
                alive[g] = false;
                removed = true;
            }
        }
        if !removed {
            break;
        }
    }
    let gates = (0..n)
        .filter(|&g| alive[g])
        .map(|g| netlist.gates[g].name.clone())
        .collect();
    Err(Error::Cycle { gates })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gate(out: &str, f: GateFunction, ins: &[&str]) -> Gate {
        Gate {
            name: out.to_owned(),
            function: f,
            inputs: ins.iter().map(|s| s.to_string()).collect(),
            output: out.to_owned(),
            line: None,
        }
    }

    fn netlist(pis: &[&str], pos: &[&str], gates: Vec<Gate>) -> Netlist {
        Netlist {
            primary_inputs: pis.iter().map(|s| s.to_string()).collect(),
            primary_outputs: pos.iter().map(|s| s.to_string()).collect(),
            gates,
        }
    }

    #[test]
    fn chain_order() {
        let n = netlist(
            &["a"],
            &["d"],
            vec![
                gate("b", GateFunction::Not, &["a"]),
                gate("c", GateFunction::Not, &["b"]),
                gate("d", GateFunction::Not, &["c"]),
            ],
        );
        assert_eq!(topological_order(&n).unwrap(), vec![0, 1, 2]);
        assert!(validate(&n).is_empty());
    }

    #[test]
    fn reversed_file_order_still_sorts() {
        let n = netlist(
            &["a"],
            &["d"],
            vec![
                gate("d", GateFunction::Not, &["c"]),
                gate("c", GateFunction::Not, &["b"]),
                gate("b", GateFunction::Not, &["a"]),
            ],
        );
        assert_eq!(topological_order(&n).unwrap(), vec![2, 1, 0]);
    }

    #[test]
    fn diamond() {
        let n = netlist(
            &["a"],
            &["e"],
            vec![
                gate("e", GateFunction::Nand, &["c", "d"]),
                gate("b", GateFunction::Not, &["a"]),
                gate("c", GateFunction::Not, &["b"]),
                gate("d", GateFunction::Buf, &["b"]),
            ],
        );
        let order = topological_order(&n).unwrap();
        let pos = |g: usize| order.iter().position(|&x| x == g).unwrap();
        assert!(pos(2) < pos(0) && pos(3) < pos(0));
        assert!(pos(1) < pos(2) && pos(1) < pos(3));
        assert_eq!(order, vec![1, 2, 3, 0]);
    }

    #[test]
    fn two_inverter_loop() {
        let n = netlist(
            &[],
            &["a"],
            vec![
                gate("a", GateFunction::Not, &["b"]),
                gate("b", GateFunction::Not, &["a"]),
            ],
        );
        let diags = validate(&n);
        assert_eq!(
            diags,
            vec![Diagnostic::Cycle {
                gates: vec!["a".into(), "b".into()]
            }]
        );
    }

    #[test]
    fn cycle_excludes_downstream_gates() {
        let n = netlist(
            &["x"],
            &["z"],
            vec![
                gate("a", GateFunction::Nand, &["x", "b"]),
                gate("b", GateFunction::Not, &["a"]),
                gate("z", GateFunction::Not, &["b"]),
            ],
        );
        match topological_order(&n) {
            Err(Error::Cycle { gates }) => assert_eq!(gates, vec!["a".to_owned(), "b".to_owned()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undriven_and_redefined() {
        let n = netlist(
            &["a", "a"],
            &["q", "y"],
            vec![
                gate("y", GateFunction::And, &["a", "ghost"]),
                gate("y", GateFunction::Not, &["a"]),
                gate("w", GateFunction::Not, &["a", "a"]),
            ],
        );
        let diags = validate(&n);
        assert!(diags.contains(&Diagnostic::RedefinedNet {
            net: "a".into(),
            line: None
        }));
        assert!(diags.contains(&Diagnostic::RedefinedNet {
            net: "y".into(),
            line: None
        }));
        assert!(diags.contains(&Diagnostic::UndrivenNet {
            gate: "y".into(),
            net: "ghost".into(),
            line: None
        }));
        assert!(diags.contains(&Diagnostic::UndrivenOutput { net: "q".into() }));
        assert!(diags
            .iter()
            .any(|d| matches!(d, Diagnostic::BadArity { arity: 2, .. })));
    }
}
