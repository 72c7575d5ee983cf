use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::{topological_order, validate, Netlist};
use crate::error::{Error, Result};
use crate::eval::SignalActivity;
use crate::library::{CellFunction, CellKey, CellLibrary, CellVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Input(usize),
    Gate(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub name: String,
    pub driver: Driver,
    /// One entry per reading pin, so a gate that reads a net twice appears twice.
    pub readers: Vec<usize>,
    pub is_output: bool,
}

/// Index-based view of a validated netlist.
///
/// Net ids are primary inputs first (declaration order), then gate outputs
/// (gate order), so gate `g` drives net `primary_inputs + g`.
#[derive(Debug)]
pub struct Circuit {
    nets: Vec<Net>,
    gate_inputs: Vec<Vec<usize>>,
    outputs: Vec<usize>,
    topo: Vec<usize>,
    pub(crate) activity: OnceLock<Vec<SignalActivity>>,
}

impl Circuit {
    pub fn new(netlist: &Netlist) -> Result<Circuit> {
        let diags = validate(netlist);
        if !diags.is_empty() {
            return Err(Error::InvalidNetlist(diags));
        }
        let topo = topological_order(netlist)?;
        let pi_count = netlist.primary_inputs.len();
        let mut nets: Vec<Net> = netlist
            .primary_inputs
            .iter()
            .enumerate()
            .map(|(i, name)| Net {
                name: name.clone(),
                driver: Driver::Input(i),
                readers: Vec::new(),
                is_output: false,
            })
            .collect();
        nets.extend(netlist.gates.iter().enumerate().map(|(g, gate)| Net {
            name: gate.output.clone(),
            driver: Driver::Gate(g),
            readers: Vec::new(),
            is_output: false,
        }));
        let ids: HashMap<String, usize> = nets
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), i))
            .collect();
        let mut gate_inputs = Vec::with_capacity(netlist.gates.len());
        for (g, gate) in netlist.gates.iter().enumerate() {
            let inputs: Vec<usize> = gate.inputs.iter().map(|n| ids[n]).collect();
            for &net in &inputs {
                nets[net].readers.push(g);
            }
            gate_inputs.push(inputs);
        }
        let outputs: Vec<usize> = netlist.primary_outputs.iter().map(|n| ids[n]).collect();
        for &o in &outputs {
            nets[o].is_output = true;
        }
        debug_assert!(nets[pi_count..]
            .iter()
            .enumerate()
            .all(|(g, n)| n.driver == Driver::Gate(g)));
        Ok(Circuit {
            nets,
            gate_inputs,
            outputs,
            topo,
            activity: OnceLock::new(),
        })
    }

    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn net(&self, id: usize) -> &Net {
        &self.nets[id]
    }

    pub fn net_id(&self, name: &str) -> Option<usize> {
        self.nets.iter().position(|n| n.name == name)
    }

    pub fn gate_count(&self) -> usize {
        self.gate_inputs.len()
    }

    pub fn input_count(&self) -> usize {
        self.nets.len() - self.gate_inputs.len()
    }

    pub fn gate_inputs(&self, gate: usize) -> &[usize] {
        &self.gate_inputs[gate]
    }

    pub fn gate_output(&self, gate: usize) -> usize {
        self.input_count() + gate
    }

    /// Primary-output nets in declaration order.
    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }
}

/// Drive-strength choice per gate: gene `i` is the variant index of gate `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Chromosome {
    genes: Vec<usize>,
}

impl Chromosome {
    pub fn new(genes: Vec<usize>) -> Self {
        Chromosome { genes }
    }

    pub fn genes(&self) -> &[usize] {
        &self.genes
    }

    pub fn genes_mut(&mut self) -> &mut [usize] {
        &mut self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }
}

/// Genes separated by single spaces.
impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.genes.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for Chromosome {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<_>, _>>()
            .map(Chromosome::new)
    }
}

impl TryFrom<String> for Chromosome {
    type Error = std::num::ParseIntError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Chromosome> for String {
    fn from(c: Chromosome) -> String {
        c.to_string()
    }
}

/// A netlist bound to a library with one variant chosen per gate.
///
/// Cloning is cheap: only the assignment is copied.
#[derive(Debug, Clone)]
pub struct MappedDesign {
    netlist: Arc<Netlist>,
    library: Arc<CellLibrary>,
    circuit: Arc<Circuit>,
    cells: Arc<[usize]>,
    assignment: Vec<usize>,
}

impl PartialEq for MappedDesign {
    fn eq(&self, other: &Self) -> bool {
        self.assignment == other.assignment
            && (Arc::ptr_eq(&self.netlist, &other.netlist) || self.netlist == other.netlist)
            && (Arc::ptr_eq(&self.library, &other.library) || self.library == other.library)
    }
}

/// Binds every gate to the weakest variant of its `(function, arity)`.
pub fn map_to_library(
    netlist: Netlist,
    library: impl Into<Arc<CellLibrary>>,
) -> Result<MappedDesign> {
    let library = library.into();
    let circuit = Circuit::new(&netlist)?;
    let cells = netlist
        .gates
        .iter()
        .map(|g| {
            library
                .function_index(CellKey::new(g.function, g.arity()))
                .ok_or_else(|| Error::UnmappedGate {
                    gate: g.name.clone(),
                    function: g.function,
                    arity: g.arity(),
                })
        })
        .collect::<Result<Arc<[usize]>>>()?;
    Ok(MappedDesign {
        assignment: vec![0; netlist.gates.len()],
        netlist: Arc::new(netlist),
        library,
        circuit: Arc::new(circuit),
        cells,
    })
}

impl MappedDesign {
    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn library(&self) -> &CellLibrary {
        &self.library
    }

    pub fn library_arc(&self) -> &Arc<CellLibrary> {
        &self.library
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn gate_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cell(&self, gate: usize) -> &CellFunction {
        self.library.function_at(self.cells[gate])
    }

    /// All variants available to `gate`.
    pub fn variants(&self, gate: usize) -> &[CellVariant] {
        self.cell(gate).variants()
    }

    /// Variant currently assigned to `gate`.
    pub fn variant(&self, gate: usize) -> &CellVariant {
        &self.variants(gate)[self.assignment[gate]]
    }

    /// Variant `index` of `gate`'s function, independent of the assignment.
    pub fn variant_at(&self, gate: usize, index: usize) -> &CellVariant {
        &self.variants(gate)[index]
    }

    /// Number of variants per gate, in gate order.
    pub fn variant_counts(&self) -> Vec<usize> {
        (0..self.gate_count())
            .map(|g| self.variants(g).len())
            .collect()
    }

    pub fn extract_chromosome(&self) -> Chromosome {
        Chromosome::new(self.assignment.clone())
    }

    pub fn check_chromosome(&self, c: &Chromosome) -> Result<()> {
        if c.len() != self.gate_count() {
            return Err(Error::InvalidChromosome {
                index: None,
                reason: format!(
                    "length {} does not match {} gates",
                    c.len(),
                    self.gate_count()
                ),
            });
        }
        for (i, &gene) in c.genes().iter().enumerate() {
            let n = self.variants(i).len();
            if gene >= n {
                return Err(Error::InvalidChromosome {
                    index: Some(i),
                    reason: format!(
                        "gene {i} (gate {}) is {gene} but only {n} variants exist",
                        self.netlist.gates[i].name
                    ),
                });
            }
        }
        Ok(())
    }

    /// Same connectivity with the assignment replaced by `c`.
    pub fn apply_chromosome(&self, c: &Chromosome) -> Result<MappedDesign> {
        let mut out = self.clone();
        out.set_chromosome(c)?;
        Ok(out)
    }

    pub fn set_chromosome(&mut self, c: &Chromosome) -> Result<()> {
        self.check_chromosome(c)?;
        self.assignment.copy_from_slice(c.genes());
        Ok(())
    }

    /// Sets one gene. Panics if `variant` is out of range.
    pub fn set_variant(&mut self, gate: usize, variant: usize) {
        assert!(
            variant < self.variants(gate).len(),
            "variant {variant} out of range for gate {gate}"
        );
        self.assignment[gate] = variant;
    }
}

/// One line per gate: `<instance> <FUNCTION><arity> <label>`.
pub fn write_assignment(design: &MappedDesign) -> String {
    let mut out = String::new();
    for (g, gate) in design.netlist().gates.iter().enumerate() {
        let v = design.variant(g);
        out.push_str(&format!(
            "{} {}{} {}\n",
            gate.name, v.function, v.arity, v.strength_label
        ));
    }
    out
}

/// Reads an assignment written by [`write_assignment`]. Every gate must be listed once.
pub fn read_assignment(design: &MappedDesign, text: &str) -> Result<Chromosome> {
    let index: HashMap<&str, usize> = design
        .netlist()
        .gates
        .iter()
        .enumerate()
        .map(|(i, g)| (g.name.as_str(), i))
        .collect();
    let mut genes: Vec<Option<usize>> = vec![None; design.gate_count()];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let parse = |message: String| Error::Parse { line, message };
        let fields: Vec<&str> = body.split_whitespace().collect();
        let [name, cell, label] = fields[..] else {
            return Err(parse(format!(
                "expected `<instance> <cell> <strength>`, got `{body}`"
            )));
        };
        let &g = index
            .get(name)
            .ok_or_else(|| parse(format!("unknown instance {name}")))?;
        let f = design.cell(g);
        if cell != f.key().to_string() {
            return Err(parse(format!(
                "instance {name} is a {}, not {cell}",
                f.key()
            )));
        }
        let v = f
            .variant_index(label)
            .ok_or_else(|| parse(format!("{cell} has no variant {label}")))?;
        if genes[g].replace(v).is_some() {
            return Err(parse(format!("instance {name} listed twice")));
        }
    }
    let genes = genes
        .into_iter()
        .enumerate()
        .map(|(g, v)| {
            v.ok_or_else(|| Error::InvalidChromosome {
                index: Some(g),
                reason: format!(
                    "assignment omits instance {}",
                    design.netlist().gates[g].name
                ),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Chromosome::new(genes))
}
