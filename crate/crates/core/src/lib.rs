//! Multi-objective drive-strength remapping of gate-level circuits.
//!
//! A netlist is mapped onto a cell library with several drive strengths per
//! logic function. Each gate's strength is one gene of a chromosome, and a
//! mutation-only NSGA-II searches for assignments that trade worst-case
//! delay, total power and gate area against each other.
//!
//! ```no_run
//! use drivemap_core::explorer::{run_single_seed, ExperimentSpec, Mode};
//!
//! let mut spec = ExperimentSpec::new("benchmarks/c17.bench", Mode::SingleSeed);
//! spec.moea.population_size = 16;
//! spec.moea.generations = 10;
//! let archive = run_single_seed(&spec, |_| {}).unwrap();
//! println!("{} rank-1 designs", archive.pareto().count());
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod error;
pub mod eval;
pub mod explorer;
pub mod library;
pub mod moea;
pub mod netlist;
pub mod seeding;

pub use error::{Error, Result};
pub use eval::{evaluate, Evaluate, Evaluation, ObjectiveVector, TimingScenario};
pub use library::{CellKey, CellLibrary, CellVariant, GateFunction, ScalingProfile};
pub use moea::{evolve, GeneSpace, MoeaConfig};
pub use netlist::{Chromosome, MappedDesign, Netlist};
