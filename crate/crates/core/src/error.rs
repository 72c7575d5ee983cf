use std::path::PathBuf;

use crate::library::GateFunction;
use crate::netlist::Diagnostic;

/// Errors raised anywhere in the optimisation flow.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported arity {arity} for {function}")]
    UnsupportedArity {
        function: GateFunction,
        arity: usize,
    },

    #[error("unknown cell {function}{arity}")]
    UnknownCell {
        function: GateFunction,
        arity: usize,
    },

    #[error("unknown variant {label} of {function}{arity}")]
    UnknownVariant {
        function: GateFunction,
        arity: usize,
        label: String,
    },

    #[error("duplicate variant {label} of {function}{arity}")]
    DuplicateVariant {
        function: GateFunction,
        arity: usize,
        label: String,
    },

    #[error("invalid library: {0}")]
    InvalidLibrary(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown function `{keyword}`")]
    UnknownFunction { line: usize, keyword: String },

    #[error("invalid netlist: {}", join_diagnostics(.0))]
    InvalidNetlist(Vec<Diagnostic>),

    #[error("combinational cycle through gates {}", .gates.join(", "))]
    Cycle { gates: Vec<String> },

    #[error("gate {gate} is unmapped: library has no {function}{arity}")]
    UnmappedGate {
        gate: String,
        function: GateFunction,
        arity: usize,
    },

    #[error("invalid chromosome: {reason}")]
    InvalidChromosome {
        index: Option<usize>,
        reason: String,
    },

    #[error("invalid timing constraint: {0}")]
    InvalidConstraint(String),

    #[error("timing not met (WNS {wns:e} s)")]
    TimingNotMet { wns: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid hypervolume reference: {0}")]
    InvalidReference(String),

    #[error("evaluation failed in generation {generation} for individual {individual}: {source}")]
    Evaluation {
        generation: usize,
        individual: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", .path.display())]
    Archive { path: PathBuf, message: String },
}

fn join_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
