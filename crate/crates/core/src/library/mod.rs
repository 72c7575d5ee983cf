//! Standard-cell library model.
//!
//! A [`CellLibrary`] maps every `(function, arity)` pair to an ordered ladder
//! of drive-strength variants. Libraries are either loaded from a JSON
//! document (see [`document`]) or generated from a [`ScalingProfile`], which
//! applies first-order scaling laws to a set of base parameters.

pub mod document;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use document::{load_library, serialize_library};

/// Widest gate the synthetic generator will characterise.
pub const MAX_ARITY: usize = 10;

/// Logic function of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateFunction {
    Not,
    Buf,
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
}

impl GateFunction {
    pub const ALL: [GateFunction; 8] = [
        GateFunction::Not,
        GateFunction::Buf,
        GateFunction::And,
        GateFunction::Nand,
        GateFunction::Or,
        GateFunction::Nor,
        GateFunction::Xor,
        GateFunction::Xnor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GateFunction::Not => "NOT",
            GateFunction::Buf => "BUF",
            GateFunction::And => "AND",
            GateFunction::Nand => "NAND",
            GateFunction::Or => "OR",
            GateFunction::Nor => "NOR",
            GateFunction::Xor => "XOR",
            GateFunction::Xnor => "XNOR",
        }
    }

    /// Single-input functions must have arity exactly one.
    pub fn is_unary(self) -> bool {
        matches!(self, GateFunction::Not | GateFunction::Buf)
    }

    pub fn arity_supported(self, arity: usize) -> bool {
        if self.is_unary() {
            arity == 1
        } else {
            (1..=MAX_ARITY).contains(&arity)
        }
    }

    /// Boolean output for the given input values.
    pub fn eval(self, inputs: &[bool]) -> bool {
        let and = inputs.iter().all(|&v| v);
        let or = inputs.iter().any(|&v| v);
        let parity = inputs.iter().filter(|&&v| v).count() % 2 == 1;
        match self {
            GateFunction::Not => !inputs[0],
            GateFunction::Buf => inputs[0],
            GateFunction::And => and,
            GateFunction::Nand => !and,
            GateFunction::Or => or,
            GateFunction::Nor => !or,
            GateFunction::Xor => parity,
            GateFunction::Xnor => !parity,
        }
    }
}

impl fmt::Display for GateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("BUFF") {
            return Ok(GateFunction::Buf);
        }
        GateFunction::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown gate function `{s}`"))
    }
}

/// Library lookup key: a logic function at a given input count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub function: GateFunction,
    pub arity: usize,
}

impl CellKey {
    pub fn new(function: GateFunction, arity: usize) -> Self {
        CellKey { function, arity }
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.function, self.arity)
    }
}

impl FromStr for CellKey {
    type Err = String;

    /// `NAND2`, `not1`, ...
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let split = s
            .find(|c: char| c.is_ascii_digit())
            .ok_or_else(|| format!("cell `{s}` has no arity"))?;
        let function: GateFunction = s[..split].parse()?;
        let arity: usize = s[split..]
            .parse()
            .map_err(|_| format!("bad arity in cell `{s}`"))?;
        Ok(CellKey::new(function, arity))
    }
}

/// Numeric drive strength implied by a `D<k>` label. `D0` is half of `D1`.
pub fn strength_of_label(label: &str) -> Option<f64> {
    let digits = label.strip_prefix('D')?;
    let k: u32 = digits.parse().ok()?;
    Some(if k == 0 { 0.5 } else { f64::from(k) })
}

/// One drive-strength variant of a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellVariant {
    pub function: GateFunction,
    pub arity: usize,
    pub strength_label: String,
    pub strength: f64,
    /// Farads per input pin.
    pub input_cap_per_pin: f64,
    /// Ohms.
    pub drive_resistance: f64,
    /// Seconds.
    pub intrinsic_delay: f64,
    /// Square micrometres.
    pub area: f64,
    /// Watts.
    pub leakage_power: f64,
    /// Joules per output toggle.
    pub internal_energy: f64,
}

impl CellVariant {
    pub fn key(&self) -> CellKey {
        CellKey::new(self.function, self.arity)
    }

    fn check(&self) -> Result<()> {
        let fields = [
            ("strength", self.strength),
            ("input_cap_per_pin", self.input_cap_per_pin),
            ("drive_resistance", self.drive_resistance),
            ("intrinsic_delay", self.intrinsic_delay),
            ("area", self.area),
            ("leakage_power", self.leakage_power),
            ("internal_energy", self.internal_energy),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidLibrary(format!(
                    "{}{} {}: {name} must be positive, got {value}",
                    self.function, self.arity, self.strength_label
                )));
            }
        }
        Ok(())
    }
}

/// All variants of one `(function, arity)` pair, ascending in strength.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFunction {
    pub function: GateFunction,
    pub arity: usize,
    variants: Vec<CellVariant>,
}

impl CellFunction {
    /// Builds a function entry; variants are sorted by strength.
    pub fn new(
        function: GateFunction,
        arity: usize,
        mut variants: Vec<CellVariant>,
    ) -> Result<Self> {
        if variants.is_empty() {
            return Err(Error::InvalidLibrary(format!(
                "{function}{arity} has no variants"
            )));
        }
        let mut labels = BTreeSet::new();
        for v in &variants {
            if v.function != function || v.arity != arity {
                return Err(Error::InvalidLibrary(format!(
                    "variant {} of {}{} filed under {function}{arity}",
                    v.strength_label, v.function, v.arity
                )));
            }
            v.check()?;
            if !labels.insert(v.strength_label.as_str()) {
                return Err(Error::DuplicateVariant {
                    function,
                    arity,
                    label: v.strength_label.clone(),
                });
            }
        }
        variants.sort_by(|a, b| a.strength.total_cmp(&b.strength));
        if variants.windows(2).any(|w| w[0].strength >= w[1].strength) {
            return Err(Error::InvalidLibrary(format!(
                "{function}{arity} has two variants of equal strength"
            )));
        }
        Ok(CellFunction {
            function,
            arity,
            variants,
        })
    }

    pub fn key(&self) -> CellKey {
        CellKey::new(self.function, self.arity)
    }

    pub fn variants(&self) -> &[CellVariant] {
        &self.variants
    }

    pub fn variant_index(&self, label: &str) -> Option<usize> {
        self.variants.iter().position(|v| v.strength_label == label)
    }
}

/// A discretised standard-cell library. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLibrary {
    pub name: String,
    /// Supply voltage in volts.
    pub voltage: f64,
    /// Lumped wire capacitance added per reader of a net, in farads.
    pub wire_cap_per_fanout: f64,
    functions: Vec<CellFunction>,
    index: BTreeMap<CellKey, usize>,
}

impl CellLibrary {
    pub fn new(
        name: impl Into<String>,
        voltage: f64,
        wire_cap_per_fanout: f64,
        functions: Vec<CellFunction>,
    ) -> Result<Self> {
        if !(voltage.is_finite() && voltage > 0.0) {
            return Err(Error::InvalidLibrary(format!(
                "voltage must be positive, got {voltage}"
            )));
        }
        if !(wire_cap_per_fanout.is_finite() && wire_cap_per_fanout >= 0.0) {
            return Err(Error::InvalidLibrary(format!(
                "wire_cap_per_fanout must be non-negative, got {wire_cap_per_fanout}"
            )));
        }
        let mut functions = functions;
        functions.sort_by_key(CellFunction::key);
        let mut index = BTreeMap::new();
        for (i, f) in functions.iter().enumerate() {
            if index.insert(f.key(), i).is_some() {
                return Err(Error::InvalidLibrary(format!("{} listed twice", f.key())));
            }
        }
        Ok(CellLibrary {
            name: name.into(),
            voltage,
            wire_cap_per_fanout,
            functions,
            index,
        })
    }

    pub fn functions(&self) -> &[CellFunction] {
        &self.functions
    }

    pub fn function_index(&self, key: CellKey) -> Option<usize> {
        self.index.get(&key).copied()
    }

    pub fn function(&self, key: CellKey) -> Option<&CellFunction> {
        self.function_index(key).map(|i| &self.functions[i])
    }

    pub fn function_at(&self, index: usize) -> &CellFunction {
        &self.functions[index]
    }

    /// Variants of `(function, arity)` in ascending strength.
    pub fn variants_of(&self, function: GateFunction, arity: usize) -> Result<&[CellVariant]> {
        self.function(CellKey::new(function, arity))
            .map(CellFunction::variants)
            .ok_or(Error::UnknownCell { function, arity })
    }

    pub fn variant(
        &self,
        function: GateFunction,
        arity: usize,
        label: &str,
    ) -> Result<&CellVariant> {
        self.variants_of(function, arity)?
            .iter()
            .find(|v| v.strength_label == label)
            .ok_or_else(|| Error::UnknownVariant {
                function,
                arity,
                label: label.to_owned(),
            })
    }

    /// Keeps exactly the listed variants; functions absent from `allow` are dropped.
    pub fn restrict(&self, allow: &BTreeMap<CellKey, BTreeSet<String>>) -> Result<CellLibrary> {
        let mut functions = Vec::with_capacity(allow.len());
        for (key, labels) in allow {
            let source = self.function(*key).ok_or(Error::UnknownCell {
                function: key.function,
                arity: key.arity,
            })?;
            for label in labels {
                if source.variant_index(label).is_none() {
                    return Err(Error::UnknownVariant {
                        function: key.function,
                        arity: key.arity,
                        label: label.clone(),
                    });
                }
            }
            let kept = source
                .variants()
                .iter()
                .filter(|v| labels.contains(&v.strength_label))
                .cloned()
                .collect();
            functions.push(CellFunction::new(key.function, key.arity, kept)?);
        }
        CellLibrary::new(
            self.name.clone(),
            self.voltage,
            self.wire_cap_per_fanout,
            functions,
        )
    }

    /// Allow-map covering every variant in the library.
    pub fn contents(&self) -> BTreeMap<CellKey, BTreeSet<String>> {
        self.functions
            .iter()
            .map(|f| {
                let labels = f
                    .variants()
                    .iter()
                    .map(|v| v.strength_label.clone())
                    .collect();
                (f.key(), labels)
            })
            .collect()
    }
}

/// A drive-strength label with its relative strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strength {
    pub label: String,
    pub value: f64,
}

impl Strength {
    pub fn from_label(label: &str) -> Option<Strength> {
        strength_of_label(label).map(|value| Strength {
            label: label.to_owned(),
            value,
        })
    }
}

/// The eleven-step ladder D0..D24.
pub const FULL_LADDER: [&str; 11] = [
    "D0", "D1", "D2", "D3", "D4", "D6", "D8", "D12", "D16", "D20", "D24",
];

/// Base parameters and scaling laws for synthetic libraries.
///
/// For a cell of arity `n` at strength `s`, with `a = arity_factor^(n-1)`:
/// resistance `R0*a/s`, input cap `C0*s`, area `A0*s*a`, leakage `L0*s*a`,
/// internal energy `E0*s*a`, intrinsic delay `d0*a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingProfile {
    pub name: String,
    pub voltage: f64,
    pub wire_cap_per_fanout: f64,
    pub base_resistance: f64,
    pub base_input_cap: f64,
    pub base_area: f64,
    pub base_leakage: f64,
    pub base_internal_energy: f64,
    pub base_intrinsic_delay: f64,
    pub arity_factor: f64,
    pub strengths: Vec<Strength>,
}

impl Default for ScalingProfile {
    fn default() -> Self {
        ScalingProfile {
            name: "synthetic".to_owned(),
            voltage: 1.2,
            wire_cap_per_fanout: 0.4e-15,
            base_resistance: 4.0e3,
            base_input_cap: 1.0e-15,
            base_area: 1.5,
            base_leakage: 2.0e-9,
            base_internal_energy: 1.0e-15,
            base_intrinsic_delay: 12.0e-12,
            arity_factor: 1.25,
            strengths: FULL_LADDER
                .iter()
                .map(|l| Strength::from_label(l).expect("ladder labels are well formed"))
                .collect(),
        }
    }
}

impl ScalingProfile {
    pub fn with_labels(mut self, labels: &[&str]) -> Result<Self> {
        self.strengths = labels
            .iter()
            .map(|l| {
                Strength::from_label(l).ok_or_else(|| {
                    Error::InvalidLibrary(format!("strength label `{l}` is not of the form D<k>"))
                })
            })
            .collect::<Result<_>>()?;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        let bases = [
            ("voltage", self.voltage),
            ("base_resistance", self.base_resistance),
            ("base_input_cap", self.base_input_cap),
            ("base_area", self.base_area),
            ("base_leakage", self.base_leakage),
            ("base_internal_energy", self.base_internal_energy),
            ("base_intrinsic_delay", self.base_intrinsic_delay),
        ];
        for (name, value) in bases {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidLibrary(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !(self.arity_factor >= 1.0) {
            return Err(Error::InvalidLibrary(format!(
                "arity_factor must be at least 1, got {}",
                self.arity_factor
            )));
        }
        if self.strengths.is_empty() {
            return Err(Error::InvalidLibrary("no strength labels".to_owned()));
        }
        if self.strengths.iter().any(|s| !(s.value > 0.0))
            || self.strengths.windows(2).any(|w| w[0].value >= w[1].value)
        {
            return Err(Error::InvalidLibrary(
                "strengths must be positive and strictly increasing".to_owned(),
            ));
        }
        Ok(())
    }

    fn variant(&self, key: CellKey, strength: &Strength) -> CellVariant {
        let a = self.arity_factor.powi(key.arity as i32 - 1);
        let s = strength.value;
        CellVariant {
            function: key.function,
            arity: key.arity,
            strength_label: strength.label.clone(),
            strength: s,
            input_cap_per_pin: self.base_input_cap * s,
            drive_resistance: self.base_resistance * a / s,
            intrinsic_delay: self.base_intrinsic_delay * a,
            area: self.base_area * s * a,
            leakage_power: self.base_leakage * s * a,
            internal_energy: self.base_internal_energy * s * a,
        }
    }
}

/// Builds a library with one variant per profile strength for every required cell.
pub fn generate_synthetic_library(
    profile: &ScalingProfile,
    required: &BTreeSet<CellKey>,
) -> Result<CellLibrary> {
    profile.check()?;
    if required.is_empty() {
        return Err(Error::InvalidLibrary("no cells requested".to_owned()));
    }
    let mut functions = Vec::with_capacity(required.len());
    for &key in required {
        if !key.function.arity_supported(key.arity) {
            return Err(Error::UnsupportedArity {
                function: key.function,
                arity: key.arity,
            });
        }
        let variants = profile
            .strengths
            .iter()
            .map(|s| profile.variant(key, s))
            .collect();
        functions.push(CellFunction::new(key.function, key.arity, variants)?);
    }
    CellLibrary::new(
        profile.name.clone(),
        profile.voltage,
        profile.wire_cap_per_fanout,
        functions,
    )
}
