//! JSON library documents.
//!
//! ```json
//! {
//!   "name": "synthetic",
//!   "voltage": 1.2,
//!   "wire_cap_per_fanout": 4e-16,
//!   "functions": [
//!     { "function_id": "NOT", "arity": 1, "variants": [
//!       { "strength_label": "D1", "strength": 1.0, "input_cap_per_pin": 1e-15,
//!         "drive_resistance": 4000.0, "intrinsic_delay": 1.2e-11, "area": 1.44,
//!         "leakage_power": 2e-9, "internal_energy": 1e-15 } ] } ]
//! }
//! ```
//!
//! All values are SI units except area (square micrometres). Unknown fields are
//! rejected.

use serde::{Deserialize, Serialize};

use super::{CellFunction, CellLibrary, CellVariant, GateFunction};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LibraryDocument {
    name: String,
    voltage: f64,
    wire_cap_per_fanout: f64,
    functions: Vec<FunctionDocument>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionDocument {
    function_id: GateFunction,
    arity: usize,
    variants: Vec<VariantDocument>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariantDocument {
    strength_label: String,
    strength: f64,
    input_cap_per_pin: f64,
    drive_resistance: f64,
    intrinsic_delay: f64,
    area: f64,
    leakage_power: f64,
    internal_energy: f64,
}

/// Parses a library document.
pub fn load_library(document: &str) -> Result<CellLibrary> {
    let doc: LibraryDocument = serde_json::from_str(document).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let functions = doc
        .functions
        .into_iter()
        .map(|f| {
            let variants = f
                .variants
                .into_iter()
                .map(|v| CellVariant {
                    function: f.function_id,
                    arity: f.arity,
                    strength_label: v.strength_label,
                    strength: v.strength,
                    input_cap_per_pin: v.input_cap_per_pin,
                    drive_resistance: v.drive_resistance,
                    intrinsic_delay: v.intrinsic_delay,
                    area: v.area,
                    leakage_power: v.leakage_power,
                    internal_energy: v.internal_energy,
                })
                .collect();
            CellFunction::new(f.function_id, f.arity, variants)
        })
        .collect::<Result<Vec<_>>>()?;
    CellLibrary::new(doc.name, doc.voltage, doc.wire_cap_per_fanout, functions)
}

/// Renders a library as a pretty-printed document.
pub fn serialize_library(lib: &CellLibrary) -> String {
    let doc = LibraryDocument {
        name: lib.name.clone(),
        voltage: lib.voltage,
        wire_cap_per_fanout: lib.wire_cap_per_fanout,
        functions: lib
            .functions()
            .iter()
            .map(|f| FunctionDocument {
                function_id: f.function,
                arity: f.arity,
                variants: f
                    .variants()
                    .iter()
                    .map(|v| VariantDocument {
                        strength_label: v.strength_label.clone(),
                        strength: v.strength,
                        input_cap_per_pin: v.input_cap_per_pin,
                        drive_resistance: v.drive_resistance,
                        intrinsic_delay: v.intrinsic_delay,
                        area: v.area,
                        leakage_power: v.leakage_power,
                        internal_energy: v.internal_energy,
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("library documents always serialise");
    text.push('\n');
    text
}
