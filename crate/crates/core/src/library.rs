//! Standard cell libraries and their JSON document format.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::truth::{TruthError, TruthTable, MAX_ARITY};

/// Reserved name of the primary-input pseudo-cell (single pin `O`).
pub const INPUT_CELL: &str = "input";
/// Reserved name of the primary-output pseudo-cell (single pin `I`).
pub const OUTPUT_CELL: &str = "output";

/// Library shipped with the crate: twelve cells named after the FreePDK45
/// set, with illustrative areas in square micrometres.
pub const DEFAULT_LIBRARY: &str = include_str!("../data/freepdk45ish.json");

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("library document is malformed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate cell `{0}`")]
    DuplicateCell(String),
    #[error("cell name `{0}` is reserved")]
    ReservedName(String),
    #[error("cell `{cell}` has {inputs} inputs but its truth literal does not match: {source}")]
    Function { cell: String, inputs: usize, source: TruthError },
    #[error("cell `{0}` has {1} inputs, more than the maximum of {MAX_ARITY}")]
    Arity(String, usize),
    #[error("cell `{0}` has a negative or non-finite area")]
    Area(String),
    #[error("cell `{0}` repeats pin `{1}`")]
    DuplicatePin(String, String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellType {
    pub name: String,
    pub inputs: Vec<String>,
    pub output: String,
    pub area: f64,
    pub function: TruthTable,
}

impl CellType {
    pub fn arity(&self) -> usize {
        self.inputs.len()
    }

    pub fn input_index(&self, pin: &str) -> Option<usize> {
        self.inputs.iter().position(|p| p == pin)
    }

    fn validate(&self) -> Result<(), LibraryError> {
        if self.name == INPUT_CELL || self.name == OUTPUT_CELL {
            return Err(LibraryError::ReservedName(self.name.clone()));
        }
        if self.inputs.len() > MAX_ARITY {
            return Err(LibraryError::Arity(self.name.clone(), self.inputs.len()));
        }
        if !(self.area.is_finite() && self.area >= 0.0) {
            return Err(LibraryError::Area(self.name.clone()));
        }
        for (i, p) in self.inputs.iter().enumerate() {
            if self.inputs[..i].contains(p) || *p == self.output {
                return Err(LibraryError::DuplicatePin(self.name.clone(), p.clone()));
            }
        }
        Ok(())
    }
}

/// Pin-only cells that mark the netlist boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PseudoCell {
    pub name: &'static str,
    pub pin: &'static str,
}

pub const PSEUDO_CELLS: [PseudoCell; 2] = [
    PseudoCell { name: INPUT_CELL, pin: "O" },
    PseudoCell { name: OUTPUT_CELL, pin: "I" },
];

/// Cells in document order plus a name index.
#[derive(Clone, Debug, Default)]
pub struct CellLibrary {
    cells: Vec<CellType>,
    by_name: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct LibraryDoc {
    cells: Vec<CellDoc>,
}

#[derive(Serialize, Deserialize)]
struct CellDoc {
    name: String,
    inputs: Vec<String>,
    output: String,
    area: f64,
    truth: String,
}

impl CellLibrary {
    pub fn new(cells: Vec<CellType>) -> Result<Self, LibraryError> {
        let mut lib = Self::default();
        for cell in cells {
            lib.push(cell)?;
        }
        Ok(lib)
    }

    pub fn push(&mut self, cell: CellType) -> Result<usize, LibraryError> {
        cell.validate()?;
        if self.by_name.contains_key(&cell.name) {
            return Err(LibraryError::DuplicateCell(cell.name));
        }
        let idx = self.cells.len();
        self.by_name.insert(cell.name.clone(), idx);
        self.cells.push(cell);
        Ok(idx)
    }

    pub fn default_library() -> Self {
        parse_library(DEFAULT_LIBRARY).expect("bundled library is valid")
    }

    pub fn cells(&self) -> &[CellType] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn pseudo_cells(&self) -> &'static [PseudoCell] {
        &PSEUDO_CELLS
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&CellType> {
        self.index_of(name).map(|i| &self.cells[i])
    }

    pub fn cell(&self, idx: usize) -> &CellType {
        &self.cells[idx]
    }

    /// Cheapest cell implementing exactly `f` in its own pin order; ties go
    /// to the lexicographically smaller name.
    pub fn find_by_function(&self, f: TruthTable) -> Option<usize> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.function == f)
            .min_by(|(_, a), (_, b)| {
                a.area.total_cmp(&b.area).then_with(|| a.name.cmp(&b.name))
            })
            .map(|(i, _)| i)
    }
}

pub fn parse_library(text: &str) -> Result<CellLibrary, LibraryError> {
    let doc: LibraryDoc = serde_json::from_str(text)?;
    let mut lib = CellLibrary::default();
    for c in doc.cells {
        if c.inputs.len() > MAX_ARITY {
            return Err(LibraryError::Arity(c.name, c.inputs.len()));
        }
        let function = TruthTable::parse_literal(c.inputs.len(), &c.truth).map_err(|source| {
            LibraryError::Function { cell: c.name.clone(), inputs: c.inputs.len(), source }
        })?;
        lib.push(CellType { name: c.name, inputs: c.inputs, output: c.output, area: c.area, function })?;
    }
    Ok(lib)
}

pub fn serialize_library(lib: &CellLibrary) -> String {
    let doc = LibraryDoc {
        cells: lib
            .cells
            .iter()
            .map(|c| CellDoc {
                name: c.name.clone(),
                inputs: c.inputs.clone(),
                output: c.output.clone(),
                area: c.area,
                truth: c.function.to_literal(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("library serializes");
    s.push('\n');
    s
}
