// SPDX-License-Identifier: Apache-2.0

//! Readers and writers for the flow's interchange formats.
//!
//! Every reader accepts a fixed subset of its format. Constructs outside the
//! subset that can be skipped safely are counted as warnings; anything else
//! is an error. No reader panics on malformed input.

pub mod def;
pub mod guide;
pub mod ispd08;
pub mod lef;
pub(crate) mod lexer;
pub mod liberty;
pub mod sdc;
pub mod verilog;

use thiserror::Error;

pub use def::{grid_from_tech, parse_def, write_def};
pub use guide::{parse_guides, write_guides, RouteGuide, RouteGuideSet};
pub use ispd08::{
    parse_gr_input, parse_gr_solution, write_gr_input, write_gr_solution, GlobalRouteSolution, GrInput, GrNet, GrPin,
    GrPoint, GrSegment, NetRoute,
};
pub use lef::{parse_lef, write_lef};
pub use liberty::{parse_liberty, write_liberty, ArcSense, LibArc, LibCell, LibPin, Lut, TimingLibrary};
pub use sdc::{parse_sdc, write_sdc};
pub use verilog::{parse_verilog, write_verilog, Netlist, NetlistInstance};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("syntax error at line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("behavioral construct at line {line}")]
    BehavioralConstruct { line: usize },
    #[error("undeclared net `{name}` at line {line}")]
    UndeclaredNet { name: String, line: usize },
    #[error("lookup-table template `{0}` is not defined")]
    MissingTemplate(String),
    #[error("unknown layer `{layer}` at line {line}")]
    UnknownLayerRef { layer: String, line: usize },
    #[error("unknown via `{via}` at line {line}")]
    UnknownVia { via: String, line: usize },
    #[error("database units mismatch: technology has {expected}, file has {found}")]
    UnitsMismatch { expected: i64, found: i64 },
    #[error("value `{value}` does not land on the DBU grid at line {line}")]
    OffGrid { value: String, line: usize },
    #[error("capacity adjustment out of range at line {line}")]
    AdjustmentOutOfRange { line: usize },
    #[error("segment is not axis-parallel at line {line}")]
    NonAxisParallelSegment { line: usize },
}

impl FormatError {
    pub(crate) fn syntax(line: usize, msg: impl Into<String>) -> Self {
        FormatError::Syntax { line, msg: msg.into() }
    }
}
