//! Recursive value-chain system models.
//!
//! A system is described at one level of decomposition by its component
//! multiset, internal network, environment interface, boundary, per-edge
//! knowledge and history policy; components may themselves be systems one
//! level down. This crate parses and prints the `.vcs` description language,
//! validates and flattens the component tree into an atomic-level graph,
//! runs a deterministic discrete-time flow simulation with a replayable
//! history log, and computes structural diagnostics (linkage classes,
//! governance centrality, end-market reachability, weak linkages).

pub mod analysis;
pub mod error;
pub mod export;
pub mod fixtures;
pub mod flatten;
pub mod model;
pub mod sdl;
pub mod sim;
pub mod tree;
pub mod validate;

pub use error::{AnalysisError, LogFormatError, ModelError, SimError};
pub use export::{export_dot, export_json, export_json_string};
pub use flatten::{flatten, flatten_with, FlatEdge, FlatGraph, FlatNode};
pub use model::*;
pub use sdl::{parse, parse_bytes, parse_named, parse_with, print, Diagnostic, SdlDocument, Severity};
pub use tree::{depth, depth_with, subsystem_at};
pub use validate::{validate, validate_with, ValidationReport, Violation};
