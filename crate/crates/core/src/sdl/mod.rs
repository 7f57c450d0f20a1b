//! The System Description Language: a keyword-led, brace-delimited text
//! format for [`SystemSpec`] trees (`.vcs` files).
//!
//! ```text
//! system "demo" {
//!   component P atomic role=producer tier=0
//!   component farm * 2 vary [big=1, small=1] {
//!     component plot atomic role=producer tier=0
//!     sink out scope=local
//!     edge plot -> out { substance=grain capacity=2 strength=1 }
//!   }
//!   source S rate=4 substance=grain
//!   sink M scope=global
//!   edge S -> P { substance=grain capacity=4 strength=1 }
//!   edge sale: farm.out -> P { substance=grain capacity=3 }
//!   boundary { allow=[grain] conserve=[grain] }
//!   history null
//! }
//! ```
//!
//! `#` starts a comment. Edges without an explicit `name:` get the id
//! `tail->head`. Edges touching a declared `source`, `sink` or `entity` form
//! the interface graph; the rest form the internal network.

mod lexer;
mod parser;
pub(crate) mod printer;

use std::fmt;

use serde::Serialize;

use crate::model::{SystemSpec, DEFAULT_MAX_DEPTH};

pub use printer::print;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// 1-based.
    pub line: usize,
    /// 1-based, counted in characters.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdlDocument {
    pub source_name: String,
    /// Present whenever the text is syntactically well formed, even if the
    /// resulting model fails validation.
    pub root: Option<SystemSpec>,
    pub diagnostics: Vec<Diagnostic>,
}

impl SdlDocument {
    pub fn is_ok(&self) -> bool {
        self.diagnostics.is_empty() && self.root.is_some()
    }

    /// The root spec when parsing and validation both succeeded.
    pub fn into_spec(self) -> Result<SystemSpec, Vec<Diagnostic>> {
        match self.root {
            Some(root) if self.diagnostics.is_empty() => Ok(root),
            _ => Err(self.diagnostics),
        }
    }
}

pub fn parse(text: &str) -> SdlDocument {
    parse_named("<input>", text)
}

pub fn parse_named(source_name: &str, text: &str) -> SdlDocument {
    parse_with(source_name, text, DEFAULT_MAX_DEPTH)
}

pub fn parse_with(source_name: &str, text: &str, max_depth: u32) -> SdlDocument {
    parser::parse_document(source_name, text, max_depth)
}

/// Parses raw bytes; invalid UTF-8 is reported as a diagnostic.
pub fn parse_bytes(source_name: &str, bytes: &[u8], max_depth: u32) -> SdlDocument {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_with(source_name, text, max_depth),
        Err(e) => {
            let prefix = &bytes[..e.valid_up_to()];
            // valid_up_to is a char boundary, so the prefix decodes.
            let before = std::str::from_utf8(prefix).unwrap_or_default();
            let line = before.matches('\n').count() + 1;
            let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            SdlDocument {
                source_name: source_name.to_string(),
                root: None,
                diagnostics: vec![Diagnostic {
                    severity: Severity::Error,
                    line,
                    column,
                    message: "input is not valid UTF-8".into(),
                }],
            }
        }
    }
}
