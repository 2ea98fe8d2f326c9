//! The declaration language for topics, nodes and RTA modules.
//!
//! ```text
//! program   := item*
//! item      := topic | ["plant"] node | rta
//! topic     := "topic" NAME ":" type ["=" literal] ";"
//! type      := "bool" | "scalar" | "float" | "coord" | "vector" "(" INT ")"
//!            | "enum" "{" NAME ("," NAME)* "}"
//! node      := "node" NAME "{" node_field* "}"
//! node_field:= "period" INT ";" | "phase" INT ";" | "fun" NAME ";"
//!            | "subscribes" names ";" | "publishes" names ";"
//! rta       := "rta" NAME "{" rta_field* "}"
//! rta_field := ("ac" | "sc" | "dm" | "state") NAME ";" | "period" INT ";"
//!            | ("safe" | "safer" | "ttf" | "reach") "fun" NAME ";"
//! literal   := ["-"] NUMBER | "true" | "false" | "[" numbers "]" | NAME
//! ```
//!
//! `//` starts a comment. Periods are in ticks. An `rta` block names the
//! tuple (AC, SC, Δ, φ_safe, φ_safer, ttf): `period` is Δ, `state` is the
//! topic the decision module reads, and each `fun` names a function in the
//! [`Registry`]. `dm` (default `<name>_dm`) and `reach` are optional.

mod ast;
mod elaborate;
mod lexer;
mod parser;
mod printer;
pub mod scenario;

use std::fmt;

pub use ast::{Ident, Item, Literal, NodeItem, Pos, Program, RtaItem, TopicItem, TypeExpr};
pub use elaborate::{elaborate, ElaborateOptions, NodeBody, ReachBinding, Registry};
pub use parser::parse;
pub use printer::pretty;

/// Reserved words; field names such as `ac` or `state` are contextual.
pub const KEYWORDS: [&str; 7] = ["topic", "node", "rta", "period", "publishes", "subscribes", "fun"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    SyntaxError,
    UnresolvedReference,
    DuplicateName,
    UnboundFunction,
    TypeMismatch,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::SyntaxError => "syntax-error",
            DiagnosticKind::UnresolvedReference => "unresolved-reference",
            DiagnosticKind::DuplicateName => "duplicate-name",
            DiagnosticKind::UnboundFunction => "unbound-function",
            DiagnosticKind::TypeMismatch => "type-mismatch",
        })
    }
}

/// An error tied to a source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub pos: Pos,
    pub message: String,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, pos: Pos, message: impl Into<String>) -> Self {
        Self { kind, pos, message: message.into() }
    }

    pub fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        Self::new(DiagnosticKind::SyntaxError, pos, message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.pos, self.kind, self.message)
    }
}

impl std::error::Error for Diagnostic {}

#[cfg(test)]
mod tests;
