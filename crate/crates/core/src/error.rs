//! Error types shared across the crate.

use thiserror::Error;

/// Reproducible dump attached to hard errors raised inside theorem-guaranteed
/// regions. A failure there is a witness of an implementation bug, not a
/// recoverable condition, so we keep everything needed to replay it.
#[derive(Debug, Clone)]
pub struct FailureDump {
    /// Matrix text of the host tournament (with `n` header line).
    pub tournament: String,
    /// Arc-list text of the pattern tree (with `n` header line).
    pub tree: String,
    /// The vertex ordering in use, space separated.
    pub ordering: String,
    /// Free-form context: which lemma/step failed and the local state.
    pub context: String,
}

impl FailureDump {
    pub fn render(&self) -> String {
        format!(
            "context:\n{}\n--- tournament ---\n{}--- tree ---\n{}--- ordering ---\n{}\n",
            self.context, self.tournament, self.tree, self.ordering
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text; `line` is 1-based when known.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A structural invariant of a value does not hold.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// An operation was called outside its stated precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The host tournament is below every bound an algorithm can certify.
    #[error("no guarantee: {0}")]
    NoGuarantee(String),

    /// Failure inside a theorem-guaranteed region; carries a replay dump.
    #[error("internal hard error: {msg}")]
    Internal { msg: String, dump: Box<FailureDump> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub fn internal(msg: impl Into<String>, dump: FailureDump) -> Self {
        Error::Internal { msg: msg.into(), dump: Box::new(dump) }
    }
}
