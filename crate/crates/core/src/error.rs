use std::fmt;

use thiserror::Error;

/// Location of a token or proposition in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    /// Byte offset of the first character.
    pub start: usize,
    /// Byte offset one past the last character.
    pub end: usize,
    /// 1-based line.
    pub line: usize,
    /// 1-based column, counted in characters.
    pub column: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// Smallest span covering both `self` and `other`.
    pub fn join(&self, other: &Span) -> Span {
        let (first, _) = if self.start <= other.start { (self, other) } else { (other, self) };
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
            line: first.line,
            column: first.column,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CnlError {
    #[error("illegal character {0:?}")]
    IllegalCharacter(char),
    #[error("expected {expected}, found {found}")]
    Syntax { expected: String, found: String },
    #[error("proposition is not terminated by '.'")]
    UnterminatedProposition,

    #[error("conflicting definitions of `{0}`")]
    ConflictingSignature(String),
    #[error("temporal concept `{0}` has an empty range")]
    EmptyRange(String),
    #[error("the range of temporal concept `{0}` is not a multiple of its step")]
    MisalignedStep(String),
    #[error("`{concept}` has no attribute `{attribute}`")]
    UnknownAttribute { concept: String, attribute: String },
    #[error("`{predicate}` is used with {found} arguments but was defined with {expected}")]
    ArityConflict { predicate: String, expected: usize, found: usize },
    #[error("list of {found} values given where {expected} are required")]
    LengthMismatch { expected: usize, found: usize },
    #[error("where clause refers to `{0}`, which does not occur in the proposition")]
    UnboundWhereVariable(String),
    #[error("`{concept}` requires a value for `{attribute}`")]
    MissingAttribute { concept: String, attribute: String },
    #[error("fact contains the variable `{0}`")]
    NonGroundFact(String),
    #[error("a choice cannot mix `must` and `can`")]
    MixedModality,
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("`{0}` is used before it is defined")]
    UndefinedSignature(String),
    #[error("attribute `{0}` is not numeric and cannot be summed")]
    NonNumericSum(String),
    #[error("the weak constraint is both maximized and minimized")]
    ConflictingDirections,
    #[error("`{label}` is not a value of temporal concept `{concept}`")]
    LabelOutOfRange { concept: String, label: String },
    #[error("a window of {length} exceeds the range of `{concept}`")]
    WindowExceedsRange { concept: String, length: i64 },
    #[error("unsafe rule `{rule}`: unbound variables {variables:?}")]
    UnsafeRule { rule: String, variables: Vec<String> },
    #[error("unsupported construction: {0}")]
    Unsupported(String),
}

impl CnlError {
    /// Errors raised before any semantic analysis.
    pub fn is_syntactic(&self) -> bool {
        matches!(
            self,
            CnlError::IllegalCharacter(_) | CnlError::Syntax { .. } | CnlError::UnterminatedProposition
        )
    }
}

/// An error attached to the source location it was raised for.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {error}")]
pub struct Diagnostic {
    pub span: Span,
    pub error: CnlError,
}

impl Diagnostic {
    pub fn new(span: Span, error: CnlError) -> Self {
        Diagnostic { span, error }
    }
}
