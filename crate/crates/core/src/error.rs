use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("invalid column name `{0}` (expected [A-Za-z_][A-Za-z0-9_.]*)")]
    InvalidName(String),
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{column}` has {found} cells, expected {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("cell {row} of column `{column}` does not match the column kind")]
    KindMismatch { column: String, row: usize },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("row index {row} out of bounds for table with {row_count} rows")]
    RowOutOfBounds { row: usize, row_count: usize },
    #[error("row indices must be strictly increasing (position {position})")]
    UnorderedRows { position: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at offset {offset}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the parsed text.
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Type,
    Duplicate,
    UnknownFunction,
    Arity,
}

impl std::fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::Type => "type error",
            ParseErrorKind::Duplicate => "duplicate name",
            ParseErrorKind::UnknownFunction => "unknown function",
            ParseErrorKind::Arity => "arity error",
        })
    }
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, offset: usize, message: impl Into<String>) -> Self {
        ParseError {
            kind,
            offset,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(
        "target group {label} has rows disagreeing on `{variable}` ({first} vs {other}); \
         the collapsing variable must be constant within each target group"
    )]
    NonFunctional {
        label: String,
        variable: String,
        first: String,
        other: String,
    },
    #[error(
        "level {level} does not coarsen level {previous}: `{child}` maps to both `{parent}` and `{other_parent}`"
    )]
    NotNested {
        level: usize,
        previous: usize,
        child: String,
        parent: String,
        other_parent: String,
    },
    #[error("scheme table column `{column}`: child `{child}` has two parents `{parent}` and `{other_parent}`")]
    ChildParent {
        column: String,
        child: String,
        parent: String,
        other_parent: String,
    },
    #[error("scheme table has a missing value in column `{column}` at row {row}")]
    NullCell { column: String, row: usize },
    #[error("scheme table needs at least 2 columns, found {0}")]
    TooFewColumns(usize),
    #[error("invalid code list: {0}")]
    InvalidCodes(String),
}

#[derive(Debug, Error)]
pub enum AggError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("output name `{0}` clashes with a grouping variable, the level column or another output")]
    NameClash(String),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Aggregation(#[from] AggError),
    #[error(
        "test returned NA for group {label} at collapse level {level}: {reason} \
         (run the smoke test to find the edge case)"
    )]
    Indeterminate {
        label: String,
        level: usize,
        reason: String,
    },
    #[error("test failed with an error for group {label} at collapse level {level}: {message}")]
    Predicate {
        label: String,
        level: usize,
        message: String,
    },
    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}
