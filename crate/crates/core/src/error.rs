use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("attribute index {attribute} is out of range for a schema with {n_attributes} attributes")]
    SchemaMismatch {
        attribute: usize,
        n_attributes: usize,
    },
    #[error("code {code} is not a valid category of attribute `{attribute}` ({domain_size} categories)")]
    InvalidCode {
        attribute: String,
        code: u32,
        domain_size: usize,
    },
    #[error("category `{label}` of attribute `{attribute}` never occurs in the data")]
    InactiveCategory { attribute: String, label: String },
    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),
    #[error("attribute `{attribute}` lists category `{label}` twice")]
    DuplicateLabel { attribute: String, label: String },
    #[error("attribute `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("attribute `{attribute}` has no category `{label}`")]
    UnknownLabel { attribute: String, label: String },
    #[error("a pattern may assign attribute {0} at most once")]
    RepeatedAssignment(usize),
    #[error("dataset must contain at least one row")]
    EmptyDataset,
    #[error("row {row} has {found} values, expected {expected}")]
    RowArity {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("malformed ranking: {0}")]
    MalformedRanking(String),
    #[error("score {column} of row {row} is NaN")]
    InvalidScore { row: usize, column: usize },
    #[error("row {row} has {found} scores, expected {expected}")]
    ScoreArity {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("count cache is stale for {pattern}: counted up to {counted_up_to}, expected {expected}")]
    CacheCoherence {
        pattern: String,
        counted_up_to: usize,
        expected: usize,
    },
    #[error("k-tilde is undefined when alpha * size is zero")]
    UndefinedSchedule,
    #[error("the pattern lattice has {patterns} nodes, above the enumeration cap of {cap}")]
    TooLarge { patterns: u128, cap: u128 },
    #[error("the group is empty")]
    EmptyGroup,
    #[error("exact Shapley values support at most {max} attributes, got {attributes}")]
    ModeUnsupported { attributes: usize, max: usize },
    #[error("background sample is empty")]
    EmptyBackground,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Violations of the bounds configuration against a concrete dataset.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error("k range [{k_min}, {k_max}] is invalid for a dataset of {n_rows} rows")]
    Range {
        k_min: usize,
        k_max: usize,
        n_rows: usize,
    },
    #[error("lower bound schedule decreases at k = {k} ({previous} -> {current})")]
    NonMonotone {
        k: usize,
        previous: u64,
        current: u64,
    },
    #[error("lower bound {bound} at k = {k} exceeds k")]
    BoundExceedsK { k: usize, bound: u64 },
    #[error("lower bound schedule has no value for k = {0}")]
    ScheduleGap(usize),
    #[error("alpha must be positive")]
    NonPositiveAlpha,
    #[error("cannot parse alpha `{0}`")]
    MalformedAlpha(String),
    #[error("size threshold must be at least 1")]
    ZeroThreshold,
    #[error("operation requires {expected} bounds")]
    ModeMismatch { expected: &'static str },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("column `{0}` is not present in the header")]
    MissingColumn(String),
    #[error("column `{column}` row {row}: `{value}` is not a number")]
    NonNumeric {
        column: String,
        row: usize,
        value: String,
    },
    #[error("column `{column}` row {row}: `{value}` is not a positive integer rank")]
    BadRank {
        column: String,
        row: usize,
        value: String,
    },
    #[error("no rank column or score columns were declared")]
    NoRankingColumns,
    #[error("no attribute columns remain after ingestion")]
    NoAttributes,
    #[error("bin count must be at least 1 for column `{0}`")]
    ZeroBins(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the environment (files, streams) rather than of the input's content.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Ingest(IngestError::Io(_)) => true,
            Error::Ingest(IngestError::Csv(e)) => e.is_io_error(),
            _ => false,
        }
    }
}
