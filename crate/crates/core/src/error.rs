use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("point is not on the lattice: {0}")]
    NotOnLattice(String),
    #[error("hint coordinate {value} at block {block}, index {index} is out of range")]
    HintOutOfRange {
        block: usize,
        index: usize,
        value: u32,
    },
    #[error("length mismatch for {what}: expected {expected} bytes, got {actual}")]
    Length {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("malformed {what}: {reason}")]
    Malformed { what: &'static str, reason: String },
    #[error("distribution support of {size} entries exceeds the cap of {cap}")]
    SupportOverflow { size: usize, cap: usize },
    #[error("enumeration of {size} noise vectors exceeds the budget of {budget}")]
    EnumerationBudget { size: u64, budget: u64 },
    #[error("no feasible attack parameters in the search grid")]
    NoFeasibleAttack,
    #[error("block size {0} is below the validity range of the BKZ model")]
    BlockSizeTooSmall(u32),
}

pub type Result<T> = std::result::Result<T, Error>;
