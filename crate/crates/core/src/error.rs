use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("source symbol out of order: expected position {expected}, got {got}")]
    OutOfOrder { expected: u64, got: u64 },
    #[error("payload length {got} does not match symbol size {expected}")]
    PayloadLength { expected: usize, got: usize },
    #[error("duplicate bin index {0}")]
    DuplicateBin(u64),
    #[error("bin index {got} is not ascending (next expected index is {next})")]
    NonAscendingBin { next: u64, got: u64 },
    #[error("stream not fully consumed: next bin {next_bin}, last bin {last_bin:?}")]
    StreamIncomplete { next_bin: u64, last_bin: Option<u64> },
    #[error("instance with {balls} balls exceeds the oracle bound of {bound}")]
    InstanceTooLarge { balls: usize, bound: usize },
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("malformed trace: {0}")]
    Trace(String),
}

pub type Result<T> = std::result::Result<T, Error>;
