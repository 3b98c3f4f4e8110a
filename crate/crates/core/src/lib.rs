//! A streaming erasure code built on time-coupled balls-into-bins hashing.
//!
//! Each source symbol (ball) at sequence position `x` is XORed into `l`
//! coded symbols (bins). The first bin is always `floor((1+c)x)`; the rest
//! land near the right end of the coupling window `[(1+c)x, (1+c)(x+w)]` at
//! binomially distributed offsets. The receiver decodes by peeling, mostly
//! left to right, and a lossless channel yields zero decoding latency.
//!
//! Also included: Gilbert-Elliott and memoryless erasure channels, an LT
//! baseline, a GF(2) elimination oracle for small instances, the packet
//! trace format, and the Monte Carlo experiment harness.

pub mod channel;
pub mod decoder;
pub mod edges;
pub mod encoder;
pub mod error;
pub mod experiment;
pub mod gf2;
pub mod lt;
pub mod params;
pub mod report;
pub mod symbol;
pub mod wire;

pub use decoder::{BallStatus, DecodedSymbol, Decoder};
pub use edges::{derive_edge_set, sample_eta, tle_bin, EdgeSet};
pub use encoder::{encode_all, Encoder};
pub use error::{Error, Result};
pub use params::{CodeParams, Overhead};
pub use report::TrialReport;
pub use symbol::{CodedSymbol, SourceSymbol};
