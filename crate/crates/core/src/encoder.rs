//! Streaming encoder.
//!
//! After ball `t` is pushed, every bin below `floor((1+c)(t+1))` is final:
//! ball `t + 1` and all later balls land at or above that index. Those bins
//! are released immediately, so the leading-edge bin of `t` leaves together
//! with `t` itself.

use std::collections::VecDeque;

use crate::edges::{derive_edge_set, tle_bin};
use crate::error::{Error, Result};
use crate::params::CodeParams;
use crate::symbol::{xor_into, CodedSymbol, SourceSymbol};

#[derive(Debug, Clone)]
pub struct Encoder {
    params: CodeParams,
    next_ball: u64,
    /// Index of `active[0]`; everything below has been released.
    watermark: u64,
    active: VecDeque<Vec<u8>>,
    max_bin: Option<u64>,
}

impl Encoder {
    pub fn new(params: CodeParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, next_ball: 0, watermark: 0, active: VecDeque::new(), max_bin: None })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn next_position(&self) -> u64 {
        self.next_ball
    }

    /// Highest released bin index plus one.
    pub fn released_watermark(&self) -> u64 {
        self.watermark
    }

    /// Adds the next ball and returns the bins it finalized, in index order.
    pub fn push(&mut self, symbol: &SourceSymbol) -> Result<Vec<CodedSymbol>> {
        if symbol.position != self.next_ball {
            return Err(Error::OutOfOrder { expected: self.next_ball, got: symbol.position });
        }
        self.push_payload(&symbol.payload)
    }

    /// Like [`Encoder::push`], taking the position from the internal counter.
    pub fn push_payload(&mut self, payload: &[u8]) -> Result<Vec<CodedSymbol>> {
        if payload.len() != self.params.symbol_size {
            return Err(Error::PayloadLength { expected: self.params.symbol_size, got: payload.len() });
        }
        let x = self.next_ball;
        let edges = derive_edge_set(x, &self.params);
        for &bin in edges.bins() {
            assert!(bin >= self.watermark, "bin {bin} of ball {x} was already released");
            let slot = self.slot_mut(bin);
            xor_into(slot, payload);
        }
        let top = edges.max_bin();
        self.max_bin = Some(self.max_bin.map_or(top, |m| m.max(top)));
        self.next_ball += 1;
        Ok(self.release_below(tle_bin(self.next_ball, &self.params)))
    }

    /// Emits every remaining bin up to the highest index any ball reached.
    /// Untouched bins inside that range go out as all-zero payloads so the
    /// index sequence on the wire has no gaps.
    pub fn flush(mut self) -> Vec<CodedSymbol> {
        match self.max_bin {
            Some(top) => self.release_below(top + 1),
            None => Vec::new(),
        }
    }

    fn slot_mut(&mut self, bin: u64) -> &mut Vec<u8> {
        let offset = (bin - self.watermark) as usize;
        while self.active.len() <= offset {
            self.active.push_back(vec![0; self.params.symbol_size]);
        }
        &mut self.active[offset]
    }

    fn release_below(&mut self, limit: u64) -> Vec<CodedSymbol> {
        let mut out = Vec::with_capacity(limit.saturating_sub(self.watermark) as usize);
        while self.watermark < limit {
            let payload = self
                .active
                .pop_front()
                .unwrap_or_else(|| vec![0; self.params.symbol_size]);
            out.push(CodedSymbol { bin_index: self.watermark, payload });
            self.watermark += 1;
        }
        out
    }
}

/// Encodes a whole stream at once: every released bin followed by the flush.
pub fn encode_all<'a, I>(params: CodeParams, payloads: I) -> Result<Vec<CodedSymbol>>
where
    I: IntoIterator<Item = &'a [u8]>,
{
    let mut encoder = Encoder::new(params)?;
    let mut out = Vec::new();
    for payload in payloads {
        out.extend(encoder.push_payload(payload)?);
    }
    out.extend(encoder.flush());
    Ok(out)
}
