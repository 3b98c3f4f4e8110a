//! Sliding-window peeling decoder.
//!
//! Bins arrive in ascending index order, each either received or erased.
//! When bin `z` is consumed the decoder first admits every ball whose leading
//! edge is `<= z` (there is at most one new one, the leading edges being
//! injective), registering that ball in the degree counters of all its bins,
//! including bins that have not arrived yet. Each bin also keeps the XOR of
//! the positions of its undecoded balls, so a bin of residual degree one
//! names its last ball directly.
//!
//! Balls decoded before one of their bins arrives are XORed into that bin's
//! accumulator; the received payload is folded in on arrival.

use std::collections::VecDeque;

use crate::edges::{derive_edge_set, tle_bin, EdgeSet};
use crate::error::{Error, Result};
use crate::params::CodeParams;
use crate::report::{mean, percentile, TrialReport};
use crate::symbol::{xor_into, CodedSymbol};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BallStatus {
    Undecoded,
    Decoded { latency: f64 },
    /// Every bin of the ball was erased.
    ErrorFloor,
    /// Part of a small stopping set confined to less than one window.
    Isolated,
    /// Undecoded behind a peeling stall.
    Stalled,
}

/// A ball recovered by the decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedSymbol {
    pub position: u64,
    pub payload: Vec<u8>,
    pub latency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinState {
    Pending,
    Received,
    Erased,
}

#[derive(Debug, Clone)]
struct BinSlot {
    state: BinState,
    degree: u32,
    id_xor: u64,
    /// Empty means all zeros.
    payload: Vec<u8>,
}

impl BinSlot {
    fn pending() -> Self {
        Self { state: BinState::Pending, degree: 0, id_xor: 0, payload: Vec::new() }
    }

    fn is_dead(&self) -> bool {
        match self.state {
            BinState::Pending => false,
            BinState::Erased => true,
            BinState::Received => self.degree == 0,
        }
    }

    fn absorb(&mut self, data: &[u8]) {
        if self.payload.is_empty() {
            self.payload.extend_from_slice(data);
        } else {
            xor_into(&mut self.payload, data);
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decoder {
    params: CodeParams,
    total_balls: u64,
    next_bin: u64,
    next_ball: u64,
    bin_base: u64,
    bins: VecDeque<BinSlot>,
    ball_base: u64,
    /// Edge sets of admitted balls, `None` once decoded.
    open_balls: VecDeque<Option<EdgeSet>>,
    status: Vec<BallStatus>,
    erased: Vec<u64>,
    queue: Vec<u64>,
    max_bin: u64,
    peel_ops: u64,
    bins_received: u64,
}

impl Decoder {
    /// A decoder for a stream of `total_balls` source symbols.
    pub fn new(params: CodeParams, total_balls: u64) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            total_balls,
            next_bin: 0,
            next_ball: 0,
            bin_base: 0,
            bins: VecDeque::new(),
            ball_base: 0,
            open_balls: VecDeque::new(),
            status: vec![BallStatus::Undecoded; total_balls as usize],
            erased: Vec::new(),
            queue: Vec::new(),
            max_bin: 0,
            peel_ops: 0,
            bins_received: 0,
        })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    /// Index of the next bin the decoder expects.
    pub fn next_bin(&self) -> u64 {
        self.next_bin
    }

    /// Highest bin index any ball reaches, once every ball has been admitted.
    pub fn last_bin(&self) -> Option<u64> {
        (self.next_ball == self.total_balls && self.total_balls > 0).then_some(self.max_bin)
    }

    /// True once every ball is admitted and every bin up to the last one has
    /// been received or erased.
    pub fn is_complete(&self) -> bool {
        self.next_ball == self.total_balls && (self.total_balls == 0 || self.next_bin > self.max_bin)
    }

    pub fn ball_status(&self, position: u64) -> Option<BallStatus> {
        self.status.get(position as usize).copied()
    }

    pub fn peel_ops(&self) -> u64 {
        self.peel_ops
    }

    /// Consumes a received bin and returns the balls it unlocked. Bins
    /// skipped since the last call are treated as erased.
    pub fn push(&mut self, symbol: CodedSymbol) -> Result<Vec<DecodedSymbol>> {
        let mut out = Vec::new();
        self.push_into(symbol, &mut out)?;
        Ok(out)
    }

    /// Like [`Decoder::push`], appending to a caller-owned buffer.
    pub fn push_into(&mut self, symbol: CodedSymbol, out: &mut Vec<DecodedSymbol>) -> Result<()> {
        let z = symbol.bin_index;
        self.check_next(z)?;
        if symbol.payload.len() != self.params.symbol_size {
            return Err(Error::PayloadLength { expected: self.params.symbol_size, got: symbol.payload.len() });
        }
        while self.next_bin < z {
            self.consume(self.next_bin, None, out);
        }
        self.consume(z, Some(symbol.payload), out);
        Ok(())
    }

    /// Records bin `bin_index` as lost. Bins skipped before it are lost too.
    pub fn mark_erased(&mut self, bin_index: u64) -> Result<()> {
        self.check_next(bin_index)?;
        let mut sink = Vec::new();
        while self.next_bin <= bin_index {
            self.consume(self.next_bin, None, &mut sink);
        }
        debug_assert!(sink.is_empty());
        Ok(())
    }

    /// Marks every bin not yet seen, through the end of the stream, as lost.
    pub fn close(&mut self) {
        let mut sink = Vec::new();
        while !self.is_complete() {
            self.consume(self.next_bin, None, &mut sink);
        }
    }

    fn check_next(&self, z: u64) -> Result<()> {
        if z < self.next_bin {
            if z + 1 == self.next_bin {
                return Err(Error::DuplicateBin(z));
            }
            return Err(Error::NonAscendingBin { next: self.next_bin, got: z });
        }
        Ok(())
    }

    fn slot(&mut self, bin: u64) -> &mut BinSlot {
        let offset = (bin - self.bin_base) as usize;
        if self.bins.len() <= offset {
            self.bins.resize_with(offset + 1, BinSlot::pending);
        }
        &mut self.bins[offset]
    }

    fn admit_through(&mut self, z: u64) {
        while self.next_ball < self.total_balls && tle_bin(self.next_ball, &self.params) <= z {
            let x = self.next_ball;
            let edges = derive_edge_set(x, &self.params);
            for &bin in edges.bins() {
                let slot = self.slot(bin);
                slot.degree += 1;
                slot.id_xor ^= x;
            }
            self.max_bin = self.max_bin.max(edges.max_bin());
            self.open_balls.push_back(Some(edges));
            self.next_ball += 1;
        }
    }

    fn consume(&mut self, z: u64, payload: Option<Vec<u8>>, out: &mut Vec<DecodedSymbol>) {
        self.admit_through(z);
        let slot = self.slot(z);
        match payload {
            Some(data) => {
                slot.state = BinState::Received;
                if slot.payload.is_empty() {
                    slot.payload = data;
                } else {
                    xor_into(&mut slot.payload, &data);
                }
                let ready = slot.degree == 1;
                self.bins_received += 1;
                if ready {
                    self.queue.push(z);
                }
            }
            None => {
                slot.state = BinState::Erased;
                slot.payload = Vec::new();
                self.erased.push(z);
            }
        }
        self.next_bin = z + 1;
        self.peel(z, out);
        self.collect_garbage();
    }

    fn peel(&mut self, z: u64, out: &mut Vec<DecodedSymbol>) {
        while let Some(bin) = self.queue.pop() {
            if bin < self.bin_base {
                continue;
            }
            let slot = self.slot(bin);
            if slot.degree != 1 {
                continue;
            }
            let x = slot.id_xor;
            let payload = std::mem::take(&mut slot.payload);
            let payload = if payload.is_empty() { vec![0; self.params.symbol_size] } else { payload };
            self.peel_ops += 1;
            let edges = self.open_balls[(x - self.ball_base) as usize]
                .take()
                .expect("degree-one bin names an open ball");
            for &other in edges.bins() {
                if other < self.bin_base {
                    continue;
                }
                let slot = self.slot(other);
                slot.degree -= 1;
                slot.id_xor ^= x;
                if other == bin || slot.state == BinState::Erased {
                    continue;
                }
                slot.absorb(&payload);
                let ready = slot.state == BinState::Received && slot.degree == 1;
                self.peel_ops += 1;
                if ready {
                    self.queue.push(other);
                }
            }
            let latency = self.params.overhead.latency(z, x);
            self.status[x as usize] = BallStatus::Decoded { latency };
            out.push(DecodedSymbol { position: x, payload, latency });
        }
    }

    fn collect_garbage(&mut self) {
        while self.bin_base < self.next_bin && self.bins.front().is_some_and(BinSlot::is_dead) {
            self.bins.pop_front();
            self.bin_base += 1;
        }
        while let Some(None) = self.open_balls.front() {
            self.open_balls.pop_front();
            self.ball_base += 1;
        }
    }

    /// Residual degree and payload of every received bin still in scope.
    /// Bins dropped from the window have residual degree zero.
    pub fn residual_bins(&self) -> impl Iterator<Item = (u64, u32, &[u8])> + '_ {
        self.bins.iter().enumerate().filter_map(move |(i, slot)| {
            (slot.state == BinState::Received).then_some((self.bin_base + i as u64, slot.degree, slot.payload.as_slice()))
        })
    }

    fn is_received(&self, bin: u64) -> bool {
        bin >= self.bin_base
            && self
                .bins
                .get((bin - self.bin_base) as usize)
                .is_some_and(|slot| slot.state == BinState::Received)
    }

    /// Classifies the undecoded balls. Two undecoded balls are linked when
    /// they share a received bin. A linked group of fewer than `w` balls is
    /// a local stopping set; a group that large blocks a whole window and
    /// counts as a stall.
    fn classify_open(&self) -> Vec<(u64, BallStatus)> {
        let open: Vec<&EdgeSet> = self.open_balls.iter().flatten().collect();
        let mut parent: Vec<usize> = (0..open.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let mut owner = std::collections::HashMap::new();
        let mut any_received = vec![false; open.len()];
        for (i, edges) in open.iter().enumerate() {
            for &bin in edges.bins() {
                if !self.is_received(bin) {
                    continue;
                }
                any_received[i] = true;
                let j = *owner.entry(bin).or_insert(i);
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
        let mut size = vec![0u64; open.len()];
        for i in 0..open.len() {
            size[find(&mut parent, i)] += 1;
        }
        open.iter()
            .enumerate()
            .map(|(i, edges)| {
                let status = if !any_received[i] {
                    BallStatus::ErrorFloor
                } else if size[find(&mut parent, i)] < self.params.window {
                    BallStatus::Isolated
                } else {
                    BallStatus::Stalled
                };
                (edges.ball, status)
            })
            .collect()
    }

    /// Final classification of every ball; fails before the stream is done.
    pub fn final_statuses(&self) -> Result<Vec<BallStatus>> {
        self.ensure_complete()?;
        let mut statuses = self.status.clone();
        for (x, status) in self.classify_open() {
            statuses[x as usize] = status;
        }
        Ok(statuses)
    }

    fn ensure_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::StreamIncomplete { next_bin: self.next_bin, last_bin: self.last_bin() })
        }
    }

    /// Summarises the trial; see [`BallStatus`] for the classes of
    /// undecoded balls.
    pub fn finalize_report(&self) -> Result<TrialReport> {
        self.ensure_complete()?;
        let mut latencies = Vec::with_capacity(self.status.len());
        for status in &self.status {
            if let BallStatus::Decoded { latency } = status {
                latencies.push(*latency);
            }
        }
        let (mut error_floor_balls, mut isolated_balls, mut stalled_balls) = (0u64, 0u64, 0u64);
        for (_, status) in self.classify_open() {
            match status {
                BallStatus::ErrorFloor => error_floor_balls += 1,
                BallStatus::Isolated => isolated_balls += 1,
                _ => stalled_balls += 1,
            }
        }
        Ok(TrialReport {
            total_balls: self.total_balls,
            decoded: latencies.len() as u64,
            error_floor_balls,
            isolated_balls,
            stalled_balls,
            stall_occurred: stalled_balls > 0,
            avg_latency: mean(&latencies),
            p95_latency: percentile(&latencies, 0.95),
            latencies,
            bins_sent: self.next_bin,
            bins_received: self.bins_received,
            peel_ops: self.peel_ops,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::encode_all;
    use crate::params::Overhead;

    fn params() -> CodeParams {
        CodeParams::new(Overhead::new(1, 5).unwrap(), 600, 4, 11, 2).unwrap()
    }

    #[test]
    fn latency_example() {
        let c = Overhead::new(1, 5).unwrap();
        assert_eq!(c.latency(132, 100), 10.0);
    }

    #[test]
    fn rejects_duplicates_and_reordering() {
        let p = params();
        let mut dec = Decoder::new(p, 10).unwrap();
        dec.push(CodedSymbol { bin_index: 0, payload: vec![0; 2] }).unwrap();
        dec.push(CodedSymbol { bin_index: 3, payload: vec![0; 2] }).unwrap();
        assert_eq!(dec.push(CodedSymbol { bin_index: 3, payload: vec![0; 2] }), Err(Error::DuplicateBin(3)));
        assert!(matches!(
            dec.push(CodedSymbol { bin_index: 1, payload: vec![0; 2] }),
            Err(Error::NonAscendingBin { next: 4, got: 1 })
        ));
        assert!(matches!(dec.mark_erased(2), Err(Error::NonAscendingBin { .. })));
        assert!(matches!(dec.finalize_report(), Err(Error::StreamIncomplete { .. })));
    }

    #[test]
    fn lossless_stream_has_zero_latency() {
        let p = params();
        let payloads: Vec<[u8; 2]> = (0..3000u16).map(|i| i.to_le_bytes()).collect();
        let coded = encode_all(p, payloads.iter().map(|p| &p[..])).unwrap();
        let mut dec = Decoder::new(p, 3000).unwrap();
        for sym in coded {
            let z = sym.bin_index;
            for d in dec.push(sym).unwrap() {
                assert_eq!(tle_bin(d.position, &p), z);
                assert_eq!(d.latency, 0.0);
                assert_eq!(d.payload, payloads[d.position as usize]);
            }
        }
        let report = dec.finalize_report().unwrap();
        assert_eq!(report.decoded, 3000);
        assert!(!report.stall_occurred);
        assert_eq!(report.avg_latency, 0.0);
        assert!(report.peel_ops_per_symbol() <= 5.0);
    }

    #[test]
    fn everything_erased_decodes_nothing() {
        let p = params();
        let mut dec = Decoder::new(p, 50).unwrap();
        dec.close();
        let report = dec.finalize_report().unwrap();
        assert_eq!(report.decoded, 0);
        assert_eq!(report.error_floor_balls, 50);
        assert!(!report.stall_occurred);
        assert_eq!(report.bins_received, 0);
    }

    #[test]
    fn empty_stream_is_complete() {
        let dec = Decoder::new(params(), 0).unwrap();
        let report = dec.finalize_report().unwrap();
        assert_eq!(report.total_balls, 0);
        assert_eq!(report.bins_sent, 0);
    }
}
