//! LT fountain code with the robust soliton degree distribution.
//!
//! Coded symbol `index` carries no neighbor list; both sides regenerate it
//! from `(seed, index)` through the same keyed stream the streaming code
//! uses for its edges.

use crate::edges::KeyedStream;
use crate::error::{Error, Result};
use crate::symbol::{xor_into, CodedSymbol};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LtParams {
    pub k: usize,
    pub soliton_c: f64,
    pub soliton_delta: f64,
    pub seed: u64,
}

impl LtParams {
    pub const DEFAULT_C: f64 = 0.03;
    pub const DEFAULT_DELTA: f64 = 0.5;

    pub fn new(k: usize, soliton_c: f64, soliton_delta: f64, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParams("LT block size must be at least 1".into()));
        }
        if !(soliton_c > 0.0) {
            return Err(Error::InvalidParams(format!("soliton c must be positive, got {soliton_c}")));
        }
        if !(soliton_delta > 0.0 && soliton_delta < 1.0) {
            return Err(Error::InvalidParams(format!("soliton delta must be in (0, 1), got {soliton_delta}")));
        }
        Ok(Self { k, soliton_c, soliton_delta, seed })
    }

    pub fn with_defaults(k: usize, seed: u64) -> Result<Self> {
        Self::new(k, Self::DEFAULT_C, Self::DEFAULT_DELTA, seed)
    }

    /// `R = c ln(k / delta) sqrt(k)`.
    pub fn ripple(&self) -> f64 {
        let k = self.k as f64;
        self.soliton_c * (k / self.soliton_delta).ln() * k.sqrt()
    }

    /// Degree carrying the robust spike, `floor(k / R)` clamped to `1..=k`.
    pub fn spike_degree(&self) -> usize {
        ((self.k as f64 / self.ripple()).floor() as usize).clamp(1, self.k)
    }
}

/// `pmf[d - 1]` is the probability of degree `d`, for `d` in `1..=k`.
pub fn robust_soliton_pmf(params: &LtParams) -> Vec<f64> {
    let k = params.k;
    let kf = k as f64;
    let r = params.ripple();
    let spike = params.spike_degree();
    let mut pmf: Vec<f64> = (1..=k)
        .map(|d| {
            let ideal = if d == 1 { 1.0 / kf } else { 1.0 / (d as f64 * (d as f64 - 1.0)) };
            let robust = if d < spike {
                r / (d as f64 * kf)
            } else if d == spike {
                (r * (r / params.soliton_delta).ln() / kf).max(0.0)
            } else {
                0.0
            };
            ideal + robust
        })
        .collect();
    let total: f64 = pmf.iter().sum();
    for p in &mut pmf {
        *p /= total;
    }
    pmf
}

/// Sampler over the robust soliton distribution.
#[derive(Debug, Clone)]
pub struct Soliton {
    cdf: Vec<f64>,
}

impl Soliton {
    pub fn new(params: &LtParams) -> Self {
        let mut acc = 0.0;
        let cdf = robust_soliton_pmf(params)
            .into_iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cdf }
    }

    /// Inverse-CDF lookup of a uniform draw in `[0, 1)`.
    pub fn sample(&self, u: f64) -> usize {
        let d = self.cdf.partition_point(|&c| c <= u) + 1;
        d.min(self.cdf.len())
    }
}

/// Encoder/decoder shared view of the code: params plus the sampler.
#[derive(Debug, Clone)]
pub struct LtCode {
    pub params: LtParams,
    soliton: Soliton,
}

impl LtCode {
    pub fn new(params: LtParams) -> Self {
        Self { soliton: Soliton::new(&params), params }
    }

    /// Sorted source indices combined into coded symbol `index`.
    ///
    /// The degree comes from the top 53 bits of the first stream word; the
    /// neighbors from Floyd's sampling, with `[0, j]` draws reduced by
    /// multiply-shift.
    pub fn neighbors(&self, index: u64) -> Vec<usize> {
        let mut stream = KeyedStream::new(self.params.seed, index, 0, 0);
        let u = (stream.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let degree = self.soliton.sample(u);
        let k = self.params.k;
        let mut picked = Vec::with_capacity(degree);
        for j in k - degree..k {
            let t = ((stream.next_u64() as u128 * (j as u128 + 1)) >> 64) as usize;
            picked.push(if picked.contains(&t) { j } else { t });
        }
        picked.sort_unstable();
        picked
    }

    pub fn encode_symbol(&self, block: &[Vec<u8>], index: u64) -> Result<CodedSymbol> {
        if block.len() != self.params.k {
            return Err(Error::InvalidParams(format!("block has {} symbols, code expects {}", block.len(), self.params.k)));
        }
        let neighbors = self.neighbors(index);
        let mut payload = block[neighbors[0]].clone();
        for &n in &neighbors[1..] {
            xor_into(&mut payload, &block[n]);
        }
        Ok(CodedSymbol { bin_index: index, payload })
    }
}

/// Coded symbol `index` of `block`.
pub fn lt_encode_symbol(block: &[Vec<u8>], index: u64, params: &LtParams) -> Result<CodedSymbol> {
    LtCode::new(*params).encode_symbol(block, index)
}

/// Block decoding latency of the symbol at position `i`: `k - i`.
pub fn lt_block_latency(k: usize, i: usize) -> usize {
    assert!(i < k, "position {i} outside block of {k}");
    k - i
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LtDecodeResult {
    pub values: Vec<Option<Vec<u8>>>,
    pub success: bool,
}

/// Peels `received` to a fixpoint.
pub fn lt_decode(received: &[CodedSymbol], params: &LtParams) -> LtDecodeResult {
    let mut decoder = LtDecoder::new(LtCode::new(*params));
    for sym in received {
        decoder.push(sym.clone());
    }
    decoder.into_result()
}

struct Pending {
    remaining: Vec<usize>,
    payload: Vec<u8>,
}

/// Incremental peeling decoder.
pub struct LtDecoder {
    code: LtCode,
    symbols: Vec<Pending>,
    by_ball: Vec<Vec<usize>>,
    values: Vec<Option<Vec<u8>>>,
    decoded: usize,
    queue: Vec<usize>,
}

impl LtDecoder {
    pub fn new(code: LtCode) -> Self {
        let k = code.params.k;
        Self { code, symbols: Vec::new(), by_ball: vec![Vec::new(); k], values: vec![None; k], decoded: 0, queue: Vec::new() }
    }

    pub fn decoded(&self) -> usize {
        self.decoded
    }

    pub fn is_complete(&self) -> bool {
        self.decoded == self.code.params.k
    }

    /// Adds one coded symbol; returns how many source symbols it unlocked.
    pub fn push(&mut self, symbol: CodedSymbol) -> usize {
        let before = self.decoded;
        let mut payload = symbol.payload;
        let mut remaining = Vec::new();
        for n in self.code.neighbors(symbol.bin_index) {
            match &self.values[n] {
                Some(v) => xor_into(&mut payload, v),
                None => remaining.push(n),
            }
        }
        if remaining.is_empty() {
            return 0;
        }
        let id = self.symbols.len();
        for &n in &remaining {
            self.by_ball[n].push(id);
        }
        if remaining.len() == 1 {
            self.queue.push(id);
        }
        self.symbols.push(Pending { remaining, payload });
        self.peel();
        self.decoded - before
    }

    fn peel(&mut self) {
        while let Some(id) = self.queue.pop() {
            if self.symbols[id].remaining.len() != 1 {
                continue;
            }
            let ball = self.symbols[id].remaining[0];
            let value = std::mem::take(&mut self.symbols[id].payload);
            self.symbols[id].remaining.clear();
            for other in std::mem::take(&mut self.by_ball[ball]) {
                if other == id {
                    continue;
                }
                let pending = &mut self.symbols[other];
                if let Some(pos) = pending.remaining.iter().position(|&n| n == ball) {
                    pending.remaining.swap_remove(pos);
                    xor_into(&mut pending.payload, &value);
                    if pending.remaining.len() == 1 {
                        self.queue.push(other);
                    }
                }
            }
            self.values[ball] = Some(value);
            self.decoded += 1;
        }
    }

    pub fn into_result(self) -> LtDecodeResult {
        let success = self.is_complete();
        LtDecodeResult { values: self.values, success }
    }
}

/// Number of coded symbols, taken in index order over a lossless channel,
/// that a fresh decoder needs before every source symbol is recovered.
/// Gives up and returns `None` after `limit` symbols.
pub fn symbols_to_decode(params: &LtParams, limit: u64) -> Option<u64> {
    let code = LtCode::new(*params);
    let mut decoder = LtDecoder::new(code);
    for index in 0..limit {
        decoder.push(CodedSymbol { bin_index: index, payload: Vec::new() });
        if decoder.is_complete() {
            return Some(index + 1);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_basic_shapes() {
        let one = LtParams::with_defaults(1, 0).unwrap();
        assert_eq!(robust_soliton_pmf(&one), vec![1.0]);
        let p = LtParams::with_defaults(400, 0).unwrap();
        let pmf = robust_soliton_pmf(&p);
        assert_eq!(pmf.len(), 400);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(pmf.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(LtParams::new(0, 0.03, 0.5, 0).is_err());
        assert!(LtParams::new(10, 0.0, 0.5, 0).is_err());
        assert!(LtParams::new(10, 0.03, 1.0, 0).is_err());
    }

    #[test]
    fn degree_one_symbol_copies_its_neighbor() {
        let params = LtParams::with_defaults(50, 4).unwrap();
        let code = LtCode::new(params);
        let block: Vec<Vec<u8>> = (0..50u8).map(|i| vec![i, i.wrapping_mul(7)]).collect();
        let mut seen = 0;
        for index in 0..500 {
            let n = code.neighbors(index);
            if n.len() == 1 {
                assert_eq!(code.encode_symbol(&block, index).unwrap().payload, block[n[0]]);
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn singletons_decode_everything() {
        let params = LtParams::with_defaults(30, 1).unwrap();
        let code = LtCode::new(params);
        let block: Vec<Vec<u8>> = (0..30u8).map(|i| vec![i]).collect();
        let singles: Vec<CodedSymbol> = (0..10_000)
            .filter(|&i| code.neighbors(i).len() == 1)
            .map(|i| code.encode_symbol(&block, i).unwrap())
            .collect();
        // keep one per source index
        let mut by_ball: Vec<Option<CodedSymbol>> = vec![None; 30];
        for s in singles {
            let n = code.neighbors(s.bin_index)[0];
            by_ball[n].get_or_insert(s);
        }
        let received: Vec<CodedSymbol> = by_ball.into_iter().map(Option::unwrap).collect();
        let result = lt_decode(&received, &params);
        assert!(result.success);
        assert_eq!(result.values[17], Some(vec![17]));
        assert!(!lt_decode(&[], &params).success);
        assert_eq!(lt_decode(&[], &params).values.iter().filter(|v| v.is_some()).count(), 0);
    }

    #[test]
    fn block_latency() {
        assert_eq!(lt_block_latency(400, 0), 400);
        assert_eq!(lt_block_latency(400, 399), 1);
        assert_eq!(lt_block_latency(400, 200), 200);
    }

    #[test]
    fn lossless_decode_eventually_succeeds() {
        let params = LtParams::with_defaults(100, 3).unwrap();
        let n = symbols_to_decode(&params, 10_000).unwrap();
        assert!(n >= 100);
    }
}
