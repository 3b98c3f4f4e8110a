//! Hash-defined Tanner graph: the `l` bins each ball is thrown into.
//!
//! Ball `x` always lands its leading edge on bin `floor((1+c)x)`. The other
//! `l - 1` edges land at `floor((1+c)(x+w)) - eta_i`, with
//! `eta_i ~ Binomial(floor((1+c)w), 2^-(i-1))` drawn from a counter-based
//! keyed stream. Everything is a pure function of `(params, x)`, so the
//! encoder and decoder never exchange graph structure.

use crate::params::{CodeParams, MAX_EDGES};

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Redraws allowed for a colliding edge before falling back to probing.
pub const MAX_ATTEMPTS: u32 = 64;

#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-mode stream keyed by `(seed, ball, edge, attempt)`.
#[derive(Debug, Clone)]
pub struct KeyedStream {
    key: u64,
    counter: u64,
}

impl KeyedStream {
    pub fn new(seed: u64, ball: u64, edge: u32, attempt: u32) -> Self {
        let k0 = mix64(seed.wrapping_add(GAMMA));
        let k1 = mix64(k0 ^ ball);
        let key = mix64(k1 ^ ((edge as u64) << 32 | attempt as u64));
        Self { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Number of zero bits among the next `trials` bits of the stream.
    #[inline]
    fn count_zero_bits(&mut self, trials: u64) -> u64 {
        let mut remaining = trials;
        let mut zeros = 0u64;
        while remaining > 0 {
            let word = self.next_u64();
            let take = remaining.min(64);
            let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
            zeros += (!word & mask).count_ones() as u64;
            remaining -= take;
        }
        zeros
    }
}

/// `floor((1 + c) x)`: the bin hit by ball `x`'s leading edge.
#[inline]
pub fn tle_bin(x: u64, params: &CodeParams) -> u64 {
    params.overhead.scale_floor(x)
}

/// Draws `eta_i` for edge `i` (1-based, `2..=l`) of ball `x`.
///
/// A Bernoulli(2^-(i-1)) trial succeeds when its `i - 1` bits are all zero.
/// Bits are consumed level by level: the survivors of the first bit are
/// tested on a second bit, and so on, which is the same distribution as
/// testing every field in full.
pub fn sample_eta(x: u64, edge: usize, attempt: u32, params: &CodeParams) -> u64 {
    debug_assert!(edge >= 2 && edge <= params.edges);
    let mut stream = KeyedStream::new(params.seed, x, edge as u32, attempt);
    let mut survivors = params.window_bins();
    for _ in 1..edge {
        if survivors == 0 {
            break;
        }
        survivors = stream.count_zero_bits(survivors);
    }
    survivors
}

/// The `l` distinct bins of one ball. `bins()[0]` is the leading edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeSet {
    pub ball: u64,
    bins: [u64; MAX_EDGES],
    len: u8,
}

impl EdgeSet {
    #[inline]
    pub fn bins(&self) -> &[u64] {
        &self.bins[..self.len as usize]
    }

    #[inline]
    pub fn leading(&self) -> u64 {
        self.bins[0]
    }

    #[inline]
    pub fn contains(&self, bin: u64) -> bool {
        self.bins().contains(&bin)
    }

    pub fn max_bin(&self) -> u64 {
        self.bins().iter().copied().max().unwrap_or(0)
    }
}

/// Derives ball `x`'s edge set.
///
/// A collision with an earlier edge is redrawn with the next attempt counter;
/// after [`MAX_ATTEMPTS`] redraws the edge probes downward from the colliding
/// bin, wrapping from the leading edge back to the window's right boundary.
pub fn derive_edge_set(x: u64, params: &CodeParams) -> EdgeSet {
    let lo = tle_bin(x, params);
    let hi = params.overhead.scale_floor(x + params.window);
    let mut set = EdgeSet { ball: x, bins: [0; MAX_EDGES], len: 1 };
    set.bins[0] = lo;
    for edge in 2..=params.edges {
        let mut attempt = 0u32;
        let bin = loop {
            let candidate = hi - sample_eta(x, edge, attempt, params);
            if !set.contains(candidate) {
                break candidate;
            }
            attempt += 1;
            if attempt == MAX_ATTEMPTS {
                break probe_down(&set, candidate, lo, hi);
            }
        };
        set.bins[set.len as usize] = bin;
        set.len += 1;
    }
    set
}

fn probe_down(set: &EdgeSet, from: u64, lo: u64, hi: u64) -> u64 {
    let mut bin = from;
    loop {
        bin = if bin == lo { hi } else { bin - 1 };
        if !set.contains(bin) {
            return bin;
        }
    }
}
