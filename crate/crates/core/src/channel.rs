//! Erasure channels: memoryless BEC and the two-state Gilbert-Elliott model.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::symbol::CodedSymbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Erase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BecParams {
    pub epsilon: f64,
}

impl BecParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_probability("epsilon", epsilon)?;
        Ok(Self { epsilon })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeParams {
    pub p_g2b: f64,
    pub p_b2g: f64,
    pub eps_g: f64,
    pub eps_b: f64,
}

impl GeParams {
    pub fn new(p_g2b: f64, p_b2g: f64, eps_g: f64, eps_b: f64) -> Result<Self> {
        check_probability("p_g2b", p_g2b)?;
        check_probability("p_b2g", p_b2g)?;
        check_probability("eps_g", eps_g)?;
        check_probability("eps_b", eps_b)?;
        if p_g2b + p_b2g <= 0.0 {
            return Err(Error::DegenerateChannel("p_g2b + p_b2g must be positive".into()));
        }
        Ok(Self { p_g2b, p_b2g, eps_g, eps_b })
    }

    /// Stationary probability of the bad state.
    pub fn bad_fraction(&self) -> f64 {
        self.p_g2b / (self.p_g2b + self.p_b2g)
    }
}

fn check_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must lie in [0, 1], got {value}")))
    }
}

/// The five named Gilbert-Elliott configurations, `ge1` through `ge5`:
/// VoIP, WiMAX, light and heavy video conferencing, and a long fade.
pub const GE_PRESETS: [(&str, &str, GeParams); 5] = [
    ("ge1", "VoIP", GeParams { p_g2b: 5e-4, p_b2g: 0.2, eps_g: 0.01, eps_b: 1.0 }),
    ("ge2", "WiMAX", GeParams { p_g2b: 0.04, p_b2g: 0.05, eps_g: 0.01, eps_b: 0.02 }),
    ("ge3", "Video-conf-light", GeParams { p_g2b: 0.05, p_b2g: 0.75, eps_g: 0.01, eps_b: 0.1 }),
    ("ge4", "Video-conf-heavy", GeParams { p_g2b: 0.05, p_b2g: 0.75, eps_g: 0.05, eps_b: 0.5 }),
    ("ge5", "Long-fade", GeParams { p_g2b: 0.001, p_b2g: 0.01, eps_g: 0.01, eps_b: 0.1 }),
];

/// Erase with probability `epsilon`.
#[inline]
pub fn bec_step<R: Rng + ?Sized>(params: &BecParams, rng: &mut R) -> Outcome {
    if rng.gen::<f64>() < params.epsilon {
        Outcome::Erase
    } else {
        Outcome::Pass
    }
}

/// `P_avg = (eps_b p_g2b + eps_g p_b2g) / (p_g2b + p_b2g)`.
pub fn ge_avg_rate(params: &GeParams) -> Result<f64> {
    let total = params.p_g2b + params.p_b2g;
    if total <= 0.0 {
        return Err(Error::DegenerateChannel("both transition probabilities are zero".into()));
    }
    Ok((params.eps_b * params.p_g2b + params.eps_g * params.p_b2g) / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeMode {
    Good,
    Bad,
}

/// Gilbert-Elliott chain state plus its random stream.
#[derive(Debug, Clone)]
pub struct GeState {
    pub current: GeMode,
    rng: ChaCha8Rng,
}

impl GeState {
    /// Starts in the good state.
    pub fn new(seed: u64) -> Self {
        Self { current: GeMode::Good, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Draws the initial state from the stationary distribution.
    pub fn stationary(params: &GeParams, seed: u64) -> Self {
        let mut state = Self::new(seed);
        if state.rng.gen::<f64>() < params.bad_fraction() {
            state.current = GeMode::Bad;
        }
        state
    }
}

/// One channel use: the erasure is drawn from the current state, then the
/// state transition.
#[inline]
pub fn ge_step(state: &mut GeState, params: &GeParams) -> Outcome {
    let (eps, flip) = match state.current {
        GeMode::Good => (params.eps_g, params.p_g2b),
        GeMode::Bad => (params.eps_b, params.p_b2g),
    };
    let outcome = if state.rng.gen::<f64>() < eps { Outcome::Erase } else { Outcome::Pass };
    if state.rng.gen::<f64>() < flip {
        state.current = match state.current {
            GeMode::Good => GeMode::Bad,
            GeMode::Bad => GeMode::Good,
        };
    }
    outcome
}

/// A channel description, parsed from `bec:<eps>`, `ge:<p_g2b>,<p_b2g>,<eps_g>,<eps_b>`,
/// `ge1`..`ge5`, or `none`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelSpec {
    Bec(BecParams),
    Ge(GeParams),
}

impl ChannelSpec {
    pub fn lossless() -> Self {
        ChannelSpec::Bec(BecParams { epsilon: 0.0 })
    }

    pub fn preset(name: &str) -> Option<Self> {
        GE_PRESETS
            .iter()
            .find(|(alias, label, _)| alias.eq_ignore_ascii_case(name) || label.eq_ignore_ascii_case(name))
            .map(|(_, _, p)| ChannelSpec::Ge(*p))
    }

    /// Long-run erasure probability.
    pub fn average_rate(&self) -> f64 {
        match self {
            ChannelSpec::Bec(p) => p.epsilon,
            ChannelSpec::Ge(p) => ge_avg_rate(p).expect("validated on construction"),
        }
    }

    /// A fresh channel instance. Gilbert-Elliott channels start good.
    pub fn instance(&self, seed: u64) -> Channel {
        match *self {
            ChannelSpec::Bec(params) => Channel::Bec { params, rng: ChaCha8Rng::seed_from_u64(seed) },
            ChannelSpec::Ge(params) => Channel::Ge { params, state: GeState::new(seed) },
        }
    }

    /// A fresh channel instance started from the stationary distribution.
    pub fn stationary_instance(&self, seed: u64) -> Channel {
        match *self {
            ChannelSpec::Ge(params) => Channel::Ge { params, state: GeState::stationary(&params, seed) },
            bec => bec.instance(seed),
        }
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSpec::Bec(p) => write!(f, "bec:{}", p.epsilon),
            ChannelSpec::Ge(p) => {
                if let Some((alias, _, _)) = GE_PRESETS.iter().find(|(_, _, q)| q == p) {
                    write!(f, "{alias}")
                } else {
                    write!(f, "ge:{},{},{},{}", p.p_g2b, p.p_b2g, p.eps_g, p.eps_b)
                }
            }
        }
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") || s.eq_ignore_ascii_case("lossless") {
            return Ok(Self::lossless());
        }
        if let Some(spec) = Self::preset(s) {
            return Ok(spec);
        }
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        match s.split_once(':') {
            Some((kind, rest)) if kind.eq_ignore_ascii_case("bec") => Ok(ChannelSpec::Bec(BecParams::new(num(rest)?)?)),
            Some((kind, rest)) if kind.eq_ignore_ascii_case("ge") => {
                let fields = rest.split(',').map(num).collect::<Result<Vec<_>>>()?;
                match fields[..] {
                    [a, b, c, d] => Ok(ChannelSpec::Ge(GeParams::new(a, b, c, d)?)),
                    _ => Err(Error::Parse(format!("ge needs four values: {s:?}"))),
                }
            }
            _ => Err(Error::Parse(format!("unknown channel {s:?}"))),
        }
    }
}

/// A live channel instance.
#[derive(Debug, Clone)]
pub enum Channel {
    Bec { params: BecParams, rng: ChaCha8Rng },
    Ge { params: GeParams, state: GeState },
}

impl Channel {
    #[inline]
    pub fn step(&mut self) -> Outcome {
        match self {
            Channel::Bec { params, rng } => bec_step(params, rng),
            Channel::Ge { params, state } => ge_step(state, params),
        }
    }
}

/// What the receiver sees for one transmitted bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Delivery {
    Received(CodedSymbol),
    Erased(u64),
}

/// Passes each symbol through the channel, one channel use per symbol, in order.
pub fn apply_channel<'a, I>(symbols: I, channel: &'a mut Channel) -> impl Iterator<Item = Delivery> + 'a
where
    I: IntoIterator<Item = CodedSymbol>,
    I::IntoIter: 'a,
{
    symbols.into_iter().map(move |sym| match channel.step() {
        Outcome::Pass => Delivery::Received(sym),
        Outcome::Erase => Delivery::Erased(sym.bin_index),
    })
}
