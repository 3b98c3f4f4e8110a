//! Code parameters and the exact rational overhead ratio.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;

use crate::error::{Error, Result};

/// Overhead ratio `c = num/den`, kept reduced. All bin-index arithmetic goes
/// through [`Overhead::scale_floor`] so encoder and decoder agree bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Overhead {
    num: u64,
    den: u64,
}

impl Overhead {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidParams(format!(
                "overhead ratio must be a positive fraction, got {num}/{den}"
            )));
        }
        let g = num.gcd(&den);
        Ok(Self { num: num / g, den: den / g })
    }

    /// Overhead in units of 0.5 percentage points, as used by the search grid.
    pub fn from_half_percent(steps: u64) -> Result<Self> {
        Self::new(steps, 200)
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `floor((1 + c) * x)`.
    pub fn scale_floor(&self, x: u64) -> u64 {
        let scaled = (self.num as u128 + self.den as u128) * x as u128 / self.den as u128;
        u64::try_from(scaled).expect("bin index overflows u64")
    }

    /// `z / (1 + c) - x`, evaluated exactly and clamped at zero before
    /// conversion to a float.
    pub fn latency(&self, z: u64, x: u64) -> f64 {
        let rate = self.num as u128 + self.den as u128;
        let lhs = z as u128 * self.den as u128;
        let rhs = x as u128 * rate;
        if lhs <= rhs {
            0.0
        } else {
            (lhs - rhs) as f64 / rate as f64
        }
    }
}

impl fmt::Display for Overhead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Accepts `p/q`, a decimal such as `0.055`, or a percentage such as `5.5%`.
impl FromStr for Overhead {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p = p.trim().parse::<u64>().map_err(|e| Error::Parse(format!("{s}: {e}")))?;
            let q = q.trim().parse::<u64>().map_err(|e| Error::Parse(format!("{s}: {e}")))?;
            return Self::new(p, q);
        }
        let (digits, extra_den) = match s.strip_suffix('%') {
            Some(d) => (d.trim(), 100u64),
            None => (s, 1u64),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        if int_part.is_empty() && frac_part.is_empty()
            || !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
            || frac_part.len() > 12
        {
            return Err(Error::Parse(format!("not a ratio: {s:?}")));
        }
        let scale = 10u64.pow(frac_part.len() as u32);
        let int_val: u64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|e| Error::Parse(format!("{s}: {e}")))? };
        let frac_val: u64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|e| Error::Parse(format!("{s}: {e}")))? };
        let num = int_val
            .checked_mul(scale)
            .and_then(|v| v.checked_add(frac_val))
            .ok_or_else(|| Error::Parse(format!("ratio too large: {s:?}")))?;
        Self::new(num, scale * extra_den)
    }
}

/// Largest supported number of edges per ball.
pub const MAX_EDGES: usize = 8;

/// Parameters of one code instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeParams {
    pub overhead: Overhead,
    /// Coupling window, in ball positions.
    pub window: u64,
    /// Edges per ball.
    pub edges: usize,
    pub seed: u64,
    pub symbol_size: usize,
}

impl CodeParams {
    pub fn new(overhead: Overhead, window: u64, edges: usize, seed: u64, symbol_size: usize) -> Result<Self> {
        let params = Self { overhead, window, edges, seed, symbol_size };
        params.validate()?;
        Ok(params)
    }

    /// `l = 4`, `w = 600`, 1500-byte symbols.
    pub fn with_overhead(overhead: Overhead, seed: u64) -> Self {
        Self { overhead, window: 600, edges: 4, seed, symbol_size: 1500 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidParams("window must be positive".into()));
        }
        if self.edges < 2 || self.edges > MAX_EDGES {
            return Err(Error::InvalidParams(format!(
                "edges per ball must be in 2..={MAX_EDGES}, got {}",
                self.edges
            )));
        }
        if self.symbol_size == 0 {
            return Err(Error::InvalidParams("symbol size must be positive".into()));
        }
        // l distinct bins have to fit inside [tle, tle + span].
        if (self.edges as u64) > self.window_bins() + 1 {
            return Err(Error::InvalidParams(format!(
                "window of {} bins cannot hold {} distinct edges",
                self.window_bins() + 1,
                self.edges
            )));
        }
        Ok(())
    }

    /// `n_b = floor((1 + c) w)`, the binomial trial count for landing offsets.
    pub fn window_bins(&self) -> u64 {
        self.overhead.scale_floor(self.window)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_symbol_size(mut self, symbol_size: usize) -> Self {
        self.symbol_size = symbol_size;
        self
    }
}
