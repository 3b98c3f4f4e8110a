//! Flag values, merged with an optional `key = value` config file.
//!
//! Precedence: command-line flag, then config file, then the default.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use mettle::channel::ChannelSpec;
use mettle::Overhead;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Code {
    Mettle,
    Lt,
}

impl FromStr for Code {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Code as ValueEnum>::from_str(s, true)
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Code under test.
    #[arg(long, value_enum)]
    pub code: Option<Code>,
    /// Overhead ratio: "p/q", a decimal, or a percentage such as "5.5%".
    #[arg(long)]
    pub c: Option<String>,
    /// Coupling window in ball positions.
    #[arg(long)]
    pub w: Option<u64>,
    /// Edges per ball.
    #[arg(long)]
    pub l: Option<usize>,
    /// Source symbols per trial (LT: block size).
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// "bec:<eps>", "ge:<p_g2b>,<p_b2g>,<eps_g>,<eps_b>", ge1..ge5, or "none".
    #[arg(long)]
    pub channel: Option<String>,
    /// Payload bytes per symbol.
    #[arg(long)]
    pub payload_size: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file using the long flag names as keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

const KNOWN_KEYS: [&str; 16] = [
    "code", "c", "w", "l", "k", "trials", "seed", "channel", "payload-size", "out", "target", "max-c",
    "min-balls", "steps", "input", "bytes",
];

pub fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected key = value", n + 1);
        };
        let key = key.trim().replace('_', "-");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            bail!("config line {}: unknown key {key:?}", n + 1);
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// Resolved view of [`Common`] plus any command-specific keys.
pub struct Settings {
    flags: Common,
    file: HashMap<String, String>,
}

impl Settings {
    pub fn load(flags: Common) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                parse_config(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => HashMap::new(),
        };
        Ok(Self { flags, file })
    }

    /// Flag value if given, else the config entry under `key`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow::anyhow!("config key {key}: {e}")))
            .transpose()
    }

    pub fn code(&self) -> Result<Code> {
        Ok(self.pick(self.flags.code, "code")?.unwrap_or(Code::Mettle))
    }

    pub fn overhead(&self, default: Overhead) -> Result<Overhead> {
        Ok(self.pick::<Overhead>(self.flags.c.as_deref().map(str::parse).transpose()?, "c")?.unwrap_or(default))
    }

    pub fn window(&self) -> Result<u64> {
        Ok(self.pick(self.flags.w, "w")?.unwrap_or(600))
    }

    pub fn edges(&self) -> Result<usize> {
        Ok(self.pick(self.flags.l, "l")?.unwrap_or(4))
    }

    pub fn k(&self, default: u64) -> Result<u64> {
        Ok(self.pick(self.flags.k, "k")?.unwrap_or(default))
    }

    pub fn trials(&self, default: u64) -> Result<u64> {
        Ok(self.pick(self.flags.trials, "trials")?.unwrap_or(default))
    }

    pub fn seed(&self) -> Result<u64> {
        Ok(self.pick(self.flags.seed, "seed")?.unwrap_or(0))
    }

    pub fn channel(&self) -> Result<ChannelSpec> {
        let given = self.flags.channel.as_deref().map(str::parse::<ChannelSpec>).transpose()?;
        Ok(self.pick(given, "channel")?.unwrap_or_else(ChannelSpec::lossless))
    }

    pub fn channel_given(&self) -> bool {
        self.flags.channel.is_some() || self.file.contains_key("channel")
    }

    pub fn payload_size(&self) -> Result<usize> {
        Ok(self.pick(self.flags.payload_size, "payload-size")?.unwrap_or(1500))
    }

    pub fn out(&self) -> Result<Option<PathBuf>> {
        self.pick(self.flags.out.clone(), "out")
    }

    pub fn path(&self, flag: Option<&Path>, key: &str) -> Result<Option<PathBuf>> {
        self.pick(flag.map(Path::to_path_buf), key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let map = parse_config("# comment\nc = 11/200\npayload_size=64  # trailing\n\nchannel = ge1\n").unwrap();
        assert_eq!(map["c"], "11/200");
        assert_eq!(map["payload-size"], "64");
        assert_eq!(map["channel"], "ge1");
        assert!(parse_config("bogus = 1").is_err());
        assert!(parse_config("novalue").is_err());
    }

    #[test]
    fn flags_override_file() {
        let flags = Common { w: Some(50), ..Default::default() };
        let s = Settings { flags, file: parse_config("w = 100\nl = 3\nc = 1/4").unwrap() };
        assert_eq!(s.window().unwrap(), 50);
        assert_eq!(s.edges().unwrap(), 3);
        assert_eq!(s.overhead(Overhead::new(1, 10).unwrap()).unwrap(), Overhead::new(1, 4).unwrap());
        assert_eq!(s.k(7).unwrap(), 7);
    }
}
