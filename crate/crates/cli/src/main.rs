//! `mettle`: experiment harness and stream encoder/decoder.

mod commands;
mod settings;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use settings::Common;

#[derive(Parser, Debug)]
#[command(name = "mettle", version, about = "Streaming erasure code experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decoding latency over full encode, channel, decode trials.
    Latency(Common),
    /// Smallest overhead on a 0.5 pp grid meeting a failure-rate target.
    Efficiency {
        #[command(flatten)]
        common: Common,
        /// Largest acceptable failure rate.
        #[arg(long)]
        target: Option<f64>,
        /// Top of the search bracket.
        #[arg(long)]
        max_c: Option<String>,
    },
    /// Fraction of balls whose bins were all erased.
    Errorfloor {
        #[command(flatten)]
        common: Common,
        /// Minimum number of balls to simulate.
        #[arg(long)]
        min_balls: Option<u64>,
    },
    /// Decoder wall time and peel operations per symbol.
    Bench(Common),
    /// Empirical Gilbert-Elliott erasure rate against the closed form.
    GeValidate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Encode a file into a coded-symbol trace, optionally through a channel.
    Encode {
        #[command(flatten)]
        common: Common,
        /// Input file; standard input when absent.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Decode a trace back into the source bytes.
    Decode {
        #[command(flatten)]
        common: Common,
        /// Trace file; standard input when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Truncate the output to this many bytes.
        #[arg(long)]
        bytes: Option<u64>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Latency(common) => commands::latency(common),
        Command::Efficiency { common, target, max_c } => commands::efficiency(common, target, max_c),
        Command::Errorfloor { common, min_balls } => commands::errorfloor(common, min_balls),
        Command::Bench(common) => commands::bench(common),
        Command::GeValidate { common, steps } => commands::ge_validate(common, steps),
        Command::Encode { common, input } => commands::encode(common, input),
        Command::Decode { common, input, bytes } => commands::decode(common, input, bytes),
    }
}
