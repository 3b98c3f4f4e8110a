use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mettle::channel::{ChannelSpec, Outcome, GE_PRESETS};
use mettle::experiment::*;
use mettle::lt::LtParams;
use mettle::wire::{write_symbol, TraceReader};
use mettle::{BallStatus, CodeParams, Decoder, Encoder, Overhead};

use crate::settings::{Code, Common, Settings};

const DEFAULT_OVERHEAD: (u64, u64) = (1, 10);
const LT_DEFAULT_K: u64 = 400;
const CHANNEL_SALT: u64 = 0x00c4_a22e_1000_0001;

fn sink(path: Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn source(path: Option<&Path>) -> Result<Box<dyn Read>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?)),
        None => Box::new(BufReader::new(io::stdin().lock())),
    })
}

fn csv_writer(s: &Settings) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(sink(s.out()?)?))
}

fn code_params(s: &Settings) -> Result<CodeParams> {
    let default = Overhead::new(DEFAULT_OVERHEAD.0, DEFAULT_OVERHEAD.1)?;
    Ok(CodeParams::new(s.overhead(default)?, s.window()?, s.edges()?, s.seed()?, s.payload_size()?)?)
}

fn mettle_config(s: &Settings, default_trials: u64) -> Result<MettleConfig> {
    let cfg = MettleConfig {
        params: code_params(s)?,
        channel: s.channel()?,
        k: s.k(MettleConfig::DEFAULT_K)?,
        trials: s.trials(default_trials)?,
        seed: s.seed()?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn require_mettle(s: &Settings, command: &str) -> Result<()> {
    if s.code()? != Code::Mettle {
        bail!("{command} is only defined for --code mettle");
    }
    Ok(())
}

pub const LATENCY_HEADER: [&str; 24] = [
    "record",
    "trial",
    "seed",
    "c",
    "w",
    "l",
    "k",
    "channel",
    "total_balls",
    "decoded",
    "error_floor_balls",
    "isolated_balls",
    "stalled_balls",
    "stall_occurred",
    "avg_latency",
    "p95_latency",
    "bins_sent",
    "bins_received",
    "peel_ops",
    "failure_rate",
    "overhead_used",
    "error_floor_rate",
    "isolated_rate",
    "peel_ops_per_symbol",
];

pub fn latency(common: Common) -> Result<()> {
    let s = Settings::load(common)?;
    require_mettle(&s, "latency")?;
    let cfg = mettle_config(&s, 100)?;
    let result = run_latency_experiment(&cfg)?;
    let p = cfg.params;
    let fixed = [p.overhead.to_string(), p.window.to_string(), p.edges.to_string(), cfg.k.to_string(), cfg.channel.to_string()];

    let mut out = csv_writer(&s)?;
    out.write_record(LATENCY_HEADER)?;
    for r in &result.rows {
        let mut rec = vec!["trial".to_string(), r.trial.to_string(), r.seed.to_string()];
        rec.extend(fixed.iter().cloned());
        rec.extend([
            r.total_balls.to_string(),
            r.decoded.to_string(),
            r.error_floor_balls.to_string(),
            r.isolated_balls.to_string(),
            r.stalled_balls.to_string(),
            r.stall_occurred.to_string(),
            r.avg_latency.to_string(),
            r.p95_latency.to_string(),
            r.bins_sent.to_string(),
            r.bins_received.to_string(),
            r.peel_ops.to_string(),
        ]);
        rec.extend(std::iter::repeat(String::new()).take(5));
        out.write_record(&rec)?;
    }
    let a = result.aggregates;
    let sum = |f: fn(&TrialSummary) -> u64| result.rows.iter().map(f).sum::<u64>().to_string();
    let mut rec = vec!["summary".to_string(), a.trials.to_string(), cfg.seed.to_string()];
    rec.extend(fixed.iter().cloned());
    rec.extend([
        sum(|r| r.total_balls),
        sum(|r| r.decoded),
        sum(|r| r.error_floor_balls),
        sum(|r| r.isolated_balls),
        sum(|r| r.stalled_balls),
        a.failures.to_string(),
        a.avg_latency.to_string(),
        a.p95_latency.to_string(),
        sum(|r| r.bins_sent),
        sum(|r| r.bins_received),
        sum(|r| r.peel_ops),
        a.failure_rate.to_string(),
        a.overhead_used.to_string(),
        a.error_floor_rate.to_string(),
        a.isolated_rate.to_string(),
        a.peel_ops_per_symbol.to_string(),
    ]);
    out.write_record(&rec)?;
    out.flush()?;
    Ok(())
}

pub fn efficiency(common: Common, target: Option<f64>, max_c: Option<String>) -> Result<()> {
    let s = Settings::load(common)?;
    let target = s.pick(target, "target")?.unwrap_or(1e-3);
    let max_c = s.pick::<Overhead>(max_c.as_deref().map(str::parse).transpose()?, "max-c")?;
    let top_steps = |default: u64| -> Result<u64> {
        match max_c {
            Some(c) => {
                let steps = c.as_f64() * 200.0;
                if (steps - steps.round()).abs() > 1e-9 {
                    bail!("--max-c must be a multiple of 0.5%");
                }
                Ok(steps.round() as u64)
            }
            None => Ok(default),
        }
    };
    match s.code()? {
        Code::Mettle => {
            let cfg = mettle_config(&s, 1000)?;
            let search = SearchConfig { target, trials: cfg.trials, hi_steps: top_steps(100)?, ..SearchConfig::default() };
            let outcome = run_efficiency_search(&cfg, &search)?;
            let mut points = outcome.evaluated.clone();
            points.sort_by(|a, b| a.overhead.as_f64().total_cmp(&b.overhead.as_f64()));
            let mut out = csv_writer(&s)?;
            out.write_record(["record", "c", "c_percent", "trials", "failures", "failure_rate", "wilson_upper", "passed", "note"])?;
            for p in &points {
                out.write_record([
                    "point".to_string(),
                    p.overhead.to_string(),
                    (p.overhead.as_f64() * 100.0).to_string(),
                    p.trials_run.to_string(),
                    p.failures.to_string(),
                    (p.failures as f64 / p.trials_run as f64).to_string(),
                    wilson_upper(p.failures, p.trials_run).to_string(),
                    p.passed.to_string(),
                    String::new(),
                ])?;
            }
            let best = outcome.overhead.and_then(|c| points.iter().find(|p| p.overhead == c));
            out.write_record([
                "summary".to_string(),
                outcome.overhead.map_or(String::new(), |c| c.to_string()),
                outcome.overhead.map_or(String::new(), |c| (c.as_f64() * 100.0).to_string()),
                best.map_or(String::new(), |p| p.trials_run.to_string()),
                best.map_or(String::new(), |p| p.failures.to_string()),
                best.map_or(String::new(), |p| (p.failures as f64 / p.trials_run as f64).to_string()),
                best.map_or(String::new(), |p| wilson_upper(p.failures, p.trials_run).to_string()),
                outcome.overhead.is_some().to_string(),
                outcome.note.clone(),
            ])?;
            out.flush()?;
        }
        Code::Lt => {
            let k = s.k(LT_DEFAULT_K)?;
            let params = LtParams::with_defaults(k as usize, s.seed()?)?;
            let trials = s.trials(1000)?;
            let r = lt_overhead_search(&params, &s.channel()?, trials, s.seed()?, target, top_steps(300)?)?;
            let mut out = csv_writer(&s)?;
            out.write_record(["record", "trial", "k", "symbols_needed", "c", "c_percent", "success_rate", "soliton_c", "soliton_delta"])?;
            let (sc, sd) = (params.soliton_c.to_string(), params.soliton_delta.to_string());
            for (t, n) in r.needed.iter().enumerate() {
                out.write_record([
                    "trial",
                    &t.to_string(),
                    &k.to_string(),
                    &n.map_or(String::new(), |n| n.to_string()),
                    "",
                    "",
                    "",
                    &sc,
                    &sd,
                ])?;
            }
            out.write_record([
                "summary",
                &r.trials.to_string(),
                &k.to_string(),
                "",
                &r.overhead.map_or(String::new(), |c| c.to_string()),
                &r.overhead.map_or(String::new(), |c| (c.as_f64() * 100.0).to_string()),
                &r.success_at_overhead.to_string(),
                &sc,
                &sd,
            ])?;
            out.flush()?;
        }
    }
    Ok(())
}

pub fn errorfloor(common: Common, min_balls: Option<u64>) -> Result<()> {
    let s = Settings::load(common)?;
    require_mettle(&s, "errorfloor")?;
    let mut cfg = mettle_config(&s, 1)?;
    if !matches!(cfg.channel, ChannelSpec::Bec(_)) {
        bail!("errorfloor expects a BEC channel");
    }
    let min_balls = s.pick(min_balls, "min-balls")?.unwrap_or(10_000_000);
    cfg.trials = min_balls.div_ceil(cfg.k).max(1);
    let r = run_errorfloor_experiment(&cfg, min_balls)?;
    let mut out = csv_writer(&s)?;
    out.write_record(["channel", "c", "w", "l", "k", "trials", "balls", "error_floor_balls", "rate", "predicted"])?;
    out.write_record([
        cfg.channel.to_string(),
        cfg.params.overhead.to_string(),
        cfg.params.window.to_string(),
        cfg.params.edges.to_string(),
        cfg.k.to_string(),
        cfg.trials.to_string(),
        r.balls.to_string(),
        r.error_floor_balls.to_string(),
        r.rate.to_string(),
        r.predicted.to_string(),
    ])?;
    out.flush()?;
    Ok(())
}

pub fn bench(common: Common) -> Result<()> {
    let s = Settings::load(common)?;
    require_mettle(&s, "bench")?;
    let cfg = mettle_config(&s, 5)?;
    let r = run_bench(&cfg)?;
    let mut out = csv_writer(&s)?;
    out.write_record(["k", "symbol_size", "trials", "successful", "decode_us_per_symbol", "peel_ops_per_symbol"])?;
    out.write_record([
        r.k.to_string(),
        r.symbol_size.to_string(),
        r.trials.to_string(),
        r.successful.to_string(),
        format!("{:.3}", r.decode_ns_per_symbol / 1e3),
        r.peel_ops_per_symbol.to_string(),
    ])?;
    out.flush()?;
    Ok(())
}

pub fn ge_validate(common: Common, steps: Option<u64>) -> Result<()> {
    let s = Settings::load(common)?;
    let steps = s.pick(steps, "steps")?.unwrap_or(1_000_000);
    let channels: Vec<(String, ChannelSpec)> = if s.channel_given() {
        let spec = s.channel()?;
        vec![(spec.to_string(), spec)]
    } else {
        GE_PRESETS.iter().map(|(alias, _, p)| (alias.to_string(), ChannelSpec::Ge(*p))).collect()
    };
    let mut out = csv_writer(&s)?;
    out.write_record(["channel", "steps", "expected", "empirical", "relative_error"])?;
    for (name, spec) in channels {
        let v = mettle::experiment::ge_validate(&spec, steps, s.seed()?)?;
        out.write_record([name, steps.to_string(), v.expected.to_string(), v.empirical.to_string(), v.relative_error.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn encode(common: Common, input: Option<PathBuf>) -> Result<()> {
    let s = Settings::load(common)?;
    require_mettle(&s, "encode")?;
    let params = code_params(&s)?;
    let input = s.path(input.as_deref(), "input")?;
    let mut data = Vec::new();
    source(input.as_deref())?.read_to_end(&mut data)?;
    let mut channel = s.channel()?.instance(s.seed()? ^ CHANNEL_SALT);
    let mut encoder = Encoder::new(params)?;
    let mut out = sink(s.out()?)?;
    let (mut sent, mut erased) = (0u64, 0u64);
    let mut emit = |sym: mettle::CodedSymbol, out: &mut Box<dyn Write>| -> io::Result<()> {
        sent += 1;
        match channel.step() {
            Outcome::Pass => write_symbol(out, &sym),
            Outcome::Erase => {
                erased += 1;
                Ok(())
            }
        }
    };
    let mut padded = vec![0u8; params.symbol_size];
    for chunk in data.chunks(params.symbol_size) {
        padded[..chunk.len()].copy_from_slice(chunk);
        padded[chunk.len()..].fill(0);
        for sym in encoder.push_payload(&padded)? {
            emit(sym, &mut out)?;
        }
    }
    let k = encoder.next_position();
    for sym in encoder.flush() {
        emit(sym, &mut out)?;
    }
    out.flush()?;
    eprintln!("k={k} bytes={} bins={sent} erased={erased}", data.len());
    Ok(())
}

pub fn decode(common: Common, input: Option<PathBuf>, bytes: Option<u64>) -> Result<()> {
    let s = Settings::load(common)?;
    require_mettle(&s, "decode")?;
    let params = code_params(&s)?;
    let k = s.k(0)?;
    if k == 0 {
        bail!("decode needs --k, the number of source symbols the encoder reported");
    }
    let input = s.path(input.as_deref(), "input")?;
    let mut decoder = Decoder::new(params, k)?;
    let mut payloads: Vec<Option<Vec<u8>>> = vec![None; k as usize];
    let mut decoded = Vec::new();
    for sym in TraceReader::new(source(input.as_deref())?) {
        decoder.push_into(sym?, &mut decoded)?;
        for d in decoded.drain(..) {
            payloads[d.position as usize] = Some(d.payload);
        }
    }
    decoder.close();
    let statuses = decoder.final_statuses()?;

    let limit = s.pick(bytes, "bytes")?.unwrap_or(k * params.symbol_size as u64);
    let mut out = sink(s.out()?)?;
    let mut remaining = limit;
    let zeros = vec![0u8; params.symbol_size];
    for p in &payloads {
        let chunk = p.as_deref().unwrap_or(&zeros);
        let n = (remaining as usize).min(chunk.len());
        out.write_all(&chunk[..n])?;
        remaining -= n as u64;
    }
    out.flush()?;
    let missing = statuses.iter().filter(|st| !matches!(st, BallStatus::Decoded { .. })).count();
    eprintln!("decoded {}/{k} source symbols", k as usize - missing);
    if missing > 0 {
        bail!("{missing} source symbols could not be recovered; their bytes were written as zeros");
    }
    Ok(())
}
