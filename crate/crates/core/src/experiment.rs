//! Monte Carlo harness: independent trials of encode, channel, decode.
//!
//! Trial `i` of an experiment with base seed `s` uses seed `s + i` for both
//! its code instance and its channel, so results do not depend on how
//! trials are scheduled. With the `parallel` feature trials run on the
//! rayon pool; results are always returned in trial order.

use std::ops::Range;
use std::time::Instant;

use crate::channel::{ge_avg_rate, ChannelSpec, Outcome};
use crate::decoder::Decoder;
use crate::edges::mix64;
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::lt::{LtCode, LtDecoder, LtParams};
use crate::params::{CodeParams, Overhead};
use crate::report::TrialReport;
use crate::symbol::CodedSymbol;

const CHANNEL_SALT: u64 = 0x6368_616e_6e65_6c00;

/// Runs `trial` for every index in `range`, in parallel when enabled.
pub fn run_trials<R, F>(range: Range<u64>, trial: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        run_trials_parallel(range, trial)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_trials_sequential(range, trial)
    }
}

pub fn run_trials_sequential<R, F>(range: Range<u64>, trial: F) -> Vec<R>
where
    F: Fn(u64) -> R,
{
    range.map(trial).collect()
}

#[cfg(feature = "parallel")]
pub fn run_trials_parallel<R, F>(range: Range<u64>, trial: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    use rayon::prelude::*;
    range.into_par_iter().map(trial).collect()
}

/// One experiment over the streaming code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MettleConfig {
    /// Code parameters; the seed field is replaced per trial.
    pub params: CodeParams,
    pub channel: ChannelSpec,
    /// Source symbols per trial.
    pub k: u64,
    pub trials: u64,
    pub seed: u64,
}

impl MettleConfig {
    pub const DEFAULT_K: u64 = 100_000;

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidParams("at least one trial is required".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be positive".into()));
        }
        Ok(())
    }

    pub fn trial_seed(&self, trial: u64) -> u64 {
        self.seed.wrapping_add(trial)
    }

    pub fn with_overhead(mut self, overhead: Overhead) -> Self {
        self.params.overhead = overhead;
        self
    }
}

/// Deterministic filler payload for ball `x` of a trial.
pub fn trial_payload(trial_seed: u64, x: u64, out: &mut [u8]) {
    let mut word = mix64(trial_seed ^ mix64(x));
    for chunk in out.chunks_mut(8) {
        chunk.copy_from_slice(&word.to_le_bytes()[..chunk.len()]);
        word = mix64(word);
    }
}

/// Encodes `k` balls, sends every bin through the channel, decodes, and
/// checks each recovered payload against the source.
pub fn run_mettle_trial(cfg: &MettleConfig, trial: u64) -> Result<TrialReport> {
    let seed = cfg.trial_seed(trial);
    let params = cfg.params.with_seed(mix64(seed));
    let mut channel = cfg.channel.instance(mix64(seed ^ CHANNEL_SALT));
    let mut encoder = Encoder::new(params)?;
    let mut decoder = Decoder::new(params, cfg.k)?;
    let mut payload = vec![0u8; params.symbol_size];
    let mut expected = vec![0u8; params.symbol_size];
    let mut decoded = Vec::new();

    let mut deliver = |decoder: &mut Decoder, sym: CodedSymbol| -> Result<()> {
        match channel.step() {
            Outcome::Pass => {
                decoder.push_into(sym, &mut decoded)?;
                for d in decoded.drain(..) {
                    trial_payload(seed, d.position, &mut expected);
                    assert_eq!(d.payload, expected, "ball {} decoded to the wrong payload", d.position);
                }
                Ok(())
            }
            Outcome::Erase => decoder.mark_erased(sym.bin_index),
        }
    };

    for x in 0..cfg.k {
        trial_payload(seed, x, &mut payload);
        for sym in encoder.push_payload(&payload)? {
            deliver(&mut decoder, sym)?;
        }
    }
    for sym in encoder.flush() {
        deliver(&mut decoder, sym)?;
    }
    decoder.close();
    decoder.finalize_report()
}

/// Per-trial row, without the per-ball latency vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub trial: u64,
    pub seed: u64,
    pub total_balls: u64,
    pub decoded: u64,
    pub error_floor_balls: u64,
    pub isolated_balls: u64,
    pub stalled_balls: u64,
    pub stall_occurred: bool,
    pub avg_latency: f64,
    pub p95_latency: f64,
    pub bins_sent: u64,
    pub bins_received: u64,
    pub peel_ops: u64,
}

impl TrialSummary {
    pub fn new(trial: u64, seed: u64, r: &TrialReport) -> Self {
        Self {
            trial,
            seed,
            total_balls: r.total_balls,
            decoded: r.decoded,
            error_floor_balls: r.error_floor_balls,
            isolated_balls: r.isolated_balls,
            stalled_balls: r.stalled_balls,
            stall_occurred: r.stall_occurred,
            avg_latency: r.avg_latency,
            p95_latency: r.p95_latency,
            bins_sent: r.bins_sent,
            bins_received: r.bins_received,
            peel_ops: r.peel_ops,
        }
    }
}

/// Aggregates over a set of trials; every field is recomputable from the
/// per-trial rows.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Aggregates {
    pub trials: u64,
    /// Trials in which peeling stalled.
    pub failures: u64,
    pub failure_rate: f64,
    /// Latency over decoded balls of successful trials, pooled.
    pub avg_latency: f64,
    /// Mean of the per-trial 95th percentiles of successful trials.
    pub p95_latency: f64,
    /// Bins sent per source symbol, minus one.
    pub overhead_used: f64,
    pub error_floor_rate: f64,
    /// Balls lost to small local stopping sets, per source symbol.
    pub isolated_rate: f64,
    /// Peel operations per source symbol over successful trials.
    pub peel_ops_per_symbol: f64,
}

impl Aggregates {
    pub fn from_trials(rows: &[TrialSummary]) -> Self {
        let ok: Vec<&TrialSummary> = rows.iter().filter(|r| !r.stall_occurred).collect();
        let trials = rows.len() as u64;
        let failures = trials - ok.len() as u64;
        let sum = |f: fn(&TrialSummary) -> u64, set: &[&TrialSummary]| set.iter().map(|r| f(r)).sum::<u64>();
        let all: Vec<&TrialSummary> = rows.iter().collect();
        let decoded_ok = sum(|r| r.decoded, &ok);
        let balls_ok = sum(|r| r.total_balls, &ok);
        let balls_all = sum(|r| r.total_balls, &all);
        let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
        Self {
            trials,
            failures,
            failure_rate: ratio(failures as f64, trials as f64),
            avg_latency: ratio(ok.iter().map(|r| r.avg_latency * r.decoded as f64).sum(), decoded_ok as f64),
            p95_latency: ratio(ok.iter().map(|r| r.p95_latency).sum(), ok.len() as f64),
            overhead_used: ratio(sum(|r| r.bins_sent, &all) as f64, balls_all as f64) - if balls_all == 0 { 0.0 } else { 1.0 },
            error_floor_rate: ratio(sum(|r| r.error_floor_balls, &all) as f64, balls_all as f64),
            isolated_rate: ratio(sum(|r| r.isolated_balls, &all) as f64, balls_all as f64),
            peel_ops_per_symbol: ratio(sum(|r| r.peel_ops, &ok) as f64, balls_ok as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<TrialSummary>,
    pub aggregates: Aggregates,
}

impl ExperimentResult {
    pub fn from_rows(rows: Vec<TrialSummary>) -> Self {
        let aggregates = Aggregates::from_trials(&rows);
        Self { rows, aggregates }
    }
}

/// Runs trials `range` of `cfg` and returns their summary rows in trial order.
pub fn run_trial_summaries(cfg: &MettleConfig, trials: Range<u64>) -> Result<Vec<TrialSummary>> {
    run_trials(trials, |t| run_mettle_trial(cfg, t).map(|r| TrialSummary::new(t, cfg.trial_seed(t), &r)))
        .into_iter()
        .collect()
}

/// Runs `cfg.trials` full trials and aggregates their latencies.
pub fn run_latency_experiment(cfg: &MettleConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    Ok(ExperimentResult::from_rows(run_trial_summaries(cfg, 0..cfg.trials)?))
}

/// Bisection over a grid of overhead ratios in 0.5 percentage-point steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Largest acceptable failure rate.
    pub target: f64,
    /// Trials needed to accept a grid point.
    pub trials: u64,
    /// Grid bracket in half-percent units: `lo` is assumed to fail and is
    /// never evaluated, `hi` is evaluated first.
    pub lo_steps: u64,
    pub hi_steps: u64,
    /// Trials launched between early-stop checks.
    pub batch: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { target: 1e-3, trials: 1000, lo_steps: 0, hi_steps: 100, batch: 25 }
    }
}

impl SearchConfig {
    /// Failures tolerated at a grid point before it is rejected.
    pub fn allowed_failures(&self) -> u64 {
        (self.target * self.trials as f64 + 1e-9).floor() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub overhead: Overhead,
    pub trials_run: u64,
    pub failures: u64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Smallest passing grid ratio, if the top of the bracket passed.
    pub overhead: Option<Overhead>,
    /// Every evaluated point, in evaluation order.
    pub evaluated: Vec<GridPoint>,
    pub note: String,
}

/// One-sided 95% Wilson upper bound on a binomial rate.
pub fn wilson_upper(failures: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    let z = 1.644_853_626_951_472_2_f64;
    let n = trials as f64;
    let p = failures as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = p + z * z / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    ((centre + spread) / denom).min(1.0)
}

/// Evaluates one grid point, stopping as soon as the failure count rules
/// it out.
pub fn evaluate_overhead(cfg: &MettleConfig, overhead: Overhead, search: &SearchConfig) -> Result<GridPoint> {
    let cfg = cfg.with_overhead(overhead);
    let allowed = search.allowed_failures();
    let (mut run, mut failures) = (0u64, 0u64);
    while run < search.trials && failures <= allowed {
        let end = (run + search.batch.max(1)).min(search.trials);
        let rows = run_trial_summaries(&cfg, run..end)?;
        failures += rows.iter().filter(|r| r.stall_occurred).count() as u64;
        run = end;
    }
    Ok(GridPoint { overhead, trials_run: run, failures, passed: failures <= allowed })
}

/// Smallest grid overhead whose estimated failure rate is at most `target`.
pub fn run_efficiency_search(cfg: &MettleConfig, search: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    if search.hi_steps <= search.lo_steps || search.trials == 0 {
        return Err(Error::InvalidParams("empty search bracket or zero trial budget".into()));
    }
    let mut evaluated = Vec::new();
    let top = evaluate_overhead(cfg, Overhead::from_half_percent(search.hi_steps)?, search)?;
    let top_passed = top.passed;
    evaluated.push(top);
    if !top_passed {
        return Ok(SearchOutcome {
            overhead: None,
            note: format!(
                "target {} unreachable: top of grid ({}%) failed {}/{} trials",
                search.target,
                search.hi_steps as f64 / 2.0,
                evaluated[0].failures,
                evaluated[0].trials_run
            ),
            evaluated,
        });
    }
    let (mut lo, mut hi) = (search.lo_steps, search.hi_steps);
    let mut accepted = 0;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let point = evaluate_overhead(cfg, Overhead::from_half_percent(mid)?, search)?;
        if point.passed {
            hi = mid;
            accepted = evaluated.len();
        } else {
            lo = mid;
        }
        evaluated.push(point);
    }
    let best = &evaluated[accepted];
    let note = format!(
        "c = {}%: {}/{} stalled trials, 95% upper bound on failure rate {:.2e}",
        hi as f64 / 2.0,
        best.failures,
        best.trials_run,
        wilson_upper(best.failures, best.trials_run)
    );
    Ok(SearchOutcome { overhead: Some(Overhead::from_half_percent(hi)?), evaluated, note })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorFloorResult {
    pub balls: u64,
    pub error_floor_balls: u64,
    pub rate: f64,
    /// `epsilon^l` for the channel's average erasure rate.
    pub predicted: f64,
}

/// Measures the fraction of balls whose bins were all erased, running
/// whole trials until at least `min_balls` balls have been sent.
pub fn run_errorfloor_experiment(cfg: &MettleConfig, min_balls: u64) -> Result<ErrorFloorResult> {
    cfg.validate()?;
    let trials = min_balls.div_ceil(cfg.k).max(1);
    let rows = run_trial_summaries(cfg, 0..trials)?;
    let balls: u64 = rows.iter().map(|r| r.total_balls).sum();
    let error_floor_balls: u64 = rows.iter().map(|r| r.error_floor_balls).sum();
    Ok(ErrorFloorResult {
        balls,
        error_floor_balls,
        rate: error_floor_balls as f64 / balls as f64,
        predicted: cfg.channel.average_rate().powi(cfg.params.edges as i32),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchResult {
    pub k: u64,
    pub symbol_size: usize,
    pub trials: u64,
    pub successful: u64,
    /// Median over trials of decoder wall time per source symbol.
    pub decode_ns_per_symbol: f64,
    pub peel_ops_per_symbol: f64,
}

/// Times the decoder alone: encoding and the channel run ahead of the clock.
pub fn run_bench(cfg: &MettleConfig) -> Result<BenchResult> {
    cfg.validate()?;
    let mut times = Vec::new();
    let (mut ops, mut balls, mut successful) = (0u64, 0u64, 0u64);
    for trial in 0..cfg.trials {
        let seed = cfg.trial_seed(trial);
        let params = cfg.params.with_seed(mix64(seed));
        let mut channel = cfg.channel.instance(mix64(seed ^ CHANNEL_SALT));
        let mut encoder = Encoder::new(params)?;
        let mut payload = vec![0u8; params.symbol_size];
        let mut stream = Vec::new();
        for x in 0..cfg.k {
            trial_payload(seed, x, &mut payload);
            stream.extend(encoder.push_payload(&payload)?);
        }
        stream.extend(encoder.flush());
        let deliveries: Vec<(u64, Option<CodedSymbol>)> = stream
            .into_iter()
            .map(|s| match channel.step() {
                Outcome::Pass => (s.bin_index, Some(s)),
                Outcome::Erase => (s.bin_index, None),
            })
            .collect();

        let start = Instant::now();
        let mut decoder = Decoder::new(params, cfg.k)?;
        let mut out = Vec::new();
        for (index, sym) in deliveries {
            match sym {
                Some(sym) => decoder.push_into(sym, &mut out)?,
                None => decoder.mark_erased(index)?,
            }
            out.clear();
        }
        decoder.close();
        let elapsed = start.elapsed();
        let report = decoder.finalize_report()?;
        times.push(elapsed.as_nanos() as f64 / cfg.k as f64);
        if !report.stall_occurred {
            successful += 1;
            ops += report.peel_ops;
            balls += report.total_balls;
        }
    }
    times.sort_by(f64::total_cmp);
    Ok(BenchResult {
        k: cfg.k,
        symbol_size: cfg.params.symbol_size,
        trials: cfg.trials,
        successful,
        decode_ns_per_symbol: times[times.len() / 2],
        peel_ops_per_symbol: if balls == 0 { 0.0 } else { ops as f64 / balls as f64 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeValidation {
    pub steps: u64,
    pub expected: f64,
    pub empirical: f64,
    pub relative_error: f64,
}

/// Compares a channel's empirical erasure rate, from a stationary start,
/// with its closed-form average.
pub fn ge_validate(spec: &ChannelSpec, steps: u64, seed: u64) -> Result<GeValidation> {
    let expected = match spec {
        ChannelSpec::Ge(p) => ge_avg_rate(p)?,
        ChannelSpec::Bec(p) => p.epsilon,
    };
    let mut channel = spec.stationary_instance(seed);
    let erased = (0..steps).filter(|_| channel.step() == Outcome::Erase).count() as u64;
    let empirical = erased as f64 / steps.max(1) as f64;
    let relative_error = if expected == 0.0 { empirical } else { (empirical - expected).abs() / expected };
    Ok(GeValidation { steps, expected, empirical, relative_error })
}

/// LT symbols transmitted until the block decodes, or `None` past `limit`.
pub fn lt_trial(params: &LtParams, channel: &ChannelSpec, trial_seed: u64, limit: u64) -> Option<u64> {
    let code = LtCode::new(LtParams { seed: mix64(trial_seed), ..*params });
    let mut channel = channel.instance(mix64(trial_seed ^ CHANNEL_SALT));
    let mut decoder = LtDecoder::new(code);
    for index in 0..limit {
        if channel.step() == Outcome::Pass {
            decoder.push(CodedSymbol { bin_index: index, payload: Vec::new() });
            if decoder.is_complete() {
                return Some(index + 1);
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtOverheadResult {
    pub trials: u64,
    /// Transmitted symbols needed per trial (`None`: not within the limit).
    pub needed: Vec<Option<u64>>,
    /// Smallest grid overhead whose success rate is at least `1 - target`.
    pub overhead: Option<Overhead>,
    pub success_at_overhead: f64,
}

/// Overhead an LT block of `k` needs for success probability `1 - target`.
///
/// A trial that decodes after `n` transmissions succeeds at every overhead
/// with `floor((1+c)k) >= n`, so one pass per trial covers the whole grid.
pub fn lt_overhead_search(params: &LtParams, channel: &ChannelSpec, trials: u64, seed: u64, target: f64, max_steps: u64) -> Result<LtOverheadResult> {
    if trials == 0 {
        return Err(Error::InvalidParams("at least one trial is required".into()));
    }
    let top = Overhead::from_half_percent(max_steps)?.scale_floor(params.k as u64);
    let needed = run_trials(0..trials, |t| lt_trial(params, channel, seed.wrapping_add(t), top));
    let mut found = None;
    for step in 1..=max_steps {
        let c = Overhead::from_half_percent(step)?;
        let budget = c.scale_floor(params.k as u64);
        let ok = needed.iter().filter(|n| n.is_some_and(|n| n <= budget)).count() as f64 / trials as f64;
        if ok >= 1.0 - target - 1e-12 {
            found = Some((c, ok));
            break;
        }
    }
    Ok(LtOverheadResult {
        trials,
        overhead: found.map(|f| f.0),
        success_at_overhead: found.map_or(0.0, |f| f.1),
        needed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(channel: &str, k: u64, trials: u64) -> MettleConfig {
        MettleConfig {
            params: CodeParams::new(Overhead::new(1, 5).unwrap(), 60, 4, 0, 8).unwrap(),
            channel: channel.parse().unwrap(),
            k,
            trials,
            seed: 5,
        }
    }

    #[test]
    fn lossless_trials_decode_everything() {
        let result = run_latency_experiment(&cfg("none", 2000, 4)).unwrap();
        assert_eq!(result.aggregates.failures, 0);
        assert_eq!(result.aggregates.avg_latency, 0.0);
        assert!(result.rows.iter().all(|r| r.decoded == 2000));
    }

    #[test]
    fn sequential_and_default_runner_agree() {
        let c = cfg("bec:0.05", 3000, 6);
        let a = run_trials_sequential(0..6, |t| run_mettle_trial(&c, t).unwrap());
        let b = run_trials(0..6, |t| run_mettle_trial(&c, t).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn aggregates_recompute_from_rows() {
        let result = run_latency_experiment(&cfg("bec:0.1", 3000, 8)).unwrap();
        assert_eq!(Aggregates::from_trials(&result.rows), result.aggregates);
        assert_eq!(
            result.aggregates.failures,
            result.rows.iter().filter(|r| r.stall_occurred).count() as u64
        );
    }

    #[test]
    fn lossless_search_takes_the_first_grid_point() {
        let search = SearchConfig { target: 1e-2, trials: 20, lo_steps: 0, hi_steps: 40, batch: 10 };
        let outcome = run_efficiency_search(&cfg("none", 1000, 1), &search).unwrap();
        assert_eq!(outcome.overhead, Some(Overhead::from_half_percent(1).unwrap()));
    }

    #[test]
    fn unreachable_target_is_reported() {
        let search = SearchConfig { target: 1e-3, trials: 20, lo_steps: 0, hi_steps: 2, batch: 10 };
        let outcome = run_efficiency_search(&cfg("bec:0.3", 2000, 1), &search).unwrap();
        assert_eq!(outcome.overhead, None);
        assert!(outcome.note.contains("unreachable"));
    }

    #[test]
    fn wilson_bounds() {
        assert!(wilson_upper(0, 1000) < 3e-3);
        assert!(wilson_upper(1, 1000) > 1e-3);
        assert_eq!(wilson_upper(0, 0), 1.0);
    }
}
