/// Outcome of decoding one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub total_balls: u64,
    pub decoded: u64,
    /// Undecoded balls whose bins were all erased.
    pub error_floor_balls: u64,
    /// Undecoded balls trapped in a small local stopping set: fewer than
    /// `w` undecoded balls linked through shared received bins.
    pub isolated_balls: u64,
    /// Every other undecoded ball.
    pub stalled_balls: u64,
    /// `stalled_balls > 0`.
    pub stall_occurred: bool,
    /// Latency of every decoded ball, in source-symbol units, by position.
    pub latencies: Vec<f64>,
    pub avg_latency: f64,
    pub p95_latency: f64,
    pub bins_sent: u64,
    pub bins_received: u64,
    pub peel_ops: u64,
}

impl TrialReport {
    pub fn peel_ops_per_symbol(&self) -> f64 {
        if self.total_balls == 0 {
            0.0
        } else {
            self.peel_ops as f64 / self.total_balls as f64
        }
    }
}

/// Mean of `values`, zero when empty.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Nearest-rank percentile (`q` in `(0, 1]`), zero when empty.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 0.95), 95.0);
        assert_eq!(percentile(&[3.0], 0.95), 3.0);
        assert_eq!(percentile(&[], 0.95), 0.0);
        assert_eq!(percentile(&[5.0, 1.0, 2.0, 4.0, 3.0], 0.5), 3.0);
        assert_eq!(mean(&[1.0, 2.0, 6.0]), 3.0);
    }
}
