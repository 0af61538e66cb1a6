//! Monte Carlo simulation of the early-detection receiver.
//!
//! Codewords are scaled rows of a Sylvester Hadamard matrix sent in parallel
//! over `n` orthonormal dimensions. The receiver sees, for each dimension,
//! the integral of signal plus white noise up to time `t`. That integral is a
//! drift `x_i t` plus Brownian motion, which is all the simulator tracks:
//! it advances the accumulated observation in `steps` independent Gaussian
//! increments over one symbol. The noise PSD is `N0 / 2 = 1`, so at `t = 1`
//! every coordinate carries unit-variance noise and the SNR matches the
//! analytic `gamma = P T`.
//!
//! The receiver stops at the first grid instant where some posterior
//! `P(m | Y_t)` exceeds its threshold `S_m`. If none does before the end of
//! the symbol, it decides by maximum posterior at `t = 1`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{q, sylvester_hadamard, RngStreamSpec};

/// One-sided noise spectral density. Full-symbol noise variance is `N0 / 2`.
pub const NOISE_PSD: f64 = 2.0;
pub const DEFAULT_STEPS: usize = 200;
pub const MIN_STEPS: usize = 10;
pub const HISTOGRAM_BINS: usize = 20;
const CHUNK: u64 = 2048;

/// `M` orthogonal, equal-energy codewords of length `n` with entries `±sqrt(gamma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    messages: usize,
    n: usize,
    amplitude: f64,
    /// Row-major `messages x n`.
    words: Vec<f64>,
}

impl Codebook {
    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn blocklength(&self) -> usize {
        self.n
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn gamma(&self) -> f64 {
        self.amplitude * self.amplitude
    }

    /// Energy of every codeword, `n * gamma`.
    pub fn energy(&self) -> f64 {
        self.n as f64 * self.gamma()
    }

    pub fn word(&self, m: usize) -> &[f64] {
        &self.words[m * self.n..(m + 1) * self.n]
    }

    pub fn words(&self) -> impl Iterator<Item = &[f64]> {
        self.words.chunks_exact(self.n)
    }

    /// Codebook with its rows reordered: row `i` of the result is row
    /// `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.messages];
        if order.len() != self.messages
            || order
                .iter()
                .any(|&i| i >= self.messages || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::Configuration("row order is not a permutation".into()));
        }
        let words = order.iter().flat_map(|&i| self.word(i).iter().copied()).collect();
        Ok(Self { words, ..*self })
    }
}

pub fn build_codebook(messages: usize, n: usize, gamma: f64) -> Result<Codebook> {
    if !n.is_power_of_two() {
        return Err(Error::Configuration(format!("blocklength {n} is not a power of two")));
    }
    if messages < 2 || messages > n {
        return Err(Error::Configuration(format!(
            "message count {messages} must lie in [2, {n}]"
        )));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Configuration(format!("gamma {gamma} must be positive")));
    }
    let hadamard = sylvester_hadamard(n.trailing_zeros())?;
    let amplitude = gamma.sqrt();
    let words = (0..messages)
        .flat_map(|m| (0..n).map(move |i| amplitude * hadamard.entry(m, i) as f64))
        .collect();
    Ok(Codebook {
        messages,
        n,
        amplitude,
        words,
    })
}

/// Squared distance between the partial signals of `m` and `m2` observed up
/// to time `t`. Orthogonal constant-envelope rows make it exactly
/// `t * ||x_m - x_m2||^2`.
pub fn pairwise_distance_sq(cb: &Codebook, m: usize, m2: usize, t: f64) -> Result<f64> {
    if m == m2 {
        return Err(Error::domain("pairwise_distance_sq", "indices must differ"));
    }
    if m >= cb.messages || m2 >= cb.messages {
        return Err(Error::domain("pairwise_distance_sq", "message index out of range"));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(
            "pairwise_distance_sq",
            format!("time fraction {t} outside [0, 1]"),
        ));
    }
    let full: f64 = cb.word(m).iter().zip(cb.word(m2)).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(t * full)
}

/// Per-message posterior thresholds.
///
/// At high SNR `S_m` is within 1e-17 of 1 and rounds to exactly 1, so the
/// stopping test runs on the complements: `p > S` is checked as
/// `1 - p < 1 - S` with both sides computed without cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSet {
    pub s_values: Vec<f64>,
    /// `1 - S_m`, kept separately for precision.
    pub miss_values: Vec<f64>,
}

impl ThresholdSet {
    pub fn new(s_values: Vec<f64>) -> Result<Self> {
        if s_values.is_empty() || s_values.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
            return Err(Error::Configuration("thresholds must lie in (0, 1]".into()));
        }
        let miss_values = s_values.iter().map(|s| 1.0 - s).collect();
        Ok(Self { s_values, miss_values })
    }

    /// Thresholds of 1, which a posterior can never strictly exceed: every
    /// decision waits for the end of the symbol.
    pub fn forced_synchronous(messages: usize) -> Self {
        Self {
            s_values: vec![1.0; messages],
            miss_values: vec![0.0; messages],
        }
    }
}

/// SPRT-style thresholds `S_m = 1 / (1 + M sum_{m' != m} Q(sqrt(d^2 / (2 N0))))`
/// from full-symbol distances.
pub fn thresholds(cb: &Codebook) -> ThresholdSet {
    let m_count = cb.messages as f64;
    let (s_values, miss_values) = (0..cb.messages)
        .map(|m| {
            let tail: f64 = (0..cb.messages)
                .filter(|&m2| m2 != m)
                .map(|m2| {
                    let d2 = pairwise_distance_sq(cb, m, m2, 1.0).expect("valid indices");
                    q((d2 / (2.0 * NOISE_PSD)).sqrt())
                })
                .sum();
            let weighted = m_count * tail;
            (1.0 / (1.0 + weighted), weighted / (1.0 + weighted))
        })
        .unzip();
    ThresholdSet { s_values, miss_values }
}

/// Equal-prior posterior given the accumulated observation at time `t`.
pub fn posterior(cb: &Codebook, accumulated: &[f64], t: f64) -> Result<Vec<f64>> {
    if accumulated.len() != cb.n {
        return Err(Error::domain(
            "posterior",
            format!("observation length {} != blocklength {}", accumulated.len(), cb.n),
        ));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain("posterior", format!("time fraction {t} outside [0, 1]")));
    }
    let mut out = vec![0.0; cb.messages];
    posterior_into(cb, accumulated, t, &mut out);
    Ok(out)
}

/// Softmax of the log-likelihoods `(2 / N0) (<y, x_m> - t ||x_m||^2 / 2)`.
fn posterior_into(cb: &Codebook, accumulated: &[f64], t: f64, out: &mut [f64]) {
    let scale = 2.0 / NOISE_PSD;
    let mut top = f64::NEG_INFINITY;
    for (slot, word) in out.iter_mut().zip(cb.words()) {
        let corr: f64 = accumulated.iter().zip(word).map(|(y, x)| y * x).sum();
        let energy: f64 = word.iter().map(|x| x * x).sum();
        *slot = scale * (corr - 0.5 * t * energy);
        top = top.max(*slot);
    }
    let mut total = 0.0;
    for slot in out.iter_mut() {
        *slot = (*slot - top).exp();
        total += *slot;
    }
    for slot in out.iter_mut() {
        *slot /= total;
    }
}

/// Index of the largest entry, lowest index on ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub true_message: usize,
    pub decided_message: usize,
    pub stop_fraction: f64,
    pub stopped_early: bool,
    pub correct: bool,
}

fn check_trial_inputs(cb: &Codebook, th: &ThresholdSet, steps: usize) -> Result<()> {
    if steps < MIN_STEPS {
        return Err(Error::Configuration(format!("steps {steps} < {MIN_STEPS}")));
    }
    if th.s_values.len() != cb.messages || th.miss_values.len() != cb.messages {
        return Err(Error::Configuration(format!(
            "{} thresholds for {} messages",
            th.s_values.len(),
            cb.messages
        )));
    }
    Ok(())
}

fn run_trial<R: Rng>(
    cb: &Codebook,
    th: &ThresholdSet,
    true_m: usize,
    steps: usize,
    noise_scale: f64,
    rng: &mut R,
) -> TrialOutcome {
    let dt = 1.0 / steps as f64;
    let sigma = noise_scale * dt.sqrt();
    let word = cb.word(true_m);
    let mut acc = vec![0.0; cb.n];
    let mut post = vec![0.0; cb.messages];

    let finish = |decided: usize, stop_fraction: f64, stopped_early: bool| TrialOutcome {
        true_message: true_m,
        decided_message: decided,
        stop_fraction,
        stopped_early,
        correct: decided == true_m,
    };

    for j in 1..=steps {
        for (a, x) in acc.iter_mut().zip(word) {
            let z: f64 = rng.sample(StandardNormal);
            *a += x * dt + sigma * z;
        }
        let t = j as f64 * dt;
        posterior_into(cb, &acc, t, &mut post);
        debug_assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        if j == steps {
            break;
        }
        // Among components above threshold, the largest posterior wins.
        // Only the leader can sit near 1, so only its complement needs the
        // careful sum over the other components.
        let lead = argmax(&post);
        let mut hit: Option<usize> = None;
        for (m, &p) in post.iter().enumerate() {
            let miss = if m == lead {
                post.iter()
                    .enumerate()
                    .filter(|&(k, _)| k != lead)
                    .map(|(_, v)| v)
                    .sum()
            } else {
                1.0 - p
            };
            if miss < th.miss_values[m] && hit.is_none_or(|h| p > post[h]) {
                hit = Some(m);
            }
        }
        if let Some(m) = hit {
            return finish(m, t, true);
        }
    }
    finish(argmax(&post), 1.0, false)
}

/// Simulates one symbol of message `true_m` on the stream `rng`.
pub fn simulate_trial(
    cb: &Codebook,
    th: &ThresholdSet,
    true_m: usize,
    steps: usize,
    rng: RngStreamSpec,
) -> Result<TrialOutcome> {
    simulate_trial_scaled(cb, th, true_m, steps, rng, 1.0)
}

/// [`simulate_trial`] with the noise standard deviation multiplied by
/// `noise_scale`. A scale of 0 gives the noiseless trajectory `t * x_m`.
pub fn simulate_trial_scaled(
    cb: &Codebook,
    th: &ThresholdSet,
    true_m: usize,
    steps: usize,
    rng: RngStreamSpec,
    noise_scale: f64,
) -> Result<TrialOutcome> {
    check_trial_inputs(cb, th, steps)?;
    if true_m >= cb.messages {
        return Err(Error::domain(
            "simulate_trial",
            format!("message {true_m} out of range"),
        ));
    }
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return Err(Error::domain("simulate_trial", "noise scale must be finite and >= 0"));
    }
    Ok(run_trial(cb, th, true_m, steps, noise_scale, &mut rng.rng()))
}

/// Trial `index` of a campaign: the message is drawn uniformly from stream
/// `(seed, index)`, and the same stream then drives the noise.
pub fn campaign_trial(cb: &Codebook, th: &ThresholdSet, steps: usize, seed: u64, index: u64) -> Result<TrialOutcome> {
    check_trial_inputs(cb, th, steps)?;
    Ok(campaign_trial_unchecked(cb, th, steps, seed, index))
}

fn campaign_trial_unchecked(cb: &Codebook, th: &ThresholdSet, steps: usize, seed: u64, index: u64) -> TrialOutcome {
    let mut rng = RngStreamSpec::new(seed, index).rng();
    let true_m = rng.random_range(0..cb.messages);
    run_trial(cb, th, true_m, steps, 1.0, &mut rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignStats {
    pub trials: u64,
    pub errors: u64,
    pub empirical_bler: f64,
    pub mean_stop_fraction: f64,
    /// Standard error of `mean_stop_fraction`.
    pub mean_stop_std_error: f64,
    /// Counts over `HISTOGRAM_BINS` equal bins of `[0, 1]`; a stop at 1 falls
    /// in the last bin.
    pub stop_histogram: Vec<u64>,
    pub early_stop_share: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Tally {
    trials: u64,
    errors: u64,
    early: u64,
    stop_sum: f64,
    stop_sq_sum: f64,
    histogram: Vec<u64>,
}

impl Tally {
    fn new() -> Self {
        Self {
            trials: 0,
            errors: 0,
            early: 0,
            stop_sum: 0.0,
            stop_sq_sum: 0.0,
            histogram: vec![0; HISTOGRAM_BINS],
        }
    }

    fn add(&mut self, o: &TrialOutcome) {
        self.trials += 1;
        self.errors += u64::from(!o.correct);
        self.early += u64::from(o.stopped_early);
        self.stop_sum += o.stop_fraction;
        self.stop_sq_sum += o.stop_fraction * o.stop_fraction;
        let bin = ((o.stop_fraction * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        self.histogram[bin] += 1;
    }

    fn merge(mut self, other: &Tally) -> Self {
        self.trials += other.trials;
        self.errors += other.errors;
        self.early += other.early;
        self.stop_sum += other.stop_sum;
        self.stop_sq_sum += other.stop_sq_sum;
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
        self
    }

    fn finish(self) -> CampaignStats {
        let n = self.trials as f64;
        let mean = self.stop_sum / n;
        let var = if self.trials > 1 {
            ((self.stop_sq_sum - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        CampaignStats {
            trials: self.trials,
            errors: self.errors,
            empirical_bler: self.errors as f64 / n,
            mean_stop_fraction: mean,
            mean_stop_std_error: (var / n).sqrt(),
            stop_histogram: self.histogram,
            early_stop_share: self.early as f64 / n,
        }
    }
}

/// Runs `trials` independent symbols with uniformly drawn messages.
///
/// Trials are grouped in fixed chunks that run in parallel. The chunk tallies
/// are merged in chunk order, so the result does not depend on how many
/// threads run the campaign.
pub fn run_campaign(cb: &Codebook, th: &ThresholdSet, trials: u64, steps: usize, seed: u64) -> Result<CampaignStats> {
    if trials == 0 {
        return Err(Error::Configuration("campaign needs at least one trial".into()));
    }
    check_trial_inputs(cb, th, steps)?;
    let chunks = trials.div_ceil(CHUNK);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut tally = Tally::new();
            for index in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                tally.add(&campaign_trial_unchecked(cb, th, steps, seed, index));
            }
            tally
        })
        .collect();
    Ok(tallies.iter().fold(Tally::new(), Tally::merge).finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_codebook() {
        let cb = build_codebook(2, 2, 1.0).unwrap();
        assert_eq!(cb.word(0), &[1.0, 1.0]);
        assert_eq!(cb.word(1), &[1.0, -1.0]);
        assert_eq!(pairwise_distance_sq(&cb, 0, 1, 1.0).unwrap(), 4.0);
    }

    #[test]
    fn four_by_four_geometry() {
        let cb = build_codebook(4, 4, 2.0).unwrap();
        for m in 0..4 {
            let norm: f64 = cb.word(m).iter().map(|x| x * x).sum();
            assert!((norm - 8.0).abs() < 1e-12);
            for m2 in (m + 1)..4 {
                assert!((pairwise_distance_sq(&cb, m, m2, 1.0).unwrap() - 16.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn codebook_rejects_bad_geometry() {
        assert!(build_codebook(4, 6, 1.0).is_err());
        assert!(build_codebook(8, 4, 1.0).is_err());
        assert!(build_codebook(1, 4, 1.0).is_err());
        assert!(build_codebook(2, 4, 0.0).is_err());
    }

    #[test]
    fn distance_linear_in_time() {
        let cb = build_codebook(4, 4, 2.0).unwrap();
        assert_eq!(pairwise_distance_sq(&cb, 0, 1, 0.0).unwrap(), 0.0);
        let full = pairwise_distance_sq(&cb, 1, 3, 1.0).unwrap();
        assert_eq!(pairwise_distance_sq(&cb, 1, 3, 0.5).unwrap(), 0.5 * full);
        assert!(pairwise_distance_sq(&cb, 2, 2, 0.5).is_err());
    }

    #[test]
    fn threshold_values() {
        let cb = build_codebook(4, 4, 2.0).unwrap();
        let th = thresholds(&cb);
        // 1 / (1 + 12 Q(2)), Q(2) = 0.0227501
        let want = 1.0 / (1.0 + 12.0 * 0.0227501);
        for s in &th.s_values {
            assert!((s - 0.78553).abs() < 1e-4);
            assert!((s - want).abs() < 1e-6);
        }
        for (s, miss) in th.s_values.iter().zip(&th.miss_values) {
            assert!((s + miss - 1.0).abs() < 1e-15);
        }
        // S rounds to 1 here; the complement keeps the information.
        let strong = thresholds(&build_codebook(4, 4, 100.0).unwrap());
        assert!(strong.s_values.iter().all(|&s| s == 1.0));
        // Q(sqrt(200)) = 1.04424e-45
        let want = 12.0 * 1.04424e-45;
        assert!(strong.miss_values.iter().all(|&m| (m / want - 1.0).abs() < 1e-3));
    }

    #[test]
    fn posterior_uniform_without_observation() {
        let cb = build_codebook(8, 8, 1.5).unwrap();
        let p = posterior(&cb, &[0.0; 8], 0.0).unwrap();
        assert!(p.iter().all(|&v| (v - 0.125).abs() < 1e-15));
    }

    #[test]
    fn posterior_noiseless_closed_form() {
        let cb = build_codebook(4, 4, 2.0).unwrap();
        let t = 0.37;
        let y: Vec<f64> = cb.word(2).iter().map(|x| t * x).collect();
        let p = posterior(&cb, &y, t).unwrap();
        let want = 1.0 / (1.0 + 3.0 * (-t * cb.energy()).exp());
        assert!((p[2] - want).abs() < 1e-14);
        assert!((p[0] - p[1]).abs() < 1e-16 && (p[1] - p[3]).abs() < 1e-16);
    }

    #[test]
    fn posterior_follows_row_permutation() {
        let cb = build_codebook(4, 8, 1.0).unwrap();
        let y = [0.3, -1.2, 0.5, 2.0, -0.1, 0.0, 0.7, -0.4];
        let order = [2, 0, 3, 1];
        let p = posterior(&cb, &y, 0.6).unwrap();
        let pp = posterior(&cb.permuted(&order).unwrap(), &y, 0.6).unwrap();
        for (i, &o) in order.iter().enumerate() {
            assert!((pp[i] - p[o]).abs() < 1e-15);
        }
    }

    #[test]
    fn noiseless_trial_stops_at_crossing() {
        let cb = build_codebook(4, 4, 2.0).unwrap();
        let th = thresholds(&cb);
        let s = th.s_values[0];
        let t_star = (3.0 * s / (1.0 - s)).ln() / cb.energy();
        assert!((t_star - 0.2996).abs() < 1e-4);
        let out = simulate_trial_scaled(&cb, &th, 1, 1000, RngStreamSpec::new(1, 1), 0.0).unwrap();
        assert!(out.stopped_early && out.correct);
        assert!((out.stop_fraction - 0.300).abs() < 1e-12);
        assert!(out.stop_fraction >= t_star && out.stop_fraction - t_star <= 1e-3);
    }

    #[test]
    fn saturated_threshold_still_stops_early() {
        let cb = build_codebook(8, 8, 40.0).unwrap();
        let th = thresholds(&cb);
        assert!(th.s_values.iter().all(|&s| s == 1.0));
        let out = simulate_trial(&cb, &th, 3, 200, RngStreamSpec::new(5, 0)).unwrap();
        assert!(out.stopped_early && out.correct);
        assert!(out.stop_fraction < 0.5);
    }

    #[test]
    fn unreachable_thresholds_force_end_of_symbol() {
        let cb = build_codebook(4, 4, 2.0).unwrap();
        let th = ThresholdSet::forced_synchronous(4);
        for i in 0..50 {
            let out = simulate_trial(&cb, &th, 0, 50, RngStreamSpec::new(3, i)).unwrap();
            assert_eq!(out.stop_fraction, 1.0);
            assert!(!out.stopped_early);
        }
    }

    #[test]
    fn trial_is_deterministic() {
        let cb = build_codebook(8, 8, 2.0).unwrap();
        let th = thresholds(&cb);
        let a = simulate_trial(&cb, &th, 5, 200, RngStreamSpec::new(42, 9)).unwrap();
        let b = simulate_trial(&cb, &th, 5, 200, RngStreamSpec::new(42, 9)).unwrap();
        assert_eq!(a, b);
        assert!(simulate_trial(&cb, &th, 5, 9, RngStreamSpec::new(42, 9)).is_err());
    }

    #[test]
    fn single_trial_campaign() {
        let cb = build_codebook(8, 8, 2.0).unwrap();
        let th = thresholds(&cb);
        let stats = run_campaign(&cb, &th, 1, 200, 42).unwrap();
        let one = campaign_trial(&cb, &th, 200, 42, 0).unwrap();
        assert_eq!(stats.trials, 1);
        assert_eq!(stats.errors, u64::from(!one.correct));
        assert_eq!(stats.mean_stop_fraction, one.stop_fraction);
        assert_eq!(stats.early_stop_share, if one.stopped_early { 1.0 } else { 0.0 });
        assert_eq!(stats.stop_histogram.iter().sum::<u64>(), 1);
        assert!(run_campaign(&cb, &th, 0, 200, 42).is_err());
    }

    #[test]
    fn histogram_mass_and_bler() {
        let cb = build_codebook(4, 4, 1.0).unwrap();
        let th = thresholds(&cb);
        let stats = run_campaign(&cb, &th, 5000, 50, 7).unwrap();
        assert_eq!(stats.stop_histogram.iter().sum::<u64>(), 5000);
        assert_eq!(stats.empirical_bler, stats.errors as f64 / 5000.0);
    }

    #[test]
    fn campaign_ignores_thread_count() {
        let cb = build_codebook(8, 8, 2.0).unwrap();
        let th = thresholds(&cb);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_campaign(&cb, &th, 10_000, 100, 5).unwrap())
        };
        assert_eq!(run(1), run(3));
    }
}
