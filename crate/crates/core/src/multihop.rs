//! Latency of decode-and-forward relay chains, in normalized symbols.
//!
//! Four regimes, each over `h` identical hops with blocklength `n`:
//!
//! * low traffic, synchronous detection: every relay waits for the full
//!   codeword, `h n`;
//! * low traffic, early detection: the source spends `n`, each later relay
//!   forwards after its stopping time, `n + (h - 1) n E[tau]`;
//! * continuous transmission, synchronous detection: each hop additionally
//!   waits a random phase `phi` for its slot, `(E[phi] + 1) h n`;
//! * continuous transmission, early detection: bounded below by the phase
//!   delay alone and above by phase delay plus the early-detection chain.
//!
//! For the last regime a point model is also provided. A relay forwards at
//! `max(phi, tau)`, the later of its slot and its decision.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fbl::StoppingProfile;
use crate::numerics::RngStreamSpec;

pub const MIN_MONTE_CARLO_TRIALS: u64 = 1000;
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseModel {
    /// `phi ~ U[0, 1]`, so `E[phi] = 1/2`.
    Uniform01,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultihopSpec {
    hops: u64,
    phase_model: PhaseModel,
}

impl MultihopSpec {
    pub fn new(hops: u64, phase_model: PhaseModel) -> Result<Self> {
        if hops == 0 {
            return Err(Error::Configuration("at least one hop is required".into()));
        }
        if let PhaseModel::Fixed(phi) = phase_model {
            if !(0.0..=1.0).contains(&phi) {
                return Err(Error::Configuration(format!("phase {phi} outside [0, 1]")));
            }
        }
        Ok(Self { hops, phase_model })
    }

    pub fn uniform(hops: u64) -> Result<Self> {
        Self::new(hops, PhaseModel::Uniform01)
    }

    /// Uniform phases when `mean_phase == 0.5`, otherwise a fixed phase.
    pub fn with_mean_phase(hops: u64, mean_phase: f64) -> Result<Self> {
        if mean_phase == 0.5 {
            Self::uniform(hops)
        } else {
            Self::new(hops, PhaseModel::Fixed(mean_phase))
        }
    }

    pub fn hops(&self) -> u64 {
        self.hops
    }

    pub fn phase_model(&self) -> PhaseModel {
        self.phase_model
    }

    pub fn mean_phase(&self) -> f64 {
        match self.phase_model {
            PhaseModel::Uniform01 => 0.5,
            PhaseModel::Fixed(phi) => phi,
        }
    }
}

fn check_stop(func: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::domain(func, format!("stopping moment {value} outside [0, 1]")))
    }
}

/// Single hop, decision at the end of the codeword.
pub fn latency_sync(n: u64) -> f64 {
    n as f64
}

pub fn latency_sync_df(n: u64, hops: u64) -> f64 {
    hops as f64 * latency_sync(n)
}

/// Expected low-traffic latency when relays decide early.
pub fn latency_ed_df(n: u64, hops: u64, mean_stop: f64) -> Result<f64> {
    check_stop("latency_ed_df", mean_stop)?;
    let n = n as f64;
    Ok(n + hops.saturating_sub(1) as f64 * n * mean_stop)
}

pub fn latency_ctsd(n: u64, spec: &MultihopSpec) -> f64 {
    (spec.mean_phase() + 1.0) * latency_sync_df(n, spec.hops)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtedBounds {
    pub lower: f64,
    pub upper: f64,
}

/// `E[phi] L_SD-DF <= L_CTED <= E[phi] L_SD-DF + E[L_ED-DF]`.
pub fn cted_bounds(n: u64, spec: &MultihopSpec, mean_stop: f64) -> Result<CtedBounds> {
    let lower = spec.mean_phase() * latency_sync_df(n, spec.hops);
    let upper = lower + latency_ed_df(n, spec.hops, mean_stop)?;
    Ok(CtedBounds { lower, upper })
}

/// `h n E[max(phi, tau)]` for `phi ~ U[0, 1]`, using
/// `E[max(phi, t)] = (1 + t^2) / 2`.
pub fn cted_max_model(n: u64, spec: &MultihopSpec, second_moment_stop: f64) -> Result<f64> {
    check_stop("cted_max_model", second_moment_stop)?;
    match spec.phase_model {
        PhaseModel::Uniform01 => Ok(latency_sync_df(n, spec.hops) * 0.5 * (1.0 + second_moment_stop)),
        PhaseModel::Fixed(_) => Err(Error::Unsupported(
            "closed-form max model needs uniformly distributed phases".into(),
        )),
    }
}

/// The max model for any phase model. A fixed phase needs the whole
/// profile: `E[max(phi, tau)] = phi + int_phi^1 eps(t) dt`.
pub fn cted_point_model(n: u64, spec: &MultihopSpec, profile: &StoppingProfile) -> Result<f64> {
    match spec.phase_model {
        PhaseModel::Uniform01 => cted_max_model(n, spec, profile.second_moment_stop.min(1.0)),
        PhaseModel::Fixed(phi) => Ok(latency_sync_df(n, spec.hops) * (phi + tail_integral(profile, phi))),
    }
}

/// Trapezoid `int_from^1 eps(t) dt` on the profile grid.
fn tail_integral(profile: &StoppingProfile, from: f64) -> f64 {
    let (g, e) = (&profile.grid, &profile.eps_values);
    let mut total = 0.0;
    for j in 1..g.len() {
        let (a, b) = (g[j - 1].max(from), g[j]);
        if b <= a {
            continue;
        }
        let at = |t: f64| e[j - 1] + (e[j] - e[j - 1]) * (t - g[j - 1]) / (g[j] - g[j - 1]);
        total += 0.5 * (b - a) * (at(a) + at(b));
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Samples `sum_i n max(phi_i, tau_i)` with `phi_i ~ U[0, 1]` and `tau_i`
/// drawn from `profile` by inverse CDF. Trial `k` uses stream `(seed, k)`.
pub fn cted_monte_carlo(n: u64, hops: u64, profile: &StoppingProfile, trials: u64, seed: u64) -> Result<McEstimate> {
    if trials < MIN_MONTE_CARLO_TRIALS {
        return Err(Error::Configuration(format!(
            "{trials} trials < {MIN_MONTE_CARLO_TRIALS}"
        )));
    }
    if hops == 0 {
        return Err(Error::Configuration("at least one hop is required".into()));
    }
    let nf = n as f64;
    let sample = |k: u64| {
        let mut rng = RngStreamSpec::new(seed, k).rng();
        (0..hops)
            .map(|_| {
                let phi: f64 = rng.random();
                let tau = profile.quantile(rng.random());
                nf * phi.max(tau)
            })
            .sum::<f64>()
    };
    let chunks = trials.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            (c * CHUNK..((c + 1) * CHUNK).min(trials))
                .map(sample)
                .fold((0.0, 0.0), |(s, s2), x| (s + x, s2 + x * x))
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let k = trials as f64;
    let mean = s / k;
    let var = ((s2 - k * mean * mean) / (k - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        std_error: (var / k).sqrt(),
        trials,
    })
}

/// `100 (1 - cted / ctsd)`.
pub fn reduction_percent(ctsd: f64, cted: f64) -> Result<f64> {
    if ctsd.is_nan() || ctsd <= 0.0 {
        return Err(Error::domain(
            "reduction_percent",
            format!("reference latency {ctsd} must be > 0"),
        ));
    }
    Ok(100.0 * (1.0 - cted / ctsd))
}

/// All multi-hop latencies for one code and hop configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyReport {
    pub l_sd: f64,
    pub l_sd_df: f64,
    pub l_ed_df_mean: f64,
    pub l_ctsd: f64,
    pub l_cted_lower: f64,
    pub l_cted_upper: f64,
    pub l_cted_model: f64,
    pub reduction_lower_pct: f64,
    pub reduction_upper_pct: f64,
    pub reduction_model_pct: f64,
}

pub fn latency_report(n: u64, spec: &MultihopSpec, profile: &StoppingProfile) -> Result<LatencyReport> {
    let mean_stop = profile.mean_stop.clamp(0.0, 1.0);
    let l_ctsd = latency_ctsd(n, spec);
    let bounds = cted_bounds(n, spec, mean_stop)?;
    let model = cted_point_model(n, spec, profile)?;
    Ok(LatencyReport {
        l_sd: latency_sync(n),
        l_sd_df: latency_sync_df(n, spec.hops),
        l_ed_df_mean: latency_ed_df(n, spec.hops, mean_stop)?,
        l_ctsd,
        l_cted_lower: bounds.lower,
        l_cted_upper: bounds.upper,
        l_cted_model: model,
        reduction_lower_pct: reduction_percent(l_ctsd, bounds.lower)?,
        reduction_upper_pct: reduction_percent(l_ctsd, bounds.upper)?,
        reduction_model_pct: reduction_percent(l_ctsd, model)?,
    })
}
