//! Figure datasets, detector campaigns and the one-shot bounds table.
//!
//! Sweeps walk the blocklength grid and report `k_bits = n R*(n, eps)` as
//! the information size, so every row corresponds to a code that exactly
//! meets the normal-approximation rate. Blocklengths too short to carry any
//! information at the chosen SNR and BLER are skipped with a warning.

use std::fmt;
use std::str::FromStr;

use log::warn;

use super::config::ExperimentConfig;
use super::table::OutputTable;
use crate::detect::{build_codebook, run_campaign, thresholds, CampaignStats, HISTOGRAM_BINS};
use crate::error::{Error, Result};
use crate::fbl::{
    achievable_rate, capacity, dispersion, min_blocklength, stopping_profile, ChannelSpec, CodeSpec, StoppingProfile,
    DEFAULT_GRID_POINTS,
};
use crate::multihop::{latency_report, LatencyReport, MultihopSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    /// One-hop latency, synchronous vs early detection.
    Fig1,
    /// Multi-hop latencies versus information size.
    Fig3,
    /// Latency reduction per BLER target.
    Fig4,
    /// Latency reduction per SNR.
    Fig5,
}

impl FromStr for FigureId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig1" => Ok(Self::Fig1),
            "fig3" => Ok(Self::Fig3),
            "fig4" => Ok(Self::Fig4),
            "fig5" => Ok(Self::Fig5),
            other => Err(format!("unknown figure `{other}`")),
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fig1 => "fig1",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
        })
    }
}

/// Everything computed for one `(snr, eps, n)` point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub channel: ChannelSpec,
    pub code: CodeSpec,
    pub capacity: f64,
    pub profile: StoppingProfile,
    pub latency: LatencyReport,
}

/// Evaluates one grid point, or `None` when `R*(n, eps) <= 0`.
pub fn sweep_point(snr_db: f64, eps: f64, n: u64, spec: &MultihopSpec) -> Result<Option<SweepPoint>> {
    let channel = ChannelSpec::from_snr_db(snr_db)?;
    let rate = achievable_rate(&channel, n, eps)?;
    if rate <= 0.0 {
        warn!("skipping n = {n} at {snr_db} dB, eps = {eps:e}: achievable rate {rate:.4} <= 0");
        return Ok(None);
    }
    let code = CodeSpec::new(n, n as f64 * rate, eps)?;
    let profile = stopping_profile(&channel, &code, DEFAULT_GRID_POINTS)?;
    let latency = latency_report(n, spec, &profile)?;
    Ok(Some(SweepPoint {
        channel,
        code,
        capacity: capacity(&channel, 1.0)?,
        profile,
        latency,
    }))
}

pub fn run_figure(id: FigureId, cfg: &ExperimentConfig) -> Result<OutputTable> {
    cfg.validate()?;
    let spec = MultihopSpec::with_mean_phase(cfg.hops, cfg.mean_phase)?;
    let (snr0, eps0) = (cfg.snr_db_list[0], cfg.eps_list[0]);
    let points = |snr: f64, eps: f64| -> Result<Vec<SweepPoint>> {
        let mut out = Vec::with_capacity(cfg.n_grid.len());
        for &n in &cfg.n_grid {
            out.extend(sweep_point(snr, eps, n, &spec)?);
        }
        Ok(out)
    };

    let mut table;
    match id {
        FigureId::Fig1 => {
            table = OutputTable::new(["n", "rate", "rate_over_capacity", "latency_sd", "latency_ed"]);
            for p in points(snr0, eps0)? {
                let n = p.code.n as f64;
                table.push_row(vec![
                    n,
                    p.code.rate(),
                    p.code.rate() / p.capacity,
                    p.latency.l_sd,
                    n * p.profile.mean_stop,
                ])?;
            }
        }
        FigureId::Fig3 => {
            table = OutputTable::new([
                "k_bits",
                "n",
                "sd_df",
                "ed_df",
                "ctsd",
                "cted_lower",
                "cted_upper",
                "cted_model",
            ]);
            for p in points(snr0, eps0)? {
                let l = &p.latency;
                table.push_row(vec![
                    p.code.k_bits,
                    p.code.n as f64,
                    l.l_sd_df,
                    l.l_ed_df_mean,
                    l.l_ctsd,
                    l.l_cted_lower,
                    l.l_cted_upper,
                    l.l_cted_model,
                ])?;
            }
        }
        FigureId::Fig4 => {
            table = OutputTable::new([
                "eps",
                "k_bits",
                "reduction_lower_pct",
                "reduction_model_pct",
                "reduction_upper_pct",
            ]);
            for &eps in &cfg.eps_list {
                for p in points(snr0, eps)? {
                    let l = &p.latency;
                    table.push_row(vec![
                        eps,
                        p.code.k_bits,
                        l.reduction_lower_pct,
                        l.reduction_model_pct,
                        l.reduction_upper_pct,
                    ])?;
                }
            }
        }
        FigureId::Fig5 => {
            table = OutputTable::new([
                "snr_db",
                "rate_over_capacity",
                "reduction_lower_pct",
                "reduction_model_pct",
                "reduction_upper_pct",
            ]);
            for &snr in &cfg.snr_db_list {
                for p in points(snr, eps0)? {
                    let l = &p.latency;
                    table.push_row(vec![
                        snr,
                        p.code.rate() / p.capacity,
                        l.reduction_lower_pct,
                        l.reduction_model_pct,
                        l.reduction_upper_pct,
                    ])?;
                }
            }
        }
    }
    Ok(table)
}

/// Summary of a detector campaign plus its stop-time histogram. The two
/// tables have different shapes, so they are emitted separately.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTables {
    pub summary: OutputTable,
    pub histogram: OutputTable,
    pub stats: CampaignStats,
}

/// Runs the sequential detector on an `M`-ary Hadamard codebook of length
/// `n` at the first configured SNR.
pub fn run_simulation(cfg: &ExperimentConfig, messages: usize, n: usize) -> Result<SimulationTables> {
    cfg.validate()?;
    let snr_db = cfg.snr_db_list[0];
    let channel = ChannelSpec::from_snr_db(snr_db)?;
    let cb = build_codebook(messages, n, channel.gamma)?;
    let th = thresholds(&cb);
    let stats = run_campaign(&cb, &th, cfg.trials, cfg.steps, cfg.seed)?;

    let mut summary = OutputTable::new([
        "M",
        "n",
        "snr_db",
        "trials",
        "empirical_bler",
        "mean_stop_fraction",
        "early_stop_share",
    ]);
    summary.push_row(vec![
        messages as f64,
        n as f64,
        snr_db,
        stats.trials as f64,
        stats.empirical_bler,
        stats.mean_stop_fraction,
        stats.early_stop_share,
    ])?;

    let mut histogram = OutputTable::new(["bin_lo", "bin_hi", "count"]);
    let width = 1.0 / HISTOGRAM_BINS as f64;
    for (i, &count) in stats.stop_histogram.iter().enumerate() {
        histogram.push_row(vec![i as f64 * width, (i + 1) as f64 * width, count as f64])?;
    }
    Ok(SimulationTables {
        summary,
        histogram,
        stats,
    })
}

/// Capacity, dispersion, rate and minimum blocklength for every configured
/// `(snr, eps)` at blocklength `n`. `k_bits` defaults to `n R*(n, eps)`.
pub fn bounds_table(cfg: &ExperimentConfig, n: u64, k_bits: Option<f64>) -> Result<OutputTable> {
    cfg.validate()?;
    if n < 2 {
        return Err(Error::Configuration(format!("blocklength {n} < 2")));
    }
    let mut table = OutputTable::new([
        "snr_db",
        "eps",
        "n",
        "capacity",
        "dispersion",
        "achievable_rate",
        "k_bits",
        "min_blocklength",
    ]);
    for &snr in &cfg.snr_db_list {
        let channel = ChannelSpec::from_snr_db(snr)?;
        for &eps in &cfg.eps_list {
            let rate = achievable_rate(&channel, n, eps)?;
            let k = k_bits.unwrap_or(n as f64 * rate);
            let min_n = if k > 0.0 {
                min_blocklength(&channel, eps, k)? as f64
            } else {
                warn!("no information fits n = {n} at {snr} dB, eps = {eps:e}");
                f64::NAN
            };
            table.push_row(vec![
                snr,
                eps,
                n as f64,
                capacity(&channel, 1.0)?,
                dispersion(&channel, 1.0)?,
                rate,
                k,
                min_n,
            ])?;
        }
    }
    Ok(table)
}
