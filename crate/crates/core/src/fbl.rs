//! Finite-blocklength analysis over the power-constrained AWGN channel.
//!
//! Rates use the normal approximation `C - sqrt(V/n) Q^-1(eps) + log2(n)/(2n)`.
//! The same expression, evaluated with the energy collected up to a fraction
//! `t` of the symbol, gives the block-error profile `eps(t)` of a receiver that
//! decides at `t`. Its negative derivative is the stopping-time density of the
//! optimal early-detection rule.

use std::f64::consts::LOG2_E;

use crate::error::{Error, Result};
use crate::numerics::{integrate, q, q_inv};

/// Largest blocklength [`min_blocklength`] will consider.
pub const DEFAULT_BLOCKLENGTH_CAP: u64 = 10_000_000;
pub const DEFAULT_GRID_POINTS: usize = 4096;
pub const MIN_GRID_POINTS: usize = 64;
/// Below this fraction of the symbol, `eps(t)` is pinned to its limit 1.
const SMALL_FRACTION: f64 = 1e-9;
const MOMENT_REL_TOL: f64 = 1e-10;

/// Link budget of one hop. The symbol duration is normalized to 1, so
/// `gamma = P T` is the linear SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub snr_db: f64,
    pub gamma: f64,
    pub symbol_duration: f64,
}

impl ChannelSpec {
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::domain("ChannelSpec", format!("SNR {snr_db} dB is not finite")));
        }
        Ok(Self {
            snr_db,
            gamma: 10f64.powf(snr_db / 10.0),
            symbol_duration: 1.0,
        })
    }

    pub fn from_gamma(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::domain("ChannelSpec", format!("gamma {gamma} must be positive")));
        }
        Ok(Self {
            snr_db: 10.0 * gamma.log10(),
            gamma,
            symbol_duration: 1.0,
        })
    }
}

/// An `(n, 2^k_bits, eps)` code. `k_bits` is real because sweeps over `n`
/// report `n * R*(n, eps)`, which is rarely an integer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeSpec {
    pub n: u64,
    pub k_bits: f64,
    pub target_eps: f64,
}

impl CodeSpec {
    pub fn new(n: u64, k_bits: f64, target_eps: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("CodeSpec", "blocklength must be at least 1"));
        }
        if !(k_bits >= 0.0 && k_bits.is_finite()) {
            return Err(Error::domain("CodeSpec", format!("k_bits {k_bits} must be >= 0")));
        }
        check_eps("CodeSpec", target_eps)?;
        Ok(Self { n, k_bits, target_eps })
    }

    /// The code that exactly meets the normal-approximation rate at `n`.
    pub fn at_achievable_rate(channel: &ChannelSpec, n: u64, eps: f64) -> Result<Self> {
        let rate = achievable_rate(channel, n, eps)?;
        if rate < 0.0 {
            return Err(Error::Infeasible {
                k_bits: 0.0,
                eps,
                cap: n,
            });
        }
        Self::new(n, n as f64 * rate, eps)
    }

    pub fn rate(&self) -> f64 {
        self.k_bits / self.n as f64
    }
}

fn check_eps(func: &'static str, eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(func, format!("eps {eps} outside (0, 1)")))
    }
}

fn check_fraction(func: &'static str, t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::domain(func, format!("time fraction {t} outside [0, 1]")))
    }
}

#[inline]
fn capacity_at(s: f64) -> f64 {
    0.5 * (1.0 + s).log2()
}

#[inline]
fn dispersion_at(s: f64) -> f64 {
    0.5 * s * (s + 2.0) / ((s + 1.0) * (s + 1.0)) * LOG2_E * LOG2_E
}

#[inline]
fn log_correction(n: u64) -> f64 {
    let n = n as f64;
    n.log2() / (2.0 * n)
}

/// Shannon capacity in bits per channel use with SNR `gamma * time_fraction`.
pub fn capacity(channel: &ChannelSpec, time_fraction: f64) -> Result<f64> {
    check_fraction("capacity", time_fraction)?;
    Ok(capacity_at(channel.gamma * time_fraction))
}

/// Channel dispersion in squared bits per channel use.
pub fn dispersion(channel: &ChannelSpec, time_fraction: f64) -> Result<f64> {
    check_fraction("dispersion", time_fraction)?;
    Ok(dispersion_at(channel.gamma * time_fraction))
}

/// Normal-approximation maximal rate at blocklength `n` and BLER `eps`.
/// Negative for blocklengths too short to support any message.
pub fn achievable_rate(channel: &ChannelSpec, n: u64, eps: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain("achievable_rate", format!("blocklength {n} < 2")));
    }
    check_eps("achievable_rate", eps)?;
    let q_inv_eps = q_inv(eps)?;
    Ok(rate_with(channel.gamma, n, q_inv_eps))
}

fn rate_with(gamma: f64, n: u64, q_inv_eps: f64) -> f64 {
    capacity_at(gamma) - (dispersion_at(gamma) / n as f64).sqrt() * q_inv_eps + log_correction(n)
}

pub fn min_blocklength(channel: &ChannelSpec, eps: f64, k_bits: f64) -> Result<u64> {
    min_blocklength_capped(channel, eps, k_bits, DEFAULT_BLOCKLENGTH_CAP)
}

/// Smallest `n <= cap` with `n * R*(n, eps) >= k_bits`.
pub fn min_blocklength_capped(channel: &ChannelSpec, eps: f64, k_bits: f64, cap: u64) -> Result<u64> {
    if !(k_bits > 0.0 && k_bits.is_finite()) {
        return Err(Error::domain("min_blocklength", format!("k_bits {k_bits} must be > 0")));
    }
    check_eps("min_blocklength", eps)?;
    let cap = cap.max(2);
    let qe = q_inv(eps)?;
    let (c, v) = (capacity_at(channel.gamma), dispersion_at(channel.gamma));
    let carries = |n: u64| n as f64 * rate_with(channel.gamma, n, qe) >= k_bits;
    let infeasible = Error::Infeasible { k_bits, eps, cap };

    // Closed-form guess: n = (Q^-1(eps) / (C - R))^2 V with R = k/n, i.e. the
    // positive root of C x^2 - sqrt(V) Q^-1(eps) x - k = 0 in x = sqrt(n).
    let b = v.sqrt() * qe;
    let root = (b + (b * b + 4.0 * c * k_bits).sqrt()) / (2.0 * c);
    let guess = if root.is_finite() {
        (root * root).ceil().clamp(2.0, cap as f64) as u64
    } else {
        cap
    };

    // Find some feasible n at or above the guess.
    let mut hi = guess;
    while !carries(hi) {
        if hi == cap {
            return Err(infeasible);
        }
        hi = hi.saturating_mul(2).min(cap);
    }
    // n * R*(n) is not monotone for small n, so the smallest feasible
    // blocklength is found by scanning up to the known feasible one.
    Ok((2..=hi).find(|&n| carries(n)).unwrap_or(hi))
}

/// Fraction of the symbol at which the BLER profile crosses 1/2.
/// `None` when the crossing lies outside `(0, 1]` or never happens.
pub fn transition_fraction(channel: &ChannelSpec, code: &CodeSpec) -> Option<f64> {
    let target = code.rate() - log_correction(code.n);
    if target <= 0.0 {
        return None;
    }
    let t = ((2.0 * target).exp2() - 1.0) / channel.gamma;
    (t > 0.0 && t <= 1.0).then_some(t)
}

/// BLER of a decision taken after a fraction `time_fraction` of the symbol.
pub fn bler_at(channel: &ChannelSpec, code: &CodeSpec, time_fraction: f64) -> Result<f64> {
    check_fraction("bler_at", time_fraction)?;
    Ok(bler_unchecked(channel.gamma, code, time_fraction))
}

fn bler_unchecked(gamma: f64, code: &CodeSpec, t: f64) -> f64 {
    if t < SMALL_FRACTION {
        return 1.0;
    }
    let s = gamma * t;
    let n = code.n as f64;
    let arg = (capacity_at(s) - code.rate() + log_correction(code.n)) / (dispersion_at(s) / n).sqrt();
    q(arg)
}

/// Sampled `eps(t)` together with the moments of the stopping time
/// (as fractions of the symbol duration).
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingProfile {
    pub grid: Vec<f64>,
    pub eps_values: Vec<f64>,
    pub mean_stop: f64,
    pub second_moment_stop: f64,
    pub residual_mass: f64,
}

impl StoppingProfile {
    /// Builds a profile from a tabulated curve, taking moments by the
    /// trapezoid rule on the table. The curve must start at `(0, 1)` and end
    /// at `t = 1`.
    pub fn from_curve(grid: Vec<f64>, eps_values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != eps_values.len() {
            return Err(Error::domain(
                "StoppingProfile",
                "grid and values must match, length >= 2",
            ));
        }
        if grid[0] != 0.0 || *grid.last().unwrap() != 1.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("StoppingProfile", "grid must ascend from 0 to 1"));
        }
        if eps_values[0] != 1.0 || eps_values.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::domain(
                "StoppingProfile",
                "values must lie in [0, 1] and start at 1",
            ));
        }
        let (mut mean, mut second) = (0.0, 0.0);
        for j in 1..grid.len() {
            let h = grid[j] - grid[j - 1];
            mean += 0.5 * h * (eps_values[j] + eps_values[j - 1]);
            second += h * (grid[j] * eps_values[j] + grid[j - 1] * eps_values[j - 1]);
        }
        let residual_mass = *eps_values.last().unwrap();
        Ok(Self {
            grid,
            eps_values,
            mean_stop: mean,
            second_moment_stop: second,
            residual_mass,
        })
    }

    /// Stopping-time quantile: inverse of `F(t) = 1 - eps(t)`, linear between
    /// grid points, with the residual mass `eps(1)` placed at `t = 1`.
    pub fn quantile(&self, u: f64) -> f64 {
        if u >= 1.0 - self.residual_mass {
            return 1.0;
        }
        // First grid index whose CDF exceeds u. eps may carry ~1e-16 noise,
        // which partition_point tolerates (it only needs a split point).
        let j = self
            .eps_values
            .partition_point(|&e| 1.0 - e <= u)
            .clamp(1, self.grid.len() - 1);
        let (f0, f1) = (1.0 - self.eps_values[j - 1], 1.0 - self.eps_values[j]);
        let (t0, t1) = (self.grid[j - 1], self.grid[j]);
        if f1 <= f0 {
            return t1;
        }
        t0 + (u - f0) / (f1 - f0) * (t1 - t0)
    }
}

/// Tabulates `eps(t)` on a uniform grid and integrates the stopping-time
/// moments.
///
/// Moments use integration by parts:
/// `E[tau] = int_0^1 t (-d eps) + 1 * eps(1) = int_0^1 eps(t) dt` and
/// `E[tau^2] = 2 int_0^1 t eps(t) dt`. The undetected mass `eps(1)` counts as
/// a forced decision at the end of the symbol.
pub fn stopping_profile(channel: &ChannelSpec, code: &CodeSpec, grid_points: usize) -> Result<StoppingProfile> {
    if grid_points < MIN_GRID_POINTS {
        return Err(Error::domain(
            "stopping_profile",
            format!("grid_points {grid_points} < {MIN_GRID_POINTS}"),
        ));
    }
    let gamma = channel.gamma;
    let last = (grid_points - 1) as f64;
    let grid: Vec<f64> = (0..grid_points).map(|j| j as f64 / last).collect();
    let eps_values: Vec<f64> = grid.iter().map(|&t| bler_unchecked(gamma, code, t)).collect();

    let eps = |t: f64| bler_unchecked(gamma, code, t);
    // eps is pinned to 1 below SMALL_FRACTION. When the rate sits under the
    // log correction the curve drops to ~0 right after, so that sliver is
    // integrated exactly and kept away from the adaptive rule.
    let split = transition_fraction(channel, code).filter(|&t| t > SMALL_FRACTION && t < 1.0);
    let moment = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        Ok(match split {
            Some(mid) => {
                integrate(f, SMALL_FRACTION, mid, MOMENT_REL_TOL)?.value + integrate(f, mid, 1.0, MOMENT_REL_TOL)?.value
            }
            None => integrate(f, SMALL_FRACTION, 1.0, MOMENT_REL_TOL)?.value,
        })
    };
    let mean_stop = SMALL_FRACTION + moment(&eps)?;
    let second_moment_stop = SMALL_FRACTION * SMALL_FRACTION + 2.0 * moment(&|t| t * eps(t))?;
    let residual_mass = eps(1.0);

    Ok(StoppingProfile {
        grid,
        eps_values,
        mean_stop,
        second_moment_stop,
        residual_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_db() -> ChannelSpec {
        ChannelSpec::from_snr_db(5.0).unwrap()
    }

    #[test]
    fn rate_below_log_correction() {
        // R < log2(n) / (2n): the curve leaves 1 at the clamp and is ~0 after.
        let ch = ChannelSpec::from_snr_db(0.0).unwrap();
        let code = CodeSpec::at_achievable_rate(&ch, 60, 1e-6).unwrap();
        assert!(transition_fraction(&ch, &code).is_none());
        let p = stopping_profile(&ch, &code, DEFAULT_GRID_POINTS).unwrap();
        assert!(p.mean_stop > 0.0 && p.mean_stop < 0.01);
        assert!(p.second_moment_stop <= p.mean_stop);
    }

    #[test]
    fn capacity_values() {
        let unit = ChannelSpec::from_gamma(1.0).unwrap();
        assert!((capacity(&unit, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(capacity(&five_db(), 0.0).unwrap(), 0.0);
        let c = capacity(&five_db(), 1.0).unwrap();
        assert!((c - 0.5 * (1.0 + 10f64.sqrt()).log2()).abs() < 1e-15);
        assert!((c - 1.02877).abs() < 1e-4);
        assert!(capacity(&unit, 1.5).is_err());
        assert!(capacity(&unit, -0.1).is_err());
    }

    #[test]
    fn dispersion_values() {
        assert_eq!(dispersion(&five_db(), 0.0).unwrap(), 0.0);
        assert!((dispersion(&five_db(), 1.0).unwrap() - 0.98060).abs() < 1e-4);
        let huge = ChannelSpec::from_gamma(1e6).unwrap();
        let limit = LOG2_E * LOG2_E / 2.0;
        let v = dispersion(&huge, 1.0).unwrap();
        assert!((limit - 1.04068).abs() < 1e-5);
        assert!(v < limit && limit - v < 1e-9);
        let mut prev = 0.0;
        for i in 1..=1000 {
            let d = dispersion(&ChannelSpec::from_gamma(i as f64 * 0.05).unwrap(), 1.0).unwrap();
            assert!(d > prev && d < limit);
            prev = d;
        }
    }

    #[test]
    fn rate_reference_points() {
        let ch = five_db();
        let c = capacity(&ch, 1.0).unwrap();
        let r60 = achievable_rate(&ch, 60, 1e-12).unwrap();
        assert!((r60 - 0.17870).abs() < 1e-4);
        assert!((r60 / c - 0.173627).abs() < 1e-3);
        let r80 = achievable_rate(&ch, 80, 1e-12).unwrap();
        assert!((r80 / c - 0.281310).abs() < 1e-3);
    }

    #[test]
    fn rate_at_half_eps_has_no_dispersion_term() {
        let ch = five_db();
        let n = 100;
        let r = achievable_rate(&ch, n, 0.5).unwrap();
        let want = capacity(&ch, 1.0).unwrap() + (n as f64).log2() / (2.0 * n as f64);
        assert_eq!(r, want);
    }

    #[test]
    fn rate_domain() {
        assert!(achievable_rate(&five_db(), 1, 1e-3).is_err());
        assert!(achievable_rate(&five_db(), 10, 0.0).is_err());
        assert!(achievable_rate(&five_db(), 10, 1.0).is_err());
        assert!(achievable_rate(&five_db(), 10, 1e-12).unwrap() < 0.0);
    }

    #[test]
    fn min_blocklength_anchor_points() {
        let ch = five_db();
        let carries = |n: u64, k: f64| n as f64 * achievable_rate(&ch, n, 1e-12).unwrap() >= k;
        assert_eq!(min_blocklength(&ch, 1e-12, 23.15).unwrap(), 80);
        assert!(carries(80, 23.15) && !carries(79, 23.15));
        // Fig. 3 abscissa 111.045599870647 is 200 * R*(200); 111.05 needs 201.
        assert_eq!(min_blocklength(&ch, 1e-12, 111.0455998).unwrap(), 200);
        assert_eq!(min_blocklength(&ch, 1e-12, 111.05).unwrap(), 201);
    }

    #[test]
    fn min_blocklength_near_zero_bits() {
        let ch = five_db();
        let n = min_blocklength(&ch, 1e-12, 1e-9).unwrap();
        assert!(achievable_rate(&ch, n, 1e-12).unwrap() > 0.0);
        assert!(achievable_rate(&ch, n - 1, 1e-12).unwrap() <= 0.0);
    }

    #[test]
    fn min_blocklength_errors() {
        let ch = five_db();
        assert!(min_blocklength(&ch, 1e-12, 0.0).is_err());
        assert!(matches!(
            min_blocklength_capped(&ch, 1e-12, 1e6, 1000),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn bler_endpoints_and_midpoint() {
        let ch = five_db();
        let code = CodeSpec::new(80, 80.0 * 0.289459, 1e-12).unwrap();
        assert_eq!(bler_at(&ch, &code, 0.0).unwrap(), 1.0);
        // t0 = (2^(2(R - log2(n)/(2n))) - 1) / gamma zeroes the Q argument.
        let t0 = transition_fraction(&ch, &code).unwrap();
        assert!((t0 - 0.130942).abs() < 2e-5, "{t0}");
        let mid = bler_at(&ch, &code, t0).unwrap();
        assert!((mid - 0.5).abs() < 1e-6, "{mid}");

        let tight = CodeSpec::at_achievable_rate(&ch, 80, 1e-12).unwrap();
        let end = bler_at(&ch, &tight, 1.0).unwrap();
        assert!((end / 1e-12 - 1.0).abs() < 0.05, "{end}");
    }

    #[test]
    fn profile_fig1_points() {
        let ch = five_db();
        for (n, want) in [(60u64, 4.34485), (80, 11.1322)] {
            let code = CodeSpec::at_achievable_rate(&ch, n, 1e-12).unwrap();
            let p = stopping_profile(&ch, &code, DEFAULT_GRID_POINTS).unwrap();
            let got = n as f64 * p.mean_stop;
            assert!((got / want - 1.0).abs() < 0.02, "n={n} got={got}");
        }
    }

    #[test]
    fn profile_invariants() {
        let ch = five_db();
        let code = CodeSpec::at_achievable_rate(&ch, 200, 1e-3).unwrap();
        let p = stopping_profile(&ch, &code, 512).unwrap();
        assert_eq!(p.eps_values[0], 1.0);
        assert!(p.eps_values.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        assert!(p.mean_stop > 0.0 && p.mean_stop <= 1.0);
        assert!(p.mean_stop * p.mean_stop <= p.second_moment_stop);
        assert!(p.second_moment_stop <= 1.0);
        assert!(stopping_profile(&ch, &code, 63).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        let ch = five_db();
        let code = CodeSpec::at_achievable_rate(&ch, 100, 1e-3).unwrap();
        let p = stopping_profile(&ch, &code, 1024).unwrap();
        assert!(p.quantile(0.0) >= 0.0);
        assert_eq!(p.quantile(1.0 - p.residual_mass / 2.0), 1.0);
        let t = p.quantile(0.5);
        let e = bler_at(&ch, &code, t).unwrap();
        assert!((e - 0.5).abs() < 1e-3);
        let mut prev = 0.0;
        for i in 0..100 {
            let q = p.quantile(i as f64 / 100.0);
            assert!(q >= prev);
            prev = q;
        }
    }

    #[test]
    fn from_curve_validates() {
        assert!(StoppingProfile::from_curve(vec![0.0, 1.0], vec![1.0, 0.0]).is_ok());
        assert!(StoppingProfile::from_curve(vec![0.0, 1.0], vec![0.5, 0.0]).is_err());
        assert!(StoppingProfile::from_curve(vec![0.0, 0.5], vec![1.0, 0.0]).is_err());
        let p = StoppingProfile::from_curve(vec![0.0, 0.5, 1.0], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(p.mean_stop, 1.0);
        assert_eq!(p.second_moment_stop, 1.0);
        assert_eq!(p.residual_mass, 1.0);
    }
}
