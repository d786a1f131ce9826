//! One-way alternating designs and the two low-complexity two-way
//! baselines built from them.
//!
//! For a fixed beamformer the best phase vector for a single direction is
//! the phase of `J = C w` (downlink) or `J = C_U conj(v)` (uplink), which
//! attains `|b^H J| = |J|_1`. Alternating that with MRT/MRC gives the
//! one-way solutions `b_D*` and `b_U*`; time-sharing switches between them
//! and phase-averaging blends their phases entrywise.

use crate::error::{check_len, Error, Result};
use crate::manifold::{CVector, PhaseVector};
use crate::objective::{build_context, check_eta, optimal_v, optimal_w, CompositeContext};
use crate::system::{ChannelSet, SystemParams};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    TwoWay,
    TimeSharing,
    PhaseAveraging,
    OnewayDownlinkOnly,
    OnewayUplinkOnly,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::TwoWay,
        Scheme::TimeSharing,
        Scheme::PhaseAveraging,
        Scheme::OnewayDownlinkOnly,
        Scheme::OnewayUplinkOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::TwoWay => "two_way",
            Scheme::TimeSharing => "time_sharing",
            Scheme::PhaseAveraging => "phase_averaging",
            Scheme::OnewayDownlinkOnly => "oneway_downlink_only",
            Scheme::OnewayUplinkOnly => "oneway_uplink_only",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatePoint {
    pub rate_dl: f64,
    pub rate_ul: f64,
    pub scheme: Scheme,
    pub eta: f64,
}

impl RatePoint {
    pub fn weighted(&self) -> f64 {
        self.eta * self.rate_dl + (1.0 - self.eta) * self.rate_ul
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneWayOptions {
    pub max_rounds: usize,
    /// Stop once a round improves the rate by less than this (bits/s/Hz).
    pub tol: f64,
}

impl Default for OneWayOptions {
    fn default() -> Self {
        Self {
            max_rounds: 50,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OneWaySolution {
    pub b: PhaseVector,
    /// `w` for the downlink design, `v` for the uplink one.
    pub beam: CVector,
    pub rate: f64,
    pub iterations: usize,
    /// Rate before the first round followed by the rate after each round.
    pub history: Vec<f64>,
}

/// `e^{j arg(J)}`; entries with `J_f = 0` keep their current phase.
pub fn align_phases(j: &CVector, current: &PhaseVector) -> Result<PhaseVector> {
    check_len(current.len(), j.len())?;
    let entries = j
        .iter()
        .zip(current.entries())
        .map(|(z, b)| if z.norm() > 0.0 { z / z.norm() } else { *b })
        .collect();
    PhaseVector::new(entries)
}

fn mat_vec(c: &Array2<Complex64>, x: &CVector) -> CVector {
    c.dot(x)
}

/// `J_D = diag(conj(h_dl)) G_D w = C_D w`.
pub fn downlink_alignment_target(ctx: &CompositeContext, w: &CVector) -> Result<CVector> {
    check_len(ctx.bs_antennas(), w.len())?;
    Ok(mat_vec(&ctx.c_dl, w))
}

/// `J_U = diag(v^H G_U^H) h_ul = C_U conj(v)`.
pub fn uplink_alignment_target(ctx: &CompositeContext, v: &CVector) -> Result<CVector> {
    check_len(ctx.bs_antennas(), v.len())?;
    Ok(mat_vec(&ctx.c_ul, &v.mapv(|z| z.conj())))
}

#[derive(Clone, Copy)]
enum Direction {
    Downlink,
    Uplink,
}

fn alternate(ctx: &CompositeContext, dir: Direction, opts: &OneWayOptions) -> Result<OneWaySolution> {
    let f = ctx.ris_elements();
    let rate = |b: &PhaseVector| match dir {
        Direction::Downlink => (1.0 + ctx.snr_dl_opt(b)).log2(),
        Direction::Uplink => (1.0 + ctx.snr_ul_opt(b)).log2(),
    };
    let beam = |b: &PhaseVector| match dir {
        Direction::Downlink => optimal_w(b, ctx),
        Direction::Uplink => optimal_v(b, ctx),
    };
    let target = |x: &CVector| match dir {
        Direction::Downlink => downlink_alignment_target(ctx, x),
        Direction::Uplink => uplink_alignment_target(ctx, x),
    };

    let mut b = PhaseVector::ones(f);
    let mut current = rate(&b);
    let mut history = vec![current];
    let mut x = match beam(&b) {
        Ok(x) => x,
        Err(Error::ZeroChannel(_)) => {
            return Ok(OneWaySolution {
                b,
                beam: CVector::zeros(ctx.bs_antennas()),
                rate: 0.0,
                iterations: 0,
                history,
            })
        }
        Err(e) => return Err(e),
    };
    let mut iterations = 0;
    while iterations < opts.max_rounds.max(1) {
        iterations += 1;
        let next_b = align_phases(&target(&x)?, &b)?;
        let next_x = beam(&next_b)?;
        let next = rate(&next_b);
        let gain = next - current;
        b = next_b;
        x = next_x;
        current = next;
        history.push(current);
        if gain < opts.tol {
            break;
        }
    }
    Ok(OneWaySolution {
        b,
        beam: x,
        rate: current,
        iterations,
        history,
    })
}

/// Alternating MRT / phase alignment for the downlink rate alone,
/// starting from the matched filter to the all-ones configuration.
pub fn oneway_downlink_ctx(ctx: &CompositeContext, opts: &OneWayOptions) -> Result<OneWaySolution> {
    alternate(ctx, Direction::Downlink, opts)
}

/// Uplink counterpart of [`oneway_downlink_ctx`] with MRC and full user power.
pub fn oneway_uplink_ctx(ctx: &CompositeContext, opts: &OneWayOptions) -> Result<OneWaySolution> {
    alternate(ctx, Direction::Uplink, opts)
}

pub fn oneway_downlink(
    ch: &ChannelSet,
    params: &SystemParams,
    max_rounds: usize,
    tol: f64,
) -> Result<OneWaySolution> {
    let ctx = build_context(ch, params, 1.0)?;
    oneway_downlink_ctx(&ctx, &OneWayOptions { max_rounds, tol })
}

pub fn oneway_uplink(
    ch: &ChannelSet,
    params: &SystemParams,
    max_rounds: usize,
    tol: f64,
) -> Result<OneWaySolution> {
    let ctx = build_context(ch, params, 0.0)?;
    oneway_uplink_ctx(&ctx, &OneWayOptions { max_rounds, tol })
}

/// Rates obtained by using `b` in both directions with MRT/MRC recomputed for it.
pub fn fixed_phase_point(ctx: &CompositeContext, b: &PhaseVector, scheme: Scheme, eta: f64) -> RatePoint {
    let (rate_dl, rate_ul) = ctx.rates(b);
    RatePoint {
        rate_dl,
        rate_ul,
        scheme,
        eta,
    }
}

/// Spends a fraction `eta` of the time on `b_dl` and the rest on `b_ul`;
/// the beamformers are re-optimized for whichever configuration is active.
pub fn time_sharing_point(
    ctx: &CompositeContext,
    b_dl: &PhaseVector,
    b_ul: &PhaseVector,
    eta: f64,
) -> Result<RatePoint> {
    check_eta(eta)?;
    check_len(b_dl.len(), b_ul.len())?;
    let (d_at_d, u_at_d) = ctx.rates(b_dl);
    let (d_at_u, u_at_u) = ctx.rates(b_ul);
    Ok(RatePoint {
        rate_dl: eta * d_at_d + (1.0 - eta) * d_at_u,
        rate_ul: eta * u_at_d + (1.0 - eta) * u_at_u,
        scheme: Scheme::TimeSharing,
        eta,
    })
}

/// Time-sharing between freshly computed one-way solutions.
pub fn time_sharing(ch: &ChannelSet, params: &SystemParams, eta: f64) -> Result<RatePoint> {
    let ctx = build_context(ch, params, eta)?;
    let opts = OneWayOptions::default();
    let dl = oneway_downlink_ctx(&ctx, &opts)?;
    let ul = oneway_uplink_ctx(&ctx, &opts)?;
    time_sharing_point(&ctx, &dl.b, &ul.b, eta)
}

/// Entrywise phase `eta arg(b_dl) + (1 - eta) arg(b_ul)` on principal
/// arguments in `(-pi, pi]`, without unwrapping. Near-antipodal pairs such
/// as `pi - e` and `-pi + e` therefore average to a phase near zero.
pub fn phase_averaging(b_dl: &PhaseVector, b_ul: &PhaseVector, eta: f64) -> Result<PhaseVector> {
    check_eta(eta)?;
    check_len(b_dl.len(), b_ul.len())?;
    let phases: Vec<f64> = b_dl
        .phases()
        .into_iter()
        .zip(b_ul.phases())
        .map(|(d, u)| eta * d + (1.0 - eta) * u)
        .collect();
    Ok(PhaseVector::from_phases(&phases))
}
