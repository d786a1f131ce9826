//! Reference computations written directly from the received-signal model
//! `y_D = h_D^H Theta G_D w s_D + n_D`, `y_U = v^H G_U^H Theta h_U sqrt(P_U) s_U + v^H n_U`,
//! with plain loops and no use of the library's composite matrices.
#![allow(dead_code)]

use num_complex::Complex64;
use ris_core::{ChannelSet, PhaseVector, SystemParams};

/// Physical reflection coefficients `Theta_ff`; the stored vector holds their conjugates.
pub fn theta(b: &PhaseVector) -> Vec<Complex64> {
    b.entries().iter().map(|z| z.conj()).collect()
}

/// `h_D^H Theta G_D` (length M) for arbitrary diagonal entries `t`.
pub fn dl_row_theta(ch: &ChannelSet, t: &[Complex64]) -> Vec<Complex64> {
    let (f, m) = ch.g_dl.dim();
    (0..m)
        .map(|j| (0..f).map(|i| ch.h_dl[i].conj() * t[i] * ch.g_dl[[i, j]]).sum())
        .collect()
}

/// `G_U^H Theta h_U` (length M) for arbitrary diagonal entries `t`.
pub fn ul_col_theta(ch: &ChannelSet, t: &[Complex64]) -> Vec<Complex64> {
    let (f, m) = ch.g_ul.dim();
    (0..m)
        .map(|j| (0..f).map(|i| ch.g_ul[[i, j]].conj() * t[i] * ch.h_ul[i]).sum())
        .collect()
}

pub fn dl_row(ch: &ChannelSet, b: &PhaseVector) -> Vec<Complex64> {
    dl_row_theta(ch, &theta(b))
}

pub fn ul_col(ch: &ChannelSet, b: &PhaseVector) -> Vec<Complex64> {
    ul_col_theta(ch, &theta(b))
}

pub fn snr_dl(ch: &ChannelSet, p: &SystemParams, b: &PhaseVector, w: &[Complex64]) -> f64 {
    let y: Complex64 = dl_row(ch, b).iter().zip(w).map(|(h, w)| h * w).sum();
    y.norm_sqr() / p.noise_dl
}

pub fn snr_ul(ch: &ChannelSet, p: &SystemParams, b: &PhaseVector, v: &[Complex64], p_u: f64) -> f64 {
    let y: Complex64 = ul_col(ch, b).iter().zip(v).map(|(g, v)| v.conj() * g).sum();
    y.norm_sqr() * p_u / p.noise_ul
}

fn norm_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Rates with the Cauchy-Schwarz-optimal beamformers at full power.
pub fn best_rates(ch: &ChannelSet, p: &SystemParams, b: &PhaseVector) -> (f64, f64) {
    let d = (1.0 + p.p_dl_max * norm_sqr(&dl_row(ch, b)) / p.noise_dl).log2();
    let u = (1.0 + p.p_ul_max * norm_sqr(&ul_col(ch, b)) / p.noise_ul).log2();
    (d, u)
}

pub fn objective(ch: &ChannelSet, p: &SystemParams, eta: f64, b: &PhaseVector) -> f64 {
    let (d, u) = best_rates(ch, p, b);
    eta * d + (1.0 - eta) * u
}

/// Elementwise normalization of `b + t d`.
pub fn retract(b: &PhaseVector, d: &[Complex64], t: f64) -> PhaseVector {
    let v = b
        .entries()
        .iter()
        .zip(d)
        .map(|(b, d)| {
            let z = b + d * t;
            z / z.norm()
        })
        .collect();
    PhaseVector::new(v).expect("unit modulus after normalization")
}

/// Central difference `(f(R_b(h d)) - f(R_b(-h d))) / 2h` of the oracle
/// objective. The two end points are differenced before the rates are
/// formed (`|x+|^2 - |x-|^2 = Re<x+ - x-, x+ + x->` and `ln_1p`), so the
/// result does not lose digits to cancellation when the derivative is small.
pub fn directional_fd(ch: &ChannelSet, p: &SystemParams, eta: f64, b: &PhaseVector, d: &[Complex64], h: f64) -> f64 {
    let tp = theta(&retract(b, d, h));
    let tm = theta(&retract(b, d, -h));
    let dt: Vec<Complex64> = tp.iter().zip(&tm).map(|(a, b)| a - b).collect();
    let rate_diff = |f: &dyn Fn(&[Complex64]) -> Vec<Complex64>, gain: f64| {
        let (xm, dx) = (f(&tm), f(&dt));
        let cross: f64 = xm
            .iter()
            .zip(&dx)
            .map(|(m, dx)| (dx.conj() * (m * 2.0 + dx)).re)
            .sum();
        (gain * cross / (1.0 + gain * norm_sqr(&xm))).ln_1p() / std::f64::consts::LN_2
    };
    let dd = rate_diff(&|t| dl_row_theta(ch, t), p.p_dl_max / p.noise_dl);
    let du = rate_diff(&|t| ul_col_theta(ch, t), p.p_ul_max / p.noise_ul);
    (eta * dd + (1.0 - eta) * du) / (2.0 * h)
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Small instance: `rows x cols` RIS, `m` BS antennas, otherwise default geometry.
pub fn small_params(m: usize, rows: usize, cols: usize) -> SystemParams {
    SystemParams {
        bs_antennas: m,
        ris_rows: rows,
        ris_cols: cols,
        ..SystemParams::default()
    }
}
