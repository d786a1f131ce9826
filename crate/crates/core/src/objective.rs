//! Two-way weighted sum-rate problem with the BS beamformers eliminated in
//! closed form.
//!
//! The optimization variable `b` is the conjugate of the RIS reflection
//! diagonal: the physical phase-shift matrix is `diag(conj(b))`. With the
//! composite channels `C_D = diag(conj(h_dl)) G_D` and
//! `C_U = diag(h_ul) conj(G_U)`, the effective BS-side channels are the rows
//! `b^H C_D` and `b^H C_U`, and the objective becomes
//!
//! `f(b) = eta log2(1 + P_D |b^H C_D|^2 / s_D) + (1 - eta) log2(1 + P_U |b^H C_U|^2 / s_U)`.
//!
//! All rates are in bits/s/Hz.

use crate::error::{check_len, Error, Result};
use crate::manifold::{rcg_maximize, CVector, PhaseVector, RcgConfig, RcgTrace};
use crate::system::{ChannelSet, SystemParams};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use std::f64::consts::LN_2;

#[derive(Clone, Debug, PartialEq)]
pub struct CompositeContext {
    /// F x M, `diag(conj(h_dl)) g_dl`.
    pub c_dl: Array2<Complex64>,
    /// F x M, `diag(h_ul) conj(g_ul)`.
    pub c_ul: Array2<Complex64>,
    pub eta: f64,
    pub p_dl_max: f64,
    pub p_ul_max: f64,
    pub noise_dl: f64,
    pub noise_ul: f64,
}

pub fn check_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::Domain(format!("eta must lie in [0, 1], got {eta}")))
    }
}

pub fn build_context(ch: &ChannelSet, params: &SystemParams, eta: f64) -> Result<CompositeContext> {
    ch.validate()?;
    check_eta(eta)?;
    check_len(params.ris_elements(), ch.ris_elements())?;
    check_len(params.bs_antennas, ch.bs_antennas())?;
    let c_dl = Array2::from_shape_fn(ch.g_dl.dim(), |(f, m)| ch.h_dl[f].conj() * ch.g_dl[(f, m)]);
    let c_ul = Array2::from_shape_fn(ch.g_ul.dim(), |(f, m)| ch.h_ul[f] * ch.g_ul[(f, m)].conj());
    Ok(CompositeContext {
        c_dl,
        c_ul,
        eta,
        p_dl_max: params.p_dl_max,
        p_ul_max: params.p_ul_max,
        noise_dl: params.noise_dl,
        noise_ul: params.noise_ul,
    })
}

fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `b^H C` as a length-M vector.
fn row_times(b: &PhaseVector, c: &Array2<Complex64>) -> CVector {
    let mut out = Array1::zeros(c.ncols());
    for (bf, row) in b.entries().iter().zip(c.rows()) {
        let bc = bf.conj();
        out.zip_mut_with(&row, |o, &x| *o += bc * x);
    }
    out
}

impl CompositeContext {
    pub fn ris_elements(&self) -> usize {
        self.c_dl.nrows()
    }

    pub fn bs_antennas(&self) -> usize {
        self.c_dl.ncols()
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self { eta, ..self.clone() })
    }

    /// Downlink effective channel `b^H C_D` (the row `h_dl^H Theta G_D`).
    pub fn effective_dl(&self, b: &PhaseVector) -> CVector {
        row_times(b, &self.c_dl)
    }

    /// Uplink effective channel `b^H C_U`; its conjugate is `h_ul^H Theta^H G_U`.
    pub fn effective_ul(&self, b: &PhaseVector) -> CVector {
        row_times(b, &self.c_ul)
    }

    fn gain_dl(&self) -> f64 {
        self.p_dl_max / self.noise_dl
    }

    fn gain_ul(&self) -> f64 {
        self.p_ul_max / self.noise_ul
    }

    /// Downlink SNR under maximum ratio transmission.
    pub fn snr_dl_opt(&self, b: &PhaseVector) -> f64 {
        self.gain_dl() * norm_sqr(&self.effective_dl(b))
    }

    /// Uplink SNR under maximum ratio combining and full user power.
    pub fn snr_ul_opt(&self, b: &PhaseVector) -> f64 {
        self.gain_ul() * norm_sqr(&self.effective_ul(b))
    }

    /// `(r_D, r_U)` with the closed-form beamformers for `b`.
    pub fn rates(&self, b: &PhaseVector) -> (f64, f64) {
        (
            (1.0 + self.snr_dl_opt(b)).log2(),
            (1.0 + self.snr_ul_opt(b)).log2(),
        )
    }

    pub fn weighted(&self, rate_dl: f64, rate_ul: f64) -> f64 {
        self.eta * rate_dl + (1.0 - self.eta) * rate_ul
    }
}

/// Maximum ratio transmission `sqrt(P_D) h^H / |h|` for `h = b^H C_D`.
pub fn optimal_w(b: &PhaseVector, ctx: &CompositeContext) -> Result<CVector> {
    check_len(ctx.ris_elements(), b.len())?;
    let h = ctx.effective_dl(b);
    let n = norm_sqr(&h).sqrt();
    if !(n > 0.0) {
        return Err(Error::ZeroChannel("downlink"));
    }
    let scale = ctx.p_dl_max.sqrt() / n;
    Ok(h.mapv(|z| z.conj() * scale))
}

/// Maximum ratio combining `h^H / |h|` for the uplink effective channel.
pub fn optimal_v(b: &PhaseVector, ctx: &CompositeContext) -> Result<CVector> {
    check_len(ctx.ris_elements(), b.len())?;
    let u = ctx.effective_ul(b);
    let n = norm_sqr(&u).sqrt();
    if !(n > 0.0) {
        return Err(Error::ZeroChannel("uplink"));
    }
    Ok(u.mapv(|z| z / n))
}

/// `|h_dl^H Theta G_D w|^2 / s_D`.
pub fn snr_downlink(b: &PhaseVector, w: &CVector, ctx: &CompositeContext) -> Result<f64> {
    check_len(ctx.ris_elements(), b.len())?;
    check_len(ctx.bs_antennas(), w.len())?;
    let h = ctx.effective_dl(b);
    let y: Complex64 = h.iter().zip(w.iter()).map(|(a, x)| a * x).sum();
    Ok(y.norm_sqr() / ctx.noise_dl)
}

/// `P_U |v^H G_U^H Theta h_ul|^2 / s_U` at `P_U = P_U,max`.
pub fn snr_uplink(b: &PhaseVector, v: &CVector, ctx: &CompositeContext) -> Result<f64> {
    check_len(ctx.ris_elements(), b.len())?;
    check_len(ctx.bs_antennas(), v.len())?;
    let u = ctx.effective_ul(b);
    let y: Complex64 = v.iter().zip(u.iter()).map(|(x, a)| x.conj() * a).sum();
    Ok(ctx.p_ul_max * y.norm_sqr() / ctx.noise_ul)
}

/// Weighted sum rate with both beamformers at their closed-form optimum.
pub fn objective_f(b: &PhaseVector, ctx: &CompositeContext) -> f64 {
    let (r_dl, r_ul) = ctx.rates(b);
    ctx.weighted(r_dl, r_ul)
}

/// Gradient of [`objective_f`] with respect to the real inner product
/// `Re<x, y>`:
///
/// `2/ln2 * [eta g_D C_D C_D^H b / (1 + g_D |b^H C_D|^2)
///          + (1-eta) g_U C_U C_U^H b / (1 + g_U |b^H C_U|^2)]`
/// with `g_D = P_D / s_D`, `g_U = P_U / s_U`.
pub fn euclid_gradient(b: &PhaseVector, ctx: &CompositeContext) -> CVector {
    let mut grad = Array1::zeros(ctx.ris_elements());
    let mut add_term = |weight: f64, gain: f64, c: &Array2<Complex64>| {
        if weight == 0.0 {
            return;
        }
        let h = row_times(b, c);
        let coef = 2.0 / LN_2 * weight * gain / (1.0 + gain * norm_sqr(&h));
        let hc = h.mapv(|z| z.conj() * coef);
        // C (C^H b) with C^H b = conj(b^H C).
        for (g, row) in grad.iter_mut().zip(c.rows()) {
            *g += row.iter().zip(hc.iter()).map(|(x, y)| x * y).sum::<Complex64>();
        }
    };
    add_term(ctx.eta, ctx.gain_dl(), &ctx.c_dl);
    add_term(1.0 - ctx.eta, ctx.gain_ul(), &ctx.c_ul);
    grad
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamformerPair {
    /// Transmit beamformer, `|w|^2 = P_D,max`.
    pub w: CVector,
    /// Unit-norm receive combiner.
    pub v: CVector,
    /// User transmit power (W).
    pub p_ul: f64,
}

impl BeamformerPair {
    /// Closed-form beamformers for `b`; a zero effective channel falls back
    /// to the first unit vector (its rate is zero either way).
    pub fn closed_form(b: &PhaseVector, ctx: &CompositeContext) -> Result<Self> {
        let basis = || {
            let mut e = Array1::zeros(ctx.bs_antennas());
            e[0] = Complex64::new(1.0, 0.0);
            e
        };
        let w = match optimal_w(b, ctx) {
            Ok(w) => w,
            Err(Error::ZeroChannel(_)) => basis().mapv(|z| z * ctx.p_dl_max.sqrt()),
            Err(e) => return Err(e),
        };
        let v = match optimal_v(b, ctx) {
            Ok(v) => v,
            Err(Error::ZeroChannel(_)) => basis(),
            Err(e) => return Err(e),
        };
        Ok(Self {
            w,
            v,
            p_ul: ctx.p_ul_max,
        })
    }
}

#[derive(Clone, Debug)]
pub struct TwoWaySolution {
    pub b: PhaseVector,
    pub beams: BeamformerPair,
    pub rate_dl: f64,
    pub rate_ul: f64,
    /// `eta r_D + (1 - eta) r_U`.
    pub objective: f64,
    pub trace: RcgTrace,
}

/// Joint optimization of the RIS phases and BS beamformers: RCG over `b` on
/// the closed-form-reduced objective, then MRT/MRC for the final `b`.
pub fn two_way_optimize(
    ch: &ChannelSet,
    params: &SystemParams,
    eta: f64,
    cfg: &RcgConfig,
    b0: &PhaseVector,
) -> Result<TwoWaySolution> {
    let ctx = build_context(ch, params, eta)?;
    optimize_context(&ctx, cfg, b0)
}

/// As [`two_way_optimize`] for a prepared context.
pub fn optimize_context(
    ctx: &CompositeContext,
    cfg: &RcgConfig,
    b0: &PhaseVector,
) -> Result<TwoWaySolution> {
    check_len(ctx.ris_elements(), b0.len())?;
    let (b, trace) = rcg_maximize(
        |b| objective_f(b, ctx),
        |b| euclid_gradient(b, ctx),
        b0,
        cfg,
    )?;
    let beams = BeamformerPair::closed_form(&b, ctx)?;
    let rate_dl = (1.0 + snr_downlink(&b, &beams.w, ctx)?).log2();
    let rate_ul = (1.0 + snr_uplink(&b, &beams.v, ctx)?).log2();
    Ok(TwoWaySolution {
        objective: ctx.weighted(rate_dl, rate_ul),
        b,
        beams,
        rate_dl,
        rate_ul,
        trace,
    })
}
