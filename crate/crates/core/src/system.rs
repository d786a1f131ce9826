//! Scenario parameters, array responses, path loss and seeded Rician
//! channel synthesis for the BS - RIS - user link.
//!
//! Geometry is two-dimensional. The BS carries a ULA whose axis is the
//! y-axis (broadside along +x); the RIS is a UPA whose horizontal axis is the
//! x-axis with its normal along y. Element spacing is a fixed physical
//! length expressed as a fraction of the downlink wavelength, so the uplink
//! sees a slightly smaller electrical spacing.
//!
//! Channel orientation: `g_dl` is F x M (BS to RIS), `g_ul^H` is M x F (RIS to
//! BS), `h_dl^H` is the 1 x F RIS-to-user row and `h_ul` the F x 1 user-to-RIS
//! column. Both carriers use the same construction: an F x M matrix
//! `a_ris e^{-j phi} a_bs^T` for the BS-RIS line of sight and `a_ris e^{-j phi}`
//! for the RIS-user one, each mixed with its own CN(0, 1) scattering.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// RNG stream ids; each fading component draws from its own ChaCha20 stream.
pub mod streams {
    pub const BS_RIS_DOWNLINK: u64 = 1;
    pub const BS_RIS_UPLINK: u64 = 2;
    pub const RIS_USER_DOWNLINK: u64 = 3;
    pub const RIS_USER_UPLINK: u64 = 4;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// M
    pub bs_antennas: usize,
    /// F1
    pub ris_rows: usize,
    /// F2
    pub ris_cols: usize,
    /// W
    pub p_dl_max: f64,
    /// W
    pub p_ul_max: f64,
    /// W
    pub noise_dl: f64,
    /// W
    pub noise_ul: f64,
    /// Hz
    pub f_dl: f64,
    /// Hz
    pub f_ul: f64,
    /// m
    pub bs_pos: [f64; 2],
    pub ris_pos: [f64; 2],
    pub user_pos: [f64; 2],
    /// Linear Rician factors.
    pub rician_bs_ris: f64,
    pub rician_ris_user: f64,
    pub pathloss_exp_bs_ris: f64,
    pub pathloss_exp_ris_user: f64,
    /// Linear path loss at the reference distance and frequency.
    pub pathloss_ref: f64,
    /// m
    pub ref_distance: f64,
    /// Hz
    pub ref_frequency: f64,
    /// Element spacing in downlink wavelengths (BS and RIS).
    pub antenna_spacing: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            bs_antennas: 4,
            ris_rows: 10,
            ris_cols: 6,
            p_dl_max: 5.0,
            p_ul_max: 0.5,
            noise_dl: dbm_to_watts(-70.0),
            noise_ul: dbm_to_watts(-70.0),
            f_dl: 1855e6,
            f_ul: 1760e6,
            bs_pos: [0.0, 0.0],
            ris_pos: [45.0, 5.0],
            user_pos: [50.0, 0.0],
            rician_bs_ris: 2.0,
            rician_ris_user: 0.5,
            pathloss_exp_bs_ris: 2.0,
            pathloss_exp_ris_user: 2.8,
            pathloss_ref: db_to_linear(-30.0),
            ref_distance: 1.0,
            ref_frequency: 1e9,
            antenna_spacing: 0.5,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * db_to_linear(dbm)
}

impl SystemParams {
    /// F = F1 * F2.
    pub fn ris_elements(&self) -> usize {
        self.ris_rows * self.ris_cols
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.bs_antennas < 1 || self.ris_rows < 1 || self.ris_cols < 1 {
            return bad("antenna and element counts must be at least 1".into());
        }
        for (name, v) in [
            ("p_dl_max", self.p_dl_max),
            ("p_ul_max", self.p_ul_max),
            ("noise_dl", self.noise_dl),
            ("noise_ul", self.noise_ul),
            ("f_dl", self.f_dl),
            ("f_ul", self.f_ul),
            ("ref_distance", self.ref_distance),
            ("ref_frequency", self.ref_frequency),
            ("antenna_spacing", self.antenna_spacing),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        for (name, v) in [
            ("rician_bs_ris", self.rician_bs_ris),
            ("rician_ris_user", self.rician_ris_user),
        ] {
            if !(v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(self.pathloss_ref > 0.0 && self.pathloss_ref <= 1.0) {
            return bad(format!("pathloss_ref must lie in (0, 1], got {}", self.pathloss_ref));
        }
        for (name, v) in [
            ("pathloss_exp_bs_ris", self.pathloss_exp_bs_ris),
            ("pathloss_exp_ris_user", self.pathloss_exp_ris_user),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        for p in [self.bs_pos, self.ris_pos, self.user_pos] {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return bad("positions must be finite".into());
            }
        }
        Ok(())
    }

    /// Moves the RIS to horizontal offset `d` from the BS, keeping its height.
    pub fn with_bs_ris_distance(&self, d: f64) -> Self {
        let mut p = self.clone();
        p.ris_pos[0] = self.bs_pos[0] + d;
        p
    }

    /// Sets F by resizing F2 with F1 fixed.
    pub fn with_ris_elements(&self, f: usize) -> Result<Self> {
        if f == 0 || f % self.ris_rows != 0 {
            return Err(Error::InvalidParams(format!(
                "F = {f} is not a positive multiple of F1 = {}",
                self.ris_rows
            )));
        }
        let mut p = self.clone();
        p.ris_cols = f / self.ris_rows;
        Ok(p)
    }

    pub fn wavelength(&self, freq: f64) -> f64 {
        SPEED_OF_LIGHT / freq
    }

    /// Electrical element spacing at `freq`, in wavelengths.
    pub fn spacing_at(&self, freq: f64) -> f64 {
        self.antenna_spacing * freq / self.f_dl
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Link {
    BsRis,
    RisUser,
}

impl Link {
    fn exponent(self, params: &SystemParams) -> f64 {
        match self {
            Link::BsRis => params.pathloss_exp_bs_ris,
            Link::RisUser => params.pathloss_exp_ris_user,
        }
    }

    fn rician(self, params: &SystemParams) -> f64 {
        match self {
            Link::BsRis => params.rician_bs_ris,
            Link::RisUser => params.rician_ris_user,
        }
    }
}

/// `C0 (f/f0)^-2 (d/D0)^-alpha` with the exponent of `link`.
pub fn path_loss(distance: f64, freq: f64, link: Link, params: &SystemParams) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!("link distance must be positive, got {distance}")));
    }
    if !(freq > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {freq}")));
    }
    Ok(params.pathloss_ref
        * (freq / params.ref_frequency).powi(-2)
        * (distance / params.ref_distance).powf(-link.exponent(params)))
}

/// ULA response `e^{j 2 pi s m sin(angle)}`, `m = 0..M-1`.
pub fn steering_ula(m: usize, angle: f64, spacing: f64) -> Array1<Complex64> {
    let k = 2.0 * PI * spacing * angle.sin();
    Array1::from_shape_fn(m, |i| Complex64::from_polar(1.0, k * i as f64))
}

/// UPA response, row-major over `(f1, f2)`:
/// `e^{j 2 pi s (f1 sin(el) + f2 cos(el) sin(az))}`.
pub fn steering_upa(
    rows: usize,
    cols: usize,
    azimuth: f64,
    elevation: f64,
    spacing: f64,
) -> Array1<Complex64> {
    let k_row = 2.0 * PI * spacing * elevation.sin();
    let k_col = 2.0 * PI * spacing * elevation.cos() * azimuth.sin();
    Array1::from_shape_fn(rows * cols, |idx| {
        let (r, c) = (idx / cols, idx % cols);
        Complex64::from_polar(1.0, k_row * r as f64 + k_col * c as f64)
    })
}

/// Line-of-sight angles and distances derived from node positions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LosGeometry {
    pub bs_ris_distance: f64,
    /// Departure angle at the BS array, from broadside.
    pub bs_departure: f64,
    /// Azimuth of the BS as seen from the RIS, from the RIS normal.
    pub ris_azimuth_bs: f64,
    pub ris_user_distance: f64,
    /// Azimuth of the user as seen from the RIS.
    pub ris_azimuth_user: f64,
}

fn separation(from: [f64; 2], to: [f64; 2], what: &str) -> Result<(f64, f64, f64)> {
    let (dx, dy) = (to[0] - from[0], to[1] - from[1]);
    let dist = dx.hypot(dy);
    if !(dist > 0.0) {
        return Err(Error::Geometry(format!("{what} positions coincide")));
    }
    Ok((dx, dy, dist))
}

impl LosGeometry {
    pub fn from_params(params: &SystemParams) -> Result<Self> {
        let (_, dy, d_br) = separation(params.bs_pos, params.ris_pos, "BS and RIS")?;
        let (bx, _, _) = separation(params.ris_pos, params.bs_pos, "BS and RIS")?;
        let (ux, _, d_ru) = separation(params.ris_pos, params.user_pos, "RIS and user")?;
        Ok(Self {
            bs_ris_distance: d_br,
            bs_departure: (dy / d_br).asin(),
            ris_azimuth_bs: (bx / d_br).asin(),
            ris_user_distance: d_ru,
            ris_azimuth_user: (ux / d_ru).asin(),
        })
    }

    /// Propagation phase `2 pi d / lambda` reduced to `[0, 2pi)`.
    pub fn propagation_phase(distance: f64, wavelength: f64) -> f64 {
        (2.0 * PI * distance / wavelength).rem_euclid(2.0 * PI)
    }
}

/// One channel realization.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    /// F x M downlink BS-to-RIS matrix.
    pub g_dl: Array2<Complex64>,
    /// F x M; its conjugate transpose is the uplink RIS-to-BS matrix.
    pub g_ul: Array2<Complex64>,
    /// Length F; `h_dl^H` is the RIS-to-user row.
    pub h_dl: Array1<Complex64>,
    /// Length F user-to-RIS column.
    pub h_ul: Array1<Complex64>,
}

impl ChannelSet {
    pub fn ris_elements(&self) -> usize {
        self.h_dl.len()
    }

    pub fn bs_antennas(&self) -> usize {
        self.g_dl.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (f, m) = self.g_dl.dim();
        if self.g_ul.dim() != (f, m) {
            return Err(Error::Dimension {
                expected: f * m,
                got: self.g_ul.len(),
            });
        }
        crate::error::check_len(f, self.h_dl.len())?;
        crate::error::check_len(f, self.h_ul.len())?;
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        if !(self.g_dl.iter().all(finite)
            && self.g_ul.iter().all(finite)
            && self.h_dl.iter().all(finite)
            && self.h_ul.iter().all(finite))
        {
            return Err(Error::InvalidParams("channel contains non-finite entries".into()));
        }
        Ok(())
    }
}

fn rician_weights(beta: f64) -> (f64, f64) {
    if beta.is_infinite() {
        (1.0, 0.0)
    } else {
        ((beta / (1.0 + beta)).sqrt(), (1.0 / (1.0 + beta)).sqrt())
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn cn01(rng: &mut ChaCha20Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}

/// `sqrt(L) (k_los * los + k_nlos * CN(0,1))`, NLoS drawn row-major.
fn mix(los: Array2<Complex64>, gain: f64, beta: f64, rng: &mut ChaCha20Rng) -> Array2<Complex64> {
    let (k_los, k_nlos) = rician_weights(beta);
    let amp = gain.sqrt();
    los.mapv(|l| amp * (k_los * l + k_nlos * cn01(rng)))
}

fn outer_t(col: &Array1<Complex64>, row: &Array1<Complex64>, phase: f64) -> Array2<Complex64> {
    let rot = Complex64::from_polar(1.0, -phase);
    Array2::from_shape_fn((col.len(), row.len()), |(i, j)| col[i] * rot * row[j])
}

/// Draws one realization. Deterministic in `(params, seed)`; each fading
/// component uses its own RNG stream (see [`streams`]).
pub fn synthesize_channels(params: &SystemParams, seed: u64) -> Result<ChannelSet> {
    params.validate()?;
    let geo = LosGeometry::from_params(params)?;
    let (m, rows, cols) = (params.bs_antennas, params.ris_rows, params.ris_cols);

    let link = |freq: f64| {
        let s = params.spacing_at(freq);
        let lambda = params.wavelength(freq);
        let a_bs = steering_ula(m, geo.bs_departure, s);
        let a_ris_bs = steering_upa(rows, cols, geo.ris_azimuth_bs, 0.0, s);
        let a_ris_user = steering_upa(rows, cols, geo.ris_azimuth_user, 0.0, s);
        let phi_br = LosGeometry::propagation_phase(geo.bs_ris_distance, lambda);
        let phi_ru = LosGeometry::propagation_phase(geo.ris_user_distance, lambda);
        (a_bs, a_ris_bs, a_ris_user, phi_br, phi_ru)
    };

    let (beta_br, beta_ru) = (Link::BsRis.rician(params), Link::RisUser.rician(params));
    let one = Array1::from_elem(1, Complex64::new(1.0, 0.0));

    let draw = |freq: f64, bs_ris_stream: u64, ris_user_stream: u64| -> Result<_> {
        let (a_bs, a_ris_bs, a_ris_user, phi_br, phi_ru) = link(freq);
        let l_br = path_loss(geo.bs_ris_distance, freq, Link::BsRis, params)?;
        let l_ru = path_loss(geo.ris_user_distance, freq, Link::RisUser, params)?;
        let g = mix(
            outer_t(&a_ris_bs, &a_bs, phi_br),
            l_br,
            beta_br,
            &mut stream_rng(seed, bs_ris_stream),
        );
        let h = mix(
            outer_t(&a_ris_user, &one, phi_ru),
            l_ru,
            beta_ru,
            &mut stream_rng(seed, ris_user_stream),
        );
        Ok((g, h.column(0).to_owned()))
    };
    let (g_dl, h_dl) = draw(params.f_dl, streams::BS_RIS_DOWNLINK, streams::RIS_USER_DOWNLINK)?;
    let (g_ul, h_ul) = draw(params.f_ul, streams::BS_RIS_UPLINK, streams::RIS_USER_UPLINK)?;

    let ch = ChannelSet {
        g_dl,
        g_ul,
        h_dl,
        h_ul,
    };
    ch.validate()?;
    Ok(ch)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close_rel(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn path_loss_examples() {
        let p = SystemParams::default();
        let c0 = path_loss(1.0, 1e9, Link::BsRis, &p).unwrap();
        assert!(close_rel(c0, 1e-3, 1e-12));
        assert!(close_rel(path_loss(1.0, 2e9, Link::BsRis, &p).unwrap(), c0 / 4.0, 1e-12));
        assert!(close_rel(path_loss(10.0, 1e9, Link::BsRis, &p).unwrap(), c0 / 100.0, 1e-12));
        let ru = path_loss(10.0, 1e9, Link::RisUser, &p).unwrap();
        assert!(close_rel(ru, c0 * 10f64.powf(-2.8), 1e-12));
        assert!(path_loss(0.0, 1e9, Link::BsRis, &p).is_err());
        assert!(path_loss(-1.0, 1e9, Link::BsRis, &p).is_err());
    }

    #[test]
    fn ula_examples() {
        assert!(steering_ula(5, 0.0, 0.5).iter().all(|z| (z - 1.0).norm() < 1e-15));
        assert_eq!(steering_ula(1, 1.2, 0.5).to_vec(), vec![Complex64::new(1.0, 0.0)]);
        let endfire = steering_ula(4, PI / 2.0, 0.5);
        for (m, z) in endfire.iter().enumerate() {
            let expect = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert!((z - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn upa_examples() {
        assert!(steering_upa(3, 4, 0.0, 0.0, 0.5).iter().all(|z| (z - 1.0).norm() < 1e-15));
        assert_eq!(steering_upa(1, 1, 0.7, 0.3, 0.5).len(), 1);
        assert!((steering_upa(1, 1, 0.7, 0.3, 0.5)[0] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn upa_matches_explicit_double_loop() {
        let (rows, cols, az, el, s) = (3, 5, 0.61, -0.27, 0.47);
        let a = steering_upa(rows, cols, az, el, s);
        let mut idx = 0;
        for r in 0..rows {
            let row_factor = Complex64::from_polar(1.0, 2.0 * PI * s * r as f64 * el.sin());
            for c in 0..cols {
                let col_factor =
                    Complex64::from_polar(1.0, 2.0 * PI * s * c as f64 * el.cos() * az.sin());
                assert!((a[idx] - row_factor * col_factor).norm() < 1e-12);
                idx += 1;
            }
        }
    }

    #[test]
    fn geometry_defaults() {
        let p = SystemParams::default().with_bs_ris_distance(20.0);
        let g = LosGeometry::from_params(&p).unwrap();
        assert!(close_rel(g.bs_ris_distance, (425f64).sqrt(), 1e-12));
        assert!(close_rel(g.ris_user_distance, (925f64).sqrt(), 1e-12));
        assert!(g.bs_departure > 0.0 && g.ris_azimuth_bs < 0.0 && g.ris_azimuth_user > 0.0);
    }

    #[test]
    fn coincident_nodes_are_rejected() {
        let mut p = SystemParams::default();
        p.ris_pos = p.user_pos;
        assert!(matches!(synthesize_channels(&p, 0), Err(Error::Geometry(_))));
    }

    #[test]
    fn synthesis_is_deterministic_and_shaped() {
        let p = SystemParams::default();
        let a = synthesize_channels(&p, 42).unwrap();
        let b = synthesize_channels(&p, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.g_dl.dim(), (60, 4));
        assert_eq!(a.g_ul.dim(), (60, 4));
        assert_eq!(a.h_dl.len(), 60);
        let c = synthesize_channels(&p, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pure_los_has_flat_magnitudes() {
        let mut p = SystemParams::default();
        p.rician_bs_ris = 1e12;
        p.rician_ris_user = 1e12;
        let geo = LosGeometry::from_params(&p).unwrap();
        let ch = synthesize_channels(&p, 1).unwrap();
        let l_dl = path_loss(geo.bs_ris_distance, p.f_dl, Link::BsRis, &p).unwrap().sqrt();
        let l_ul = path_loss(geo.bs_ris_distance, p.f_ul, Link::BsRis, &p).unwrap().sqrt();
        let r_dl = path_loss(geo.ris_user_distance, p.f_dl, Link::RisUser, &p).unwrap().sqrt();
        let r_ul = path_loss(geo.ris_user_distance, p.f_ul, Link::RisUser, &p).unwrap().sqrt();
        assert!(ch.g_dl.iter().all(|z| close_rel(z.norm(), l_dl, 1e-4)));
        assert!(ch.g_ul.iter().all(|z| close_rel(z.norm(), l_ul, 1e-4)));
        assert!(ch.h_dl.iter().all(|z| close_rel(z.norm(), r_dl, 1e-4)));
        assert!(ch.h_ul.iter().all(|z| close_rel(z.norm(), r_ul, 1e-4)));
    }

    #[test]
    fn frequency_separation_gives_distinct_matrices() {
        let mut p = SystemParams::default();
        let ch = synthesize_channels(&p, 5).unwrap();
        assert!(ch.g_dl.iter().zip(ch.g_ul.iter()).all(|(a, b)| a != b));
        p.f_ul = p.f_dl;
        let ch = synthesize_channels(&p, 5).unwrap();
        assert!(ch.g_dl.iter().zip(ch.g_ul.iter()).all(|(a, b)| a != b));
    }

    #[test]
    fn ris_element_resizing() {
        let p = SystemParams::default();
        assert_eq!(p.with_ris_elements(200).unwrap().ris_cols, 20);
        assert!(p.with_ris_elements(25).is_err());
    }
}
