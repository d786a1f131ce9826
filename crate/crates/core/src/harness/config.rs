//! TOML scenario files.
//!
//! Every key is optional; missing keys fall back to the built-in defaults.
//! Physical quantities may be given as a bare number in linear SI units or
//! as a string with a unit suffix:
//!
//! ```toml
//! [system]
//! bs_antennas = 4
//! ris_rows = 10
//! ris_cols = 6
//! p_dl_max = "5 W"
//! p_ul_max = "27 dBm"
//! noise_dl = "-70 dBm"
//! noise_ul = "-70 dBm"
//! f_dl = "1855 MHz"
//! f_ul = "1760 MHz"
//! bs_pos = [0.0, 0.0]
//! ris_pos = [45.0, 5.0]
//! user_pos = [50.0, 0.0]
//! rician_bs_ris = 2.0
//! rician_ris_user = "-3 dB"
//! pathloss_exp_bs_ris = 2.0
//! pathloss_exp_ris_user = 2.8
//! pathloss_ref = "-30 dB"
//! ref_distance = 1.0
//! ref_frequency = "1 GHz"
//! antenna_spacing = 0.5
//!
//! [optimizer]
//! max_iters = 1000
//! grad_tol = 1e-6
//!
//! [oneway]
//! max_rounds = 50
//! tol = 1e-6
//!
//! [sweep]
//! variable = "bs_ris_distance"   # or "eta", "ris_elements"
//! values = [5.0, 20.0, 45.0]
//! schemes = ["two_way", "time_sharing"]
//! seeds = 100
//! seed = 0
//! eta = 0.5
//! record_timing = false
//! ```

use super::{SweepSpec, SweepVariable};
use crate::error::{Error, Result};
use crate::heuristics::{OneWayOptions, Scheme};
use crate::manifold::RcgConfig;
use crate::system::{db_to_linear, dbm_to_watts, SystemParams};
use serde::Deserialize;
use std::path::Path;

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    Power,
    Ratio,
    Frequency,
}

fn split_unit(s: &str) -> Result<(f64, String)> {
    let s = s.trim();
    let pos = s
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .unwrap_or(s.len());
    let (num, unit) = s.split_at(pos);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse a number from `{s}`")))?;
    Ok((value, unit.trim().to_string()))
}

impl Quantity {
    pub fn to_linear(&self, dim: Dimension) -> Result<f64> {
        let (value, unit) = match self {
            Quantity::Number(v) => return Ok(*v),
            Quantity::Text(s) => split_unit(s)?,
        };
        let out = match (dim, unit.as_str()) {
            (_, "") => value,
            (Dimension::Power, "W") => value,
            (Dimension::Power, "mW") => value * 1e-3,
            (Dimension::Power, "dBm") => dbm_to_watts(value),
            (Dimension::Power, "dBW") => db_to_linear(value),
            (Dimension::Ratio, "dB") => db_to_linear(value),
            (Dimension::Frequency, "Hz") => value,
            (Dimension::Frequency, "kHz") => value * 1e3,
            (Dimension::Frequency, "MHz") => value * 1e6,
            (Dimension::Frequency, "GHz") => value * 1e9,
            (dim, unit) => {
                return Err(Error::Config(format!("unit `{unit}` is not valid for a {dim:?} value")))
            }
        };
        Ok(out)
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub bs_antennas: Option<usize>,
    pub ris_rows: Option<usize>,
    pub ris_cols: Option<usize>,
    pub p_dl_max: Option<Quantity>,
    pub p_ul_max: Option<Quantity>,
    pub noise_dl: Option<Quantity>,
    pub noise_ul: Option<Quantity>,
    pub f_dl: Option<Quantity>,
    pub f_ul: Option<Quantity>,
    pub bs_pos: Option<[f64; 2]>,
    pub ris_pos: Option<[f64; 2]>,
    pub user_pos: Option<[f64; 2]>,
    pub rician_bs_ris: Option<Quantity>,
    pub rician_ris_user: Option<Quantity>,
    pub pathloss_exp_bs_ris: Option<f64>,
    pub pathloss_exp_ris_user: Option<f64>,
    pub pathloss_ref: Option<Quantity>,
    pub ref_distance: Option<f64>,
    pub ref_frequency: Option<Quantity>,
    pub antenna_spacing: Option<f64>,
}

impl SystemSection {
    pub fn apply(&self, mut p: SystemParams) -> Result<SystemParams> {
        use Dimension::*;
        let q = |slot: &mut f64, value: &Option<Quantity>, dim| -> Result<()> {
            if let Some(v) = value {
                *slot = v.to_linear(dim)?;
            }
            Ok(())
        };
        if let Some(v) = self.bs_antennas {
            p.bs_antennas = v;
        }
        if let Some(v) = self.ris_rows {
            p.ris_rows = v;
        }
        if let Some(v) = self.ris_cols {
            p.ris_cols = v;
        }
        q(&mut p.p_dl_max, &self.p_dl_max, Power)?;
        q(&mut p.p_ul_max, &self.p_ul_max, Power)?;
        q(&mut p.noise_dl, &self.noise_dl, Power)?;
        q(&mut p.noise_ul, &self.noise_ul, Power)?;
        q(&mut p.f_dl, &self.f_dl, Frequency)?;
        q(&mut p.f_ul, &self.f_ul, Frequency)?;
        q(&mut p.rician_bs_ris, &self.rician_bs_ris, Ratio)?;
        q(&mut p.rician_ris_user, &self.rician_ris_user, Ratio)?;
        q(&mut p.pathloss_ref, &self.pathloss_ref, Ratio)?;
        q(&mut p.ref_frequency, &self.ref_frequency, Frequency)?;
        if let Some(v) = self.bs_pos {
            p.bs_pos = v;
        }
        if let Some(v) = self.ris_pos {
            p.ris_pos = v;
        }
        if let Some(v) = self.user_pos {
            p.user_pos = v;
        }
        if let Some(v) = self.pathloss_exp_bs_ris {
            p.pathloss_exp_bs_ris = v;
        }
        if let Some(v) = self.pathloss_exp_ris_user {
            p.pathloss_exp_ris_user = v;
        }
        if let Some(v) = self.ref_distance {
            p.ref_distance = v;
        }
        if let Some(v) = self.antenna_spacing {
            p.antenna_spacing = v;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneWaySection {
    pub max_rounds: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: Option<SweepVariable>,
    pub values: Option<Vec<f64>>,
    pub schemes: Option<Vec<Scheme>>,
    pub seeds: Option<usize>,
    pub seed: Option<u64>,
    pub eta: Option<f64>,
    pub record_timing: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub optimizer: Option<RcgConfig>,
    #[serde(default)]
    pub oneway: OneWaySection,
    #[serde(default)]
    pub sweep: SweepSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path`; the literal name `defaults` selects the built-in scenario.
    pub fn load(path: &Path) -> Result<Self> {
        if path.as_os_str() == "defaults" {
            return Ok(Self::default());
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn system(&self) -> Result<SystemParams> {
        self.system.apply(SystemParams::default())
    }

    pub fn optimizer(&self) -> Result<RcgConfig> {
        let cfg = self.optimizer.clone().unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn oneway(&self) -> OneWayOptions {
        let d = OneWayOptions::default();
        OneWayOptions {
            max_rounds: self.oneway.max_rounds.unwrap_or(d.max_rounds),
            tol: self.oneway.tol.unwrap_or(d.tol),
        }
    }

    /// Sweep description with unspecified fields taken from
    /// [`SweepSpec::default_for`].
    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let s = &self.sweep;
        let variable = s.variable.unwrap_or(SweepVariable::BsRisDistance);
        let mut spec = SweepSpec::default_for(variable);
        spec.base = self.system()?;
        spec.optimizer = self.optimizer()?;
        spec.oneway = self.oneway();
        if let Some(v) = &s.values {
            spec.values = v.clone();
        }
        if let Some(v) = &s.schemes {
            spec.schemes = v.clone();
        }
        if let Some(v) = s.seeds {
            spec.seeds = v;
        }
        if let Some(v) = s.seed {
            spec.base_seed = v;
        }
        if let Some(v) = s.eta {
            spec.eta = v;
        }
        if let Some(v) = s.record_timing {
            spec.record_timing = v;
        }
        spec.validate()?;
        Ok(spec)
    }
}
