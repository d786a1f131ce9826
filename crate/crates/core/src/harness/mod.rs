//! Seeded experiment sweeps, rate regions and result files.
//!
//! A sweep cell is one (value, seed) pair: it synthesizes a single channel
//! realization and evaluates every requested scheme on it, so scheme
//! comparisons are paired. Cells run in parallel; records are sorted
//! before they are returned.

pub mod config;
pub mod output;

use crate::error::{Error, Result};
use crate::heuristics::{
    fixed_phase_point, oneway_downlink_ctx, oneway_uplink_ctx, phase_averaging, time_sharing_point,
    OneWayOptions, OneWaySolution, Scheme,
};
use crate::manifold::{project_tangent, retract, CVector, PhaseVector, RcgConfig};
use crate::objective::{build_context, euclid_gradient, optimize_context, CompositeContext};
use crate::system::{synthesize_channels, SystemParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use config::ConfigFile;
pub use output::{
    emit_csv, emit_frontier_csv, emit_plot, emit_region_overlay, emit_summary_csv, read_csv, PlotKind,
    CSV_HEADER,
};

/// Environment variable that overrides the default base seed.
pub const SEED_ENV: &str = "RIS_SEED";

/// Tie tolerance (bits/s/Hz) used when comparing mean frontiers.
pub const FRONTIER_TIE_TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    BsRisDistance,
    Eta,
    RisElements,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::BsRisDistance => "bs_ris_distance",
            SweepVariable::Eta => "eta",
            SweepVariable::RisElements => "ris_elements",
        }
    }

    /// Axis label with units.
    pub fn label(self) -> &'static str {
        match self {
            SweepVariable::BsRisDistance => "BS-RIS horizontal distance d (m)",
            SweepVariable::Eta => "weight eta",
            SweepVariable::RisElements => "number of reflecting elements F",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SweepVariable::BsRisDistance, SweepVariable::Eta, SweepVariable::RisElements]
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep variable `{s}`")))
    }
}

/// Default base seed: `RIS_SEED` when set and parseable, otherwise 0.
pub fn default_seed() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(0)
}

/// Uniform random phases from a ChaCha8 stream seeded with `seed`.
pub fn random_start(len: usize, seed: u64) -> PhaseVector {
    PhaseVector::random(len, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `{0, 0.05, ..., 1}`.
pub fn default_eta_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 20.0).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub seeds: usize,
    /// Cell seed for seed index `s` is `base_seed + s`.
    pub base_seed: u64,
    /// Weight used when `variable` is not `eta`.
    pub eta: f64,
    pub base: SystemParams,
    pub optimizer: RcgConfig,
    pub oneway: OneWayOptions,
    /// Write wall-clock milliseconds to the records; otherwise `ms` is 0.
    pub record_timing: bool,
}

impl SweepSpec {
    /// Default grid for each variable with all schemes and 100 seeds.
    pub fn default_for(variable: SweepVariable) -> Self {
        let values = match variable {
            SweepVariable::BsRisDistance => (0..=10).map(|k| 5.0 * k as f64).collect(),
            SweepVariable::Eta => default_eta_grid(),
            SweepVariable::RisElements => (1..=10).map(|k| 20.0 * k as f64).collect(),
        };
        Self {
            variable,
            values,
            schemes: Scheme::ALL.to_vec(),
            seeds: 100,
            base_seed: default_seed(),
            eta: 0.5,
            base: SystemParams::default(),
            optimizer: RcgConfig::default(),
            oneway: OneWayOptions::default(),
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParams("sweep values are empty".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidParams("sweep schemes are empty".into()));
        }
        if self.seeds == 0 {
            return Err(Error::InvalidParams("sweep needs at least one seed".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite sweep value {v}")));
        }
        crate::objective::check_eta(self.eta)?;
        if self.variable == SweepVariable::Eta {
            for &v in &self.values {
                crate::objective::check_eta(v)?;
            }
        }
        self.base.validate()?;
        self.optimizer.validate()
    }

    /// System parameters and weight for one sweep value.
    pub fn cell_params(&self, value: f64) -> Result<(SystemParams, f64)> {
        match self.variable {
            SweepVariable::BsRisDistance => Ok((self.base.with_bs_ris_distance(value), self.eta)),
            SweepVariable::Eta => Ok((self.base.clone(), value)),
            SweepVariable::RisElements => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "ris_elements value {value} is not a positive integer"
                    )));
                }
                Ok((self.base.with_ris_elements(value as usize)?, self.eta))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub scheme: Scheme,
    pub variable: SweepVariable,
    pub value: f64,
    pub seed: u64,
    pub eta: f64,
    pub rate_dl: f64,
    pub rate_ul: f64,
    pub objective: f64,
    /// RCG iterations for two-way, alternation rounds (summed over the
    /// one-way designs used) for the others.
    pub iterations: usize,
    pub ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub value: f64,
    pub seed: u64,
    pub scheme: Option<Scheme>,
    pub message: String,
}

impl fmt::Display for CellFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.scheme {
            Some(s) => write!(f, "value {} seed {} scheme {s}: {}", self.value, self.seed, self.message),
            None => write!(f, "value {} seed {}: {}", self.value, self.seed, self.message),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<CellFailure>,
}

fn ms_since(t: Instant, timing: bool) -> f64 {
    if timing {
        t.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

struct OneWayPair {
    dl: OneWaySolution,
    ul: OneWaySolution,
    ms_dl: f64,
    ms_ul: f64,
}

fn evaluate_cell(spec: &SweepSpec, value: f64, seed: u64) -> (Vec<SweepRecord>, Vec<CellFailure>) {
    let fail = |scheme, e: Error| CellFailure {
        value,
        seed,
        scheme,
        message: e.to_string(),
    };
    let ctx = match spec
        .cell_params(value)
        .and_then(|(p, eta)| synthesize_channels(&p, seed).and_then(|ch| build_context(&ch, &p, eta)))
    {
        Ok(ctx) => ctx,
        Err(e) => return (Vec::new(), vec![fail(None, e)]),
    };
    let mut records = Vec::new();
    let mut failures = Vec::new();

    let needs_oneway = spec.schemes.iter().any(|&s| s != Scheme::TwoWay);
    let oneway: Option<std::result::Result<OneWayPair, Error>> = needs_oneway.then(|| {
        let t = Instant::now();
        let dl = oneway_downlink_ctx(&ctx, &spec.oneway)?;
        let ms_dl = ms_since(t, spec.record_timing);
        let t = Instant::now();
        let ul = oneway_uplink_ctx(&ctx, &spec.oneway)?;
        let ms_ul = ms_since(t, spec.record_timing);
        Ok(OneWayPair { dl, ul, ms_dl, ms_ul })
    });

    let record = |scheme, rate_dl: f64, rate_ul: f64, iterations, ms| SweepRecord {
        scheme,
        variable: spec.variable,
        value,
        seed,
        eta: ctx.eta,
        rate_dl,
        rate_ul,
        objective: ctx.weighted(rate_dl, rate_ul),
        iterations,
        ms,
    };

    for &scheme in &spec.schemes {
        let result = match scheme {
            Scheme::TwoWay => {
                let t = Instant::now();
                optimize_context(&ctx, &spec.optimizer, &PhaseVector::ones(ctx.ris_elements())).map(|s| {
                    record(
                        scheme,
                        s.rate_dl,
                        s.rate_ul,
                        s.trace.iterations(),
                        ms_since(t, spec.record_timing),
                    )
                })
            }
            _ => match oneway.as_ref().expect("one-way designs computed") {
                Err(e) => Err(Error::Domain(e.to_string())),
                Ok(ow) => scheme_from_oneway(&ctx, scheme, ow, spec.record_timing)
                    .map(|(dl, ul, it, ms)| record(scheme, dl, ul, it, ms)),
            },
        };
        match result {
            Ok(r) if r.objective.is_finite() => records.push(r),
            Ok(_) => failures.push(fail(Some(scheme), Error::Domain("non-finite rate".into()))),
            Err(e) => failures.push(fail(Some(scheme), e)),
        }
    }
    (records, failures)
}

fn scheme_from_oneway(
    ctx: &CompositeContext,
    scheme: Scheme,
    ow: &OneWayPair,
    timing: bool,
) -> Result<(f64, f64, usize, f64)> {
    let both_iters = ow.dl.iterations + ow.ul.iterations;
    let both_ms = ow.ms_dl + ow.ms_ul;
    let out = match scheme {
        Scheme::TimeSharing => {
            let p = time_sharing_point(ctx, &ow.dl.b, &ow.ul.b, ctx.eta)?;
            (p.rate_dl, p.rate_ul, both_iters, both_ms)
        }
        Scheme::PhaseAveraging => {
            let t = Instant::now();
            let b = phase_averaging(&ow.dl.b, &ow.ul.b, ctx.eta)?;
            let p = fixed_phase_point(ctx, &b, scheme, ctx.eta);
            (p.rate_dl, p.rate_ul, both_iters, both_ms + ms_since(t, timing))
        }
        Scheme::OnewayDownlinkOnly => {
            let p = fixed_phase_point(ctx, &ow.dl.b, scheme, ctx.eta);
            (p.rate_dl, p.rate_ul, ow.dl.iterations, ow.ms_dl)
        }
        Scheme::OnewayUplinkOnly => {
            let p = fixed_phase_point(ctx, &ow.ul.b, scheme, ctx.eta);
            (p.rate_dl, p.rate_ul, ow.ul.iterations, ow.ms_ul)
        }
        Scheme::TwoWay => unreachable!("two-way is evaluated directly"),
    };
    Ok(out)
}

fn record_order(a: &SweepRecord, b: &SweepRecord) -> std::cmp::Ordering {
    a.scheme
        .cmp(&b.scheme)
        .then(a.value.total_cmp(&b.value))
        .then(a.seed.cmp(&b.seed))
}

/// Runs every (value, seed) cell. Failed cells or schemes are collected in
/// [`SweepOutcome::failures`] and do not stop the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutcome> {
    spec.validate()?;
    let cells: Vec<(f64, u64)> = spec
        .values
        .iter()
        .flat_map(|&v| (0..spec.seeds as u64).map(move |s| (v, s)))
        .collect();
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(v, s)| evaluate_cell(spec, v, spec.base_seed.wrapping_add(s)))
        .collect();
    let mut out = SweepOutcome::default();
    for (r, f) in results {
        out.records.extend(r);
        out.failures.extend(f);
    }
    out.records.sort_by(record_order);
    out.failures
        .sort_by(|a, b| a.value.total_cmp(&b.value).then(a.seed.cmp(&b.seed)).then(a.scheme.cmp(&b.scheme)));
    Ok(out)
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Per (scheme, value) statistics over seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub scheme: Scheme,
    pub value: f64,
    pub count: usize,
    pub median_objective: f64,
    pub mean_objective: f64,
    pub mean_rate_dl: f64,
    pub mean_rate_ul: f64,
    pub median_rate_dl: f64,
    pub median_rate_ul: f64,
}

/// Groups sorted or unsorted records by scheme and value, ordered by both.
pub fn summarize(records: &[SweepRecord]) -> Vec<Summary> {
    let mut sorted: Vec<&SweepRecord> = records.iter().collect();
    sorted.sort_by(|a, b| record_order(a, b));
    let mut out = Vec::new();
    for group in sorted.chunk_by(|a, b| a.scheme == b.scheme && a.value == b.value) {
        let n = group.len() as f64;
        let col = |f: fn(&SweepRecord) -> f64| group.iter().map(|r| f(r)).collect::<Vec<_>>();
        let mut obj = col(|r| r.objective);
        let mut dl = col(|r| r.rate_dl);
        let mut ul = col(|r| r.rate_ul);
        out.push(Summary {
            scheme: group[0].scheme,
            value: group[0].value,
            count: group.len(),
            mean_objective: obj.iter().sum::<f64>() / n,
            mean_rate_dl: dl.iter().sum::<f64>() / n,
            mean_rate_ul: ul.iter().sum::<f64>() / n,
            median_objective: median(&mut obj),
            median_rate_dl: median(&mut dl),
            median_rate_ul: median(&mut ul),
        });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionPoint {
    pub eta: f64,
    pub rate_dl: f64,
    pub rate_ul: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionCurve {
    pub scheme: Scheme,
    /// Mean rates over seeds, in increasing `eta`.
    pub points: Vec<RegionPoint>,
    /// Pareto-optimal subset of `points`, in increasing downlink rate.
    pub frontier: Vec<RegionPoint>,
}

#[derive(Clone, Debug)]
pub struct RegionResult {
    pub outcome: SweepOutcome,
    pub curves: Vec<RegionCurve>,
}

impl RegionResult {
    pub fn curve(&self, scheme: Scheme) -> Option<&RegionCurve> {
        self.curves.iter().find(|c| c.scheme == scheme)
    }
}

/// Points not dominated by any other point (weakly better in both rates,
/// strictly in one), sorted by downlink rate.
pub fn pareto_filter(points: &[RegionPoint]) -> Vec<RegionPoint> {
    let dominated = |p: &RegionPoint| {
        points.iter().any(|q| {
            q.rate_dl >= p.rate_dl
                && q.rate_ul >= p.rate_ul
                && (q.rate_dl > p.rate_dl || q.rate_ul > p.rate_ul)
        })
    };
    let mut out: Vec<RegionPoint> = points.iter().filter(|p| !dominated(p)).copied().collect();
    out.sort_by(|a, b| a.rate_dl.total_cmp(&b.rate_dl).then(b.rate_ul.total_cmp(&a.rate_ul)));
    out.dedup_by(|a, b| a.rate_dl == b.rate_dl && a.rate_ul == b.rate_ul);
    out
}

/// Every point of `other` is weakly exceeded in both rates, up to `tol`,
/// by some point of `frontier`.
pub fn point_dominates(frontier: &[RegionPoint], other: &[RegionPoint], tol: f64) -> bool {
    other.iter().all(|p| {
        frontier
            .iter()
            .any(|q| q.rate_dl >= p.rate_dl - tol && q.rate_ul >= p.rate_ul - tol)
    })
}

/// Mean rate curves and frontiers per scheme from eta-sweep records.
pub fn region_curves(records: &[SweepRecord]) -> Vec<RegionCurve> {
    let summaries = summarize(records);
    let mut curves: Vec<RegionCurve> = Vec::new();
    for s in summaries {
        let p = RegionPoint {
            eta: s.value,
            rate_dl: s.mean_rate_dl,
            rate_ul: s.mean_rate_ul,
        };
        match curves.last_mut() {
            Some(c) if c.scheme == s.scheme => c.points.push(p),
            _ => curves.push(RegionCurve {
                scheme: s.scheme,
                points: vec![p],
                frontier: Vec::new(),
            }),
        }
    }
    for c in &mut curves {
        c.frontier = pareto_filter(&c.points);
    }
    curves
}

/// Runs an eta sweep and reduces it to per-scheme mean curves and frontiers.
pub fn rate_region(spec: &SweepSpec) -> Result<RegionResult> {
    if spec.variable != SweepVariable::Eta {
        return Err(Error::InvalidParams("rate_region needs an eta sweep".into()));
    }
    let has = |x: f64| spec.values.contains(&x);
    if !has(0.0) || !has(1.0) {
        return Err(Error::InvalidParams("eta grid must include 0 and 1".into()));
    }
    let outcome = run_sweep(spec)?;
    let curves = region_curves(&outcome.records);
    Ok(RegionResult { outcome, curves })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckSpec {
    pub instances: usize,
    pub seed: u64,
    pub bs_antennas: usize,
    pub ris_rows: usize,
    pub ris_cols: usize,
    pub etas: Vec<f64>,
    pub directions: usize,
    pub step: f64,
}

impl Default for GradCheckSpec {
    fn default() -> Self {
        Self {
            instances: 100,
            seed: default_seed(),
            bs_antennas: 4,
            ris_rows: 4,
            ris_cols: 4,
            etas: vec![0.0, 0.3, 0.7, 1.0],
            directions: 20,
            step: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    pub checks: usize,
    pub max_rel_error: f64,
}

/// `f(plus) - f(minus)` computed from `plus - minus` so that nearby points
/// do not lose digits to cancellation:
/// `|x+|^2 - |x-|^2 = Re<x+ - x-, x+ + x->`, then `ln_1p` on the SNR ratio.
pub fn objective_difference(ctx: &CompositeContext, plus: &PhaseVector, minus: &PhaseVector) -> f64 {
    let db: CVector = plus.entries() - minus.entries();
    let rate_diff = |c: &ndarray::Array2<Complex64>, gain: f64| {
        let xm = minus.entries().mapv(|z| z.conj()).dot(c);
        let dx = db.mapv(|z| z.conj()).dot(c);
        let cross: f64 = xm.iter().zip(&dx).map(|(m, dx)| (dx.conj() * (m * 2.0 + dx)).re).sum();
        let base: f64 = xm.iter().map(|z| z.norm_sqr()).sum();
        (gain * cross / (1.0 + gain * base)).ln_1p() / std::f64::consts::LN_2
    };
    let dd = rate_diff(&ctx.c_dl, ctx.p_dl_max / ctx.noise_dl);
    let du = rate_diff(&ctx.c_ul, ctx.p_ul_max / ctx.noise_ul);
    ctx.eta * dd + (1.0 - ctx.eta) * du
}

/// Compares `Re<grad, d>` for the tangent-projected Euclidean gradient with
/// a central difference of the objective along the retraction curve
/// `R_b(t d)` (see [`objective_difference`]), for random instances, phases and unit tangent directions.
/// Instance `i` uses channel seed `seed + i` and cycles through `etas`.
pub fn gradient_check(spec: &GradCheckSpec) -> Result<GradCheckReport> {
    if spec.instances == 0 || spec.directions == 0 || spec.etas.is_empty() {
        return Err(Error::InvalidParams("gradient check needs instances, directions and etas".into()));
    }
    if !(spec.step > 0.0) {
        return Err(Error::InvalidParams(format!("finite-difference step {} must be positive", spec.step)));
    }
    let params = SystemParams {
        bs_antennas: spec.bs_antennas,
        ris_rows: spec.ris_rows,
        ris_cols: spec.ris_cols,
        ..SystemParams::default()
    };
    let f = params.ris_elements();
    let per_instance: Vec<Result<(usize, f64)>> = (0..spec.instances)
        .into_par_iter()
        .map(|i| {
            let seed = spec.seed.wrapping_add(i as u64);
            let eta = spec.etas[i % spec.etas.len()];
            let ch = synthesize_channels(&params, seed)?;
            let ctx = build_context(&ch, &params, eta)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6772_6164);
            let b = PhaseVector::random(f, &mut rng);
            let g = project_tangent(&b, &euclid_gradient(&b, &ctx))?;
            let mut worst = 0.0f64;
            for _ in 0..spec.directions {
                let raw: CVector = (0..f)
                    .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect();
                let d = project_tangent(&b, &raw)?;
                let d = d.scaled(1.0 / d.norm());
                let analytic = g.inner(&d);
                let plus = retract(&b, &d, spec.step)?;
                let minus = retract(&b, &d.scaled(-1.0), spec.step)?;
                let numeric = objective_difference(&ctx, &plus, &minus) / (2.0 * spec.step);
                let scale = analytic.abs().max(numeric.abs()).max(f64::MIN_POSITIVE);
                worst = worst.max((analytic - numeric).abs() / scale);
            }
            Ok((spec.directions, worst))
        })
        .collect();
    let mut report = GradCheckReport {
        checks: 0,
        max_rel_error: 0.0,
    };
    for r in per_instance {
        let (n, worst) = r?;
        report.checks += n;
        report.max_rel_error = report.max_rel_error.max(worst);
    }
    Ok(report)
}
