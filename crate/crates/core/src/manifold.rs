//! Complex circle manifold primitives and a Riemannian conjugate gradient
//! driver for maximizing smooth real functions of unit-modulus vectors.
//!
//! Points are vectors `b` with `|b_i| = 1`. The tangent space at `b` is
//! `{ d : Re(d_i * conj(b_i)) = 0 }`, the metric is the real part of the
//! Euclidean complex inner product, the retraction is elementwise
//! normalization and vector transport is orthogonal projection onto the
//! destination tangent space.

use crate::error::{check_len, Error, Result};
use ndarray::{Array1, Zip};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type CVector = Array1<Complex64>;

/// Modulus tolerance accepted by [`PhaseVector::new`].
pub const UNIT_MODULUS_TOL: f64 = 1e-12;
/// Below this modulus `b + alpha*d` cannot be normalized.
pub const RETRACTION_DEGENERACY: f64 = 1e-14;
/// Smallest step the Armijo search will try.
pub const MIN_STEP: f64 = 1e-16;

/// `Re <x, y>` with the conjugate on the left argument.
pub fn real_inner(x: &CVector, y: &CVector) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

/// A point on the complex circle manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseVector(CVector);

impl PhaseVector {
    pub fn new(entries: CVector) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParams("phase vector must have at least one entry".into()));
        }
        for (index, z) in entries.iter().enumerate() {
            let modulus = z.norm();
            if !((modulus - 1.0).abs() <= UNIT_MODULUS_TOL) {
                return Err(Error::NotUnitModulus { index, modulus });
            }
        }
        Ok(Self(entries))
    }

    /// Normalizes each entry onto the unit circle.
    pub fn normalized(entries: CVector) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParams("phase vector must have at least one entry".into()));
        }
        let mut entries = entries;
        for (index, z) in entries.iter_mut().enumerate() {
            let modulus = z.norm();
            if !(modulus >= RETRACTION_DEGENERACY) || !modulus.is_finite() {
                return Err(Error::RetractionDegenerate { index, modulus });
            }
            *z /= modulus;
        }
        Ok(Self(entries))
    }

    pub fn ones(len: usize) -> Self {
        assert!(len >= 1, "phase vector must have at least one entry");
        Self(Array1::from_elem(len, Complex64::new(1.0, 0.0)))
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        assert!(!phases.is_empty(), "phase vector must have at least one entry");
        Self(phases.iter().map(|&t| Complex64::from_polar(1.0, t)).collect())
    }

    /// Phases drawn uniformly from `[0, 2pi)`.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let phases: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        Self::from_phases(&phases)
    }

    /// Principal arguments in `(-pi, pi]`.
    pub fn phases(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.arg()).collect()
    }

    /// Multiplies every entry by `e^{j gamma}`.
    pub fn rotated(&self, gamma: f64) -> Self {
        let r = Complex64::from_polar(1.0, gamma);
        Self(self.0.mapv(|z| z * r))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &CVector {
        &self.0
    }

    pub fn into_entries(self) -> CVector {
        self.0
    }
}

/// A tangent vector together with the point it is attached to.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    entries: CVector,
    base: PhaseVector,
}

impl TangentVector {
    pub fn zero(base: &PhaseVector) -> Self {
        Self {
            entries: Array1::zeros(base.len()),
            base: base.clone(),
        }
    }

    pub fn entries(&self) -> &CVector {
        &self.entries
    }

    pub fn base(&self) -> &PhaseVector {
        &self.base
    }

    pub fn inner(&self, other: &TangentVector) -> f64 {
        real_inner(&self.entries, &other.entries)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            entries: self.entries.mapv(|z| z * s),
            base: self.base.clone(),
        }
    }

    /// `self + s * other`; both must live in the same tangent space.
    pub fn add_scaled(&self, s: f64, other: &TangentVector) -> Result<Self> {
        check_len(self.entries.len(), other.entries.len())?;
        debug_assert!(self.base == other.base, "tangent vectors at different points");
        let mut entries = self.entries.clone();
        Zip::from(&mut entries)
            .and(&other.entries)
            .for_each(|a, &b| *a += b * s);
        Ok(Self {
            entries,
            base: self.base.clone(),
        })
    }

    /// Largest `|Re(d_i * conj(b_i))|`; zero for an exact tangent vector.
    pub fn tangency_defect(&self) -> f64 {
        self.entries
            .iter()
            .zip(self.base.entries().iter())
            .map(|(d, b)| (d * b.conj()).re.abs())
            .fold(0.0, f64::max)
    }
}

/// Orthogonal projection of `v` onto the tangent space at `b`:
/// `v - Re(v o conj(b)) o b`.
pub fn project_tangent(b: &PhaseVector, v: &CVector) -> Result<TangentVector> {
    check_len(b.len(), v.len())?;
    let entries = Zip::from(v)
        .and(b.entries())
        .map_collect(|&vi, &bi| vi - bi * (vi * bi.conj()).re);
    Ok(TangentVector {
        entries,
        base: b.clone(),
    })
}

/// Elementwise normalization of `b + alpha * d`.
pub fn retract(b: &PhaseVector, d: &TangentVector, alpha: f64) -> Result<PhaseVector> {
    check_len(b.len(), d.entries.len())?;
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("retraction step must be non-negative, got {alpha}")));
    }
    let moved = Zip::from(b.entries())
        .and(&d.entries)
        .map_collect(|&bi, &di| bi + di * alpha);
    PhaseVector::normalized(moved)
}

/// Carries `d` into the tangent space at `b_next` by projection.
pub fn transport(d: &TangentVector, b_next: &PhaseVector) -> Result<TangentVector> {
    project_tangent(b_next, &d.entries)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RcgConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo_initial_step: f64,
    pub armijo_shrink: f64,
    pub armijo_slope: f64,
    pub restart_on_negative_beta: bool,
}

impl Default for RcgConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            grad_tol: 1e-6,
            armijo_initial_step: 100.0,
            armijo_shrink: 0.5,
            armijo_slope: 1e-4,
            restart_on_negative_beta: true,
        }
    }
}

impl RcgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1");
        }
        if !(self.grad_tol >= 0.0) {
            return bad("grad_tol must be non-negative");
        }
        if !(self.armijo_initial_step > 0.0 && self.armijo_initial_step.is_finite()) {
            return bad("armijo_initial_step must be positive");
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return bad("armijo_shrink must lie in (0, 1)");
        }
        if !(self.armijo_slope > 0.0 && self.armijo_slope < 1.0) {
            return bad("armijo_slope must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    /// No step above [`MIN_STEP`] passed the Armijo test; treated as converged.
    LineSearchFailure,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub objective: f64,
    pub grad_norm: f64,
    /// Accepted step; zero for the initial point.
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RcgTrace {
    /// Entry 0 is the starting point, entry `k` the iterate after `k` steps.
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

impl RcgTrace {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.objective)
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.grad_norm)
    }

    /// Largest decrease between consecutive objective values (0 if monotone).
    pub fn max_descent(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[0].objective - w[1].objective)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct LineSearchOutcome {
    pub step: f64,
    pub point: PhaseVector,
    pub value: f64,
}

/// Backtracking search for the first `alpha = a0 * shrink^k` with
/// `f(R_b(alpha d)) >= f(b) + slope * alpha * Re<grad, d>`.
///
/// `value` must be `objective(b)`. Degenerate retractions count as
/// rejected trial steps.
pub fn armijo_step<F>(
    objective: &F,
    b: &PhaseVector,
    value: f64,
    grad: &TangentVector,
    d: &TangentVector,
    cfg: &RcgConfig,
) -> Result<LineSearchOutcome>
where
    F: Fn(&PhaseVector) -> f64,
{
    check_len(b.len(), d.entries.len())?;
    check_len(b.len(), grad.entries.len())?;
    let slope = grad.inner(d);
    if !(slope > 0.0) {
        return Err(Error::NotAscent { slope });
    }
    let mut alpha = cfg.armijo_initial_step;
    while alpha >= MIN_STEP {
        match retract(b, d, alpha) {
            Ok(point) => {
                let trial = objective(&point);
                if trial >= value + cfg.armijo_slope * alpha * slope {
                    return Ok(LineSearchOutcome {
                        step: alpha,
                        point,
                        value: trial,
                    });
                }
            }
            Err(Error::RetractionDegenerate { .. }) => {}
            Err(e) => return Err(e),
        }
        alpha *= cfg.armijo_shrink;
    }
    Err(Error::StepFailure { min_step: MIN_STEP })
}

/// Riemannian conjugate gradient ascent with Armijo backtracking and
/// Polak-Ribiere directions.
///
/// `euclid_gradient` must return the gradient of `objective` with respect
/// to the real inner product `Re<x, y>`, so that the directional
/// derivative along `d` equals `Re<grad, d>`.
pub fn rcg_maximize<F, G>(
    objective: F,
    euclid_gradient: G,
    b0: &PhaseVector,
    cfg: &RcgConfig,
) -> Result<(PhaseVector, RcgTrace)>
where
    F: Fn(&PhaseVector) -> f64,
    G: Fn(&PhaseVector) -> CVector,
{
    cfg.validate()?;
    let mut trace = RcgTrace {
        records: Vec::with_capacity(cfg.max_iters.min(1024) + 1),
        termination: Termination::MaxIterations,
    };
    let fail = |what, iteration, trace: &RcgTrace| Error::NumericalFailure {
        what,
        iteration,
        trace: Box::new(trace.clone()),
    };

    let mut b = b0.clone();
    let mut value = objective(&b);
    if !value.is_finite() {
        return Err(fail("objective", 0, &trace));
    }
    let mut grad = project_tangent(&b, &euclid_gradient(&b))?;
    let mut grad_norm = grad.norm();
    if !grad_norm.is_finite() {
        return Err(fail("gradient", 0, &trace));
    }
    trace.records.push(IterationRecord {
        objective: value,
        grad_norm,
        step: 0.0,
    });
    let mut dir = grad.clone();

    for k in 1..=cfg.max_iters {
        if grad_norm <= cfg.grad_tol {
            trace.termination = Termination::GradientTolerance;
            return Ok((b, trace));
        }
        // PR+ without a Wolfe search can still yield a non-ascent direction.
        if !(grad.inner(&dir) > 0.0) {
            dir = grad.clone();
        }
        let step = match armijo_step(&objective, &b, value, &grad, &dir, cfg) {
            Ok(s) => s,
            Err(Error::StepFailure { .. }) => {
                trace.termination = Termination::LineSearchFailure;
                return Ok((b, trace));
            }
            Err(e) => return Err(e),
        };
        if !step.value.is_finite() {
            return Err(fail("objective", k, &trace));
        }
        let next_grad = project_tangent(&step.point, &euclid_gradient(&step.point))?;
        let next_norm = next_grad.norm();
        if !next_norm.is_finite() {
            return Err(fail("gradient", k, &trace));
        }

        let grad_moved = transport(&grad, &step.point)?;
        let dir_moved = transport(&dir, &step.point)?;
        let diff = next_grad.add_scaled(-1.0, &grad_moved)?;
        let mut beta = next_grad.inner(&diff) / (grad_norm * grad_norm);
        if cfg.restart_on_negative_beta && beta < 0.0 {
            beta = 0.0;
        }
        dir = next_grad.add_scaled(beta, &dir_moved)?;

        b = step.point;
        value = step.value;
        grad = next_grad;
        grad_norm = next_norm;
        trace.records.push(IterationRecord {
            objective: value,
            grad_norm,
            step: step.step,
        });
    }
    trace.termination = if grad_norm <= cfg.grad_tol {
        Termination::GradientTolerance
    } else {
        Termination::MaxIterations
    };
    Ok((b, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> CVector {
        (0..n)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn projection_keeps_tangent_and_drops_radial() {
        let b = PhaseVector::ones(1);
        let t = project_tangent(&b, &Array1::from(vec![c(0.0, 1.0)])).unwrap();
        assert_eq!(t.entries()[0], c(0.0, 1.0));
        let r = project_tangent(&b, &Array1::from(vec![c(1.0, 0.0)])).unwrap();
        assert_eq!(r.entries()[0], c(0.0, 0.0));
    }

    #[test]
    fn projection_output_is_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let b = PhaseVector::random(8, &mut rng);
            let v = random_vec(&mut rng, 8);
            let t = project_tangent(&b, &v).unwrap();
            assert!(t.tangency_defect() <= 1e-12);
        }
    }

    #[test]
    fn projection_rejects_length_mismatch() {
        let b = PhaseVector::ones(3);
        let err = project_tangent(&b, &Array1::zeros(2)).unwrap_err();
        assert!(matches!(err, Error::Dimension { expected: 3, got: 2 }));
    }

    #[test]
    fn retraction_examples() {
        let b = PhaseVector::ones(1);
        let zero = TangentVector::zero(&b);
        assert_eq!(retract(&b, &zero, 1.0).unwrap(), b);

        let d = project_tangent(&b, &Array1::from(vec![c(0.0, 1.0)])).unwrap();
        let r = retract(&b, &d, 1.0).unwrap();
        let expect = Complex64::from_polar(1.0, PI / 4.0);
        assert!((r.entries()[0] - expect).norm() < 1e-15);
    }

    #[test]
    fn retraction_is_first_order() {
        let b = PhaseVector::ones(1);
        let d = project_tangent(&b, &Array1::from(vec![c(0.0, 1.0)])).unwrap();
        let mut prev_err = f64::INFINITY;
        for k in 1..7 {
            let alpha = 10f64.powi(-k);
            let r = retract(&b, &d, alpha).unwrap();
            let ratio = (r.entries()[0] - b.entries()[0]).norm() / alpha;
            let err = (ratio - 1.0).abs();
            assert!(err < prev_err || err < 1e-9);
            prev_err = err;
        }
        assert!(prev_err < 1e-9);
    }

    #[test]
    fn degenerate_retraction_is_reported() {
        let b = PhaseVector::ones(2);
        let mut d = TangentVector::zero(&b);
        d.entries[0] = c(-1.0, 0.0); // not tangent, but forces b + d = 0 in entry 0
        let err = retract(&b, &d, 1.0).unwrap_err();
        assert!(matches!(err, Error::RetractionDegenerate { index: 0, .. }));
    }

    #[test]
    fn transport_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = PhaseVector::random(8, &mut rng);
        let d = project_tangent(&b, &random_vec(&mut rng, 8)).unwrap();
        let same = transport(&d, &b).unwrap();
        for (x, y) in same.entries().iter().zip(d.entries()) {
            assert!((x - y).norm() < 1e-15);
        }

        let one = PhaseVector::ones(1);
        let di = project_tangent(&one, &Array1::from(vec![c(0.0, 1.0)])).unwrap();
        let bi = PhaseVector::new(Array1::from(vec![c(0.0, 1.0)])).unwrap();
        assert_eq!(transport(&di, &bi).unwrap().entries()[0], c(0.0, 0.0));

        let next = PhaseVector::random(8, &mut rng);
        let moved = transport(&d, &next).unwrap();
        assert!(moved.tangency_defect() <= 1e-12);
        assert_eq!(moved, project_tangent(&next, d.entries()).unwrap());
    }

    #[test]
    fn phase_vector_validation() {
        assert!(PhaseVector::new(Array1::from(vec![c(1.0, 1.0)])).is_err());
        assert!(PhaseVector::new(Array1::zeros(0)).is_err());
        assert!(PhaseVector::new(Array1::from(vec![c(0.6, 0.8)])).is_ok());
        let p = PhaseVector::from_phases(&[0.3, -2.0]);
        let ph = p.phases();
        assert!(close(ph[0], 0.3, 1e-15) && close(ph[1], -2.0, 1e-15));
    }

    #[test]
    fn config_validation() {
        assert!(RcgConfig::default().validate().is_ok());
        let bad = RcgConfig {
            armijo_shrink: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RcgConfig {
            max_iters: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    // f(b) = Re(conj(a)^T b) for fixed unit-modulus a: maximized at b = a.
    fn linear_problem(a: CVector) -> (impl Fn(&PhaseVector) -> f64, impl Fn(&PhaseVector) -> CVector) {
        let a2 = a.clone();
        (
            move |b: &PhaseVector| real_inner(&a, b.entries()),
            move |_: &PhaseVector| a2.clone(),
        )
    }

    #[test]
    fn armijo_rejects_zero_direction() {
        let b = PhaseVector::ones(2);
        let (f, g) = linear_problem(Array1::from(vec![c(0.0, 1.0), c(1.0, 0.0)]));
        let grad = project_tangent(&b, &g(&b)).unwrap();
        let zero = TangentVector::zero(&b);
        let err = armijo_step(&f, &b, f(&b), &grad, &zero, &RcgConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NotAscent { .. }));
    }

    #[test]
    fn armijo_accepts_first_candidate_when_it_passes() {
        // F = 1: phase rotation by atan(1) = pi/4 toward a = i increases Re(conj(a) b).
        let b = PhaseVector::ones(1);
        let (f, g) = linear_problem(Array1::from(vec![c(0.0, 1.0)]));
        let grad = project_tangent(&b, &g(&b)).unwrap();
        let cfg = RcgConfig::default();
        let out = armijo_step(&f, &b, f(&b), &grad, &grad, &cfg).unwrap();
        assert_eq!(out.step, cfg.armijo_initial_step);
        assert!(out.value > f(&b));
    }

    #[test]
    fn rcg_solves_linear_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = PhaseVector::random(10, &mut rng);
        let (f, g) = linear_problem(a.entries().clone());
        let b0 = PhaseVector::random(10, &mut rng);
        let (b, trace) = rcg_maximize(&f, &g, &b0, &RcgConfig::default()).unwrap();
        assert_eq!(trace.termination, Termination::GradientTolerance);
        assert!(trace.max_descent() <= 1e-12);
        assert!(close(f(&b), 10.0, 1e-9));
        assert!(trace.final_grad_norm() <= 1e-6);
    }

    #[test]
    fn rcg_reports_non_finite_objective() {
        let b0 = PhaseVector::ones(3);
        let err = rcg_maximize(|_| f64::NAN, |b| b.entries().clone(), &b0, &RcgConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::NumericalFailure { what: "objective", .. }));
    }

    #[test]
    fn rcg_stops_at_max_iters() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = PhaseVector::random(6, &mut rng);
        let (f, g) = linear_problem(a.entries().clone());
        let cfg = RcgConfig {
            max_iters: 2,
            grad_tol: 0.0,
            ..Default::default()
        };
        let (_, trace) = rcg_maximize(&f, &g, &PhaseVector::ones(6), &cfg).unwrap();
        assert_eq!(trace.iterations(), 2);
        assert_eq!(trace.termination, Termination::MaxIterations);
    }
}
