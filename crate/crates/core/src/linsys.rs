//! Point-delay linear operators `L z_t = sum_k b_k z(t + theta_k)`, their
//! characteristic function, spectrum design/verification and the adjoint
//! normalization.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polyring::VariableSpace;
use crate::qsolver::ExpPoly;

type C64 = Complex64;

/// Coefficient bound of the integer-relation search on the frequencies.
pub const RELATION_BOUND: i64 = 50;
/// A relation `sum n_j w_j` counts as zero below this magnitude.
pub const RELATION_TOL: f64 = 1e-9;
/// Default half-width of the verification strip around the imaginary axis.
pub const DEFAULT_STRIP_DELTA: f64 = 1e-3;
/// Smallest admissible `|Delta'|` at a center eigenvalue.
pub const SIMPLICITY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinsysError {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("frequencies satisfy the integer relation {relation:?} (residual {residual:.2e})")]
    Resonant { relation: Vec<i64>, residual: f64 },
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("singular design system (rank {rank} < {unknowns}); try different delay positions")]
    SingularDesign { rank: usize, unknowns: usize },
    #[error("inconsistent design system (residual {0:.3e}); try different delay positions")]
    InconsistentDesign(f64),
    #[error("{lambda} is not a root: |Delta| = {residual:.3e}")]
    NotARoot { lambda: C64, residual: f64 },
    #[error("non-simple eigenvalue {lambda}: |Delta'| = {derivative:.3e}")]
    NonSimple { lambda: C64, derivative: f64 },
    #[error("strip contains {found} roots, expected {expected}")]
    ExtraImaginaryRoots { found: i64, expected: i64 },
    #[error("argument principle failed: {0}")]
    Contour(String),
}

/// Target imaginary spectrum: `+-i w_j` for each frequency plus an optional zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub omegas: Vec<f64>,
    pub includes_zero: bool,
    /// Length of the history interval.
    pub r: f64,
}

impl SpectrumSpec {
    pub fn new(omegas: Vec<f64>, includes_zero: bool, r: f64) -> Result<Self, LinsysError> {
        let spec = Self { omegas, includes_zero, r };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), LinsysError> {
        if self.omegas.is_empty() {
            return Err(LinsysError::InvalidSpectrum("at least one frequency is required".into()));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(LinsysError::InvalidSpectrum(format!("horizon must be positive, got {}", self.r)));
        }
        for (i, &w) in self.omegas.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(LinsysError::InvalidSpectrum(format!("omega_{} = {w} must be positive", i + 1)));
            }
            for &w2 in &self.omegas[..i] {
                if (w - w2).abs() <= RELATION_TOL {
                    return Err(LinsysError::InvalidSpectrum(format!("repeated frequency {w}")));
                }
            }
        }
        if let Some((relation, residual)) = find_integer_relation(&self.omegas, RELATION_BOUND, RELATION_TOL) {
            return Err(LinsysError::Resonant { relation, residual });
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.omegas.len()
    }

    pub fn kappa(&self) -> usize {
        2 * self.p() + self.includes_zero as usize
    }

    pub fn d(&self) -> usize {
        self.p() + self.includes_zero as usize
    }

    /// Diagonal of `B` in center-slot order `(0?, i w1, -i w1, ...)`.
    pub fn center_eigenvalues(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.kappa());
        if self.includes_zero {
            out.push(C64::new(0.0, 0.0));
        }
        for &w in &self.omegas {
            out.push(C64::new(0.0, w));
            out.push(C64::new(0.0, -w));
        }
        out
    }

    pub fn center_space(&self, s: usize) -> VariableSpace {
        VariableSpace::center(self.p(), self.includes_zero, s)
    }

    pub fn radial_space(&self, s: usize) -> VariableSpace {
        VariableSpace::radial(self.p(), self.includes_zero, s)
    }

    pub fn delayed_space(&self, s: usize) -> VariableSpace {
        VariableSpace::delayed(self.d(), s)
    }
}

/// Bounded search for `n != 0` with `|n_j| <= bound` and `|sum n_j w_j| <= tol`.
/// This is a heuristic: it cannot certify rational independence.
pub fn find_integer_relation(omegas: &[f64], bound: i64, tol: f64) -> Option<(Vec<i64>, f64)> {
    let p = omegas.len();
    if p < 2 {
        return None;
    }
    // Keep the brute-force search under ~10^7 combinations.
    let mut b = bound;
    while ((2 * b + 1) as f64).powi(p as i32 - 1) > 1e7 && b > 1 {
        b -= 1;
    }
    // Fix the last coefficient through rounding: n_p = -round(sum_{j<p} n_j w_j / w_p).
    let wp = omegas[p - 1];
    let mut n = vec![-b; p - 1];
    loop {
        let partial: f64 = n.iter().zip(omegas).map(|(&k, &w)| k as f64 * w).sum();
        let last = (-partial / wp).round() as i64;
        if last.abs() <= b && (n.iter().any(|&k| k != 0) || last != 0) {
            let residual = (partial + last as f64 * wp).abs();
            if residual <= tol {
                let mut rel = n.clone();
                rel.push(last);
                return Some((rel, residual));
            }
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == n.len() {
                return None;
            }
            n[i] += 1;
            if n[i] > b {
                n[i] = -b;
                i += 1;
            } else {
                break;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayTerm {
    pub theta: f64,
    pub b: f64,
}

/// `L z_t = sum_k b_k z(t + theta_k)` with `theta_k <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayLinearOperator {
    pub terms: Vec<DelayTerm>,
}

impl DelayLinearOperator {
    pub fn new(terms: Vec<(f64, f64)>) -> Result<Self, LinsysError> {
        let op = Self { terms: terms.into_iter().map(|(theta, b)| DelayTerm { theta, b }).collect() };
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<(), LinsysError> {
        if self.terms.is_empty() {
            return Err(LinsysError::InvalidOperator("at least one term is required".into()));
        }
        for (i, t) in self.terms.iter().enumerate() {
            if !(t.theta <= 0.0 && t.theta.is_finite() && t.b.is_finite()) {
                return Err(LinsysError::InvalidOperator(format!("bad term ({}, {})", t.theta, t.b)));
            }
            if self.terms[..i].iter().any(|u| u.theta == t.theta) {
                return Err(LinsysError::InvalidOperator(format!("repeated delay {}", t.theta)));
            }
        }
        Ok(())
    }

    /// Largest delay magnitude.
    pub fn max_delay(&self) -> f64 {
        self.terms.iter().map(|t| -t.theta).fold(0.0, f64::max)
    }

    /// `(Delta(lambda), Delta'(lambda))`.
    pub fn char_value(&self, lambda: C64) -> (C64, C64) {
        let mut d = lambda;
        let mut dp = C64::new(1.0, 0.0);
        for t in &self.terms {
            let e = (lambda * t.theta).exp() * t.b;
            d -= e;
            dp -= e * t.theta;
        }
        (d, dp)
    }

    /// Applies the operator to a function given in closed form.
    pub fn apply(&self, f: &ExpPoly) -> C64 {
        self.terms.iter().map(|t| f.eval_unchecked(t.theta) * t.b).sum()
    }

    /// Bound on `|lambda|` for roots with `Re lambda >= -delta`.
    pub fn root_modulus_bound(&self, delta: f64) -> f64 {
        self.terms.iter().map(|t| t.b.abs() * (-delta * t.theta).exp()).sum()
    }
}

/// Solves for `b` so that every element of the target spectrum is a root,
/// then verifies the spectrum on the default strip.
pub fn design_linear(spec: &SpectrumSpec, positions: &[f64]) -> Result<DelayLinearOperator, LinsysError> {
    let op = design_linear_unverified(spec, positions)?;
    verify_spectrum(&op, spec, None)?;
    Ok(op)
}

/// Design step only; no check for additional imaginary roots.
pub fn design_linear_unverified(spec: &SpectrumSpec, positions: &[f64]) -> Result<DelayLinearOperator, LinsysError> {
    spec.validate()?;
    let n = positions.len();
    if n == 0 {
        return Err(LinsysError::InvalidOperator("no delay positions".into()));
    }
    for (i, &th) in positions.iter().enumerate() {
        if !(th <= 0.0 && th >= -spec.r - 1e-12) {
            return Err(LinsysError::InvalidOperator(format!("position {th} outside [-r, 0]")));
        }
        if positions[..i].iter().any(|&u| (u - th).abs() < 1e-12) {
            return Err(LinsysError::SingularDesign { rank: 0, unknowns: n });
        }
    }
    let rows = spec.kappa();
    let mut a = DMatrix::<f64>::zeros(rows, n);
    let mut rhs = DVector::<f64>::zeros(rows);
    let mut row = 0;
    if spec.includes_zero {
        // Delta(0) = -sum b_k
        for k in 0..n {
            a[(row, k)] = 1.0;
        }
        row += 1;
    }
    for &w in &spec.omegas {
        // Re Delta(i w) = -sum b_k cos(w th_k), Im Delta(i w) = w - sum b_k sin(w th_k)
        for (k, &th) in positions.iter().enumerate() {
            a[(row, k)] = (w * th).cos();
            a[(row + 1, k)] = (w * th).sin();
        }
        rhs[row + 1] = w;
        row += 2;
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax.max(1e-300)).count();
    if rank < n {
        return Err(LinsysError::SingularDesign { rank, unknowns: n });
    }
    let b = svd
        .solve(&rhs, 1e-12 * smax)
        .map_err(|e| LinsysError::InvalidOperator(e.to_string()))?;
    let residual = (&a * &b - &rhs).norm();
    if residual > 1e-9 * (1.0 + rhs.norm()) {
        return Err(LinsysError::InconsistentDesign(residual));
    }
    DelayLinearOperator::new(positions.iter().zip(b.iter()).map(|(&t, &bk)| (t, bk)).collect())
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

/// Number of roots (with multiplicity) of `Delta` inside `rect`, from the
/// winding number of `Delta` along the boundary.
pub fn count_roots_in_rectangle(op: &DelayLinearOperator, rect: Rect) -> Result<i64, LinsysError> {
    const MAX_RETRIES: usize = 6;
    let mut r = rect;
    let span = (rect.re_max - rect.re_min).max(rect.im_max - rect.im_min);
    for attempt in 0..=MAX_RETRIES {
        match winding_number(op, r) {
            Ok(n) => return Ok(n),
            Err(e) if attempt == MAX_RETRIES => return Err(e),
            Err(_) => {
                // Deterministic jitter outward.
                let j = span * 1e-4 * (attempt as f64 + 1.0) * 0.75;
                r = Rect {
                    re_min: r.re_min - j,
                    re_max: r.re_max + 0.37 * j,
                    im_min: r.im_min - 0.53 * j,
                    im_max: r.im_max + j,
                };
            }
        }
    }
    unreachable!()
}

fn winding_number(op: &DelayLinearOperator, rect: Rect) -> Result<i64, LinsysError> {
    let corners = [
        C64::new(rect.re_min, rect.im_min),
        C64::new(rect.re_max, rect.im_min),
        C64::new(rect.re_max, rect.im_max),
        C64::new(rect.re_min, rect.im_max),
    ];
    let scale = 1.0 + op.root_modulus_bound(0.0) + corners.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let tiny = 1e-12 * scale;
    let rate = op.max_delay() + 1.0;
    let mut total = 0.0;
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        let len = (b - a).norm();
        let n0 = ((len * rate * 16.0).ceil() as usize).max(16);
        let mut prev = op.char_value(a).0;
        if prev.norm() < tiny {
            return Err(LinsysError::Contour(format!("root too close to contour at {a}")));
        }
        for i in 1..=n0 {
            let (t0, t1) = ((i - 1) as f64 / n0 as f64, i as f64 / n0 as f64);
            let (dphi, end) = phase_increment(op, a, b, t0, t1, prev, tiny, 0)?;
            total += dphi;
            prev = end;
        }
    }
    let w = total / (2.0 * PI);
    let n = w.round();
    if (w - n).abs() > 0.1 {
        return Err(LinsysError::Contour(format!("winding residual {:.3}", (w - n).abs())));
    }
    Ok(n as i64)
}

/// Phase change of `Delta` from `a + t0 (b - a)` to `a + t1 (b - a)`,
/// subdividing until each step changes phase by less than pi/8.
#[allow(clippy::too_many_arguments)]
fn phase_increment(
    op: &DelayLinearOperator,
    a: C64,
    b: C64,
    t0: f64,
    t1: f64,
    start: C64,
    tiny: f64,
    depth: usize,
) -> Result<(f64, C64), LinsysError> {
    let z1 = a + (b - a) * t1;
    let end = op.char_value(z1).0;
    if end.norm() < tiny {
        return Err(LinsysError::Contour(format!("root too close to contour at {z1}")));
    }
    let dphi = (end / start).arg();
    if dphi.abs() < PI / 8.0 {
        return Ok((dphi, end));
    }
    if depth > 40 {
        return Err(LinsysError::Contour("phase refinement did not converge".into()));
    }
    let tm = 0.5 * (t0 + t1);
    let (d1, mid) = phase_increment(op, a, b, t0, tm, start, tiny, depth + 1)?;
    let (d2, end) = phase_increment(op, a, b, tm, t1, mid, tiny, depth + 1)?;
    Ok((d1 + d2, end))
}

/// Strip `|Re| <= delta`, `|Im| <= omega_max` used for spectrum verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub delta: f64,
    pub omega_max: f64,
}

impl Strip {
    /// Default strip; `omega_max` exceeds the modulus bound on all roots
    /// with `|Re| <= delta`, so the count covers the whole strip.
    pub fn default_for(op: &DelayLinearOperator, spec: &SpectrumSpec) -> Strip {
        let delta = DEFAULT_STRIP_DELTA;
        let wmax = spec.omegas.iter().cloned().fold(0.0, f64::max);
        Strip { delta, omega_max: op.root_modulus_bound(delta).max(wmax) + 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub roots: Vec<C64>,
    pub residuals: Vec<f64>,
    pub derivatives: Vec<C64>,
    pub strip: Strip,
    pub strip_count: i64,
    pub expected: i64,
    pub passed: bool,
    pub failure: Option<String>,
}

/// Spectrum report without failing; see [`verify_spectrum`].
pub fn spectrum_report(op: &DelayLinearOperator, spec: &SpectrumSpec, strip: Option<Strip>) -> SpectrumReport {
    let strip = strip.unwrap_or_else(|| Strip::default_for(op, spec));
    let roots = spec.center_eigenvalues();
    let mut residuals = Vec::new();
    let mut derivatives = Vec::new();
    let mut failure = None;
    for &lam in &roots {
        let (d, dp) = op.char_value(lam);
        residuals.push(d.norm());
        derivatives.push(dp);
        let scale = 1.0 + lam.norm();
        if failure.is_none() && d.norm() > 1e-9 * scale {
            failure = Some(LinsysError::NotARoot { lambda: lam, residual: d.norm() });
        } else if failure.is_none() && dp.norm() <= SIMPLICITY_TOL {
            failure = Some(LinsysError::NonSimple { lambda: lam, derivative: dp.norm() });
        }
    }
    let expected = roots.len() as i64;
    let rect = Rect { re_min: -strip.delta, re_max: strip.delta, im_min: -strip.omega_max, im_max: strip.omega_max };
    let strip_count = match count_roots_in_rectangle(op, rect) {
        Ok(n) => n,
        Err(e) => {
            failure.get_or_insert(e);
            -1
        }
    };
    if failure.is_none() && strip_count != expected {
        failure = Some(LinsysError::ExtraImaginaryRoots { found: strip_count, expected });
    }
    SpectrumReport {
        roots,
        residuals,
        derivatives,
        strip,
        strip_count,
        expected,
        passed: failure.is_none(),
        failure: failure.map(|e| e.to_string()),
    }
}

/// Checks that the target spectrum consists of simple roots and that the
/// strip contains no other roots.
pub fn verify_spectrum(
    op: &DelayLinearOperator,
    spec: &SpectrumSpec,
    strip: Option<Strip>,
) -> Result<SpectrumReport, LinsysError> {
    let strip = strip.unwrap_or_else(|| Strip::default_for(op, spec));
    let roots = spec.center_eigenvalues();
    for &lam in &roots {
        let (d, dp) = op.char_value(lam);
        if d.norm() > 1e-9 * (1.0 + lam.norm()) {
            return Err(LinsysError::NotARoot { lambda: lam, residual: d.norm() });
        }
        if dp.norm() <= SIMPLICITY_TOL {
            return Err(LinsysError::NonSimple { lambda: lam, derivative: dp.norm() });
        }
    }
    let rep = spectrum_report(op, spec, Some(strip));
    if rep.strip_count != rep.expected {
        return Err(LinsysError::ExtraImaginaryRoots { found: rep.strip_count, expected: rep.expected });
    }
    Ok(rep)
}

/// `Psi(0)`: `u0 = 1/Delta'(0)` and `u_j = 1/Delta'(i w_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointVector {
    pub u0: Option<f64>,
    pub u: Vec<C64>,
}

impl AdjointVector {
    /// Entries in center-slot order `(u0?, u1, conj u1, ...)`.
    pub fn psi0(&self) -> Vec<C64> {
        let mut out = Vec::new();
        if let Some(u0) = self.u0 {
            out.push(C64::new(u0, 0.0));
        }
        for &u in &self.u {
            out.push(u);
            out.push(u.conj());
        }
        out
    }

    /// All-ones stand-in used by the synthetic basis lemmas.
    pub fn ones(spec: &SpectrumSpec) -> Self {
        Self {
            u0: spec.includes_zero.then_some(1.0),
            u: vec![C64::new(1.0, 0.0); spec.p()],
        }
    }
}

pub fn adjoint_vector(op: &DelayLinearOperator, spec: &SpectrumSpec) -> Result<AdjointVector, LinsysError> {
    let mut u = Vec::with_capacity(spec.p());
    let mut u0 = None;
    if spec.includes_zero {
        let (_, dp) = op.char_value(C64::new(0.0, 0.0));
        if dp.norm() <= SIMPLICITY_TOL {
            return Err(LinsysError::NonSimple { lambda: C64::new(0.0, 0.0), derivative: dp.norm() });
        }
        u0 = Some(1.0 / dp.re);
    }
    for &w in &spec.omegas {
        let lam = C64::new(0.0, w);
        let (_, dp) = op.char_value(lam);
        if dp.norm() <= SIMPLICITY_TOL {
            return Err(LinsysError::NonSimple { lambda: lam, derivative: dp.norm() });
        }
        u.push(1.0 / dp);
    }
    Ok(AdjointVector { u0, u })
}

/// Adjoint eigenfunction `psi(s) = e^{-lambda s} / Delta'(lambda)` on `[0, r]`.
pub fn adjoint_eigenfunction(op: &DelayLinearOperator, lambda: C64, r: f64) -> ExpPoly {
    let (_, dp) = op.char_value(lambda);
    ExpPoly::exponential(-lambda, 1.0 / dp, (0.0, r))
}

/// `(psi, phi) = psi(0) phi(0) + sum_k b_k int_{theta_k}^0 psi(z - theta_k) phi(z) dz`.
pub fn bilinear_form(psi: &ExpPoly, phi: &ExpPoly, op: &DelayLinearOperator) -> C64 {
    let mut acc = psi.eval_unchecked(0.0) * phi.eval_unchecked(0.0);
    for t in &op.terms {
        if t.theta == 0.0 {
            continue;
        }
        let shifted = psi.shift(-t.theta);
        acc += shifted.mul(phi).integrate(t.theta, 0.0) * t.b;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hopf_op() -> DelayLinearOperator {
        DelayLinearOperator::new(vec![(-1.0, -PI / 2.0)]).unwrap()
    }

    #[test]
    fn char_value_examples() {
        let (d, dp) = hopf_op().char_value(C64::new(0.0, PI / 2.0));
        assert!(d.norm() < 1e-14);
        assert!((dp - C64::new(1.0, PI / 2.0)).norm() < 1e-14);
        let op = DelayLinearOperator::new(vec![(-PI / 2.0, -1.0)]).unwrap();
        assert!(op.char_value(C64::new(0.0, 1.0)).0.norm() < 1e-14);
    }

    #[test]
    fn conjugate_symmetry() {
        let op = DelayLinearOperator::new(vec![(-0.3, 1.2), (-2.0, -0.7)]).unwrap();
        for &z in &[C64::new(0.3, 1.7), C64::new(-1.0, 4.0), C64::new(2.0, -0.5)] {
            let (a, ap) = op.char_value(z.conj());
            let (b, bp) = op.char_value(z);
            assert!((a - b.conj()).norm() < 1e-13);
            assert!((ap - bp.conj()).norm() < 1e-13);
        }
    }

    #[test]
    fn design_examples() {
        let spec = SpectrumSpec::new(vec![1.0], false, 2.0).unwrap();
        let op = design_linear(&spec, &[-PI / 2.0]).unwrap();
        assert_abs_diff_eq!(op.terms[0].b, -1.0, epsilon = 1e-12);

        let spec = SpectrumSpec::new(vec![1.0], true, 5.0).unwrap();
        let op = design_linear(&spec, &[-PI / 2.0, -1.5 * PI]).unwrap();
        assert_abs_diff_eq!(op.terms[0].b, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(op.terms[1].b, 0.5, epsilon = 1e-12);
        let (_, dp) = op.char_value(C64::new(0.0, 0.0));
        assert_abs_diff_eq!(dp.re, 1.0 + PI / 2.0, epsilon = 1e-12);

        assert!(matches!(
            design_linear(&spec, &[-1.0, -1.0, -2.0]),
            Err(LinsysError::SingularDesign { .. })
        ));
    }

    #[test]
    fn integer_relation_detected() {
        assert!(SpectrumSpec::new(vec![1.0, 2.0], false, 1.0).is_err());
        assert!(SpectrumSpec::new(vec![3.0, 1.5], false, 1.0).is_err());
        assert!(SpectrumSpec::new(vec![1.0, 2f64.sqrt()], false, 1.0).is_ok());
        assert!(SpectrumSpec::new(vec![1.0, 1.0], false, 1.0).is_err());
    }

    #[test]
    fn root_counts() {
        let op = hopf_op();
        let r = |a, b, c, d| Rect { re_min: a, re_max: b, im_min: c, im_max: d };
        assert_eq!(count_roots_in_rectangle(&op, r(-0.05, 0.5, 1.0, 2.0)).unwrap(), 1);
        assert_eq!(count_roots_in_rectangle(&op, r(5.0, 6.0, 0.0, 1.0)).unwrap(), 0);
        assert_eq!(count_roots_in_rectangle(&op, r(-0.05, 0.5, -2.0, -1.0)).unwrap(), 1);
    }

    #[test]
    fn verify_examples() {
        let spec = SpectrumSpec::new(vec![PI / 2.0], false, 1.0).unwrap();
        let rep = verify_spectrum(&hopf_op(), &spec, None).unwrap();
        assert_eq!(rep.strip_count, 2);

        let spec1 = SpectrumSpec::new(vec![1.0], true, 5.0).unwrap();
        let bad = DelayLinearOperator::new(vec![(-PI / 2.0, -1.0), (-1.5 * PI, 0.5)]).unwrap();
        assert!(verify_spectrum(&bad, &spec1, None).is_err());
        let good = DelayLinearOperator::new(vec![(-PI / 2.0, -0.5), (-1.5 * PI, 0.5)]).unwrap();
        assert_eq!(verify_spectrum(&good, &spec1, None).unwrap().strip_count, 3);
    }

    #[test]
    fn adjoint_and_bilinear_form() {
        let spec = SpectrumSpec::new(vec![PI / 2.0], false, 1.0).unwrap();
        let op = hopf_op();
        let adj = adjoint_vector(&op, &spec).unwrap();
        assert!((adj.u[0] - 1.0 / C64::new(1.0, PI / 2.0)).norm() < 1e-14);
        let w = PI / 2.0;
        let psi = ExpPoly::exponential(C64::new(0.0, -w), adj.u[0], (0.0, 1.0));
        let phi = ExpPoly::exponential(C64::new(0.0, w), C64::new(1.0, 0.0), (-1.0, 0.0));
        let phibar = ExpPoly::exponential(C64::new(0.0, -w), C64::new(1.0, 0.0), (-1.0, 0.0));
        assert!((bilinear_form(&psi, &phi, &op) - 1.0).norm() < 1e-12);
        assert!(bilinear_form(&psi, &phibar, &op).norm() < 1e-12);

        let spec1 = SpectrumSpec::new(vec![1.0], true, 5.0).unwrap();
        let ss = DelayLinearOperator::new(vec![(-PI / 2.0, -0.5), (-1.5 * PI, 0.5)]).unwrap();
        let adj1 = adjoint_vector(&ss, &spec1).unwrap();
        assert_abs_diff_eq!(adj1.u0.unwrap(), 1.0 / (1.0 + PI / 2.0), epsilon = 1e-13);
        let one = ExpPoly::exponential(C64::new(0.0, 0.0), C64::new(1.0, 0.0), (0.0, 5.0));
        let onem = ExpPoly::exponential(C64::new(0.0, 0.0), C64::new(1.0, 0.0), (-5.0, 0.0));
        assert!((bilinear_form(&one, &onem, &ss) - (1.0 + PI / 2.0)).norm() < 1e-12);
    }
}
