//! Exponential polynomials `sum_k P_k(theta) e^{gamma_k theta}` and the
//! solver for the complementary-space homological equation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linsys::{adjoint_eigenfunction, bilinear_form, AdjointVector, DelayLinearOperator, SpectrumSpec};

type C64 = Complex64;

/// Exponents closer than this are merged.
pub const EXPONENT_MERGE_TOL: f64 = 1e-10;
/// `|lambda - gamma|` below this is treated as a collision.
pub const COLLISION_TOL: f64 = 1e-8;
/// Non-resonant solves abort when `|Delta(lambda)|` drops below this.
pub const NEAR_RESONANCE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QSolveError {
    #[error("theta = {theta} outside [{lo}, {hi}]")]
    OutOfDomain { theta: f64, lo: f64, hi: f64 },
    #[error("near-resonance: |Delta({lambda})| = {delta:.3e} with consistency scalar {consistency:.3e}")]
    NearResonance { lambda: C64, delta: f64, consistency: f64 },
    #[error("resonant solve at {lambda} is inconsistent (scalar {consistency:.3e})")]
    Inconsistent { lambda: C64, consistency: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub gamma: C64,
    /// Polynomial coefficients in ascending powers of theta.
    pub coeffs: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpPoly {
    pub terms: Vec<ExpTerm>,
    pub domain: (f64, f64),
}

fn poly_eval(c: &[C64], x: f64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * x + a)
}

fn poly_deriv(c: &[C64]) -> Vec<C64> {
    c.iter().enumerate().skip(1).map(|(k, &a)| a * k as f64).collect()
}

fn poly_trim(mut c: Vec<C64>) -> Vec<C64> {
    while c.last().is_some_and(|a| *a == C64::new(0.0, 0.0)) {
        c.pop();
    }
    c
}

fn poly_add(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or_default() + b.get(i).copied().unwrap_or_default())
        .collect()
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Antiderivative vanishing at 0.
fn poly_integral(c: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0)];
    out.extend(c.iter().enumerate().map(|(k, &a)| a / (k + 1) as f64));
    out
}

/// `P(theta + a)` via Horner-style Taylor shift.
fn poly_shift(c: &[C64], a: f64) -> Vec<C64> {
    let mut out = c.to_vec();
    let n = out.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            let t = out[j + 1] * a;
            out[j] += t;
        }
    }
    out
}

/// `Q` with `(Q e^{g t})' = P e^{g t}`, i.e. `Q = sum_k (-1)^k P^{(k)} / g^{k+1}`.
fn exp_antiderivative(c: &[C64], g: C64) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); c.len()];
    let mut d = c.to_vec();
    let mut sign = 1.0;
    let mut gp = g;
    while !d.is_empty() {
        for (i, &a) in d.iter().enumerate() {
            out[i] += a * sign / gp;
        }
        d = poly_deriv(&d);
        sign = -sign;
        gp *= g;
    }
    out
}

impl ExpPoly {
    pub fn zero(domain: (f64, f64)) -> Self {
        Self { terms: Vec::new(), domain }
    }

    /// `c e^{gamma theta}`.
    pub fn exponential(gamma: C64, c: C64, domain: (f64, f64)) -> Self {
        Self::from_terms(vec![ExpTerm { gamma, coeffs: vec![c] }], domain)
    }

    /// `P(theta) e^{gamma theta}` with ascending coefficients.
    pub fn poly_exp(gamma: C64, coeffs: Vec<C64>, domain: (f64, f64)) -> Self {
        Self::from_terms(vec![ExpTerm { gamma, coeffs }], domain)
    }

    pub fn from_terms(terms: Vec<ExpTerm>, domain: (f64, f64)) -> Self {
        let mut out = Self { terms: Vec::new(), domain };
        for t in terms {
            out.push_term(t);
        }
        out
    }

    fn push_term(&mut self, t: ExpTerm) {
        if let Some(existing) = self.terms.iter_mut().find(|e| (e.gamma - t.gamma).norm() < EXPONENT_MERGE_TOL) {
            existing.coeffs = poly_trim(poly_add(&existing.coeffs, &t.coeffs));
        } else {
            let coeffs = poly_trim(t.coeffs);
            if !coeffs.is_empty() {
                self.terms.push(ExpTerm { gamma: t.gamma, coeffs });
            }
        }
        self.terms.retain(|e| !e.coeffs.is_empty());
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, theta: f64) -> Result<C64, QSolveError> {
        let (lo, hi) = self.domain;
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if theta < lo - slack || theta > hi + slack {
            return Err(QSolveError::OutOfDomain { theta, lo, hi });
        }
        Ok(self.eval_unchecked(theta))
    }

    pub fn eval_unchecked(&self, theta: f64) -> C64 {
        self.terms.iter().map(|t| poly_eval(&t.coeffs, theta) * (t.gamma * theta).exp()).sum()
    }

    pub fn add(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = self.clone();
        for t in &other.terms {
            out.push_term(t.clone());
        }
        out
    }

    pub fn add_assign_scaled(&mut self, other: &ExpPoly, k: C64) {
        for t in &other.terms {
            self.push_term(ExpTerm { gamma: t.gamma, coeffs: t.coeffs.iter().map(|&c| c * k).collect() });
        }
    }

    pub fn scale(&self, k: C64) -> ExpPoly {
        ExpPoly::from_terms(
            self.terms
                .iter()
                .map(|t| ExpTerm { gamma: t.gamma, coeffs: t.coeffs.iter().map(|&c| c * k).collect() })
                .collect(),
            self.domain,
        )
    }

    pub fn mul(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = ExpPoly::zero(self.domain);
        for a in &self.terms {
            for b in &other.terms {
                out.push_term(ExpTerm { gamma: a.gamma + b.gamma, coeffs: poly_mul(&a.coeffs, &b.coeffs) });
            }
        }
        out
    }

    pub fn derivative(&self) -> ExpPoly {
        ExpPoly::from_terms(
            self.terms
                .iter()
                .map(|t| {
                    let scaled: Vec<C64> = t.coeffs.iter().map(|&c| c * t.gamma).collect();
                    ExpTerm { gamma: t.gamma, coeffs: poly_add(&scaled, &poly_deriv(&t.coeffs)) }
                })
                .collect(),
            self.domain,
        )
    }

    /// `f(theta + a)`; the domain moves by `-a`.
    pub fn shift(&self, a: f64) -> ExpPoly {
        ExpPoly::from_terms(
            self.terms
                .iter()
                .map(|t| {
                    let k = (t.gamma * a).exp();
                    ExpTerm { gamma: t.gamma, coeffs: poly_shift(&t.coeffs, a).into_iter().map(|c| c * k).collect() }
                })
                .collect(),
            (self.domain.0 - a, self.domain.1 - a),
        )
    }

    /// Exact `int_a^b f`.
    pub fn integrate(&self, a: f64, b: f64) -> C64 {
        self.terms
            .iter()
            .map(|t| {
                if t.gamma.norm() < EXPONENT_MERGE_TOL {
                    let q = poly_integral(&t.coeffs);
                    poly_eval(&q, b) - poly_eval(&q, a)
                } else {
                    let q = exp_antiderivative(&t.coeffs, t.gamma);
                    poly_eval(&q, b) * (t.gamma * b).exp() - poly_eval(&q, a) * (t.gamma * a).exp()
                }
            })
            .sum()
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.iter().flat_map(|t| t.coeffs.iter().map(|c| c.norm())).fold(0.0, f64::max)
    }

    pub fn conj(&self) -> ExpPoly {
        ExpPoly::from_terms(
            self.terms
                .iter()
                .map(|t| ExpTerm { gamma: t.gamma.conj(), coeffs: t.coeffs.iter().map(|c| c.conj()).collect() })
                .collect(),
            self.domain,
        )
    }

    /// Sup-norm estimate on an `n`-point uniform grid over the domain.
    pub fn sup_on_grid(&self, n: usize) -> f64 {
        let (lo, hi) = self.domain;
        (0..n)
            .map(|i| {
                let t = lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64;
                self.eval_unchecked(t).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Writes `theta,re,im` samples.
    pub fn to_csv(&self, n: usize) -> String {
        let (lo, hi) = self.domain;
        let mut s = String::from("theta,re,im\n");
        for i in 0..n {
            let t = lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64;
            let v = self.eval_unchecked(t);
            s.push_str(&format!("{t},{},{}\n", v.re, v.im));
        }
        s
    }
}

/// `Phi(theta) Psi(0)` as an exponential polynomial on `[-r, 0]`.
pub fn phi_psi0(spec: &SpectrumSpec, adj: &AdjointVector) -> ExpPoly {
    let dom = (-spec.r, 0.0);
    let mut out = ExpPoly::zero(dom);
    for (lam, u) in spec.center_eigenvalues().into_iter().zip(adj.psi0()) {
        out = out.add(&ExpPoly::exponential(lam, u, dom));
    }
    out
}

/// Particular solution of `h' = lambda h + g`.
fn particular(lambda: C64, g: &ExpPoly) -> ExpPoly {
    let mut out = ExpPoly::zero(g.domain);
    for t in &g.terms {
        let diff = t.gamma - lambda;
        let coeffs = if diff.norm() < COLLISION_TOL {
            poly_integral(&t.coeffs)
        } else {
            exp_antiderivative(&t.coeffs, diff)
        };
        out.push_term(ExpTerm { gamma: t.gamma, coeffs });
    }
    out
}

/// Solves `(lambda - A_Q) h = (I - pi) X0 c` for `h` in the complementary space.
pub fn solve_q_homological(
    lambda: C64,
    c: C64,
    op: &DelayLinearOperator,
    spec: &SpectrumSpec,
    adj: &AdjointVector,
) -> Result<ExpPoly, QSolveError> {
    solve_q_general(lambda, c, &ExpPoly::zero((-spec.r, 0.0)), op, spec, adj)
}

/// General form with an additional complementary-space forcing `phi`:
///
/// ```text
/// h'(theta) = lambda h(theta) + Phi(theta) Psi(0) c + phi(theta)   on [-r, 0]
/// h'(0) - L h = c
/// ```
pub fn solve_q_general(
    lambda: C64,
    c: C64,
    phi: &ExpPoly,
    op: &DelayLinearOperator,
    spec: &SpectrumSpec,
    adj: &AdjointVector,
) -> Result<ExpPoly, QSolveError> {
    let dom = (-spec.r, 0.0);
    let g = phi_psi0(spec, adj).scale(c).add(phi);
    if c == C64::new(0.0, 0.0) && phi.is_zero() {
        return Ok(ExpPoly::zero(dom));
    }
    let hp = particular(lambda, &g);
    // h_p'(0) = lambda h_p(0) + g(0)
    let boundary = lambda * hp.eval_unchecked(0.0) + g.eval_unchecked(0.0) - op.apply(&hp);
    let consistency = c - boundary;
    let scale = 1.0 + c.norm() + g.max_coeff();
    let resonant = spec.center_eigenvalues().iter().any(|&l| (l - lambda).norm() < COLLISION_TOL);
    let xi = if resonant {
        if consistency.norm() > 1e-8 * scale {
            return Err(QSolveError::Inconsistent { lambda, consistency: consistency.norm() });
        }
        let psi = adjoint_eigenfunction(op, lambda, spec.r);
        -bilinear_form(&psi, &hp, op)
    } else {
        let (delta, _) = op.char_value(lambda);
        if delta.norm() < NEAR_RESONANCE_TOL {
            return Err(QSolveError::NearResonance { lambda, delta: delta.norm(), consistency: consistency.norm() });
        }
        consistency / delta
    };
    Ok(hp.add(&ExpPoly::exponential(lambda, xi, dom)))
}

/// Residuals of a candidate solution: `(interior sup, boundary)`.
pub fn q_residuals(
    h: &ExpPoly,
    lambda: C64,
    c: C64,
    phi: &ExpPoly,
    op: &DelayLinearOperator,
    spec: &SpectrumSpec,
    adj: &AdjointVector,
    grid: usize,
) -> (f64, f64) {
    let g = phi_psi0(spec, adj).scale(c).add(phi);
    let res = h.derivative().add(&h.scale(-lambda)).add(&g.scale(C64::new(-1.0, 0.0)));
    let interior = res.sup_on_grid(grid);
    let boundary = (h.derivative().eval_unchecked(0.0) - op.apply(h) - c).norm();
    (interior, boundary)
}

/// `(psi_lambda, h)` for every center eigenvalue.
pub fn center_components(h: &ExpPoly, op: &DelayLinearOperator, spec: &SpectrumSpec) -> Vec<C64> {
    spec.center_eigenvalues()
        .into_iter()
        .map(|l| bilinear_form(&adjoint_eigenfunction(op, l, spec.r), h, op))
        .collect()
}
