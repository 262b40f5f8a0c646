//! Center-manifold reduction and torus-equivariant normal form of scalar
//! delay equations whose nonlinearity is a polynomial in finitely many
//! delayed values.
//!
//! The reduction proceeds in two stages that are equivalent order by order
//! to the sequential Faria–Magalhães procedure with the standard choice of
//! complement:
//!
//! 1. The center manifold `y = h(x, mu)` is computed degree by degree. Each
//!    monomial coefficient of `h` is an exponential polynomial on `[-r, 0]`
//!    obtained from the complementary-space homological equation.
//! 2. The reduced vector field `x' = Bx + Psi(0) F(Phi x + h(x), mu)` is
//!    normalized with near-identity changes `x = x + U_j(x)` that remove the
//!    non-resonant part at each order.
//!
//! The corrections `Y_j`, `Z_j` are the order-`j` terms of the reduced field
//! (after lower-order changes) minus the direct contribution
//! `Psi(0) F_j(E_tau x, mu)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linsys::{AdjointVector, DelayLinearOperator, SpectrumSpec};
use crate::polyring::{CoeffEntry, Monomial, Poly, PolyError, PowerCache, VariableSpace, VectorPoly};
use crate::qsolver::{solve_q_general, ExpPoly, QSolveError};
use crate::realizer::build_e;
use crate::symmetry::{homological_eigenvalue, project_a, project_a_complement, project_pi, SymmetryError};

type C64 = Complex64;

/// Smallest admissible homological eigenvalue on a non-resonant term.
pub const CLUSTER_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NfError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("order must be at least 2, got {0}")]
    Order(usize),
    #[error("frequency clustering: eigenvalue {eigenvalue:.3e} on monomial {monomial:?} in component {component}")]
    Clustering { monomial: Vec<u32>, component: usize, eigenvalue: f64 },
    #[error("oracle requires one Hopf pair without zero eigenvalue and degree <= 3")]
    OracleScope,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    QSolve(#[from] QSolveError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

/// `z'(t) = L z_t + eta(z(t + tau)) + xi(z(t + tau), mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DDEModel {
    pub linear: DelayLinearOperator,
    pub delays: Vec<f64>,
    /// Parameter-free nonlinearity in `delayed(n, s)` variables.
    pub eta: Poly,
    /// Unfolding terms vanishing at `mu = 0`.
    pub xi: Poly,
    pub s: usize,
}

impl DDEModel {
    pub fn new(linear: DelayLinearOperator, delays: Vec<f64>, eta: Poly, xi: Poly, s: usize) -> Result<Self, NfError> {
        let m = Self { linear, delays, eta, xi, s };
        m.validate()?;
        Ok(m)
    }

    /// Model with zero nonlinearity over the given delays.
    pub fn linear_only(linear: DelayLinearOperator, delays: Vec<f64>, s: usize) -> Self {
        let sp = VariableSpace::delayed(delays.len(), s);
        Self { linear, delays, eta: Poly::zero(sp), xi: Poly::zero(sp), s }
    }

    pub fn space(&self) -> VariableSpace {
        VariableSpace::delayed(self.delays.len(), self.s)
    }

    pub fn validate(&self) -> Result<(), NfError> {
        let sp = self.space();
        if self.delays.is_empty() {
            return Err(NfError::InvalidModel("at least one delay is required".into()));
        }
        for (i, &t) in self.delays.iter().enumerate() {
            if !(t <= 0.0 && t.is_finite()) {
                return Err(NfError::InvalidModel(format!("delay {t} must be <= 0")));
            }
            if self.delays[..i].contains(&t) {
                return Err(NfError::InvalidModel(format!("repeated delay {t}")));
            }
        }
        if self.eta.space != sp || self.xi.space != sp {
            return Err(NfError::InvalidModel(format!("nonlinearity must live in {sp}")));
        }
        if self.eta.terms().any(|(m, _)| m.degree() < 2 || m.param_degree(&sp) > 0) {
            return Err(NfError::InvalidModel("eta must be parameter-free with degree >= 2".into()));
        }
        if self.xi.terms().any(|(m, _)| m.degree() < 2 || m.param_degree(&sp) == 0) {
            return Err(NfError::InvalidModel("xi must vanish at mu = 0 and have degree >= 2".into()));
        }
        if self.eta.terms().chain(self.xi.terms()).any(|(_, c)| c.im != 0.0) {
            return Err(NfError::InvalidModel("coefficients must be real".into()));
        }
        Ok(())
    }

    pub fn nonlinearity(&self) -> Poly {
        self.eta.add(&self.xi).expect("same space")
    }

    /// Right-hand side nonlinearity at delayed values `v` and parameters `mu`.
    pub fn eval_nonlinearity(&self, v: &[f64], mu: &[f64]) -> f64 {
        let pt: Vec<C64> = v.iter().chain(mu).map(|&x| C64::new(x, 0.0)).collect();
        self.eta.eval(&pt).re + self.xi.eval(&pt).re
    }
}

/// Polynomial in center variables with exponential-polynomial coefficients,
/// i.e. a map from `(x, mu)` into functions on `[-r, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoly {
    pub space: VariableSpace,
    pub domain: (f64, f64),
    pub terms: BTreeMap<Monomial, ExpPoly>,
}

impl ManifoldPoly {
    pub fn zero(space: VariableSpace, domain: (f64, f64)) -> Self {
        Self { space, domain, terms: BTreeMap::new() }
    }

    pub fn insert(&mut self, m: Monomial, f: ExpPoly) {
        if f.is_zero() {
            return;
        }
        let e = self.terms.entry(m).or_insert_with(|| ExpPoly::zero(self.domain));
        *e = e.add(&f);
        if e.is_zero() {
            // keep map free of zeros
            let key = self.terms.iter().find(|(_, v)| v.is_zero()).map(|(k, _)| k.clone());
            if let Some(k) = key {
                self.terms.remove(&k);
            }
        }
    }

    /// Scalar polynomial `h(x, mu)(theta)`.
    pub fn eval_at(&self, theta: f64) -> Poly {
        let mut p = Poly::zero(self.space);
        for (m, f) in &self.terms {
            p.add_term(m.clone(), f.eval_unchecked(theta));
        }
        p
    }

    pub fn homogeneous(&self, k: usize) -> ManifoldPoly {
        ManifoldPoly {
            space: self.space,
            domain: self.domain,
            terms: self.terms.iter().filter(|(m, _)| m.degree() == k).map(|(m, f)| (m.clone(), f.clone())).collect(),
        }
    }

    pub fn filter_params(&self, vanishing: bool) -> ManifoldPoly {
        let sp = self.space;
        ManifoldPoly {
            space: sp,
            domain: self.domain,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| (m.param_degree(&sp) > 0) == vanishing)
                .map(|(m, f)| (m.clone(), f.clone()))
                .collect(),
        }
    }

    pub fn derivative(&self, i: usize) -> ManifoldPoly {
        let mut out = ManifoldPoly::zero(self.space, self.domain);
        for (m, f) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[i] -= 1;
            out.insert(dm, f.scale(C64::new(e as f64, 0.0)));
        }
        out
    }

    /// Product with a scalar polynomial, truncated at `max_deg`.
    pub fn mul_scalar(&self, p: &Poly, max_deg: usize) -> ManifoldPoly {
        let mut out = ManifoldPoly::zero(self.space, self.domain);
        for (m, f) in &self.terms {
            for (pm, &c) in p.terms() {
                if m.degree() + pm.degree() <= max_deg {
                    out.insert(m.mul(pm), f.scale(c));
                }
            }
        }
        out
    }

    pub fn add(&self, other: &ManifoldPoly) -> ManifoldPoly {
        let mut out = self.clone();
        for (m, f) in &other.terms {
            out.insert(m.clone(), f.clone());
        }
        out
    }

    pub fn scale(&self, k: C64) -> ManifoldPoly {
        let mut out = ManifoldPoly::zero(self.space, self.domain);
        for (m, f) in &self.terms {
            out.insert(m.clone(), f.scale(k));
        }
        out
    }

    /// `h(subs(x), mu)` truncated at `max_deg`.
    pub fn compose(&self, subs: &[Poly], max_deg: usize) -> ManifoldPoly {
        let mut cache = PowerCache::new(subs.to_vec(), self.space, max_deg);
        let mut out = ManifoldPoly::zero(self.space, self.domain);
        for (m, f) in &self.terms {
            let expanded = cache.monomial(m);
            for (pm, &c) in expanded.terms() {
                out.insert(pm.clone(), f.scale(c));
            }
        }
        out
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(ExpPoly::max_coeff).fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Normal-form data for one order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderRecord {
    pub order: usize,
    /// Kept resonant terms `g_j`.
    pub g: VectorPoly,
    /// Parameter-free correction `Y_j`.
    pub y: VectorPoly,
    /// Parameter-dependent correction `Z_j` (vanishes at `mu = 0`).
    pub z: VectorPoly,
    pub pi_a_y: VectorPoly,
    pub pi_a_z: VectorPoly,
    /// Center part of the change of variables, parameter-free and
    /// parameter-dependent pieces.
    pub u1: VectorPoly,
    pub w1: VectorPoly,
    /// Complementary part of the change of variables.
    pub u2: ManifoldPoly,
    pub w2: ManifoldPoly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormResult {
    pub ell: usize,
    /// Equivariant radial field over `(rho, mu)`.
    pub radial: VectorPoly,
    /// Angular velocities `k_j(rho, mu)` with constant term `omega_j`.
    pub angular: Vec<Poly>,
    /// Torus-equivariant center normal form `sum_j g_j`.
    pub g: VectorPoly,
    pub orders: Vec<OrderRecord>,
    /// Center-manifold graph in the original coordinates.
    pub center_manifold: ManifoldPoly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalFormReport {
    pub ell: usize,
    pub radial: Vec<CoeffEntry>,
    pub angular: Vec<Vec<CoeffEntry>>,
    pub orders: Vec<OrderSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderSummary {
    pub order: usize,
    pub y_norm: f64,
    pub z_norm: f64,
    pub u1_norm: f64,
    pub w1_norm: f64,
    pub u2_norm: f64,
    pub w2_norm: f64,
}

impl NormalFormResult {
    pub fn report(&self) -> NormalFormReport {
        NormalFormReport {
            ell: self.ell,
            radial: self.radial.chop(1e-14).to_entries(),
            angular: self
                .angular
                .iter()
                .map(|p| VectorPoly::from_components(p.space, vec![p.chop(1e-14)]).unwrap().to_entries())
                .collect(),
            orders: self
                .orders
                .iter()
                .map(|o| OrderSummary {
                    order: o.order,
                    y_norm: o.y.max_abs(),
                    z_norm: o.z.max_abs(),
                    u1_norm: o.u1.max_abs(),
                    w1_norm: o.w1.max_abs(),
                    u2_norm: o.u2.max_coeff(),
                    w2_norm: o.w2.max_coeff(),
                })
                .collect(),
        }
    }

    /// Radial coefficient of `monomial` in component `component`.
    pub fn radial_coeff(&self, component: usize, exponents: &[u32]) -> f64 {
        self.radial.components[component].coeff(&Monomial(exponents.to_vec())).re
    }

    pub fn order(&self, j: usize) -> Option<&OrderRecord> {
        self.orders.iter().find(|o| o.order == j)
    }
}

/// Graded terms of the decomposed system at one order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedTerm {
    pub order: usize,
    /// `Psi(0) F_j(Phi x + w, mu)` over `(x, w, mu)`; the `w_i` stand for
    /// the complementary values `y(tau_i)`.
    pub f1: VectorPoly,
    /// Scalar coefficients `F_j` shared by the complementary forcing.
    pub f2: Poly,
}

/// Substitutes `v_i = Phi(tau_i) x + w_i` into the nonlinearity and grades the result.
pub fn graded_terms(model: &DDEModel, spec: &SpectrumSpec, adj: &AdjointVector, ell: usize) -> Result<Vec<GradedTerm>, NfError> {
    let n = model.delays.len();
    let kappa = spec.kappa();
    // Variables: x (kappa), w (n), then mu (s); modelled as a center space
    // whose extra "parameters" are (w, mu).
    let sp = VariableSpace::center(spec.p(), spec.includes_zero, n + model.s);
    let e = build_e(spec, &model.delays);
    let mut subs = Vec::new();
    for i in 0..n {
        let mut p = Poly::zero(sp);
        for c in 0..kappa {
            p.add_term(Monomial::var(sp.nvars(), c), e[(i, c)]);
        }
        p.add_term(Monomial::var(sp.nvars(), kappa + i), C64::new(1.0, 0.0));
        subs.push(p);
    }
    for a in 0..model.s {
        subs.push(Poly::var(sp, kappa + n + a));
    }
    let f = model.nonlinearity().compose(&subs, sp, ell)?;
    let psi0 = adj.psi0();
    Ok((2..=ell)
        .map(|j| {
            let fj = f.homogeneous(j);
            GradedTerm { order: j, f1: VectorPoly::broadcast(&fj, &psi0), f2: fj }
        })
        .collect())
}

fn linear_forms(spec: &SpectrumSpec, delays: &[f64], cs: VariableSpace) -> Vec<Poly> {
    let e = build_e(spec, delays);
    (0..delays.len())
        .map(|i| {
            let mut p = Poly::zero(cs);
            for c in 0..cs.state_dim() {
                p.add_term(Monomial::var(cs.nvars(), c), e[(i, c)]);
            }
            p
        })
        .collect()
}

/// `F(Phi(tau) x + h(x)(tau), mu)` truncated at `max_deg`.
fn reduced_scalar(f: &Poly, lin: &[Poly], h: &ManifoldPoly, delays: &[f64], cs: VariableSpace, max_deg: usize) -> Result<Poly, NfError> {
    let mut subs: Vec<Poly> = lin
        .iter()
        .zip(delays)
        .map(|(l, &t)| l.add(&h.eval_at(t).truncate(max_deg)))
        .collect::<Result<_, _>>()?;
    for a in 0..cs.s {
        subs.push(Poly::var(cs, cs.param_offset() + a));
    }
    Ok(f.compose(&subs, cs, max_deg)?)
}

/// Center manifold `h` up to degree `max_deg`.
pub fn center_manifold(
    model: &DDEModel,
    spec: &SpectrumSpec,
    adj: &AdjointVector,
    max_deg: usize,
) -> Result<ManifoldPoly, NfError> {
    let cs = spec.center_space(model.s);
    let lin = linear_forms(spec, &model.delays, cs);
    let f = model.nonlinearity().truncate(max_deg + 1);
    let psi0 = adj.psi0();
    let mut h = ManifoldPoly::zero(cs, (-spec.r, 0.0));
    for k in 2..=max_deg {
        let s_k = reduced_scalar(&f, &lin, &h, &model.delays, cs, k)?;
        // Dh . Psi(0) s, degree-k part
        let mut dh = ManifoldPoly::zero(cs, h.domain);
        for i in 0..cs.state_dim() {
            let di = h.derivative(i);
            if di.is_empty() {
                continue;
            }
            dh = dh.add(&di.mul_scalar(&s_k.scale(psi0[i]), k));
        }
        let dh = dh.homogeneous(k);
        let s_hom = s_k.homogeneous(k);
        let mut keys: Vec<Monomial> = s_hom.terms().map(|(m, _)| m.clone()).collect();
        for m in dh.terms.keys() {
            if !keys.contains(m) {
                keys.push(m.clone());
            }
        }
        let solved: Vec<Result<(Monomial, ExpPoly), NfError>> = keys
            .par_iter()
            .map(|m| {
                let c = s_hom.coeff(m);
                let phi = dh.terms.get(m).cloned().unwrap_or_else(|| ExpPoly::zero(h.domain));
                let w = m.weight(&cs);
                let lam: f64 = w.iter().zip(&spec.omegas).map(|(&k, &om)| k as f64 * om).sum();
                let sol = solve_q_general(C64::new(0.0, lam), c, &phi, &model.linear, spec, adj)?;
                Ok((m.clone(), sol))
            })
            .collect();
        for r in solved {
            let (m, sol) = r?;
            h.insert(m, sol);
        }
    }
    Ok(h)
}

/// Divides each non-resonant term by its homological eigenvalue.
fn solve_homological(rem: &VectorPoly, spec: &SpectrumSpec) -> Result<VectorPoly, NfError> {
    let sp = rem.space;
    let mut out = VectorPoly::zero_field(sp);
    for (c, comp) in rem.components.iter().enumerate() {
        for (m, &v) in comp.terms() {
            let ev = homological_eigenvalue(m, c, spec, &sp);
            if ev.norm() < CLUSTER_TOL {
                return Err(NfError::Clustering { monomial: m.0.clone(), component: c, eigenvalue: ev.norm() });
            }
            out.components[c].add_term(m.clone(), v / ev);
        }
    }
    Ok(out)
}

/// Field after `x = x_hat + U(x_hat)`:
/// `G_hat = (I + DU)^{-1} [B(x + U) + G(x + U)] - B x`, truncated.
fn transform_field(g: &VectorPoly, u: &VectorPoly, lam: &[C64], max_deg: usize) -> VectorPoly {
    let sp = g.space;
    let kappa = sp.state_dim();
    let mut subs = Vec::with_capacity(sp.nvars());
    for i in 0..kappa {
        subs.push(Poly::var(sp, i).add(&u.components[i]).unwrap());
    }
    for a in 0..sp.s {
        subs.push(Poly::var(sp, kappa + a));
    }
    let mut cache = PowerCache::new(subs.clone(), sp, max_deg);
    let mut r = VectorPoly::zero_field(sp);
    for c in 0..kappa {
        let mut acc = subs[c].scale(lam[c]);
        for (m, &v) in g.components[c].terms() {
            acc.add_scaled(&cache.monomial(m), v);
        }
        r.components[c] = acc.truncate(max_deg);
    }
    let du: Vec<Vec<Poly>> = (0..kappa).map(|c| (0..kappa).map(|i| u.components[c].derivative(i)).collect()).collect();
    let mut x = r.clone();
    for _ in 0..max_deg {
        let mut next = r.clone();
        for c in 0..kappa {
            for i in 0..kappa {
                if du[c][i].is_zero() {
                    continue;
                }
                let prod = du[c][i].mul_truncated(&x.components[i], max_deg);
                next.components[c].add_scaled(&prod, C64::new(-1.0, 0.0));
            }
        }
        x = next;
    }
    for c in 0..kappa {
        x.components[c].add_scaled(&Poly::var(sp, c), -lam[c]);
    }
    x
}

/// Reduces the model to its radial/angular normal form up to order `ell`.
pub fn reduce_to_normal_form(
    model: &DDEModel,
    spec: &SpectrumSpec,
    adj: &AdjointVector,
    ell: usize,
) -> Result<NormalFormResult, NfError> {
    if ell < 2 {
        return Err(NfError::Order(ell));
    }
    model.validate()?;
    if !spec.includes_zero {
        let sp = model.space();
        if model.xi.terms().any(|(m, _)| m.state_degree(&sp) == 0) {
            return Err(NfError::InvalidModel("pure parameter terms need a zero eigenvalue".into()));
        }
    }
    let cs = spec.center_space(model.s);
    let lin = linear_forms(spec, &model.delays, cs);
    let f = model.nonlinearity().truncate(ell);
    let psi0 = adj.psi0();
    let lam = spec.center_eigenvalues();

    let h = center_manifold(model, spec, adj, ell - 1)?;
    let s_full = reduced_scalar(&f, &lin, &h, &model.delays, cs, ell)?;
    let direct = reduced_scalar(&f, &lin, &ManifoldPoly::zero(cs, h.domain), &model.delays, cs, ell)?;
    let direct_field = VectorPoly::broadcast(&direct, &psi0);
    let mut field = VectorPoly::broadcast(&s_full, &psi0);

    let mut hcur = h.clone();
    let mut orders = Vec::new();
    let mut g_total = VectorPoly::zero_field(cs);
    for j in 2..=ell {
        let gj = field.homogeneous(j);
        let corr = gj.sub(&direct_field.homogeneous(j))?;
        let y = corr.param_free();
        let z = corr.param_vanishing();
        let kept = project_a(&gj);
        let u = solve_homological(&project_a_complement(&gj), spec)?;
        let u2_all = hcur.homogeneous(j);
        if j < ell {
            let mut subs: Vec<Poly> = (0..cs.state_dim()).map(|i| Poly::var(cs, i).add(&u.components[i]).unwrap()).collect();
            for a in 0..cs.s {
                subs.push(Poly::var(cs, cs.param_offset() + a));
            }
            if !u.is_zero() {
                field = transform_field(&field, &u, &lam, ell);
                hcur = hcur.compose(&subs, ell);
            }
            hcur = hcur.add(&u2_all.scale(C64::new(-1.0, 0.0)));
        }
        g_total = g_total.add(&kept)?;
        orders.push(OrderRecord {
            order: j,
            pi_a_y: project_pi(&project_a(&y))?,
            pi_a_z: project_pi(&project_a(&z))?,
            g: kept,
            y,
            z,
            u1: u.param_free(),
            w1: u.param_vanishing(),
            u2: u2_all.filter_params(false),
            w2: u2_all.filter_params(true),
        });
    }
    let radial = project_pi(&g_total)?;
    let angular = angular_field(&g_total, spec);
    Ok(NormalFormResult { ell, radial, angular, g: g_total, orders, center_manifold: h })
}

/// `theta_j' = omega_j + Im a_j(rho, mu)`.
fn angular_field(g: &VectorPoly, spec: &SpectrumSpec) -> Vec<Poly> {
    let cs = g.space;
    let rs = spec.radial_space(cs.s);
    let z = spec.includes_zero as usize;
    (1..=spec.p())
        .map(|j| {
            let slot = cs.x_slot(j);
            let mut k = Poly::constant(rs, C64::new(spec.omegas[j - 1], 0.0));
            for (m, &c) in g.components[slot].terms() {
                let mut e = vec![0u32; rs.nvars()];
                for (v, &x) in m.0.iter().enumerate() {
                    let rv = if v < z {
                        0
                    } else if v < cs.state_dim() {
                        z + (v - z) / 2
                    } else {
                        rs.param_offset() + v - cs.state_dim()
                    };
                    e[rv] += x;
                }
                e[z + j - 1] -= 1;
                k.add_term(Monomial(e), C64::new(c.im, 0.0));
            }
            k
        })
        .collect()
}

/// Hopf coefficients from the classical closed-form route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfCoefficients {
    pub g20: C64,
    pub g11: C64,
    pub g02: C64,
    pub g21: C64,
    pub c1: C64,
}

/// First Lyapunov coefficient `c1(0)` of a one-frequency model, computed
/// independently of [`reduce_to_normal_form`]. `Re c1` is the cubic radial
/// coefficient.
pub fn hopf_oracle(model: &DDEModel, spec: &SpectrumSpec, adj: &AdjointVector) -> Result<HopfCoefficients, NfError> {
    if spec.p() != 1 || spec.includes_zero {
        return Err(NfError::OracleScope);
    }
    if model.eta.degree().unwrap_or(0) > 3 {
        return Err(NfError::OracleScope);
    }
    let n = model.delays.len();
    let w = spec.omegas[0];
    let u1 = adj.u[0];
    let op = &model.linear;
    let sp = model.space();
    let q = model.eta.homogeneous(2);
    let cub = model.eta.homogeneous(3);
    let i = C64::new(0.0, 1.0);
    let at = |p: &Poly, v: &[C64]| -> C64 {
        let mut pt = v.to_vec();
        pt.extend(std::iter::repeat_n(C64::new(0.0, 0.0), sp.s));
        p.eval(&pt)
    };
    let bil = |a: &[C64], b: &[C64]| -> C64 {
        let ab: Vec<C64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
        (at(&q, &ab) - at(&q, a) - at(&q, b)) * 0.5
    };
    let e: Vec<C64> = model.delays.iter().map(|&t| C64::from_polar(1.0, w * t)).collect();
    let eb: Vec<C64> = e.iter().map(|z| z.conj()).collect();
    let f20 = at(&q, &e) * 2.0;
    let f02 = at(&q, &eb) * 2.0;
    let f11 = bil(&e, &eb) * 2.0;
    let g20 = u1 * f20;
    let g11 = u1 * f11;
    let g02 = u1 * f02;
    let (d2, _) = op.char_value(C64::new(0.0, 2.0 * w));
    let (d0, _) = op.char_value(C64::new(0.0, 0.0));
    let w20 = |t: f64| -> C64 {
        i * g20 / w * (i * w * t).exp() + i * g02.conj() / (3.0 * w) * (-i * w * t).exp() + f20 / d2 * (2.0 * i * w * t).exp()
    };
    let w11 = |t: f64| -> C64 { -i * g11 / w * (i * w * t).exp() + i * g11.conj() / w * (-i * w * t).exp() + f11 / d0 };
    let w20v: Vec<C64> = model.delays.iter().map(|&t| w20(t)).collect();
    let w11v: Vec<C64> = model.delays.iter().map(|&t| w11(t)).collect();
    // z^2 zbar coefficient of the cubic part by discrete Fourier extraction.
    let npts = 8;
    let mut c21 = C64::new(0.0, 0.0);
    for k in 0..npts {
        let phase = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / npts as f64);
        let v: Vec<C64> = (0..n).map(|m| phase * e[m] + phase.conj() * eb[m]).collect();
        c21 += at(&cub, &v) * phase.conj();
    }
    c21 /= npts as f64;
    let coeff21 = c21 + bil(&e, &w11v) * 2.0 + bil(&eb, &w20v);
    let g21 = u1 * coeff21 * 2.0;
    let c1 = i / (2.0 * w) * (g20 * g11 - 2.0 * g11.norm_sqr() - g02.norm_sqr() / 3.0) + g21 / 2.0;
    Ok(HopfCoefficients { g20, g11, g02, g21, c1 })
}

/// Matrix of the linear map `eta -> Pi A (Psi(0) eta(E x))` at one degree, for
/// an arbitrary list of scalar source polynomials and radial target catalog.
pub fn pi_a_columns(
    sources: &[Poly],
    e: &DMatrix<C64>,
    psi0: &[C64],
    cs: VariableSpace,
) -> Result<Vec<VectorPoly>, NfError> {
    sources
        .iter()
        .map(|b| {
            let img = b.compose_linear(e, cs)?;
            let field = VectorPoly::broadcast(&img, psi0);
            Ok(project_pi(&project_a(&field))?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::adjoint_vector;
    use std::f64::consts::PI;

    fn hopf_setup() -> (DelayLinearOperator, SpectrumSpec, AdjointVector) {
        let op = DelayLinearOperator::new(vec![(-1.0, -PI / 2.0)]).unwrap();
        let spec = SpectrumSpec::new(vec![PI / 2.0], false, 1.0).unwrap();
        let adj = adjoint_vector(&op, &spec).unwrap();
        (op, spec, adj)
    }

    fn model(a2: f64, a3: f64, s: usize, xi: &[(Vec<u32>, f64)]) -> DDEModel {
        let (op, _, _) = hopf_setup();
        let sp = VariableSpace::delayed(1, s);
        let mut e2 = vec![2];
        let mut e3 = vec![3];
        e2.extend(vec![0; s]);
        e3.extend(vec![0; s]);
        let eta = Poly::from_terms(sp, [(e2, C64::new(a2, 0.0)), (e3, C64::new(a3, 0.0))]);
        let xi = Poly::from_terms(sp, xi.iter().map(|(e, c)| (e.clone(), C64::new(*c, 0.0))));
        DDEModel::new(op, vec![-1.0], eta, xi, s).unwrap()
    }

    #[test]
    fn graded_terms_cubic() {
        let (_, spec, adj) = hopf_setup();
        let m = model(0.0, 2.0, 0, &[]);
        let gt = graded_terms(&m, &spec, &adj, 3).unwrap();
        let f3 = &gt[1].f2;
        // coefficient of x1^2 x1bar at w = 0: 3 A3 E^2 Ebar with E = -i
        let e = C64::new(0.0, -1.0);
        let got = f3.coeff(&Monomial(vec![2, 1, 0]));
        assert!((got - e * e * e.conj() * 6.0).norm() < 1e-13);
        // first-order w term of the quadratic model
        let m2 = model(1.0, 0.0, 0, &[]);
        let gt2 = graded_terms(&m2, &spec, &adj, 2).unwrap();
        assert!((gt2[0].f2.coeff(&Monomial(vec![1, 0, 1])) - e * 2.0).norm() < 1e-13);
    }

    #[test]
    fn pure_cubic_hopf_coefficient() {
        let (_, spec, adj) = hopf_setup();
        let a3 = 0.8;
        let nf = reduce_to_normal_form(&model(0.0, a3, 0, &[]), &spec, &adj, 3).unwrap();
        let u1 = adj.u[0];
        let expect = 3.0 * a3 * (u1 * C64::new(0.0, -1.0)).re;
        assert!((nf.radial_coeff(0, &[3]) - expect).abs() < 1e-12);
        assert!((expect / a3 + 1.3590).abs() < 1e-3);
        assert!((nf.angular[0].coeff(&Monomial(vec![0])).re - PI / 2.0).abs() < 1e-15);
        let c1 = hopf_oracle(&model(0.0, a3, 0, &[]), &spec, &adj).unwrap().c1;
        assert!((c1.re - expect).abs() < 1e-12);
    }

    #[test]
    fn quadratic_model_matches_oracle() {
        let (_, spec, adj) = hopf_setup();
        let m = model(1.3, -0.4, 0, &[]);
        let nf = reduce_to_normal_form(&m, &spec, &adj, 3).unwrap();
        let c1 = hopf_oracle(&m, &spec, &adj).unwrap().c1;
        assert!((nf.radial_coeff(0, &[3]) - c1.re).abs() < 1e-10, "{} vs {}", nf.radial_coeff(0, &[3]), c1.re);
        // order 2 has no resonant terms without a zero eigenvalue
        assert!(nf.order(2).unwrap().g.is_zero());
        assert!(nf.order(2).unwrap().y.is_zero() && nf.order(2).unwrap().z.is_zero());
    }

    #[test]
    fn linear_parameter_term() {
        let (_, spec, adj) = hopf_setup();
        let m = model(0.0, 0.0, 1, &[(vec![1, 1], 1.0)]);
        let nf = reduce_to_normal_form(&m, &spec, &adj, 3).unwrap();
        let expect = (adj.u[0] * C64::new(0.0, -1.0)).re;
        assert!((nf.radial_coeff(0, &[1, 1]) - expect).abs() < 1e-13);
    }

    #[test]
    fn zero_model_has_zero_oracle() {
        let (_, spec, adj) = hopf_setup();
        assert_eq!(hopf_oracle(&model(0.0, 0.0, 0, &[]), &spec, &adj).unwrap().c1, C64::new(0.0, 0.0));
    }
}
