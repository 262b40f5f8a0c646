//! Multigraded polynomials in center, delayed-value, radial and parameter
//! variables with complex coefficients.
//!
//! Variable order is fixed per [`VariableSpace`]:
//!
//! ```text
//! center  : (x0?, x1, x1bar, ..., xp, xpbar, mu1..mus)
//! delayed : (v1..vn, mu1..mus)
//! radial  : (rho0?, rho1..rhop, mu1..mus)
//! ```
//!
//! Monomials are ordered graded-lexicographically, which fixes the order of
//! serialization and of every matrix assembled from a basis catalog.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

/// Default maximum total degree.
pub const DEFAULT_DEGREE_CAP: usize = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("variable space mismatch: {0} vs {1}")]
    SpaceMismatch(VariableSpace, VariableSpace),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("reality invariant violated in component {component} (defect {defect:.3e})")]
    Reality { component: usize, defect: f64 },
    #[error("malformed serialized polynomial: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    /// Complex center coordinates; `p` conjugate pairs plus an optional real `x0`.
    Center { p: usize, includes_zero: bool },
    /// Values of the solution at `n` delayed times.
    Delayed { n: usize },
    /// Radial amplitudes; `p` Hopf radii plus an optional `rho0`.
    Radial { p: usize, includes_zero: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariableSpace {
    pub kind: SpaceKind,
    /// Number of unfolding parameters.
    pub s: usize,
}

impl fmt::Display for VariableSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SpaceKind::Center { p, includes_zero } => {
                write!(f, "center(p={p}, zero={includes_zero}, s={})", self.s)
            }
            SpaceKind::Delayed { n } => write!(f, "delayed(n={n}, s={})", self.s),
            SpaceKind::Radial { p, includes_zero } => {
                write!(f, "radial(p={p}, zero={includes_zero}, s={})", self.s)
            }
        }
    }
}

impl VariableSpace {
    pub fn center(p: usize, includes_zero: bool, s: usize) -> Self {
        Self { kind: SpaceKind::Center { p, includes_zero }, s }
    }

    pub fn delayed(n: usize, s: usize) -> Self {
        Self { kind: SpaceKind::Delayed { n }, s }
    }

    pub fn radial(p: usize, includes_zero: bool, s: usize) -> Self {
        Self { kind: SpaceKind::Radial { p, includes_zero }, s }
    }

    /// Number of state variables (kappa, n or d).
    pub fn state_dim(&self) -> usize {
        match self.kind {
            SpaceKind::Center { p, includes_zero } => 2 * p + includes_zero as usize,
            SpaceKind::Delayed { n } => n,
            SpaceKind::Radial { p, includes_zero } => p + includes_zero as usize,
        }
    }

    pub fn nvars(&self) -> usize {
        self.state_dim() + self.s
    }

    /// Number of Hopf pairs carried by the space (0 for delayed spaces).
    pub fn hopf_pairs(&self) -> usize {
        match self.kind {
            SpaceKind::Center { p, .. } | SpaceKind::Radial { p, .. } => p,
            SpaceKind::Delayed { .. } => 0,
        }
    }

    pub fn includes_zero(&self) -> bool {
        match self.kind {
            SpaceKind::Center { includes_zero, .. } | SpaceKind::Radial { includes_zero, .. } => {
                includes_zero
            }
            SpaceKind::Delayed { .. } => false,
        }
    }

    pub fn is_param(&self, var: usize) -> bool {
        var >= self.state_dim()
    }

    /// Index of the first parameter variable.
    pub fn param_offset(&self) -> usize {
        self.state_dim()
    }

    pub fn same_shape(&self, other: &VariableSpace) -> bool {
        self == other
    }

    /// For center spaces: index of the `x_j` slot (j is 1-based).
    pub fn x_slot(&self, j: usize) -> usize {
        let off = self.includes_zero() as usize;
        off + 2 * (j - 1)
    }

    /// For center spaces: index of the `x_j bar` slot (j is 1-based).
    pub fn xbar_slot(&self, j: usize) -> usize {
        self.x_slot(j) + 1
    }

    /// Torus weight contributed by one unit of exponent in variable `var`.
    pub fn var_weight(&self, var: usize) -> Vec<i32> {
        let p = self.hopf_pairs();
        let mut w = vec![0; p];
        if let SpaceKind::Center { includes_zero, .. } = self.kind {
            let off = includes_zero as usize;
            if var >= off && var < self.state_dim() {
                let k = var - off;
                w[k / 2] = if k.is_multiple_of(2) { 1 } else { -1 };
            }
        }
        w
    }

    /// Torus weight attached to the component slot `c` of a vector field.
    /// Identical to the weight of the corresponding variable for center
    /// spaces and zero elsewhere.
    pub fn component_weight(&self, c: usize) -> Vec<i32> {
        self.var_weight(c)
    }

    /// Index of the slot conjugate to `var` (identity on real slots).
    pub fn conjugate_var(&self, var: usize) -> usize {
        if let SpaceKind::Center { includes_zero, .. } = self.kind {
            let off = includes_zero as usize;
            if var >= off && var < self.state_dim() {
                let k = var - off;
                return if k.is_multiple_of(2) { var + 1 } else { var - 1 };
            }
        }
        var
    }

    pub fn var_name(&self, var: usize) -> String {
        if self.is_param(var) {
            return format!("mu{}", var - self.state_dim() + 1);
        }
        match self.kind {
            SpaceKind::Center { includes_zero, .. } => {
                if includes_zero && var == 0 {
                    "x0".to_string()
                } else {
                    let k = var - includes_zero as usize;
                    if k.is_multiple_of(2) {
                        format!("x{}", k / 2 + 1)
                    } else {
                        format!("x{}bar", k / 2 + 1)
                    }
                }
            }
            SpaceKind::Delayed { .. } => format!("v{}", var + 1),
            SpaceKind::Radial { includes_zero, .. } => {
                if includes_zero {
                    format!("rho{var}")
                } else {
                    format!("rho{}", var + 1)
                }
            }
        }
    }
}

/// Exponent vector; ordered graded-lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// Total degree in the parameter variables of `space`.
    pub fn param_degree(&self, space: &VariableSpace) -> usize {
        self.0[space.param_offset()..].iter().map(|&e| e as usize).sum()
    }

    pub fn state_degree(&self, space: &VariableSpace) -> usize {
        self.0[..space.param_offset()].iter().map(|&e| e as usize).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Torus weight: per Hopf pair, exponent of `x_j` minus exponent of `x_j bar`.
    pub fn weight(&self, space: &VariableSpace) -> Vec<i32> {
        let mut w = vec![0i32; space.hopf_pairs()];
        for (var, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            for (wj, vj) in w.iter_mut().zip(space.var_weight(var)) {
                *wj += vj * e as i32;
            }
        }
        w
    }

    /// Swap every `x_j` with `x_j bar`.
    pub fn conjugate(&self, space: &VariableSpace) -> Monomial {
        let mut e = vec![0; self.0.len()];
        for (var, &x) in self.0.iter().enumerate() {
            e[space.conjugate_var(var)] = x;
        }
        Monomial(e)
    }

    pub fn display(&self, space: &VariableSpace) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| {
                if e == 1 {
                    space.var_name(i)
                } else {
                    format!("{}^{}", space.var_name(i), e)
                }
            })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

impl Ord for Monomial {
    /// Degree ascending; within a degree, larger leading exponents first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All exponent vectors in `nvars` variables of total degree `deg`, in
/// graded-lex order.
pub fn monomials_of_degree(nvars: usize, deg: usize) -> Vec<Monomial> {
    fn rec(nvars: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if prefix.len() + 1 == nvars {
            prefix.push(remaining);
            out.push(Monomial(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e);
            rec(nvars, remaining - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if nvars == 0 {
        if deg == 0 {
            out.push(Monomial(vec![]));
        }
        return out;
    }
    rec(nvars, deg as u32, &mut Vec::with_capacity(nvars), &mut out);
    out
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (1..=k).fold(1u64, |acc, i| acc * (n - k + i) / i)
}

/// Scalar polynomial over a [`VariableSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub space: VariableSpace,
    terms: BTreeMap<Monomial, C64>,
}

impl Poly {
    pub fn zero(space: VariableSpace) -> Self {
        Self { space, terms: BTreeMap::new() }
    }

    pub fn constant(space: VariableSpace, c: C64) -> Self {
        let mut p = Self::zero(space);
        p.add_term(Monomial::one(space.nvars()), c);
        p
    }

    pub fn var(space: VariableSpace, i: usize) -> Self {
        Self::monomial(space, Monomial::var(space.nvars(), i), C64::new(1.0, 0.0))
    }

    pub fn monomial(space: VariableSpace, m: Monomial, c: C64) -> Self {
        assert_eq!(m.nvars(), space.nvars(), "monomial arity");
        let mut p = Self::zero(space);
        p.add_term(m, c);
        p
    }

    /// Build from `(exponents, coefficient)` pairs.
    pub fn from_terms<I>(space: VariableSpace, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, C64)>,
    {
        let mut p = Self::zero(space);
        for (e, c) in terms {
            p.add_term(Monomial(e), c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> C64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    /// Adds `c * m`, dropping the entry if it cancels exactly.
    pub fn add_term(&mut self, m: Monomial, c: C64) {
        debug_assert_eq!(m.nvars(), self.space.nvars());
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = *o.get() + c;
                if sum == C64::new(0.0, 0.0) {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().map(Monomial::degree).min()
    }

    fn check_space(&self, other: &Poly) -> Result<(), PolyError> {
        if self.space != other.space {
            return Err(PolyError::SpaceMismatch(self.space, other.space));
        }
        Ok(())
    }

    pub fn add(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_space(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn add_assign(&mut self, other: &Poly) {
        assert_eq!(self.space, other.space, "space mismatch in add_assign");
        for (m, &c) in &other.terms {
            self.add_term(m.clone(), c);
        }
    }

    pub fn add_scaled(&mut self, other: &Poly, k: C64) {
        assert_eq!(self.space, other.space, "space mismatch in add_scaled");
        for (m, &c) in &other.terms {
            self.add_term(m.clone(), c * k);
        }
    }

    pub fn scale(&self, k: C64) -> Poly {
        let mut out = Poly::zero(self.space);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), c * k);
        }
        out
    }

    pub fn neg(&self) -> Poly {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn mul(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_space(other)?;
        Ok(self.mul_truncated(other, usize::MAX))
    }

    /// Product keeping only monomials of total degree `<= max_deg`.
    pub fn mul_truncated(&self, other: &Poly, max_deg: usize) -> Poly {
        let mut out = Poly::zero(self.space);
        for (ma, &ca) in &self.terms {
            let da = ma.degree();
            if da > max_deg {
                continue;
            }
            for (mb, &cb) in &other.terms {
                if da + mb.degree() > max_deg {
                    continue;
                }
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    /// Drops every monomial of total degree greater than `max_deg`.
    pub fn truncate(&self, max_deg: usize) -> Poly {
        self.filter(|m| m.degree() <= max_deg)
    }

    /// Homogeneous part of degree `k`.
    pub fn homogeneous(&self, k: usize) -> Poly {
        self.filter(|m| m.degree() == k)
    }

    pub fn filter<F: Fn(&Monomial) -> bool>(&self, keep: F) -> Poly {
        Poly {
            space: self.space,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
        }
    }

    /// Part independent of the parameters.
    pub fn param_free(&self) -> Poly {
        let sp = self.space;
        self.filter(|m| m.param_degree(&sp) == 0)
    }

    /// Part vanishing at zero parameters.
    pub fn param_vanishing(&self) -> Poly {
        let sp = self.space;
        self.filter(|m| m.param_degree(&sp) > 0)
    }

    /// Removes coefficients with modulus `<= tol`.
    pub fn chop(&self, tol: f64) -> Poly {
        Poly {
            space: self.space,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.norm() > tol)
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn map_coeffs<F: Fn(C64) -> C64>(&self, f: F) -> Poly {
        let mut out = Poly::zero(self.space);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    /// Complex conjugate of the coefficients with `x_j <-> x_j bar` swapped.
    pub fn conjugate_swap(&self) -> Poly {
        let mut out = Poly::zero(self.space);
        for (m, &c) in &self.terms {
            out.add_term(m.conjugate(&self.space), c.conj());
        }
        out
    }

    pub fn eval(&self, point: &[C64]) -> C64 {
        assert_eq!(point.len(), self.space.nvars());
        self.terms
            .iter()
            .map(|(m, &c)| {
                m.0.iter()
                    .zip(point)
                    .fold(c, |acc, (&e, &x)| acc * x.powu(e))
            })
            .sum()
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.space);
        for (m, &c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[i] -= 1;
            out.add_term(dm, c * e as f64);
        }
        out
    }

    /// Reinterprets the polynomial in another space with the same number of
    /// variables.
    pub fn relabel(&self, space: VariableSpace) -> Poly {
        assert_eq!(space.nvars(), self.space.nvars());
        Poly { space, terms: self.terms.clone() }
    }

    /// Substitutes variable `i` by `subs[i]` (all in `target`) and truncates
    /// at `max_deg`.
    pub fn compose(&self, subs: &[Poly], target: VariableSpace, max_deg: usize) -> Result<Poly, PolyError> {
        if subs.len() != self.space.nvars() {
            return Err(PolyError::DimensionMismatch { expected: self.space.nvars(), got: subs.len() });
        }
        if let Some(bad) = subs.iter().find(|s| s.space != target) {
            return Err(PolyError::SpaceMismatch(bad.space, target));
        }
        let mut cache = PowerCache::new(subs.to_vec(), target, max_deg);
        let mut out = Poly::zero(target);
        for (m, &c) in &self.terms {
            let prod = cache.monomial(m);
            out.add_scaled(&prod, c);
        }
        Ok(out)
    }

    /// `h(x M^T, mu)`: every state variable `v_i` becomes
    /// `sum_c M[i,c] * (c-th state variable of target)`; parameters map to
    /// parameters.
    pub fn compose_linear(&self, m: &DMatrix<C64>, target: VariableSpace) -> Result<Poly, PolyError> {
        let n = self.space.state_dim();
        if m.nrows() != n {
            return Err(PolyError::DimensionMismatch { expected: n, got: m.nrows() });
        }
        if m.ncols() != target.state_dim() {
            return Err(PolyError::DimensionMismatch { expected: target.state_dim(), got: m.ncols() });
        }
        if self.space.s != target.s {
            return Err(PolyError::DimensionMismatch { expected: self.space.s, got: target.s });
        }
        let mut subs = Vec::with_capacity(self.space.nvars());
        for i in 0..n {
            let mut p = Poly::zero(target);
            for c in 0..m.ncols() {
                p.add_term(Monomial::var(target.nvars(), c), m[(i, c)]);
            }
            subs.push(p);
        }
        for a in 0..self.space.s {
            subs.push(Poly::var(target, target.param_offset() + a));
        }
        let deg = self.degree().unwrap_or(0);
        self.compose(&subs, target, deg)
    }
}

/// Caches powers of substituted polynomials for repeated monomial
/// substitution with truncation.
pub struct PowerCache {
    subs: Vec<Poly>,
    target: VariableSpace,
    max_deg: usize,
    powers: Vec<Vec<Poly>>,
}

impl PowerCache {
    pub fn new(subs: Vec<Poly>, target: VariableSpace, max_deg: usize) -> Self {
        let powers = subs.iter().map(|_| vec![Poly::constant(target, C64::new(1.0, 0.0))]).collect();
        Self { subs, target, max_deg, powers }
    }

    fn power(&mut self, var: usize, e: usize) -> &Poly {
        while self.powers[var].len() <= e {
            let last = self.powers[var].last().unwrap();
            let next = last.mul_truncated(&self.subs[var], self.max_deg);
            self.powers[var].push(next);
        }
        &self.powers[var][e]
    }

    /// Product of `subs[i]^m[i]`, truncated.
    pub fn monomial(&mut self, m: &Monomial) -> Poly {
        let mut acc = Poly::constant(self.target, C64::new(1.0, 0.0));
        for (var, &e) in m.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let pw = self.power(var, e as usize).clone();
            acc = acc.mul_truncated(&pw, self.max_deg);
        }
        acc
    }
}

/// Serialized coefficient entry of a vector polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub component: usize,
    pub exponents: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

/// Vector-valued polynomial with one scalar polynomial per component slot.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPoly {
    pub space: VariableSpace,
    pub components: Vec<Poly>,
}

impl VectorPoly {
    pub fn zero(space: VariableSpace, ncomp: usize) -> Self {
        Self { space, components: vec![Poly::zero(space); ncomp] }
    }

    /// Zero field with one component per state variable of `space`.
    pub fn zero_field(space: VariableSpace) -> Self {
        Self::zero(space, space.state_dim())
    }

    pub fn from_components(space: VariableSpace, components: Vec<Poly>) -> Result<Self, PolyError> {
        for c in &components {
            if c.space != space {
                return Err(PolyError::SpaceMismatch(c.space, space));
            }
        }
        Ok(Self { space, components })
    }

    /// `weights[c] * scalar` in every component.
    pub fn broadcast(scalar: &Poly, weights: &[C64]) -> Self {
        Self {
            space: scalar.space,
            components: weights.iter().map(|&w| scalar.scale(w)).collect(),
        }
    }

    pub fn ncomp(&self) -> usize {
        self.components.len()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Poly::is_zero)
    }

    /// Torus weight of each component slot.
    pub fn component_weight(&self, c: usize) -> Vec<i32> {
        self.space.component_weight(c)
    }

    fn check(&self, other: &VectorPoly) -> Result<(), PolyError> {
        if self.space != other.space {
            return Err(PolyError::SpaceMismatch(self.space, other.space));
        }
        if self.ncomp() != other.ncomp() {
            return Err(PolyError::DimensionMismatch { expected: self.ncomp(), got: other.ncomp() });
        }
        Ok(())
    }

    pub fn add(&self, other: &VectorPoly) -> Result<VectorPoly, PolyError> {
        self.check(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_, _>>()?;
        Ok(VectorPoly { space: self.space, components })
    }

    pub fn sub(&self, other: &VectorPoly) -> Result<VectorPoly, PolyError> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, k: C64) -> VectorPoly {
        self.map(|p| p.scale(k))
    }

    pub fn map<F: Fn(&Poly) -> Poly>(&self, f: F) -> VectorPoly {
        VectorPoly { space: self.space, components: self.components.iter().map(f).collect() }
    }

    pub fn truncate(&self, max_deg: usize) -> VectorPoly {
        self.map(|p| p.truncate(max_deg))
    }

    pub fn homogeneous(&self, k: usize) -> VectorPoly {
        self.map(|p| p.homogeneous(k))
    }

    pub fn param_free(&self) -> VectorPoly {
        self.map(Poly::param_free)
    }

    pub fn param_vanishing(&self) -> VectorPoly {
        self.map(Poly::param_vanishing)
    }

    pub fn chop(&self, tol: f64) -> VectorPoly {
        self.map(|p| p.chop(tol))
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(Poly::max_abs).fold(0.0, f64::max)
    }

    pub fn degree(&self) -> Option<usize> {
        self.components.iter().filter_map(Poly::degree).max()
    }

    /// Checks the reality invariant: conjugate slots hold conjugate-swapped
    /// polynomials and real slots have real coefficients (after swapping).
    pub fn check_reality(&self, tol: f64) -> Result<(), PolyError> {
        for c in 0..self.ncomp() {
            let cc = self.space.conjugate_var(c);
            let mirrored = self.components[cc].conjugate_swap();
            let defect = self.components[c].sub(&mirrored)?.max_abs();
            if defect > tol {
                return Err(PolyError::Reality { component: c, defect });
            }
        }
        Ok(())
    }

    /// Canonical serialization sorted by (component, graded-lex monomial).
    pub fn to_entries(&self) -> Vec<CoeffEntry> {
        let mut out = Vec::new();
        for (ci, comp) in self.components.iter().enumerate() {
            for (m, c) in comp.terms() {
                out.push(CoeffEntry { component: ci, exponents: m.0.clone(), re: c.re, im: c.im });
            }
        }
        out
    }

    pub fn from_entries(space: VariableSpace, ncomp: usize, entries: &[CoeffEntry]) -> Result<Self, PolyError> {
        let mut out = Self::zero(space, ncomp);
        for e in entries {
            if e.component >= ncomp {
                return Err(PolyError::Malformed(format!("component {} out of range", e.component)));
            }
            if e.exponents.len() != space.nvars() {
                return Err(PolyError::Malformed(format!(
                    "expected {} exponents, got {}",
                    space.nvars(),
                    e.exponents.len()
                )));
            }
            out.components[e.component].add_term(Monomial(e.exponents.clone()), C64::new(e.re, e.im));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_entries()).expect("entries serialize")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| format!("({:.6}{:+.6}i)*{}", c.re, c.im, m.display(&self.space)))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
