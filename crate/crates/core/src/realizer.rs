//! Realization of prescribed radial normal forms.
//!
//! The central object is the finite matrix `N^j_tau` of
//! `Pi . A . E^j_tau` restricted to the `VHat` catalog: columns are the
//! radial images of delayed-monomial generators. When it is invertible the
//! realization recipe
//! `eta_j = N^{-1}(h_j - Pi A Y_j)`, `xi_j = N^{-1}(q_j - Pi A Z_j)`
//! produces a delay equation with the requested radial field.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linsys::{AdjointVector, DelayLinearOperator, SpectrumSpec};
use crate::nfengine::{reduce_to_normal_form, DDEModel, NfError, NormalFormResult};
use crate::polyring::{monomials_of_degree, Monomial, Poly, PolyError, VariableSpace, VectorPoly};
use crate::symmetry::{enumerate_basis, project_a, project_pi, BasisCatalog, BasisTag, KMatrix, SymmetryError};

type C64 = Complex64;

/// Normalized-determinant threshold for a usable delay vector.
pub const DET_THRESHOLD: f64 = 1e-6;
/// Largest accepted condition number.
pub const COND_LIMIT: f64 = 1e8;
/// Default forward-check tolerance.
pub const FORWARD_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealizerError {
    #[error("delay {0} outside [-r, 0]")]
    InvalidTau(f64),
    #[error("expected {expected} delays, got {got}")]
    DelayCount { expected: usize, got: usize },
    #[error("order {order}: realizability matrix is singular (cond {cond:.3e})")]
    Singular { order: usize, cond: f64 },
    #[error("forward check failed: error {error:.3e} exceeds {tol:.1e}")]
    ForwardMismatch { error: f64, tol: f64 },
    #[error("target at mu = 0 differs from the base radial field by {0:.3e}")]
    SliceMismatch(f64),
    #[error("target has {0} terms outside the equivariant radial catalog")]
    NonEquivariantTarget(usize),
    #[error("all {0} sampled delay vectors are degenerate; try a larger r or different frequencies")]
    AllDegenerate(usize),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Nf(#[from] NfError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Rows `Phi(tau_i)`: `(1?, e^{i w_1 tau_i}, e^{-i w_1 tau_i}, ...)`.
pub fn build_e(spec: &SpectrumSpec, tau: &[f64]) -> DMatrix<C64> {
    let kappa = spec.kappa();
    let z = spec.includes_zero as usize;
    DMatrix::from_fn(tau.len(), kappa, |i, c| {
        if c < z {
            C64::new(1.0, 0.0)
        } else {
            let j = (c - z) / 2;
            let sign = if (c - z).is_multiple_of(2) { 1.0 } else { -1.0 };
            C64::from_polar(1.0, sign * spec.omegas[j] * tau[i])
        }
    })
}

/// Synthetic matrix `I` with `e^{+-i sigma_j}` on the pair of row `j`.
pub fn synthetic_i(spec: &SpectrumSpec, sigma: &[f64]) -> DMatrix<C64> {
    let z = spec.includes_zero as usize;
    let mut m = DMatrix::zeros(spec.d(), spec.kappa());
    if z == 1 {
        m[(0, 0)] = C64::new(1.0, 0.0);
    }
    for (j, &s) in sigma.iter().enumerate() {
        m[(z + j, z + 2 * j)] = C64::from_polar(1.0, s);
        m[(z + j, z + 2 * j + 1)] = C64::from_polar(1.0, -s);
    }
    m
}

/// `E_* = K I`.
pub fn e_star(spec: &SpectrumSpec, sigma: &[f64]) -> DMatrix<C64> {
    KMatrix::new(spec.d()).complex() * synthetic_i(spec, sigma)
}

/// Largest singular value over smallest; infinite for singular matrices.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `det(M) / prod_i |row_i|`, in `[-1, 1]` by Hadamard's inequality.
pub fn normalized_det(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let norms: f64 = m.row_iter().map(|r| r.norm()).product();
    if norms == 0.0 {
        0.0
    } else {
        m.determinant() / norms
    }
}

/// Coordinates of a radial field in a radial catalog; the second value is
/// the number of terms with no catalog slot.
pub fn radial_coordinates(field: &VectorPoly, cat: &BasisCatalog, tol: f64) -> (DVector<f64>, usize) {
    let mut v = DVector::zeros(cat.len());
    let mut stray = 0;
    for (c, comp) in field.components.iter().enumerate() {
        for (m, &x) in comp.terms() {
            if m.degree() != cat.degree {
                continue;
            }
            match cat.index_of(c, m) {
                Some(i) => v[i] += x.re,
                None if x.norm() > tol => stray += 1,
                None => {}
            }
        }
    }
    (v, stray)
}

/// Radial images of scalar delayed-variable sources, read in `codomain`.
pub fn image_matrix(
    sources: &[Poly],
    e: &DMatrix<C64>,
    psi0: &[C64],
    spec: &SpectrumSpec,
    codomain: &BasisCatalog,
) -> Result<DMatrix<f64>, RealizerError> {
    let cs = spec.center_space(codomain.space.s);
    let cols: Vec<Result<DVector<f64>, RealizerError>> = sources
        .par_iter()
        .map(|b| {
            let img = b.compose_linear(e, cs)?;
            let radial = project_pi(&project_a(&VectorPoly::broadcast(&img, psi0)))?;
            let (v, stray) = radial_coordinates(&radial, codomain, 1e-12);
            if stray > 0 {
                return Err(RealizerError::NonEquivariantTarget(stray));
            }
            Ok(v)
        })
        .collect();
    let mut m = DMatrix::zeros(codomain.len(), sources.len());
    for (j, c) in cols.into_iter().enumerate() {
        m.set_column(j, &c?);
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizabilityMatrix {
    pub order: usize,
    pub tau: Vec<f64>,
    pub domain: BasisCatalog,
    pub codomain: BasisCatalog,
    pub matrix: DMatrix<f64>,
    /// Size of the mu-free block (leading rows and columns).
    pub free_dim: usize,
    pub det: f64,
    pub normalized_det: f64,
    pub cond: f64,
}

impl RealizabilityMatrix {
    /// Mu-free block `VHat^d -> H^d`.
    pub fn free_block(&self) -> DMatrix<f64> {
        self.matrix.view((0, 0), (self.free_dim, self.free_dim)).into_owned()
    }

    /// Mu-vanishing block `WHat -> P`.
    pub fn param_block(&self) -> DMatrix<f64> {
        let n = self.matrix.nrows();
        let f = self.free_dim;
        self.matrix.view((f, f), (n - f, n - f)).into_owned()
    }

    /// Largest entry of the two off-diagonal blocks.
    pub fn cross_coupling(&self) -> f64 {
        let n = self.matrix.nrows();
        let f = self.free_dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if (i < f) != (j < f) {
                    worst = worst.max(self.matrix[(i, j)].abs());
                }
            }
        }
        worst
    }

    pub fn is_invertible(&self) -> bool {
        self.cond < COND_LIMIT
    }

    /// Solves `N c = rhs` by column-pivoted QR.
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>, RealizerError> {
        solve_block(&self.matrix, rhs, self.order)
    }
}

fn solve_block(m: &DMatrix<f64>, rhs: &DVector<f64>, order: usize) -> Result<DVector<f64>, RealizerError> {
    if m.is_empty() {
        return Ok(DVector::zeros(0));
    }
    let cond = condition_number(m);
    if cond >= COND_LIMIT {
        return Err(RealizerError::Singular { order, cond });
    }
    m.clone().col_piv_qr().solve(rhs).ok_or(RealizerError::Singular { order, cond })
}

/// `Pi . A . J_M` on a V-type catalog for an arbitrary `d x kappa` matrix `M`.
pub fn assemble_with(
    spec: &SpectrumSpec,
    psi0: &[C64],
    m: &DMatrix<C64>,
    tau: &[f64],
    j: usize,
    s: usize,
    domain_tag: BasisTag,
) -> Result<RealizabilityMatrix, RealizerError> {
    let domain = enumerate_basis(domain_tag, spec, j, s)?;
    let codomain = enumerate_basis(BasisTag::Radial, spec, j, s)?;
    let sources: Vec<Poly> = (0..domain.len()).map(|i| domain.scalar(i).clone()).collect();
    let matrix = image_matrix(&sources, m, psi0, spec, &codomain)?;
    let det = if matrix.is_empty() { 1.0 } else { matrix.determinant() };
    Ok(RealizabilityMatrix {
        order: j,
        tau: tau.to_vec(),
        free_dim: codomain.param_free_len(),
        normalized_det: normalized_det(&matrix),
        cond: condition_number(&matrix),
        det,
        domain,
        codomain,
        matrix,
    })
}

/// `N^j_tau` on the `VHat` catalog.
pub fn assemble_n(
    spec: &SpectrumSpec,
    adj: &AdjointVector,
    tau: &[f64],
    j: usize,
    s: usize,
) -> Result<RealizabilityMatrix, RealizerError> {
    check_tau(spec, tau)?;
    if tau.len() != spec.d() {
        return Err(RealizerError::DelayCount { expected: spec.d(), got: tau.len() });
    }
    assemble_with(spec, &adj.psi0(), &build_e(spec, tau), tau, j, s, BasisTag::VHat)
}

fn check_tau(spec: &SpectrumSpec, tau: &[f64]) -> Result<(), RealizerError> {
    for &t in tau {
        if !(t <= 0.0 && t >= -spec.r - 1e-12) {
            return Err(RealizerError::InvalidTau(t));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Random,
    /// Tensor grid with `ceil(n^(1/d))` points per axis.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub tau: Vec<f64>,
    /// Normalized determinants for orders `2..=ell`.
    pub dets: Vec<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub best_tau: Vec<f64>,
    pub best_score: f64,
    /// Fraction of samples with every normalized determinant above threshold.
    pub fraction: f64,
    pub threshold: f64,
    pub samples: Vec<ScanSample>,
}

impl ScanResult {
    /// CSV with columns `tau_1..tau_d, det_2..det_ell, score`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(s0) = self.samples.first() {
            let mut head: Vec<String> = (1..=s0.tau.len()).map(|i| format!("tau_{i}")).collect();
            head.extend((0..s0.dets.len()).map(|k| format!("det_{}", k + 2)));
            head.push("score".into());
            out.push_str(&head.join(","));
            out.push('\n');
        }
        for s in &self.samples {
            let row: Vec<String> = s.tau.iter().chain(&s.dets).chain(std::iter::once(&s.score)).map(|x| format!("{x:.12e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Samples delay vectors in `[-r, 0]^d` and ranks them by the smallest
/// normalized determinant over orders `2..=ell`.
pub fn scan_tau(
    spec: &SpectrumSpec,
    adj: &AdjointVector,
    ell: usize,
    s: usize,
    sampler: Sampler,
    n_samples: usize,
    seed: u64,
) -> Result<ScanResult, RealizerError> {
    if n_samples == 0 {
        return Err(RealizerError::Invalid("at least one sample is required".into()));
    }
    let d = spec.d();
    let taus: Vec<Vec<f64>> = match sampler {
        Sampler::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n_samples).map(|_| (0..d).map(|_| -rng.gen::<f64>() * spec.r).collect()).collect()
        }
        Sampler::Grid => {
            let per = (n_samples as f64).powf(1.0 / d as f64).ceil().max(1.0) as usize;
            let pts: Vec<f64> = (0..per).map(|k| -spec.r * (k as f64 + 0.5) / per as f64).collect();
            let mut out = vec![vec![]];
            for _ in 0..d {
                out = out
                    .into_iter()
                    .flat_map(|t: Vec<f64>| pts.iter().map(move |&x| [t.clone(), vec![x]].concat()))
                    .collect();
            }
            out.truncate(n_samples);
            out
        }
    };
    let psi0 = adj.psi0();
    // Catalog work is shared across samples.
    let catalogs: Vec<(Vec<Poly>, BasisCatalog)> = (2..=ell)
        .map(|j| {
            let dom = enumerate_basis(BasisTag::VHat, spec, j, s)?;
            let cod = enumerate_basis(BasisTag::Radial, spec, j, s)?;
            Ok(((0..dom.len()).map(|i| dom.scalar(i).clone()).collect(), cod))
        })
        .collect::<Result<_, RealizerError>>()?;
    let samples: Vec<ScanSample> = taus
        .par_iter()
        .map(|tau| {
            let e = build_e(spec, tau);
            let dets: Vec<f64> = catalogs
                .iter()
                .map(|(src, cod)| {
                    image_matrix(src, &e, &psi0, spec, cod).map(|m| normalized_det(&m).abs()).unwrap_or(0.0)
                })
                .collect();
            let score = dets.iter().cloned().fold(f64::INFINITY, f64::min);
            ScanSample { tau: tau.clone(), dets, score }
        })
        .collect();
    let good = samples.iter().filter(|s| s.score > DET_THRESHOLD).count();
    let best = samples
        .iter()
        .max_by(|a, b| a.score.partial_cmp(&b.score).unwrap_or(std::cmp::Ordering::Equal))
        .expect("non-empty");
    if good == 0 {
        return Err(RealizerError::AllDegenerate(n_samples));
    }
    Ok(ScanResult {
        best_tau: best.tau.clone(),
        best_score: best.score,
        fraction: good as f64 / n_samples as f64,
        threshold: DET_THRESHOLD,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationProblem {
    pub spec: SpectrumSpec,
    pub linear: DelayLinearOperator,
    pub adj: AdjointVector,
    pub tau: Vec<f64>,
    pub ell: usize,
    pub s: usize,
    /// Radial target over `(rho, mu)`; mu-free terms form `h`, the rest `q`.
    pub target: VectorPoly,
    /// Orders whose `eta_j + xi_j` are fixed to the given delayed polynomial.
    pub pinned: BTreeMap<usize, Poly>,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderDiagnostics {
    pub order: usize,
    pub pinned: bool,
    pub det: f64,
    pub normalized_det: f64,
    pub cond: f64,
    pub pi_a_y_norm: f64,
    pub pi_a_z_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationResult {
    pub eta: Poly,
    pub xi: Poly,
    pub model: DDEModel,
    pub orders: Vec<OrderDiagnostics>,
    pub forward: NormalFormResult,
    pub forward_error: f64,
}

fn combine(cat: &BasisCatalog, coeffs: &DVector<f64>, space: VariableSpace) -> Poly {
    let mut p = Poly::zero(space);
    for i in 0..cat.len() {
        p.add_scaled(cat.scalar(i), C64::new(coeffs[i], 0.0));
    }
    p.chop(1e-15)
}

/// Largest coefficient difference between two radial fields over the given orders.
pub fn radial_error(a: &VectorPoly, b: &VectorPoly, orders: &BTreeSet<usize>) -> f64 {
    let mut worst = 0.0f64;
    for (pa, pb) in a.components.iter().zip(&b.components) {
        let diff = pa.sub(pb).expect("same space");
        for (m, c) in diff.terms() {
            if orders.contains(&m.degree()) {
                worst = worst.max(c.norm());
            }
        }
    }
    worst
}

fn model_with(base: &DDEModel, eta: &Poly, xi: &Poly) -> Result<DDEModel, RealizerError> {
    Ok(DDEModel::new(base.linear.clone(), base.delays.clone(), eta.chop(0.0), xi.chop(0.0), base.s)?)
}

/// Order-by-order realization with a final forward check.
pub fn realize(problem: &RealizationProblem) -> Result<RealizationResult, RealizerError> {
    let RealizationProblem { spec, linear, adj, tau, ell, s, target, pinned, tol } = problem;
    let (ell, s) = (*ell, *s);
    if ell < 2 {
        return Err(RealizerError::Invalid(format!("order {ell} < 2")));
    }
    if tau.len() != spec.d() {
        return Err(RealizerError::DelayCount { expected: spec.d(), got: tau.len() });
    }
    check_tau(spec, tau)?;
    let ds = VariableSpace::delayed(tau.len(), s);
    let rs = spec.radial_space(s);
    if target.space != rs {
        return Err(RealizerError::Poly(PolyError::SpaceMismatch(target.space, rs)));
    }
    for (&j, p) in pinned {
        if p.space != ds || p.terms().any(|(m, _)| m.degree() != j) {
            return Err(RealizerError::Invalid(format!("pinned order {j} must be homogeneous in {ds}")));
        }
    }
    let mut eta = Poly::zero(ds);
    let mut xi = Poly::zero(ds);
    let shell = DDEModel::linear_only(linear.clone(), tau.clone(), s);
    let mut orders = Vec::new();
    let mut solved = BTreeSet::new();
    for j in 2..=ell {
        let n = assemble_n(spec, adj, tau, j, s)?;
        let (t, stray) = radial_coordinates(&target.homogeneous(j), &n.codomain, 1e-14);
        if stray > 0 {
            return Err(RealizerError::NonEquivariantTarget(stray));
        }
        let current = model_with(&shell, &eta, &xi)?;
        let rec = reduce_to_normal_form(&current, spec, adj, j)?;
        let rec = rec.order(j).expect("order record");
        let (y, _) = radial_coordinates(&rec.pi_a_y, &n.codomain, 1e-12);
        let (z, _) = radial_coordinates(&rec.pi_a_z, &n.codomain, 1e-12);
        let is_pinned = pinned.contains_key(&j);
        if let Some(p) = pinned.get(&j) {
            eta.add_assign(&p.param_free());
            xi.add_assign(&p.param_vanishing());
        } else {
            let c = n.solve(&(t - &y - &z))?;
            let sol = combine(&n.domain, &c, ds);
            eta.add_assign(&sol.param_free());
            xi.add_assign(&sol.param_vanishing());
            solved.insert(j);
        }
        orders.push(OrderDiagnostics {
            order: j,
            pinned: is_pinned,
            det: n.det,
            normalized_det: n.normalized_det,
            cond: n.cond,
            pi_a_y_norm: y.amax(),
            pi_a_z_norm: z.amax(),
        });
    }
    let model = model_with(&shell, &eta, &xi)?;
    let forward = reduce_to_normal_form(&model, spec, adj, ell)?;
    let forward_error = radial_error(&forward.radial, target, &solved);
    if forward_error > *tol {
        return Err(RealizerError::ForwardMismatch { error: forward_error, tol: *tol });
    }
    Ok(RealizationResult { eta: model.eta.clone(), xi: model.xi.clone(), model, orders, forward, forward_error })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldingResult {
    pub xi: Poly,
    pub model: DDEModel,
    pub forward: NormalFormResult,
    pub forward_error: f64,
    pub param_blocks: Vec<RealizabilityMatrix>,
}

/// Adds parameter terms to `base` so that its radial field becomes `target`.
pub fn realize_unfolding(
    base: &DDEModel,
    spec: &SpectrumSpec,
    adj: &AdjointVector,
    target: &VectorPoly,
    ell: usize,
    tol: f64,
) -> Result<UnfoldingResult, RealizerError> {
    let s = base.s;
    let rs = spec.radial_space(s);
    if target.space != rs {
        return Err(RealizerError::Poly(PolyError::SpaceMismatch(target.space, rs)));
    }
    let base_nf = reduce_to_normal_form(base, spec, adj, ell)?;
    let all: BTreeSet<usize> = (2..=ell).collect();
    let slice = radial_error(&base_nf.radial.param_free(), &target.param_free(), &all);
    if slice > tol {
        return Err(RealizerError::SliceMismatch(slice));
    }
    let mut xi = base.xi.clone();
    let mut blocks = Vec::new();
    for j in 2..=ell {
        let n = assemble_n(spec, adj, &base.delays, j, s)?;
        let f = n.free_dim;
        let (t, stray) = radial_coordinates(&target.homogeneous(j), &n.codomain, 1e-14);
        if stray > 0 {
            return Err(RealizerError::NonEquivariantTarget(stray));
        }
        let current = model_with(base, &base.eta, &xi)?;
        let nf = reduce_to_normal_form(&current, spec, adj, j)?;
        let (now, _) = radial_coordinates(&nf.radial.homogeneous(j), &n.codomain, 1e-12);
        let rhs = (t - now).rows(f, n.matrix.nrows() - f).into_owned();
        let c = solve_block(&n.param_block(), &rhs, j)?;
        for (k, &ck) in c.iter().enumerate() {
            xi.add_scaled(n.domain.scalar(f + k), C64::new(ck, 0.0));
        }
        blocks.push(n);
    }
    let model = model_with(base, &base.eta, &xi.chop(1e-15))?;
    let forward = reduce_to_normal_form(&model, spec, adj, ell)?;
    let forward_error = radial_error(&forward.radial, target, &all);
    if forward_error > tol {
        return Err(RealizerError::ForwardMismatch { error: forward_error, tol });
    }
    Ok(UnfoldingResult { xi: model.xi.clone(), model, forward, forward_error, param_blocks: blocks })
}

/// Matrix `m[a][b]` of the coefficients of `mu_a v_b` in `xi`.
pub fn parameter_matrix(xi: &Poly) -> DMatrix<f64> {
    let sp = xi.space;
    let n = sp.state_dim();
    DMatrix::from_fn(sp.s, n, |a, b| {
        let mut e = vec![0u32; sp.nvars()];
        e[n + a] = 1;
        e[b] = 1;
        xi.coeff(&Monomial(e)).re
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianReport {
    /// Source monomials (delayed, mu-free) of degrees `2..=ell`.
    pub sources: Vec<Monomial>,
    /// Target entries `(component, monomial)` of the mu-free radial catalogs.
    pub targets: Vec<(usize, Monomial)>,
    pub jacobian: DMatrix<f64>,
    /// Exact linear part (images of the sources).
    pub linear_part: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub linear_rank: usize,
}

fn svd_rank(m: &DMatrix<f64>) -> (Vec<f64>, usize) {
    if m.is_empty() {
        return (vec![], 0);
    }
    let sv: Vec<f64> = m.clone().singular_values().iter().cloned().collect();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&x| x > 1e-8 * max && max > 0.0).count();
    (sv, rank)
}

/// Jacobian of `eta -> radial field` at `eta` by central differences
/// (step `1e-6`), over all delayed monomials of degrees `2..=ell`.
pub fn submersion_jacobian(
    spec: &SpectrumSpec,
    linear: &DelayLinearOperator,
    adj: &AdjointVector,
    tau: &[f64],
    eta: &[f64],
    ell: usize,
) -> Result<JacobianReport, RealizerError> {
    check_tau(spec, tau)?;
    let ds = VariableSpace::delayed(tau.len(), 0);
    let sources: Vec<Monomial> = (2..=ell).flat_map(|j| monomials_of_degree(ds.nvars(), j)).collect();
    if eta.len() != sources.len() {
        return Err(RealizerError::Invalid(format!("expected {} coefficients, got {}", sources.len(), eta.len())));
    }
    let cats: Vec<BasisCatalog> =
        (2..=ell).map(|j| enumerate_basis(BasisTag::Radial, spec, j, 0)).collect::<Result<_, _>>()?;
    let targets: Vec<(usize, Monomial)> =
        cats.iter().flat_map(|c| c.entries.iter().map(|e| (e.component, e.monomial.clone()))).collect();
    let radial_of = |coeffs: &[f64]| -> Result<DVector<f64>, RealizerError> {
        let eta = Poly::from_terms(ds, sources.iter().zip(coeffs).map(|(m, &c)| (m.0.clone(), C64::new(c, 0.0))));
        let model = DDEModel::new(linear.clone(), tau.to_vec(), eta, Poly::zero(ds), 0)?;
        let nf = reduce_to_normal_form(&model, spec, adj, ell)?;
        Ok(DVector::from_iterator(targets.len(), targets.iter().map(|(c, m)| nf.radial.components[*c].coeff(m).re)))
    };
    let h = 1e-6;
    let cols: Vec<Result<DVector<f64>, RealizerError>> = (0..sources.len())
        .into_par_iter()
        .map(|k| {
            let mut plus = eta.to_vec();
            let mut minus = eta.to_vec();
            plus[k] += h;
            minus[k] -= h;
            Ok((radial_of(&plus)? - radial_of(&minus)?) / (2.0 * h))
        })
        .collect();
    let mut jac = DMatrix::zeros(targets.len(), sources.len());
    for (k, c) in cols.into_iter().enumerate() {
        jac.set_column(k, &c?);
    }
    let e = build_e(spec, tau);
    let psi0 = adj.psi0();
    let mut lin = DMatrix::zeros(targets.len(), sources.len());
    let mut row = 0;
    for cat in &cats {
        let polys: Vec<Poly> = sources.iter().map(|m| Poly::monomial(ds, m.clone(), C64::new(1.0, 0.0))).collect();
        let block = image_matrix(&polys, &e, &psi0, spec, cat)?;
        lin.view_mut((row, 0), (cat.len(), sources.len())).copy_from(&block);
        row += cat.len();
    }
    let (singular_values, rank) = svd_rank(&jac);
    let (_, linear_rank) = svd_rank(&lin);
    Ok(JacobianReport { sources, targets, jacobian: jac, linear_part: lin, singular_values, rank, linear_rank })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleHopfAnalysis {
    pub tau: f64,
    /// Coefficients `(a11, a12, a21, a22)` of `b2^2`.
    pub alpha: [f64; 4],
    /// Coefficients of `b3`.
    pub beta: [f64; 4],
    /// `|a(2, 3) - (4 alpha + 3 beta)|`.
    pub consistency_error: f64,
    pub grid_size: usize,
    pub sign_region_count: usize,
    /// Count predicted from the ordering of the parabolas `b3 = c_k b2^2`.
    pub analytic_region_count: usize,
    pub required: usize,
    pub verdict: String,
}

/// Cubic radial coefficients of the one-delay model `b2 v^2 + b3 v^3`.
fn cubic_coeffs(
    spec: &SpectrumSpec,
    linear: &DelayLinearOperator,
    adj: &AdjointVector,
    tau: f64,
    b2: f64,
    b3: f64,
) -> Result<[f64; 4], RealizerError> {
    let ds = VariableSpace::delayed(1, 0);
    let eta = Poly::from_terms(ds, [(vec![2], C64::new(b2, 0.0)), (vec![3], C64::new(b3, 0.0))]);
    let model = DDEModel::new(linear.clone(), vec![tau], eta, Poly::zero(ds), 0)?;
    let nf = reduce_to_normal_form(&model, spec, adj, 3)?;
    let c = |comp: usize, e: [u32; 2]| nf.radial.components[comp].coeff(&Monomial(e.to_vec())).re;
    Ok([c(0, [3, 0]), c(0, [1, 2]), c(1, [2, 1]), c(1, [0, 3])])
}

/// Cubic double-Hopf restriction analysis for a single delay.
pub fn double_hopf_one_delay_analysis(
    spec: &SpectrumSpec,
    linear: &DelayLinearOperator,
    adj: &AdjointVector,
    tau: f64,
    grid: usize,
) -> Result<DoubleHopfAnalysis, RealizerError> {
    if spec.p() != 2 || spec.includes_zero {
        return Err(RealizerError::Invalid("double Hopf analysis needs two frequencies and no zero root".into()));
    }
    check_tau(spec, &[tau])?;
    let alpha = cubic_coeffs(spec, linear, adj, tau, 1.0, 0.0)?;
    let beta = cubic_coeffs(spec, linear, adj, tau, 0.0, 1.0)?;
    let at23 = cubic_coeffs(spec, linear, adj, tau, 2.0, 3.0)?;
    let consistency_error = (0..4).map(|k| (at23[k] - 4.0 * alpha[k] - 3.0 * beta[k]).abs()).fold(0.0, f64::max);
    let scale = alpha.iter().chain(&beta).map(|x| x.abs()).fold(0.0, f64::max);
    let eps = 1e-9 * scale.max(1e-300);
    let pts: Vec<f64> = (0..grid).map(|k| -1.0 + 2.0 * k as f64 / (grid - 1).max(1) as f64).collect();
    let signs: BTreeSet<[i8; 4]> = pts
        .par_iter()
        .flat_map_iter(|&b2| {
            pts.iter().filter_map(move |&b3| {
                let mut sv = [0i8; 4];
                for k in 0..4 {
                    let a = alpha[k] * b2 * b2 + beta[k] * b3;
                    if a.abs() < eps {
                        return None;
                    }
                    sv[k] = if a > 0.0 { 1 } else { -1 };
                }
                Some(sv)
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    // Regions of the open half-planes b2 != 0 are delimited by distinct
    // slopes b3/b2^2 = -alpha_k/beta_k.
    let mut cuts: Vec<f64> = (0..4).filter(|&k| beta[k].abs() > eps).map(|k| -alpha[k] / beta[k]).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
    let analytic_region_count = cuts.len() + 1;
    let sign_region_count = signs.len();
    let required = 12;
    let verdict = if sign_region_count < required { "restricted" } else { "unrestricted" }.to_string();
    Ok(DoubleHopfAnalysis {
        tau,
        alpha,
        beta,
        consistency_error,
        grid_size: grid,
        sign_region_count,
        analytic_region_count,
        required,
        verdict,
    })
}
