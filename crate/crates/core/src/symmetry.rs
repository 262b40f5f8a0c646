//! Basis catalogs, the homological operator, the torus average `A`, the
//! radial projection `Pi`, the K-matrix and dimension counts.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linsys::SpectrumSpec;
use crate::polyring::{binomial, monomials_of_degree, Monomial, Poly, PolyError, SpaceKind, VariableSpace, VectorPoly};

type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("input is not torus-equivariant: {count} off-weight terms, largest {largest:.3e}")]
    NotEquivariant { count: usize, largest: f64 },
    #[error("expected a {expected} space, got {got}")]
    WrongSpace { expected: &'static str, got: VariableSpace },
    #[error("degree must be at least 2, got {0}")]
    Degree(usize),
    #[error("unknown catalog tag {0:?}")]
    UnknownTag(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisTag {
    /// All vector monomials in center variables.
    Center,
    /// Torus-equivariant vector monomials in center variables.
    CenterTorus,
    /// Equivariant radial vector monomials (mu-free first, then mu-vanishing).
    Radial,
    /// Scalar generators in delayed variables, matched one-to-one with `Radial`.
    V,
    /// Images of `V` under the inverse K-substitution.
    VHat,
    /// Mu-free part of `V`.
    VFree,
    /// Mu-vanishing part of `VHat`.
    WHat,
}

impl std::str::FromStr for BasisTag {
    type Err = SymmetryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "center" => BasisTag::Center,
            "center_torus" => BasisTag::CenterTorus,
            "radial" => BasisTag::Radial,
            "v" => BasisTag::V,
            "v_hat" => BasisTag::VHat,
            "v_free" => BasisTag::VFree,
            "w_hat" => BasisTag::WHat,
            other => return Err(SymmetryError::UnknownTag(other.to_string())),
        })
    }
}

/// One basis element: `monomial * e_component` for vector catalogs, or a
/// scalar polynomial (`component = 0`) for the V-type catalogs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisEntry {
    pub component: usize,
    pub monomial: Monomial,
    #[serde(skip)]
    pub scalar: Option<Poly>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisCatalog {
    pub tag: BasisTag,
    pub space: VariableSpace,
    pub degree: usize,
    pub entries: Vec<BasisEntry>,
}

impl BasisCatalog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of leading mu-free entries (the catalogs list them first).
    pub fn param_free_len(&self) -> usize {
        self.entries.iter().take_while(|e| e.monomial.param_degree(&self.space) == 0).count()
    }

    /// Index of `(component, monomial)` for vector catalogs.
    pub fn index_of(&self, component: usize, m: &Monomial) -> Option<usize> {
        self.entries.iter().position(|e| e.component == component && &e.monomial == m)
    }

    /// Scalar polynomial of entry `i` (V-type catalogs).
    pub fn scalar(&self, i: usize) -> &Poly {
        self.entries[i].scalar.as_ref().expect("scalar catalog")
    }
}

/// `K[j][k] = -1` iff `j + k > d + 1` (1-based), else `+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KMatrix {
    pub k: DMatrix<f64>,
    pub inv: DMatrix<f64>,
}

impl KMatrix {
    pub fn new(d: usize) -> Self {
        let k = DMatrix::from_fn(d, d, |j, c| if (j + 1) + (c + 1) > d + 1 { -1.0 } else { 1.0 });
        let inv = k.clone().try_inverse().expect("K is invertible");
        Self { k, inv }
    }

    pub fn complex_inv(&self) -> DMatrix<C64> {
        self.inv.map(|x| C64::new(x, 0.0))
    }

    pub fn complex(&self) -> DMatrix<C64> {
        self.k.map(|x| C64::new(x, 0.0))
    }
}

/// Whether a radial monomial may sit in radial component `c`.
fn radial_equivariant(space: &VariableSpace, c: usize, m: &Monomial) -> bool {
    let z = space.includes_zero() as usize;
    let p = space.hopf_pairs();
    (0..p).all(|j| {
        let e = m.0[z + j];
        let target_slot = z + j;
        if c == target_slot {
            e % 2 == 1
        } else {
            e.is_multiple_of(2)
        }
    })
}

fn check_degree(ell: usize) -> Result<(), SymmetryError> {
    if ell < 2 {
        return Err(SymmetryError::Degree(ell));
    }
    Ok(())
}

/// Enumerates the catalog `tag` at homogeneous degree `ell`.
pub fn enumerate_basis(tag: BasisTag, spec: &SpectrumSpec, ell: usize, s: usize) -> Result<BasisCatalog, SymmetryError> {
    check_degree(ell)?;
    let cs = spec.center_space(s);
    let rs = spec.radial_space(s);
    let ds = spec.delayed_space(s);
    let catalog = match tag {
        BasisTag::Center | BasisTag::CenterTorus => {
            let mons = monomials_of_degree(cs.nvars(), ell);
            let mut entries = Vec::new();
            for c in 0..cs.state_dim() {
                for m in &mons {
                    if tag == BasisTag::Center || m.weight(&cs) == cs.component_weight(c) {
                        entries.push(BasisEntry { component: c, monomial: m.clone(), scalar: None });
                    }
                }
            }
            BasisCatalog { tag, space: cs, degree: ell, entries }
        }
        BasisTag::Radial => BasisCatalog { tag, space: rs, degree: ell, entries: radial_entries(&rs, ell) },
        BasisTag::V | BasisTag::VFree => {
            let mut entries: Vec<BasisEntry> = radial_entries(&rs, ell)
                .into_iter()
                .map(|e| {
                    let m = Monomial(e.monomial.0.clone());
                    BasisEntry { component: 0, scalar: Some(Poly::monomial(ds, m.clone(), C64::new(1.0, 0.0))), monomial: m }
                })
                .collect();
            if tag == BasisTag::VFree {
                entries.retain(|e| e.monomial.param_degree(&ds) == 0);
            }
            BasisCatalog { tag, space: ds, degree: ell, entries }
        }
        BasisTag::VHat | BasisTag::WHat => {
            let v = enumerate_basis(BasisTag::V, spec, ell, s)?;
            let kinv = KMatrix::new(spec.d()).complex_inv();
            let mut entries = Vec::new();
            for e in v.entries {
                if tag == BasisTag::WHat && e.monomial.param_degree(&ds) == 0 {
                    continue;
                }
                let hat = e.scalar.as_ref().unwrap().compose_linear(&kinv, ds)?;
                entries.push(BasisEntry { component: 0, monomial: e.monomial, scalar: Some(hat) });
            }
            BasisCatalog { tag, space: ds, degree: ell, entries }
        }
    };
    Ok(catalog)
}

fn radial_entries(rs: &VariableSpace, ell: usize) -> Vec<BasisEntry> {
    let mons = monomials_of_degree(rs.nvars(), ell);
    let mut free = Vec::new();
    let mut vanishing = Vec::new();
    for c in 0..rs.state_dim() {
        for m in &mons {
            if radial_equivariant(rs, c, m) {
                let e = BasisEntry { component: c, monomial: m.clone(), scalar: None };
                if m.param_degree(rs) == 0 {
                    free.push(e);
                } else {
                    vanishing.push(e);
                }
            }
        }
    }
    free.extend(vanishing);
    free
}

/// Eigenvalue of the homological operator on `m * e_c`:
/// `sum_j w_j(m) i w_j - lambda_c`.
pub fn homological_eigenvalue(m: &Monomial, c: usize, spec: &SpectrumSpec, space: &VariableSpace) -> C64 {
    let w = m.weight(space);
    let lam_m: f64 = w.iter().zip(&spec.omegas).map(|(&k, &om)| k as f64 * om).sum();
    C64::new(0.0, lam_m) - spec.center_eigenvalues()[c]
}

/// Torus average, computed exactly as the resonance filter.
pub fn project_a(f: &VectorPoly) -> VectorPoly {
    let sp = f.space;
    VectorPoly {
        space: sp,
        components: f
            .components
            .iter()
            .enumerate()
            .map(|(c, p)| {
                let cw = sp.component_weight(c);
                p.filter(|m| m.weight(&sp) == cw)
            })
            .collect(),
    }
}

/// Part removed by the average: `(I - A) f`.
pub fn project_a_complement(f: &VectorPoly) -> VectorPoly {
    let sp = f.space;
    VectorPoly {
        space: sp,
        components: f
            .components
            .iter()
            .enumerate()
            .map(|(c, p)| {
                let cw = sp.component_weight(c);
                p.filter(|m| m.weight(&sp) != cw)
            })
            .collect(),
    }
}

/// Radial projection with `gamma = identity`.
pub fn project_pi(g: &VectorPoly) -> Result<VectorPoly, SymmetryError> {
    let p = g.space.hopf_pairs();
    project_pi_with(g, &vec![0.0; p])
}

/// `C * gamma * g(gamma^{-1} R, mu)` for the torus element with angles `gamma`.
/// Returns real coefficients (the imaginary parts cancel on real inputs).
pub fn project_pi_with(g: &VectorPoly, gamma: &[f64]) -> Result<VectorPoly, SymmetryError> {
    let cs = g.space;
    let SpaceKind::Center { p, includes_zero } = cs.kind else {
        return Err(SymmetryError::WrongSpace { expected: "center", got: cs });
    };
    let off = project_a_complement(g);
    if !off.is_zero() {
        let count = off.components.iter().map(Poly::len).sum();
        return Err(SymmetryError::NotEquivariant { count, largest: off.max_abs() });
    }
    let rs = VariableSpace::radial(p, includes_zero, cs.s);
    let z = includes_zero as usize;
    // Slot angle: gamma acts on x_j by e^{i g_j} and on x_j bar by e^{-i g_j}.
    let slot_angle = |slot: usize| -> f64 {
        if slot < z || slot >= cs.state_dim() {
            0.0
        } else {
            let k = slot - z;
            if k.is_multiple_of(2) {
                gamma[k / 2]
            } else {
                -gamma[k / 2]
            }
        }
    };
    let mut out = VectorPoly::zero_field(rs);
    for (c, comp) in g.components.iter().enumerate() {
        let (target, weight) = if c < z { (0, 1.0) } else { (z + (c - z) / 2, 0.5) };
        let gamma_c = C64::from_polar(1.0, slot_angle(c));
        for (m, &coef) in comp.terms() {
            // gamma^{-1} R: x_slot -> e^{-i angle(slot)} rho
            let mut phase = 0.0;
            let mut rexp = vec![0u32; rs.nvars()];
            for (slot, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                phase -= slot_angle(slot) * e as f64;
                let rvar = if slot < z {
                    0
                } else if slot < cs.state_dim() {
                    z + (slot - z) / 2
                } else {
                    rs.param_offset() + (slot - cs.state_dim())
                };
                rexp[rvar] += e;
            }
            let v = coef * gamma_c * C64::from_polar(1.0, phase) * weight;
            out.components[target].add_term(Monomial(rexp), v);
        }
    }
    Ok(out.map(|p| p.map_coeffs(|c| C64::new(c.re, 0.0))))
}

/// Matrix of `A` on the `Center` catalog (columns = images of basis elements).
pub fn a_matrix(cat: &BasisCatalog) -> DMatrix<f64> {
    let n = cat.len();
    let mut m = DMatrix::zeros(n, n);
    for (j, e) in cat.entries.iter().enumerate() {
        let mut f = VectorPoly::zero_field(cat.space);
        f.components[e.component] = Poly::monomial(cat.space, e.monomial.clone(), C64::new(1.0, 0.0));
        let img = project_a(&f);
        for (c, comp) in img.components.iter().enumerate() {
            for (mm, &v) in comp.terms() {
                let i = cat.index_of(c, mm).expect("image in catalog");
                m[(i, j)] = v.re;
            }
        }
    }
    m
}

/// Matrix of the homological operator on the `Center` catalog.
pub fn lb_matrix(cat: &BasisCatalog, spec: &SpectrumSpec) -> DMatrix<C64> {
    let n = cat.len();
    let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for (j, e) in cat.entries.iter().enumerate() {
        m[(j, j)] = homological_eigenvalue(&e.monomial, e.component, spec, &cat.space);
    }
    m
}

/// Dimension report for the realization and restriction analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimsReport {
    pub p: usize,
    pub includes_zero: bool,
    pub ell: usize,
    pub s: usize,
    pub delays: usize,
    /// Per grade `j = 2..=ell`: (dim V-hat, dim radial) with parameters.
    pub per_grade: Vec<GradeDims>,
    /// Graded dimension of polynomials in `delays` variables, enumerated.
    pub source_dim: usize,
    /// Closed form `C(delays + ell, delays) - delays - 1`.
    pub source_formula: usize,
    /// Graded dimension of mu-free equivariant radial fields, enumerated.
    pub target_dim: usize,
    /// `L(L+3)` with `ell = 2L + j` (two Hopf pairs without zero only).
    pub target_formula: Option<usize>,
    pub not_surjective: bool,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeDims {
    pub degree: usize,
    pub v_hat: usize,
    pub radial: usize,
    pub radial_free: usize,
    pub center: usize,
    pub center_torus: usize,
}

pub fn dims(spec: &SpectrumSpec, ell: usize, s: usize, delays: usize) -> Result<DimsReport, SymmetryError> {
    check_degree(ell)?;
    let mut per_grade = Vec::new();
    let mut target_dim = 0;
    let mut source_dim = 0;
    for j in 2..=ell {
        let radial = enumerate_basis(BasisTag::Radial, spec, j, s)?;
        let vhat = enumerate_basis(BasisTag::VHat, spec, j, s)?;
        let center = enumerate_basis(BasisTag::Center, spec, j, s)?;
        let torus = enumerate_basis(BasisTag::CenterTorus, spec, j, s)?;
        let radial_free = enumerate_basis(BasisTag::Radial, spec, j, 0)?.len();
        target_dim += radial_free;
        source_dim += if delays == 0 { 0 } else { monomials_of_degree(delays, j).len() };
        per_grade.push(GradeDims {
            degree: j,
            v_hat: vhat.len(),
            radial: radial.len(),
            radial_free,
            center: center.len(),
            center_torus: torus.len(),
        });
    }
    let source_formula = if delays == 0 {
        0
    } else {
        (binomial((delays + ell) as u64, delays as u64) - 1 - delays as u64) as usize
    };
    let target_formula = (spec.p() == 2 && !spec.includes_zero).then(|| {
        let l = ell / 2;
        l * (l + 3)
    });
    let not_surjective = source_dim < target_dim;
    let verdict = if not_surjective {
        format!("{source_dim} < {target_dim}, not surjective")
    } else {
        format!("{source_dim} >= {target_dim}, no dimension obstruction")
    };
    Ok(DimsReport {
        p: spec.p(),
        includes_zero: spec.includes_zero,
        ell,
        s,
        delays,
        per_grade,
        source_dim,
        source_formula,
        target_dim,
        target_formula,
        not_surjective,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> C64 {
        C64::new(x, y)
    }

    fn hopf(p: usize, zero: bool) -> SpectrumSpec {
        let om = [1.0, 2f64.sqrt(), 3f64.sqrt()];
        SpectrumSpec::new(om[..p].to_vec(), zero, 1.0).unwrap()
    }

    #[test]
    fn v_basis_single_delay() {
        let cat = enumerate_basis(BasisTag::V, &hopf(1, false), 3, 0).unwrap();
        assert_eq!(cat.len(), 1);
        assert_eq!(cat.entries[0].monomial, Monomial(vec![3]));
    }

    #[test]
    fn radial_basis_double_hopf() {
        let cat = enumerate_basis(BasisTag::Radial, &hopf(2, false), 3, 0).unwrap();
        let got: Vec<(usize, Vec<u32>)> = cat.entries.iter().map(|e| (e.component, e.monomial.0.clone())).collect();
        assert_eq!(got, vec![(0, vec![3, 0]), (0, vec![1, 2]), (1, vec![2, 1]), (1, vec![0, 3])]);
        assert!(enumerate_basis(BasisTag::Radial, &hopf(2, false), 2, 0).unwrap().is_empty());
    }

    #[test]
    fn v_hat_is_k_inverse_image() {
        let spec = hopf(2, false);
        let k = KMatrix::new(2);
        assert_eq!(k.k, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]));
        let v = enumerate_basis(BasisTag::V, &spec, 3, 0).unwrap();
        let vh = enumerate_basis(BasisTag::VHat, &spec, 3, 0).unwrap();
        // K-substitution undoes the hat.
        for i in 0..v.len() {
            let back = vh.scalar(i).compose_linear(&k.complex(), v.space).unwrap().chop(1e-14);
            assert!(back.sub(v.scalar(i)).unwrap().max_abs() < 1e-14);
        }
    }

    #[test]
    fn k_matrix_invertible() {
        for d in 1..6 {
            let k = KMatrix::new(d);
            let id = &k.k * &k.inv;
            assert!((id - DMatrix::identity(d, d)).abs().max() < 1e-12);
        }
    }

    #[test]
    fn homological_examples() {
        let spec = hopf(1, false);
        let cs = spec.center_space(0);
        assert!(homological_eigenvalue(&Monomial(vec![2, 1]), 0, &spec, &cs).norm() < 1e-15);
        assert!((homological_eigenvalue(&Monomial(vec![3, 0]), 0, &spec, &cs) - c(0.0, 2.0)).norm() < 1e-15);
        let spec0 = hopf(1, true);
        let cs0 = spec0.center_space(0);
        assert!((homological_eigenvalue(&Monomial(vec![1, 1, 0]), 0, &spec0, &cs0) - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn project_a_examples() {
        let cs = VariableSpace::center(1, false, 1);
        let mut f = VectorPoly::zero_field(cs);
        f.components[0] = Poly::from_terms(cs, [(vec![3, 0, 0], c(1.0, 0.0))]);
        assert!(project_a(&f).is_zero());
        f.components[0] = Poly::from_terms(cs, [(vec![3, 0, 0], c(1.0, 0.0)), (vec![2, 1, 0], c(1.0, 0.0))]);
        assert_eq!(project_a(&f).components[0], Poly::from_terms(cs, [(vec![2, 1, 0], c(1.0, 0.0))]));
        f.components[0] = Poly::from_terms(cs, [(vec![1, 0, 1], c(1.0, 0.0))]);
        assert_eq!(project_a(&f), f);
    }

    #[test]
    fn project_pi_examples() {
        let cs = VariableSpace::center(1, false, 0);
        let a = c(2.0, 5.0);
        let g = VectorPoly::from_components(
            cs,
            vec![Poly::from_terms(cs, [(vec![2, 1], a)]), Poly::from_terms(cs, [(vec![1, 2], a.conj())])],
        )
        .unwrap();
        let r = project_pi(&g).unwrap();
        assert_eq!(r.components[0].coeff(&Monomial(vec![3])), c(2.0, 0.0));
        let i = c(0.0, 1.0);
        let gi = VectorPoly::from_components(
            cs,
            vec![Poly::from_terms(cs, [(vec![2, 1], i)]), Poly::from_terms(cs, [(vec![1, 2], -i)])],
        )
        .unwrap();
        assert!(project_pi(&gi).unwrap().components[0].is_zero());

        let cs0 = VariableSpace::center(1, true, 0);
        let mut g0 = VectorPoly::zero_field(cs0);
        g0.components[0] = Poly::from_terms(cs0, [(vec![2, 0, 0], c(1.0, 0.0))]);
        assert_eq!(project_pi(&g0).unwrap().components[0].coeff(&Monomial(vec![2, 0])), c(1.0, 0.0));

        let mut bad = VectorPoly::zero_field(cs);
        bad.components[0] = Poly::from_terms(cs, [(vec![3, 0], c(1.0, 0.0))]);
        assert!(matches!(project_pi(&bad), Err(SymmetryError::NotEquivariant { .. })));
    }

    #[test]
    fn project_pi_independent_of_gamma() {
        let cs = VariableSpace::center(2, false, 0);
        let a = c(0.3, -1.2);
        let b = c(-0.7, 0.4);
        let g = VectorPoly::from_components(
            cs,
            vec![
                Poly::from_terms(cs, [(vec![2, 1, 0, 0], a), (vec![1, 0, 1, 1], b)]),
                Poly::from_terms(cs, [(vec![1, 2, 0, 0], a.conj()), (vec![0, 1, 1, 1], b.conj())]),
                Poly::zero(cs),
                Poly::zero(cs),
            ],
        )
        .unwrap();
        let r0 = project_pi(&g).unwrap();
        let r1 = project_pi_with(&g, &[0.9, -2.1]).unwrap();
        assert!(r0.sub(&r1).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn matched_dimensions() {
        for &(p, z) in &[(1, false), (1, true), (2, false), (2, true)] {
            let spec = hopf(p, z);
            for s in 0..=2 {
                for j in 2..=6 {
                    let a = enumerate_basis(BasisTag::VHat, &spec, j, s).unwrap().len();
                    let b = enumerate_basis(BasisTag::Radial, &spec, j, s).unwrap().len();
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn dims_double_hopf_example() {
        let rep = dims(&hopf(2, false), 3, 0, 1).unwrap();
        assert_eq!(rep.source_dim, 2);
        assert_eq!(rep.target_dim, 4);
        assert!(rep.not_surjective);
        assert_eq!(rep.verdict, "2 < 4, not surjective");
        let rep2 = dims(&hopf(2, false), 2, 0, 1).unwrap();
        assert_eq!(rep2.target_dim, 0);
    }
}
