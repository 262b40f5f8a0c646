use ddenf::linsys::{adjoint_vector, DelayLinearOperator, SpectrumSpec};
use ddenf::qsolver::{center_components, q_residuals, solve_q_general, solve_q_homological, ExpPoly};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn setup() -> (DelayLinearOperator, SpectrumSpec) {
    let op = DelayLinearOperator::new(vec![(-PI / 2.0, -0.5), (-1.5 * PI, 0.5)]).unwrap();
    let spec = SpectrumSpec::new(vec![1.0], true, 1.5 * PI).unwrap();
    (op, spec)
}

#[test]
fn residuals_vanish_for_random_data() {
    let (op, spec) = setup();
    let adj = adjoint_vector(&op, &spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let dom = (-spec.r, 0.0);
    for _ in 0..30 {
        // Weights of monomials in (x0, x1, x1bar): lambda = i k, k integer.
        let k = rng.gen_range(-4i32..=4);
        let lam = C64::new(0.0, k as f64);
        let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let phi = ExpPoly::poly_exp(C64::new(0.0, rng.gen_range(-2i32..=2) as f64), vec![C64::new(rng.gen_range(-1.0..1.0), 0.0), C64::new(0.0, rng.gen_range(-1.0..1.0))], dom);
        let resonant = spec.center_eigenvalues().contains(&lam);
        let phi = if resonant { ExpPoly::zero(dom) } else { phi };
        let h = solve_q_general(lam, c, &phi, &op, &spec, &adj).unwrap();
        let (interior, boundary) = q_residuals(&h, lam, c, &phi, &op, &spec, &adj, 100);
        assert!(interior < 1e-10 && boundary < 1e-10, "lam={lam} {interior:e} {boundary:e}");
        if resonant {
            assert!(center_components(&h, &op, &spec).iter().all(|v| v.norm() < 1e-9));
        }
    }
}

#[test]
fn linear_in_c() {
    let (op, spec) = setup();
    let adj = adjoint_vector(&op, &spec).unwrap();
    let lam = C64::new(0.0, 2.0);
    let a = solve_q_homological(lam, C64::new(1.0, 0.5), &op, &spec, &adj).unwrap();
    let b = solve_q_homological(lam, C64::new(-0.3, 2.0), &op, &spec, &adj).unwrap();
    let ab = solve_q_homological(lam, C64::new(0.7, 2.5), &op, &spec, &adj).unwrap();
    for t in [-4.0, -2.0, -0.5, 0.0] {
        let d = ab.eval(t).unwrap() - a.eval(t).unwrap() - b.eval(t).unwrap();
        assert!(d.norm() < 1e-12);
    }
}
