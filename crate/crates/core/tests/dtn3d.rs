use elastoscat::dtn2d::Splitting;
use elastoscat::dtn3d::*;
use elastoscat::material::IsotropicMedium;
use num_complex::Complex64;
use proptest::prelude::*;

const SPLITS: [Splitting; 3] = [Splitting::Lame, Splitting::NoShear, Splitting::Balanced];

fn base(s: Splitting) -> DtnParams3D<f64> {
    DtnParams3D::with_splitting(2.0, 3.0, IsotropicMedium::new(1.0, 2.0, 1.0).unwrap(), s).unwrap()
}

fn mul3(a: &[[Complex64; 3]; 3], b: &[[Complex64; 3]; 3]) -> [[Complex64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

#[test]
fn im_lambda_positive() {
    for s in SPLITS {
        let p = base(s);
        for m in mode_table_3d(&p, 100).unwrap() {
            assert!(m.lambda_n.im > 0.0, "n={}", m.n);
            assert!(m.ln_im_lambda(p.tp(), p.ts()).is_finite());
        }
    }
}

#[test]
fn closed_form_inverse() {
    let p = base(Splitting::Lame);
    for m in mode_table_3d(&p, 120).unwrap() {
        let id = mul3(&m.a, &m.a_inv);
        let sc = m.a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
            * m.a_inv.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[i][j] - want).norm() < 1e-12 * sc.max(1.0), "n={}", m.n);
            }
        }
    }
}

#[test]
fn rellich_diagonal_entrywise() {
    for s in SPLITS {
        let p = base(s);
        for m in mode_table_3d(&p, 200).unwrap() {
            assert!(rellich_residual_3d(&p, &m) < 1e-9, "{s:?} n={}", m.n);
        }
    }
}

#[test]
fn spherical_bound_for_consumed_ratios() {
    let p = base(Splitting::Lame);
    for m in mode_table_3d(&p, 200).unwrap() {
        for (r, t) in [(m.ratio_p, p.tp()), (m.ratio_s, p.ts())] {
            let x = r.gamma * t;
            assert!(-x.re >= 1.0 - 1e-12 && -x.re <= m.n as f64 + 1.0 + 1e-12);
            assert!(x.im <= t * (1.0 + 1e-12) && r.ln_im_gamma.is_finite());
        }
    }
}

#[test]
fn slopes_and_block_structure() {
    let (l, mu) = (1.0f64, 2.0f64);
    for s in SPLITS {
        let p = base(s);
        let m = mode_matrices_3d(&p, 400).unwrap();
        let r = p.radius;
        assert!((-m.w[0][0].re / 400.0 - mu / r).abs() < 0.02 * mu / r);
        let wt = m.w_tilde();
        for (i, j) in [(0, 1), (1, 0), (0, 2), (2, 0)] {
            assert_eq!(wt[i][j], Complex64::new(0.0, 0.0));
        }
        let det = (wt[1][1] * wt[2][2] - wt[1][2] * wt[2][1]).re / 160_000.0;
        let lt = p.lambda_tilde;
        let want = (4.0 * mu * mu * (l + 2.0 * mu).powi(2) - ((l - lt) * (l + 3.0 * mu) + 2.0 * mu * mu).powi(2))
            / (r * r * (l + 3.0 * mu).powi(2));
        assert!((det - want).abs() < 0.03 * want.abs(), "{s:?} {det} {want}");
        assert!(positivity_scan_3d(&p, 400).unwrap() <= 50);
    }
}

#[test]
fn boundary_splitting_degrades_positivity() {
    let bg = IsotropicMedium::new(1.0, 2.0, 1.0).unwrap();
    let slope = |lt: f64| {
        let p = DtnParams3D::new(2.0, 3.0, bg, lt).unwrap();
        let wt = mode_matrices_3d(&p, 400).unwrap().w_tilde();
        (wt[1][1] * wt[2][2] - wt[1][2] * wt[2][1]).re / 160_000.0
    };
    let far = slope(1.0);
    let near = slope(5.0 - 1e-3);
    assert!(near.abs() < 0.01 * far);
    assert!(DtnParams3D::new(2.0, 3.0, bg, 5.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]
    #[test]
    fn random_draws(omega in 0.5f64..5.0, r in 1.0f64..4.0, l in 0.2f64..3.0, mu in 0.3f64..3.0, rho in 0.5f64..2.0, s in 0usize..3) {
        let bg = IsotropicMedium::new(l, mu, rho).unwrap();
        let p = DtnParams3D::with_splitting(r, omega, bg, SPLITS[s]).unwrap();
        for m in mode_table_3d(&p, 150).unwrap() {
            // Im Λ_n itself underflows for large n at small t; its logarithm does not.
            prop_assert!(m.lambda_n.im >= 0.0);
            let ln = m.ln_im_lambda(p.tp(), p.ts());
            prop_assert!(ln.is_finite());
            if m.lambda_n.im > 1e-250 {
                prop_assert!((ln - m.lambda_n.im.ln()).abs() < 1e-8);
            }
            prop_assert!(rellich_residual_3d(&p, &m) < 1e-9);
        }
    }
}
