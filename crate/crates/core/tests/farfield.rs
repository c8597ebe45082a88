use std::sync::Arc;

use elastoscat::benchmarks::{Benchmark, Example, Shape};
use elastoscat::dtn2d::{BoundaryTrace, DtnOperator, DtnParams};
use elastoscat::farfield::*;
use elastoscat::fem::{assemble, jumps_from_fields, potential_gradient, RadialProfile};
use elastoscat::material::IsotropicMedium;
use num_complex::Complex64 as C;

fn bg() -> IsotropicMedium<f64> {
    IsotropicMedium::new(1.0, 2.0, 1.0).unwrap()
}

fn op(omega: f64, radius: f64, nt: usize) -> DtnOperator<f64> {
    DtnOperator::new(DtnParams::new(radius, omega, bg(), bg().lambda, Some(nt)).unwrap()).unwrap()
}

/// Trace on `Γ_R` of `∇H₀(k_p|x − b|)`.
fn point_source_trace(omega: f64, radius: f64, b: [f64; 2], nt: usize) -> BoundaryTrace<f64> {
    let nb = 4 * nt + 8;
    let kp = bg().kp(omega);
    let samples: Vec<[C; 2]> = (0..nb)
        .map(|i| {
            let th = std::f64::consts::TAU * i as f64 / nb as f64;
            potential_gradient(RadialProfile::HankelH0, kp, b, [radius * th.cos(), radius * th.sin()])
                .unwrap()
                .u
        })
        .collect();
    BoundaryTrace::from_samples(&samples, nt).unwrap()
}

#[test]
fn centred_point_source_has_radial_pattern() {
    let (omega, radius) = (2.0, 2.0);
    let kp = bg().kp(omega);
    let o = op(omega, radius, 20);
    let ff = farfield_from_trace(&o, &point_source_trace(omega, radius, [0.0, 0.0], 20), &uniform_angles(32)).unwrap();
    for k in 0..32 {
        let v = ff.vector(k);
        let (s, c) = ff.thetas[k].sin_cos();
        let e = ((v[0] - 4.0 * kp * c).norm_sqr() + (v[1] - 4.0 * kp * s).norm_sqr()).sqrt();
        assert!(e < 1e-8 * 4.0 * kp, "{e}");
    }
}

#[test]
fn zero_trace_has_zero_pattern() {
    let o = op(1.0, 2.0, 10);
    let ff = farfield_from_trace(&o, &BoundaryTrace::zeros(10), &uniform_angles(16)).unwrap();
    assert_eq!(ff.max_norm(), 0.0);
}

#[test]
fn shifted_source_picks_up_a_phase() {
    let (omega, radius) = (2.0, 3.0);
    let kp = bg().kp(omega);
    let b = [0.3, -0.2];
    let nt = 30;
    let o = op(omega, radius, nt);
    let th = uniform_angles(24);
    let ff = farfield_from_trace(&o, &point_source_trace(omega, radius, b, nt), &th).unwrap();
    for k in 0..th.len() {
        let (s, c) = th[k].sin_cos();
        let want = C::from_polar(4.0 * kp, -kp * (b[0] * c + b[1] * s));
        assert!((ff.up[k] - want).norm() < 1e-8 * 4.0 * kp, "{} {want}", ff.up[k]);
        assert!(ff.us[k].norm() < 1e-8 * 4.0 * kp);
    }
}

#[test]
fn doubling_truncation_changes_nothing() {
    let (omega, radius) = (2.0, 3.0);
    let th = uniform_angles(24);
    let b = [0.2, 0.1];
    let a = farfield_from_trace(&op(omega, radius, 30), &point_source_trace(omega, radius, b, 30), &th).unwrap();
    let c = farfield_from_trace(&op(omega, radius, 60), &point_source_trace(omega, radius, b, 60), &th).unwrap();
    assert!(a.relative_error(&c) < 1e-6);
}

#[test]
fn pattern_from_finite_element_trace_converges() {
    let omega = 1.0;
    let bench = Benchmark::new(Example::One, Shape::Circle, omega).unwrap();
    let kp = bg().kp(omega);
    let th = uniform_angles(36);
    let exact = FarField {
        thetas: th.clone(),
        up: vec![C::new(4.0 * kp, 0.0); th.len()],
        us: vec![C::new(0.0, 0.0); th.len()],
    };
    let mut mesh = bench.coarse_mesh().unwrap();
    let mut errs = Vec::new();
    for level in 0..3 {
        if level > 0 {
            mesh = mesh.refine();
        }
        let m = Arc::new(mesh.clone());
        let sys = assemble(&m, &bench.problem).unwrap();
        let jumps = jumps_from_fields(&m, &bench.problem, |x, _| bench.inside(x), |x| bench.outside(x)).unwrap();
        let sol = sys.solve_transmission(&jumps).unwrap();
        let tr = sol.scattered_trace(&m, None, sys.n_trunc()).unwrap();
        errs.push(farfield_from_trace(&sys.dtn, &tr, &th).unwrap().relative_error(&exact));
    }
    assert!(errs[2] < 0.05, "{errs:?}");
    let order = (errs[1] / errs[2]).log2();
    assert!((1.5..=2.5).contains(&order), "{errs:?}");
}

#[test]
fn csv_layout() {
    let o = op(1.0, 2.0, 10);
    let ff = farfield_from_trace(&o, &point_source_trace(1.0, 2.0, [0.0, 0.0], 10), &uniform_angles(8)).unwrap();
    let csv = ff.to_csv();
    assert!(csv.starts_with("theta,re_up,im_up,re_us,im_us\n"));
    assert_eq!(csv.lines().count(), 9);
}
