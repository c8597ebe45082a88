use std::sync::Arc;

use elastoscat::inverse::*;
use elastoscat::material::{IsotropicMedium, Material, StiffnessTensor2D};
use elastoscat::mesh::{perturbation_field, Mesh2D};
use num_complex::Complex64 as C;

fn scenario(h: f64, amp: f64) -> Scenario {
    let c = StiffnessTensor2D::new(10.5, 3.25, -0.65, 13.0, -1.52, 4.75).unwrap();
    Scenario {
        background: IsotropicMedium::new(1.0, 2.0, 1.0).unwrap(),
        materials: vec![Material::new(c, C::new(3.0, 0.0)).unwrap()],
        radius: 2.0,
        h,
        n_trunc: None,
        omegas: vec![2.0],
        directions: vec![[1.0, 0.0]],
        amplitude: [C::new(amp, 0.0), C::new(amp, 0.0)],
        n_mea: 64,
    }
}

fn params() -> ShapeParams {
    ShapeParams::new(2, vec![vec![0.1, -0.05, 0.8, 0.1, 0.0, 0.0, 0.05]]).unwrap()
}

fn norm(v: &[[C; 2]]) -> f64 {
    v.iter().map(|p| p[0].norm_sqr() + p[1].norm_sqr()).sum::<f64>().sqrt()
}

fn diff(a: &[[C; 2]], b: &[[C; 2]]) -> Vec<[C; 2]> {
    a.iter().zip(b).map(|(p, q)| [p[0] - q[0], p[1] - q[1]]).collect()
}

struct Setup {
    sc: Scenario,
    p: ShapeParams,
    mesh: Arc<Mesh2D>,
    fs: ForwardSolve,
    thetas: Vec<f64>,
}

fn setup(h: f64) -> Setup {
    setup_with(params(), h)
}

fn setup_with(p: ShapeParams, h: f64) -> Setup {
    let sc = scenario(h, 1.0);
    let mesh = Arc::new(Mesh2D::generate(&p.curves().unwrap(), sc.radius, h).unwrap());
    let fs = ForwardSolve::new(&mesh, &sc, sc.omegas[0], &[0]).unwrap();
    let thetas = sc.measurement_angles();
    Setup { sc, p, mesh, fs, thetas }
}

/// Samples after moving parameter `n` by `delta`, on the morphed mesh.
fn shifted(s: &Setup, n: usize, delta: f64) -> Vec<[C; 2]> {
    let mut q = s.p.clone();
    q.lambdas[0][n - 1] += delta;
    let m = Arc::new(s.mesh.morph(&q.curves().unwrap()).unwrap());
    ForwardSolve::new(&m, &s.sc, s.sc.omegas[0], &[0]).unwrap().samples(0, &s.thetas)
}

#[test]
fn domain_derivative_matches_finite_differences() {
    let s = setup(0.2);
    let j0 = s.fs.samples(0, &s.thetas);
    let ns = [1, 2, 3, 4, 6];
    let d = frechet_derivative(&s.fs, 0, &s.mesh, 0, &ns, &s.thetas, DerivativeMethod::Domain).unwrap();
    for (k, &n) in ns.iter().enumerate() {
        let err = |delta: f64| {
            let j1 = shifted(&s, n, delta);
            let lin: Vec<[C; 2]> = d[k].iter().map(|v| [v[0] * delta, v[1] * delta]).collect();
            norm(&diff(&diff(&j1, &j0), &lin)) / norm(&lin)
        };
        let (e1, e2) = (err(1e-3), err(5e-4));
        assert!(e1 < 0.02, "n={n}: {e1}");
        assert!((0.4..=0.6).contains(&(e2 / e1)), "n={n}: {e1} {e2}");
    }
}

#[test]
fn transmission_derivative_converges_to_domain_derivative() {
    let mut gaps = Vec::new();
    for h in [0.3, 0.15] {
        let s = setup(h);
        let ns = [1, 3];
        let t = frechet_derivative(&s.fs, 0, &s.mesh, 0, &ns, &s.thetas, DerivativeMethod::Transmission).unwrap();
        let d = frechet_derivative(&s.fs, 0, &s.mesh, 0, &ns, &s.thetas, DerivativeMethod::Domain).unwrap();
        gaps.push((0..2).map(|k| norm(&diff(&t[k], &d[k])) / norm(&d[k])).fold(0.0, f64::max));
    }
    assert!(gaps[1] < 0.7 * gaps[0], "{gaps:?}");
    assert!(gaps[1] < 0.2, "{gaps:?}");
}

#[test]
fn derivative_is_linear_in_the_boundary_velocity() {
    let s = setup(0.3);
    let a = directional_derivative(&s.fs, 0, 0, &|th| perturbation_field(3, th), &s.thetas).unwrap();
    let b = directional_derivative(&s.fs, 0, 0, &|th| perturbation_field(4, th), &s.thetas).unwrap();
    let ab = directional_derivative(
        &s.fs,
        0,
        0,
        &|th| {
            let (p, q) = (perturbation_field(3, th), perturbation_field(4, th));
            [2.5 * p[0] - 0.5 * q[0], 2.5 * p[1] - 0.5 * q[1]]
        },
        &s.thetas,
    )
    .unwrap();
    let comb: Vec<[C; 2]> = a.iter().zip(&b).map(|(x, y)| [x[0] * 2.5 - y[0] * 0.5, x[1] * 2.5 - y[1] * 0.5]).collect();
    assert!(norm(&diff(&comb, &ab)) <= 1e-10 * norm(&ab));
}

#[test]
fn zero_incident_field_gives_zero_derivative() {
    let sc = scenario(0.3, 0.0);
    let p = params();
    let mesh = Arc::new(Mesh2D::generate(&p.curves().unwrap(), sc.radius, sc.h).unwrap());
    let fs = ForwardSolve::new(&mesh, &sc, 2.0, &[0]).unwrap();
    for method in [DerivativeMethod::Transmission, DerivativeMethod::Domain] {
        let d = frechet_derivative(&fs, 0, &mesh, 0, &[1, 3], &sc.measurement_angles(), method).unwrap();
        assert!(d.iter().all(|v| norm(v) == 0.0));
    }
}

#[test]
fn exact_parameters_give_zero_objective() {
    let sc = scenario(0.3, 1.0);
    let p = params();
    let data = forward_map(&p, &sc).unwrap();
    let (f, g) = evaluate_stage(&p, &sc, &data, 0, 0, DerivativeMethod::Transmission).unwrap();
    assert_eq!(f, 0.0);
    assert!(g.iter().flatten().all(|&x| x == 0.0));
}

#[test]
fn objective_scales_quadratically() {
    let sim = vec![[C::new(1.0, 2.0), C::new(-0.5, 0.1)], [C::new(0.3, 0.0), C::new(0.0, 1.0)]];
    let data = vec![[C::new(0.5, 2.0), C::new(-0.5, 0.4)], [C::new(0.0, 0.1), C::new(0.2, 1.0)]];
    let der = vec![vec![vec![[C::new(0.1, 0.2), C::new(1.0, 0.0)], [C::new(0.0, -1.0), C::new(0.3, 0.3)]]]];
    let (f, g) = objective_and_gradient(&sim, &data, &der);
    let c = 3.0;
    let sc = |v: &Vec<[C; 2]>| v.iter().map(|p| [p[0] * c, p[1] * c]).collect::<Vec<_>>();
    let der_c = vec![vec![sc(&der[0][0])]];
    let (fc, gc) = objective_and_gradient(&sc(&sim), &sc(&data), &der_c);
    assert!((fc - c * c * f).abs() <= 1e-12 * fc);
    assert!((gc[0][0] - c * c * g[0][0]).abs() <= 1e-12 * gc[0][0].abs());
}

#[test]
fn gradient_matches_finite_differences_of_the_objective() {
    // Centre, constant radius and cos/sin modes up to m = 3.
    let p = ShapeParams::new(3, vec![vec![0.1, -0.05, 0.8, 0.1, 0.0, 0.0, 0.05, 0.03, -0.02]]).unwrap();
    let s = setup_with(p, 0.2);
    // Data from a slightly different shape, on the same mesh topology.
    let mut truth = s.p.clone();
    truth.lambdas[0][2] += 0.05;
    truth.lambdas[0][0] -= 0.03;
    let tm = Arc::new(s.mesh.morph(&truth.curves().unwrap()).unwrap());
    let data = ForwardSolve::new(&tm, &s.sc, 2.0, &[0]).unwrap().samples(0, &s.thetas);
    let ns: Vec<usize> = (1..=9).collect();
    let d = frechet_derivative(&s.fs, 0, &s.mesh, 0, &ns, &s.thetas, DerivativeMethod::Domain).unwrap();
    let (_, g) = objective_and_gradient(&s.fs.samples(0, &s.thetas), &data, &[d]);
    let f_at = |n: usize, delta: f64| {
        let j = shifted(&s, n, delta);
        0.5 * norm(&diff(&j, &data)).powi(2)
    };
    for n in ns {
        let delta = 1e-3;
        let fd = (f_at(n, delta) - f_at(n, -delta)) / (2.0 * delta);
        assert!((fd - g[0][n - 1]).abs() < 0.02 * g[0][n - 1].abs().max(1e-3), "n={n}: {fd} {}", g[0][n - 1]);
    }
}

#[test]
fn background_only_forward_map_is_the_incident_field() {
    let mut sc = scenario(0.12, 1.0);
    sc.materials.clear();
    let p = ShapeParams::new(2, vec![]).unwrap();
    let data = forward_map(&p, &sc).unwrap();
    let inc = sc.incident(0);
    let exact: Vec<[C; 2]> = data
        .thetas
        .iter()
        .map(|&t| inc.evaluate(&sc.background, 2.0, [2.0 * t.cos(), 2.0 * t.sin()]).unwrap().u)
        .collect();
    let e = norm(&diff(&data.values[0][0], &exact)) / norm(&exact);
    assert!(e < 1e-2, "{e}");
}

#[test]
fn exact_initial_guess_is_stationary() {
    let mut sc = scenario(0.3, 1.0);
    sc.materials.push(sc.materials[0]);
    let p = ShapeParams::circles(&[[-0.8, 0.0], [0.8, 0.3]], 0.4, 1);
    let data = forward_map(&p, &sc).unwrap();
    let opts = DescentOptions { steps: 2, ..Default::default() };
    let res = descend(&p, &data, &sc, &opts, |_| {}).unwrap();
    assert_eq!(res.final_params, p);
    assert_eq!(res.rerror, vec![0.0, 0.0]);
    assert_eq!(res.records.len(), 2);
}

#[test]
fn descent_log_records_are_versioned_json() {
    let sc = scenario(0.3, 1.0);
    let truth = params();
    let data = forward_map(&truth, &sc).unwrap();
    let init = ShapeParams::circles(&[[0.0, 0.0]], 0.7, 2);
    let mut lines = Vec::new();
    let opts = DescentOptions { steps: 3, ..Default::default() };
    let res = descend(&init, &data, &sc, &opts, |r| lines.push(serde_json::to_string(r).unwrap())).unwrap();
    assert_eq!(lines.len(), 3);
    for (l, r) in lines.iter().zip(&res.records) {
        let back: IterationRecord = serde_json::from_str(l).unwrap();
        assert_eq!(&back, r);
        assert_eq!(back.schema, LOG_SCHEMA);
    }
    assert!(res.rerror[1] < res.rerror[0]);
}

#[test]
fn feasibility_rules() {
    assert!(ShapeParams::new(2, vec![vec![0.0; 6]]).is_err());
    let small = ShapeParams::circles(&[[0.0, 0.0]], 0.05, 1);
    assert!(small.check_feasible(2.0, 0.1).is_err());
    let far = ShapeParams::circles(&[[1.5, 0.0]], 0.3, 1);
    assert!(far.check_feasible(2.0, 0.1).is_err());
    let overlap = ShapeParams::circles(&[[0.0, 0.0], [0.3, 0.0]], 0.3, 1);
    assert!(overlap.check_feasible(2.0, 0.1).is_err());
    let ok = ShapeParams::circles(&[[-0.6, 0.0], [0.6, 0.0]], 0.3, 1);
    assert!(ok.check_feasible(2.0, 0.1).is_ok());
}

#[test]
fn fitted_truth_curves() {
    let e = ellipse([0.0, 0.0], 1.2, 0.7, 0.5, 32).unwrap();
    let exact = std::f64::consts::PI * 1.2 * 0.7;
    assert!((e.area() - exact).abs() < 1e-4 * exact);
    let k = kite([0.0, 0.0], 1.0, 32).unwrap();
    // Area of the kite: π · 1.5.
    assert!((k.area() - 1.5 * std::f64::consts::PI).abs() < 2e-3 * k.area(), "{}", k.area());
}

#[test]
fn translating_obstacle_and_source_translates_the_scattered_field() {
    use elastoscat::fem::{assemble, Problem};
    use elastoscat::incident::IncidentField;
    use elastoscat::mesh::StarCurve;
    let sc = scenario(0.1, 1.0);
    let field = |center: [f64; 2], source: [f64; 2], pts: &[[f64; 2]]| -> Vec<[C; 2]> {
        let mesh = Arc::new(Mesh2D::generate(&[StarCurve::circle(center, 0.5)], 2.5, 0.1).unwrap());
        let prob = Problem {
            background: sc.background,
            obstacles: sc.materials.clone(),
            omega: 2.0,
            n_trunc: None,
        };
        let inc = IncidentField::PointSource {
            source,
            amplitude: [C::new(1.0, 0.0), C::new(0.0, 1.0)],
        };
        let sol = assemble(&mesh, &prob).unwrap().solve_scattering(&inc).unwrap();
        pts.iter()
            .map(|&x| {
                let (t, b) = mesh.locate(x).unwrap();
                let ui = inc.evaluate(&sc.background, 2.0, x).unwrap().u;
                let mut u = [C::new(0.0, 0.0); 2];
                for (k, &node) in mesh.triangles[t].iter().enumerate() {
                    for c in 0..2 {
                        u[c] += sol.u[node][c] * b[k];
                    }
                }
                [u[0] - ui[0], u[1] - ui[1]]
            })
            .collect()
    };
    let (c0, y0, v) = ([0.3, 0.1], [3.5, 0.5], [-0.4, 0.3]);
    let ring: Vec<[f64; 2]> = (0..24)
        .map(|i| {
            let t = std::f64::consts::PI * i as f64 / 12.0;
            [c0[0] + t.cos(), c0[1] + t.sin()]
        })
        .collect();
    let moved: Vec<[f64; 2]> = ring.iter().map(|x| [x[0] + v[0], x[1] + v[1]]).collect();
    let a = field(c0, y0, &ring);
    let b = field([c0[0] + v[0], c0[1] + v[1]], [y0[0] + v[0], y0[1] + v[1]], &moved);
    let e = norm(&diff(&a, &b)) / norm(&a);
    assert!(e < 0.03, "{e}");
}

#[test]
fn halving_h_from_0_06_changes_5000_rad_per_s_samples_below_one_percent() {
    let bg = IsotropicMedium::new(5.04e9, 6.48e9, 2000.0).unwrap();
    let c = StiffnessTensor2D::new(6e10, 8e10, 2e10, 21e10, 10e10, 30e10).unwrap();
    let mat = Material::new(c, C::new(2400.0, 0.0)).unwrap();
    let truth = vec![
        kite([-2.0, 1.2], 0.9, 32).unwrap(),
        ellipse([1.8, -1.5], 1.2, 0.7, std::f64::consts::FRAC_PI_6, 32).unwrap(),
    ];
    let sc = Scenario {
        background: bg,
        materials: vec![mat, mat],
        radius: 5.0,
        h: 0.06,
        n_trunc: None,
        omegas: vec![5000.0],
        directions: vec![[1.0, 0.0], [0.0, 1.0]],
        amplitude: [C::new(1.4, 0.0), C::new(1.4, 0.0)],
        n_mea: 64,
    };
    let coarse = synthesize_data(&truth, &sc, 1.0, 0).unwrap();
    let fine = synthesize_data(&truth, &sc, 2.0, 0).unwrap();
    let d = fine.distance(&coarse) / fine.norm();
    println!("relative change under h -> h/2: {d:.4}");
    assert!(d < 0.01, "{d}");
}

#[test]
fn backtracking_descent_never_increases_the_objective_within_a_direction() {
    let mut sc = scenario(0.2, 1.0);
    sc.omegas = vec![1.0, 2.0];
    sc.directions = vec![[1.0, 0.0], [0.0, 1.0]];
    let truth = ShapeParams::new(1, vec![vec![0.2, -0.1, 0.7, 0.1, 0.05]]).unwrap();
    let data = synthesize_data(&truth.curves().unwrap(), &sc, 2.0, 8).unwrap();
    let init = ShapeParams::circles(&[[0.0, 0.0]], 0.5, 1);
    // A step far above the default so that backtracking has work to do.
    let opts = DescentOptions {
        steps: 4,
        step_factor: 0.5,
        backtrack: true,
        ..Default::default()
    };
    let res = descend(&init, &data, &sc, &opts, |_| {}).unwrap();
    assert!(res.aborted.is_none());
    assert!(res.records.iter().any(|r| r.halvings > 0));
    for w in res.records.windows(2) {
        if (w[0].stage, w[0].direction) == (w[1].stage, w[1].direction) {
            assert!(w[1].objective <= w[0].objective * (1.0 + 1e-12), "{} -> {}", w[0].objective, w[1].objective);
        }
    }
}

#[test]
fn shift_derivative_is_antisymmetric_under_reflection() {
    use elastoscat::material::IsotropicMedium as Iso;
    let mut sc = scenario(0.1, 1.0);
    sc.materials = vec![Iso::new(2.0, 3.0, 3.0).unwrap().as_material()];
    // The S part d⊥e^{ik_s x} flips sign under the reflection; keep P only.
    sc.amplitude = [C::new(1.0, 0.0), C::new(0.0, 0.0)];
    let p = ShapeParams::circles(&[[0.0, 0.0]], 0.8, 1);
    let mesh = Arc::new(Mesh2D::generate(&p.curves().unwrap(), sc.radius, sc.h).unwrap());
    let fs = ForwardSolve::new(&mesh, &sc, 2.0, &[0]).unwrap();
    let th = sc.measurement_angles();
    // Incidence along x: reflecting y → −y maps a y-shift to its negative,
    // so D(−θ) = −(D₁(θ), −D₂(θ)).
    let d = frechet_derivative(&fs, 0, &mesh, 0, &[2], &th, DerivativeMethod::Domain).unwrap();
    let n = th.len();
    let mirrored: Vec<[C; 2]> = (0..n).map(|i| {
        let q = d[0][(n - i) % n];
        [-q[0], q[1]]
    }).collect();
    let e = norm(&diff(&d[0], &mirrored)) / norm(&d[0]);
    assert!(e < 0.05, "{e}");
}

#[test]
fn off_centre_circle_recovers_an_ellipse() {
    let mut sc = scenario(0.1, 1.0);
    sc.radius = 2.5;
    sc.omegas = vec![1.0, 2.0, 3.0];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    sc.directions = vec![[1.0, 0.0], [0.0, 1.0], [-s, s], [-s, -s]];
    let truth = ellipse([0.3, -0.2], 0.8, 0.5, 0.4, 16).unwrap();
    let data = synthesize_data(std::slice::from_ref(&truth), &sc, 2.0, 8).unwrap();
    let init = ShapeParams::circles(&[[-0.1, 0.2]], 0.5, 4);
    let res = descend(&init, &data, &sc, &DescentOptions::default(), |_| {}).unwrap();
    let fin = res.final_params.curves().unwrap();
    let sd = elastoscat::mesh::symmetric_difference_area(&fin[0], &truth, 1000) / truth.area();
    println!("RError {:?}, symmetric difference {sd:.4}", res.rerror);
    assert!(sd < 0.05, "{sd}");
}
