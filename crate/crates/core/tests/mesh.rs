use elastoscat::mesh::*;
use proptest::prelude::*;

fn rounded_triangle() -> StarCurve {
    // (2 + 0.5 cos 3t)(cos t, sin t)
    StarCurve::new([0.0, 0.0], vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0]).unwrap()
}

fn kite_and_ellipse() -> Vec<StarCurve> {
    vec![
        StarCurve::new([-1.5, 1.0], vec![0.8, 0.2, 0.0, 0.0, 0.1]).unwrap(),
        StarCurve::new([1.6, -1.2], vec![0.7, 0.0, 0.0, 0.2, 0.0]).unwrap(),
    ]
}

fn check_outer(m: &Mesh2D) {
    let nb = m.outer.len();
    for (i, &v) in m.outer.iter().enumerate() {
        let p = m.nodes[v];
        let th = std::f64::consts::TAU * i as f64 / nb as f64;
        assert!((p[0].hypot(p[1]) - m.radius).abs() < 1e-12);
        assert!((p[0] - m.radius * th.cos()).abs() < 1e-12 && (p[1] - m.radius * th.sin()).abs() < 1e-12);
    }
}

#[test]
fn unit_circle_in_b2() {
    let h = 0.43;
    let m = Mesh2D::generate(&[StarCurve::circle([0.0, 0.0], 1.0)], 2.0, h).unwrap();
    m.validate().unwrap();
    assert!(m.tags_match_curves());
    check_outer(&m);
    for &v in &m.interfaces[0].nodes {
        let p = m.nodes[v];
        assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
    }
    assert!(m.max_diameter() <= 1.5 * h);
    assert!(m.tags.iter().any(|&t| t == 1) && m.tags.iter().any(|&t| t == 0));
}

#[test]
fn empty_curve_list_gives_background_disk() {
    let m = Mesh2D::generate(&[], 2.0, 0.3).unwrap();
    m.validate().unwrap();
    assert!(m.tags.iter().all(|&t| t == 0));
    assert!(m.max_diameter() <= 1.5 * 0.3);
    let area: f64 = (0..m.triangles.len()).map(|t| m.area(t)).sum();
    let nb = m.outer.len() as f64;
    let polygon = 0.5 * nb * 4.0 * (std::f64::consts::TAU / nb).sin();
    assert!((area - polygon).abs() < 1e-12);
}

#[test]
fn rounded_triangle_in_b5() {
    for h in [0.5, 0.35] {
        let m = Mesh2D::generate(&[rounded_triangle()], 5.0, h).unwrap();
        m.validate().unwrap();
        assert!(m.tags_match_curves());
        assert!(m.max_diameter() <= 1.5 * h);
        assert!(m.min_angle() > 15f64.to_radians());
    }
}

#[test]
fn two_obstacles() {
    let m = Mesh2D::generate(&kite_and_ellipse(), 5.0, 0.4).unwrap();
    m.validate().unwrap();
    assert!(m.tags_match_curves());
    assert!(m.max_diameter() <= 1.5 * 0.4);
    for j in 1..=2 {
        let area: f64 = (0..m.triangles.len()).filter(|&t| m.tags[t] == j).map(|t| m.area(t)).sum();
        let ring: Vec<[f64; 2]> = m.interfaces[j - 1].nodes.iter().map(|&v| m.nodes[v]).collect();
        let n = ring.len();
        let poly: f64 = (0..n)
            .map(|i| 0.5 * (ring[i][0] * ring[(i + 1) % n][1] - ring[(i + 1) % n][0] * ring[i][1]))
            .sum();
        assert!((area - poly).abs() < 1e-12, "{area} {poly}");
        // Inscribed polygon: area deficit O(h²).
        let exact = m.curves[j - 1].area();
        assert!(area < exact && exact - area < 0.06 * exact, "{area} {exact}");
    }
}

#[test]
fn refinement_contract() {
    let m = Mesh2D::generate(&[rounded_triangle()], 3.0, 0.3).unwrap();
    let f = m.refine();
    f.validate().unwrap();
    assert_eq!(f.triangles.len(), 4 * m.triangles.len());
    let edges = (m.triangles.len() * 3 + m.outer.len()) / 2;
    assert_eq!(f.nodes.len(), m.nodes.len() + edges);
    let ratio = f.max_diameter() / m.max_diameter();
    assert!((0.5..=0.75).contains(&ratio), "{ratio}");
    assert_eq!(f.outer.len(), 2 * m.outer.len());

    let c = Mesh2D::generate(&[StarCurve::circle([0.0, 0.0], 1.0)], 2.0, 0.43).unwrap();
    let c2 = c.refine().refine();
    c2.validate().unwrap();
    check_outer(&c2);
    for r in &c2.interfaces {
        for &v in &r.nodes {
            let p = c2.nodes[v];
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn deterministic() {
    let a = Mesh2D::generate(&kite_and_ellipse(), 5.0, 0.45).unwrap();
    let b = Mesh2D::generate(&kite_and_ellipse(), 5.0, 0.45).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    assert_eq!(a, b);
}

#[test]
fn geometry_errors() {
    let big = StarCurve::circle([0.0, 0.0], 2.5);
    assert!(Mesh2D::generate(&[big], 2.0, 0.3).is_err());
    let a = StarCurve::circle([0.0, 0.0], 1.0);
    let b = StarCurve::circle([0.5, 0.0], 1.0);
    assert!(Mesh2D::generate(&[a.clone(), b], 4.0, 0.3).is_err());
    let inner = StarCurve::circle([0.1, 0.0], 0.3);
    assert!(Mesh2D::generate(&[a, inner], 4.0, 0.3).is_err());
    assert!(StarCurve::new([0.0, 0.0], vec![0.5, 1.0, 0.0]).is_err());
    assert!(Mesh2D::generate(&[], 2.0, 0.6).is_err());
}

#[test]
fn export_format() {
    let m = Mesh2D::generate(&[StarCurve::circle([0.0, 0.0], 1.0)], 2.0, 0.43).unwrap();
    let s = m.to_text();
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("# elastoscat mesh v1"));
    assert_eq!(lines.next(), Some(format!("nodes {}", m.nodes.len()).as_str()));
    assert_eq!(s.lines().count(), 4 + m.nodes.len() + m.triangles.len() + m.outer.len());
}

#[test]
fn morph_moves_interface_onto_new_curve() {
    let curves = kite_and_ellipse();
    let m = Mesh2D::generate(&curves, 5.0, 0.4).unwrap();
    let mut new = curves.clone();
    new[0].center[0] += 0.05;
    new[1].coeffs[0] += 0.04;
    new[1].coeffs[3] -= 0.03;
    let g = m.morph(&new).unwrap();
    g.validate().unwrap();
    for (j, r) in g.interfaces.iter().enumerate() {
        for (&v, &th) in r.nodes.iter().zip(&r.thetas) {
            let p = new[j].point(th);
            assert!((g.nodes[v][0] - p[0]).abs() < 1e-13 && (g.nodes[v][1] - p[1]).abs() < 1e-13);
        }
    }
    assert_eq!(g.outer, m.outer);
    for &v in &g.outer {
        assert_eq!(g.nodes[v], m.nodes[v]);
    }
    // Morphing onto the same curves is the identity.
    let same = m.morph(&curves).unwrap();
    for (a, b) in same.nodes.iter().zip(&m.nodes) {
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }
}

#[test]
fn velocity_is_derivative_of_morph() {
    let curves = kite_and_ellipse();
    let m = Mesh2D::generate(&curves, 5.0, 0.4).unwrap();
    let d = 1e-6;
    for l in 0..2 {
        let np = curves[l].params().len();
        for n in 1..=np {
            let v = m.velocity(l, n);
            let shifted = |s: f64| {
                let mut c = curves.clone();
                let mut p = c[l].params();
                p[n - 1] += s;
                c[l] = StarCurve::from_params(&p).unwrap();
                m.morph(&c).unwrap()
            };
            let (a, b) = (shifted(d), shifted(-d));
            for k in 0..m.nodes.len() {
                for i in 0..2 {
                    let fd = (a.nodes[k][i] - b.nodes[k][i]) / (2.0 * d);
                    assert!((fd - v[k][i]).abs() < 1e-8, "l={l} n={n} node={k} {fd} {}", v[k][i]);
                }
            }
        }
    }
}

#[test]
fn symmetric_difference_of_concentric_circles() {
    let a = StarCurve::circle([0.0, 0.0], 1.0);
    let b = StarCurve::circle([0.0, 0.0], 1.2);
    let want = std::f64::consts::PI * (1.44 - 1.0);
    let got = symmetric_difference_area(&a, &b, 800);
    assert!((got - want).abs() < 0.01 * want, "{got} {want}");
    assert_eq!(symmetric_difference_area(&a, &a, 200), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn random_star_curves_give_valid_meshes(
        a0 in 0.8f64..1.4,
        a1 in -0.15f64..0.15,
        a2 in -0.15f64..0.15,
        a3 in -0.1f64..0.1,
        a4 in -0.1f64..0.1,
        cx in -0.4f64..0.4,
        h in 0.2f64..0.45,
    ) {
        let c = StarCurve::new([cx, 0.0], vec![a0, a1, a2, a3, a4]).unwrap();
        let m = Mesh2D::generate(&[c], 2.5, h).unwrap();
        prop_assert!(m.validate().is_ok());
        prop_assert!(m.max_diameter() <= 1.5 * h);
        let f = m.refine();
        prop_assert!(f.validate().is_ok());
    }
}
