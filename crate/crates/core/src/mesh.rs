//! Star-shaped curves and interface-fitted triangulations of `B_R`.
//!
//! Nodes on `Γ_R` sit at `θ_i = 2πi/N_b`; interface nodes lie on the exact
//! curves, so interfaces are resolved by inscribed polygons. Refinement
//! splits every triangle into four and snaps new boundary midpoints back
//! onto the exact curves.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::{Error, Result};

const CURVE_SAMPLES: usize = 4096;

/// `γ(θ) = c + r(θ)(cos θ, sin θ)`, with
/// `r(θ) = α₀ + Σ_{m=1}^{M} (α_{2m−1} cos mθ + α_{2m} sin mθ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StarCurve {
    pub center: [f64; 2],
    /// `α₀, α₁, …, α_{2M}`.
    pub coeffs: Vec<f64>,
}

impl StarCurve {
    pub fn new(center: [f64; 2], coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::Geometry(format!(
                "radial series needs 2M+1 coefficients, got {}",
                coeffs.len()
            )));
        }
        let c = Self { center, coeffs };
        c.validate_positive()?;
        Ok(c)
    }

    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Self {
            center,
            coeffs: vec![radius],
        }
    }

    /// Parameter vector `(a₁, a₂, α₀, …, α_{2M})`.
    pub fn from_params(params: &[f64]) -> Result<Self> {
        if params.len() < 3 {
            return Err(Error::Geometry("shape parameters need at least (a₁, a₂, α₀)".into()));
        }
        Self::new([params[0], params[1]], params[2..].to_vec())
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = vec![self.center[0], self.center[1]];
        p.extend_from_slice(&self.coeffs);
        p
    }

    /// Truncation order `M`.
    pub fn order(&self) -> usize {
        self.coeffs.len() / 2
    }

    /// Same curve with the series padded by zeros to order `m`.
    pub fn with_order(&self, m: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize((2 * m + 1).max(c.len()), 0.0);
        Self {
            center: self.center,
            coeffs: c,
        }
    }

    pub fn radius(&self, theta: f64) -> f64 {
        let mut r = self.coeffs[0];
        for m in 1..=self.order() {
            let (s, c) = (m as f64 * theta).sin_cos();
            r += self.coeffs[2 * m - 1] * c + self.coeffs[2 * m] * s;
        }
        r
    }

    pub fn radius_derivative(&self, theta: f64) -> f64 {
        let mut d = 0.0;
        for m in 1..=self.order() {
            let mf = m as f64;
            let (s, c) = (mf * theta).sin_cos();
            d += mf * (-self.coeffs[2 * m - 1] * s + self.coeffs[2 * m] * c);
        }
        d
    }

    pub fn point(&self, theta: f64) -> [f64; 2] {
        let r = self.radius(theta);
        let (s, c) = theta.sin_cos();
        [self.center[0] + r * c, self.center[1] + r * s]
    }

    /// `γ'(θ)`.
    pub fn tangent(&self, theta: f64) -> [f64; 2] {
        let r = self.radius(theta);
        let dr = self.radius_derivative(theta);
        let (s, c) = theta.sin_cos();
        [dr * c - r * s, dr * s + r * c]
    }

    /// Outward unit normal.
    pub fn normal(&self, theta: f64) -> [f64; 2] {
        let t = self.tangent(theta);
        let n = t[0].hypot(t[1]);
        [t[1] / n, -t[0] / n]
    }

    /// Polar angle of `x` about the center.
    pub fn angle_of(&self, x: [f64; 2]) -> f64 {
        (x[1] - self.center[1]).atan2(x[0] - self.center[0])
    }

    /// `|x − c| / r(θ(x))`: below 1 inside, above 1 outside.
    pub fn radial_coordinate(&self, x: [f64; 2]) -> f64 {
        let d = (x[0] - self.center[0]).hypot(x[1] - self.center[1]);
        d / self.radius(self.angle_of(x))
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.radial_coordinate(x) < 1.0
    }

    /// `½∫ r² dθ`, exact for the truncated series.
    pub fn area(&self) -> f64 {
        let a0 = self.coeffs[0];
        let rest: f64 = self.coeffs[1..].iter().map(|a| a * a).sum();
        PI * a0 * a0 + 0.5 * PI * rest
    }

    pub fn min_radius(&self) -> f64 {
        (0..CURVE_SAMPLES)
            .map(|i| self.radius(TAU * i as f64 / CURVE_SAMPLES as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `|γ(θ)|` over the sample grid.
    pub fn max_extent(&self) -> f64 {
        (0..CURVE_SAMPLES)
            .map(|i| {
                let p = self.point(TAU * i as f64 / CURVE_SAMPLES as f64);
                p[0].hypot(p[1])
            })
            .fold(0.0, f64::max)
    }

    fn validate_positive(&self) -> Result<()> {
        if !self.coeffs.iter().all(|a| a.is_finite()) || !self.center.iter().all(|a| a.is_finite()) {
            return Err(Error::Geometry("non-finite curve parameters".into()));
        }
        let rmin = self.min_radius();
        if !(rmin > 0.0) {
            return Err(Error::Geometry(format!("radial function not positive (min r = {rmin})")));
        }
        Ok(())
    }

    /// `n` points at equal parameter spacing.
    pub fn polygon(&self, n: usize) -> Vec<[f64; 2]> {
        (0..n).map(|i| self.point(TAU * i as f64 / n as f64)).collect()
    }

    /// Parameters of `n` points equidistributed in arclength, starting at `θ = 0`.
    pub fn arclength_thetas(&self, n: usize) -> Vec<f64> {
        let m = CURVE_SAMPLES;
        let mut s = vec![0.0; m + 1];
        let mut prev = self.point(0.0);
        for i in 1..=m {
            let p = self.point(TAU * i as f64 / m as f64);
            s[i] = s[i - 1] + (p[0] - prev[0]).hypot(p[1] - prev[1]);
            prev = p;
        }
        let total = s[m];
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        for j in 0..n {
            let target = total * j as f64 / n as f64;
            while k < m && s[k + 1] < target {
                k += 1;
            }
            let frac = if s[k + 1] > s[k] { (target - s[k]) / (s[k + 1] - s[k]) } else { 0.0 };
            out.push(TAU * (k as f64 + frac) / m as f64);
        }
        out
    }

    pub fn perimeter(&self) -> f64 {
        let p = self.polygon(CURVE_SAMPLES);
        (0..p.len())
            .map(|i| {
                let q = p[(i + 1) % p.len()];
                (q[0] - p[i][0]).hypot(q[1] - p[i][1])
            })
            .sum()
    }

    /// `∂γ/∂Λ_n` for the parameter index `n ∈ 1..=2M+3` at `θ`.
    pub fn param_derivative(&self, n: usize, theta: f64) -> [f64; 2] {
        perturbation_field(n, theta)
    }
}

/// Basis fields `h_n(θ) = ∂γ/∂Λ_n`: shifts for `n = 1, 2`, then
/// `φ(θ)(cos θ, sin θ)` with `φ = 1, cos θ, sin θ, cos 2θ, …`.
pub fn perturbation_field(n: usize, theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    let phi = match n {
        1 => return [1.0, 0.0],
        2 => return [0.0, 1.0],
        3 => 1.0,
        _ if n % 2 == 0 => (((n - 2) / 2) as f64 * theta).cos(),
        _ => (((n - 3) / 2) as f64 * theta).sin(),
    };
    [phi * c, phi * s]
}

/// Area of the symmetric difference of two star-shaped regions, by
/// midpoint sampling on an `n × n` grid over their joint bounding box.
pub fn symmetric_difference_area(a: &StarCurve, b: &StarCurve, n: usize) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in [a, b] {
        for p in c.polygon(1024) {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
    }
    let pad = 0.02 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let (x0, y0) = (lo[0] - pad, lo[1] - pad);
    let dx = (hi[0] - lo[0] + 2.0 * pad) / n as f64;
    let dy = (hi[1] - lo[1] + 2.0 * pad) / n as f64;
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..n {
            let p = [x0 + (i as f64 + 0.5) * dx, y0 + (j as f64 + 0.5) * dy];
            if a.contains(p) != b.contains(p) {
                count += 1;
            }
        }
    }
    count as f64 * dx * dy
}

/// Where a node lives; drives refinement snapping and morphing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeKind {
    Background,
    /// Inside obstacle `curve` at star coordinates `x = c + s r(θ)(cos θ, sin θ)`.
    Obstacle { curve: usize, s: f64, theta: f64 },
    Interface { curve: usize, theta: f64 },
    Outer { theta: f64 },
}

/// Ordered nodes of one interface polygon, counter-clockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceRing {
    pub nodes: Vec<usize>,
    pub thetas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh2D {
    pub radius: f64,
    /// Target size the mesh was generated for, halved on refinement.
    pub h: f64,
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    /// 0 for the background, `j` for obstacle `j` (1-based).
    pub tags: Vec<usize>,
    pub kinds: Vec<NodeKind>,
    pub curves: Vec<StarCurve>,
    pub interfaces: Vec<InterfaceRing>,
    /// Nodes on `Γ_R`; entry `i` sits at `θ_i = 2πi/N_b`.
    pub outer: Vec<usize>,
}

fn dist_point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

fn polyline_distance(p: [f64; 2], poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| dist_point_segment(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn polygon_distance(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter().map(|&p| polyline_distance(p, b)).fold(f64::INFINITY, f64::min)
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn wrap_angle(d: f64) -> f64 {
    let mut d = d % TAU;
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    d
}

/// Checks the geometric preconditions shared by generation and morphing.
pub fn check_curves(curves: &[StarCurve], radius: f64) -> Result<()> {
    let polys: Vec<Vec<[f64; 2]>> = curves.iter().map(|c| c.polygon(1024)).collect();
    for (j, c) in curves.iter().enumerate() {
        c.validate_positive()?;
        let ext = c.max_extent();
        if !(ext < radius) {
            return Err(Error::Geometry(format!(
                "curve {} reaches |x| = {ext}, outside B_R with R = {radius}",
                j + 1
            )));
        }
    }
    for a in 0..curves.len() {
        for b in (a + 1)..curves.len() {
            let inside = curves[a].contains(curves[b].center) || curves[b].contains(curves[a].center);
            let d = polygon_distance(&polys[a], &polys[b]);
            if inside || !(d > 0.0) || polys[a].iter().any(|&p| curves[b].contains(p)) {
                return Err(Error::Geometry(format!("curves {} and {} overlap", a + 1, b + 1)));
            }
        }
    }
    Ok(())
}

impl Mesh2D {
    /// Interface-fitted mesh of `B_R` with target size `h`.
    ///
    /// Boundary nodes are spaced `h` along `Γ_R` and along each curve (in
    /// arclength); the interior is filled from a hexagonal lattice kept
    /// at least `0.55h` away from every boundary, triangulated with a
    /// constrained Delaunay triangulation and smoothed.
    pub fn generate(curves: &[StarCurve], radius: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h < radius / 4.0) {
            return Err(Error::Mesh(format!("need 0 < h < R/4, got h = {h}, R = {radius}")));
        }
        check_curves(curves, radius)?;
        let mut nodes: Vec<[f64; 2]> = Vec::new();
        let mut kinds = Vec::new();
        let mut edges: Vec<[usize; 2]> = Vec::new();

        let nb = ((TAU * radius / h).ceil() as usize).max(16);
        let outer: Vec<usize> = (0..nb).collect();
        for i in 0..nb {
            let th = TAU * i as f64 / nb as f64;
            nodes.push([radius * th.cos(), radius * th.sin()]);
            kinds.push(NodeKind::Outer { theta: th });
            edges.push([i, (i + 1) % nb]);
        }

        let mut interfaces = Vec::new();
        let mut polys = Vec::new();
        for (j, c) in curves.iter().enumerate() {
            let n = ((c.perimeter() / h).ceil() as usize).max(8);
            let thetas = c.arclength_thetas(n);
            let start = nodes.len();
            for &th in &thetas {
                nodes.push(c.point(th));
                kinds.push(NodeKind::Interface { curve: j, theta: th });
            }
            for k in 0..n {
                edges.push([start + k, start + (k + 1) % n]);
            }
            polys.push(c.polygon(16 * n));
            interfaces.push(InterfaceRing {
                nodes: (start..start + n).collect(),
                thetas,
            });
        }

        let gap = 0.55 * h;
        let dy = h * 3f64.sqrt() / 2.0;
        let rows = (radius / dy).ceil() as i64;
        let cols = (radius / h).ceil() as i64 + 1;
        for r in -rows..=rows {
            let y = r as f64 * dy;
            let shift = if r.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
            for q in -cols..=cols {
                let p = [q as f64 * h + shift, y];
                if p[0].hypot(p[1]) > radius - gap {
                    continue;
                }
                let near = polys.iter().any(|poly| polyline_distance(p, poly) < gap);
                if near {
                    continue;
                }
                let kind = match curves.iter().position(|c| c.contains(p)) {
                    Some(j) => {
                        let c = &curves[j];
                        NodeKind::Obstacle {
                            curve: j,
                            s: c.radial_coordinate(p),
                            theta: c.angle_of(p),
                        }
                    }
                    None => NodeKind::Background,
                };
                nodes.push(p);
                kinds.push(kind);
            }
        }

        let mut triangles = triangulate(&nodes, edges.clone())?;
        // Split oversized triangles (thin gaps between curves and Γ_R) at the
        // midpoint of their longest unconstrained edge, or at the centroid.
        let constrained: std::collections::HashSet<(usize, usize)> =
            edges.iter().map(|&[a, b]| (a.min(b), a.max(b))).collect();
        for _ in 0..8 {
            let mut extra: Vec<[f64; 2]> = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for tri in &triangles {
                let p = tri.map(|i| nodes[i]);
                let len = |k: usize| {
                    let (a, b) = (p[k], p[(k + 1) % 3]);
                    (a[0] - b[0]).hypot(a[1] - b[1])
                };
                let k = (0..3).max_by(|&a, &b| len(a).total_cmp(&len(b))).expect("three edges");
                if len(k) <= 1.4 * h {
                    continue;
                }
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let q = if constrained.contains(&key) {
                    [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
                } else if seen.insert(key) {
                    [(nodes[a][0] + nodes[b][0]) / 2.0, (nodes[a][1] + nodes[b][1]) / 2.0]
                } else {
                    continue;
                };
                extra.push(q);
            }
            if extra.is_empty() {
                break;
            }
            for q in extra {
                let kind = match curves.iter().position(|c| c.contains(q)) {
                    Some(j) => NodeKind::Obstacle {
                        curve: j,
                        s: curves[j].radial_coordinate(q),
                        theta: curves[j].angle_of(q),
                    },
                    None => NodeKind::Background,
                };
                nodes.push(q);
                kinds.push(kind);
            }
            triangles = triangulate(&nodes, edges.clone())?;
        }
        let mut mesh = Self {
            radius,
            h,
            nodes,
            triangles,
            tags: Vec::new(),
            kinds,
            curves: curves.to_vec(),
            interfaces,
            outer,
        };
        mesh.retag();
        mesh.smooth(4);
        Ok(mesh)
    }

    /// Tags from the discrete interface polygons.
    fn retag(&mut self) {
        let polys: Vec<Vec<[f64; 2]>> = self.interface_polygons();
        self.tags = self
            .triangles
            .iter()
            .map(|t| {
                let c = self.centroid(t);
                polys.iter().position(|p| point_in_polygon(c, p)).map_or(0, |j| j + 1)
            })
            .collect();
    }

    pub fn interface_polygons(&self) -> Vec<Vec<[f64; 2]>> {
        self.interfaces
            .iter()
            .map(|r| r.nodes.iter().map(|&n| self.nodes[n]).collect())
            .collect()
    }

    pub fn centroid(&self, t: &[usize; 3]) -> [f64; 2] {
        let [a, b, c] = t.map(|i| self.nodes[i]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        signed_area(a, b, c)
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        let d = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]);
        d(a, b).max(d(b, c)).max(d(c, a))
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.diameter(t)).fold(0.0, f64::max)
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let p = t.map(|i| self.nodes[i]);
                (0..3)
                    .map(|k| {
                        let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                        let u = [b[0] - a[0], b[1] - a[1]];
                        let v = [c[0] - a[0], c[1] - a[1]];
                        let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                        cos.clamp(-1.0, 1.0).acos()
                    })
                    .fold(PI, f64::min)
            })
            .fold(PI, f64::min)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Angles of the outer ring nodes.
    pub fn outer_thetas(&self) -> Vec<f64> {
        let nb = self.outer.len();
        (0..nb).map(|i| TAU * i as f64 / nb as f64).collect()
    }

    fn node_triangles(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                adj[v].push(t);
            }
        }
        adj
    }

    fn quality(&self, p: [[f64; 2]; 3]) -> f64 {
        let a = signed_area(p[0], p[1], p[2]);
        let l2: f64 = (0..3)
            .map(|k| {
                let (u, v) = (p[k], p[(k + 1) % 3]);
                (u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)
            })
            .sum();
        4.0 * 3f64.sqrt() * a / l2
    }

    /// Laplacian smoothing of free nodes; a move is kept only if it does
    /// not lower the worst quality of the incident triangles.
    fn smooth(&mut self, sweeps: usize) {
        let adj = self.node_triangles();
        let mut nbrs = vec![Vec::new(); self.nodes.len()];
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                nbrs[a].push(b);
                nbrs[b].push(a);
            }
        }
        for l in nbrs.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        for _ in 0..sweeps {
            for v in 0..self.nodes.len() {
                if !matches!(self.kinds[v], NodeKind::Background | NodeKind::Obstacle { .. }) {
                    continue;
                }
                let n = nbrs[v].len() as f64;
                let target = nbrs[v].iter().fold([0.0, 0.0], |acc, &w| {
                    [acc[0] + self.nodes[w][0] / n, acc[1] + self.nodes[w][1] / n]
                });
                let worst = |m: &Self| {
                    adj[v]
                        .iter()
                        .map(|&t| m.quality(m.triangles[t].map(|i| m.nodes[i])))
                        .fold(f64::INFINITY, f64::min)
                };
                let before = worst(self);
                let old = self.nodes[v];
                self.nodes[v] = target;
                let region_ok = match self.kinds[v] {
                    NodeKind::Obstacle { curve, .. } => self.curves[curve].contains(target),
                    _ => !self.curves.iter().any(|c| c.contains(target)) && target[0].hypot(target[1]) < self.radius,
                };
                if !region_ok || worst(self) < before {
                    self.nodes[v] = old;
                }
            }
        }
        for v in 0..self.nodes.len() {
            if let NodeKind::Obstacle { curve, .. } = self.kinds[v] {
                let c = &self.curves[curve];
                let p = self.nodes[v];
                self.kinds[v] = NodeKind::Obstacle {
                    curve,
                    s: c.radial_coordinate(p),
                    theta: c.angle_of(p),
                };
            }
        }
    }

    /// Uniform 1→4 refinement. Midpoints of interface and outer-ring edges
    /// are placed on the exact curves at the mid-parameter.
    pub fn refine(&self) -> Self {
        let mut nodes = self.nodes.clone();
        let mut kinds = self.kinds.clone();
        let nb = self.outer.len();
        let mut ring_pos: HashMap<usize, (usize, usize)> = HashMap::new();
        for (j, r) in self.interfaces.iter().enumerate() {
            for (k, &n) in r.nodes.iter().enumerate() {
                ring_pos.insert(n, (j, k));
            }
        }
        let mut outer_pos: HashMap<usize, usize> = HashMap::new();
        for (i, &n) in self.outer.iter().enumerate() {
            outer_pos.insert(n, i);
        }
        let mut edge_tag: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = edge_tag.entry(key).or_insert(0);
                *e = (*e).max(self.tags[t]);
            }
        }
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut outer_mid = vec![0usize; nb];
        let mut ring_mid: Vec<Vec<usize>> = self.interfaces.iter().map(|r| vec![0; r.nodes.len()]).collect();
        let mut ring_mid_theta: Vec<Vec<f64>> = self.interfaces.iter().map(|r| vec![0.0; r.nodes.len()]).collect();

        let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>, kinds: &mut Vec<NodeKind>| -> usize {
            let key = (a.min(b), a.max(b));
            if let Some(&m) = mid.get(&key) {
                return m;
            }
            let (pa, pb) = (nodes[a], nodes[b]);
            let mut p = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
            let mut kind = None;
            if let (Some(&ia), Some(&ib)) = (outer_pos.get(&a), outer_pos.get(&b)) {
                let (lo, hi) = (ia.min(ib), ia.max(ib));
                let first = if hi - lo == 1 { Some(lo) } else if lo == 0 && hi == nb - 1 { Some(hi) } else { None };
                if let Some(i) = first {
                    let th = PI * (2 * i + 1) as f64 / nb as f64;
                    p = [self.radius * th.cos(), self.radius * th.sin()];
                    kind = Some(NodeKind::Outer { theta: th });
                    outer_mid[i] = nodes.len();
                }
            }
            if kind.is_none() {
                if let (Some(&(ja, ka)), Some(&(jb, kb))) = (ring_pos.get(&a), ring_pos.get(&b)) {
                    let n = self.interfaces[ja].nodes.len();
                    if ja == jb {
                        let first = if (ka + 1) % n == kb {
                            Some(ka)
                        } else if (kb + 1) % n == ka {
                            Some(kb)
                        } else {
                            None
                        };
                        if let Some(k) = first {
                            let r = &self.interfaces[ja];
                            let t0 = r.thetas[k];
                            let t1 = r.thetas[(k + 1) % n];
                            let th = t0 + 0.5 * wrap_angle(t1 - t0);
                            p = self.curves[ja].point(th);
                            kind = Some(NodeKind::Interface { curve: ja, theta: th });
                            ring_mid[ja][k] = nodes.len();
                            ring_mid_theta[ja][k] = th;
                        }
                    }
                }
            }
            let kind = kind.unwrap_or_else(|| {
                let tag = edge_tag[&key];
                if tag > 0 {
                    let c = &self.curves[tag - 1];
                    NodeKind::Obstacle {
                        curve: tag - 1,
                        s: c.radial_coordinate(p),
                        theta: c.angle_of(p),
                    }
                } else {
                    NodeKind::Background
                }
            });
            let m = nodes.len();
            nodes.push(p);
            kinds.push(kind);
            mid.insert(key, m);
            m
        };

        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut tags = Vec::with_capacity(4 * self.triangles.len());
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let ab = midpoint(a, b, &mut nodes, &mut kinds);
            let bc = midpoint(b, c, &mut nodes, &mut kinds);
            let ca = midpoint(c, a, &mut nodes, &mut kinds);
            for tri in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
                triangles.push(tri);
                tags.push(self.tags[t]);
            }
        }
        let mut outer = Vec::with_capacity(2 * nb);
        for i in 0..nb {
            outer.push(self.outer[i]);
            outer.push(outer_mid[i]);
        }
        let interfaces = self
            .interfaces
            .iter()
            .enumerate()
            .map(|(j, r)| {
                let mut nodes_r = Vec::with_capacity(2 * r.nodes.len());
                let mut thetas = Vec::with_capacity(2 * r.nodes.len());
                for k in 0..r.nodes.len() {
                    nodes_r.push(r.nodes[k]);
                    thetas.push(r.thetas[k]);
                    nodes_r.push(ring_mid[j][k]);
                    thetas.push(ring_mid_theta[j][k]);
                }
                InterfaceRing { nodes: nodes_r, thetas }
            })
            .collect();
        Self {
            radius: self.radius,
            h: self.h / 2.0,
            nodes,
            triangles,
            tags,
            kinds,
            curves: self.curves.clone(),
            interfaces,
            outer,
        }
    }

    /// Half-width of the background blending band around each curve:
    /// half the distance to the nearest other curve or to `Γ_R`.
    fn blend_widths(&self) -> Vec<f64> {
        let polys: Vec<Vec<[f64; 2]>> = self.curves.iter().map(|c| c.polygon(512)).collect();
        (0..self.curves.len())
            .map(|j| {
                let mut d = polys[j]
                    .iter()
                    .map(|p| self.radius - p[0].hypot(p[1]))
                    .fold(f64::INFINITY, f64::min);
                for k in 0..self.curves.len() {
                    if k != j {
                        d = d.min(polygon_distance(&polys[j], &polys[k]));
                    }
                }
                0.5 * d
            })
            .collect()
    }

    /// Cubic cutoff `(1−t)²(1+2t)` in the normalised radial distance
    /// outside curve `j`; 1 on the curve, 0 beyond the band.
    fn blend(&self, j: usize, width: f64, x: [f64; 2]) -> (f64, f64) {
        let c = &self.curves[j];
        let th = c.angle_of(x);
        let d = (x[0] - c.center[0]).hypot(x[1] - c.center[1]) - c.radius(th);
        let t = d / width;
        if !(0.0..1.0).contains(&t) {
            return (0.0, th);
        }
        ((1.0 - t) * (1.0 - t) * (1.0 + 2.0 * t), th)
    }

    /// Same topology, nodes moved so that interface `j` follows
    /// `new_curves[j]`. The map is affine in the curve parameters, fixes
    /// `Γ_R`, and is used wherever a mesh must depend smoothly on the
    /// shape.
    pub fn morph(&self, new_curves: &[StarCurve]) -> Result<Self> {
        if new_curves.len() != self.curves.len() {
            return Err(Error::Geometry("morph needs one curve per interface".into()));
        }
        check_curves(new_curves, self.radius)?;
        let widths = self.blend_widths();
        let mut nodes = self.nodes.clone();
        for (v, kind) in self.kinds.iter().enumerate() {
            nodes[v] = match *kind {
                NodeKind::Outer { .. } => self.nodes[v],
                NodeKind::Interface { curve, theta } => new_curves[curve].point(theta),
                NodeKind::Obstacle { curve, s, theta } => {
                    let c = &new_curves[curve];
                    let r = s * c.radius(theta);
                    [c.center[0] + r * theta.cos(), c.center[1] + r * theta.sin()]
                }
                NodeKind::Background => {
                    let x = self.nodes[v];
                    let mut y = x;
                    for j in 0..self.curves.len() {
                        let (chi, th) = self.blend(j, widths[j], x);
                        if chi > 0.0 {
                            let (p0, p1) = (self.curves[j].point(th), new_curves[j].point(th));
                            y[0] += chi * (p1[0] - p0[0]);
                            y[1] += chi * (p1[1] - p0[1]);
                        }
                    }
                    y
                }
            };
        }
        let m = Self {
            nodes,
            curves: new_curves.to_vec(),
            ..self.clone()
        };
        if let Some(t) = (0..m.triangles.len()).find(|&t| !(m.area(t) > 0.0)) {
            return Err(Error::Mesh(format!("morph inverts triangle {t}")));
        }
        Ok(m)
    }

    /// Nodal velocity `∂x/∂Λ_n` of [`Mesh2D::morph`] for parameter `n`
    /// (1-based, `1..=2M+3`) of curve `l`.
    pub fn velocity(&self, l: usize, n: usize) -> Vec<[f64; 2]> {
        let widths = self.blend_widths();
        self.kinds
            .iter()
            .enumerate()
            .map(|(v, kind)| match *kind {
                NodeKind::Outer { .. } => [0.0, 0.0],
                NodeKind::Interface { curve, theta } if curve == l => perturbation_field(n, theta),
                NodeKind::Obstacle { curve, s, theta } if curve == l => {
                    if n <= 2 {
                        perturbation_field(n, theta)
                    } else {
                        let h = perturbation_field(n, theta);
                        [s * h[0], s * h[1]]
                    }
                }
                NodeKind::Background => {
                    let (chi, th) = self.blend(l, widths[l], self.nodes[v]);
                    let h = perturbation_field(n, th);
                    [chi * h[0], chi * h[1]]
                }
                _ => [0.0, 0.0],
            })
            .collect()
    }

    /// Brute-force structural check: orientation, conformity, tags,
    /// outer ring placement.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            if !(self.area(t) > 0.0) {
                return Err(Error::Mesh(format!("triangle {t} has non-positive area")));
            }
        }
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let nb = self.outer.len();
        let mut boundary = 0usize;
        for (&(a, b), &c) in &count {
            match c {
                1 => {
                    boundary += 1;
                    let on_ring = |n| self.outer.contains(&n);
                    if !(on_ring(a) && on_ring(b)) {
                        return Err(Error::Mesh(format!("interior edge ({a}, {b}) has one triangle")));
                    }
                }
                2 => {}
                _ => return Err(Error::Mesh(format!("edge ({a}, {b}) shared by {c} triangles"))),
            }
        }
        if boundary != nb {
            return Err(Error::Mesh(format!("{boundary} boundary edges for {nb} ring nodes")));
        }
        let used = {
            let mut u = vec![false; self.nodes.len()];
            for tri in &self.triangles {
                for &v in tri {
                    u[v] = true;
                }
            }
            u
        };
        if let Some(v) = used.iter().position(|&u| !u) {
            return Err(Error::Mesh(format!("node {v} belongs to no triangle")));
        }
        // Euler characteristic of a disk.
        let chi = self.nodes.len() as i64 - count.len() as i64 + self.triangles.len() as i64;
        if chi != 1 {
            return Err(Error::Mesh(format!("Euler characteristic {chi}, expected 1")));
        }
        for (i, &v) in self.outer.iter().enumerate() {
            let p = self.nodes[v];
            let th = TAU * i as f64 / nb as f64;
            if (p[0].hypot(p[1]) - self.radius).abs() > 1e-12 * self.radius
                || (p[0] - self.radius * th.cos()).abs() > 1e-12 * self.radius
                || (p[1] - self.radius * th.sin()).abs() > 1e-12 * self.radius
            {
                return Err(Error::Mesh(format!("outer node {i} is off its angle")));
            }
        }
        let polys = self.interface_polygons();
        for (t, tri) in self.triangles.iter().enumerate() {
            let c = self.centroid(tri);
            let tag = polys.iter().position(|p| point_in_polygon(c, p)).map_or(0, |j| j + 1);
            if tag != self.tags[t] {
                return Err(Error::Mesh(format!("triangle {t} tagged {} but lies in region {tag}", self.tags[t])));
            }
        }
        Ok(())
    }

    /// Tag agreement against the exact curves instead of their polygons.
    pub fn tags_match_curves(&self) -> bool {
        self.triangles.iter().zip(&self.tags).all(|(tri, &tag)| {
            let c = self.centroid(tri);
            let exact = self.curves.iter().position(|cv| cv.contains(c)).map_or(0, |j| j + 1);
            exact == tag
        })
    }

    /// Plain-text export:
    /// ```text
    /// # elastoscat mesh v1
    /// nodes <N>
    /// <x> <y>            (N lines)
    /// triangles <T>
    /// <a> <b> <c> <tag>  (T lines, 0-based, counter-clockwise)
    /// outer <N_b>
    /// <node>             (N_b lines, at θ_i = 2πi/N_b)
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# elastoscat mesh v1");
        let _ = writeln!(s, "nodes {}", self.nodes.len());
        for p in &self.nodes {
            let _ = writeln!(s, "{:.17e} {:.17e}", p[0], p[1]);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for (t, tag) in self.triangles.iter().zip(&self.tags) {
            let _ = writeln!(s, "{} {} {} {}", t[0], t[1], t[2], tag);
        }
        let _ = writeln!(s, "outer {}", self.outer.len());
        for v in &self.outer {
            let _ = writeln!(s, "{v}");
        }
        s
    }

    /// Index of the triangle containing `x` and its barycentric
    /// coordinates, by linear scan.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let eps = 1e-12;
        for (t, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| self.nodes[i]);
            let area = signed_area(a, b, c);
            let l0 = signed_area(x, b, c) / area;
            let l1 = signed_area(a, x, c) / area;
            let l2 = 1.0 - l0 - l1;
            if l0 >= -eps && l1 >= -eps && l2 >= -eps {
                return Some((t, [l0, l1, l2]));
            }
        }
        None
    }
}

fn triangulate(nodes: &[[f64; 2]], edges: Vec<[usize; 2]>) -> Result<Vec<[usize; 3]>> {
    let pts: Vec<Point2<f64>> = nodes.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let mut conflict = None;
    let cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::try_bulk_load_cdt(pts, edges, |e| conflict = Some(e))
            .map_err(|e| Error::Mesh(format!("triangulation failed: {e:?}")))?;
    if let Some(e) = conflict {
        return Err(Error::Geometry(format!("boundary segments {e:?} intersect")));
    }
    if cdt.num_vertices() != nodes.len() {
        return Err(Error::Mesh("duplicate mesh nodes".into()));
    }
    let mut tris = Vec::with_capacity(cdt.num_inner_faces());
    for f in cdt.inner_faces() {
        let v = f.vertices().map(|h| h.fix().index());
        let (a, b, c) = (nodes[v[0]], nodes[v[1]], nodes[v[2]]);
        if signed_area(a, b, c) > 0.0 {
            tris.push(v);
        } else {
            tris.push([v[0], v[2], v[1]]);
        }
    }
    Ok(tris)
}
