//! P1 finite elements for the Navier system on an interface-fitted mesh of
//! `B_R`, closed by the DtN map on the outer ring.
//!
//! Dof `2i + c` is component `c` at node `i`. The nodal unknown on an
//! interface is the background-side value; the obstacle side carries an
//! additional prescribed jump (zero for the scattering problem), which is
//! eliminated into the right-hand side.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use rayon::prelude::*;

use crate::dtn2d::{BoundaryTrace, DtnOperator, DtnParams};
use crate::incident::{traction, FieldValue, IncidentField};
use crate::material::{IsotropicMedium, Material, StiffnessTensor2D};
use crate::mesh::{signed_area, Mesh2D};
use crate::{Error, Result};

pub use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Degree-4 symmetric rule on the reference triangle: barycentric points
/// and weights summing to 1.
const DUNAVANT4: [([f64; 3], f64); 6] = {
    const W1: f64 = 0.223_381_589_678_011;
    const A1: f64 = 0.445_948_490_915_965;
    const B1: f64 = 0.108_103_018_168_070;
    const W2: f64 = 0.109_951_743_655_322;
    const A2: f64 = 0.091_576_213_509_771;
    const B2: f64 = 0.816_847_572_980_459;
    [
        ([A1, A1, B1], W1),
        ([A1, B1, A1], W1),
        ([B1, A1, A1], W1),
        ([A2, A2, B2], W2),
        ([A2, B2, A2], W2),
        ([B2, A2, A2], W2),
    ]
};

/// 3-point Gauss rule on `[0, 1]`.
pub(crate) const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Physical data of one forward problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub background: IsotropicMedium<f64>,
    /// Material of obstacle `j` (tag `j + 1`).
    pub obstacles: Vec<Material<f64>>,
    pub omega: f64,
    /// DtN truncation; defaults to `⌈k_s R⌉ + 16` clamped below the
    /// sampling limit of the outer ring.
    pub n_trunc: Option<usize>,
}

impl Problem {
    pub fn material(&self, tag: usize) -> Result<Material<f64>> {
        if tag == 0 {
            Ok(self.background.as_material())
        } else {
            self.obstacles
                .get(tag - 1)
                .copied()
                .ok_or_else(|| Error::InvalidParameter(format!("no material for region tag {tag}")))
        }
    }
}

/// Gradients of the barycentric coordinates (`g[a] = ∇λ_a`) and area.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub area: f64,
    pub grad: [[f64; 2]; 3],
}

pub fn element_geometry(p: [[f64; 2]; 3]) -> ElementGeometry {
    let area = signed_area(p[0], p[1], p[2]);
    let inv = 1.0 / (2.0 * area);
    let grad = std::array::from_fn(|a| {
        let (q, r) = (p[(a + 1) % 3], p[(a + 2) % 3]);
        [(q[1] - r[1]) * inv, (r[0] - q[0]) * inv]
    });
    ElementGeometry { area, grad }
}

fn tensor(c: &StiffnessTensor2D<f64>) -> [[[[f64; 2]; 2]; 2]; 2] {
    std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| std::array::from_fn(|l| c.component(i, j, k, l)))))
}

/// `(C ∇u)_{ij}` with `g[k][l] = ∂_l u_k`.
fn stress(c: &[[[[f64; 2]; 2]; 2]; 2], g: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = ZERO;
            for k in 0..2 {
                for l in 0..2 {
                    s += g[k][l] * c[i][j][k][l];
                }
            }
            s
        })
    })
}

/// 6×6 element matrix `∫ C∇φ:∇ψ − ω²ρ φ·ψ`, row = test dof `2a+i`.
fn element_matrix(geo: &ElementGeometry, c: &[[[[f64; 2]; 2]; 2]; 2], rho: C64, omega: f64) -> [[C64; 6]; 6] {
    let mut k = [[ZERO; 6]; 6];
    let g = &geo.grad;
    for a in 0..3 {
        for i in 0..2 {
            for b in 0..3 {
                for kk in 0..2 {
                    let mut s = 0.0;
                    for j in 0..2 {
                        for l in 0..2 {
                            s += c[i][j][kk][l] * g[a][j] * g[b][l];
                        }
                    }
                    let mut v = C64::new(s * geo.area, 0.0);
                    if i == kk {
                        let m = geo.area / 12.0 * if a == b { 2.0 } else { 1.0 };
                        v -= rho * (omega * omega * m);
                    }
                    k[2 * a + i][2 * b + kk] = v;
                }
            }
        }
    }
    k
}

/// Volume matrices of all elements in mesh order.
fn element_matrices(mesh: &Mesh2D, problem: &Problem) -> Result<Vec<[[C64; 6]; 6]>> {
    let tensors: Vec<_> = (0..=problem.obstacles.len())
        .map(|t| problem.material(t).map(|m| (tensor(&m.stiffness), m.rho)))
        .collect::<Result<_>>()?;
    if let Some(&t) = mesh.tags.iter().find(|&&t| t > problem.obstacles.len()) {
        return Err(Error::InvalidParameter(format!("no material for region tag {t}")));
    }
    Ok(mesh
        .triangles
        .par_iter()
        .zip(mesh.tags.par_iter())
        .map(|(tri, &tag)| {
            let geo = element_geometry(tri.map(|v| mesh.nodes[v]));
            let (c, rho) = &tensors[tag];
            element_matrix(&geo, c, *rho, problem.omega)
        })
        .collect())
}

fn push_element(trip: &mut Vec<Triplet<usize, usize, C64>>, tri: &[usize; 3], ke: &[[C64; 6]; 6]) {
    for a in 0..3 {
        for i in 0..2 {
            for b in 0..3 {
                for k in 0..2 {
                    trip.push(Triplet::new(2 * tri[a] + i, 2 * tri[b] + k, ke[2 * a + i][2 * b + k]));
                }
            }
        }
    }
}

fn build_sparse(n: usize, trip: &[Triplet<usize, usize, C64>]) -> Result<SparseColMat<usize, C64>> {
    SparseColMat::try_new_from_triplets(n, n, trip).map_err(|e| Error::Solver(format!("sparse assembly: {e:?}")))
}

/// Volume part `∫ C∇u:∇v̄ − ω²ρ u·v̄` alone (valid at `ω = 0`).
pub fn assemble_volume(mesh: &Mesh2D, problem: &Problem) -> Result<SparseColMat<usize, C64>> {
    let ke = element_matrices(mesh, problem)?;
    let mut trip = Vec::with_capacity(36 * ke.len());
    for (tri, k) in mesh.triangles.iter().zip(&ke) {
        push_element(&mut trip, tri, k);
    }
    build_sparse(2 * mesh.n_nodes(), &trip)
}

/// Dense DtN block over the outer-ring dofs, ordered `2k + d` for ring
/// position `k`: trapezoidal analysis, multiplication by `W_n`, and
/// trapezoidal synthesis against the test traces.
pub fn dtn_block(op: &DtnOperator<f64>, nb: usize) -> Result<Mat<C64>> {
    let nt = op.params.n_trunc.min(op.n_max());
    if 2 * nt >= nb {
        return Err(Error::InvalidParameter(format!(
            "DtN truncation {nt} violates the sampling limit of {nb} ring nodes"
        )));
    }
    let r = op.params.radius;
    // g[m][α][β] = N_b⁻¹ Σ_n W_n[α][β] e^{2πinm/N_b}
    let g: Vec<[[C64; 2]; 2]> = (0..nb)
        .map(|m| {
            let mut s = [[ZERO; 2]; 2];
            for n in -(nt as i32)..=(nt as i32) {
                let ph = TAU * (n as f64) * (m as f64) / nb as f64;
                let e = C64::new(ph.cos(), ph.sin());
                let w = &op.mode(n).w;
                for a in 0..2 {
                    for b in 0..2 {
                        s[a][b] += w[a][b] * e;
                    }
                }
            }
            s.map(|row| row.map(|z| z / nb as f64))
        })
        .collect();
    let frame: Vec<[[f64; 2]; 2]> = (0..nb)
        .map(|k| {
            let th = TAU * k as f64 / nb as f64;
            [[th.cos(), th.sin()], [-th.sin(), th.cos()]]
        })
        .collect();
    let ds = TAU * r / nb as f64;
    Ok(Mat::from_fn(2 * nb, 2 * nb, |row, col| {
        let (k, d) = (row / 2, row % 2);
        let (i, c) = (col / 2, col % 2);
        let gm = &g[(k + nb - i) % nb];
        let mut s = ZERO;
        for a in 0..2 {
            for b in 0..2 {
                s += gm[a][b] * (frame[k][a][d] * frame[i][b][c]);
            }
        }
        s * ds
    }))
}

/// Factorised `K = V − D` for one mesh, problem and frequency.
pub struct AssembledSystem {
    pub mesh: Arc<Mesh2D>,
    pub problem: Problem,
    pub dtn: DtnOperator<f64>,
    pub matrix: SparseColMat<usize, C64>,
    /// Per-element volume matrices, kept for jump elimination.
    element: Vec<[[C64; 6]; 6]>,
    dtn_dense: Mat<C64>,
    lu: Lu<usize, C64>,
}

/// Nodal field. On interface nodes `u` is the background-side value and
/// `u + jump` the obstacle-side value.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub omega: f64,
    pub u: Vec<[C64; 2]>,
    pub jump: Vec<[C64; 2]>,
}

/// Jump data of a transmission problem: Dirichlet jump `f` at interface
/// nodes (zero elsewhere) and an assembled Neumann load vector.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpData {
    pub f: Vec<[C64; 2]>,
    pub load: Vec<C64>,
}

impl JumpData {
    pub fn zeros(n_nodes: usize) -> Self {
        Self {
            f: vec![[ZERO; 2]; n_nodes],
            load: vec![ZERO; 2 * n_nodes],
        }
    }
}

/// Clamped DtN truncation for a ring of `nb` nodes. An explicit request
/// that violates the sampling limit is an error.
pub fn ring_truncation(params_default: usize, requested: Option<usize>, nb: usize) -> Result<usize> {
    let limit = (nb - 1) / 2;
    match requested {
        Some(n) if n > limit => Err(Error::InvalidParameter(format!(
            "N_t = {n} requires more than {nb} ring nodes (need N_t < N_b/2)"
        ))),
        Some(n) => Ok(n),
        None => Ok(params_default.min(limit)),
    }
}

pub fn assemble(mesh: &Arc<Mesh2D>, problem: &Problem) -> Result<AssembledSystem> {
    let nb = mesh.outer.len();
    let base = DtnParams::new(mesh.radius, problem.omega, problem.background, problem.background.lambda, Some(0))?;
    let nt = ring_truncation(base.default_truncation(), problem.n_trunc, nb)?;
    let params = DtnParams { n_trunc: nt, ..base };
    let dtn = DtnOperator::new(params)?;
    let element = element_matrices(mesh, problem)?;
    let dense = dtn_block(&dtn, nb)?;
    let mut trip = Vec::with_capacity(36 * element.len() + 4 * nb * nb);
    for (tri, k) in mesh.triangles.iter().zip(&element) {
        push_element(&mut trip, tri, k);
    }
    for col in 0..2 * nb {
        for row in 0..2 * nb {
            let gr = 2 * mesh.outer[row / 2] + row % 2;
            let gc = 2 * mesh.outer[col / 2] + col % 2;
            trip.push(Triplet::new(gr, gc, -dense[(row, col)]));
        }
    }
    let matrix = build_sparse(2 * mesh.n_nodes(), &trip)?;
    let lu = matrix
        .sp_lu()
        .map_err(|e| Error::Solver(format!("LU factorisation failed ({e:?}) at ω = {}", problem.omega)))?;
    Ok(AssembledSystem {
        mesh: Arc::clone(mesh),
        problem: problem.clone(),
        dtn,
        matrix,
        element,
        dtn_dense: dense,
        lu,
    })
}

fn to_pairs(v: &[C64]) -> Vec<[C64; 2]> {
    v.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
}

impl AssembledSystem {
    pub fn n_dofs(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_trunc(&self) -> usize {
        self.dtn.params.n_trunc
    }

    pub fn dtn_dense(&self) -> &Mat<C64> {
        &self.dtn_dense
    }

    /// Solves `K x = b` for every column, reusing the factorisation.
    pub fn solve_many(&self, rhs: &[Vec<C64>]) -> Result<Vec<Vec<C64>>> {
        let n = self.n_dofs();
        if rhs.iter().any(|b| b.len() != n) {
            return Err(Error::InvalidParameter(format!("right-hand side length must be {n}")));
        }
        let mut m = Mat::from_fn(n, rhs.len(), |i, j| rhs[j][i]);
        self.lu.solve_in_place(m.as_mut());
        let out: Vec<Vec<C64>> = (0..rhs.len()).map(|j| (0..n).map(|i| m[(i, j)]).collect()).collect();
        if out.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Solver(format!(
                "non-finite solution at ω = {}: the factorisation is numerically singular",
                self.problem.omega
            )));
        }
        Ok(out)
    }

    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        Ok(self.solve_many(std::slice::from_ref(&rhs.to_vec()))?.pop().expect("one column"))
    }

    /// `(2πR/N_b) T u^in(x_k) − D u^in` on the ring dofs.
    pub fn scattering_rhs(&self, incident: &IncidentField<f64>) -> Result<Vec<C64>> {
        let mesh = &self.mesh;
        incident.validate(mesh.radius)?;
        let nb = mesh.outer.len();
        let bg = &self.problem.background;
        let ds = TAU * mesh.radius / nb as f64;
        let mut uin = Vec::with_capacity(2 * nb);
        let mut tin = Vec::with_capacity(2 * nb);
        for (k, &v) in mesh.outer.iter().enumerate() {
            let th = TAU * k as f64 / nb as f64;
            let f = incident.evaluate(bg, self.problem.omega, mesh.nodes[v])?;
            let t = traction(bg, &f.grad, [th.cos(), th.sin()]);
            uin.extend_from_slice(&f.u);
            tin.extend_from_slice(&t);
        }
        let mut b = vec![ZERO; self.n_dofs()];
        for row in 0..2 * nb {
            let mut s = tin[row] * ds;
            for (col, u) in uin.iter().enumerate() {
                s -= self.dtn_dense[(row, col)] * u;
            }
            b[2 * mesh.outer[row / 2] + row % 2] = s;
        }
        Ok(b)
    }

    pub fn solve_scattering(&self, incident: &IncidentField<f64>) -> Result<Solution> {
        Ok(self.solve_scattering_many(std::slice::from_ref(incident))?.pop().expect("one solution"))
    }

    pub fn solve_scattering_many(&self, incidents: &[IncidentField<f64>]) -> Result<Vec<Solution>> {
        let rhs: Vec<Vec<C64>> = incidents.iter().map(|i| self.scattering_rhs(i)).collect::<Result<_>>()?;
        let n = self.mesh.n_nodes();
        Ok(self
            .solve_many(&rhs)?
            .into_iter()
            .map(|x| Solution {
                omega: self.problem.omega,
                u: to_pairs(&x),
                jump: vec![[ZERO; 2]; n],
            })
            .collect())
    }

    /// Right-hand side of a transmission problem: the Neumann load minus
    /// the obstacle-element response to the Dirichlet jump.
    pub fn transmission_rhs(&self, data: &JumpData) -> Result<Vec<C64>> {
        let mesh = &self.mesh;
        if data.f.len() != mesh.n_nodes() || data.load.len() != self.n_dofs() {
            return Err(Error::InvalidParameter("jump data does not match the mesh".into()));
        }
        let mut b = data.load.clone();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            if mesh.tags[t] == 0 {
                continue;
            }
            let ke = &self.element[t];
            for a in 0..3 {
                for i in 0..2 {
                    let mut s = ZERO;
                    for bn in 0..3 {
                        for k in 0..2 {
                            s += ke[2 * a + i][2 * bn + k] * data.f[tri[bn]][k];
                        }
                    }
                    b[2 * tri[a] + i] -= s;
                }
            }
        }
        Ok(b)
    }

    pub fn solve_transmission(&self, data: &JumpData) -> Result<Solution> {
        Ok(self.solve_transmission_many(std::slice::from_ref(data))?.pop().expect("one solution"))
    }

    pub fn solve_transmission_many(&self, data: &[JumpData]) -> Result<Vec<Solution>> {
        let rhs: Vec<Vec<C64>> = data.iter().map(|d| self.transmission_rhs(d)).collect::<Result<_>>()?;
        Ok(self
            .solve_many(&rhs)?
            .into_iter()
            .zip(data)
            .map(|(x, d)| Solution {
                omega: self.problem.omega,
                u: to_pairs(&x),
                jump: d.f.clone(),
            })
            .collect())
    }

    /// `−(∂K/∂x)[V] u` for nodal velocities `V`, the right-hand side of the
    /// derivative of `K u = b` under node motion (`b` depends only on the
    /// fixed outer ring).
    pub fn shape_derivative_rhs(&self, sol: &Solution, velocity: &[[f64; 2]]) -> Result<Vec<C64>> {
        let mesh = &self.mesh;
        if velocity.len() != mesh.n_nodes() {
            return Err(Error::InvalidParameter("velocity field does not match the mesh".into()));
        }
        if sol.jump.iter().flatten().any(|z| *z != ZERO) {
            return Err(Error::InvalidParameter("shape derivative needs a jump-free solution".into()));
        }
        let tensors: Vec<_> = (0..=self.problem.obstacles.len())
            .map(|t| self.problem.material(t).map(|m| (tensor(&m.stiffness), m.rho)))
            .collect::<Result<_>>()?;
        let omega2 = self.problem.omega * self.problem.omega;
        let parts: Vec<[[C64; 2]; 3]> = mesh
            .triangles
            .par_iter()
            .enumerate()
            .map(|(t, tri)| {
                let vs = tri.map(|v| velocity[v]);
                if vs.iter().all(|v| v[0] == 0.0 && v[1] == 0.0) {
                    return [[ZERO; 2]; 3];
                }
                let geo = element_geometry(tri.map(|v| mesh.nodes[v]));
                let g = &geo.grad;
                let (c, rho) = &tensors[mesh.tags[t]];
                // ∂_j V_m
                let dv: [[f64; 2]; 2] =
                    std::array::from_fn(|m| std::array::from_fn(|j| (0..3).map(|a| vs[a][m] * g[a][j]).sum()));
                let div = dv[0][0] + dv[1][1];
                let dg: [[f64; 2]; 3] =
                    std::array::from_fn(|a| std::array::from_fn(|j| -(0..2).map(|m| dv[m][j] * g[a][m]).sum::<f64>()));
                let ul = tri.map(|v| sol.u[v]);
                let grad: [[C64; 2]; 2] =
                    std::array::from_fn(|k| std::array::from_fn(|l| (0..3).map(|b| ul[b][k] * g[b][l]).sum()));
                let dgrad: [[C64; 2]; 2] =
                    std::array::from_fn(|k| std::array::from_fn(|l| (0..3).map(|b| ul[b][k] * dg[b][l]).sum()));
                let s = stress(c, &grad);
                let ds = stress(c, &dgrad);
                let darea = geo.area * div;
                let mut out = [[ZERO; 2]; 3];
                for a in 0..3 {
                    for i in 0..2 {
                        let mut v = ZERO;
                        for j in 0..2 {
                            v += s[i][j] * (darea * g[a][j]) + (s[i][j] * dg[a][j] + ds[i][j] * g[a][j]) * geo.area;
                        }
                        // mass: d(M u) = div V · M u
                        let mu: C64 = (0..3)
                            .map(|b| ul[b][i] * (geo.area / 12.0 * if a == b { 2.0 } else { 1.0 }))
                            .sum();
                        v -= *rho * omega2 * div * mu;
                        out[a][i] = -v;
                    }
                }
                out
            })
            .collect();
        let mut b = vec![ZERO; self.n_dofs()];
        for (tri, p) in mesh.triangles.iter().zip(&parts) {
            for a in 0..3 {
                for i in 0..2 {
                    b[2 * tri[a] + i] += p[a][i];
                }
            }
        }
        Ok(b)
    }
}

impl Solution {
    /// Nodal values seen from an element with region `tag`.
    pub fn element_values(&self, mesh: &Mesh2D, t: usize) -> [[C64; 2]; 3] {
        let tri = mesh.triangles[t];
        let inner = mesh.tags[t] > 0;
        tri.map(|v| {
            let mut u = self.u[v];
            if inner {
                u[0] += self.jump[v][0];
                u[1] += self.jump[v][1];
            }
            u
        })
    }

    /// Constant gradient `g[i][j] = ∂_j u_i` on element `t`.
    pub fn element_gradient(&self, mesh: &Mesh2D, t: usize) -> [[C64; 2]; 2] {
        let geo = element_geometry(mesh.triangles[t].map(|v| mesh.nodes[v]));
        let ul = self.element_values(mesh, t);
        std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|a| ul[a][i] * geo.grad[a][j]).sum()))
    }

    /// Values at the outer ring nodes, in ring order.
    pub fn ring_values(&self, mesh: &Mesh2D) -> Vec<[C64; 2]> {
        mesh.outer.iter().map(|&v| self.u[v]).collect()
    }

    /// Fourier trace on `Γ_R` of `u − u^in`.
    pub fn scattered_trace(
        &self,
        mesh: &Mesh2D,
        incident: Option<(&IncidentField<f64>, &IsotropicMedium<f64>)>,
        n_max: usize,
    ) -> Result<BoundaryTrace<f64>> {
        let mut s = self.ring_values(mesh);
        if let Some((inc, bg)) = incident {
            for (k, &v) in mesh.outer.iter().enumerate() {
                let f = inc.evaluate(bg, self.omega, mesh.nodes[v])?;
                s[k][0] -= f.u[0];
                s[k][1] -= f.u[1];
            }
        }
        BoundaryTrace::from_samples(&s, n_max)
    }

    /// Piecewise-linear interpolation along the outer ring at angles
    /// `thetas`.
    pub fn sample_ring(&self, mesh: &Mesh2D, thetas: &[f64]) -> Vec<[C64; 2]> {
        let vals = self.ring_values(mesh);
        ring_interpolate(&vals, thetas)
    }

    /// Multiplies every value by `c`.
    pub fn scaled(&self, c: C64) -> Self {
        let sc = |v: &Vec<[C64; 2]>| v.iter().map(|p| [p[0] * c, p[1] * c]).collect();
        Self {
            omega: self.omega,
            u: sc(&self.u),
            jump: sc(&self.jump),
        }
    }

    /// CSV with columns `node,x,y,re_u1,im_u1,re_u2,im_u2,region`. Region
    /// is the largest tag among incident elements; interface nodes report
    /// their background-side value.
    pub fn to_csv(&self, mesh: &Mesh2D) -> String {
        let mut region = vec![0usize; mesh.n_nodes()];
        for (tri, &tag) in mesh.triangles.iter().zip(&mesh.tags) {
            for &v in tri {
                region[v] = region[v].max(tag);
            }
        }
        let mut s = String::from("node,x,y,re_u1,im_u1,re_u2,im_u2,region\n");
        for (i, (p, u)) in mesh.nodes.iter().zip(&self.u).enumerate() {
            let _ = writeln!(
                s,
                "{i},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                p[0], p[1], u[0].re, u[0].im, u[1].re, u[1].im, region[i]
            );
        }
        s
    }
}

/// Linear interpolation of ring samples (at `θ_k = 2πk/N_b`) at `thetas`.
pub fn ring_interpolate(vals: &[[C64; 2]], thetas: &[f64]) -> Vec<[C64; 2]> {
    let nb = vals.len();
    thetas
        .iter()
        .map(|&th| {
            let x = th.rem_euclid(TAU) / TAU * nb as f64;
            let k = (x.floor() as usize).min(nb - 1);
            let t = x - k as f64;
            let (a, b) = (vals[k], vals[(k + 1) % nb]);
            [a[0] * (1.0 - t) + b[0] * t, a[1] * (1.0 - t) + b[1] * t]
        })
        .collect()
}

/// Assembles `∫_Γ g·v̄ ds` over all interface chords with 3-point Gauss;
/// `g(x, ν, curve)` receives the chord's outward unit normal.
pub fn interface_load(mesh: &Mesh2D, mut g: impl FnMut([f64; 2], [f64; 2], usize) -> Result<[C64; 2]>) -> Result<Vec<C64>> {
    let mut b = vec![ZERO; 2 * mesh.n_nodes()];
    for (j, ring) in mesh.interfaces.iter().enumerate() {
        let n = ring.nodes.len();
        for k in 0..n {
            let (va, vb) = (ring.nodes[k], ring.nodes[(k + 1) % n]);
            let (pa, pb) = (mesh.nodes[va], mesh.nodes[vb]);
            let d = [pb[0] - pa[0], pb[1] - pa[1]];
            let len = d[0].hypot(d[1]);
            let nu = [d[1] / len, -d[0] / len];
            for &(s, w) in &GAUSS3 {
                let x = [pa[0] + s * d[0], pa[1] + s * d[1]];
                let gv = g(x, nu, j)?;
                for c in 0..2 {
                    b[2 * va + c] += gv[c] * (w * len * (1.0 - s));
                    b[2 * vb + c] += gv[c] * (w * len * s);
                }
            }
        }
    }
    Ok(b)
}

/// `(E₀, E₁)`: L² and full H¹ norms of `U − U_h` by the degree-4 rule.
/// `exact(x, tag)` returns the reference field of region `tag`.
pub fn error_norms(
    mesh: &Mesh2D,
    sol: &Solution,
    exact: impl Fn([f64; 2], usize) -> Result<FieldValue<f64>> + Sync,
) -> Result<(f64, f64)> {
    let parts: Vec<(f64, f64)> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let p = mesh.triangles[t].map(|v| mesh.nodes[v]);
            let geo = element_geometry(p);
            let ul = sol.element_values(mesh, t);
            let gh = sol.element_gradient(mesh, t);
            let (mut e0, mut e1) = (0.0, 0.0);
            for (l, w) in DUNAVANT4 {
                let x = [
                    l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                    l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
                ];
                let f = exact(x, mesh.tags[t])?;
                for i in 0..2 {
                    let uh = ul[0][i] * l[0] + ul[1][i] * l[1] + ul[2][i] * l[2];
                    e0 += w * geo.area * (f.u[i] - uh).norm_sqr();
                    for j in 0..2 {
                        e1 += w * geo.area * (f.grad[i][j] - gh[i][j]).norm_sqr();
                    }
                }
            }
            Ok((e0, e1))
        })
        .collect::<Result<_>>()?;
    let e0: f64 = parts.iter().map(|p| p.0).sum();
    let e1: f64 = parts.iter().map(|p| p.1).sum();
    Ok((e0.sqrt(), (e0 + e1).sqrt()))
}

/// `Im ∫_{Γ_R} 𝒯v·v̄ ds = 2πR Im Σ_n w_n* W_n w_n` for a radiating trace.
pub fn radiated_power(op: &DtnOperator<f64>, trace: &BoundaryTrace<f64>) -> f64 {
    let t = op.apply(trace);
    let nt = t.n_max as i32;
    let mut s = ZERO;
    for n in -nt..=nt {
        s += t.p(n) * trace.p(n).conj() + t.s(n) * trace.s(n).conj();
    }
    TAU * op.params.radius * s.im
}

/// Radial profile for [`potential_gradient`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadialProfile {
    /// `J₀(k|x|)`, regular everywhere.
    BesselJ0,
    /// `H₀⁽¹⁾(k|x|)`, radiating, singular at the origin.
    HankelH0,
}

/// `u = ∇f(k|x − c|)` and its gradient (the Hessian of `f`). These
/// compressional fields solve the Navier system of any isotropic medium
/// whose `k_p` equals `k`.
pub fn potential_gradient(profile: RadialProfile, k: f64, center: [f64; 2], x: [f64; 2]) -> Result<FieldValue<f64>> {
    let z = [x[0] - center[0], x[1] - center[1]];
    let r = z[0].hypot(z[1]);
    if !(r > 0.0) {
        return Err(Error::Domain("radial field evaluated at its centre".into()));
    }
    let t = k * r;
    let (h0, _) = crate::special_functions::hankel1(0, t)?;
    let (h1, _) = crate::special_functions::hankel1(1, t)?;
    let (f0, f1) = match profile {
        RadialProfile::BesselJ0 => (C64::new(h0.re, 0.0), C64::new(h1.re, 0.0)),
        RadialProfile::HankelH0 => (h0, h1),
    };
    // f' = −k f₁, f'' = −k² (f₀ − f₁/t)
    let d1 = -f1 * k;
    let d2 = -(f0 - f1 / t) * (k * k);
    let e = [z[0] / r, z[1] / r];
    let u = [d1 * e[0], d1 * e[1]];
    let grad = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let dij = if i == j { 1.0 } else { 0.0 };
            d2 * (e[i] * e[j]) + d1 * ((dij - e[i] * e[j]) / r)
        })
    });
    Ok(FieldValue { u, grad })
}

/// Conormal derivative `(C ∇u) ν`.
pub fn conormal(c: &StiffnessTensor2D<f64>, grad: &[[C64; 2]; 2], nu: [f64; 2]) -> [C64; 2] {
    let s = c.stress(grad);
    [s[0][0] * nu[0] + s[0][1] * nu[1], s[1][0] * nu[0] + s[1][1] * nu[1]]
}

/// Jump data for a transmission problem whose exact solution is known on
/// both sides: `f = u_in − u_out` at interface nodes and
/// `g = (C_j ∇u_in)ν − T u_out` on the chords.
pub fn jumps_from_fields(
    mesh: &Mesh2D,
    problem: &Problem,
    inside: impl Fn([f64; 2], usize) -> Result<FieldValue<f64>>,
    outside: impl Fn([f64; 2]) -> Result<FieldValue<f64>>,
) -> Result<JumpData> {
    let mut f = vec![[ZERO; 2]; mesh.n_nodes()];
    for (j, ring) in mesh.interfaces.iter().enumerate() {
        for &v in &ring.nodes {
            let (a, b) = (inside(mesh.nodes[v], j)?, outside(mesh.nodes[v])?);
            f[v] = [a.u[0] - b.u[0], a.u[1] - b.u[1]];
        }
    }
    let bg = problem.background.stiffness();
    let load = interface_load(mesh, |x, nu, j| {
        let c = problem.material(j + 1)?.stiffness;
        let (a, b) = (inside(x, j)?, outside(x)?);
        let ta = conormal(&c, &a.grad, nu);
        let tb = conormal(&bg, &b.grad, nu);
        Ok([ta[0] - tb[0], ta[1] - tb[1]])
    })?;
    Ok(JumpData { f, load })
}
