//! Shape reconstruction from near-field data on `Γ_R`.
//!
//! Obstacle `l` is the star curve with parameters
//! `Λ = (a₁, a₂, α₀, α₁, …, α_{2M})`. The solution operator maps the
//! parameters to the total field at `N_mea` equispaced points of `Γ_R`.
//! Its derivative comes either from the transmission problem with jump
//! data on `Γ_l` ([`DerivativeMethod::Transmission`]) or from
//! differentiating the discrete system under mesh motion
//! ([`DerivativeMethod::Domain`]).

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::fem::{assemble, AssembledSystem, JumpData, Problem, Solution, GAUSS3};
use crate::incident::IncidentField;
use crate::material::{IsotropicMedium, Material};
use crate::mesh::{check_curves, perturbation_field, Mesh2D, StarCurve};
use crate::{Error, Result};

use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Per-obstacle parameter vectors of common order `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    pub order: usize,
    pub lambdas: Vec<Vec<f64>>,
}

impl ShapeParams {
    pub fn new(order: usize, lambdas: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(l) = lambdas.iter().find(|l| l.len() != 2 * order + 3) {
            return Err(Error::InvalidParameter(format!(
                "parameter vector of length {} for M = {order}, expected {}",
                l.len(),
                2 * order + 3
            )));
        }
        Ok(Self { order, lambdas })
    }

    /// Projection of arbitrary star curves onto order `M` (higher modes
    /// dropped, missing modes zero).
    pub fn from_curves(curves: &[StarCurve], order: usize) -> Self {
        let lambdas = curves
            .iter()
            .map(|c| {
                let mut p = c.params();
                p.resize(2 * order + 3, 0.0);
                p
            })
            .collect();
        Self { order, lambdas }
    }

    /// Circles of radius `r` about the given centres.
    pub fn circles(centers: &[[f64; 2]], r: f64, order: usize) -> Self {
        let curves: Vec<StarCurve> = centers.iter().map(|&c| StarCurve::circle(c, r)).collect();
        Self::from_curves(&curves, order)
    }

    pub fn n_params(&self) -> usize {
        2 * self.order + 3
    }

    pub fn curves(&self) -> Result<Vec<StarCurve>> {
        self.lambdas.iter().map(|l| StarCurve::from_params(l)).collect()
    }

    /// Descent feasibility: `r_M > r_min` everywhere, each curve inside
    /// `B_{0.9R}`, curves pairwise disjoint.
    pub fn check_feasible(&self, radius: f64, r_min: f64) -> Result<()> {
        let curves = self.curves()?;
        for (j, c) in curves.iter().enumerate() {
            if !(c.min_radius() > r_min) {
                return Err(Error::Geometry(format!("obstacle {} has r_M ≤ {r_min}", j + 1)));
            }
            if !(c.max_extent() < 0.9 * radius) {
                return Err(Error::Geometry(format!("obstacle {} leaves B_0.9R", j + 1)));
            }
        }
        check_curves(&curves, radius)
    }

    fn axpy(&self, a: f64, dir: &[Vec<f64>]) -> Self {
        Self {
            order: self.order,
            lambdas: self
                .lambdas
                .iter()
                .zip(dir)
                .map(|(l, d)| l.iter().zip(d).map(|(x, y)| x + a * y).collect())
                .collect(),
        }
    }
}

/// Everything except the obstacle geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub background: IsotropicMedium<f64>,
    /// Material of obstacle `l`.
    pub materials: Vec<Material<f64>>,
    pub radius: f64,
    /// Target mesh size of the inversion meshes.
    pub h: f64,
    pub n_trunc: Option<usize>,
    /// Ascending.
    pub omegas: Vec<f64>,
    pub directions: Vec<[f64; 2]>,
    /// Plane-wave amplitudes `(c_p, c_s)`.
    pub amplitude: [C64; 2],
    pub n_mea: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.omegas.is_empty() || self.directions.is_empty() || self.n_mea == 0 {
            return Err(Error::InvalidParameter("need at least one frequency, direction and measurement point".into()));
        }
        if self.omegas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("frequencies must be strictly ascending".into()));
        }
        for d in &self.directions {
            IncidentField::PlaneWave {
                direction: *d,
                cp: self.amplitude[0],
                cs: self.amplitude[1],
            }
            .validate(self.radius)?;
        }
        Ok(())
    }

    pub fn problem(&self, omega: f64) -> Problem {
        Problem {
            background: self.background,
            obstacles: self.materials.clone(),
            omega,
            n_trunc: self.n_trunc,
        }
    }

    pub fn incident(&self, j: usize) -> IncidentField<f64> {
        IncidentField::PlaneWave {
            direction: self.directions[j],
            cp: self.amplitude[0],
            cs: self.amplitude[1],
        }
    }

    /// `θ_i = 2π(i−1)/N_mea`.
    pub fn measurement_angles(&self) -> Vec<f64> {
        (0..self.n_mea).map(|i| TAU * i as f64 / self.n_mea as f64).collect()
    }

    /// Step size `0.005/k_p(ω)`.
    pub fn step_size(&self, omega: f64, factor: f64) -> f64 {
        factor / self.background.kp(omega)
    }
}

/// Total field `u(z_i; d_j, ω_m)` stored as `values[m][j][i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub thetas: Vec<f64>,
    pub omegas: Vec<f64>,
    pub directions: Vec<[f64; 2]>,
    pub values: Vec<Vec<Vec<[C64; 2]>>>,
}

fn sq_norm(v: &[[C64; 2]]) -> f64 {
    v.iter().map(|p| p[0].norm_sqr() + p[1].norm_sqr()).sum()
}

impl MeasurementSet {
    pub fn norm(&self) -> f64 {
        self.values.iter().flatten().map(|v| sq_norm(v)).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_{l²}` over all entries.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for (a, b) in self.values.iter().flatten().zip(other.values.iter().flatten()) {
            for (p, q) in a.iter().zip(b) {
                s += (p[0] - q[0]).norm_sqr() + (p[1] - q[1]).norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Multiplies every value by `1 + σ ξ` with independent standard
    /// normal `ξ` per real component.
    pub fn with_noise(&self, sigma: f64, rng: &mut impl rand::Rng) -> Self {
        use rand_distr::{Distribution, StandardNormal};
        let mut out = self.clone();
        for v in out.values.iter_mut().flatten().flatten() {
            for c in v.iter_mut() {
                let (a, b): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
                *c = C64::new(c.re * (1.0 + sigma * a), c.im * (1.0 + sigma * b));
            }
        }
        out
    }
}

/// Factorised system and scattering solutions for some directions at one
/// frequency.
pub struct ForwardSolve {
    pub sys: AssembledSystem,
    /// `(direction index, solution)`.
    pub solutions: Vec<(usize, Solution)>,
}

impl ForwardSolve {
    pub fn new(mesh: &Arc<Mesh2D>, scenario: &Scenario, omega: f64, directions: &[usize]) -> Result<Self> {
        let sys = assemble(mesh, &scenario.problem(omega))?;
        let inc: Vec<IncidentField<f64>> = directions.iter().map(|&j| scenario.incident(j)).collect();
        let sols = sys.solve_scattering_many(&inc)?;
        Ok(Self {
            sys,
            solutions: directions.iter().copied().zip(sols).collect(),
        })
    }

    pub fn samples(&self, k: usize, thetas: &[f64]) -> Vec<[C64; 2]> {
        self.solutions[k].1.sample_ring(&self.sys.mesh, thetas)
    }
}

/// Total field at the measurement points for all frequencies and
/// directions on the given mesh.
pub fn forward_map_on(mesh: &Arc<Mesh2D>, scenario: &Scenario) -> Result<MeasurementSet> {
    let thetas = scenario.measurement_angles();
    let dirs: Vec<usize> = (0..scenario.directions.len()).collect();
    let mut values = Vec::with_capacity(scenario.omegas.len());
    for &omega in &scenario.omegas {
        let fs = ForwardSolve::new(mesh, scenario, omega, &dirs)?;
        values.push((0..dirs.len()).map(|k| fs.samples(k, &thetas)).collect());
    }
    Ok(MeasurementSet {
        thetas,
        omegas: scenario.omegas.clone(),
        directions: scenario.directions.clone(),
        values,
    })
}

/// `𝒥(Λ)`: meshes the current shapes and solves every scattering problem.
pub fn forward_map(params: &ShapeParams, scenario: &Scenario) -> Result<MeasurementSet> {
    let mesh = Arc::new(Mesh2D::generate(&params.curves()?, scenario.radius, scenario.h)?);
    forward_map_on(&mesh, scenario)
}

/// Synthetic data for the true curves on a mesh `refine` times finer and
/// with `extra_modes` more DtN modes than the inversion uses.
pub fn synthesize_data(truth: &[StarCurve], scenario: &Scenario, refine: f64, extra_modes: usize) -> Result<MeasurementSet> {
    let h = scenario.h / refine;
    let mesh = Arc::new(Mesh2D::generate(truth, scenario.radius, h)?);
    let nb = mesh.outer.len();
    let mut sc = scenario.clone();
    sc.h = h;
    let mut values = Vec::new();
    for &omega in &scenario.omegas {
        let base = crate::dtn2d::DtnParams::new(scenario.radius, omega, scenario.background, scenario.background.lambda, None)?;
        let coarse_nb = (TAU * scenario.radius / scenario.h).ceil() as usize;
        let coarse = crate::fem::ring_truncation(base.n_trunc, scenario.n_trunc, coarse_nb)?;
        sc.n_trunc = Some((coarse + extra_modes).min((nb - 1) / 2));
        let one = Scenario {
            omegas: vec![omega],
            ..sc.clone()
        };
        values.push(forward_map_on(&mesh, &one)?.values.remove(0));
    }
    Ok(MeasurementSet {
        thetas: scenario.measurement_angles(),
        omegas: scenario.omegas.clone(),
        directions: scenario.directions.clone(),
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    /// Transmission problem with jumps `(f_l, g_l)` on `Γ_l`.
    Transmission,
    /// Exact derivative of the discrete solution under mesh motion.
    Domain,
}

/// One-sided traces of a scattering solution along interface `l`.
struct InterfaceTraces {
    /// Nodal averages of `∇u` over obstacle-side and background-side
    /// elements, per ring node.
    grad_in: Vec<[[C64; 2]; 2]>,
    grad_out: Vec<[[C64; 2]; 2]>,
    /// Element stresses on either side of each chord `k → k+1`.
    sigma_in: Vec<[[C64; 2]; 2]>,
    sigma_out: Vec<[[C64; 2]; 2]>,
}

fn interface_traces(sys: &AssembledSystem, sol: &Solution, l: usize) -> Result<InterfaceTraces> {
    let mesh = &sys.mesh;
    let ring = &mesh.interfaces[l];
    let n = ring.nodes.len();
    let pos: HashMap<usize, usize> = ring.nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let c_in = sys.problem.material(l + 1)?.stiffness;
    let c_out = sys.problem.background.stiffness();
    let mut gin = vec![[[ZERO; 2]; 2]; n];
    let mut gout = vec![[[ZERO; 2]; 2]; n];
    let mut cin = vec![0usize; n];
    let mut cout = vec![0usize; n];
    let mut sin = vec![None; n];
    let mut sout = vec![None; n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let tag = mesh.tags[t];
        let inside = tag == l + 1;
        if !(inside || tag == 0) || !tri.iter().any(|v| pos.contains_key(v)) {
            continue;
        }
        let g = sol.element_gradient(mesh, t);
        let sigma = if inside { c_in.stress(&g) } else { c_out.stress(&g) };
        for (a, &v) in tri.iter().enumerate() {
            let Some(&k) = pos.get(&v) else { continue };
            let (acc, cnt) = if inside { (&mut gin, &mut cin) } else { (&mut gout, &mut cout) };
            for i in 0..2 {
                for j in 0..2 {
                    acc[k][i][j] += g[i][j];
                }
            }
            cnt[k] += 1;
            // Chord k → k+1 is an edge of this element.
            let w = tri[(a + 1) % 3];
            let u = tri[(a + 2) % 3];
            for other in [w, u] {
                if pos.get(&other) == Some(&((k + 1) % n)) {
                    if inside {
                        sin[k] = Some(sigma);
                    } else {
                        sout[k] = Some(sigma);
                    }
                }
            }
        }
    }
    for k in 0..n {
        if cin[k] == 0 || cout[k] == 0 {
            return Err(Error::Mesh(format!("interface node {k} of curve {} lacks a one-sided element", l + 1)));
        }
        for i in 0..2 {
            for j in 0..2 {
                gin[k][i][j] /= cin[k] as f64;
                gout[k][i][j] /= cout[k] as f64;
            }
        }
    }
    let unwrap = |v: Vec<Option<[[C64; 2]; 2]>>| -> Result<Vec<[[C64; 2]; 2]>> {
        v.into_iter()
            .map(|s| s.ok_or_else(|| Error::Mesh(format!("interface chord of curve {} lacks a side", l + 1))))
            .collect()
    };
    Ok(InterfaceTraces {
        grad_in: gin,
        grad_out: gout,
        sigma_in: unwrap(sin)?,
        sigma_out: unwrap(sout)?,
    })
}

fn wrap_angle(d: f64) -> f64 {
    let d = d.rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Jump data of the derivative problem for the boundary velocity
/// `field(θ)` on obstacle `l`:
/// `f = −(h·ν)[∂_ν⁻u − ∂_ν⁺u]` at the interface nodes and
/// `g = ω²(h·ν)[ρ_l u⁻ − ρ₀u⁺] − ∂_τ[(σ⁻ − σ⁺)(h₂, −h₁)]` on the chords,
/// with the tangential derivative moved onto the test function.
fn derivative_jumps(sys: &AssembledSystem, sol: &Solution, tr: &InterfaceTraces, l: usize, field: &dyn Fn(f64) -> [f64; 2]) -> Result<JumpData> {
    let mesh = &sys.mesh;
    let ring = &mesh.interfaces[l];
    let curve = &mesh.curves[l];
    let nn = ring.nodes.len();
    let omega2 = sys.problem.omega * sys.problem.omega;
    let rho_in = sys.problem.material(l + 1)?.rho;
    let rho_out = sys.problem.background.rho;
    let mut data = JumpData::zeros(mesh.n_nodes());
    for k in 0..nn {
        let th = ring.thetas[k];
        let nu = curve.normal(th);
        let h = field(th);
        let hn = h[0] * nu[0] + h[1] * nu[1];
        for i in 0..2 {
            let dn_in = tr.grad_in[k][i][0] * nu[0] + tr.grad_in[k][i][1] * nu[1];
            let dn_out = tr.grad_out[k][i][0] * nu[0] + tr.grad_out[k][i][1] * nu[1];
            data.f[ring.nodes[k]][i] = -(dn_in - dn_out) * hn;
        }
    }
    for k in 0..nn {
        let (va, vb) = (ring.nodes[k], ring.nodes[(k + 1) % nn]);
        let (pa, pb) = (mesh.nodes[va], mesh.nodes[vb]);
        let d = [pb[0] - pa[0], pb[1] - pa[1]];
        let len = d[0].hypot(d[1]);
        let nu = [d[1] / len, -d[0] / len];
        let (ta, tb) = (ring.thetas[k], ring.thetas[(k + 1) % nn]);
        let dth = wrap_angle(tb - ta);
        let ds: [[C64; 2]; 2] = std::array::from_fn(|i| std::array::from_fn(|j| tr.sigma_in[k][i][j] - tr.sigma_out[k][i][j]));
        let (ua, ub) = (sol.u[va], sol.u[vb]);
        let mut q_int = [ZERO; 2];
        for &(s, w) in &GAUSS3 {
            let h = field(ta + s * dth);
            let hn = h[0] * nu[0] + h[1] * nu[1];
            let rh = [h[1], -h[0]];
            for i in 0..2 {
                let u = ua[i] * (1.0 - s) + ub[i] * s;
                let g1 = u * (rho_in - rho_out) * (omega2 * hn);
                data.load[2 * va + i] += g1 * (w * len * (1.0 - s));
                data.load[2 * vb + i] += g1 * (w * len * s);
                q_int[i] += (ds[i][0] * rh[0] + ds[i][1] * rh[1]) * (w * len);
            }
        }
        // ∫ −∂_τQ·v̄ = ∫ Q·∂_τv̄, and ∂_τ of the hats is ∓1/len on the chord.
        for i in 0..2 {
            data.load[2 * vb + i] += q_int[i] / len;
            data.load[2 * va + i] -= q_int[i] / len;
        }
    }
    Ok(data)
}

/// `∂𝒥_i/∂Λ_n^{(l)}` at the measurement angles for each `n` in `ns`
/// (1-based), for solution `k` of `fs`. `reference` is the mesh whose
/// morph produced `fs.sys.mesh` (or that mesh itself); it defines the node
/// velocities of the domain method.
pub fn frechet_derivative(
    fs: &ForwardSolve,
    k: usize,
    reference: &Mesh2D,
    l: usize,
    ns: &[usize],
    thetas: &[f64],
    method: DerivativeMethod,
) -> Result<Vec<Vec<[C64; 2]>>> {
    let sys = &fs.sys;
    let sol = &fs.solutions[k].1;
    if l >= sys.mesh.interfaces.len() {
        return Err(Error::InvalidParameter(format!("no obstacle {}", l + 1)));
    }
    let sols = match method {
        DerivativeMethod::Transmission => {
            let tr = interface_traces(sys, sol, l)?;
            let data: Vec<JumpData> = ns
                .iter()
                .map(|&n| derivative_jumps(sys, sol, &tr, l, &|th| perturbation_field(n, th)))
                .collect::<Result<_>>()?;
            sys.solve_transmission_many(&data)?
        }
        DerivativeMethod::Domain => {
            let rhs: Vec<Vec<C64>> = ns
                .iter()
                .map(|&n| sys.shape_derivative_rhs(sol, &reference.velocity(l, n)))
                .collect::<Result<_>>()?;
            let nn = sys.mesh.n_nodes();
            sys.solve_many(&rhs)?
                .into_iter()
                .map(|x| Solution {
                    omega: sol.omega,
                    u: x.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
                    jump: vec![[ZERO; 2]; nn],
                })
                .collect()
        }
    };
    Ok(sols.iter().map(|s| s.sample_ring(&sys.mesh, thetas)).collect())
}

/// Transmission-route derivative of solution `k` of `fs` along an
/// arbitrary boundary velocity `field(θ)` of obstacle `l`.
pub fn directional_derivative(
    fs: &ForwardSolve,
    k: usize,
    l: usize,
    field: &dyn Fn(f64) -> [f64; 2],
    thetas: &[f64],
) -> Result<Vec<[C64; 2]>> {
    if l >= fs.sys.mesh.interfaces.len() {
        return Err(Error::InvalidParameter(format!("no obstacle {}", l + 1)));
    }
    let sol = &fs.solutions[k].1;
    let tr = interface_traces(&fs.sys, sol, l)?;
    let data = derivative_jumps(&fs.sys, sol, &tr, l, field)?;
    Ok(fs.sys.solve_transmission(&data)?.sample_ring(&fs.sys.mesh, thetas))
}

/// `F = ½ Σ|𝒥_i − u_i|²` and `∂F/∂Λ_n = Re Σ ∂𝒥_i · conj(𝒥_i − u_i)`.
/// `derivs[l][n]` holds `∂𝒥/∂Λ_{n+1}^{(l)}`.
pub fn objective_and_gradient(sim: &[[C64; 2]], data: &[[C64; 2]], derivs: &[Vec<Vec<[C64; 2]>>]) -> (f64, Vec<Vec<f64>>) {
    let res: Vec<[C64; 2]> = sim.iter().zip(data).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect();
    let f = 0.5 * sq_norm(&res);
    let grad = derivs
        .iter()
        .map(|per| {
            per.iter()
                .map(|d| {
                    d.iter()
                        .zip(&res)
                        .map(|(a, r)| (a[0] * r[0].conj() + a[1] * r[1].conj()).re)
                        .sum()
                })
                .collect()
        })
        .collect();
    (f, grad)
}

/// Objective and gradient of one `(ω, d)` pair at `params`, re-meshing.
pub fn evaluate_stage(
    params: &ShapeParams,
    scenario: &Scenario,
    data: &MeasurementSet,
    m: usize,
    j: usize,
    method: DerivativeMethod,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let mesh = Arc::new(Mesh2D::generate(&params.curves()?, scenario.radius, scenario.h)?);
    let fs = ForwardSolve::new(&mesh, scenario, scenario.omegas[m], &[j])?;
    let thetas = &data.thetas;
    let sim = fs.samples(0, thetas);
    let ns: Vec<usize> = (1..=params.n_params()).collect();
    let derivs: Vec<Vec<Vec<[C64; 2]>>> = (0..params.lambdas.len())
        .map(|l| frechet_derivative(&fs, 0, &mesh, l, &ns, thetas, method))
        .collect::<Result<_>>()?;
    Ok(objective_and_gradient(&sim, &data.values[m][j], &derivs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentOptions {
    /// Steps per direction.
    pub steps: usize,
    /// `ε = step_factor / k_p(ω_m)`.
    pub step_factor: f64,
    pub method: DerivativeMethod,
    /// Smallest admissible radius, as a fraction of `R`.
    pub r_min_fraction: f64,
    pub max_halvings: usize,
    /// Also halve `ε` until `F` does not increase; after `max_halvings`
    /// failures the iterate is kept. Off by default (fixed-step rule).
    #[serde(default)]
    pub backtrack: bool,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            steps: 10,
            step_factor: 0.005,
            method: DerivativeMethod::Transmission,
            r_min_fraction: 0.05,
            max_halvings: 10,
            backtrack: false,
        }
    }
}

/// One inner iteration, as written to the JSON-lines log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub schema: u32,
    pub stage: usize,
    pub direction: usize,
    pub iteration: usize,
    pub omega: f64,
    pub objective: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub halvings: usize,
    pub params: Vec<Vec<f64>>,
    pub wall_time_s: f64,
}

pub const LOG_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct DescentResult {
    /// Parameters after each frequency stage.
    pub stages: Vec<ShapeParams>,
    /// `RError_1` (initial guess) followed by one value per stage.
    pub rerror: Vec<f64>,
    pub records: Vec<IterationRecord>,
    /// Last iterate; differs from the last stage entry only after an abort.
    pub final_params: ShapeParams,
    /// Set when a step could not be made feasible.
    pub aborted: Option<String>,
}

/// `RError = ‖𝒥(Λ) − U_mea‖ / ‖U_mea‖` over all frequencies and directions.
pub fn relative_residual(params: &ShapeParams, scenario: &Scenario, data: &MeasurementSet) -> Result<f64> {
    Ok(forward_map(params, scenario)?.distance(data) / data.norm())
}

/// `F` of one `(ω, d)` pair at `params`, re-meshing.
pub fn objective_at(params: &ShapeParams, scenario: &Scenario, data: &MeasurementSet, m: usize, j: usize) -> Result<f64> {
    let mesh = Arc::new(Mesh2D::generate(&params.curves()?, scenario.radius, scenario.h)?);
    let sim = ForwardSolve::new(&mesh, scenario, scenario.omegas[m], &[j])?.samples(0, &data.thetas);
    let res: Vec<[C64; 2]> = sim.iter().zip(&data.values[m][j]).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect();
    Ok(0.5 * sq_norm(&res))
}

/// Fixed-step descent: `L` steps per direction, directions inner,
/// frequencies outer, each stage warm-started from the previous one.
/// `on_record` sees every iteration as it completes.
pub fn descend(
    initial: &ShapeParams,
    data: &MeasurementSet,
    scenario: &Scenario,
    opts: &DescentOptions,
    mut on_record: impl FnMut(&IterationRecord),
) -> Result<DescentResult> {
    scenario.validate()?;
    let r_min = opts.r_min_fraction * scenario.radius;
    initial.check_feasible(scenario.radius, r_min)?;
    let start = Instant::now();
    let mut params = initial.clone();
    let mut result = DescentResult {
        stages: vec![params.clone()],
        rerror: vec![relative_residual(&params, scenario, data)?],
        records: Vec::new(),
        final_params: params.clone(),
        aborted: None,
    };
    'stages: for (m, &omega) in scenario.omegas.iter().enumerate() {
        let eps = scenario.step_size(omega, opts.step_factor);
        for j in 0..scenario.directions.len() {
            for i in 0..opts.steps {
                let (f, grad) = evaluate_stage(&params, scenario, data, m, j, opts.method)?;
                let gnorm = grad.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
                let mut step = eps;
                let mut halvings = 0;
                let next = loop {
                    let cand = params.axpy(-step, &grad);
                    if cand.check_feasible(scenario.radius, r_min).is_ok()
                        && (!opts.backtrack || objective_at(&cand, scenario, data, m, j)? <= f)
                    {
                        break Some(cand);
                    }
                    if halvings == opts.max_halvings {
                        break if opts.backtrack && cand.check_feasible(scenario.radius, r_min).is_ok() {
                            step = 0.0;
                            Some(params.clone())
                        } else {
                            None
                        };
                    }
                    halvings += 1;
                    step *= 0.5;
                };
                let rec = IterationRecord {
                    schema: LOG_SCHEMA,
                    stage: m,
                    direction: j,
                    iteration: i,
                    omega,
                    objective: f,
                    grad_norm: gnorm,
                    step,
                    halvings,
                    params: params.lambdas.clone(),
                    wall_time_s: start.elapsed().as_secs_f64(),
                };
                on_record(&rec);
                result.records.push(rec);
                match next {
                    Some(p) => params = p,
                    None => {
                        result.aborted = Some(format!(
                            "stage {m}, direction {j}, iteration {i}: no feasible step after {} halvings",
                            opts.max_halvings
                        ));
                        break 'stages;
                    }
                }
            }
        }
        result.rerror.push(relative_residual(&params, scenario, data)?);
        result.stages.push(params.clone());
    }
    result.final_params = params;
    Ok(result)
}

/// Star curve approximating a closed curve, star-shaped about `center`,
/// by projecting its polar radius onto order `m`.
pub fn fit_star_curve(center: [f64; 2], order: usize, radius: impl Fn(f64) -> f64) -> Result<StarCurve> {
    let n = 4096;
    let mut coeffs = vec![0.0; 2 * order + 1];
    for k in 0..n {
        let th = TAU * k as f64 / n as f64;
        let r = radius(th);
        coeffs[0] += r / n as f64;
        for mm in 1..=order {
            let (s, c) = (mm as f64 * th).sin_cos();
            coeffs[2 * mm - 1] += 2.0 * r * c / n as f64;
            coeffs[2 * mm] += 2.0 * r * s / n as f64;
        }
    }
    StarCurve::new(center, coeffs)
}

/// Polar radius about `center` of a parametrised closed curve `x(t)`,
/// obtained by sampling and linear interpolation in angle. The curve
/// must be star-shaped about `center`.
pub fn polar_radius_of(center: [f64; 2], curve: impl Fn(f64) -> [f64; 2]) -> Result<impl Fn(f64) -> f64> {
    let n = 8192;
    let mut pts: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let p = curve(TAU * k as f64 / n as f64);
            let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
            (dy.atan2(dx).rem_euclid(TAU), dx.hypot(dy))
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let max_gap = pts
        .windows(2)
        .map(|w| w[1].0 - w[0].0)
        .fold(pts[0].0 + TAU - pts[n - 1].0, f64::max);
    if max_gap > 0.05 {
        return Err(Error::Geometry("curve is not star-shaped about the given centre".into()));
    }
    Ok(move |th: f64| {
        let th = th.rem_euclid(TAU);
        let k = pts.partition_point(|p| p.0 <= th);
        let (a, b) = if k == 0 || k == pts.len() {
            let (last, first) = (pts[pts.len() - 1], pts[0]);
            ((last.0 - TAU, last.1), first)
        } else {
            (pts[k - 1], pts[k])
        };
        let (a, b) = if k == pts.len() { ((a.0 + TAU, a.1), (b.0 + TAU, b.1)) } else { (a, b) };
        let t = if b.0 > a.0 { (th - a.0) / (b.0 - a.0) } else { 0.0 };
        a.1 + t * (b.1 - a.1)
    })
}

/// Kite `c + s(cos t + 0.65 cos 2t − 0.65, 1.5 sin t)` as a star curve of
/// order `m` about its parameter-space centre.
pub fn kite(center: [f64; 2], scale: f64, order: usize) -> Result<StarCurve> {
    let shape = |t: f64| [scale * (t.cos() + 0.65 * (2.0 * t).cos() - 0.65), scale * 1.5 * t.sin()];
    // Star-shaped about (−0.3s, 0) in local coordinates.
    let pole = [-0.3 * scale, 0.0];
    let r = polar_radius_of(pole, shape)?;
    let c = fit_star_curve(pole, order, r)?;
    StarCurve::new([center[0] + c.center[0], center[1] + c.center[1]], c.coeffs)
}

/// Ellipse with semi-axes `a`, `b`, rotated by `angle`.
pub fn ellipse(center: [f64; 2], a: f64, b: f64, angle: f64, order: usize) -> Result<StarCurve> {
    fit_star_curve(center, order, |th| {
        let t = th - angle;
        a * b / ((b * t.cos()).powi(2) + (a * t.sin()).powi(2)).sqrt()
    })
}
