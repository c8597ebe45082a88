use std::error::Error;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use elastoscat::benchmarks::{Benchmark, Example, Shape};
use elastoscat::dtn2d::{property_suite, DtnParams, Splitting};
use elastoscat::dtn3d::{property_suite_3d, DtnParams3D};
use elastoscat::farfield::{farfield_from_trace, uniform_angles};
use elastoscat::fem::assemble;
use elastoscat::inverse::{descend, synthesize_data, DescentResult, ForwardSolve, LOG_SCHEMA};
use elastoscat::material::IsotropicMedium;
use elastoscat::mesh::{symmetric_difference_area, Mesh2D, StarCurve};
use elastoscat::special_functions;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::config::{self, Config};
use crate::{Cli, Command, Dim};

type Res<T> = std::result::Result<T, Box<dyn Error>>;

fn context<T>(r: elastoscat::Result<T>, what: impl FnOnce() -> String) -> Res<T> {
    r.map_err(|e| format!("{}: {e}", what()).into())
}

fn write(out: &Path, name: &str, contents: &str) -> Res<()> {
    fs::write(out.join(name), contents).map_err(|e| format!("writing {}: {e}", out.join(name).display()).into())
}

pub fn run(cli: &Cli) -> Res<()> {
    let cfg = match &cli.config {
        Some(p) => config::load(p)?,
        None => Config::default(),
    };
    fs::create_dir_all(&cli.out).map_err(|e| format!("creating {}: {e}", cli.out.display()))?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    match &cli.command {
        Command::Forward => forward(cli, &cfg),
        Command::Convergence => convergence(cli, &cfg),
        Command::Farfield => farfield(cli, &cfg),
        Command::DtnCheck { dim } => dtn_check(cli, &cfg, *dim, seed),
        Command::Invert => invert(cli, &cfg, seed),
        Command::SpecfunTable { n_max } => specfun_table(cli, *n_max),
    }
}

fn forward_mesh(cli: &Cli, cfg: &Config, curves: &[StarCurve], radius: f64, h: f64) -> Res<Arc<Mesh2D>> {
    let mut mesh = context(Mesh2D::generate(curves, radius, h), || "meshing".into())?;
    let extra = cfg.domain.as_ref().map_or(0, |d| d.refine) + cli.mesh_level.unwrap_or(0);
    for _ in 0..extra {
        mesh = mesh.refine();
    }
    Ok(Arc::new(mesh))
}

fn forward(cli: &Cli, cfg: &Config) -> Res<()> {
    let r = cfg.resolve(cli.nt)?;
    let sc = &r.scenario;
    let mesh = forward_mesh(cli, cfg, &r.curves, sc.radius, sc.h)?;
    write(&cli.out, "mesh.txt", &mesh.to_text())?;
    let thetas = sc.measurement_angles();
    let dirs: Vec<usize> = (0..sc.directions.len()).collect();
    let mut samples = String::from("omega,direction,theta,re_u1,im_u1,re_u2,im_u2\n");
    for (m, &omega) in sc.omegas.iter().enumerate() {
        let fs = context(ForwardSolve::new(&mesh, sc, omega, &dirs), || format!("forward solve at ω = {omega}"))?;
        for (k, (j, sol)) in fs.solutions.iter().enumerate() {
            write(&cli.out, &format!("field_m{m}_d{j}.csv"), &sol.to_csv(&mesh))?;
            for (t, u) in thetas.iter().zip(fs.samples(k, &thetas)) {
                let _ = writeln!(
                    samples,
                    "{omega:.12e},{j},{t:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                    u[0].re, u[0].im, u[1].re, u[1].im
                );
            }
        }
    }
    write(&cli.out, "samples.csv", &samples)?;
    println!("forward: {} nodes, {} frequencies x {} directions", mesh.n_nodes(), sc.omegas.len(), dirs.len());
    Ok(())
}

fn case(name: &str, omega: f64, path: &str) -> Res<Benchmark> {
    let (ex, shape) = match name {
        "ex1-circle" => (Example::One, Shape::Circle),
        "ex1-triangle" => (Example::One, Shape::RoundedTriangle),
        "ex2-circle" => (Example::Two, Shape::Circle),
        "ex2-triangle" => (Example::Two, Shape::RoundedTriangle),
        _ => return Err(format!("config key `{path}`: unknown case `{name}`").into()),
    };
    context(Benchmark::new(ex, shape, omega), || format!("benchmark {name}"))
}

fn convergence(cli: &Cli, cfg: &Config) -> Res<()> {
    let (cases, omegas, levels) = match &cfg.convergence {
        Some(c) => (c.cases.clone(), c.omegas.clone(), c.levels),
        None => (
            vec!["ex1-circle".into(), "ex2-circle".into(), "ex2-triangle".into()],
            vec![1.0, 3.0],
            3,
        ),
    };
    let levels = cli.mesh_level.unwrap_or(levels).max(1);
    let mut csv = String::from("case,omega,level,h,n_nodes,e0,order0,e1,order1\n");
    let fmt = |o: Option<f64>| o.map_or(String::new(), |v| format!("{v:.4}"));
    for (i, name) in cases.iter().enumerate() {
        for &omega in &omegas {
            let mut b = case(name, omega, &format!("convergence.cases[{i}]"))?;
            b.problem.n_trunc = cli.nt;
            let rows = context(b.run(levels), || format!("{name} at ω = {omega}"))?;
            for r in rows {
                let _ = writeln!(
                    csv,
                    "{name},{omega},{},{:.6e},{},{:.6e},{},{:.6e},{}",
                    r.level,
                    r.h,
                    r.n_nodes,
                    r.e0,
                    fmt(r.order0),
                    r.e1,
                    fmt(r.order1)
                );
            }
        }
    }
    write(&cli.out, "convergence.csv", &csv)?;
    print!("{csv}");
    Ok(())
}

fn farfield(cli: &Cli, cfg: &Config) -> Res<()> {
    let r = cfg.resolve(cli.nt)?;
    let sc = &r.scenario;
    let n_angles = cfg.farfield.as_ref().map_or(360, |f| f.n_angles);
    let thetas = uniform_angles(n_angles);
    let mesh = forward_mesh(cli, cfg, &r.curves, sc.radius, sc.h)?;
    for (m, &omega) in sc.omegas.iter().enumerate() {
        let sys = context(assemble(&mesh, &sc.problem(omega)), || format!("assembly at ω = {omega}"))?;
        for j in 0..sc.directions.len() {
            let inc = sc.incident(j);
            let sol = context(sys.solve_scattering(&inc), || format!("solve at ω = {omega}, direction {j}"))?;
            let tr = context(sol.scattered_trace(&mesh, Some((&inc, &sc.background)), sys.n_trunc()), || {
                format!("trace at ω = {omega}, direction {j}")
            })?;
            let ff = context(farfield_from_trace(&sys.dtn, &tr, &thetas), || format!("far field at ω = {omega}"))?;
            write(&cli.out, &format!("farfield_m{m}_d{j}.csv"), &ff.to_csv())?;
        }
    }
    println!("farfield: {} patterns of {n_angles} angles", sc.omegas.len() * sc.directions.len());
    Ok(())
}

const SPLITS: [Splitting; 3] = [Splitting::Lame, Splitting::NoShear, Splitting::Balanced];

fn dtn_check(cli: &Cli, cfg: &Config, dim: Dim, seed: u64) -> Res<()> {
    let draws = cfg.dtn_check.as_ref().map_or(10, |d| d.draws);
    let n_max = cfg
        .dtn_check
        .as_ref()
        .and_then(|d| d.n_max)
        .unwrap_or(if dim == Dim::Two { 200 } else { 100 });
    let mut rng = StdRng::seed_from_u64(seed);
    let mut rows = String::new();
    let mut summary = String::from("draw,splitting,omega,radius,lambda,mu,rho,m_emp,violations\n");
    let mut total = 0usize;
    for draw in 0..draws {
        let (omega, radius) = (rng.random_range(0.5..5.0), rng.random_range(1.0..4.0));
        let (l, mu, rho) = (rng.random_range(0.2..3.0), rng.random_range(0.3..3.0), rng.random_range(0.5..2.0));
        let bg = IsotropicMedium::new(l, mu, rho)?;
        for s in SPLITS {
            let (m_emp, violations) = match dim {
                Dim::Two => {
                    let p = DtnParams::with_splitting(radius, omega, bg, s, None)?;
                    let rep = property_suite(&p, n_max)?;
                    for r in &rep.rows {
                        let _ = writeln!(
                            rows,
                            "{draw},{s:?},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e}",
                            r.n, r.lambda_n.re, r.lambda_n.im, r.minor1, r.det, r.rellich_residual
                        );
                    }
                    (rep.m_emp, rep.violations)
                }
                Dim::Three => {
                    let p = DtnParams3D::with_splitting(radius, omega, bg, s)?;
                    let rep = property_suite_3d(&p, n_max)?;
                    for r in &rep.rows {
                        let _ = writeln!(
                            rows,
                            "{draw},{s:?},{},{:.12e},{:.12e},{:.12e},{:.6e},{}",
                            r.n, r.lambda_n.re, r.lambda_n.im, r.ln_im_lambda, r.rellich_residual, r.zero_pattern
                        );
                    }
                    (rep.m_emp, rep.violations)
                }
            };
            for v in &violations {
                eprintln!("draw {draw} {s:?}: {v}");
            }
            total += violations.len();
            let _ = writeln!(
                summary,
                "{draw},{s:?},{omega:.12e},{radius:.12e},{l:.12e},{mu:.12e},{rho:.12e},{},{}",
                m_emp.map_or("none".into(), |m| m.to_string()),
                violations.len()
            );
        }
    }
    let (name, header) = match dim {
        Dim::Two => ("dtn2d", "draw,splitting,n,re_lambda_n,im_lambda_n,minor1,det,rellich_residual\n"),
        Dim::Three => ("dtn3d", "draw,splitting,n,re_lambda_n,im_lambda_n,ln_im_lambda_n,rellich_residual,zero_pattern\n"),
    };
    write(&cli.out, &format!("{name}_check.csv"), &format!("{header}{rows}"))?;
    write(&cli.out, &format!("{name}_summary.csv"), &summary)?;
    println!("{name}: {draws} draws x 3 splittings, n <= {n_max}, violations: {total}");
    if total > 0 {
        return Err(format!("{total} property violations").into());
    }
    Ok(())
}

/// Final report of an inversion run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    pub schema: u32,
    pub omegas: Vec<f64>,
    pub n_directions: usize,
    pub order: usize,
    pub rerror: Vec<f64>,
    pub stages: Vec<Vec<Vec<f64>>>,
    pub final_params: Vec<Vec<f64>>,
    /// 128 points of each reconstructed curve.
    pub curves: Vec<Vec<[f64; 2]>>,
    /// Symmetric-difference area over the true area, per obstacle.
    pub relative_symmetric_difference: Vec<f64>,
    pub aborted: Option<String>,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub initial_rerror: f64,
    pub final_rerror: f64,
    pub rerror_strictly_decreasing: bool,
    pub max_relative_symmetric_difference: f64,
}

impl Summary {
    pub fn of(rerror: &[f64], symdiff: &[f64]) -> Self {
        Self {
            initial_rerror: rerror.first().copied().unwrap_or(f64::NAN),
            final_rerror: rerror.last().copied().unwrap_or(f64::NAN),
            rerror_strictly_decreasing: rerror.windows(2).all(|w| w[1] < w[0]),
            max_relative_symmetric_difference: symdiff.iter().copied().fold(0.0, f64::max),
        }
    }
}

fn invert(cli: &Cli, cfg: &Config, seed: u64) -> Res<()> {
    let r = cfg.resolve(cli.nt)?;
    let (opts, initial) = cfg.descent()?;
    let inv = cfg.inversion.as_ref().expect("checked by descent()");
    let sc = &r.scenario;
    let clean = context(synthesize_data(&r.curves, sc, inv.data_refine, inv.extra_modes), || "synthetic data".into())?;
    let data = if inv.noise > 0.0 {
        clean.with_noise(inv.noise, &mut StdRng::seed_from_u64(seed))
    } else {
        clean
    };
    let mut log = fs::File::create(cli.out.join("log.jsonl")).map_err(|e| format!("creating log: {e}"))?;
    let mut log_err = None;
    let res: DescentResult = context(
        descend(&initial, &data, sc, &opts, |rec| {
            let line = serde_json::to_string(rec).expect("records serialise");
            if let Err(e) = writeln!(log, "{line}") {
                log_err.get_or_insert(e);
            }
            eprintln!(
                "stage {} dir {} it {}: F = {:.4e}, |∇F| = {:.3e}",
                rec.stage, rec.direction, rec.iteration, rec.objective, rec.grad_norm
            );
        }),
        || "descent".into(),
    )?;
    if let Some(e) = log_err {
        return Err(format!("writing log: {e}").into());
    }
    let finals = context(res.final_params.curves(), || "final curves".into())?;
    let symdiff: Vec<f64> = finals
        .iter()
        .zip(&r.curves)
        .map(|(a, b)| symmetric_difference_area(a, b, 1000) / b.area())
        .collect();
    let report = InversionReport {
        schema: LOG_SCHEMA,
        omegas: sc.omegas.clone(),
        n_directions: sc.directions.len(),
        order: initial.order,
        rerror: res.rerror.clone(),
        stages: res.stages.iter().map(|s| s.lambdas.clone()).collect(),
        final_params: res.final_params.lambdas.clone(),
        curves: finals.iter().map(|c| c.polygon(128)).collect(),
        relative_symmetric_difference: symdiff.clone(),
        aborted: res.aborted.clone(),
        summary: Summary::of(&res.rerror, &symdiff),
    };
    write(&cli.out, "report.json", &serde_json::to_string_pretty(&report)?)?;
    println!("RError by stage: {:?}", res.rerror);
    println!("relative symmetric difference: {symdiff:?}");
    if let Some(a) = &res.aborted {
        println!("aborted: {a}");
    }
    Ok(())
}

fn specfun_table(cli: &Cli, n_max: usize) -> Res<()> {
    let args = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0];
    let mut csv = String::from("order,argument,re_h,im_h,re_gamma,im_gamma,re_beta,im_beta,wronskian_residual\n");
    for r in special_functions::table(n_max, &args)? {
        let _ = writeln!(
            csv,
            "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.3e}",
            r.order, r.argument, r.h.re, r.h.im, r.gamma.re, r.gamma.im, r.beta.re, r.beta.im, r.wronskian_residual
        );
    }
    write(&cli.out, "specfun_table.csv", &csv)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_regenerates_from_report_fields() {
        let s = Summary::of(&[0.5, 0.1, 0.05], &[0.08, 0.06]);
        assert!(s.rerror_strictly_decreasing);
        assert_eq!(s.max_relative_symmetric_difference, 0.08);
        assert!(!Summary::of(&[0.5, 0.6], &[]).rerror_strictly_decreasing);
    }
}
