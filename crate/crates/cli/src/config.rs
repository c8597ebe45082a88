//! TOML experiment configuration.
//!
//! Every table rejects unknown keys. Structural errors carry the key path
//! (`obstacles[1].material.voigt`); semantic checks after parsing do the
//! same.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use elastoscat::inverse::{self, DerivativeMethod, DescentOptions, Scenario, ShapeParams};
use elastoscat::material::{IsotropicMedium, Material, StiffnessTensor2D};
use elastoscat::mesh::StarCurve;
use elastoscat::C64;
use serde::Deserialize;

#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config key `{}`: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(path: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.to_string(),
    }
}

type CResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub background: Option<Background>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub domain: Option<Domain>,
    pub waves: Option<Waves>,
    pub farfield: Option<FarFieldCfg>,
    pub convergence: Option<ConvergenceCfg>,
    pub dtn_check: Option<DtnCheckCfg>,
    pub inversion: Option<InversionCfg>,
    pub seed: Option<u64>,
}

/// Lamé form (`lambda`, `mu`) or velocity form (`cp`, `cs`).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    pub rho: f64,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub cp: Option<f64>,
    pub cs: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub shape: ShapeCfg,
    pub center: [f64; 2],
    pub radius: Option<f64>,
    /// Star-curve radius coefficients `(α₀, α₁, …, α_{2M})`.
    pub coeffs: Option<Vec<f64>>,
    pub scale: Option<f64>,
    pub semi_axes: Option<[f64; 2]>,
    /// Radians.
    pub angle: Option<f64>,
    /// Order of the star-curve fit for kites and ellipses.
    pub fit_order: Option<usize>,
    pub material: MaterialCfg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeCfg {
    Circle,
    Star,
    Kite,
    Ellipse,
}

/// Isotropic (`lambda`, `mu`) or anisotropic (`voigt` =
/// `[c11, c12, c13, c22, c23, c33]`).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialCfg {
    pub rho: f64,
    #[serde(default)]
    pub rho_im: f64,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub voigt: Option<[f64; 6]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub radius: f64,
    pub h: f64,
    pub n_trunc: Option<usize>,
    #[serde(default)]
    pub refine: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waves {
    /// Angular frequencies in rad/s, ascending.
    pub omegas: Vec<f64>,
    /// Propagation directions in degrees.
    pub directions_deg: Vec<f64>,
    #[serde(default = "unit")]
    pub amplitude_p: [f64; 2],
    #[serde(default = "unit")]
    pub amplitude_s: [f64; 2],
}

fn unit() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarFieldCfg {
    #[serde(default = "default_angles")]
    pub n_angles: usize,
}

fn default_angles() -> usize {
    360
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceCfg {
    /// Any of `ex1-circle`, `ex1-triangle`, `ex2-circle`, `ex2-triangle`.
    pub cases: Vec<String>,
    pub omegas: Vec<f64>,
    #[serde(default = "three")]
    pub levels: usize,
}

fn three() -> usize {
    3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtnCheckCfg {
    #[serde(default = "default_draws")]
    pub draws: usize,
    pub n_max: Option<usize>,
}

fn default_draws() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionCfg {
    #[serde(default = "ten")]
    pub order: usize,
    #[serde(default = "ten")]
    pub steps: usize,
    #[serde(default = "default_step")]
    pub step_factor: f64,
    #[serde(default = "default_mea")]
    pub n_mea: usize,
    #[serde(default = "default_method")]
    pub method: DerivativeMethod,
    pub initial_centers: Vec<[f64; 2]>,
    #[serde(default = "half")]
    pub initial_radius: f64,
    #[serde(default = "two")]
    pub data_refine: f64,
    #[serde(default = "eight")]
    pub extra_modes: usize,
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "default_rmin")]
    pub r_min_fraction: f64,
    #[serde(default = "ten")]
    pub max_halvings: usize,
    /// Halve the step until the objective does not increase.
    #[serde(default)]
    pub backtrack: bool,
}

fn ten() -> usize {
    10
}
fn eight() -> usize {
    8
}
fn half() -> f64 {
    0.5
}
fn two() -> f64 {
    2.0
}
fn default_step() -> f64 {
    0.005
}
fn default_mea() -> usize {
    64
}
fn default_rmin() -> f64 {
    0.05
}
fn default_method() -> DerivativeMethod {
    DerivativeMethod::Transmission
}

pub fn parse(text: &str) -> CResult<Config> {
    let value: toml::Value = text.parse::<toml::Table>().map(toml::Value::Table).map_err(|e| err("", e))?;
    serde_path_to_error::deserialize(value).map_err(|e| err(e.path().to_string(), e.inner()))
}

pub fn load(path: &Path) -> CResult<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| err("", format!("{}: {e}", path.display())))?;
    parse(&text)
}

fn require<T>(v: Option<T>, path: &str) -> CResult<T> {
    v.ok_or_else(|| err(path, "missing"))
}

fn positive(v: f64, path: &str) -> CResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(err(path, format!("must be positive, got {v}")))
    }
}

impl Background {
    pub fn medium(&self) -> CResult<IsotropicMedium<f64>> {
        let rho = positive(self.rho, "background.rho")?;
        let (lambda, mu) = match (self.lambda, self.mu, self.cp, self.cs) {
            (Some(l), Some(m), None, None) => (l, m),
            (None, None, Some(cp), Some(cs)) => {
                let mu = rho * cs * cs;
                (rho * cp * cp - 2.0 * mu, mu)
            }
            _ => return Err(err("background", "give either `lambda` and `mu` or `cp` and `cs`")),
        };
        IsotropicMedium::new(lambda, mu, rho).map_err(|e| err("background", e))
    }
}

impl MaterialCfg {
    pub fn material(&self, path: &str) -> CResult<Material<f64>> {
        positive(self.rho, &format!("{path}.rho"))?;
        let rho = C64::new(self.rho, self.rho_im);
        match (self.lambda, self.mu, self.voigt) {
            (Some(l), Some(m), None) => {
                let iso = IsotropicMedium::new(l, m, self.rho).map_err(|e| err(path, e))?;
                Material::new(iso.stiffness(), rho).map_err(|e| err(path, e))
            }
            (None, None, Some(v)) => {
                let c = StiffnessTensor2D::new(v[0], v[1], v[2], v[3], v[4], v[5]).map_err(|e| err(format!("{path}.voigt"), e))?;
                Material::new(c, rho).map_err(|e| err(path, e))
            }
            _ => Err(err(path, "give either `lambda` and `mu` or `voigt`")),
        }
    }
}

impl Obstacle {
    pub fn curve(&self, path: &str) -> CResult<StarCurve> {
        let order = self.fit_order.unwrap_or(32);
        let fail = |e: elastoscat::Error| err(path, e);
        match self.shape {
            ShapeCfg::Circle => {
                let r = positive(require(self.radius, &format!("{path}.radius"))?, &format!("{path}.radius"))?;
                Ok(StarCurve::circle(self.center, r))
            }
            ShapeCfg::Star => {
                let c = require(self.coeffs.clone(), &format!("{path}.coeffs"))?;
                StarCurve::new(self.center, c).map_err(|e| err(format!("{path}.coeffs"), e))
            }
            ShapeCfg::Kite => {
                let s = positive(require(self.scale, &format!("{path}.scale"))?, &format!("{path}.scale"))?;
                inverse::kite(self.center, s, order).map_err(fail)
            }
            ShapeCfg::Ellipse => {
                let ab = require(self.semi_axes, &format!("{path}.semi_axes"))?;
                positive(ab[0].min(ab[1]), &format!("{path}.semi_axes"))?;
                inverse::ellipse(self.center, ab[0], ab[1], self.angle.unwrap_or(0.0), order).map_err(fail)
            }
        }
    }
}

/// Everything a forward or inverse run needs, validated.
pub struct Resolved {
    pub scenario: Scenario,
    pub curves: Vec<StarCurve>,
}

impl Config {
    pub fn resolve(&self, nt_override: Option<usize>) -> CResult<Resolved> {
        let background = require(self.background.as_ref(), "background")?.medium()?;
        let domain = require(self.domain.as_ref(), "domain")?;
        let waves = require(self.waves.as_ref(), "waves")?;
        let radius = positive(domain.radius, "domain.radius")?;
        let h = positive(domain.h, "domain.h")?;
        let mut curves = Vec::new();
        let mut materials = Vec::new();
        for (i, o) in self.obstacles.iter().enumerate() {
            let path = format!("obstacles[{i}]");
            curves.push(o.curve(&path)?);
            materials.push(o.material.material(&format!("{path}.material"))?);
        }
        elastoscat::mesh::check_curves(&curves, radius).map_err(|e| err("obstacles", e))?;
        if waves.omegas.is_empty() {
            return Err(err("waves.omegas", "empty"));
        }
        for (i, &w) in waves.omegas.iter().enumerate() {
            positive(w, &format!("waves.omegas[{i}]"))?;
        }
        if waves.directions_deg.is_empty() {
            return Err(err("waves.directions_deg", "empty"));
        }
        let n_mea = self.inversion.as_ref().map_or(64, |i| i.n_mea);
        let scenario = Scenario {
            background,
            materials,
            radius,
            h,
            n_trunc: nt_override.or(domain.n_trunc),
            omegas: waves.omegas.clone(),
            directions: waves
                .directions_deg
                .iter()
                .map(|d| {
                    let t = d * PI / 180.0;
                    [t.cos(), t.sin()]
                })
                .collect(),
            amplitude: [
                C64::new(waves.amplitude_p[0], waves.amplitude_p[1]),
                C64::new(waves.amplitude_s[0], waves.amplitude_s[1]),
            ],
            n_mea,
        };
        scenario.validate().map_err(|e| err("waves", e))?;
        Ok(Resolved { scenario, curves })
    }

    pub fn descent(&self) -> CResult<(DescentOptions, ShapeParams)> {
        let inv = require(self.inversion.as_ref(), "inversion")?;
        if inv.initial_centers.len() != self.obstacles.len() {
            return Err(err(
                "inversion.initial_centers",
                format!("{} centres for {} obstacles", inv.initial_centers.len(), self.obstacles.len()),
            ));
        }
        positive(inv.step_factor, "inversion.step_factor")?;
        positive(inv.initial_radius, "inversion.initial_radius")?;
        if !(inv.data_refine >= 1.0) {
            return Err(err("inversion.data_refine", "must be at least 1"));
        }
        if !(inv.noise >= 0.0) {
            return Err(err("inversion.noise", "must be non-negative"));
        }
        let opts = DescentOptions {
            steps: inv.steps,
            step_factor: inv.step_factor,
            method: inv.method,
            r_min_fraction: inv.r_min_fraction,
            max_halvings: inv.max_halvings,
            backtrack: inv.backtrack,
        };
        Ok((opts, ShapeParams::circles(&inv.initial_centers, inv.initial_radius, inv.order)))
    }
}
