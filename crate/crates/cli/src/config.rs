//! JSON experiment configuration: schema, validation, and resolution into
//! core types. Every run echoes the fully resolved config into a manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use latticeq::error::Error;
use latticeq::lattice::{LatticeBox, TrimPattern};
use latticeq::operator::PotentialSpec;
use latticeq::transport::{Containment, GrowthWeight, MomentOptions, Route};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelBlock,
    #[serde(default)]
    pub observable: Option<ObservableBlock>,
    #[serde(default)]
    pub route: Option<RouteChoice>,
    #[serde(default)]
    pub tolerances: ToleranceBlock,
    #[serde(default)]
    pub caps: CapsBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub spectrum: Option<SpectrumBlock>,
    #[serde(default)]
    pub evolve: Option<EvolveBlock>,
    #[serde(default)]
    pub green: Option<GreenBlock>,
    #[serde(default)]
    pub eigenfun: Option<EigenfunBlock>,
    #[serde(default)]
    pub ct_check: Option<CtBlock>,
    #[serde(default)]
    pub borel: Option<BorelBlock>,
    #[serde(default)]
    pub contrast: Option<ContrastBlock>,
    #[serde(default)]
    pub certify: Option<CertifyBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub dim: usize,
    /// Trimmed sublattice: periods of the first axes; the remaining axes
    /// are free. Empty periods with `full = false` means no potential
    /// support anywhere; `full = true` puts potential on every site.
    #[serde(default)]
    pub rho: Vec<i64>,
    #[serde(default)]
    pub full_lattice: bool,
    pub box_radius: i64,
    #[serde(default)]
    pub center: Option<Vec<i64>>,
    pub potential: PotentialBlock,
    #[serde(default = "one")]
    pub realizations: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialBlock {
    Zero,
    IidUniform { width: f64, seed: u64, #[serde(default)] realization: u64 },
    Table { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableBlock {
    pub weight: WeightBlock,
    pub base_site: Vec<i64>,
    #[serde(default)]
    pub t_grid: Option<TGridBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightBlock {
    Power { q: f64 },
    ConstantOne,
    Table { path: PathBuf, cert_c: f64, cert_beta: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TGridBlock {
    Explicit(Vec<f64>),
    Spaced { start: f64, stop: f64, points: usize, #[serde(default)] log: bool },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum RouteChoice {
    Abel,
    Cesaro,
    Resolvent,
    All,
}

impl RouteChoice {
    pub fn routes(&self) -> Vec<Route> {
        match self {
            RouteChoice::Abel => vec![Route::Abel],
            RouteChoice::Cesaro => vec![Route::Cesaro],
            RouteChoice::Resolvent => vec![Route::Resolvent],
            RouteChoice::All => vec![Route::Abel, Route::Cesaro, Route::Resolvent],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceBlock {
    #[serde(default = "d_time_tol")]
    pub time_tol: f64,
    #[serde(default = "d_evolve_tol")]
    pub evolve_tol: f64,
    #[serde(default = "d_time_quad")]
    pub time_quad_rel: f64,
    #[serde(default = "d_solve_tol")]
    pub solve_tol: f64,
    #[serde(default = "d_energy_quad")]
    pub energy_quad_rel: f64,
    #[serde(default)]
    pub trust_containment: bool,
}

fn d_time_tol() -> f64 {
    1e-6
}
fn d_evolve_tol() -> f64 {
    1e-8
}
fn d_time_quad() -> f64 {
    1e-4
}
fn d_solve_tol() -> f64 {
    1e-8
}
fn d_energy_quad() -> f64 {
    1e-4
}

impl Default for ToleranceBlock {
    fn default() -> Self {
        ToleranceBlock {
            time_tol: d_time_tol(),
            evolve_tol: d_evolve_tol(),
            time_quad_rel: d_time_quad(),
            solve_tol: d_solve_tol(),
            energy_quad_rel: d_energy_quad(),
            trust_containment: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsBlock {
    #[serde(default = "d_max_sites")]
    pub max_sites: usize,
    #[serde(default = "d_dense_cap")]
    pub dense_cap: usize,
}

fn d_max_sites() -> usize {
    16_000_000
}
fn d_dense_cap() -> usize {
    6000
}

impl Default for CapsBlock {
    fn default() -> Self {
        CapsBlock { max_sites: d_max_sites(), dense_cap: d_dense_cap() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    #[serde(default)]
    pub window_only: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveBlock {
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenBlock {
    pub z_re: f64,
    pub z_im: f64,
    pub source: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstructionBlock {
    /// Trimmed plane wave with per-axis mode numbers and quasi-momenta.
    PlaneWave { k: Vec<i64>, kappa: Vec<f64> },
    /// Trimmed sine factor times a transverse square-summable solution.
    Transverse { k: Vec<i64>, free_energy: f64, resolution: usize },
    /// One-dimensional three-term recurrence solution at the given energy.
    Recurrence { energy: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenfunBlock {
    pub construction: ConstructionBlock,
    pub profile_l_max: i64,
    #[serde(default)]
    pub weight_q: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtBlock {
    pub z_re: f64,
    pub z_im: f64,
    pub source: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BorelBlock {
    pub construction: ConstructionBlock,
    pub site: Vec<i64>,
    pub gammas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContrastBlock {
    /// fully disordered reference model
    pub reference_dim: usize,
    pub reference_box_radius: i64,
    pub reference_width: f64,
    pub reference_seed: u64,
    pub q: f64,
    #[serde(default = "d_deloc")]
    pub delocalized_threshold: f64,
    #[serde(default = "d_loc")]
    pub localized_threshold: f64,
    pub fit_window: (f64, f64),
}

fn d_deloc() -> f64 {
    0.7
}
fn d_loc() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyBlock {
    pub construction: ConstructionBlock,
    pub profile_l_max: i64,
    pub alpha: f64,
    pub epsilons: Vec<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("config is not valid JSON: {e}")))?;
        for (key, raw) in overrides {
            apply_override(&mut value, key, raw)?;
        }
        let cfg: ExperimentConfig = serde_json::from_value(value)
            .map_err(|e| Error::config(format!("config schema violation: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let m = &self.model;
        if m.dim == 0 {
            return Err(Error::config("model.dim must be at least 1"));
        }
        if m.rho.len() > m.dim {
            return Err(Error::config(format!(
                "model.rho has {} entries but model.dim = {}",
                m.rho.len(),
                m.dim
            )));
        }
        if m.full_lattice && !m.rho.is_empty() {
            return Err(Error::config(
                "model.full_lattice and model.rho are mutually exclusive",
            ));
        }
        if let Some(c) = &m.center {
            if c.len() != m.dim {
                return Err(Error::config(format!(
                    "model.center has dimension {}, expected {}",
                    c.len(),
                    m.dim
                )));
            }
        }
        let sites = (2 * m.box_radius + 1).pow(m.dim as u32);
        if sites as usize > self.caps.max_sites {
            return Err(Error::config(format!(
                "box holds {sites} sites, above caps.max_sites = {}",
                self.caps.max_sites
            )));
        }
        if let Some(obs) = &self.observable {
            if obs.base_site.len() != m.dim {
                return Err(Error::config(format!(
                    "observable.base_site has dimension {}, expected {}",
                    obs.base_site.len(),
                    m.dim
                )));
            }
        }
        Ok(())
    }

    pub fn pattern(&self) -> Result<TrimPattern, Error> {
        if self.model.full_lattice {
            Ok(TrimPattern::full(self.model.dim))
        } else {
            TrimPattern::trimmed(self.model.rho.clone(), self.model.dim - self.model.rho.len())
        }
    }

    pub fn boxref(&self) -> Result<LatticeBox, Error> {
        let center = self
            .model
            .center
            .clone()
            .unwrap_or_else(|| vec![0; self.model.dim]);
        LatticeBox::new(center, self.model.box_radius)
    }

    pub fn potential(&self, realization: u64) -> Result<PotentialSpec, Error> {
        let pattern = self.pattern()?;
        match &self.model.potential {
            PotentialBlock::Zero => Ok(PotentialSpec::zero(self.model.dim)),
            PotentialBlock::IidUniform { width, seed, realization: base } => {
                PotentialSpec::iid_uniform(*width, *seed, base + realization, pattern)
            }
            PotentialBlock::Table { path } => {
                let table = latticeq::io::read_potential_csv(path)?;
                PotentialSpec::table(table, pattern)
            }
        }
    }

    pub fn weight(&self) -> Result<GrowthWeight, Error> {
        let obs = self
            .observable
            .as_ref()
            .ok_or_else(|| Error::config("missing required block: observable"))?;
        match &obs.weight {
            WeightBlock::Power { q } => GrowthWeight::power(*q, obs.base_site.clone()),
            WeightBlock::ConstantOne => Ok(GrowthWeight::constant_one()),
            WeightBlock::Table { path, cert_c, cert_beta } => {
                let table = latticeq::io::read_potential_csv(path)?;
                GrowthWeight::table(table, *cert_c, *cert_beta)
            }
        }
    }

    pub fn t_grid(&self) -> Result<Vec<f64>, Error> {
        let obs = self
            .observable
            .as_ref()
            .ok_or_else(|| Error::config("missing required block: observable"))?;
        match &obs.t_grid {
            None => Err(Error::config("missing required field: observable.t_grid")),
            Some(TGridBlock::Explicit(v)) => Ok(v.clone()),
            Some(TGridBlock::Spaced { start, stop, points, log }) => {
                if *points < 2 || *stop <= *start || *start <= 0.0 {
                    return Err(Error::config(
                        "observable.t_grid needs 0 < start < stop and points >= 2",
                    ));
                }
                let n = *points;
                Ok((0..n)
                    .map(|i| {
                        let s = i as f64 / (n - 1) as f64;
                        if *log {
                            (start.ln() + s * (stop.ln() - start.ln())).exp()
                        } else {
                            start + s * (stop - start)
                        }
                    })
                    .collect())
            }
        }
    }

    pub fn moment_options(&self) -> MomentOptions {
        let t = &self.tolerances;
        MomentOptions {
            time_tol: t.time_tol,
            evolve_tol: t.evolve_tol,
            time_quad_rel: t.time_quad_rel,
            solve_tol: t.solve_tol,
            energy_quad_rel: t.energy_quad_rel,
            containment: if t.trust_containment {
                Containment::Trusted
            } else {
                Containment::Enforce
            },
            wavefront_speed: None,
            dt: None,
            dense_cap: self.caps.dense_cap,
        }
    }
}

fn apply_override(value: &mut serde_json::Value, key: &str, raw: &str) -> Result<(), Error> {
    let parsed: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut cursor = value;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            match cursor {
                serde_json::Value::Object(map) => {
                    map.insert(part.to_string(), parsed);
                    return Ok(());
                }
                _ => {
                    return Err(Error::config(format!(
                        "override path {key} does not address an object"
                    )))
                }
            }
        }
        cursor = match cursor {
            serde_json::Value::Object(map) => map
                .entry(part.to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default())),
            _ => {
                return Err(Error::config(format!(
                    "override path {key} does not address an object"
                )))
            }
        };
    }
    Ok(())
}

/// Manifest echoed next to every run's artifacts.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool_version: String,
    pub subcommand: String,
    pub config: ExperimentConfig,
    pub threads: usize,
    pub timings_seconds: BTreeMap<String, f64>,
    pub notes: BTreeMap<String, serde_json::Value>,
}
