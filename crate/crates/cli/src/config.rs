//! Run configuration: JSON schema, defaults, validation, and the resolved
//! form written next to every run's outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use prethermal::normal_form::NormalFormParams;
use prethermal::truncation::TruncationPolicy;
use prethermal::{compute_eps0, Error, ExtensiveOperator, Lattice, NumberOperator};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    Ising,
    Custom {
        /// JSON-lines extensive operator file for the perturbation.
        perturbation: PathBuf,
        /// JSON file `{"entries": [{"site": [x], "up": i, "down": i}, ...]}`.
        number_op: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct TimeGridSpec {
    pub t0: f64,
    pub factor: f64,
    pub count: usize,
}

impl TimeGridSpec {
    pub fn times(&self) -> Vec<f64> {
        prethermal::dense::geometric_times(self.t0, self.factor, self.count)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.count == 0 {
            return Err(Error::InvalidParams("empty time grid".into()));
        }
        if !self.t0.is_finite() || self.t0 <= 0.0 || !self.factor.is_finite() || self.factor <= 1.0
        {
            return Err(Error::InvalidParams(
                "time grid needs t0 > 0 and factor > 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum StateSpec {
    AllUp,
    Neel,
    Random { offset: u64 },
}

impl StateSpec {
    pub fn label(&self) -> String {
        match self {
            StateSpec::AllUp => "all_up".into(),
            StateSpec::Neel => "neel".into(),
            StateSpec::Random { offset } => format!("random{offset}"),
        }
    }
}

fn default_dim() -> usize {
    1
}
fn default_coeff_floor() -> f64 {
    1e-13
}
fn default_series_tol() -> f64 {
    1e-12
}
fn default_c_lr() -> f64 {
    1.0
}
fn default_grid() -> TimeGridSpec {
    TimeGridSpec {
        t0: 0.1,
        factor: 2.0,
        count: 11,
    }
}
fn default_states() -> Vec<StateSpec> {
    vec![StateSpec::AllUp]
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// User-facing configuration. Unknown fields are rejected.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub sites: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub kappa: f64,
    /// Perturbation strength; alternatively `eps_div` sets `eps = eps0/k`.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub eps_div: Option<f64>,
    #[serde(default)]
    pub n_star_override: Option<usize>,
    #[serde(default)]
    pub eps0_override: Option<f64>,
    #[serde(default)]
    pub support_cap: Option<usize>,
    #[serde(default = "default_coeff_floor")]
    pub coeff_floor: f64,
    #[serde(default = "default_series_tol")]
    pub series_tol: f64,
    #[serde(default = "default_c_lr")]
    pub c_lr: f64,
    #[serde(default = "default_grid")]
    pub time_grid: TimeGridSpec,
    #[serde(default = "default_states")]
    pub initial_states: Vec<StateSpec>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

/// Configuration with every default filled and `eps`/`eps0`/`n_star`
/// resolved; serialized next to the outputs and hashed for file names.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub model: ModelSpec,
    pub sites: usize,
    pub dim: usize,
    pub kappa: f64,
    pub eps: f64,
    pub eps0: f64,
    pub n_star: usize,
    pub research_mode: bool,
    pub norm_p_kappa: f64,
    pub support_cap: usize,
    pub coeff_floor: f64,
    pub series_tol: f64,
    pub c_lr: f64,
    pub time_grid: TimeGridSpec,
    pub initial_states: Vec<StateSpec>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl ResolvedConfig {
    pub fn policy(&self) -> Result<TruncationPolicy, Error> {
        TruncationPolicy::new(self.support_cap, self.coeff_floor, self.series_tol)
    }

    pub fn params(&self) -> Result<NormalFormParams, Error> {
        let policy = self.policy()?;
        if self.research_mode {
            let mut p = NormalFormParams::research(
                self.kappa,
                self.eps,
                self.n_star,
                self.norm_p_kappa,
                policy,
            )?;
            // an explicit eps0 override still steers reporting and the
            // theory-window labeling
            if self.eps0 < p.eps0 {
                p.eps0 = self.eps0;
            }
            Ok(p)
        } else {
            NormalFormParams::certified(
                self.kappa,
                self.eps,
                self.norm_p_kappa,
                Some(self.eps0),
                policy,
            )
        }
    }

    /// Short content hash used in experiment file names. The output
    /// directory is excluded so the hash identifies the experiment, not
    /// where its artifacts land.
    pub fn hash(&self) -> String {
        let mut keyed = self.clone();
        keyed.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&keyed).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        hex::encode(&digest[..6])
    }
}

/// The built model operators plus the lattice they live on.
pub struct Model {
    pub lattice: Lattice,
    pub number_op: NumberOperator,
    pub perturbation: ExtensiveOperator,
}

#[derive(Deserialize)]
struct NumberOpEntry {
    site: Vec<i32>,
    up: i64,
    down: i64,
}

#[derive(Deserialize)]
struct NumberOpFile {
    entries: Vec<NumberOpEntry>,
}

pub fn build_model(spec: &ModelSpec, sites: usize, dim: usize) -> Result<Model, Error> {
    if dim != 1 {
        return Err(Error::InvalidParams(
            "the batch harness runs one-dimensional chains only".into(),
        ));
    }
    let lattice = Lattice::chain(sites)?;
    match spec {
        ModelSpec::Ising => {
            let (number_op, perturbation) = prethermal::ising::ising_chain(&lattice);
            Ok(Model {
                lattice,
                number_op,
                perturbation,
            })
        }
        ModelSpec::Custom {
            perturbation,
            number_op,
        } => {
            let p_file = std::fs::File::open(perturbation).map_err(|e| {
                Error::InvalidParams(format!("perturbation file {perturbation:?}: {e}"))
            })?;
            let p = prethermal::serialize::read_operator(std::io::BufReader::new(p_file))?;
            let n_raw = std::fs::read_to_string(number_op).map_err(|e| {
                Error::InvalidParams(format!("number operator file {number_op:?}: {e}"))
            })?;
            let n_file: NumberOpFile = serde_json::from_str(&n_raw)
                .map_err(|e| Error::Format(format!("number operator: {e}")))?;
            let entries = n_file
                .entries
                .into_iter()
                .map(|e| (prethermal::Site::new(&e.site), (e.up, e.down)))
                .collect();
            Ok(Model {
                lattice,
                number_op: NumberOperator::new(entries),
                perturbation: p,
            })
        }
    }
}

/// Environment override for the output directory (the only env knob).
pub const OUTPUT_DIR_ENV: &str = "PRETHERMAL_OUTPUT_DIR";

pub fn resolve(config: &RunConfig) -> Result<(ResolvedConfig, Model), Error> {
    if config.sites == 0 {
        return Err(Error::InvalidParams("sites must be positive".into()));
    }
    if !config.kappa.is_finite() || config.kappa <= 0.0 {
        return Err(Error::InvalidParams("kappa must be positive".into()));
    }
    config.time_grid.validate()?;
    if config.initial_states.is_empty() {
        return Err(Error::InvalidParams(
            "initial_states must be non-empty".into(),
        ));
    }
    let model = build_model(&config.model, config.sites, config.dim)?;
    let norm_p_kappa = model.perturbation.kappa_norm(config.kappa)?;
    if !norm_p_kappa.is_finite() || norm_p_kappa <= 0.0 {
        return Err(Error::InvalidParams(
            "perturbation has zero kappa-norm".into(),
        ));
    }
    let eps0 = match config.eps0_override {
        Some(v) => v,
        None => compute_eps0(norm_p_kappa),
    };
    let eps = match (config.eps, config.eps_div) {
        (Some(e), None) => e,
        (None, Some(k)) if k > 0.0 => eps0 / k,
        (None, None) => {
            return Err(Error::InvalidParams(
                "one of eps or eps_div is required".into(),
            ))
        }
        _ => {
            return Err(Error::InvalidParams(
                "eps and eps_div are mutually exclusive".into(),
            ))
        }
    };
    let research_mode = config.n_star_override.is_some();
    if !research_mode && eps >= eps0 {
        return Err(Error::ResearchModeRequired { eps, eps0 });
    }
    let support_cap = config.support_cap.unwrap_or(config.sites);
    let output_dir = match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) => PathBuf::from(dir),
        None => config.output_dir.clone(),
    };
    let resolved = ResolvedConfig {
        model: config.model.clone(),
        sites: config.sites,
        dim: config.dim,
        kappa: config.kappa,
        eps,
        eps0,
        n_star: match config.n_star_override {
            Some(n) => n,
            None => (eps0 / eps * (1.0 + 4.0 * f64::EPSILON)).floor() as usize,
        },
        research_mode,
        norm_p_kappa,
        support_cap,
        coeff_floor: config.coeff_floor,
        series_tol: config.series_tol,
        c_lr: config.c_lr,
        time_grid: config.time_grid,
        initial_states: config.initial_states.clone(),
        output_dir,
        seed: config.seed,
    };
    // fail early on invalid policy/params combinations
    resolved
        .policy()?
        .validate_for(model.perturbation.max_support())?;
    resolved.params()?;
    Ok((resolved, model))
}

pub fn load_config(path: &Path) -> Result<RunConfig, Error> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParams(format!("config {path:?}: {e}")))?;
    serde_json::from_str(&raw).map_err(|e| Error::Format(format!("config: {e}")))
}

pub fn load_resolved(path: &Path) -> Result<ResolvedConfig, Error> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParams(format!("resolved config {path:?}: {e}")))?;
    serde_json::from_str(&raw).map_err(|e| Error::Format(format!("resolved config: {e}")))
}
