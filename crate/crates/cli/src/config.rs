use std::fmt;
use std::path::{Path, PathBuf};

use delaykinetic::io::read_path_measure_dir;
use delaykinetic::{
    ConvergenceSetup, DelayMeasure, DiscreteMeasure, FixedPointConfig, HistoryPath, InitialSampler, IntegratorConfig,
    KernelSpec, Model, Scheme,
};
use serde::{Deserialize, Serialize};

/// A rejected configuration; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn reject(msg: impl fmt::Display) -> ConfigError {
    ConfigError(msg.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Meanfield,
    Transport,
    Coherence,
    Converge,
    Stability,
}

/// One atom `w delta_s` of the delay measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoAtom {
    pub s: f64,
    pub weight: f64,
}

/// Where the initial paths come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `n` uniformly weighted paths drawn from `sampler` with `seed`.
    Sample {
        sampler: InitialSampler,
        n: usize,
        seed: u64,
        #[serde(default = "default_segments")]
        segments: usize,
    },
    /// A path-measure directory with a weights manifest.
    Directory { path: PathBuf },
}

fn default_segments() -> usize {
    8
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_window_factor")]
    pub window_factor: f64,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iters() -> usize {
    500
}

fn default_window_factor() -> f64 {
    0.5
}

impl Default for PicardSpec {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iters: default_max_iters(),
            window_factor: default_window_factor(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSpec {
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    pub seeds: Vec<u64>,
    pub times: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityRoute {
    /// Compare path-space fixed points with `W1` on path windows.
    #[default]
    Paths,
    /// Compare transport solutions with windowed sup distances.
    Transport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySpec {
    pub epsilons: Vec<f64>,
    #[serde(default = "default_stability_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub route: StabilityRoute,
}

fn default_stability_tolerance() -> f64 {
    1e-6
}

fn default_scheme() -> Scheme {
    Scheme::Rk4
}

/// A complete experiment, read from one JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub model: KernelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<RhoAtom>>,
    pub dim: usize,
    pub tau: f64,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    pub initial: InitialSpec,
    #[serde(default)]
    pub picard: PicardSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converge: Option<ConvergeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// A validated experiment with every library object built.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: Model,
    pub integrator: IntegratorConfig,
    pub fixed_point: FixedPointConfig,
    pub initial: DiscreteMeasure<HistoryPath>,
    pub convergence: Option<ConvergenceSetup>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| reject(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| reject(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks every constraint and builds the model, grids and initial data.
    ///
    /// Relative directory paths are resolved against `base`.
    pub fn prepare(self, base: &Path) -> Result<Experiment, ConfigError> {
        if self.dim == 0 {
            return Err(reject("dim must be at least 1"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(reject(format!("tau must be positive, got {}", self.tau)));
        }
        let integrator = IntegratorConfig::new(self.dt, self.scheme, self.horizon).map_err(reject)?;
        integrator.validate(self.tau).map_err(reject)?;
        let rho = match &self.rho {
            None => None,
            Some(atoms) => {
                let pairs: Vec<(f64, f64)> = atoms.iter().map(|a| (a.s, a.weight)).collect();
                Some(DelayMeasure::new(self.tau, &pairs).map_err(|e| reject(format!("rho: {e}")))?)
            }
        };
        let kernel = self
            .model
            .build(self.dim, self.tau, rho.as_ref())
            .map_err(|e| reject(format!("model: {e}")))?;
        let model = Model::from(kernel);
        let p = self.picard;
        let mut fixed_point = FixedPointConfig::new(p.tol, p.max_iters, integrator).map_err(reject)?;
        fixed_point.window_factor = p.window_factor;
        fixed_point.validate().map_err(reject)?;

        let needs_parts = matches!(self.mode, Mode::Transport | Mode::Coherence)
            || (self.mode == Mode::Stability
                && self.stability.as_ref().is_some_and(|s| s.route == StabilityRoute::Transport));
        if needs_parts && !matches!(model, Model::Imperfect(..)) {
            return Err(reject(format!(
                "mode {:?} needs a model of the form K~ with rho; `{}` is a general path kernel",
                self.mode,
                model.kernel().name()
            )));
        }

        let initial = match &self.initial {
            InitialSpec::Sample {
                sampler,
                n,
                seed,
                segments,
            } => {
                if *n == 0 || *segments == 0 {
                    return Err(reject("initial.n and initial.segments must be positive"));
                }
                let paths = sampler
                    .sample_seeded(*seed, *n, self.dim, self.tau, *segments)
                    .map_err(|e| reject(format!("initial: {e}")))?;
                DiscreteMeasure::uniform(paths).map_err(reject)?
            }
            InitialSpec::Directory { path } => {
                let dir = base.join(path);
                let mu = read_path_measure_dir(&dir).map_err(|e| reject(format!("{}: {e}", dir.display())))?;
                if mu.dim() != self.dim || (mu.tau() - self.tau).abs() > 1e-12 * self.tau {
                    return Err(reject("initial paths do not match dim and tau"));
                }
                mu
            }
        };

        let convergence = match (self.mode, &self.converge) {
            (Mode::Converge, None) => return Err(reject("mode converge requires a `converge` section")),
            (Mode::Converge, Some(c)) => {
                let InitialSpec::Sample { sampler, segments, .. } = &self.initial else {
                    return Err(reject("mode converge requires sampled initial data"));
                };
                for &t in &c.times {
                    let k = integrator.step_of(t).map_err(|e| reject(format!("converge.times: {e}")))?;
                    if k > integrator.steps() {
                        return Err(reject(format!("converge.times: {t} exceeds the horizon")));
                    }
                }
                Some(ConvergenceSetup {
                    n_list: c.n_list.clone(),
                    n_ref: c.n_ref,
                    seeds: c.seeds.clone(),
                    times: c.times.clone(),
                    sampler: *sampler,
                    segments: *segments,
                })
            }
            _ => None,
        };
        if let Some(c) = &convergence {
            if c.n_list.is_empty() || c.seeds.is_empty() || c.times.is_empty() {
                return Err(reject("converge: n_list, seeds and times must be nonempty"));
            }
            if c.n_list.windows(2).any(|w| w[1] <= w[0]) || c.n_list.iter().any(|&n| n == 0 || n > c.n_ref) {
                return Err(reject("converge: n_list must increase strictly within 1..=n_ref"));
            }
        }
        if self.mode == Mode::Stability {
            let Some(s) = &self.stability else {
                return Err(reject("mode stability requires a `stability` section"));
            };
            if s.epsilons.is_empty() || s.epsilons.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
                return Err(reject("stability.epsilons must be a nonempty list of nonnegative numbers"));
            }
            if !(s.tolerance >= 0.0) {
                return Err(reject("stability.tolerance must be nonnegative"));
            }
        }

        Ok(Experiment {
            config: self,
            model,
            integrator,
            fixed_point,
            initial,
            convergence,
        })
    }
}
