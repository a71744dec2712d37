use std::path::{Path, PathBuf};

use omc::baselines::EpsilonSchedule;
use omc::kernel::DiscrepancyKernel;
use omc::optimize::{Method, OptimizerConfig};
use omc::parallel::Mode;
use omc::simulators::{self, Simulator, SimulatorOptions, SIMULATOR_NAMES};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// One batch of optimizations at the final ε.
    Omc,
    /// OMC in ε rounds with warm starts.
    OmcSeq,
    Rejection,
    Smc,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Omc => "omc",
            Algorithm::OmcSeq => "omc-seq",
            Algorithm::Rejection => "rejection",
            Algorithm::Smc => "smc",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct CompareSettings {
    pub algorithms: Vec<Algorithm>,
    pub repetitions: usize,
}

impl Default for CompareSettings {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::OmcSeq, Algorithm::Smc],
            repetitions: 5,
        }
    }
}

/// Everything a run depends on. Loaded from an optional TOML file, then
/// overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    pub sim: String,
    pub alg: Algorithm,
    /// ε schedule; the simulator's default when absent.
    pub eps: Option<Vec<f64>>,
    pub n: usize,
    pub seed: u64,
    pub workers: usize,
    pub mode: Mode,
    /// Global simulation budget for anytime and rejection runs.
    pub budget: Option<u64>,
    pub out: PathBuf,
    pub optimizer: OptimizerConfig,
    pub simulators: SimulatorOptions,
    pub compare: CompareSettings,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            sim: "unknown-mean".into(),
            alg: Algorithm::Omc,
            eps: None,
            n: 1000,
            seed: 42,
            workers: 1,
            mode: Mode::Batch,
            budget: None,
            out: PathBuf::from("omc-out"),
            optimizer: OptimizerConfig::default(),
            simulators: SimulatorOptions::default(),
            compare: CompareSettings::default(),
        }
    }
}

/// Flag values; `None` leaves the configured value alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub sim: Option<String>,
    pub alg: Option<Algorithm>,
    pub optimizer: Option<Method>,
    pub eps: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub mode: Option<Mode>,
    pub budget: Option<u64>,
    pub out: Option<PathBuf>,
    pub config: Option<PathBuf>,
}

impl Settings {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("malformed config {}: {e}", path.display())))
    }

    /// Config file (if any), then flags, then the `OMC_THREADS` value.
    pub fn resolve(overrides: Overrides, omc_threads: Option<&str>) -> CliResult<Self> {
        let mut s = match &overrides.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        if let Some(v) = overrides.sim {
            s.sim = v;
        }
        if let Some(v) = overrides.alg {
            s.alg = v;
        }
        if let Some(m) = overrides.optimizer {
            s.optimizer.method = m;
            if m == Method::RandomWalk {
                s.optimizer.convergence_tol = None;
            }
        }
        if let Some(v) = overrides.eps {
            s.eps = Some(v);
        }
        if let Some(v) = overrides.n {
            s.n = v;
        }
        if let Some(v) = overrides.seed {
            s.seed = v;
        }
        if let Some(v) = overrides.workers {
            s.workers = v;
        }
        if let Some(v) = overrides.mode {
            s.mode = v;
        }
        if let Some(v) = overrides.budget {
            s.budget = Some(v);
        }
        if let Some(v) = overrides.out {
            s.out = v;
        }
        if let Some(t) = omc_threads.filter(|t| !t.is_empty()) {
            s.workers = t
                .parse()
                .map_err(|_| CliError::Usage(format!("OMC_THREADS must be a positive integer, got '{t}'")))?;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !SIMULATOR_NAMES.contains(&self.sim.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown simulator '{}' (expected one of {})",
                self.sim,
                SIMULATOR_NAMES.join(", ")
            )));
        }
        if self.n == 0 || self.workers == 0 || self.budget == Some(0) {
            return Err(CliError::Usage("n, workers and budget must be positive".into()));
        }
        if self.compare.repetitions == 0 || self.compare.algorithms.is_empty() {
            return Err(CliError::Usage("compare needs at least one algorithm and repetition".into()));
        }
        self.optimizer.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(eps) = &self.eps {
            EpsilonSchedule::new(eps.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        Ok(())
    }

    pub fn simulator(&self) -> CliResult<Box<dyn Simulator>> {
        simulators::build(&self.sim, &self.simulators).map_err(|e| match e {
            e @ omc::OmcError::UnknownSimulator(_) | e @ omc::OmcError::InvalidArgument(_) => {
                CliError::Usage(e.to_string())
            }
            e => CliError::Runtime(e),
        })
    }

    pub fn schedule(&self, sim: &dyn Simulator) -> CliResult<EpsilonSchedule> {
        let values = self.eps.clone().unwrap_or_else(|| sim.default_schedule());
        EpsilonSchedule::new(values).map_err(|e| CliError::Usage(e.to_string()))
    }

    /// ε-ball kernel at `epsilon`, with the simulator's statistic scale.
    pub fn kernel(&self, sim: &dyn Simulator, epsilon: f64) -> CliResult<DiscrepancyKernel> {
        let kernel = match sim.default_scale() {
            Some(scale) => DiscrepancyKernel::with_scale(epsilon, scale)?,
            None => DiscrepancyKernel::new(epsilon)?,
        };
        Ok(kernel)
    }

    pub fn per_particle_budget(&self) -> u64 {
        self.optimizer.max_sims_per_round
    }

    pub fn total_budget(&self) -> u64 {
        match self.alg {
            Algorithm::Rejection => self.budget.unwrap_or(self.n as u64 * 100_000),
            _ => self.budget.unwrap_or(self.n as u64 * self.optimizer.max_sims_per_round),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "sim = \"exponential\"\nn = 77\nseed = 5\n[optimizer]\nmax-sims-per-round = 50\n[simulators.exponential]\nobserved = 3.0\n",
        )
        .unwrap();
        let s = Settings::resolve(
            Overrides {
                config: Some(path),
                seed: Some(9),
                ..Default::default()
            },
            None,
        )
        .unwrap();
        assert_eq!(s.sim, "exponential");
        assert_eq!(s.n, 77);
        assert_eq!(s.seed, 9);
        assert_eq!(s.optimizer.max_sims_per_round, 50);
        assert_eq!(s.simulators.exponential.observed, 3.0);
    }

    #[test]
    fn env_threads_override_workers() {
        let s = Settings::resolve(
            Overrides {
                workers: Some(2),
                ..Default::default()
            },
            Some("6"),
        )
        .unwrap();
        assert_eq!(s.workers, 6);
        assert!(Settings::resolve(Overrides::default(), Some("many")).is_err());
    }

    #[test]
    fn random_walk_flag_stops_at_epsilon() {
        let s = Settings::resolve(
            Overrides {
                optimizer: Some(Method::RandomWalk),
                ..Default::default()
            },
            None,
        )
        .unwrap();
        assert_eq!(s.optimizer.convergence_tol, None);
    }

    #[test]
    fn usage_errors() {
        let bad = |o: Overrides| Settings::resolve(o, None).unwrap_err().exit_code();
        assert_eq!(
            bad(Overrides {
                sim: Some("foo".into()),
                ..Default::default()
            }),
            2
        );
        assert_eq!(
            bad(Overrides {
                eps: Some(vec![0.01, 0.1]),
                ..Default::default()
            }),
            2
        );
        assert_eq!(
            bad(Overrides {
                n: Some(0),
                ..Default::default()
            }),
            2
        );
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "particles = 3\n").unwrap();
        let err = Settings::from_file(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
