use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::episode::{run_episode, EpisodeOptions};
use super::{with_domain, DomainSpec, HarnessError};
use crate::bandit::NormalGammaParams;
use crate::planners::{AnyPlanner, PlannerConfig, PlannerKind};
use crate::pomdp::{FilterConfig, GenerativeModel};

/// Bumped whenever a column is added, removed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

const EPISODE_HEADER: [&str; 19] = [
    "schema_version",
    "domain",
    "planner",
    "nb",
    "horizon",
    "kappa",
    "epsilon",
    "beta0",
    "lambda0",
    "nmem",
    "ucb_c",
    "episode",
    "seed",
    "undiscounted_return",
    "discounted_return",
    "steps",
    "peak_memory",
    "mean_nmab",
    "deprivation_count",
];

const SUMMARY_HEADER: [&str; 17] = [
    "schema_version",
    "domain",
    "planner",
    "nb",
    "horizon",
    "kappa",
    "epsilon",
    "beta0",
    "lambda0",
    "nmem",
    "episodes",
    "mean_return",
    "ci95_low",
    "ci95_high",
    "mean_nmab",
    "max_peak_memory",
    "status",
];

/// A value that may be written as a scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(xs) => xs.clone(),
        }
    }
}

/// Sweep axes. An empty `nmem` list means "no memory cap".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axes {
    #[serde(default = "default_nb")]
    pub nb: Vec<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: Vec<usize>,
    #[serde(default = "default_beta0")]
    pub beta0: Vec<f64>,
    #[serde(default)]
    pub nmem: Vec<usize>,
}

fn default_nb() -> Vec<usize> {
    vec![4096]
}
fn default_epsilon() -> Vec<f64> {
    vec![6.4]
}
fn default_kappa() -> Vec<usize> {
    vec![8]
}
fn default_beta0() -> Vec<f64> {
    vec![100.0]
}
fn default_horizon() -> usize {
    100
}
fn default_lambda0() -> f64 {
    0.01
}
fn default_particles() -> usize {
    FilterConfig::default().particles
}

impl Default for Axes {
    fn default() -> Self {
        Self {
            nb: default_nb(),
            epsilon: default_epsilon(),
            kappa: default_kappa(),
            beta0: default_beta0(),
            nmem: Vec::new(),
        }
    }
}

/// A full experiment as read from a sweep file.
///
/// ```toml
/// domain = "rocksample:11,11"          # or a list
/// planner = ["symbol", "posts"]        # or a single name
/// episodes = 10
/// base_seed = 0
/// out = "results/rocksample.csv"
///
/// [axes]
/// nb = [256, 1024, 4096]
/// epsilon = [3.2, 6.4, 12.8]
/// beta0 = [100, 500, 1000]
/// nmem = [100, 1000]                   # omit for uncapped
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: OneOrMany<DomainSpec>,
    pub planner: OneOrMany<String>,
    pub episodes: usize,
    #[serde(default, alias = "seed")]
    pub base_seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_lambda0")]
    pub lambda0: f64,
    #[serde(default = "default_particles")]
    pub particles: usize,
    pub out: PathBuf,
    #[serde(default)]
    pub axes: Axes,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.cells()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Every combination of the sweep axes, in a fixed order.
    pub fn cells(&self) -> Result<Vec<CellSpec>, HarnessError> {
        if self.episodes == 0 {
            return Err(HarnessError::Experiment("episodes must be at least 1".into()));
        }
        let planners = self
            .planner
            .to_vec()
            .iter()
            .map(|p| p.parse::<PlannerKind>())
            .collect::<Result<Vec<_>, _>>()?;
        let nmem: Vec<Option<usize>> = if self.axes.nmem.is_empty() {
            vec![None]
        } else {
            self.axes.nmem.iter().map(|&m| Some(m)).collect()
        };
        let a = &self.axes;
        for (name, len) in [
            ("nb", a.nb.len()),
            ("epsilon", a.epsilon.len()),
            ("kappa", a.kappa.len()),
            ("beta0", a.beta0.len()),
            ("domain", self.domain.to_vec().len()),
            ("planner", planners.len()),
        ] {
            if len == 0 {
                return Err(HarnessError::Experiment(format!("axis `{name}` is empty")));
            }
        }
        let mut cells = Vec::new();
        for domain in self.domain.to_vec() {
            for &planner in &planners {
                for &nb in &a.nb {
                    for &epsilon in &a.epsilon {
                        for &kappa in &a.kappa {
                            for &beta0 in &a.beta0 {
                                for &mem_cap in &nmem {
                                    let cell = CellSpec {
                                        domain,
                                        planner,
                                        nb,
                                        horizon: self.horizon,
                                        kappa,
                                        epsilon,
                                        beta0,
                                        lambda0: self.lambda0,
                                        mem_cap,
                                        particles: self.particles,
                                    };
                                    cell.planner_config()?;
                                    cells.push(cell);
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

/// One point of a sweep: a domain, a planner and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSpec {
    pub domain: DomainSpec,
    pub planner: PlannerKind,
    pub nb: usize,
    pub horizon: usize,
    pub kappa: usize,
    pub epsilon: f64,
    pub beta0: f64,
    pub lambda0: f64,
    pub mem_cap: Option<usize>,
    pub particles: usize,
}

impl CellSpec {
    /// Defaults: `T = 100`, `kappa = 8`, `epsilon = 6.4`, prior `(0, 0.01, 1, 100)`,
    /// uncapped, 10 000 particles.
    pub fn new(domain: DomainSpec, planner: PlannerKind, nb: usize) -> Self {
        Self {
            domain,
            planner,
            nb,
            horizon: 100,
            kappa: 8,
            epsilon: 6.4,
            beta0: 100.0,
            lambda0: 0.01,
            mem_cap: None,
            particles: default_particles(),
        }
    }

    /// Planner settings for this cell; the UCB1 constant is the domain's reward range.
    pub fn planner_config(&self) -> Result<PlannerConfig, HarnessError> {
        let ucb_c = with_domain!(self.domain, |m| m.reward_range());
        let cfg = PlannerConfig {
            budget: self.nb,
            horizon: self.horizon,
            kappa: self.kappa,
            epsilon: self.epsilon,
            prior: NormalGammaParams::new(0.0, self.lambda0, 1.0, self.beta0).map_err(crate::planners::ConfigError::from)?,
            ucb_c,
            mem_cap: self.mem_cap,
        };
        cfg.validate()?;
        if self.particles == 0 {
            return Err(HarnessError::Experiment("particles must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn run_one(&self, episode: usize, seed: u64) -> Result<EpisodeRecord, HarnessError> {
        let cfg = self.planner_config()?;
        let opts = EpisodeOptions {
            filter: FilterConfig {
                particles: self.particles,
                ..FilterConfig::default()
            },
            ..EpisodeOptions::default()
        };
        let stats = with_domain!(self.domain, |m| {
            let mut planner = AnyPlanner::new(self.planner, cfg)?;
            run_episode(&m, &mut planner, seed, &opts)?
        });
        Ok(EpisodeRecord {
            domain: self.domain.to_string(),
            planner: self.planner.to_string(),
            nb: self.nb,
            horizon: self.horizon,
            kappa: self.kappa,
            epsilon: self.epsilon,
            beta0: self.beta0,
            lambda0: self.lambda0,
            nmem: self.mem_cap,
            ucb_c: cfg.ucb_c,
            episode,
            seed,
            undiscounted_return: stats.undiscounted_return,
            discounted_return: stats.discounted_return,
            steps: stats.steps,
            peak_memory: stats.peak_memory,
            mean_nmab: stats.mean_memory,
            deprivation_count: stats.deprivations,
            wall_ms: stats.wall_ms,
        })
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub domain: String,
    pub planner: String,
    pub nb: usize,
    pub horizon: usize,
    pub kappa: usize,
    pub epsilon: f64,
    pub beta0: f64,
    pub lambda0: f64,
    pub nmem: Option<usize>,
    pub ucb_c: f64,
    pub episode: usize,
    pub seed: u64,
    pub undiscounted_return: f64,
    pub discounted_return: f64,
    pub steps: usize,
    pub peak_memory: usize,
    pub mean_nmab: f64,
    pub deprivation_count: usize,
    /// Kept out of the episode CSV so reruns are byte-identical.
    #[serde(skip)]
    pub wall_ms: u64,
}

impl EpisodeRecord {
    fn fields(&self) -> Vec<String> {
        vec![
            SCHEMA_VERSION.to_string(),
            self.domain.clone(),
            self.planner.clone(),
            self.nb.to_string(),
            self.horizon.to_string(),
            self.kappa.to_string(),
            self.epsilon.to_string(),
            self.beta0.to_string(),
            self.lambda0.to_string(),
            self.nmem.map_or(String::new(), |m| m.to_string()),
            self.ucb_c.to_string(),
            self.episode.to_string(),
            self.seed.to_string(),
            self.undiscounted_return.to_string(),
            self.discounted_return.to_string(),
            self.steps.to_string(),
            self.peak_memory.to_string(),
            self.mean_nmab.to_string(),
            self.deprivation_count.to_string(),
        ]
    }
}

/// Per-cell aggregate of the undiscounted return.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub episodes: usize,
    pub mean_return: f64,
    /// Half-width of the 95% Student-t interval; `None` below two episodes.
    pub ci95: Option<f64>,
    pub mean_nmab: f64,
    pub max_peak_memory: usize,
}

impl Summary {
    pub fn ci_low(&self) -> Option<f64> {
        self.ci95.map(|h| self.mean_return - h)
    }

    pub fn ci_high(&self) -> Option<f64> {
        self.ci95.map(|h| self.mean_return + h)
    }
}

pub fn summarize(rows: &[EpisodeRecord]) -> Summary {
    let n = rows.len();
    if n == 0 {
        return Summary {
            episodes: 0,
            mean_return: f64::NAN,
            ci95: None,
            mean_nmab: f64::NAN,
            max_peak_memory: 0,
        };
    }
    let nf = n as f64;
    let mean = rows.iter().map(|r| r.undiscounted_return).sum::<f64>() / nf;
    let ci95 = (n >= 2).then(|| {
        let var = rows.iter().map(|r| (r.undiscounted_return - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let t = StudentsT::new(0.0, 1.0, nf - 1.0)
            .expect("degrees of freedom > 0")
            .inverse_cdf(0.975);
        t * (var / nf).sqrt()
    });
    Summary {
        episodes: n,
        mean_return: mean,
        ci95,
        mean_nmab: rows.iter().map(|r| r.mean_nmab).sum::<f64>() / nf,
        max_peak_memory: rows.iter().map(|r| r.peak_memory).max().unwrap_or(0),
    }
}

/// Runs `episodes` episodes of one cell with seeds `base_seed + i`.
/// Episodes run in parallel; the result is in episode order. Stops at the
/// first failing episode and returns the rows before it with the error.
pub fn run_cell(cell: &CellSpec, episodes: usize, base_seed: u64) -> (Vec<EpisodeRecord>, Option<HarnessError>) {
    let results: Vec<Result<EpisodeRecord, HarnessError>> = (0..episodes)
        .into_par_iter()
        .map(|i| cell.run_one(i, base_seed + i as u64))
        .collect();
    let mut rows = Vec::with_capacity(episodes);
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => return (rows, Some(e)),
        }
    }
    (rows, None)
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub episodes: PathBuf,
    pub summary: PathBuf,
    pub timings: PathBuf,
    pub rows: usize,
    pub failed_cells: usize,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn create(path: &Path) -> Result<File, HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Output {
            path: dir.display().to_string(),
            source,
        })?;
    }
    File::create(path).map_err(|source| HarnessError::Output {
        path: path.display().to_string(),
        source,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

/// Runs every cell of `cfg` and writes three CSV files: one row per episode
/// at `cfg.out`, per-cell summaries at `<stem>.summary.csv`, and wall-clock
/// timings at `<stem>.timings.csv`. The first two are deterministic.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    let cells = cfg.cells()?;
    let summary_path = sibling(&cfg.out, "summary");
    let timing_path = sibling(&cfg.out, "timings");
    let mut episodes_csv = csv::Writer::from_writer(create(&cfg.out)?);
    let mut summary_csv = csv::Writer::from_writer(create(&summary_path)?);
    let mut timing_csv = csv::Writer::from_writer(create(&timing_path)?);
    episodes_csv.write_record(EPISODE_HEADER)?;
    summary_csv.write_record(SUMMARY_HEADER)?;
    timing_csv.write_record(["domain", "planner", "nb", "epsilon", "kappa", "beta0", "nmem", "episode", "wall_ms"])?;

    let mut total = 0;
    let mut failed = 0;
    for cell in &cells {
        let (rows, err) = run_cell(cell, cfg.episodes, cfg.base_seed);
        for row in &rows {
            episodes_csv.write_record(row.fields())?;
            timing_csv.write_record([
                row.domain.clone(),
                row.planner.clone(),
                row.nb.to_string(),
                row.epsilon.to_string(),
                row.kappa.to_string(),
                row.beta0.to_string(),
                row.nmem.map_or(String::new(), |m| m.to_string()),
                row.episode.to_string(),
                row.wall_ms.to_string(),
            ])?;
        }
        total += rows.len();
        let status = match &err {
            None => "ok".to_string(),
            Some(e) => {
                failed += 1;
                format!("failed: {e}")
            }
        };
        let s = summarize(&rows);
        summary_csv.write_record([
            SCHEMA_VERSION.to_string(),
            cell.domain.to_string(),
            cell.planner.to_string(),
            cell.nb.to_string(),
            cell.horizon.to_string(),
            cell.kappa.to_string(),
            cell.epsilon.to_string(),
            cell.beta0.to_string(),
            cell.lambda0.to_string(),
            cell.mem_cap.map_or(String::new(), |m| m.to_string()),
            s.episodes.to_string(),
            s.mean_return.to_string(),
            opt(s.ci_low()),
            opt(s.ci_high()),
            s.mean_nmab.to_string(),
            s.max_peak_memory.to_string(),
            status,
        ])?;
        episodes_csv.flush()?;
        summary_csv.flush()?;
    }
    episodes_csv.into_inner().map_err(|e| e.into_error())?.flush()?;
    summary_csv.into_inner().map_err(|e| e.into_error())?.flush()?;
    timing_csv.into_inner().map_err(|e| e.into_error())?.flush()?;
    Ok(ExperimentOutput {
        episodes: cfg.out.clone(),
        summary: summary_path,
        timings: timing_path,
        rows: total,
        failed_cells: failed,
    })
}

/// Reads an episode CSV written by [`run_experiment`].
pub fn read_episodes_csv(path: &Path) -> Result<Vec<EpisodeRecord>, HarnessError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or_default();
        let parse_err = |what: &str| HarnessError::Experiment(format!("bad `{what}` in {}", path.display()));
        macro_rules! num {
            ($i:expr, $name:expr) => {
                get($i).parse().map_err(|_| parse_err($name))?
            };
        }
        rows.push(EpisodeRecord {
            domain: get(1).to_string(),
            planner: get(2).to_string(),
            nb: num!(3, "nb"),
            horizon: num!(4, "horizon"),
            kappa: num!(5, "kappa"),
            epsilon: num!(6, "epsilon"),
            beta0: num!(7, "beta0"),
            lambda0: num!(8, "lambda0"),
            nmem: if get(9).is_empty() { None } else { Some(num!(9, "nmem")) },
            ucb_c: num!(10, "ucb_c"),
            episode: num!(11, "episode"),
            seed: num!(12, "seed"),
            undiscounted_return: num!(13, "undiscounted_return"),
            discounted_return: num!(14, "discounted_return"),
            steps: num!(15, "steps"),
            peak_memory: num!(16, "peak_memory"),
            mean_nmab: num!(17, "mean_nmab"),
            deprivation_count: num!(18, "deprivation_count"),
            wall_ms: 0,
        });
    }
    Ok(rows)
}
