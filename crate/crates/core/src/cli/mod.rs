//! Experiment front-end: the experiment configuration, the `synth`, `train`,
//! `eval`, `compare` and `sweep` commands, and their CSV and SVG output.
//!
//! Output layout under the output directory:
//!
//! ```text
//! traces/{price,weather,occupancy}.csv                        synth
//! seed_<s>/agents.ckpt, training_log.csv, reward_curve.svg    train
//! seed_<s>/eval_log.csv, eval_metrics.csv                     eval
//! compare/runs.csv, summary.csv, profile.csv, tec.svg,
//!         profile_airflow.svg, slots_<scheme>_seed_<s>.csv    compare
//! sweep/results.csv, surface.csv, {tec,atd,acd}.svg,
//!       alpha_<a>_beta_<b>/seed_<s>/...                       sweep
//! ```
//!
//! The held-out window is every whole day after the first `train_days`.

pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::baselines::{HsController, HsParams, RsController};
use crate::env::{metrics, run_controller, BuildingParams, EpisodeLog, HvacEnv, Metrics};
use crate::error::{Error, Result};
use crate::kv::KvConfig;
use crate::maac::{execute, train_with_hook, ActionMode, AgentSet, EpisodeDays, HvacGame, TrainConfig, TrainingLog};
use crate::traces::{load_traces, synthesize_traces, LoadConfig, SynthConfig, TracePaths, TraceSet};

use svg::Series;

/// Energy weight used when a configuration does not set `alpha`. Chosen so
/// that trained policies keep ATD well under 1.3 °C on synthetic traces.
pub const DEFAULT_ALPHA: f64 = 6.0;
pub const DEFAULT_BETA: f64 = 0.1;

const EVAL_SEED_BASE: u64 = 1 << 40;

/// Where the exogenous series come from.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceSource {
    Files { paths: TracePaths, load: LoadConfig },
    Synth { config: SynthConfig, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub building: BuildingParams,
    pub train: TrainConfig,
    pub traces: TraceSource,
    /// Whole days used for training; `None` takes the first two thirds.
    pub train_days: Option<usize>,
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub alpha_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub atd_max: f64,
    pub acd_max: f64,
    pub hs: HsParams,
}

impl ExperimentConfig {
    /// Four zones on 92 synthetic days, 61 for training and 31 held out.
    pub fn synthetic() -> Self {
        let mut building = BuildingParams::default_line(4);
        building.alpha = DEFAULT_ALPHA;
        building.beta = DEFAULT_BETA;
        Self {
            building,
            train: TrainConfig::compact(),
            traces: TraceSource::Synth {
                config: SynthConfig {
                    days: 92,
                    ..SynthConfig::default()
                },
                seed: 0,
            },
            train_days: Some(61),
            out_dir: PathBuf::from("out"),
            seeds: (0..10).collect(),
            alpha_grid: vec![2.0, 24.0],
            beta_grid: vec![0.02, 1.0],
            atd_max: 1.3,
            acd_max: 40.0,
            hs: HsParams::default(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_kv(&KvConfig::from_file(path)?)
    }

    /// Every key is optional except a trace source: either `traces.*` files
    /// or `synth.*` generator settings. Unknown keys are rejected.
    pub fn from_kv(cfg: &KvConfig) -> Result<Self> {
        let base = Self::synthetic();
        let mut building = BuildingParams::from_kv(cfg)?;
        if !cfg.contains("alpha") {
            building.alpha = DEFAULT_ALPHA;
        }
        if !cfg.contains("beta") {
            building.beta = DEFAULT_BETA;
        }
        let preset = cfg.raw("train.preset").unwrap_or("compact").to_string();
        let train = TrainConfig::from_kv(cfg, TrainConfig::preset(&preset)?)?;

        let n = building.num_zones();
        let slot_minutes = (building.tau_seconds / 60.0).round() as u32;
        let has = |prefix: &str| cfg.keys().any(|k| k.starts_with(prefix));
        let traces = if has("traces.") {
            let dir = cfg.get_path("traces.dir");
            let pick = |key: &str, file: &str| -> Result<PathBuf> {
                cfg.get_path(key)
                    .or_else(|| dir.as_ref().map(|d| d.join(file)))
                    .ok_or_else(|| Error::Config(format!("`{key}` or `traces.dir` is required")))
            };
            let paths = TracePaths {
                price: pick("traces.price", crate::traces::PRICE_FILE)?,
                weather: pick("traces.weather", crate::traces::WEATHER_FILE)?,
                occupancy: pick("traces.occupancy", crate::traces::OCCUPANCY_FILE)?,
            };
            let all: u32 = cfg.get_or("traces.resolution_minutes", slot_minutes)?;
            let load = LoadConfig {
                num_zones: n,
                slot_minutes,
                price_minutes: cfg.get_or("traces.price_minutes", all)?,
                weather_minutes: cfg.get_or("traces.weather_minutes", all)?,
                occupancy_minutes: cfg.get_or("traces.occupancy_minutes", all)?,
            };
            TraceSource::Files { paths, load }
        } else if has("synth.") {
            let d = SynthConfig::default();
            let mut config = SynthConfig {
                days: cfg.get_or("synth.days", 92)?,
                num_zones: n,
                slot_minutes,
                temp_mean: cfg.get_or("synth.temp_mean", d.temp_mean)?,
                temp_amplitude: cfg.get_or("synth.temp_amplitude", d.temp_amplitude)?,
                temp_peak_hour: cfg.get_or("synth.temp_peak_hour", d.temp_peak_hour)?,
                temp_noise: cfg.get_or("synth.temp_noise", d.temp_noise)?,
                temp_day_jitter: cfg.get_or("synth.temp_day_jitter", d.temp_day_jitter)?,
                business_open_hour: cfg.get_or("synth.business_open_hour", d.business_open_hour)?,
                business_close_hour: cfg.get_or("synth.business_close_hour", d.business_close_hour)?,
                occupancy_step: cfg.get_or("synth.occupancy_step", d.occupancy_step)?,
                outdoor_co2: cfg.get_or("synth.outdoor_co2", d.outdoor_co2)?,
                ..d
            };
            if let Some(v) = cfg.get_list::<u32>("synth.max_occupancy")? {
                config.max_occupancy = v;
            }
            if let Some(v) = cfg.get_list::<f64>("synth.price_tiers")? {
                config.price_tiers = v
                    .try_into()
                    .map_err(|_| Error::Config("`synth.price_tiers` needs exactly three values".into()))?;
            }
            let seed = cfg.get_or("synth.seed", 0)?;
            TraceSource::Synth { config, seed }
        } else {
            return Err(Error::Config(
                "no trace source: set `traces.dir` (or traces.price/weather/occupancy) or any `synth.*` key".into(),
            ));
        };

        let c = Self {
            building,
            train,
            traces,
            train_days: cfg.get("split.train_days")?,
            out_dir: cfg.get_path("out").unwrap_or(base.out_dir),
            seeds: cfg.get_list("seeds")?.unwrap_or(base.seeds),
            alpha_grid: cfg.get_list("sweep.alpha")?.unwrap_or(base.alpha_grid),
            beta_grid: cfg.get_list("sweep.beta")?.unwrap_or(base.beta_grid),
            atd_max: cfg.get_or("comfort.atd_max", base.atd_max)?,
            acd_max: cfg.get_or("comfort.acd_max", base.acd_max)?,
            hs: HsParams {
                zeta: cfg.get_or("hs.zeta", base.hs.zeta)?,
            },
        };
        let unused = cfg.unused_keys();
        if !unused.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", unused.join(", "))));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.building.validate()?;
        self.train.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list must not be empty".into()));
        }
        if !(self.hs.zeta > 0.0 && self.hs.zeta <= 1.0) {
            return Err(Error::Config(format!("hs.zeta must lie in (0, 1], got {}", self.hs.zeta)));
        }
        if let TraceSource::Files { paths, .. } = &self.traces {
            for p in [&paths.price, &paths.weather, &paths.occupancy] {
                if !p.exists() {
                    return Err(Error::Config(format!("trace file {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.out_dir.join(format!("seed_{seed}"))
    }

    /// Same experiment with other reward weights, writing under `out_dir`.
    pub fn with_weights(&self, alpha: f64, beta: f64, out_dir: PathBuf) -> Self {
        let mut c = self.clone();
        c.building.alpha = alpha;
        c.building.beta = beta;
        c.out_dir = out_dir;
        c
    }
}

/// A configuration with its traces loaded and the day split fixed.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub params: Arc<BuildingParams>,
    pub traces: Arc<TraceSet>,
    pub train_days: usize,
}

impl Experiment {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let traces = match &config.traces {
            TraceSource::Files { paths, load } => load_traces(&paths.price, &paths.weather, &paths.occupancy, load)?,
            TraceSource::Synth { config: s, seed } => synthesize_traces(s, *seed)?,
        };
        if traces.num_zones() != config.building.num_zones() {
            return Err(Error::Config(format!(
                "traces have {} zones, building has {}",
                traces.num_zones(),
                config.building.num_zones()
            )));
        }
        let days = traces.num_days();
        let train_days = config.train_days.unwrap_or(days * 2 / 3);
        if train_days == 0 || train_days >= days {
            return Err(Error::Config(format!(
                "train_days={train_days} must leave at least one of {days} days for each of training and testing"
            )));
        }
        Ok(Self {
            config: config.clone(),
            params: Arc::new(config.building.clone()),
            traces: Arc::new(traces),
            train_days,
        })
    }

    /// First global slot and length of the held-out window.
    pub fn test_window(&self) -> (usize, usize) {
        let per_day = self.traces.slots_per_day();
        let start = self.train_days * per_day;
        (start, (self.traces.num_days() - self.train_days) * per_day)
    }

    pub fn train(&self, seed: u64) -> Result<(AgentSet, TrainingLog)> {
        self.train_with_progress(seed, &mut |_, _| {})
    }

    pub fn train_with_progress(
        &self,
        seed: u64,
        progress: &mut dyn FnMut(usize, &TrainingLog),
    ) -> Result<(AgentSet, TrainingLog)> {
        let days: Vec<usize> = (0..self.train_days).collect();
        train_with_hook(
            |w| {
                HvacGame::new(
                    self.params.clone(),
                    self.traces.clone(),
                    EpisodeDays::Random(days.clone()),
                    seed.wrapping_mul(1000).wrapping_add(w as u64),
                )
            },
            &self.config.train,
            seed,
            &mut |ep, _, log| progress(ep, log),
        )
    }

    /// Runs one scheme over the held-out window. The disturbance draws depend
    /// only on `seed`, so all schemes of one seed see the same sample path.
    pub fn run_scheme(&self, scheme: Scheme, agents: Option<&AgentSet>, seed: u64) -> Result<EpisodeLog> {
        let (start, horizon) = self.test_window();
        let mut env = HvacEnv::new(self.params.clone(), self.traces.clone(), EVAL_SEED_BASE + seed)?;
        match scheme {
            Scheme::Proposed => {
                let agents = agents.ok_or_else(|| Error::Checkpoint("the proposed scheme needs trained agents".into()))?;
                execute(agents, &mut env, start, horizon, ActionMode::Greedy)
            }
            Scheme::Rs => run_controller(&mut env, &mut RsController::with_default_damper(&self.params), start, horizon),
            Scheme::Hs => run_controller(&mut env, &mut HsController { params: self.config.hs }, start, horizon),
        }
    }

    pub fn comfort_ok(&self, m: &Metrics) -> bool {
        m.atd <= self.config.atd_max && m.acd <= self.config.acd_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Proposed,
    Rs,
    Hs,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Proposed, Scheme::Rs, Scheme::Hs];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Rs => "rs",
            Scheme::Hs => "hs",
        }
    }
}

/// Normal-approximation 95% interval of a sample mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub n: usize,
    pub mean: f64,
    /// 1.96·s/√n, 0 when `n == 1`.
    pub half_width: f64,
    /// A single sample: the width carries no information.
    pub degenerate: bool,
}

impl Interval {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                half_width: f64::NAN,
                degenerate: true,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self {
                n,
                mean,
                half_width: 0.0,
                degenerate: true,
            };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            n,
            mean,
            half_width: 1.96 * var.sqrt() / (n as f64).sqrt(),
            degenerate: false,
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::load(path, e.to_string()))?;
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| Error::load(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(Error::load(path, format!("header `{}` != `{}`", found.join(","), header.join(","))));
    }
    reader
        .records()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::load(path, format!("row {}: {e}", i + 1))))
        .collect()
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::load(path, format!("malformed field {i} in `{}`", rec.iter().collect::<Vec<_>>().join(","))))
}

// ---- synth -------------------------------------------------------------

/// Writes the configured traces to `out/traces`.
pub fn cmd_synth(config: &ExperimentConfig) -> Result<TracePaths> {
    let exp = Experiment::prepare(config)?;
    exp.traces.write_csv(&config.out_dir.join("traces"))
}

// ---- train -------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub dir: PathBuf,
    pub checkpoint: PathBuf,
    pub log: TrainingLog,
}

pub fn cmd_train(config: &ExperimentConfig, seed: u64) -> Result<TrainArtifacts> {
    cmd_train_with_progress(config, seed, &mut |_, _| {})
}

pub fn cmd_train_with_progress(
    config: &ExperimentConfig,
    seed: u64,
    progress: &mut dyn FnMut(usize, &TrainingLog),
) -> Result<TrainArtifacts> {
    let exp = Experiment::prepare(config)?;
    let (agents, log) = exp.train_with_progress(seed, progress)?;
    write_training(config, seed, &agents, &log)
}

fn write_training(config: &ExperimentConfig, seed: u64, agents: &AgentSet, log: &TrainingLog) -> Result<TrainArtifacts> {
    let dir = config.seed_dir(seed);
    create_dir(&dir)?;
    let checkpoint = dir.join("agents.ckpt");
    agents.save(&checkpoint)?;
    log.write_csv(&dir.join("training_log.csv"))?;
    write_text(&dir.join("reward_curve.svg"), &reward_curve_svg(log, seed))?;
    Ok(TrainArtifacts {
        dir,
        checkpoint,
        log: log.clone(),
    })
}

/// Team reward per episode and its running mean over the last 200.
pub fn reward_curve_svg(log: &TrainingLog, seed: u64) -> String {
    let team = log.team_sums();
    let raw: Vec<(f64, f64)> = team.iter().enumerate().map(|(e, v)| ((e + 1) as f64, *v)).collect();
    let smooth: Vec<(f64, f64)> = (0..team.len())
        .map(|e| {
            let lo = (e + 1).saturating_sub(TrainingLog::WINDOW);
            let w = &team[lo..=e];
            ((e + 1) as f64, w.iter().sum::<f64>() / w.len() as f64)
        })
        .collect();
    svg::line_chart(
        &format!("Training reward, seed {seed}"),
        "episode",
        "episode reward (sum over agents)",
        &[
            Series {
                faint: true,
                ..Series::line("episode", raw)
            },
            Series::line("mean of last 200", smooth),
        ],
    )
}

fn checkpoint_path(config: &ExperimentConfig, seed: u64) -> Result<PathBuf> {
    let p = config.seed_dir(seed).join("agents.ckpt");
    if !p.exists() {
        return Err(Error::Checkpoint(format!(
            "missing checkpoint {}; run `train --seed {seed}` first",
            p.display()
        )));
    }
    Ok(p)
}

// ---- eval --------------------------------------------------------------

pub const METRICS_HEADER: [&str; 4] = ["tec", "atd", "acd", "comfort_ok"];

/// Greedy execution of the checkpoint of `seed` on the held-out window.
pub fn cmd_eval(config: &ExperimentConfig, seed: u64) -> Result<Metrics> {
    let exp = Experiment::prepare(config)?;
    let agents = AgentSet::load(&checkpoint_path(config, seed)?)?;
    let log = exp.run_scheme(Scheme::Proposed, Some(&agents), seed)?;
    let m = metrics(&log, &exp.params)?;
    let dir = config.seed_dir(seed);
    log.write_csv(&dir.join("eval_log.csv"))?;
    write_text(
        &dir.join("eval_metrics.csv"),
        &format!("{}\n{},{},{},{}\n", METRICS_HEADER.join(","), m.tec, m.atd, m.acd, exp.comfort_ok(&m)),
    )?;
    Ok(m)
}

pub fn read_metrics_csv(path: &Path) -> Result<(Metrics, bool)> {
    let rows = read_rows(path, &METRICS_HEADER)?;
    let [r] = rows.as_slice() else {
        return Err(Error::load(path, "expected exactly one row"));
    };
    Ok((
        Metrics {
            tec: field(path, r, 0)?,
            atd: field(path, r, 1)?,
            acd: field(path, r, 2)?,
        },
        field(path, r, 3)?,
    ))
}

// ---- compare -----------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub scheme: String,
    pub seed: u64,
    pub metrics: Metrics,
    pub comfort_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: String,
    pub metric: String,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub runs: Vec<RunRow>,
    pub summary: Vec<SummaryRow>,
}

impl CompareReport {
    pub fn summary_of(&self, scheme: Scheme, metric: &str) -> Option<&Interval> {
        self.summary
            .iter()
            .find(|r| r.scheme == scheme.name() && r.metric == metric)
            .map(|r| &r.interval)
    }
}

pub const RUNS_HEADER: [&str; 6] = ["scheme", "seed", "tec", "atd", "acd", "comfort_ok"];
pub const SUMMARY_HEADER: [&str; 7] = ["scheme", "metric", "n", "mean", "ci_low", "ci_high", "degenerate"];
pub const PROFILE_HEADER: [&str; 6] = ["scheme", "slot_of_day", "price", "energy_cost", "airflow_total", "damper"];

fn summarize(runs: &[RunRow], schemes: &[&str]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for s in schemes {
        let of = |f: fn(&Metrics) -> f64| -> Vec<f64> {
            runs.iter().filter(|r| r.scheme == *s).map(|r| f(&r.metrics)).collect()
        };
        for (metric, values) in [("tec", of(|m| m.tec)), ("atd", of(|m| m.atd)), ("acd", of(|m| m.acd))] {
            out.push(SummaryRow {
                scheme: s.to_string(),
                metric: metric.into(),
                interval: Interval::of(&values),
            });
        }
    }
    out
}

fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = SUMMARY_HEADER.join(",") + "\n";
    for r in rows {
        let i = &r.interval;
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.scheme,
            r.metric,
            i.n,
            i.mean,
            i.mean - i.half_width,
            i.mean + i.half_width,
            i.degenerate
        ));
    }
    s
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    read_rows(path, &SUMMARY_HEADER)?
        .iter()
        .map(|r| {
            let lo: f64 = field(path, r, 4)?;
            let hi: f64 = field(path, r, 5)?;
            Ok(SummaryRow {
                scheme: field(path, r, 0)?,
                metric: field(path, r, 1)?,
                interval: Interval {
                    n: field(path, r, 2)?,
                    mean: field(path, r, 3)?,
                    half_width: (hi - lo) / 2.0,
                    degenerate: field(path, r, 6)?,
                },
            })
        })
        .collect()
}

fn runs_csv(rows: &[RunRow]) -> String {
    let mut s = RUNS_HEADER.join(",") + "\n";
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.scheme, r.seed, r.metrics.tec, r.metrics.atd, r.metrics.acd, r.comfort_ok
        ));
    }
    s
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunRow>> {
    read_rows(path, &RUNS_HEADER)?
        .iter()
        .map(|r| {
            Ok(RunRow {
                scheme: field(path, r, 0)?,
                seed: field(path, r, 1)?,
                metrics: Metrics {
                    tec: field(path, r, 2)?,
                    atd: field(path, r, 3)?,
                    acd: field(path, r, 4)?,
                },
                comfort_ok: field(path, r, 5)?,
            })
        })
        .collect()
}

/// Mean daily shape of a scheme's logs: per slot of day, the price, energy
/// cost, total airflow and damper position.
pub fn daily_profile(logs: &[&EpisodeLog], slots_per_day: usize) -> Vec<[f64; 4]> {
    let mut acc = vec![[0.0; 4]; slots_per_day];
    let mut count = vec![0usize; slots_per_day];
    for log in logs {
        for (k, r) in log.rows().iter().enumerate() {
            let s = k % slots_per_day;
            acc[s][0] += r.price;
            acc[s][1] += r.energy_cost();
            acc[s][2] += r.airflow_total;
            acc[s][3] += r.damper;
            count[s] += 1;
        }
    }
    acc.iter()
        .zip(&count)
        .map(|(a, &c)| a.map(|v| if c > 0 { v / c as f64 } else { f64::NAN }))
        .collect()
}

/// Proposed, RS and HS on the held-out window for every configured seed.
pub fn cmd_compare(config: &ExperimentConfig) -> Result<CompareReport> {
    let exp = Experiment::prepare(config)?;
    let dir = config.out_dir.join("compare");
    let checkpoints = config
        .seeds
        .iter()
        .map(|&s| checkpoint_path(config, s))
        .collect::<Result<Vec<_>>>()?;
    create_dir(&dir)?;
    let per_day = exp.traces.slots_per_day();
    let mut runs = Vec::new();
    let mut logs: Vec<(Scheme, EpisodeLog)> = Vec::new();
    for (&seed, ckpt) in config.seeds.iter().zip(&checkpoints) {
        let agents = AgentSet::load(ckpt)?;
        for scheme in Scheme::ALL {
            let log = exp.run_scheme(scheme, Some(&agents), seed)?;
            let m = metrics(&log, &exp.params)?;
            log.write_csv(&dir.join(format!("slots_{}_seed_{seed}.csv", scheme.name())))?;
            runs.push(RunRow {
                scheme: scheme.name().into(),
                seed,
                metrics: m,
                comfort_ok: exp.comfort_ok(&m),
            });
            logs.push((scheme, log));
        }
    }
    let names: Vec<&str> = Scheme::ALL.iter().map(|s| s.name()).collect();
    let summary = summarize(&runs, &names);
    write_text(&dir.join("runs.csv"), &runs_csv(&runs))?;
    write_text(&dir.join("summary.csv"), &summary_csv(&summary))?;

    let mut profile = PROFILE_HEADER.join(",") + "\n";
    let mut airflow_series = Vec::new();
    for scheme in Scheme::ALL {
        let mine: Vec<&EpisodeLog> = logs.iter().filter(|(s, _)| *s == scheme).map(|(_, l)| l).collect();
        let p = daily_profile(&mine, per_day);
        for (k, v) in p.iter().enumerate() {
            profile.push_str(&format!("{},{k},{},{},{},{}\n", scheme.name(), v[0], v[1], v[2], v[3]));
        }
        airflow_series.push(Series::line(
            scheme.name(),
            p.iter().enumerate().map(|(k, v)| (k as f64 * 24.0 / per_day as f64, v[2])).collect(),
        ));
    }
    write_text(&dir.join("profile.csv"), &profile)?;
    write_text(
        &dir.join("profile_airflow.svg"),
        &svg::line_chart("Mean total air supply over the day", "hour", "airflow (g/s)", &airflow_series),
    )?;
    let bars: Vec<(String, f64, f64)> = names
        .iter()
        .map(|n| {
            let i = summary.iter().find(|r| r.scheme == *n && r.metric == "tec").expect("summarized").interval;
            (n.to_string(), i.mean, i.half_width)
        })
        .collect();
    write_text(&dir.join("tec.svg"), &svg::bar_chart("Total energy cost on the held-out window", "TEC (RMB)", &bars))?;
    Ok(CompareReport { runs, summary })
}

// ---- sweep -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub metrics: Metrics,
}

pub const SWEEP_HEADER: [&str; 6] = ["alpha", "beta", "seed", "tec", "atd", "acd"];
pub const SURFACE_HEADER: [&str; 6] = ["alpha", "beta", "metric", "n", "mean", "half_width"];

pub fn cell_dir(config: &ExperimentConfig, alpha: f64, beta: f64) -> PathBuf {
    config.out_dir.join("sweep").join(format!("alpha_{alpha}_beta_{beta}"))
}

/// Trains and evaluates one grid cell for every seed. Each cell writes only
/// under its own directory, so cells can run in any order or in separate
/// processes.
pub fn run_cell(config: &ExperimentConfig, alpha: f64, beta: f64) -> Result<Vec<SweepRow>> {
    let cell = config.with_weights(alpha, beta, cell_dir(config, alpha, beta));
    let exp = Experiment::prepare(&cell)?;
    let mut rows = Vec::new();
    for &seed in &cell.seeds {
        let (agents, log) = exp.train(seed)?;
        write_training(&cell, seed, &agents, &log)?;
        let m = metrics(&exp.run_scheme(Scheme::Proposed, Some(&agents), seed)?, &exp.params)?;
        rows.push(SweepRow {
            alpha,
            beta,
            seed,
            metrics: m,
        });
    }
    Ok(rows)
}

pub fn cmd_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    if config.alpha_grid.is_empty() || config.beta_grid.is_empty() {
        return Err(Error::Config("sweep needs non-empty `sweep.alpha` and `sweep.beta` grids".into()));
    }
    let mut rows = Vec::new();
    for &a in &config.alpha_grid {
        for &b in &config.beta_grid {
            rows.extend(run_cell(config, a, b)?);
        }
    }
    write_sweep_outputs(config, &rows)?;
    Ok(rows)
}

pub fn write_sweep_outputs(config: &ExperimentConfig, rows: &[SweepRow]) -> Result<()> {
    let dir = config.out_dir.join("sweep");
    create_dir(&dir)?;
    let mut s = SWEEP_HEADER.join(",") + "\n";
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.alpha, r.beta, r.seed, r.metrics.tec, r.metrics.atd, r.metrics.acd
        ));
    }
    write_text(&dir.join("results.csv"), &s)?;

    let mut surface = SURFACE_HEADER.join(",") + "\n";
    let metric_fns: [(&str, &str, fn(&Metrics) -> f64); 3] = [
        ("tec", "TEC (RMB)", |m| m.tec),
        ("atd", "ATD (°C)", |m| m.atd),
        ("acd", "ACD (ppm)", |m| m.acd),
    ];
    for (metric, label, f) in metric_fns {
        let mut series = Vec::new();
        for &b in &config.beta_grid {
            let mut points = Vec::new();
            let mut band = Vec::new();
            for &a in &config.alpha_grid {
                let values: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.alpha == a && r.beta == b)
                    .map(|r| f(&r.metrics))
                    .collect();
                let i = Interval::of(&values);
                surface.push_str(&format!("{a},{b},{metric},{},{},{}\n", i.n, i.mean, i.half_width));
                points.push((a, i.mean));
                band.push((a, i.mean - i.half_width, i.mean + i.half_width));
            }
            series.push(Series {
                band: Some(band),
                ..Series::line(format!("β = {b}"), points)
            });
        }
        write_text(
            &dir.join(format!("{metric}.svg")),
            &svg::line_chart(&format!("{label} against α"), "α", label, &series),
        )?;
    }
    write_text(&dir.join("surface.csv"), &surface)
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    read_rows(path, &SWEEP_HEADER)?
        .iter()
        .map(|r| {
            Ok(SweepRow {
                alpha: field(path, r, 0)?,
                beta: field(path, r, 1)?,
                seed: field(path, r, 2)?,
                metrics: Metrics {
                    tec: field(path, r, 3)?,
                    atd: field(path, r, 4)?,
                    acd: field(path, r, 5)?,
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests;
