//! Experiment runner: builds the environment and learner from a config,
//! plays replications in parallel, and writes per-round CSVs plus a summary.
//!
//! Every random stream is derived from `(master_seed, purpose, replication)`,
//! so results do not depend on the number of worker threads.

use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{gen_switching_instance, gen_variation_instance};
use crate::environment::{make_schedule, step, ScheduleSpec};
use crate::error::{Error, Result};
use crate::learner::{BaseLearner, EpochUcb};
use crate::master::{Master, MasterConfig};
use crate::model::{expected_payoff, Assortment, ItemCatalog, ParamSchedule, Rho};
use crate::optimizer::optimal_assortment;
use crate::record::{write_csv, RunRecord};
use crate::rng::{derive_seed, stream, Stream};
use crate::stats::{mean, ols_slope, std_dev};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSpec {
    pub n_items: usize,
    pub capacity: usize,
    /// Defaults to all ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoffs: Option<Vec<f64>>,
}

impl CatalogSpec {
    pub fn build(&self) -> Result<ItemCatalog> {
        let payoffs = match &self.payoffs {
            Some(p) if p.len() != self.n_items => {
                return Err(Error::config(
                    "catalog.payoffs",
                    format!("expected {} entries, got {}", self.n_items, p.len()),
                ))
            }
            Some(p) => p.clone(),
            None => vec![1.0; self.n_items],
        };
        ItemCatalog::new(self.capacity, payoffs)
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerSpec {
    EpochUcb {
        #[serde(default = "one")]
        c_scale: f64,
    },
    MasterEpochUcb {
        #[serde(default = "one")]
        c_scale: f64,
        #[serde(default)]
        master: MasterConfig,
    },
    /// Always offers the optimal assortment for the current round.
    Oracle,
    /// Offers a uniformly random assortment of full capacity.
    UniformRandom,
}

impl LearnerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::EpochUcb { .. } => "epoch_ucb",
            Self::MasterEpochUcb { .. } => "master_epoch_ucb",
            Self::Oracle => "oracle",
            Self::UniformRandom => "uniform_random",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::EpochUcb { c_scale } | Self::MasterEpochUcb { c_scale, .. } => {
                if !(*c_scale > 0.0 && c_scale.is_finite()) {
                    return Err(Error::config(
                        "learner.c_scale",
                        format!("must be positive, got {c_scale}"),
                    ));
                }
                if let Self::MasterEpochUcb { master, .. } = self {
                    master.validate()?;
                }
                Ok(())
            }
            Self::Oracle | Self::UniformRandom => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub catalog: CatalogSpec,
    pub schedule: ScheduleSpec,
    pub learner: LearnerSpec,
    pub horizon: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_replications() -> usize {
    1
}

impl ExperimentConfig {
    /// Reads a config; relative schedule file paths resolve against the
    /// config's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: Self = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        config.resolve_relative_to(path);
        Ok(config)
    }

    fn resolve_relative_to(&mut self, config_path: &Path) {
        if let ScheduleSpec::File { path: file } = &mut self.schedule {
            if file.is_relative() {
                if let Some(dir) = config_path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        if let ScheduleSpec::File { path } = &self.schedule {
            if !path.exists() {
                return Err(Error::config(
                    "schedule.path",
                    format!("{} does not exist", path.display()),
                ));
            }
        }
        self.learner.validate()
    }
}

/// Environment data shared by all replications.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub catalog: ItemCatalog,
    pub schedule: ParamSchedule,
    /// Optimal assortment and value per round, 0-based.
    pub optimal: Vec<(Assortment, f64)>,
}

impl Prepared {
    pub fn new(catalog: ItemCatalog, schedule: ParamSchedule) -> Result<Self> {
        if schedule.n_items() != catalog.n_items() {
            return Err(Error::config(
                "schedule",
                format!(
                    "has {} items but the catalog has {}",
                    schedule.n_items(),
                    catalog.n_items()
                ),
            ));
        }
        let mut optimal: Vec<(Assortment, f64)> = Vec::with_capacity(schedule.horizon());
        for t in 1..=schedule.horizon() {
            if t > 1 && schedule.omega(t) == schedule.omega(t - 1) {
                let prev = optimal[t - 2].clone();
                optimal.push(prev);
                continue;
            }
            let omega = schedule.omega(t);
            let s = optimal_assortment(omega, &catalog)?.assortment;
            let v = expected_payoff(omega, &catalog, &s);
            optimal.push((s, v));
        }
        Ok(Self {
            catalog,
            schedule,
            optimal,
        })
    }

    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let catalog = config.catalog.build()?;
        let schedule = make_schedule(&config.schedule, catalog.n_items(), config.horizon)?;
        if schedule.horizon() != config.horizon {
            return Err(Error::config(
                "horizon",
                format!(
                    "is {} but the schedule covers {} rounds",
                    config.horizon,
                    schedule.horizon()
                ),
            ));
        }
        Self::new(catalog, schedule)
    }

    pub fn horizon(&self) -> usize {
        self.schedule.horizon()
    }
}

type Factory = Box<dyn FnMut() -> Result<EpochUcb> + Send>;

enum Agent {
    Ucb(EpochUcb),
    Master(Box<Master<EpochUcb, Factory>>),
    Oracle,
    Random(Stream),
}

struct Decision {
    assortment: Assortment,
    rhat: f64,
    order: Option<u32>,
}

impl Agent {
    fn new(spec: &LearnerSpec, prepared: &Prepared, seed: u64, rep: u64) -> Result<Self> {
        let horizon = prepared.horizon();
        Ok(match spec {
            LearnerSpec::EpochUcb { c_scale } => {
                Self::Ucb(EpochUcb::new(prepared.catalog.clone(), horizon, *c_scale)?)
            }
            LearnerSpec::MasterEpochUcb { c_scale, master } => {
                let rho = Rho::new(prepared.catalog.n_items(), horizon, *c_scale)?;
                let (catalog, c) = (prepared.catalog.clone(), *c_scale);
                let factory: Factory = Box::new(move || EpochUcb::new(catalog.clone(), horizon, c));
                let rng = stream(seed, "master", rep);
                Self::Master(Box::new(Master::new(master.clone(), rho, horizon, factory, rng)?))
            }
            LearnerSpec::Oracle => Self::Oracle,
            LearnerSpec::UniformRandom => Self::Random(stream(seed, "baseline", rep)),
        })
    }

    fn decide(&mut self, t: usize, prepared: &Prepared) -> Result<Decision> {
        let omega = prepared.schedule.omega(t);
        Ok(match self {
            Self::Ucb(l) => Decision {
                assortment: l.act().clone(),
                rhat: l.reward_upper_bound(),
                order: None,
            },
            Self::Master(m) => {
                let (order, _) = m.active_instance(t);
                let (assortment, rhat) = m.act(t)?;
                Decision {
                    assortment,
                    rhat,
                    order: Some(order),
                }
            }
            Self::Oracle => {
                let (s, v) = &prepared.optimal[t - 1];
                Decision {
                    assortment: s.clone(),
                    rhat: *v,
                    order: None,
                }
            }
            Self::Random(rng) => {
                let cat = &prepared.catalog;
                let k = cat.capacity().min(cat.n_items());
                let items = sample(rng, cat.n_items(), k).into_vec();
                let s = Assortment::new(items, cat)?;
                let rhat = expected_payoff(omega, cat, &s);
                Decision {
                    assortment: s,
                    rhat,
                    order: None,
                }
            }
        })
    }

    /// Returns whether a restart fired.
    fn observe(&mut self, t: usize, outcome: &crate::environment::ChoiceOutcome) -> Result<bool> {
        match self {
            Self::Ucb(l) => l.observe(outcome).map(|_| false),
            Self::Master(m) => Ok(m.observe(t, outcome)?.restart.is_some()),
            Self::Oracle | Self::Random(_) => Ok(false),
        }
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationSummary {
    pub run_id: u64,
    pub final_pseudo_regret: f64,
    pub final_realized_regret: f64,
    /// Rounds at which a restart fired.
    pub restarts: Vec<usize>,
}

/// Plays one replication. Records are kept only when `keep_records`.
pub fn run_replication(
    spec: &LearnerSpec,
    prepared: &Prepared,
    master_seed: u64,
    rep: u64,
    keep_records: bool,
) -> Result<(ReplicationSummary, Vec<RunRecord>)> {
    let mut agent = Agent::new(spec, prepared, master_seed, rep)?;
    let mut env_rng = stream(master_seed, "env", rep);
    let horizon = prepared.horizon();
    let mut records = Vec::with_capacity(if keep_records { horizon } else { 0 });
    let (mut cum_pseudo, mut cum_realized) = (0.0, 0.0);
    let mut restarts = Vec::new();
    for t in 1..=horizon {
        let decision = agent.decide(t, prepared)?;
        let omega = prepared.schedule.omega(t);
        let best = prepared.optimal[t - 1].1;
        let inst = best - expected_payoff(omega, &prepared.catalog, &decision.assortment);
        let outcome = step(
            &prepared.schedule,
            t,
            &decision.assortment,
            &prepared.catalog,
            &mut env_rng,
        )?;
        let restart = agent.observe(t, &outcome)?;
        cum_pseudo += inst;
        cum_realized += best - outcome.reward;
        if restart {
            restarts.push(t);
        }
        if keep_records {
            records.push(RunRecord {
                run_id: rep,
                t,
                assortment: decision.assortment,
                chosen: outcome.chosen,
                reward: outcome.reward,
                rhat: decision.rhat,
                inst_pseudo_regret: inst,
                cum_pseudo_regret: cum_pseudo,
                cum_realized_regret: cum_realized,
                restart,
                instance_order: decision.order,
            });
        }
    }
    Ok((
        ReplicationSummary {
            run_id: rep,
            final_pseudo_regret: cum_pseudo,
            final_realized_regret: cum_realized,
            restarts,
        },
        records,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub learner: String,
    pub horizon: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub mean_final_pseudo_regret: f64,
    pub std_final_pseudo_regret: f64,
    pub mean_final_realized_regret: f64,
    pub std_final_realized_regret: f64,
    pub total_restarts: usize,
    pub runs: Vec<ReplicationSummary>,
}

impl ExperimentSummary {
    fn new(spec: &LearnerSpec, horizon: usize, master_seed: u64, runs: Vec<ReplicationSummary>) -> Self {
        let pseudo: Vec<f64> = runs.iter().map(|r| r.final_pseudo_regret).collect();
        let realized: Vec<f64> = runs.iter().map(|r| r.final_realized_regret).collect();
        Self {
            learner: spec.name().to_string(),
            horizon,
            replications: runs.len(),
            master_seed,
            mean_final_pseudo_regret: mean(&pseudo),
            std_final_pseudo_regret: std_dev(&pseudo),
            mean_final_realized_regret: mean(&realized),
            std_final_realized_regret: std_dev(&realized),
            total_restarts: runs.iter().map(|r| r.restarts.len()).sum(),
            runs,
        }
    }
}

/// Runs all replications in parallel; results are ordered by replication id.
pub fn run_replications(
    spec: &LearnerSpec,
    prepared: &Prepared,
    master_seed: u64,
    replications: usize,
    keep_records: bool,
) -> Result<(ExperimentSummary, Vec<Vec<RunRecord>>)> {
    let results: Vec<(ReplicationSummary, Vec<RunRecord>)> = (0..replications as u64)
        .into_par_iter()
        .map(|rep| run_replication(spec, prepared, master_seed, rep, keep_records))
        .collect::<Result<_>>()?;
    let (runs, records): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((
        ExperimentSummary::new(spec, prepared.horizon(), master_seed, runs),
        records,
    ))
}

/// Runs a config and, when an output directory is given, writes
/// `config.json`, `run_<id>.csv` per replication and `summary.json`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(ExperimentSummary, Vec<Vec<RunRecord>>)> {
    let prepared = Prepared::from_config(config)?;
    let keep = config.output.is_some();
    let (summary, records) = run_replications(
        &config.learner,
        &prepared,
        config.master_seed,
        config.replications,
        keep,
    )?;
    if let Some(dir) = &config.output {
        write_artifacts(dir, config, &summary, &records)?;
    }
    Ok((summary, records))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn write_artifacts(
    dir: &Path,
    config: &ExperimentConfig,
    summary: &ExperimentSummary,
    records: &[Vec<RunRecord>],
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut emitted = config.clone();
    if let ScheduleSpec::File { path } = &mut emitted.schedule {
        *path = std::fs::canonicalize(&*path).map_err(|e| Error::io(&*path, e))?;
    }
    emitted.output = None;
    write_json(&dir.join("config.json"), &emitted)?;
    for (rep, rows) in records.iter().enumerate() {
        write_csv(dir.join(format!("run_{rep:04}.csv")), rows)?;
    }
    write_json(&dir.join("summary.json"), summary)
}

/// What a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Horizon `T` with the base schedule.
    Horizon,
    /// Switch budget `L` of a generated switching instance.
    Switches,
    /// Variation budget of a generated variation instance.
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl SweepConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: Self = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        config.base.resolve_relative_to(path);
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub mean_pseudo_regret: f64,
    pub std_pseudo_regret: f64,
    pub mean_realized_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub parameter: SweepParameter,
    pub learner: String,
    pub replications: usize,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of log mean pseudo-regret on log value; absent when
    /// some mean is not positive.
    pub slope: Option<f64>,
    pub degenerate: bool,
}

pub const MIN_SWEEP_POINTS: usize = 4;
pub const MIN_SWEEP_REPLICATIONS: usize = 10;

fn integral(value: f64, what: &str) -> Result<usize> {
    if value >= 1.0 && value.fract() == 0.0 && value < u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(Error::config(
            "values",
            format!("{what} must be a positive integer, got {value}"),
        ))
    }
}

pub fn sweep(config: &SweepConfig) -> Result<SweepReport> {
    if config.values.len() < MIN_SWEEP_POINTS {
        return Err(Error::Refused(format!(
            "a sweep needs at least {MIN_SWEEP_POINTS} grid points, got {}",
            config.values.len()
        )));
    }
    if config.base.replications < MIN_SWEEP_REPLICATIONS {
        return Err(Error::Refused(format!(
            "a sweep needs at least {MIN_SWEEP_REPLICATIONS} replications, got {}",
            config.base.replications
        )));
    }
    let base = &config.base;
    let mut rows = Vec::with_capacity(config.values.len());
    for (i, &value) in config.values.iter().enumerate() {
        let instance_seed = derive_seed(base.master_seed, "instance", i as u64);
        let (n, k) = (base.catalog.n_items, base.catalog.capacity);
        let prepared = match config.parameter {
            SweepParameter::Horizon => {
                let mut point = base.clone();
                point.horizon = integral(value, "horizon")?;
                Prepared::from_config(&point)?
            }
            SweepParameter::Switches => {
                base.validate()?;
                let inst =
                    gen_switching_instance(n, k, base.horizon, integral(value, "switches")?, instance_seed)?;
                Prepared::new(inst.catalog, inst.schedule)?
            }
            SweepParameter::Budget => {
                base.validate()?;
                let inst = gen_variation_instance(n, k, base.horizon, value, instance_seed)?;
                Prepared::new(inst.catalog, inst.schedule)?
            }
        };
        let (summary, _) = run_replications(
            &base.learner,
            &prepared,
            base.master_seed,
            base.replications,
            false,
        )?;
        rows.push(SweepRow {
            value,
            mean_pseudo_regret: summary.mean_final_pseudo_regret,
            std_pseudo_regret: summary.std_final_pseudo_regret,
            mean_realized_regret: summary.mean_final_realized_regret,
        });
    }
    let degenerate = rows
        .iter()
        .any(|r| r.mean_pseudo_regret.is_nan() || r.mean_pseudo_regret <= 0.0);
    let slope = (!degenerate).then(|| {
        let x: Vec<f64> = rows.iter().map(|r| r.value.ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.mean_pseudo_regret.ln()).collect();
        ols_slope(&x, &y)
    });
    Ok(SweepReport {
        parameter: config.parameter,
        learner: base.learner.name().to_string(),
        replications: base.replications,
        rows,
        slope,
        degenerate,
    })
}
