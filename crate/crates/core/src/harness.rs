//! Experiment orchestration: run configuration, per-episode simulation,
//! deterministic parallel aggregation and on-disk artifacts.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::goodness::{compute_b, lambda_of, lambda_of_subspace, psi_cap};
use crate::instances::{
    build_lowerbound_family, generate_synthetic, ingest_tabular, lowerbound_epsilon,
    sample_context_set, sample_reward, validate_instance, ContextSampler, Instance, TabularSpec,
};
use crate::numerics::{span_basis, spanning_subset, RngStream};
use crate::pareto::{
    effective_pareto_gap, epfi_ball_proxy_over_runs, epfi_exact_over_runs, epfi_weights,
    pareto_fairness_variance, pareto_front, GapResult, TableSource,
};
use crate::policies::{observe, policy_step, EstimatorState, Phase, PolicyConfig, PolicyKind, Threshold};

// ── Configuration ───────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    Synthetic {
        d: usize,
        #[serde(rename = "K")]
        k: usize,
        #[serde(rename = "M")]
        m: usize,
        sigma: f64,
    },
    File {
        path: PathBuf,
    },
    Lowerbound {
        d: usize,
        /// Derived from (d, T) when absent.
        #[serde(default)]
        epsilon: Option<f64>,
        /// 1-based index of the true instance in the family.
        #[serde(default = "one")]
        j_star: usize,
        sigma: f64,
    },
    Tabular {
        path: PathBuf,
        feature_columns: Vec<String>,
        objective_columns: Vec<String>,
        noise_sd: f64,
        #[serde(default, rename = "K")]
        k: Option<usize>,
    },
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    #[serde(default = "default_epfi_epsilon")]
    pub epfi_epsilon: f64,
    #[serde(default = "default_resolution")]
    pub weight_grid_resolution: usize,
}

fn default_epfi_epsilon() -> f64 {
    0.1
}
fn default_resolution() -> usize {
    100
}

impl Default for MetricSpec {
    fn default() -> Self {
        Self {
            epfi_epsilon: default_epfi_epsilon(),
            weight_grid_resolution: default_resolution(),
        }
    }
}

fn default_contexts() -> ContextSampler {
    ContextSampler::Fixed
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub n_instances: usize,
    pub n_repeats: usize,
    pub master_seed: u64,
    /// Worker threads; all available cores when absent. Never affects results.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    pub instance: InstanceSpec,
    #[serde(default = "default_contexts")]
    pub contexts: ContextSampler,
    pub policies: Vec<PolicyConfig>,
    #[serde(default)]
    pub metrics: MetricSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("T must be >= 1".into()));
        }
        if self.n_instances == 0 || self.n_repeats == 0 {
            return Err(Error::InvalidConfig("n_instances and n_repeats must be >= 1".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidConfig("at least one policy is required".into()));
        }
        let mut seen = HashSet::new();
        for p in &self.policies {
            if !seen.insert(p.name.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate policy name `{}`", p.name)));
            }
        }
        if !(self.metrics.epfi_epsilon > 0.0) {
            return Err(Error::InvalidConfig("metrics.epfi_epsilon must be positive".into()));
        }
        Ok(())
    }
}

// ── Stream derivation ───────────────────────────────────────────────────────

/// Stable 64-bit id for `(instance, repeat, policy, purpose)`; absent parts
/// are written as `-`.
pub fn stream_id(instance: usize, repeat: Option<usize>, policy: Option<&str>, purpose: &str) -> u64 {
    let r = repeat.map_or_else(|| "-".to_string(), |r| r.to_string());
    let key = format!("{instance}|{r}|{}|{purpose}", policy.unwrap_or("-"));
    let digest = Sha256::digest(key.as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// The three per-episode random streams.
#[derive(Clone, Debug)]
pub struct EpisodeStreams {
    pub instance: usize,
    pub repeat: usize,
    /// Shared by every policy of the same (instance, repeat).
    pub contexts: RngStream,
    pub reward: RngStream,
    pub policy: RngStream,
}

impl EpisodeStreams {
    pub fn derive(master_seed: u64, instance: usize, repeat: usize, policy: &str) -> Self {
        Self {
            instance,
            repeat,
            contexts: RngStream::new(master_seed, stream_id(instance, Some(repeat), None, "contexts")),
            reward: RngStream::new(master_seed, stream_id(instance, Some(repeat), Some(policy), "reward")),
            policy: RngStream::new(master_seed, stream_id(instance, Some(repeat), Some(policy), "policy")),
        }
    }
}

// ── Instances and thresholds ────────────────────────────────────────────────

/// Builds instance `i` of an experiment.
pub fn build_instance(spec: &InstanceSpec, master_seed: u64, i: usize, horizon: usize) -> Result<Instance> {
    let mut rng = RngStream::new(master_seed, stream_id(i, None, None, "instance"));
    let inst = match spec {
        InstanceSpec::Synthetic { d, k, m, sigma } => generate_synthetic(&mut rng, *d, *k, *m, *sigma)?,
        InstanceSpec::File { path } => Instance::load(path)?,
        InstanceSpec::Lowerbound {
            d,
            epsilon,
            j_star,
            sigma,
        } => {
            let eps = epsilon.unwrap_or_else(|| lowerbound_epsilon(*d, horizon));
            let fam = build_lowerbound_family(*d, eps)?;
            if *j_star == 0 || *j_star > *d {
                return Err(Error::InvalidConfig(format!("j_star must lie in 1..={d}")));
            }
            fam.instance(j_star - 1, *sigma)
        }
        InstanceSpec::Tabular {
            path,
            feature_columns,
            objective_columns,
            noise_sd,
            k,
        } => {
            let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let spec = TabularSpec {
                feature_columns: feature_columns.clone(),
                objective_columns: objective_columns.clone(),
                noise_sd: *noise_sd,
                k: *k,
            };
            ingest_tabular(file, &spec, &mut rng)?
        }
    };
    let violations = validate_instance(&inst);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidConfig(format!(
            "instance {i} is invalid: {} ({} violation(s))",
            v.message,
            violations.len()
        )));
    }
    Ok(inst)
}

/// Resolves a policy's eigenvalue threshold B for an instance and horizon.
/// `"theoretical"` uses α capped at ψ(λ,γ) when that cap is positive.
pub fn resolve_threshold(cfg: &PolicyConfig, inst: &Instance, horizon: usize) -> Result<f64> {
    match cfg.b {
        Threshold::Value(v) => Ok(v),
        Threshold::Derived(_) => {
            let alpha = cfg.alpha.ok_or_else(|| Error::InvalidConfig("alpha required".into()))?;
            let gamma = cfg.gamma.ok_or_else(|| Error::InvalidConfig("gamma required".into()))?;
            let onb = span_basis(&inst.features);
            let lambda = if onb.len() < inst.d {
                lambda_of_subspace(&inst.objectives, &onb)?
            } else {
                lambda_of(&inst.objectives)
            };
            let psi = psi_cap(lambda, gamma);
            let alpha = if psi > 0.0 { alpha.min(psi) } else { alpha };
            if inst.sigma > 0.0 {
                Ok(compute_b(inst.sigma, alpha, inst.d, horizon.max(2)))
            } else {
                Ok(0.0)
            }
        }
    }
}

// ── Episodes ────────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: usize,
    pub arm: usize,
    /// 0 for fixed features, otherwise the round whose context draw was used.
    pub context_id: usize,
    pub reward: Vec<f64>,
    pub pareto_gap: f64,
    pub effective_gap: f64,
    /// Gate eigenvalue of V_t after the round's update.
    pub min_eig: f64,
    pub phase: Phase,
    pub weight: Option<Vec<f64>>,
    pub nanos: u64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub policy: String,
    pub rows: Vec<TrajectoryRow>,
    /// Exploration rounds before the gate opened (None if it never did).
    pub t0: Option<usize>,
    pub threshold: f64,
    pub explore_set: Vec<usize>,
}

impl Trajectory {
    pub fn arms(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.arm).collect()
    }

    pub fn total_nanos(&self) -> u64 {
        self.rows.iter().map(|r| r.nanos).sum()
    }

    pub fn cumulative(&self) -> crate::pareto::RegretCurves {
        crate::pareto::accumulate_regret(self.rows.iter().map(|r| (r.pareto_gap, r.effective_gap)))
    }
}

#[derive(Clone, Debug)]
pub struct EpisodeOutput {
    pub trajectory: Trajectory,
    pub tables: TableSource,
}

/// Runs one T-round episode.
pub fn run_episode(
    inst: &Instance,
    sampler: &ContextSampler,
    cfg: &PolicyConfig,
    horizon: usize,
    threshold: f64,
    streams: &mut EpisodeStreams,
) -> Result<EpisodeOutput> {
    let wrap = |round: usize, e: Error| Error::Episode {
        instance: streams.instance,
        repeat: streams.repeat,
        policy: cfg.name.clone(),
        round,
        source: Box::new(e),
    };
    cfg.validate(inst.m).map_err(|e| wrap(0, e))?;
    let fixed = sampler.is_fixed();
    let explore_set = if fixed { spanning_subset(&inst.features) } else { Vec::new() };
    let span = (cfg.kind == PolicyKind::MogroGeneral && fixed).then(|| span_basis(&inst.features));
    let mut state = EstimatorState::new(inst.d, inst.m, explore_set.clone(), threshold, span, fixed)
        .map_err(|e| wrap(0, e))?;

    let fixed_gaps: Option<Vec<GapResult>> =
        fixed.then(|| (0..inst.k).map(|i| effective_pareto_gap(&inst.reward_table(), i)).collect());
    let mut tables = Vec::new();
    let mut rows = Vec::with_capacity(horizon);

    for t in 1..=horizon {
        let ctx_owned;
        let contexts: &[Vec<f64>] = if fixed {
            &inst.features
        } else {
            ctx_owned = sample_context_set(sampler, inst, &mut streams.contexts);
            &ctx_owned
        };

        let start = Instant::now();
        let (arm, diag) = policy_step(&mut state, cfg, contexts, &mut streams.policy).map_err(|e| wrap(t, e))?;
        let mut nanos = start.elapsed().as_nanos() as u64;

        let x = &contexts[arm];
        let y = sample_reward(inst, x, &mut streams.reward);

        let start = Instant::now();
        observe(&mut state, x, &y).map_err(|e| wrap(t, e))?;
        nanos += start.elapsed().as_nanos() as u64;

        let gap = match &fixed_gaps {
            Some(g) => g[arm].clone(),
            None => {
                let table = inst.reward_table_for(contexts);
                let g = effective_pareto_gap(&table, arm);
                tables.push(table);
                g
            }
        };
        let min_eig = state.gate_eigenvalue().map_err(|e| wrap(t, e))?;
        rows.push(TrajectoryRow {
            t,
            arm,
            context_id: if fixed { 0 } else { t },
            reward: y,
            pareto_gap: gap.pareto_gap,
            effective_gap: gap.effective_gap,
            min_eig,
            phase: diag.phase,
            weight: diag.weight,
            nanos,
        });
    }

    let tables = if fixed {
        TableSource::Fixed(inst.reward_table())
    } else {
        TableSource::PerRound(tables)
    };
    Ok(EpisodeOutput {
        trajectory: Trajectory {
            policy: cfg.name.clone(),
            rows,
            t0: state.t0,
            threshold,
            explore_set,
        },
        tables,
    })
}

// ── Experiments ─────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: usize,
    pub mean_pr: f64,
    pub sd_pr: f64,
    pub mean_epr: f64,
    pub sd_epr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PolicyAggregate {
    pub name: String,
    pub curves: Vec<CurvePoint>,
    pub total_runtime_ns: u64,
    pub epfi_exact: f64,
    pub epfi_proxy: f64,
    pub epfi_epsilon: f64,
    pub epfi_method: String,
    pub epfi_resolution: usize,
    pub epfi_n_weights: usize,
    /// Pareto-front pull-count variance, mean over episodes (fixed features only).
    pub pf_variance: Option<f64>,
    /// Realized exploration length per episode, in (instance, repeat) order.
    pub t0_realized: Vec<Option<usize>>,
    /// Resolved B per instance.
    pub thresholds: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AggregateResult {
    pub policies: Vec<PolicyAggregate>,
}

impl AggregateResult {
    pub fn policy(&self, name: &str) -> Option<&PolicyAggregate> {
        self.policies.iter().find(|p| p.name == name)
    }
}

#[derive(Clone, Debug)]
pub struct EpisodeRecord {
    pub instance: usize,
    pub repeat: usize,
    pub output: EpisodeOutput,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub config: RunConfig,
    pub instances: Vec<Instance>,
    pub aggregate: AggregateResult,
    /// Per policy (config order), episodes in (instance, repeat) order.
    pub episodes: Vec<Vec<EpisodeRecord>>,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every (instance, repeat, policy) episode and aggregates. Results do
/// not depend on the worker count or completion order.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let instances: Vec<Instance> = (0..cfg.n_instances)
        .map(|i| build_instance(&cfg.instance, cfg.master_seed, i, cfg.horizon))
        .collect::<Result<_>>()?;
    for inst in &instances {
        for p in &cfg.policies {
            p.validate(inst.m)?;
        }
    }
    let thresholds: Vec<Vec<f64>> = cfg
        .policies
        .iter()
        .map(|p| {
            instances
                .iter()
                .map(|inst| resolve_threshold(p, inst, cfg.horizon))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for (pi, _) in cfg.policies.iter().enumerate() {
        for i in 0..cfg.n_instances {
            for r in 0..cfg.n_repeats {
                jobs.push((pi, i, r));
            }
        }
    }
    let run_job = |&(pi, i, r): &(usize, usize, usize)| -> Result<EpisodeRecord> {
        let p = &cfg.policies[pi];
        let mut streams = EpisodeStreams::derive(cfg.master_seed, i, r, &p.name);
        let output = run_episode(&instances[i], &cfg.contexts, p, cfg.horizon, thresholds[pi][i], &mut streams)?;
        Ok(EpisodeRecord {
            instance: i,
            repeat: r,
            output,
        })
    };
    let records: Vec<EpisodeRecord> = match cfg.workers {
        Some(1) => jobs.iter().map(run_job).collect::<Result<_>>()?,
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| jobs.par_iter().map(run_job).collect::<Result<_>>())?,
        None => jobs.par_iter().map(run_job).collect::<Result<_>>()?,
    };

    let per_policy = cfg.n_instances * cfg.n_repeats;
    let mut episodes: Vec<Vec<EpisodeRecord>> = Vec::with_capacity(cfg.policies.len());
    let mut it = records.into_iter();
    for _ in &cfg.policies {
        episodes.push(it.by_ref().take(per_policy).collect());
    }

    let policies = cfg
        .policies
        .iter()
        .zip(&episodes)
        .zip(&thresholds)
        .map(|((p, eps), th)| aggregate_policy(cfg, &p.name, eps, &instances, th.clone()))
        .collect();
    Ok(ExperimentResult {
        config: cfg.clone(),
        instances,
        aggregate: AggregateResult { policies },
        episodes,
    })
}

fn aggregate_policy(
    cfg: &RunConfig,
    name: &str,
    eps: &[EpisodeRecord],
    instances: &[Instance],
    thresholds: Vec<f64>,
) -> PolicyAggregate {
    let curves_per_run: Vec<_> = eps.iter().map(|e| e.output.trajectory.cumulative()).collect();
    let curves = (0..cfg.horizon)
        .map(|t| {
            let pr: Vec<f64> = curves_per_run.iter().map(|c| c.pr[t]).collect();
            let epr: Vec<f64> = curves_per_run.iter().map(|c| c.epr[t]).collect();
            let (mean_pr, sd_pr) = mean_sd(&pr);
            let (mean_epr, sd_epr) = mean_sd(&epr);
            CurvePoint {
                t: t + 1,
                mean_pr,
                sd_pr,
                mean_epr,
                sd_epr,
            }
        })
        .collect();

    let eps_value = cfg.metrics.epfi_epsilon;
    let mut exact = 0.0;
    let mut proxy = 0.0;
    let mut cover_meta = (String::new(), 0usize, 0usize);
    for (i, inst) in instances.iter().enumerate() {
        let arms: Vec<Vec<usize>> = eps
            .iter()
            .filter(|e| e.instance == i)
            .map(|e| e.output.trajectory.arms())
            .collect();
        let runs: Vec<(&[usize], &TableSource)> = eps
            .iter()
            .filter(|e| e.instance == i)
            .zip(&arms)
            .map(|(e, a)| (a.as_slice(), &e.output.tables))
            .collect();
        let mut rng = RngStream::new(cfg.master_seed, stream_id(i, None, None, "epfi"));
        let cover = epfi_weights(inst.m, cfg.metrics.weight_grid_resolution, &mut rng);
        exact += epfi_exact_over_runs(&runs, eps_value, &cover.weights);
        proxy += epfi_ball_proxy_over_runs(&runs, eps_value);
        cover_meta = (cover.method, cover.resolution, cover.weights.len());
    }
    let n_inst = instances.len() as f64;

    let pf_variance = cfg.contexts.is_fixed().then(|| {
        let total: f64 = eps
            .iter()
            .map(|e| {
                let front = pareto_front(&instances[e.instance].reward_table());
                pareto_fairness_variance(&e.output.trajectory.arms(), &front)
            })
            .sum();
        total / eps.len() as f64
    });

    PolicyAggregate {
        name: name.to_string(),
        curves,
        total_runtime_ns: eps.iter().map(|e| e.output.trajectory.total_nanos()).sum(),
        epfi_exact: exact / n_inst,
        epfi_proxy: proxy / n_inst,
        epfi_epsilon: eps_value,
        epfi_method: cover_meta.0,
        epfi_resolution: cover_meta.1,
        epfi_n_weights: cover_meta.2,
        pf_variance,
        t0_realized: eps.iter().map(|e| e.output.trajectory.t0).collect(),
        thresholds,
    }
}

// ── Persistence ─────────────────────────────────────────────────────────────

/// Fields excluded from content hashes because they measure wall-clock time.
pub const RUNTIME_FIELDS: [&str; 2] = ["total_runtime_ns", "nanos"];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub files: BTreeMap<String, String>,
    pub hash_excludes: Vec<String>,
}

fn hex_sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Shortest round-trip float text; exponent form for very small or large
/// magnitudes.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn curves_csv(agg: &AggregateResult) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(["policy", "t", "mean_pr", "sd_pr", "mean_epr", "sd_epr"]).map_err(io)?;
    for p in &agg.policies {
        for c in &p.curves {
            w.write_record([
                p.name.clone(),
                c.t.to_string(),
                fmt_f64(c.mean_pr),
                fmt_f64(c.sd_pr),
                fmt_f64(c.mean_epr),
                fmt_f64(c.sd_epr),
            ])
            .map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Reads curves.csv back into per-policy curves (file order).
pub fn load_curves(path: &Path) -> Result<Vec<(String, Vec<CurvePoint>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out: Vec<(String, Vec<CurvePoint>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Format(format!("bad curves.csv field {i}")))
        };
        let name = rec.get(0).unwrap_or("").to_string();
        let point = CurvePoint {
            t: num(1)? as usize,
            mean_pr: num(2)?,
            sd_pr: num(3)?,
            mean_epr: num(4)?,
            sd_epr: num(5)?,
        };
        match out.last_mut() {
            Some((n, v)) if *n == name => v.push(point),
            _ => out.push((name, vec![point])),
        }
    }
    Ok(out)
}

fn trajectory_csv(traj: &Trajectory, m: usize, zero_nanos: bool) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Format(e.to_string());
    let mut header: Vec<String> = ["t", "arm", "phase", "pareto_gap", "effective_gap", "min_eig"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..m).map(|i| format!("weight_{i}")));
    header.push("nanos".into());
    w.write_record(&header).map_err(io)?;
    for r in &traj.rows {
        let mut rec = vec![
            r.t.to_string(),
            r.arm.to_string(),
            r.phase.as_str().to_string(),
            fmt_f64(r.pareto_gap),
            fmt_f64(r.effective_gap),
            fmt_f64(r.min_eig),
        ];
        match &r.weight {
            Some(w) => rec.extend(w.iter().map(|&v| fmt_f64(v))),
            None => rec.extend(std::iter::repeat_n(String::new(), m)),
        }
        rec.push(if zero_nanos { "0".into() } else { r.nanos.to_string() });
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Row of a saved trajectory CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedRow {
    pub t: usize,
    pub arm: usize,
    pub pareto_gap: f64,
    pub effective_gap: f64,
}

pub fn load_trajectory(path: &Path) -> Result<Vec<SavedRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(name.to_string()))
    };
    let (ct, ca, cp, ce) = (col("t")?, col("arm")?, col("pareto_gap")?, col("effective_gap")?);
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let field = |c: usize, name: &str| -> Result<&str> {
            rec.get(c).ok_or_else(|| Error::Parse {
                row: row + 1,
                column: name.into(),
                value: String::new(),
            })
        };
        let parse_err = |c: usize, name: &str| Error::Parse {
            row: row + 1,
            column: name.into(),
            value: rec.get(c).unwrap_or("").into(),
        };
        out.push(SavedRow {
            t: field(ct, "t")?.parse().map_err(|_| parse_err(ct, "t"))?,
            arm: field(ca, "arm")?.parse().map_err(|_| parse_err(ca, "arm"))?,
            pareto_gap: field(cp, "pareto_gap")?.parse().map_err(|_| parse_err(cp, "pareto_gap"))?,
            effective_gap: field(ce, "effective_gap")?.parse().map_err(|_| parse_err(ce, "effective_gap"))?,
        });
    }
    Ok(out)
}

pub fn summary_json(result: &ExperimentResult, include_runtime: bool) -> Value {
    let mut policies = serde_json::Map::new();
    for (agg, cfg) in result.aggregate.policies.iter().zip(&result.config.policies) {
        let last = agg.curves.last();
        let mut entry = json!({
            "epfi_exact": agg.epfi_exact,
            "epfi_proxy": agg.epfi_proxy,
            "epfi_epsilon": agg.epfi_epsilon,
            "epfi_method": agg.epfi_method,
            "epfi_resolution": agg.epfi_resolution,
            "epfi_n_weights": agg.epfi_n_weights,
            "epfi_proxy_metric": "reward-space sup-norm ball around each effective-front arm",
            "pf_variance": agg.pf_variance,
            "t0_realized": agg.t0_realized,
            "thresholds_B": agg.thresholds,
            "final_mean_pr": last.map(|c| c.mean_pr),
            "final_mean_epr": last.map(|c| c.mean_epr),
            "config": cfg,
        });
        if include_runtime {
            entry["total_runtime_ns"] = json!(agg.total_runtime_ns);
        }
        policies.insert(agg.name.clone(), entry);
    }
    json!({
        "T": result.config.horizon,
        "n_instances": result.config.n_instances,
        "n_repeats": result.config.n_repeats,
        "master_seed": result.config.master_seed,
        "policies": Value::Object(policies),
    })
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes curves.csv, summary.json, config.echo.json, instances/*.json, optionally
/// trajectories/*.csv, and manifest.json with SHA-256 hashes. Hashes of files
/// containing wall-clock fields are taken over the content with those fields
/// removed (summary) or zeroed (trajectories).
pub fn persist(result: &ExperimentResult, dir: &Path, save_trajectories: bool) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = BTreeMap::new();

    let curves = curves_csv(&result.aggregate)?;
    write_file(&dir.join("curves.csv"), curves.as_bytes())?;
    files.insert("curves.csv".to_string(), hex_sha256(curves.as_bytes()));

    let summary = serde_json::to_string_pretty(&summary_json(result, true)).expect("serializable");
    write_file(&dir.join("summary.json"), summary.as_bytes())?;
    let canonical = serde_json::to_string_pretty(&summary_json(result, false)).expect("serializable");
    files.insert("summary.json".to_string(), hex_sha256(canonical.as_bytes()));

    let echo = serde_json::to_string_pretty(&serde_json::to_value(&result.config).expect("serializable"))
        .expect("serializable");
    write_file(&dir.join("config.echo.json"), echo.as_bytes())?;
    files.insert("config.echo.json".to_string(), hex_sha256(echo.as_bytes()));

    let idir = dir.join("instances");
    std::fs::create_dir_all(&idir).map_err(|e| Error::io(&idir, e))?;
    for (i, inst) in result.instances.iter().enumerate() {
        let name = format!("instance_{i}.json");
        let text = inst.to_json();
        write_file(&idir.join(&name), text.as_bytes())?;
        files.insert(format!("instances/{name}"), hex_sha256(text.as_bytes()));
    }

    if save_trajectories {
        let tdir = dir.join("trajectories");
        std::fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
        for eps in &result.episodes {
            for rec in eps {
                let traj = &rec.output.trajectory;
                let m = result.instances[rec.instance].m;
                let name = format!("{}__i{}_r{}.csv", sanitize(&traj.policy), rec.instance, rec.repeat);
                let content = trajectory_csv(traj, m, false)?;
                write_file(&tdir.join(&name), content.as_bytes())?;
                let canonical = trajectory_csv(traj, m, true)?;
                files.insert(format!("trajectories/{name}"), hex_sha256(canonical.as_bytes()));
            }
        }
    }

    let manifest = Manifest {
        files,
        hash_excludes: RUNTIME_FIELDS.iter().map(|s| s.to_string()).collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("serializable");
    write_file(&dir.join("manifest.json"), text.as_bytes())?;
    Ok(manifest)
}

/// Recomputes per-round gaps of a fixed-feature trajectory from the instance.
pub fn replay_fixed_gaps(inst: &Instance, arms: &[usize]) -> Result<Vec<(f64, f64)>> {
    let table = inst.reward_table();
    let gaps: Vec<GapResult> = (0..inst.k).map(|i| effective_pareto_gap(&table, i)).collect();
    arms.iter()
        .map(|&a| {
            gaps.get(a)
                .map(|g| (g.pareto_gap, g.effective_gap))
                .ok_or_else(|| Error::InvalidInput(format!("arm {a} out of range for K = {}", inst.k)))
        })
        .collect()
}
