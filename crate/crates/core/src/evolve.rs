//! Multi-agent evolutionary training loop.
//!
//! A population of agents runs coordinate-descent episodes in parallel and
//! then synchronizes: the best agent survives untouched, the rest either keep
//! their state or copy the leader, with optional uniform perturbation to
//! re-seed diversity. Every random decision is drawn from a counter-based
//! ChaCha8 stream keyed by (master seed, agent id, episode, purpose), so a
//! run is a pure function of its configuration: thread count, interleaving,
//! and checkpoint/resume boundaries cannot change a single bit of the output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::TAU;

use crate::landscape::{iterate, CostFunction, IterateConfig, LandscapeOrder};
use crate::sim::ParameterVector;
use crate::{Error, Result};

/// Stream purposes; distinct constants keep the per-(agent, episode) streams
/// disjoint even when drawn in the same episode.
const STREAM_INIT: u64 = 1;
const STREAM_EPISODE: u64 = 2;
const STREAM_SYNC: u64 = 3;

fn stream(master_seed: u64, agent_id: u64, episode: u64, purpose: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&agent_id.to_le_bytes());
    seed[16..24].copy_from_slice(&episode.to_le_bytes());
    seed[24..32].copy_from_slice(&purpose.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

/// How agents start out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Every parameter at 0.
    Zeros,
    /// Every parameter i.i.d. uniform on [0, 2π), per-agent seeded.
    Random,
}

/// The starting parameters of one agent; what [`Driver::new`] hands agent
/// `agent_id` before its first evaluation.
pub fn initial_parameters(
    master_seed: u64,
    agent_id: u64,
    n_params: usize,
    init: InitMode,
) -> ParameterVector {
    match init {
        InitMode::Zeros => ParameterVector::zeros(n_params),
        InitMode::Random => {
            let mut rng = stream(master_seed, agent_id, 0, STREAM_INIT);
            ParameterVector::new(
                (0..n_params).map(|_| rand::Rng::gen::<f64>(&mut rng) * TAU).collect(),
            )
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub n_agents: usize,
    /// Optimizer steps per agent between synchronization barriers.
    pub episode_length: usize,
    /// Probability a non-best agent keeps its own state at a barrier.
    pub p_exploration: f64,
    /// Probability a non-best agent is perturbed after the keep/copy choice.
    pub p_randomization: f64,
    /// Perturbation half-width: each angle moves by i.i.d. uniform [-r, r].
    pub r: f64,
    /// Coordinates per search direction (M).
    pub subset_size: usize,
    /// Line-search samples (S).
    pub line_samples: usize,
    /// Cross-section order the cost function must declare; a mismatch is a
    /// configuration error, not a silent fallback.
    pub landscape_order: LandscapeOrder,
    pub max_evaluations: u64,
    /// Stop as soon as the best cost reaches this value, if set.
    pub target_cost: Option<f64>,
    pub master_seed: u64,
    pub init: InitMode,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            n_agents: 1,
            episode_length: 500,
            p_exploration: 0.2,
            p_randomization: 0.2,
            r: 0.3,
            subset_size: 8,
            line_samples: 32,
            landscape_order: LandscapeOrder::Three,
            max_evaluations: 1_000_000,
            target_cost: None,
            master_seed: 0,
            init: InitMode::Zeros,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::InvalidConfig("n_agents must be positive".into()));
        }
        if self.episode_length == 0 {
            return Err(Error::InvalidConfig("episode_length must be positive".into()));
        }
        for (name, p) in [("p_exploration", self.p_exploration), ("p_randomization", self.p_randomization)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if !self.r.is_finite() || self.r < 0.0 {
            return Err(Error::InvalidConfig(format!("perturbation radius must be >= 0, got {}", self.r)));
        }
        if self.subset_size == 0 {
            return Err(Error::InvalidConfig("subset_size must be positive".into()));
        }
        if self.line_samples < 2 {
            return Err(Error::InvalidConfig("line_samples must be at least 2".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding; checkpoints carry it so a
    /// resume against a different configuration is rejected instead of
    /// silently diverging.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub id: usize,
    pub params: ParameterVector,
    /// Cost at `params`; kept in lockstep with every parameter change.
    pub cost: f64,
    /// Set when an episode step finds no usable direction; cleared by any
    /// parameter change at a barrier.
    pub converged: bool,
}

/// One line of the run trace. Diagnostics are filled in by the probe when
/// one is attached, otherwise NaN / absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub episode: u64,
    /// Cumulative cost evaluations at emission time; strictly increasing
    /// across the trace.
    pub evaluations: u64,
    pub best_cost: f64,
    /// NaN when no probe was attached; stored as null in JSON.
    #[serde(with = "nan_as_null")]
    pub s2_normalized: f64,
    pub overlap: Option<f64>,
}

/// Bit-level equality: deterministic runs must compare equal even when the
/// diagnostic slot is NaN.
impl PartialEq for TraceRecord {
    fn eq(&self, other: &Self) -> bool {
        self.episode == other.episode
            && self.evaluations == other.evaluations
            && self.best_cost.to_bits() == other.best_cost.to_bits()
            && self.s2_normalized.to_bits() == other.s2_normalized.to_bits()
            && self.overlap.map(f64::to_bits) == other.overlap.map(f64::to_bits)
    }
}

/// serde_json writes NaN as null but refuses to read it back; this adapter
/// makes the mapping invertible.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Side-channel diagnostics evaluated at the current best parameters when a
/// trace record is emitted. Probe calls never touch the evaluation counter.
pub trait TraceProbe: Sync {
    fn measure(&self, params: &ParameterVector) -> ProbeSample;
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeSample {
    pub s2_normalized: f64,
    pub overlap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    BudgetExhausted,
    TargetReached,
    /// An episode (including its barrier) consumed zero evaluations, so no
    /// future episode could change anything.
    Stalled,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub best_params: Vec<f64>,
    pub best_cost: f64,
    pub evaluations_used: u64,
    pub episodes: u64,
    pub stop_reason: StopReason,
    pub trace: Vec<TraceRecord>,
}

/// Runs one agent for up to `episode_length` optimizer steps, stopping early
/// when the agent converges or its evaluation allowance runs out. Returns
/// the evaluations it consumed; the caller owns global accounting.
pub fn run_episode<C: CostFunction + ?Sized>(
    f: &C,
    agent: &mut Agent,
    cfg: &EvolutionConfig,
    episode: u64,
    allowance: u64,
) -> Result<u64> {
    if agent.converged {
        return Ok(0);
    }
    let mut rng = stream(cfg.master_seed, agent.id as u64, episode, STREAM_EPISODE);
    let icfg = IterateConfig { subset_size: cfg.subset_size, line_samples: cfg.line_samples };
    let mut used = 0u64;
    for _ in 0..cfg.episode_length {
        if used >= allowance {
            break;
        }
        let step = iterate(f, &agent.params, agent.cost, &icfg, &mut rng)?;
        used += step.evaluations;
        agent.params = step.params;
        agent.cost = step.cost;
        if step.converged {
            agent.converged = true;
            break;
        }
    }
    Ok(used)
}

/// Barrier protocol. The strictly best agent (lowest cost, ties to the
/// lowest id) is left untouched. Every other agent keeps its state with
/// probability `p_exploration`, otherwise copies the best agent; then, with
/// independent probability `p_randomization`, all of its angles are shifted
/// by i.i.d. uniform [-r, r] and its cost is re-evaluated (which counts
/// against the budget). Decisions come from per-agent streams, so the
/// processing order is immaterial. Returns evaluations consumed.
pub fn synchronize<C: CostFunction + ?Sized>(
    f: &C,
    agents: &mut [Agent],
    cfg: &EvolutionConfig,
    episode: u64,
) -> Result<u64> {
    let best_idx = best_agent_index(agents);
    let best_params = agents[best_idx].params.clone();
    let best_cost = agents[best_idx].cost;
    let best_converged = agents[best_idx].converged;
    let mut used = 0u64;
    for idx in 0..agents.len() {
        if idx == best_idx {
            continue;
        }
        let agent = &mut agents[idx];
        let mut rng = stream(cfg.master_seed, agent.id as u64, episode, STREAM_SYNC);
        // Both decisions are always drawn, so the stream layout does not
        // depend on the outcomes.
        let keep = rand::Rng::gen::<f64>(&mut rng) < cfg.p_exploration;
        let randomize = rand::Rng::gen::<f64>(&mut rng) < cfg.p_randomization;
        if !keep {
            agent.params = best_params.clone();
            agent.cost = best_cost;
            agent.converged = best_converged;
        }
        if randomize {
            let mut v = agent.params.clone();
            for i in 0..v.len() {
                let shift = rand::Rng::gen::<f64>(&mut rng) * (2.0 * cfg.r) - cfg.r;
                v.set(i, v.get(i) + shift);
            }
            agent.cost = f.evaluate(&v)?;
            agent.params = v;
            agent.converged = false;
            used += 1;
        }
    }
    Ok(used)
}

fn best_agent_index(agents: &[Agent]) -> usize {
    let mut best = 0;
    for (i, a) in agents.iter().enumerate().skip(1) {
        if a.cost < agents[best].cost {
            best = i;
        }
    }
    best
}

/// Serialized run state. `version` guards the layout, `cfg_hash` binds the
/// snapshot to the exact configuration it was taken under.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    pub cfg_hash: String,
    pub episode: u64,
    pub evaluations: u64,
    pub best_cost: f64,
    pub best_params: Vec<f64>,
    pub agents: Vec<AgentSnapshot>,
    pub trace: Vec<TraceRecord>,
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSnapshot {
    pub id: usize,
    pub params: Vec<f64>,
    pub cost: f64,
    pub converged: bool,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cp: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("checkpoint: {e}")))?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointMismatch(format!(
                "unsupported version {} (expected {})",
                cp.version, CHECKPOINT_VERSION
            )));
        }
        Ok(cp)
    }
}

/// Stepping engine behind [`run`]. Owns the population and the trace;
/// `step` advances exactly one episode + barrier, so callers can checkpoint
/// at any boundary and resume bit-exactly.
pub struct Driver<'a, C: CostFunction + ?Sized> {
    f: &'a C,
    cfg: EvolutionConfig,
    probe: Option<&'a dyn TraceProbe>,
    agents: Vec<Agent>,
    episode: u64,
    evaluations: u64,
    best_cost: f64,
    best_params: ParameterVector,
    trace: Vec<TraceRecord>,
    stopped: Option<StopReason>,
}

impl<'a, C: CostFunction + ?Sized> Driver<'a, C> {
    pub fn new(
        f: &'a C,
        cfg: EvolutionConfig,
        probe: Option<&'a dyn TraceProbe>,
    ) -> Result<Self> {
        cfg.validate()?;
        if f.order() != cfg.landscape_order {
            return Err(Error::InvalidConfig(
                "configured landscape order does not match the cost function".into(),
            ));
        }
        let l = f.n_params();
        let mut agents = Vec::with_capacity(cfg.n_agents);
        for id in 0..cfg.n_agents {
            let params = initial_parameters(cfg.master_seed, id as u64, l, cfg.init);
            let cost = f.evaluate(&params)?;
            agents.push(Agent { id, params, cost, converged: false });
        }
        let evaluations = cfg.n_agents as u64;
        let best_idx = best_agent_index(&agents);
        let best_cost = agents[best_idx].cost;
        let best_params = agents[best_idx].params.clone();
        let mut driver = Driver {
            f,
            cfg,
            probe,
            agents,
            episode: 0,
            evaluations,
            best_cost,
            best_params,
            trace: Vec::new(),
            stopped: None,
        };
        driver.record();
        if driver.target_met() {
            driver.stopped = Some(StopReason::TargetReached);
        } else if driver.evaluations >= driver.cfg.max_evaluations {
            driver.stopped = Some(StopReason::BudgetExhausted);
        }
        Ok(driver)
    }

    /// Rebuilds a driver mid-run. The checkpoint must have been taken under
    /// a configuration with the same digest.
    pub fn resume(
        f: &'a C,
        cfg: EvolutionConfig,
        probe: Option<&'a dyn TraceProbe>,
        cp: &Checkpoint,
    ) -> Result<Self> {
        cfg.validate()?;
        if f.order() != cfg.landscape_order {
            return Err(Error::InvalidConfig(
                "configured landscape order does not match the cost function".into(),
            ));
        }
        let digest = cfg.digest();
        if cp.cfg_hash != digest {
            return Err(Error::CheckpointMismatch(format!(
                "config digest {} does not match checkpoint digest {}",
                digest, cp.cfg_hash
            )));
        }
        if cp.agents.len() != cfg.n_agents {
            return Err(Error::CheckpointMismatch(format!(
                "checkpoint holds {} agents, config asks for {}",
                cp.agents.len(),
                cfg.n_agents
            )));
        }
        let l = f.n_params();
        let mut agents = Vec::with_capacity(cp.agents.len());
        for snap in &cp.agents {
            if snap.params.len() != l {
                return Err(Error::CheckpointMismatch(format!(
                    "agent {} has {} parameters, cost function has {}",
                    snap.id,
                    snap.params.len(),
                    l
                )));
            }
            agents.push(Agent {
                id: snap.id,
                params: ParameterVector::new(snap.params.clone()),
                cost: snap.cost,
                converged: snap.converged,
            });
        }
        let mut driver = Driver {
            f,
            cfg,
            probe,
            agents,
            episode: cp.episode,
            evaluations: cp.evaluations,
            best_cost: cp.best_cost,
            best_params: ParameterVector::new(cp.best_params.clone()),
            trace: cp.trace.clone(),
            stopped: None,
        };
        if driver.target_met() {
            driver.stopped = Some(StopReason::TargetReached);
        } else if driver.evaluations >= driver.cfg.max_evaluations {
            driver.stopped = Some(StopReason::BudgetExhausted);
        }
        Ok(driver)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            cfg_hash: self.cfg.digest(),
            episode: self.episode,
            evaluations: self.evaluations,
            best_cost: self.best_cost,
            best_params: self.best_params.values().to_vec(),
            agents: self
                .agents
                .iter()
                .map(|a| AgentSnapshot {
                    id: a.id,
                    params: a.params.values().to_vec(),
                    cost: a.cost,
                    converged: a.converged,
                })
                .collect(),
            trace: self.trace.clone(),
        }
    }

    fn target_met(&self) -> bool {
        self.cfg.target_cost.is_some_and(|t| self.best_cost <= t)
    }

    fn absorb_population_best(&mut self) {
        let idx = best_agent_index(&self.agents);
        if self.agents[idx].cost < self.best_cost {
            self.best_cost = self.agents[idx].cost;
            self.best_params = self.agents[idx].params.clone();
        }
    }

    /// Emits a trace record unless evaluations have not moved since the last
    /// one; the trace stays strictly increasing in `evaluations`.
    fn record(&mut self) {
        if let Some(last) = self.trace.last() {
            if self.evaluations <= last.evaluations {
                return;
            }
        }
        let sample = match self.probe {
            Some(p) => p.measure(&self.best_params),
            None => ProbeSample { s2_normalized: f64::NAN, overlap: None },
        };
        self.trace.push(TraceRecord {
            episode: self.episode,
            evaluations: self.evaluations,
            best_cost: self.best_cost,
            s2_normalized: sample.s2_normalized,
            overlap: sample.overlap,
        });
    }

    /// One episode plus its barrier. Returns true while the run should
    /// continue. Agents draw from streams keyed by id and episode, and the
    /// per-agent allowance is fixed before the episode starts, so the rayon
    /// schedule cannot influence any outcome.
    pub fn step(&mut self) -> Result<bool> {
        if self.stopped.is_some() {
            return Ok(false);
        }
        let remaining = self.cfg.max_evaluations.saturating_sub(self.evaluations);
        if remaining == 0 {
            self.stopped = Some(StopReason::BudgetExhausted);
            return Ok(false);
        }
        self.episode += 1;
        let allowance = remaining.div_ceil(self.cfg.n_agents as u64);
        let f = self.f;
        let cfg = &self.cfg;
        let episode = self.episode;
        let outcomes: Vec<Result<(Agent, u64)>> = std::mem::take(&mut self.agents)
            .into_par_iter()
            .map(|mut agent| {
                let used = run_episode(f, &mut agent, cfg, episode, allowance)?;
                Ok((agent, used))
            })
            .collect();
        let mut episode_evals = 0u64;
        for outcome in outcomes {
            let (agent, used) = outcome?;
            episode_evals += used;
            self.agents.push(agent);
        }
        self.evaluations += episode_evals;
        self.absorb_population_best();
        if self.target_met() {
            self.record();
            self.stopped = Some(StopReason::TargetReached);
            return Ok(false);
        }
        let sync_evals = synchronize(self.f, &mut self.agents, &self.cfg, self.episode)?;
        self.evaluations += sync_evals;
        self.absorb_population_best();
        self.record();
        if self.target_met() {
            self.stopped = Some(StopReason::TargetReached);
            return Ok(false);
        }
        if episode_evals + sync_evals == 0 {
            self.stopped = Some(StopReason::Stalled);
            return Ok(false);
        }
        if self.evaluations >= self.cfg.max_evaluations {
            self.stopped = Some(StopReason::BudgetExhausted);
            return Ok(false);
        }
        Ok(true)
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while self.step()? {}
        Ok(())
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn best_cost(&self) -> f64 {
        self.best_cost
    }

    pub fn best_params(&self) -> &ParameterVector {
        &self.best_params
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stopped
    }

    pub fn into_result(self) -> RunResult {
        RunResult {
            best_params: self.best_params.values().to_vec(),
            best_cost: self.best_cost,
            evaluations_used: self.evaluations,
            episodes: self.episode,
            stop_reason: self.stopped.unwrap_or(StopReason::BudgetExhausted),
            trace: self.trace,
        }
    }
}

/// Full training run: initialize per `cfg.init`, then alternate episodes and
/// barriers until the budget is spent, the target cost is reached, or the
/// population stalls. Deterministic in `cfg` alone.
pub fn run<C: CostFunction + ?Sized>(
    f: &C,
    cfg: &EvolutionConfig,
    probe: Option<&dyn TraceProbe>,
) -> Result<RunResult> {
    let mut driver = Driver::new(f, cfg.clone(), probe)?;
    driver.run_to_end()?;
    Ok(driver.into_result())
}
