//! Run configuration: schema, strict JSON parsing, static validation.
//!
//! The schema is strict on purpose: unknown keys anywhere are rejected, and
//! numbers written as strings are rejected (no locale guessing). Checks that
//! need only the config file happen in [`RunConfig::validate`]; checks that
//! need the built model (subset bounds, overlap gating) live in the runner
//! but still count as config errors.

use crate::{AppError, AppResult};
use qevo::ansatz::AnsatzSpec;
use qevo::evolve::{EvolutionConfig, InitMode};
use qevo::landscape::LandscapeOrder;
use qevo::models::{DEFAULT_H_Z, DEFAULT_J};
use qevo::synth::DEFAULT_POLISH_THRESHOLD;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer};
use serde_json::Value;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Vqe,
    Synth,
    Eig,
    Scan,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Vqe => "vqe",
            Mode::Synth => "synth",
            Mode::Eig => "eig",
            Mode::Scan => "scan",
        }
    }
}

/// Spin model built from edges: `J * (XX + YY + ZZ)` per edge plus a uniform
/// `h_z * Z` field.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeisenbergModel {
    pub n_qubits: usize,
    pub graph: GraphConfig,
    #[serde(default = "default_j")]
    pub j: f64,
    #[serde(default = "default_h_z")]
    pub h_z: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SykModel {
    pub n_qubits: usize,
    #[serde(default = "default_j")]
    pub j: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileRef {
    pub path: String,
}

fn default_j() -> f64 {
    DEFAULT_J
}

fn default_h_z() -> f64 {
    DEFAULT_H_Z
}

/// The system under study. Tagged by `"kind"`; each kind has its own strict
/// field set.
#[derive(Debug, Clone)]
pub enum ModelConfig {
    Heisenberg(HeisenbergModel),
    Syk(SykModel),
    /// Pauli-term text file, one `<weight> <string>` per line.
    HamiltonianFile(FileRef),
    /// Unitary matrix file; only meaningful for synthesis.
    TargetFile(FileRef),
}

impl ModelConfig {
    /// Qubit count when the config itself declares one; file-backed models
    /// reveal theirs only on load.
    pub fn n_qubits(&self) -> Option<usize> {
        match self {
            ModelConfig::Heisenberg(m) => Some(m.n_qubits),
            ModelConfig::Syk(m) => Some(m.n_qubits),
            ModelConfig::HamiltonianFile(_) | ModelConfig::TargetFile(_) => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelConfig::Heisenberg(_) => "heisenberg",
            ModelConfig::Syk(_) => "syk",
            ModelConfig::HamiltonianFile(_) => "hamiltonian_file",
            ModelConfig::TargetFile(_) => "target_file",
        }
    }
}

/// Pops `"kind"` out of a JSON object so the remainder can be handed to a
/// deny_unknown_fields struct. serde's own internally-tagged representation
/// silently ignores unknown keys, which this schema must not do.
fn split_kind<E: serde::de::Error>(v: Value, what: &str) -> Result<(String, Value), E> {
    let Value::Object(mut map) = v else {
        return Err(E::custom(format!("{what} must be a JSON object with a \"kind\" field")));
    };
    match map.remove("kind") {
        Some(Value::String(kind)) => Ok((kind, Value::Object(map))),
        Some(_) => Err(E::custom(format!("{what}.kind must be a string"))),
        None => Err(E::custom(format!("{what}.kind is required"))),
    }
}

impl<'de> Deserialize<'de> for ModelConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (kind, rest) = split_kind(Value::deserialize(d)?, "model")?;
        let fail = |e: serde_json::Error| D::Error::custom(format!("model ({kind}): {e}"));
        match kind.as_str() {
            "heisenberg" => serde_json::from_value(rest).map(ModelConfig::Heisenberg).map_err(fail),
            "syk" => serde_json::from_value(rest).map(ModelConfig::Syk).map_err(fail),
            "hamiltonian_file" => {
                serde_json::from_value(rest).map(ModelConfig::HamiltonianFile).map_err(fail)
            }
            "target_file" => serde_json::from_value(rest).map(ModelConfig::TargetFile).map_err(fail),
            other => Err(D::Error::custom(format!(
                "unknown model kind \"{other}\" (expected heisenberg, syk, hamiltonian_file, or target_file)"
            ))),
        }
    }
}

/// Interaction graph of a Heisenberg model, over the model's qubit count.
#[derive(Debug, Clone)]
pub enum GraphConfig {
    Ring,
    RandomRegular { degree: usize, seed: u64 },
    Edges { list: Vec<(usize, usize)> },
}

impl<'de> Deserialize<'de> for GraphConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Empty {}

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RandomRegularRaw {
            degree: usize,
            seed: u64,
        }

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct EdgesRaw {
            list: Vec<(usize, usize)>,
        }

        let (kind, rest) = split_kind(Value::deserialize(d)?, "graph")?;
        let fail = |e: serde_json::Error| D::Error::custom(format!("graph ({kind}): {e}"));
        match kind.as_str() {
            "ring" => {
                serde_json::from_value::<Empty>(rest).map_err(fail)?;
                Ok(GraphConfig::Ring)
            }
            "random_regular" => {
                let raw: RandomRegularRaw = serde_json::from_value(rest).map_err(fail)?;
                Ok(GraphConfig::RandomRegular { degree: raw.degree, seed: raw.seed })
            }
            "edges" => {
                let raw: EdgesRaw = serde_json::from_value(rest).map_err(fail)?;
                Ok(GraphConfig::Edges { list: raw.list })
            }
            other => Err(D::Error::custom(format!(
                "unknown graph kind \"{other}\" (expected ring, random_regular, or edges)"
            ))),
        }
    }
}

/// Optimizer section. Fields mirror the engine config except that the
/// cross-section order is derived from the ansatz, never configured, and the
/// initializer lives at the top level.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub n_agents: usize,
    pub episode_length: usize,
    pub p_exploration: f64,
    pub p_randomization: f64,
    pub r: f64,
    pub subset_size: usize,
    pub line_samples: usize,
    pub max_evaluations: u64,
    pub target_cost: Option<f64>,
    pub master_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let d = EvolutionConfig::default();
        OptimizerConfig {
            n_agents: d.n_agents,
            episode_length: d.episode_length,
            p_exploration: d.p_exploration,
            p_randomization: d.p_randomization,
            r: d.r,
            subset_size: d.subset_size,
            line_samples: d.line_samples,
            max_evaluations: d.max_evaluations,
            target_cost: d.target_cost,
            master_seed: d.master_seed,
        }
    }
}

impl OptimizerConfig {
    /// Engine config with the derived cross-section order and the effective
    /// seed (command line wins over the file).
    pub fn to_evolution(&self, order: LandscapeOrder, init: InitMode, seed: u64) -> EvolutionConfig {
        EvolutionConfig {
            n_agents: self.n_agents,
            episode_length: self.episode_length,
            p_exploration: self.p_exploration,
            p_randomization: self.p_randomization,
            r: self.r,
            subset_size: self.subset_size,
            line_samples: self.line_samples,
            landscape_order: order,
            max_evaluations: self.max_evaluations,
            target_cost: self.target_cost,
            master_seed: seed,
            init,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    /// Qubits whose normalized second Renyi entropy is traced. Absent: {0,1}
    /// shrunk to fit small registers. Explicit empty list: entropy off.
    pub entropy_subset: Option<Vec<usize>>,
    /// Track the squared projection onto the exact ground space. Costs a
    /// dense/Lanczos solve up front, so it is opt-in and capped at 16 qubits.
    pub overlap: bool,
    /// Keep every k-th episode in trace.csv (the final record always stays).
    pub record_every: u64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig { entropy_subset: None, overlap: false, record_every: 1 }
    }
}

impl DiagnosticsConfig {
    /// Resolves the entropy subset against an n-qubit model. `None` means
    /// entropy recording is off. Explicit subsets must index distinct qubits
    /// and leave at least as many qubits outside (the Page normalizer needs
    /// |A| <= n/2).
    pub fn effective_subset(&self, n: usize) -> AppResult<Option<Vec<usize>>> {
        match &self.entropy_subset {
            None => Ok(if n >= 4 {
                Some(vec![0, 1])
            } else if n >= 2 {
                Some(vec![0])
            } else {
                None
            }),
            Some(v) if v.is_empty() => Ok(None),
            Some(v) => {
                let mut seen = vec![false; n];
                for &q in v {
                    if q >= n {
                        return Err(AppError::Config(format!(
                            "diagnostics.entropy_subset names qubit {q}, model has {n}"
                        )));
                    }
                    if seen[q] {
                        return Err(AppError::Config(format!(
                            "diagnostics.entropy_subset repeats qubit {q}"
                        )));
                    }
                    seen[q] = true;
                }
                if 2 * v.len() > n {
                    return Err(AppError::Config(format!(
                        "diagnostics.entropy_subset has {} of {n} qubits; the normalizer needs a subset of at most half",
                        v.len()
                    )));
                }
                Ok(Some(v.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthOptions {
    /// Cost at which the evolutionary stage hands off to the polish sweeps.
    pub polish_threshold: f64,
    /// Divide the target by the phase of its largest-magnitude diagonal
    /// entry before fitting; the cost is global-phase sensitive.
    pub phase_align: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions { polish_threshold: DEFAULT_POLISH_THRESHOLD, phase_align: false }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanOptions {
    pub param_index: usize,
    pub n_points: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { param_index: 0, n_points: 64 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub model: ModelConfig,
    #[serde(default)]
    pub ansatz: Option<AnsatzSpec>,
    /// Starting parameters: all zeros (entanglement-free start) or uniform
    /// random angles per agent.
    #[serde(default = "init_zeros")]
    pub init: InitMode,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub synth: SynthOptions,
    #[serde(default)]
    pub scan: ScanOptions,
    /// Output directory; `--out` wins when both are given.
    #[serde(default)]
    pub out: Option<String>,
}

fn init_zeros() -> InitMode {
    InitMode::Zeros
}

/// Reads and strictly parses a config file. Returns the typed config plus
/// the raw JSON for echoing into summaries.
pub fn load(path: &Path) -> AppResult<(RunConfig, Value)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let raw: Value = serde_json::from_str(&text)
        .map_err(|e| AppError::Config(format!("config is not valid JSON: {e}")))?;
    let cfg: RunConfig =
        serde_json::from_value(raw.clone()).map_err(|e| AppError::Config(e.to_string()))?;
    Ok((cfg, raw))
}

impl RunConfig {
    /// Static checks: subcommand agreement, mode/model compatibility, ansatz
    /// presence and size, diagnostics and scan bounds, optimizer sanity.
    pub fn validate(&self, invoked: Mode) -> AppResult<()> {
        if self.mode != invoked {
            return Err(AppError::Config(format!(
                "config mode \"{}\" does not match the {} subcommand",
                self.mode.name(),
                invoked.name()
            )));
        }
        match (self.mode, &self.model) {
            (Mode::Synth, ModelConfig::TargetFile(_)) => {}
            (Mode::Synth, other) => {
                return Err(AppError::Config(format!(
                    "synth needs a model of kind target_file, got {}",
                    other.kind_name()
                )));
            }
            (_, ModelConfig::TargetFile(_)) => {
                return Err(AppError::Config(format!(
                    "model kind target_file is only valid in synth mode, not {}",
                    self.mode.name()
                )));
            }
            _ => {}
        }
        let needs_ansatz = matches!(self.mode, Mode::Vqe | Mode::Synth | Mode::Scan);
        if needs_ansatz && self.ansatz.is_none() {
            return Err(AppError::Config(format!(
                "{} mode requires an ansatz section",
                self.mode.name()
            )));
        }
        if let Some(a) = &self.ansatz {
            if a.n_qubits == 0 || a.layers == 0 {
                return Err(AppError::Config(
                    "ansatz needs at least one qubit and one layer".into(),
                ));
            }
            if let Some(n) = self.model.n_qubits() {
                if a.n_qubits != n {
                    return Err(AppError::Config(format!(
                        "ansatz spans {} qubits but the model has {n}",
                        a.n_qubits
                    )));
                }
            }
        }
        if self.diagnostics.record_every == 0 {
            return Err(AppError::Config("diagnostics.record_every must be at least 1".into()));
        }
        if matches!(self.mode, Mode::Vqe | Mode::Synth) {
            // Order and seed are irrelevant to these checks.
            self.optimizer
                .to_evolution(LandscapeOrder::Three, self.init, self.optimizer.master_seed)
                .validate()
                .map_err(|e| AppError::Config(e.to_string()))?;
        }
        if self.mode == Mode::Scan {
            if self.scan.n_points == 0 {
                return Err(AppError::Config("scan.n_points must be at least 1".into()));
            }
            let n_params = self.ansatz.as_ref().map(AnsatzSpec::n_params).unwrap_or(0);
            if self.scan.param_index >= n_params {
                return Err(AppError::Config(format!(
                    "scan.param_index {} out of range for {n_params} ansatz parameters",
                    self.scan.param_index
                )));
            }
        }
        Ok(())
    }
}
