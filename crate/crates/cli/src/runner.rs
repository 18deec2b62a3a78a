//! Executes a validated configuration and writes the run's artifacts.
//!
//! Artifact set by mode:
//! - vqe:   trace.csv, summary.json, best_circuit.qasm, graph.edges (graph models)
//! - synth: trace.csv, summary.json, best_circuit.qasm
//! - eig:   summary.json, graph.edges (graph models)
//! - scan:  scan.csv, summary.json, graph.edges (graph models)
//!
//! Summaries never contain wall-clock times; identical config and seed must
//! give identical bytes. Timing goes to stderr.

use crate::config::{self, GraphConfig, HeisenbergModel, Mode, ModelConfig, RunConfig};
use crate::{AppError, AppResult};
use qevo::ansatz::{build_ansatz, export_qasm};
use qevo::diagnostics::{ground_space, overlap, page_entropy, renyi2, GroundSpace};
use qevo::evolve::{self, ProbeSample, StopReason, TraceProbe, TraceRecord};
use qevo::landscape::{order_for_circuit, scan, scan_csv, VqeCost};
use qevo::models::{build_heisenberg, build_syk, random_regular_graph, HeisenbergSpec, RegularGraph, SykSpec};
use qevo::pauli::Hamiltonian;
use qevo::sim::ParameterVector;
use qevo::synth::{load_target, synthesize};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Overlap tracking needs an exact ground space; past this size the solve is
/// not worth hiding behind a diagnostics flag.
pub const MAX_OVERLAP_QUBITS: usize = 16;

pub struct Invocation {
    pub mode: Mode,
    pub config_path: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Engine errors that blame the configured run exit 2; failures of the
/// machinery underneath (I/O, file contents, non-convergence) exit 1.
fn classify(e: qevo::Error) -> AppError {
    use qevo::Error as E;
    match e {
        E::InvalidConfig(_)
        | E::InvalidCircuit(_)
        | E::TooManyQubits { .. }
        | E::SubsetTooLarge { .. }
        | E::InfeasibleGraph(_)
        | E::ParamOutOfRange { .. }
        | E::DimensionMismatch { .. } => AppError::Config(e.to_string()),
        other => AppError::Runtime(other.to_string()),
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    raw: &'a Value,
    out: &'a Path,
    seed: u64,
}

pub fn execute(inv: &Invocation) -> AppResult<()> {
    let (cfg, raw) = config::load(&inv.config_path)?;
    cfg.validate(inv.mode)?;
    if let Some(t) = inv.threads {
        if t == 0 {
            return Err(AppError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| AppError::Runtime(format!("thread pool setup failed: {e}")))?;
    }
    let out_dir = inv
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir).map_err(|e| {
        AppError::Runtime(format!("cannot create output directory {}: {e}", out_dir.display()))
    })?;
    let seed = inv.seed.unwrap_or(cfg.optimizer.master_seed);
    let ctx = Ctx { cfg: &cfg, raw: &raw, out: &out_dir, seed };
    match cfg.mode {
        Mode::Vqe => run_vqe(&ctx),
        Mode::Synth => run_synth(&ctx),
        Mode::Eig => run_eig(&ctx),
        Mode::Scan => run_scan(&ctx),
    }
}

struct BuiltModel {
    hamiltonian: Hamiltonian,
    graph: Option<RegularGraph>,
}

fn build_graph(m: &HeisenbergModel) -> AppResult<RegularGraph> {
    match &m.graph {
        GraphConfig::Ring => RegularGraph::ring(m.n_qubits).map_err(classify),
        GraphConfig::RandomRegular { degree, seed } => {
            random_regular_graph(m.n_qubits, *degree, *seed).map_err(classify)
        }
        GraphConfig::Edges { list } => {
            RegularGraph::from_edges(m.n_qubits, list.clone()).map_err(classify)
        }
    }
}

fn build_model(model: &ModelConfig) -> AppResult<BuiltModel> {
    match model {
        ModelConfig::Heisenberg(m) => {
            let graph = build_graph(m)?;
            let spec = HeisenbergSpec::new(graph.clone(), m.j, m.h_z);
            let hamiltonian = build_heisenberg(&spec).map_err(classify)?;
            Ok(BuiltModel { hamiltonian, graph: Some(graph) })
        }
        ModelConfig::Syk(m) => {
            let spec = SykSpec { n_qubits: m.n_qubits, j: m.j, seed: m.seed };
            let hamiltonian = build_syk(&spec).map_err(classify)?;
            Ok(BuiltModel { hamiltonian, graph: None })
        }
        ModelConfig::HamiltonianFile(f) => {
            let text = std::fs::read_to_string(&f.path)
                .map_err(|e| AppError::Runtime(format!("cannot read model file {}: {e}", f.path)))?;
            let hamiltonian = Hamiltonian::parse_text(&text).map_err(classify)?;
            Ok(BuiltModel { hamiltonian, graph: None })
        }
        ModelConfig::TargetFile(_) => {
            Err(AppError::Config("target_file model has no Hamiltonian".into()))
        }
    }
}

/// Measures the trace diagnostics on the state the circuit prepares:
/// subset entropy over its Page value, and ground-space overlap when a
/// solved ground space is attached. Internal failure records NaN rather
/// than poisoning the run.
struct VqeProbe<'a> {
    cost: &'a VqeCost,
    /// Subset qubits with their Page normalizer.
    subset: Option<(Vec<usize>, f64)>,
    ground: Option<&'a GroundSpace>,
}

impl VqeProbe<'_> {
    fn sample(&self, params: &ParameterVector) -> Result<ProbeSample, qevo::Error> {
        let state = self.cost.state(params)?;
        let s2_normalized = match &self.subset {
            Some((qubits, page)) => renyi2(&state, qubits)? / page,
            None => f64::NAN,
        };
        let overlap_value = match self.ground {
            Some(gs) => Some(overlap(&state, gs)?),
            None => None,
        };
        Ok(ProbeSample { s2_normalized, overlap: overlap_value })
    }
}

impl TraceProbe for VqeProbe<'_> {
    fn measure(&self, params: &ParameterVector) -> ProbeSample {
        self.sample(params)
            .unwrap_or(ProbeSample { s2_normalized: f64::NAN, overlap: None })
    }
}

fn reason_name(r: StopReason) -> &'static str {
    match r {
        StopReason::BudgetExhausted => "budget_exhausted",
        StopReason::TargetReached => "target_reached",
        StopReason::Stalled => "stalled",
    }
}

fn run_vqe(ctx: &Ctx) -> AppResult<()> {
    let t0 = Instant::now();
    let model = build_model(&ctx.cfg.model)?;
    let h = &model.hamiltonian;
    let n = h.n_qubits();
    let spec = ctx.cfg.ansatz.as_ref().expect("validated: vqe has an ansatz");
    if spec.n_qubits != n {
        return Err(AppError::Config(format!(
            "ansatz spans {} qubits but the model has {n}",
            spec.n_qubits
        )));
    }
    let circuit = build_ansatz(spec).map_err(classify)?;
    let evo_cfg =
        ctx.cfg.optimizer.to_evolution(order_for_circuit(&circuit), ctx.cfg.init, ctx.seed);
    let cost = VqeCost::new(circuit.clone(), h.clone()).map_err(classify)?;

    let ground = if ctx.cfg.diagnostics.overlap {
        if n > MAX_OVERLAP_QUBITS {
            return Err(AppError::Config(format!(
                "overlap tracking is capped at {MAX_OVERLAP_QUBITS} qubits, model has {n}"
            )));
        }
        Some(ground_space(h, None).map_err(classify)?)
    } else {
        None
    };
    let subset = match ctx.cfg.diagnostics.effective_subset(n)? {
        Some(qubits) => {
            let page = page_entropy(qubits.len(), n).map_err(classify)?;
            Some((qubits, page))
        }
        None => None,
    };
    let probe = VqeProbe { cost: &cost, subset, ground: ground.as_ref() };

    let result = evolve::run(&cost, &evo_cfg, Some(&probe)).map_err(classify)?;

    write_text(
        &ctx.out.join("trace.csv"),
        &trace_csv(&result.trace, ctx.cfg.diagnostics.record_every),
    )?;
    let best = ParameterVector::new(result.best_params.clone());
    write_text(
        &ctx.out.join("best_circuit.qasm"),
        &export_qasm(&circuit, &best).map_err(classify)?,
    )?;
    if let Some(g) = &model.graph {
        write_text(&ctx.out.join("graph.edges"), &g.to_edge_text())?;
    }

    let mut summary = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "mode": "vqe",
        "master_seed": ctx.seed,
        "n_qubits": n,
        "final_cost": result.best_cost,
        "evaluations": result.evaluations_used,
        "episodes": result.episodes,
        "stop_reason": result.stop_reason,
        "config": ctx.raw,
    });
    if let Some(gs) = &ground {
        summary["e0"] = json!(gs.energy());
        summary["ground_degeneracy"] = json!(gs.degeneracy());
        summary["overlap"] = json!(probe.measure(&best).overlap);
    }
    write_summary(&ctx.out.join("summary.json"), &summary)?;

    eprintln!(
        "vqe: best_cost={:.6e} evaluations={} episodes={} stop={} wall={:.2}s",
        result.best_cost,
        result.evaluations_used,
        result.episodes,
        reason_name(result.stop_reason),
        t0.elapsed().as_secs_f64()
    );
    Ok(())
}

fn run_synth(ctx: &Ctx) -> AppResult<()> {
    let path = match &ctx.cfg.model {
        ModelConfig::TargetFile(f) => Path::new(&f.path),
        _ => return Err(AppError::Config("synth needs a target_file model".into())),
    };
    let mut target = load_target(path).map_err(classify)?;
    if ctx.cfg.synth.phase_align {
        target = target.phase_aligned();
    }
    let spec = ctx.cfg.ansatz.as_ref().expect("validated: synth has an ansatz");
    if spec.n_qubits != target.n_qubits() {
        return Err(AppError::Config(format!(
            "ansatz spans {} qubits but the target has {}",
            spec.n_qubits,
            target.n_qubits()
        )));
    }
    let circuit = build_ansatz(spec).map_err(classify)?;
    let evo_cfg =
        ctx.cfg.optimizer.to_evolution(order_for_circuit(&circuit), ctx.cfg.init, ctx.seed);

    let report =
        synthesize(&target, spec, &evo_cfg, ctx.cfg.synth.polish_threshold).map_err(classify)?;

    write_text(
        &ctx.out.join("trace.csv"),
        &trace_csv(&report.trace, ctx.cfg.diagnostics.record_every),
    )?;
    write_text(
        &ctx.out.join("best_circuit.qasm"),
        &export_qasm(&report.circuit, &report.params).map_err(classify)?,
    )?;

    let summary = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "mode": "synth",
        "master_seed": ctx.seed,
        "n_qubits": target.n_qubits(),
        "final_cost": report.final_cost,
        "cnot_count": report.cnot_count,
        "evaluations": report.evaluations,
        "episodes": report.episodes,
        "polish_sweeps": report.polish_sweeps,
        "polish_threshold": ctx.cfg.synth.polish_threshold,
        "config": ctx.raw,
    });
    write_summary(&ctx.out.join("summary.json"), &summary)?;

    eprintln!(
        "synth: final_cost={:.3e} cnot_count={} evaluations={} polish_sweeps={} wall={:.2}s",
        report.final_cost,
        report.cnot_count,
        report.evaluations,
        report.polish_sweeps,
        report.wall_time_seconds
    );
    Ok(())
}

fn run_eig(ctx: &Ctx) -> AppResult<()> {
    let t0 = Instant::now();
    let model = build_model(&ctx.cfg.model)?;
    let gs = ground_space(&model.hamiltonian, None).map_err(classify)?;
    if let Some(g) = &model.graph {
        write_text(&ctx.out.join("graph.edges"), &g.to_edge_text())?;
    }
    let summary = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "mode": "eig",
        "master_seed": ctx.seed,
        "n_qubits": model.hamiltonian.n_qubits(),
        "e0": gs.energy(),
        "degeneracy": gs.degeneracy(),
        "degeneracy_tol": gs.degeneracy_tol(),
        "config": ctx.raw,
    });
    write_summary(&ctx.out.join("summary.json"), &summary)?;
    eprintln!(
        "eig: e0={:.12e} degeneracy={} wall={:.2}s",
        gs.energy(),
        gs.degeneracy(),
        t0.elapsed().as_secs_f64()
    );
    Ok(())
}

fn run_scan(ctx: &Ctx) -> AppResult<()> {
    let model = build_model(&ctx.cfg.model)?;
    let h = &model.hamiltonian;
    let n = h.n_qubits();
    let spec = ctx.cfg.ansatz.as_ref().expect("validated: scan has an ansatz");
    if spec.n_qubits != n {
        return Err(AppError::Config(format!(
            "ansatz spans {} qubits but the model has {n}",
            spec.n_qubits
        )));
    }
    let circuit = build_ansatz(spec).map_err(classify)?;
    let cost = VqeCost::new(circuit, h.clone()).map_err(classify)?;
    let params =
        evolve::initial_parameters(ctx.seed, 0, cost.circuit().n_params(), ctx.cfg.init);
    let points = scan(&cost, &params, ctx.cfg.scan.param_index, ctx.cfg.scan.n_points)
        .map_err(classify)?;
    write_text(&ctx.out.join("scan.csv"), &scan_csv(&points))?;
    if let Some(g) = &model.graph {
        write_text(&ctx.out.join("graph.edges"), &g.to_edge_text())?;
    }
    let summary = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "mode": "scan",
        "master_seed": ctx.seed,
        "n_qubits": n,
        "param_index": ctx.cfg.scan.param_index,
        "n_points": ctx.cfg.scan.n_points,
        "base_params": params.values(),
        "config": ctx.raw,
    });
    write_summary(&ctx.out.join("summary.json"), &summary)?;
    eprintln!(
        "scan: parameter {} sampled at {} points",
        ctx.cfg.scan.param_index, ctx.cfg.scan.n_points
    );
    Ok(())
}

/// Trace rows, thinned to every k-th episode; the final record always stays
/// so the end state is never lost. NaN entropy prints as NaN; a missing
/// overlap leaves its field empty.
fn trace_csv(trace: &[TraceRecord], record_every: u64) -> String {
    let mut out = String::from("episode,evaluations,best_cost,s2_normalized,overlap\n");
    let last = trace.len().saturating_sub(1);
    for (i, r) in trace.iter().enumerate() {
        if i != last && r.episode % record_every != 0 {
            continue;
        }
        let s2 = if r.s2_normalized.is_nan() {
            "NaN".to_string()
        } else {
            format!("{:.17e}", r.s2_normalized)
        };
        let m = match r.overlap {
            Some(v) => format!("{v:.17e}"),
            None => String::new(),
        };
        out.push_str(&format!(
            "{},{},{:.17e},{},{}\n",
            r.episode, r.evaluations, r.best_cost, s2, m
        ));
    }
    out
}

fn write_text(path: &Path, text: &str) -> AppResult<()> {
    std::fs::write(path, text)
        .map_err(|e| AppError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_summary(path: &Path, v: &Value) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(v)
        .map_err(|e| AppError::Runtime(format!("summary encoding failed: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(episode: u64, evaluations: u64, best_cost: f64) -> TraceRecord {
        TraceRecord {
            episode,
            evaluations,
            best_cost,
            s2_normalized: f64::NAN,
            overlap: None,
        }
    }

    #[test]
    fn trace_rows_format_nan_and_missing_fields() {
        let mut r = record(0, 4, -1.25);
        r.s2_normalized = 0.5;
        r.overlap = Some(0.75);
        let text = trace_csv(&[r], 1);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "episode,evaluations,best_cost,s2_normalized,overlap");
        let row = lines.next().unwrap();
        assert!(row.starts_with("0,4,-1.25"), "{row}");
        assert!(row.contains(",5.00000000000000000e-1,"), "{row}");
        assert!(row.ends_with("7.50000000000000000e-1"), "{row}");

        let text = trace_csv(&[record(0, 4, -1.0)], 1);
        let row = text.lines().nth(1).unwrap();
        assert!(row.contains(",NaN,"), "{row}");
        assert!(row.ends_with(','), "{row}");
    }

    #[test]
    fn record_every_keeps_multiples_and_the_last_row() {
        let trace: Vec<TraceRecord> =
            (0..=7).map(|e| record(e, 4 * (e + 1), -(e as f64))).collect();
        let text = trace_csv(&trace, 3);
        let episodes: Vec<&str> =
            text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(episodes, ["0", "3", "6", "7"]);

        // A final record that already sits on the stride is not duplicated.
        let trace: Vec<TraceRecord> =
            (0..=6).map(|e| record(e, 4 * (e + 1), -(e as f64))).collect();
        let text = trace_csv(&trace, 3);
        let episodes: Vec<&str> =
            text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(episodes, ["0", "3", "6"]);
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert!(matches!(
            classify(qevo::Error::InvalidConfig("x".into())),
            AppError::Config(_)
        ));
        assert!(matches!(
            classify(qevo::Error::TooManyQubits { n_qubits: 9, max: 8 }),
            AppError::Config(_)
        ));
        assert!(matches!(classify(qevo::Error::Parse("x".into())), AppError::Runtime(_)));
        assert!(matches!(
            classify(qevo::Error::Io(std::io::Error::other("x"))),
            AppError::Runtime(_)
        ));
    }
}
