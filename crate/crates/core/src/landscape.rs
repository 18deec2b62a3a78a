//! Single-parameter landscape reconstruction and the descent step built on it.
//!
//! For the gate set in this crate, freezing all parameters but one makes the
//! cost an exact short Fourier series in that parameter: rotation angles enter
//! only at frequency 2, controlled-rotation angles add a frequency-1 part.
//! Two or four extra evaluations therefore recover the whole cross-section,
//! its exact minimizer replaces a gradient, and a handful of coordinates at a
//! time yields a search direction for an inexact line search.

use crate::sim::{canonical_angle, run_circuit_mut, Circuit, EvalCounter, GateKind,
                 ParameterVector, StateVector};
use crate::pauli::Hamiltonian;
use crate::{Error, Result};
use rand::Rng;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

/// How many samples pin down a cross-section: 3 for pure rotations,
/// 5 when a frequency-1 component is present. Serializes as the plain
/// integer 3 or 5.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LandscapeOrder {
    Three,
    Five,
}

impl serde::Serialize for LandscapeOrder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(match self {
            LandscapeOrder::Three => 3,
            LandscapeOrder::Five => 5,
        })
    }
}

impl<'de> serde::Deserialize<'de> for LandscapeOrder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match u8::deserialize(d)? {
            3 => Ok(LandscapeOrder::Three),
            5 => Ok(LandscapeOrder::Five),
            other => Err(serde::de::Error::custom(format!(
                "landscape order must be 3 or 5, got {other}"
            ))),
        }
    }
}

impl LandscapeOrder {
    /// Fresh evaluations per coordinate fit; the base point is reused.
    pub fn new_samples_per_fit(self) -> u64 {
        match self {
            LandscapeOrder::Three => 2,
            LandscapeOrder::Five => 4,
        }
    }
}

/// Cross-sections containing a parametric controlled rotation need the
/// 5-sample form; pure RotZ/RotY circuits settle for 3.
pub fn order_for_circuit(circuit: &Circuit) -> LandscapeOrder {
    if circuit.gates().iter().any(|g| g.kind == GateKind::Cry) {
        LandscapeOrder::Five
    } else {
        LandscapeOrder::Three
    }
}

/// Real-valued objective over parameter vectors.
///
/// Implementations must be deterministic (equal inputs, equal outputs), safe
/// to evaluate concurrently, and must bump the shared counter exactly once
/// per `evaluate` call; all evaluation accounting in this crate audits that
/// counter.
pub trait CostFunction: Sync {
    fn n_params(&self) -> usize;
    fn order(&self) -> LandscapeOrder;
    fn evaluate(&self, params: &ParameterVector) -> Result<f64>;
    fn counter(&self) -> &EvalCounter;
}

/// Energy of a parameterized state against a fixed Hamiltonian, evaluated
/// from the all-zero computational state.
pub struct VqeCost {
    circuit: Circuit,
    hamiltonian: Hamiltonian,
    counter: EvalCounter,
    order: LandscapeOrder,
}

impl VqeCost {
    pub fn new(circuit: Circuit, hamiltonian: Hamiltonian) -> Result<Self> {
        if circuit.n_qubits() != hamiltonian.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: circuit.n_qubits(),
                got: hamiltonian.n_qubits(),
            });
        }
        let order = order_for_circuit(&circuit);
        Ok(VqeCost { circuit, hamiltonian, counter: EvalCounter::new(), order })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    /// The prepared state itself, for diagnostics; does not touch the counter.
    pub fn state(&self, params: &ParameterVector) -> Result<StateVector> {
        let mut s = StateVector::zero_state(self.circuit.n_qubits());
        run_circuit_mut(&self.circuit, params, &mut s)?;
        Ok(s)
    }
}

impl CostFunction for VqeCost {
    fn n_params(&self) -> usize {
        self.circuit.n_params()
    }

    fn order(&self) -> LandscapeOrder {
        self.order
    }

    fn evaluate(&self, params: &ParameterVector) -> Result<f64> {
        let mut s = StateVector::zero_state(self.circuit.n_qubits());
        run_circuit_mut(&self.circuit, params, &mut s)?;
        crate::sim::expectation(&s, &self.hamiltonian, &self.counter)
    }

    fn counter(&self) -> &EvalCounter {
        &self.counter
    }
}

/// Closure-backed cost, mostly for custom objectives and tests.
pub struct FnCost<F> {
    n_params: usize,
    order: LandscapeOrder,
    f: F,
    counter: EvalCounter,
}

impl<F: Fn(&ParameterVector) -> f64 + Sync> FnCost<F> {
    pub fn new(n_params: usize, order: LandscapeOrder, f: F) -> Self {
        FnCost { n_params, order, f, counter: EvalCounter::new() }
    }
}

impl<F: Fn(&ParameterVector) -> f64 + Sync> CostFunction for FnCost<F> {
    fn n_params(&self) -> usize {
        self.n_params
    }

    fn order(&self) -> LandscapeOrder {
        self.order
    }

    fn evaluate(&self, params: &ParameterVector) -> Result<f64> {
        self.counter.increment();
        Ok((self.f)(params))
    }

    fn counter(&self) -> &EvalCounter {
        &self.counter
    }
}

/// kappa * sin(2p + xi) + c with kappa >= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid3 {
    pub kappa: f64,
    pub xi: f64,
    pub c: f64,
}

impl Sinusoid3 {
    pub fn value(&self, p: f64) -> f64 {
        self.kappa * (2.0 * p + self.xi).sin() + self.c
    }
}

/// kappa * sin(2p + xi) + gamma * sin(p + phi) + c with both amplitudes >= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid5 {
    pub kappa: f64,
    pub xi: f64,
    pub gamma: f64,
    pub phi: f64,
    pub c: f64,
}

impl Sinusoid5 {
    pub fn value(&self, p: f64) -> f64 {
        self.kappa * (2.0 * p + self.xi).sin() + self.gamma * (p + self.phi).sin() + self.c
    }

    pub fn derivative(&self, p: f64) -> f64 {
        2.0 * self.kappa * (2.0 * p + self.xi).cos() + self.gamma * (p + self.phi).cos()
    }

    pub fn second_derivative(&self, p: f64) -> f64 {
        -4.0 * self.kappa * (2.0 * p + self.xi).sin() - self.gamma * (p + self.phi).sin()
    }
}

fn sample_at_offset<C: CostFunction + ?Sized>(
    f: &C,
    params: &ParameterVector,
    i: usize,
    offset: f64,
) -> Result<f64> {
    let mut shifted = params.clone();
    shifted.set(i, params.get(i) + offset);
    f.evaluate(&shifted)
}

/// Recovers the frequency-2 cross-section of coordinate `i` from the known
/// base value plus two fresh samples at offsets pi/4 and pi/2; those offsets
/// decouple offset, in-phase, and quadrature parts in closed form.
pub fn fit3<C: CostFunction + ?Sized>(
    f: &C,
    params: &ParameterVector,
    i: usize,
    f0: f64,
) -> Result<Sinusoid3> {
    if i >= f.n_params() {
        return Err(Error::ParamOutOfRange { index: i, n_params: f.n_params() });
    }
    let theta = params.get(i);
    let y0 = f0;
    let y1 = sample_at_offset(f, params, i, FRAC_PI_4)?;
    let y2 = sample_at_offset(f, params, i, FRAC_PI_2)?;
    let c = 0.5 * (y0 + y2);
    let k_sin = y0 - c;
    let k_cos = y1 - c;
    let kappa = k_sin.hypot(k_cos);
    let xi = if kappa == 0.0 { 0.0 } else { canonical_angle(k_sin.atan2(k_cos) - 2.0 * theta) };
    Ok(Sinusoid3 { kappa, xi, c })
}

/// Circular distance on [0, 2pi).
fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Exact minimizer of a frequency-2 sinusoid: of the two minima per period,
/// the one circularly nearest `current`; flat models and exact ties return
/// `current` itself.
pub fn argmin3(model: &Sinusoid3, current: f64) -> f64 {
    if model.kappa == 0.0 {
        return current;
    }
    let current = canonical_angle(current);
    let p0 = canonical_angle((1.5 * PI - model.xi) / 2.0);
    let p1 = canonical_angle(p0 + PI);
    let d0 = circ_dist(p0, current);
    let d1 = circ_dist(p1, current);
    if d0 < d1 {
        p0
    } else if d1 < d0 {
        p1
    } else {
        current
    }
}

/// Recovers the two-frequency cross-section from the base value plus four
/// samples at offsets 2pi k/5. On five equidistant points the discrete
/// Fourier transform inverts frequencies {0, +-1, +-2} exactly.
pub fn fit5<C: CostFunction + ?Sized>(
    f: &C,
    params: &ParameterVector,
    i: usize,
    f0: f64,
) -> Result<Sinusoid5> {
    if i >= f.n_params() {
        return Err(Error::ParamOutOfRange { index: i, n_params: f.n_params() });
    }
    let theta = params.get(i);
    let mut y = [f0; 5];
    for (k, slot) in y.iter_mut().enumerate().skip(1) {
        *slot = sample_at_offset(f, params, i, TAU * k as f64 / 5.0)?;
    }
    // b_m = (1/5) sum_k y_k e^{-i m delta_k} = c_m e^{i m theta}, where the
    // cross-section is sum_m c_m e^{i m p} with c_{-m} = conj(c_m)
    let coeff = |m: f64| -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, &yk) in y.iter().enumerate() {
            let ang = -m * (TAU * k as f64 / 5.0 + theta);
            re += yk * ang.cos();
            im += yk * ang.sin();
        }
        (re / 5.0, im / 5.0)
    };
    let (c0re, _) = coeff(0.0);
    let (c1re, c1im) = coeff(1.0);
    let (c2re, c2im) = coeff(2.0);
    // kappa sin(2p + xi) contributes c_2 = kappa e^{i xi} / (2i)
    let kappa = 2.0 * c2re.hypot(c2im);
    let xi = if kappa == 0.0 { 0.0 } else { canonical_angle(c2re.atan2(-c2im)) };
    let gamma = 2.0 * c1re.hypot(c1im);
    let phi = if gamma == 0.0 { 0.0 } else { canonical_angle(c1re.atan2(-c1im)) };
    Ok(Sinusoid5 { kappa, xi, gamma, phi, c: c0re })
}

/// Newton tolerance on the derivative at a refined minimum.
const ARGMIN5_DERIV_TOL: f64 = 1e-12;
const ARGMIN5_GRID: usize = 64;

/// Global minimizer of a two-frequency model: a 64-point grid locates the
/// basins, Newton sharpens each, the best value wins with nearest-to-current
/// as the tie-break. Also reports whether every kept candidate met the
/// Newton tolerance; on failure the affected basin falls back to its grid
/// point, which is still a valid (coarser) minimizer estimate.
pub fn argmin5_with_diagnostics(model: &Sinusoid5, current: f64) -> (f64, bool) {
    if model.kappa == 0.0 && model.gamma == 0.0 {
        return (canonical_angle(current), true);
    }
    let current = canonical_angle(current);
    let step = TAU / ARGMIN5_GRID as f64;
    let grid: Vec<f64> = (0..ARGMIN5_GRID).map(|j| model.value(j as f64 * step)).collect();
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    let mut all_converged = true;
    for j in 0..ARGMIN5_GRID {
        let prev = grid[(j + ARGMIN5_GRID - 1) % ARGMIN5_GRID];
        let next = grid[(j + 1) % ARGMIN5_GRID];
        if grid[j] > prev || grid[j] > next {
            continue;
        }
        let start = j as f64 * step;
        let mut p = start;
        let mut converged = false;
        for _ in 0..64 {
            let g1 = model.derivative(p);
            if g1.abs() < ARGMIN5_DERIV_TOL {
                converged = model.second_derivative(p) >= 0.0;
                break;
            }
            let g2 = model.second_derivative(p);
            if g2 <= 0.0 {
                break;
            }
            let dp = (-g1 / g2).clamp(-step, step);
            p = canonical_angle(p + dp);
        }
        if converged {
            candidates.push((p, model.value(p)));
        } else {
            all_converged = false;
            candidates.push((start, grid[j]));
        }
    }
    let best = candidates
        .into_iter()
        .min_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then(circ_dist(a.0, current).total_cmp(&circ_dist(b.0, current)))
                .then(a.0.total_cmp(&b.0))
        })
        .map(|(p, _)| p)
        .unwrap_or(current);
    (best, all_converged)
}

pub fn argmin5(model: &Sinusoid5, current: f64) -> f64 {
    argmin5_with_diagnostics(model, current).0
}

/// Displacement toward the per-coordinate minimizers on the chosen subset;
/// zero everywhere else.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchDirection {
    d: Vec<f64>,
    support: Vec<usize>,
}

impl SearchDirection {
    pub fn displacement(&self) -> &[f64] {
        &self.d
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// True when every supported component is exactly zero, meaning each
    /// sampled coordinate already sits at its cross-section minimum.
    pub fn is_zero(&self) -> bool {
        self.support.iter().all(|&i| self.d[i] == 0.0)
    }
}

/// Fits and minimizes each coordinate of `subset` independently at the frozen
/// base point; component i moves by (minimizer - current value). Costs
/// exactly 2 (order 3) or 4 (order 5) evaluations per coordinate.
pub fn search_direction<C: CostFunction + ?Sized>(
    f: &C,
    params: &ParameterVector,
    subset: &[usize],
    f0: f64,
) -> Result<SearchDirection> {
    if subset.is_empty() {
        return Err(Error::InvalidConfig("empty coordinate subset".into()));
    }
    let mut seen = vec![false; f.n_params()];
    for &i in subset {
        if i >= f.n_params() {
            return Err(Error::ParamOutOfRange { index: i, n_params: f.n_params() });
        }
        if seen[i] {
            return Err(Error::InvalidConfig(format!("duplicate coordinate {i}")));
        }
        seen[i] = true;
    }
    let mut d = vec![0.0; f.n_params()];
    for &i in subset {
        let theta = params.get(i);
        let best = match f.order() {
            LandscapeOrder::Three => argmin3(&fit3(f, params, i, f0)?, theta),
            LandscapeOrder::Five => argmin5(&fit5(f, params, i, f0)?, theta),
        };
        d[i] = best - theta;
    }
    Ok(SearchDirection { d, support: subset.to_vec() })
}

#[derive(Debug, Clone)]
pub struct LineSearchResult {
    pub t_best: f64,
    pub params: ParameterVector,
    pub cost: f64,
    pub evaluations: u64,
}

/// Samples the segment params + t*d at S equidistant t in [0, 1] and keeps
/// the strict minimum. t = 0 reuses f0 and wins all ties, so the result
/// never costs more than the starting point and an already-minimal start
/// returns bit-identical parameters.
pub fn line_search<C: CostFunction + ?Sized>(
    f: &C,
    params: &ParameterVector,
    direction: &SearchDirection,
    n_samples: usize,
    f0: f64,
) -> Result<LineSearchResult> {
    if n_samples < 2 {
        return Err(Error::InvalidConfig(format!("line search needs >= 2 samples, got {n_samples}")));
    }
    if direction.d.len() != params.len() {
        return Err(Error::DimensionMismatch { expected: params.len(), got: direction.d.len() });
    }
    let mut best_t = 0.0;
    let mut best_params = params.clone();
    let mut best_cost = f0;
    let denom = (n_samples - 1) as f64;
    for k in 1..n_samples {
        let t = k as f64 / denom;
        let mut cand = params.clone();
        for &i in &direction.support {
            cand.set(i, params.get(i) + t * direction.d[i]);
        }
        let cost = f.evaluate(&cand)?;
        if cost < best_cost {
            best_t = t;
            best_params = cand;
            best_cost = cost;
        }
    }
    Ok(LineSearchResult {
        t_best: best_t,
        params: best_params,
        cost: best_cost,
        evaluations: (n_samples - 1) as u64,
    })
}

/// Zero-direction subsets are redrawn this many times before the step
/// declares convergence.
pub const ZERO_DIRECTION_RESAMPLE_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterateConfig {
    pub subset_size: usize,
    pub line_samples: usize,
}

#[derive(Debug, Clone)]
pub struct IterateStep {
    pub params: ParameterVector,
    pub cost: f64,
    pub evaluations: u64,
    pub converged: bool,
}

/// One optimizer step: draw a uniform coordinate subset without replacement,
/// build the search direction, line-search along it. The cost never
/// increases. `f0` must be the cost at `params`; the returned cost plays the
/// same role for the next call. Reports its own evaluation count so callers
/// can budget without reading the shared counter mid-flight.
pub fn iterate<C: CostFunction + ?Sized, R: Rng>(
    f: &C,
    params: &ParameterVector,
    f0: f64,
    cfg: &IterateConfig,
    rng: &mut R,
) -> Result<IterateStep> {
    let l = f.n_params();
    if l == 0 {
        return Ok(IterateStep { params: params.clone(), cost: f0, evaluations: 0, converged: true });
    }
    if cfg.subset_size == 0 {
        return Err(Error::InvalidConfig("subset size must be positive".into()));
    }
    let m = cfg.subset_size.min(l);
    let per_direction = f.order().new_samples_per_fit() * m as u64;
    let mut evaluations = 0u64;
    for _ in 0..ZERO_DIRECTION_RESAMPLE_CAP {
        let subset = rand::seq::index::sample(rng, l, m).into_vec();
        let direction = search_direction(f, params, &subset, f0)?;
        evaluations += per_direction;
        if direction.is_zero() {
            continue;
        }
        let ls = line_search(f, params, &direction, cfg.line_samples, f0)?;
        evaluations += ls.evaluations;
        return Ok(IterateStep {
            params: ls.params,
            cost: ls.cost,
            evaluations,
            converged: false,
        });
    }
    Ok(IterateStep { params: params.clone(), cost: f0, evaluations, converged: true })
}

/// Dense cross-section of coordinate `i`: n_points absolute angles uniform
/// over [0, 2pi) with their costs. Each point is a counted evaluation.
pub fn scan<C: CostFunction + ?Sized>(
    f: &C,
    params: &ParameterVector,
    i: usize,
    n_points: usize,
) -> Result<Vec<(f64, f64)>> {
    if i >= f.n_params() {
        return Err(Error::ParamOutOfRange { index: i, n_params: f.n_params() });
    }
    let mut out = Vec::with_capacity(n_points);
    for j in 0..n_points {
        let theta = TAU * j as f64 / n_points as f64;
        let mut p = params.clone();
        p.set(i, theta);
        out.push((theta, f.evaluate(&p)?));
    }
    Ok(out)
}

/// `theta,energy` CSV with a header, one row per scan point.
pub fn scan_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("theta,energy\n");
    for (theta, energy) in points {
        out.push_str(&format!("{theta:.17e},{energy:.17e}\n"));
    }
    out
}
