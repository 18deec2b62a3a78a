//! Matrix-free statevector simulation.
//!
//! Amplitude `i` of a state holds the coefficient of the computational basis
//! state whose qubit `q` equals bit `q` of `i` (qubit 0 is the least
//! significant bit). Gates act in place through bit-masked strides; nothing
//! ever materializes a full unitary here.
//!
//! Gate semantics, written as matrices on the target qubit:
//!
//! ```text
//! RotZ(t) = [[1, 0], [0, e^{2it}]]
//! RotY(t) = e^{it} · [[cos t, −sin t], [sin t, cos t]]
//! CNOT    = flip target where control = 1
//! CRY(t)  = apply [[cos t, −sin t], [sin t, cos t]] on target where control = 1
//! ```
//!
//! Angles deliberately enter *without* the conventional halving: a full 2π
//! sweep of any parameter returns the operator to itself, and every cost
//! cross-section becomes a pure frequency-2 sinusoid (plus a frequency-1
//! component for CRY), which the three- and five-point reconstructions rely
//! on. The phase factors on RotZ/RotY keep that structure intact even for
//! costs that are linear in the circuit unitary, and give circuits access to
//! every global phase.

use crate::pauli::Hamiltonian;
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub const MAX_QUBITS: usize = 26;

/// Wraps an angle into [0, 2π).
pub fn canonical_angle(v: f64) -> f64 {
    let w = v.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    RotZ,
    RotY,
    Cnot,
    Cry,
}

impl GateKind {
    pub fn is_parametric(self) -> bool {
        !matches!(self, GateKind::Cnot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub param_index: Option<usize>,
}

impl Gate {
    pub fn rot_z(target: usize, param_index: usize) -> Self {
        Gate { kind: GateKind::RotZ, target, control: None, param_index: Some(param_index) }
    }

    pub fn rot_y(target: usize, param_index: usize) -> Self {
        Gate { kind: GateKind::RotY, target, control: None, param_index: Some(param_index) }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate { kind: GateKind::Cnot, target, control: Some(control), param_index: None }
    }

    pub fn cry(control: usize, target: usize, param_index: usize) -> Self {
        Gate { kind: GateKind::Cry, target, control: Some(control), param_index: Some(param_index) }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.target >= n_qubits {
            return Err(Error::QubitOutOfRange { qubit: self.target, n_qubits });
        }
        if let Some(c) = self.control {
            if c >= n_qubits {
                return Err(Error::QubitOutOfRange { qubit: c, n_qubits });
            }
            if c == self.target {
                return Err(Error::ControlEqualsTarget(c));
            }
        }
        match (self.kind, self.control.is_some(), self.param_index.is_some()) {
            (GateKind::RotZ | GateKind::RotY, false, true) => Ok(()),
            (GateKind::Cnot, true, false) => Ok(()),
            (GateKind::Cry, true, true) => Ok(()),
            _ => Err(Error::InvalidCircuit(format!("malformed gate {self:?}"))),
        }
    }
}

/// An ordered gate list over a fixed register. Every `param_index` in
/// `[0, n_params)` is referenced by exactly one gate; parameter sharing is
/// out of scope.
#[derive(Debug, Clone)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    n_params: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits { n_qubits, max: MAX_QUBITS });
        }
        let n_params = gates.iter().filter_map(|g| g.param_index).count();
        let mut seen = vec![false; n_params];
        for gate in &gates {
            gate.validate(n_qubits)?;
            if let Some(idx) = gate.param_index {
                if idx >= n_params {
                    return Err(Error::InvalidCircuit(format!(
                        "param_index {idx} outside 0..{n_params}"
                    )));
                }
                if seen[idx] {
                    return Err(Error::InvalidCircuit(format!("param_index {idx} used twice")));
                }
                seen[idx] = true;
            }
        }
        Ok(Circuit { n_qubits, gates, n_params })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind == GateKind::Cnot).count()
    }
}

/// Angles in radians, one per circuit parameter, each kept in [0, 2π).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParameterVector { values: values.into_iter().map(canonical_angle).collect() }
    }

    pub fn zeros(len: usize) -> Self {
        ParameterVector { values: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        self.values[i] = canonical_angle(v);
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩ on `n_qubits`.
    pub fn zero_state(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1 && n_qubits <= MAX_QUBITS, "unsupported qubit count {n_qubits}");
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        StateVector { n_qubits, amplitudes }
    }

    /// A single computational basis state.
    pub fn basis_state(n_qubits: usize, index: usize) -> Self {
        let mut s = Self::zero_state(n_qubits);
        s.amplitudes[0] = Complex64::new(0.0, 0.0);
        s.amplitudes[index] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                got: amplitudes.len(),
            });
        }
        Ok(StateVector { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                got: other.amplitudes.len(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Applies one gate in place. `angle` must be given exactly for
    /// parametric kinds.
    pub fn apply_gate(&mut self, gate: &Gate, angle: Option<f64>) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match (gate.kind.is_parametric(), angle) {
            (true, None) => return Err(Error::MissingAngle),
            (false, Some(_)) => return Err(Error::UnexpectedAngle),
            _ => {}
        }
        match gate.kind {
            GateKind::RotZ => self.rot_z(gate.target, angle.unwrap()),
            GateKind::RotY => self.rot_y(gate.target, angle.unwrap()),
            GateKind::Cnot => self.cnot(gate.control.unwrap(), gate.target),
            GateKind::Cry => self.cry(gate.control.unwrap(), gate.target, angle.unwrap()),
        }
        Ok(())
    }

    fn rot_z(&mut self, target: usize, theta: f64) {
        let factor = Complex64::from_polar(1.0, 2.0 * theta);
        let step = 1 << target;
        let len = self.amplitudes.len();
        for base in (0..len).step_by(2 * step) {
            for j in base + step..base + 2 * step {
                self.amplitudes[j] *= factor;
            }
        }
    }

    fn rot_y(&mut self, target: usize, theta: f64) {
        let phase = Complex64::from_polar(1.0, theta);
        let (s, c) = theta.sin_cos();
        let step = 1 << target;
        let len = self.amplitudes.len();
        for base in (0..len).step_by(2 * step) {
            for j in base..base + step {
                let k = j + step;
                let a = self.amplitudes[j];
                let b = self.amplitudes[k];
                self.amplitudes[j] = phase * (c * a - s * b);
                self.amplitudes[k] = phase * (s * a + c * b);
            }
        }
    }

    fn cnot(&mut self, control: usize, target: usize) {
        let cbit = 1 << control;
        let tbit = 1 << target;
        for i in 0..self.amplitudes.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amplitudes.swap(i, i | tbit);
            }
        }
    }

    fn cry(&mut self, control: usize, target: usize, theta: f64) {
        let (s, c) = theta.sin_cos();
        let cbit = 1 << control;
        let tbit = 1 << target;
        for i in 0..self.amplitudes.len() {
            if i & cbit != 0 && i & tbit == 0 {
                let k = i | tbit;
                let a = self.amplitudes[i];
                let b = self.amplitudes[k];
                self.amplitudes[i] = c * a - s * b;
                self.amplitudes[k] = s * a + c * b;
            }
        }
    }
}

/// Runs all gates of `circuit` in sequence order on `state`, in place.
pub fn run_circuit_mut(
    circuit: &Circuit,
    params: &ParameterVector,
    state: &mut StateVector,
) -> Result<()> {
    if params.len() != circuit.n_params {
        return Err(Error::DimensionMismatch { expected: circuit.n_params, got: params.len() });
    }
    if state.n_qubits != circuit.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: 1 << circuit.n_qubits,
            got: state.amplitudes.len(),
        });
    }
    for gate in &circuit.gates {
        let angle = gate.param_index.map(|i| params.get(i));
        state.apply_gate(gate, angle)?;
    }
    Ok(())
}

pub fn run_circuit(
    circuit: &Circuit,
    params: &ParameterVector,
    initial: &StateVector,
) -> Result<StateVector> {
    let mut state = initial.clone();
    run_circuit_mut(circuit, params, &mut state)?;
    Ok(state)
}

/// Shared monotone count of cost-function evaluations. Cloning shares the
/// underlying counter; `expectation` bumps it once per call and every cost
/// implementation routes its accounting through one of these.
#[derive(Debug, Clone, Default)]
pub struct EvalCounter(Arc<AtomicU64>);

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn increment(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// ⟨Ψ|H|Ψ⟩ = Σ_α w_α ⟨Ψ|P_α|Ψ⟩, term by term without materializing P_α|Ψ⟩.
/// Counts as one evaluation on `counter`.
pub fn expectation(state: &StateVector, h: &Hamiltonian, counter: &EvalCounter) -> Result<f64> {
    if h.n_qubits() != state.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: 1 << h.n_qubits(),
            got: state.amplitudes.len(),
        });
    }
    counter.increment();
    let amps = &state.amplitudes;
    let mut total = Complex64::new(0.0, 0.0);
    for term in h.terms() {
        let x = term.string().x_mask() as usize;
        let z = term.string().z_mask();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &a) in amps.iter().enumerate() {
            let v = amps[i ^ x].conj() * a;
            if (i as u64 & z).count_ones() & 1 == 1 {
                acc -= v;
            } else {
                acc += v;
            }
        }
        total += term.weight() * term.string().y_phase() * acc;
    }
    debug_assert!(total.im.abs() < 1e-10, "non-real expectation {total}");
    Ok(total.re)
}
