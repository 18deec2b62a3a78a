//! Dense reference implementations for small systems.
//!
//! Everything here is built by a different route than the fast path: explicit
//! 2x2 and 4x4 matrices, Kronecker embeddings, and full 2^n x 2^n products
//! instead of in-place bit kernels. That makes this module exponential in
//! memory and only usable for a handful of qubits, which is the point: tests
//! cross-check the two routes against each other, and callers get a slow but
//! transparent implementation to compare against.

use crate::pauli::{Hamiltonian, PauliOp, PauliString};
use crate::sim::{Circuit, Gate, GateKind, ParameterVector, StateVector};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

type CMatrix = DMatrix<Complex64>;
type CVector = DVector<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity_matrix(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// diag(1, e^{2i theta}).
pub fn rot_z_matrix(theta: f64) -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(1.0, 2.0 * theta)],
    )
}

/// e^{i theta} times the real rotation [[cos, -sin], [sin, cos]].
pub fn rot_y_matrix(theta: f64) -> CMatrix {
    let p = Complex64::from_polar(1.0, theta);
    let (s, co) = theta.sin_cos();
    CMatrix::from_row_slice(2, 2, &[p * co, p * -s, p * s, p * co])
}

/// Basis order |control target> with the control as the high bit.
pub fn cnot_matrix() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(1.0, 0.0);
    m[(2, 3)] = c(1.0, 0.0);
    m[(3, 2)] = c(1.0, 0.0);
    m
}

/// Real rotation on the target, applied only in the control-1 block.
pub fn cry_matrix(theta: f64) -> CMatrix {
    let (s, co) = theta.sin_cos();
    let mut m = identity_matrix(4);
    m[(2, 2)] = c(co, 0.0);
    m[(2, 3)] = c(-s, 0.0);
    m[(3, 2)] = c(s, 0.0);
    m[(3, 3)] = c(co, 0.0);
    m
}

/// Lifts a 2x2 matrix to qubit `q` of an n-qubit register by index algebra:
/// entry ((i with bit q set to r), (i with bit q set to s)) = g[(r, s)].
pub fn embed_one(n_qubits: usize, q: usize, g: &CMatrix) -> CMatrix {
    assert_eq!((g.nrows(), g.ncols()), (2, 2));
    assert!(q < n_qubits);
    let dim = 1usize << n_qubits;
    let bit = 1usize << q;
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        let base = i & !bit;
        let s = (i >> q) & 1;
        for r in 0..2 {
            m[(base | (r << q), i)] = g[(r, s)];
        }
    }
    m
}

/// Lifts a 4x4 matrix indexed |control target> to the named qubit pair.
pub fn embed_two(n_qubits: usize, control: usize, target: usize, g: &CMatrix) -> CMatrix {
    assert_eq!((g.nrows(), g.ncols()), (4, 4));
    assert!(control < n_qubits && target < n_qubits && control != target);
    let dim = 1usize << n_qubits;
    let cbit = 1usize << control;
    let tbit = 1usize << target;
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        let base = i & !(cbit | tbit);
        let col = 2 * ((i >> control) & 1) + ((i >> target) & 1);
        for row in 0..4 {
            let j = base | ((row >> 1) << control) | ((row & 1) << target);
            m[(j, i)] = g[(row, col)];
        }
    }
    m
}

pub fn gate_matrix(n_qubits: usize, gate: &Gate, angle: Option<f64>) -> Result<CMatrix> {
    match gate.kind {
        GateKind::RotZ => {
            let theta = angle.ok_or(Error::MissingAngle)?;
            Ok(embed_one(n_qubits, gate.target, &rot_z_matrix(theta)))
        }
        GateKind::RotY => {
            let theta = angle.ok_or(Error::MissingAngle)?;
            Ok(embed_one(n_qubits, gate.target, &rot_y_matrix(theta)))
        }
        GateKind::Cnot => {
            if angle.is_some() {
                return Err(Error::UnexpectedAngle);
            }
            Ok(embed_two(n_qubits, gate.control.unwrap(), gate.target, &cnot_matrix()))
        }
        GateKind::Cry => {
            let theta = angle.ok_or(Error::MissingAngle)?;
            Ok(embed_two(n_qubits, gate.control.unwrap(), gate.target, &cry_matrix(theta)))
        }
    }
}

/// Full circuit unitary as an ordered product of embedded gate matrices.
pub fn circuit_matrix(circuit: &Circuit, params: &ParameterVector) -> Result<CMatrix> {
    if params.len() != circuit.n_params() {
        return Err(Error::DimensionMismatch {
            expected: circuit.n_params(),
            got: params.len(),
        });
    }
    let mut m = identity_matrix(1 << circuit.n_qubits());
    for gate in circuit.gates() {
        let angle = gate.param_index.map(|k| params.get(k));
        m = gate_matrix(circuit.n_qubits(), gate, angle)? * m;
    }
    Ok(m)
}

pub fn pauli_op_matrix(op: PauliOp) -> CMatrix {
    let rows: [Complex64; 4] = match op {
        PauliOp::I => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        PauliOp::X => [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        PauliOp::Y => [c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        PauliOp::Z => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
    };
    CMatrix::from_row_slice(2, 2, &rows)
}

/// Kronecker product with qubit 0 as the least significant factor.
pub fn pauli_matrix(string: &PauliString) -> CMatrix {
    let mut m = identity_matrix(1);
    for q in (0..string.n_qubits()).rev() {
        m = m.kronecker(&pauli_op_matrix(string.op(q)));
    }
    m
}

pub fn hamiltonian_matrix(h: &Hamiltonian) -> CMatrix {
    let dim = 1usize << h.n_qubits();
    let mut m = CMatrix::zeros(dim, dim);
    for term in h.terms() {
        m += pauli_matrix(term.string()).scale(term.weight());
    }
    m
}

pub fn state_to_vector(state: &StateVector) -> CVector {
    CVector::from_column_slice(state.amplitudes())
}

pub fn vector_to_state(n_qubits: usize, v: &CVector) -> Result<StateVector> {
    StateVector::from_amplitudes(n_qubits, v.iter().copied().collect())
}

/// <v| M |v> for Hermitian M, returned as the real part.
pub fn expectation_dense(m: &CMatrix, state: &StateVector) -> f64 {
    let v = state_to_vector(state);
    (v.adjoint() * m * &v)[(0, 0)].re
}

/// Largest entry of M^dagger M - I.
pub fn max_unitary_deviation(m: &CMatrix) -> f64 {
    let d = m.adjoint() * m - identity_matrix(m.nrows());
    d.iter().map(|e| e.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix via its real symmetric embedding.
///
/// For H = A + iB the real matrix [[A, -B], [B, A]] is symmetric and carries
/// each eigenvalue of H twice, with real eigenvectors (p; q) mapping back to
/// complex ones v = p + iq. Eigenvalues come back ascending; the returned
/// vectors are orthonormalized so degenerate clusters still span correctly.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, Vec<CVector>)> {
    let dim = m.nrows();
    if m.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: m.ncols() });
    }
    let herm_dev = (m - m.adjoint()).iter().map(|e| e.norm()).fold(0.0, f64::max);
    if herm_dev > 1e-9 {
        return Err(Error::Parse(format!("matrix is not Hermitian, deviation {herm_dev:.3e}")));
    }
    let mut real = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
    for i in 0..dim {
        for j in 0..dim {
            let e = m[(i, j)];
            real[(i, j)] = e.re;
            real[(i + dim, j + dim)] = e.re;
            real[(i, j + dim)] = -e.im;
            real[(i + dim, j)] = e.im;
        }
    }
    let eig = real.symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    // Each eigenvalue appears twice; Gram-Schmidt keeps one complex vector
    // per copy and discards the redundant partner.
    let mut values = Vec::with_capacity(dim);
    let mut vectors: Vec<CVector> = Vec::with_capacity(dim);
    for &k in &order {
        if vectors.len() == dim {
            break;
        }
        let col = eig.eigenvectors.column(k);
        let mut v = CVector::from_fn(dim, |i, _| c(col[i], col[i + dim]));
        for prev in &vectors {
            let overlap = prev.dotc(&v);
            v -= prev.scale_complex(overlap);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            values.push(eig.eigenvalues[k]);
            vectors.push(v.unscale(norm));
        }
    }
    if vectors.len() != dim {
        return Err(Error::NonConverged { iterations: 0, residual: f64::NAN });
    }
    Ok((values, vectors))
}

trait ScaleComplex {
    fn scale_complex(&self, s: Complex64) -> Self;
}

impl ScaleComplex for CVector {
    fn scale_complex(&self, s: Complex64) -> Self {
        self.map(|e| e * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{multiply, PauliTerm, Phase, PhasedPauli};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
        let amps: Vec<Complex64> = (0..1usize << n)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        StateVector::from_amplitudes(n, amps.iter().map(|a| a / norm).collect()).unwrap()
    }

    fn random_string(rng: &mut ChaCha8Rng, n: usize) -> PauliString {
        let ops: Vec<PauliOp> = (0..n)
            .map(|_| match rng.gen_range(0..4) {
                0 => PauliOp::I,
                1 => PauliOp::X,
                2 => PauliOp::Y,
                _ => PauliOp::Z,
            })
            .collect();
        PauliString::from_ops(&ops)
    }

    fn random_circuit(rng: &mut ChaCha8Rng, n: usize, len: usize) -> (Circuit, ParameterVector) {
        let mut gates = Vec::new();
        let mut next_param = 0;
        for _ in 0..len {
            let q = rng.gen_range(0..n);
            match rng.gen_range(0..4) {
                0 => {
                    gates.push(Gate::rot_z(q, next_param));
                    next_param += 1;
                }
                1 => {
                    gates.push(Gate::rot_y(q, next_param));
                    next_param += 1;
                }
                2 if n > 1 => {
                    let mut t = rng.gen_range(0..n);
                    while t == q {
                        t = rng.gen_range(0..n);
                    }
                    gates.push(Gate::cnot(q, t));
                }
                _ if n > 1 => {
                    let mut t = rng.gen_range(0..n);
                    while t == q {
                        t = rng.gen_range(0..n);
                    }
                    gates.push(Gate::cry(q, t, next_param));
                    next_param += 1;
                }
                _ => {
                    gates.push(Gate::rot_y(q, next_param));
                    next_param += 1;
                }
            }
        }
        let circuit = Circuit::new(n, gates).unwrap();
        let params = ParameterVector::new(
            (0..next_param).map(|_| rng.gen::<f64>() * 7.0 - 3.5).collect(),
        );
        (circuit, params)
    }

    #[test]
    fn embedded_gates_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let theta = rng.gen::<f64>() * 6.0;
            for g in [rot_z_matrix(theta), rot_y_matrix(theta), cnot_matrix(), cry_matrix(theta)] {
                assert!(max_unitary_deviation(&g) < 1e-12);
            }
        }
    }

    #[test]
    fn circuit_matrix_matches_simulator_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..30 {
            let n = rng.gen_range(1..=3);
            let len = rng.gen_range(0..12);
            let (circuit, params) = random_circuit(&mut rng, n, len);
            let m = circuit_matrix(&circuit, &params).unwrap();
            assert!(max_unitary_deviation(&m) < 1e-10);
            for b in 0..1usize << n {
                let col =
                    crate::sim::run_circuit(&circuit, &params, &StateVector::basis_state(n, b))
                        .unwrap();
                for (i, &a) in col.amplitudes().iter().enumerate() {
                    assert!((m[(i, b)] - a).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn pauli_matrix_matches_fast_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..40 {
            let n = rng.gen_range(1..=4);
            let s = random_string(&mut rng, n);
            let psi = random_state(&mut rng, n);
            let fast = crate::pauli::apply_pauli(&s, &psi).unwrap();
            let slow = pauli_matrix(&s) * state_to_vector(&psi);
            for (i, &a) in fast.amplitudes().iter().enumerate() {
                assert!((slow[i] - a).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn phased_product_matches_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..60 {
            let n = rng.gen_range(1..=4);
            let a = PhasedPauli::new(Phase::new(rng.gen_range(0..4)), random_string(&mut rng, n));
            let b = PhasedPauli::new(Phase::new(rng.gen_range(0..4)), random_string(&mut rng, n));
            let prod = multiply(&a, &b).unwrap();
            let dense_prod = pauli_matrix(&a.string).scale_c(a.phase.value())
                * pauli_matrix(&b.string).scale_c(b.phase.value());
            let dense_expect = pauli_matrix(&prod.string).scale_c(prod.phase.value());
            let dev = (dense_prod - dense_expect)
                .iter()
                .map(|e| e.norm())
                .fold(0.0, f64::max);
            assert!(dev < 1e-12);
        }
    }

    trait ScaleC {
        fn scale_c(self, s: Complex64) -> Self;
    }
    impl ScaleC for CMatrix {
        fn scale_c(self, s: Complex64) -> Self {
            self.map(|e| e * s)
        }
    }

    #[test]
    fn hamiltonian_apply_and_expectation_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..20 {
            let n = rng.gen_range(1..=4);
            let terms: Vec<PauliTerm> = (0..rng.gen_range(1..6))
                .map(|_| PauliTerm::new(rng.gen::<f64>() * 4.0 - 2.0, random_string(&mut rng, n)))
                .collect();
            let h = Hamiltonian::new(n, terms).unwrap();
            let m = hamiltonian_matrix(&h);
            let psi = random_state(&mut rng, n);

            let fast = h.apply(&psi).unwrap();
            let slow = &m * state_to_vector(&psi);
            for (i, &a) in fast.amplitudes().iter().enumerate() {
                assert!((slow[i] - a).norm() < 1e-11);
            }

            let counter = crate::sim::EvalCounter::new();
            let e_fast = crate::sim::expectation(&psi, &h, &counter).unwrap();
            let e_slow = expectation_dense(&m, &psi);
            assert!((e_fast - e_slow).abs() < 1e-11);
        }
    }

    #[test]
    fn hermitian_eigen_recovers_pauli_spectrum() {
        let x = pauli_op_matrix(PauliOp::X);
        let (vals, vecs) = hermitian_eigen(&x).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
        for (v, val) in vecs.iter().zip(&vals) {
            let r = (&x * v) - v.scale(*val);
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn hermitian_eigen_handles_random_hamiltonians() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for _ in 0..10 {
            let n = rng.gen_range(1..=3);
            let terms: Vec<PauliTerm> = (0..rng.gen_range(2..7))
                .map(|_| PauliTerm::new(rng.gen::<f64>() * 2.0 - 1.0, random_string(&mut rng, n)))
                .collect();
            let h = Hamiltonian::new(n, terms).unwrap();
            if h.n_terms() == 0 {
                continue;
            }
            let m = hamiltonian_matrix(&h);
            let (vals, vecs) = hermitian_eigen(&m).unwrap();
            assert_eq!(vals.len(), 1 << n);
            for w in vals.windows(2) {
                assert!(w[0] <= w[1] + 1e-12);
            }
            for (v, val) in vecs.iter().zip(&vals) {
                let r = (&m * v) - v.scale(*val);
                assert!(r.norm() < 1e-8, "residual {}", r.norm());
            }
            // orthonormality across the full set, including degenerate pairs
            for i in 0..vecs.len() {
                for j in 0..vecs.len() {
                    let d = vecs[i].dotc(&vecs[j]);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((d - c(want, 0.0)).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn trace_of_nonidentity_pauli_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..20 {
            let n = rng.gen_range(1..=4);
            let s = random_string(&mut rng, n);
            let tr: Complex64 = pauli_matrix(&s).diagonal().iter().sum();
            if s.is_identity() {
                assert!((tr.re - (1 << s.n_qubits()) as f64).abs() < 1e-12);
            } else {
                assert!(tr.norm() < 1e-12);
            }
        }
    }
}
