//! Entanglement and accuracy diagnostics: reduced density matrices, Renyi-2
//! entropy with its Page-value normalization, a matrix-free ground-space
//! solver, and the overlap of a state with that space.

use crate::pauli::Hamiltonian;
use crate::sim::StateVector;
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Subset monitored by default in traces: the first two sites.
pub const DEFAULT_ENTROPY_SUBSET: [usize; 2] = [0, 1];

/// Reduced-density matrices above 8 qubits would not fit the dense form.
pub const MAX_SUBSET: usize = 8;

/// Matrix-free solves are budgeted up to this register size.
pub const MAX_EIG_QUBITS: usize = 20;

const LANCZOS_ITERATION_CAP: usize = 3000;
const LANCZOS_RESIDUAL_TOL: f64 = 1e-8;

/// State of a qubit subset after tracing out the rest. Row index bit k is
/// the value of `subset[k]`, so the subset order fixes the basis.
#[derive(Debug, Clone)]
pub struct ReducedDensity {
    subset: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

impl ReducedDensity {
    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Tr rho^2, which is sum |rho_ij|^2 for Hermitian rho.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|e| e.norm_sqr()).sum()
    }
}

fn validate_subset(subset: &[usize], n_qubits: usize) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::InvalidConfig("empty qubit subset".into()));
    }
    if subset.len() > MAX_SUBSET {
        return Err(Error::SubsetTooLarge { size: subset.len(), max: MAX_SUBSET });
    }
    let mut seen = vec![false; n_qubits];
    for &q in subset {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
        }
        if seen[q] {
            return Err(Error::InvalidConfig(format!("duplicate qubit {q} in subset")));
        }
        seen[q] = true;
    }
    Ok(())
}

/// Partial trace over the complement of `subset`.
pub fn reduced_density(state: &StateVector, subset: &[usize]) -> Result<ReducedDensity> {
    let n = state.n_qubits();
    validate_subset(subset, n)?;
    let complement: Vec<usize> = (0..n).filter(|q| !subset.contains(q)).collect();
    let dim_a = 1usize << subset.len();
    let dim_b = 1usize << complement.len();
    let spread = |bits: usize, positions: &[usize]| -> usize {
        positions
            .iter()
            .enumerate()
            .map(|(k, &q)| ((bits >> k) & 1) << q)
            .sum()
    };
    let amps = state.amplitudes();
    let mut rho = DMatrix::<Complex64>::zeros(dim_a, dim_a);
    for b in 0..dim_b {
        let base = spread(b, &complement);
        for row in 0..dim_a {
            let i = base | spread(row, subset);
            for col in 0..dim_a {
                let j = base | spread(col, subset);
                rho[(row, col)] += amps[i] * amps[j].conj();
            }
        }
    }
    Ok(ReducedDensity { subset: subset.to_vec(), matrix: rho })
}

/// Second Renyi entropy -ln Tr rho_A^2 in nats, clamped at zero against
/// rounding on pure states.
pub fn renyi2(state: &StateVector, subset: &[usize]) -> Result<f64> {
    let rho = reduced_density(state, subset)?;
    Ok((-rho.purity().ln()).max(0.0))
}

/// Page's near-maximal entropy for k of N qubits: k ln 2 - 2^{-(N-2k+1)}.
pub fn page_entropy(k: usize, n: usize) -> Result<f64> {
    if k < 1 || 2 * k > n {
        return Err(Error::InvalidConfig(format!(
            "page entropy needs 1 <= k <= N/2, got k={k}, N={n}"
        )));
    }
    let exponent = (n - 2 * k + 1) as i32;
    Ok(k as f64 * std::f64::consts::LN_2 - 2f64.powi(-exponent))
}

/// Lowest eigenvalue with the orthonormal basis of every eigenvector whose
/// eigenvalue sits within `degeneracy_tol` of it.
#[derive(Debug, Clone)]
pub struct GroundSpace {
    energy: f64,
    basis: Vec<StateVector>,
    degeneracy_tol: f64,
}

impl GroundSpace {
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn basis(&self) -> &[StateVector] {
        &self.basis
    }

    pub fn degeneracy(&self) -> usize {
        self.basis.len()
    }

    pub fn degeneracy_tol(&self) -> f64 {
        self.degeneracy_tol
    }
}

/// Weight of a state inside the ground space: sum of |<b|psi>|^2 over the
/// basis. Lands in [0, 1] up to rounding.
pub fn overlap(state: &StateVector, gs: &GroundSpace) -> Result<f64> {
    let mut m = 0.0;
    for b in &gs.basis {
        m += b.inner(state)?.norm_sqr();
    }
    Ok(m)
}

struct Workspace<'h> {
    h: &'h Hamiltonian,
    applications: usize,
}

impl Workspace<'_> {
    fn apply(&mut self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.applications += 1;
        let state = StateVector::from_amplitudes(self.h.n_qubits(), v.to_vec())?;
        Ok(self.h.apply(&state)?.amplitudes().to_vec())
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Removes the components of `v` along each unit vector in `basis`, twice
/// for numerical safety.
fn project_out(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for u in basis {
            let c = dot(u, v);
            axpy(v, -c, u);
        }
    }
}

fn seeded_start(dim: usize, counter: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6c61_6e63_7a6f_7300 ^ counter);
    (0..dim)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect()
}

/// Lowest Ritz pair of the symmetric tridiagonal (alphas, betas).
fn tridiagonal_ground(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let best = (0..m)
        .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .unwrap();
    (eig.eigenvalues[best], eig.eigenvectors.column(best).iter().copied().collect())
}

/// Lanczos with full reorthogonalization for the smallest eigenpair in the
/// orthogonal complement of `deflate`. Restarts from the best Ritz vector
/// when the basis fills up without meeting the residual target.
fn lowest_in_complement(
    ws: &mut Workspace,
    deflate: &[Vec<Complex64>],
    start_counter: &mut u64,
) -> Result<(f64, Vec<Complex64>)> {
    let dim = 1usize << ws.h.n_qubits();
    let basis_cap = (dim - deflate.len()).min(200).max(1);
    let mut start = loop {
        let mut v = seeded_start(dim, *start_counter);
        *start_counter += 1;
        project_out(&mut v, deflate);
        let nrm = norm(&v);
        if nrm > 1e-8 {
            for x in v.iter_mut() {
                *x /= nrm;
            }
            break v;
        }
    };
    let mut last_residual = f64::INFINITY;
    loop {
        let mut vs: Vec<Vec<Complex64>> = vec![start.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut ritz: Option<(f64, Vec<Complex64>)> = None;
        for j in 0..basis_cap {
            if ws.applications >= LANCZOS_ITERATION_CAP {
                return Err(Error::NonConverged {
                    iterations: ws.applications,
                    residual: last_residual,
                });
            }
            let mut w = ws.apply(&vs[j])?;
            let alpha = dot(&vs[j], &w).re;
            alphas.push(alpha);
            project_out(&mut w, deflate);
            project_out(&mut w, &vs);
            let beta = norm(&w);

            let (value, s) = tridiagonal_ground(&alphas, &betas);
            let assemble = |vs: &[Vec<Complex64>], s: &[f64]| {
                let mut x = vec![Complex64::new(0.0, 0.0); dim];
                for (vk, &sk) in vs.iter().zip(s) {
                    axpy(&mut x, Complex64::new(sk, 0.0), vk);
                }
                let nrm = norm(&x);
                for e in x.iter_mut() {
                    *e /= nrm;
                }
                x
            };
            let residual_estimate = beta * s.last().unwrap().abs();
            last_residual = residual_estimate;
            if residual_estimate < LANCZOS_RESIDUAL_TOL * 0.1 || beta < 1e-12 {
                let x = assemble(&vs, &s);
                let hx = ws.apply(&x)?;
                let mut r = hx;
                axpy(&mut r, Complex64::new(-value, 0.0), &x);
                let true_residual = norm(&r);
                last_residual = true_residual;
                if true_residual < LANCZOS_RESIDUAL_TOL {
                    return Ok((value, x));
                }
            }
            if j + 1 == basis_cap {
                ritz = Some((value, assemble(&vs, &s)));
                break;
            }
            let mut next = w;
            for e in next.iter_mut() {
                *e /= beta;
            }
            betas.push(beta);
            vs.push(next);
        }
        // basis exhausted: restart from the Ritz vector
        start = ritz.expect("non-empty Lanczos sweep").1;
        project_out(&mut start, deflate);
        let nrm = norm(&start);
        if nrm < 1e-12 {
            return Err(Error::NonConverged {
                iterations: ws.applications,
                residual: last_residual,
            });
        }
        for e in start.iter_mut() {
            *e /= nrm;
        }
    }
}

/// Finds the ground energy and every eigenvector within `degeneracy_tol`
/// (default 1e-6 max(1, |E0|)) of it, by repeated deflated Lanczos solves.
/// Purely matrix-free: the Hamiltonian enters only through its action on a
/// vector. Start vectors are derived from a fixed seed, so results are
/// reproducible run to run.
pub fn ground_space(h: &Hamiltonian, degeneracy_tol: Option<f64>) -> Result<GroundSpace> {
    let n = h.n_qubits();
    if n > MAX_EIG_QUBITS {
        return Err(Error::TooManyQubits { n_qubits: n, max: MAX_EIG_QUBITS });
    }
    let dim = 1usize << n;
    let mut ws = Workspace { h, applications: 0 };
    let mut start_counter = 0u64;
    let mut found: Vec<Vec<Complex64>> = Vec::new();
    let mut energy = f64::INFINITY;
    let mut tol = degeneracy_tol.unwrap_or(0.0);
    loop {
        let (value, vector) = lowest_in_complement(&mut ws, &found, &mut start_counter)?;
        if found.is_empty() {
            energy = value;
            if degeneracy_tol.is_none() {
                tol = 1e-6 * energy.abs().max(1.0);
            }
        } else if value > energy + tol {
            break;
        }
        found.push(vector);
        if found.len() == dim {
            break;
        }
    }
    let basis = found
        .into_iter()
        .map(|v| StateVector::from_amplitudes(n, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundSpace { energy, basis, degeneracy_tol: tol })
}
