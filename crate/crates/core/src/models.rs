//! Benchmark Hamiltonian builders: Heisenberg XXX on regular graphs, and the
//! SYK four-Majorana model mapped onto qubits through Jordan-Wigner strings.

use crate::pauli::{multiply, Hamiltonian, PauliOp, PauliString, PauliTerm, Phase, PhasedPauli};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const DEFAULT_J: f64 = 1.0;
pub const DEFAULT_H_Z: f64 = 1.0;

/// Retry budget for the pairing sampler before the inputs are declared
/// pathological.
pub const PAIRING_RETRY_CAP: usize = 10_000;

/// Simple graph in which every vertex has the same degree. Edges are kept
/// sorted with u < v inside each pair, so equal graphs compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularGraph {
    n_vertices: usize,
    degree: usize,
    edges: Vec<(usize, usize)>,
}

impl RegularGraph {
    /// Builds a graph from an explicit edge list, checking simplicity and
    /// that all vertex degrees agree.
    pub fn from_edges(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut normalized = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(Error::InfeasibleGraph(format!("self-loop at vertex {a}")));
            }
            if a >= n_vertices || b >= n_vertices {
                return Err(Error::InfeasibleGraph(format!(
                    "edge ({a}, {b}) exceeds vertex count {n_vertices}"
                )));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        if normalized.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InfeasibleGraph("duplicate edge".into()));
        }
        let mut degrees = vec![0usize; n_vertices];
        for &(u, v) in &normalized {
            degrees[u] += 1;
            degrees[v] += 1;
        }
        let degree = degrees.first().copied().unwrap_or(0);
        if degrees.iter().any(|&d| d != degree) {
            return Err(Error::InfeasibleGraph("vertex degrees are not uniform".into()));
        }
        Ok(RegularGraph { n_vertices, degree, edges: normalized })
    }

    /// Cycle graph 0-1-2-...-0; the 2-regular ring.
    pub fn ring(n_vertices: usize) -> Result<Self> {
        if n_vertices < 3 {
            return Err(Error::InfeasibleGraph(format!(
                "a ring needs at least 3 vertices, got {n_vertices}"
            )));
        }
        let edges = (0..n_vertices).map(|v| (v, (v + 1) % n_vertices)).collect();
        Self::from_edges(n_vertices, edges)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// One `u v` line per edge.
    pub fn to_edge_text(&self) -> String {
        let mut out = String::new();
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// Parses the `u v` edge-list format; the vertex count is one past the
    /// largest endpoint, which is exact for degree >= 1 regular graphs.
    pub fn parse_edge_text(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_vertex = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (u, v) = match (parts.next(), parts.next(), parts.next()) {
                (Some(u), Some(v), None) => (u, v),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected `u v`, got {raw:?}",
                        lineno + 1
                    )))
                }
            };
            let u: usize = u
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let v: usize = v
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            max_vertex = max_vertex.max(u).max(v);
            edges.push((u, v));
        }
        if edges.is_empty() {
            return Err(Error::Parse("no edges in graph text".into()));
        }
        Self::from_edges(max_vertex + 1, edges)
    }
}

/// Uniform random regular graph via the pairing (configuration) model:
/// shuffle degree-many stubs per vertex, pair them up consecutively, and
/// reject the whole pairing on any self-loop or duplicate edge. Rejection
/// keeps the distribution uniform over simple regular graphs.
pub fn random_regular_graph(n: usize, degree: usize, seed: u64) -> Result<RegularGraph> {
    if degree >= n {
        return Err(Error::InfeasibleGraph(format!("degree {degree} needs more than {n} vertices")));
    }
    if degree == 0 || n == 0 {
        return Err(Error::InfeasibleGraph("empty graph".into()));
    }
    if (n * degree) % 2 != 0 {
        return Err(Error::InfeasibleGraph(format!(
            "n*degree = {} is odd, no such graph exists",
            n * degree
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(degree)).collect();
    for _ in 0..PAIRING_RETRY_CAP {
        stubs.shuffle(&mut rng);
        let mut edges = Vec::with_capacity(n * degree / 2);
        let mut ok = true;
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v {
                ok = false;
                break;
            }
            edges.push((u.min(v), u.max(v)));
        }
        if !ok {
            continue;
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        return Ok(RegularGraph { n_vertices: n, degree, edges });
    }
    Err(Error::PairingBudgetExceeded { attempts: PAIRING_RETRY_CAP })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeisenbergSpec {
    pub n_qubits: usize,
    pub graph: RegularGraph,
    pub j: f64,
    pub h_z: f64,
}

impl HeisenbergSpec {
    pub fn new(graph: RegularGraph, j: f64, h_z: f64) -> Self {
        HeisenbergSpec { n_qubits: graph.n_vertices(), graph, j, h_z }
    }
}

/// Spin Hamiltonian J * (XX + YY + ZZ) on every edge plus a uniform h_z * Z
/// bias on every qubit. Zero-weight terms vanish in construction, so h_z = 0
/// yields exactly three terms per edge.
pub fn build_heisenberg(spec: &HeisenbergSpec) -> Result<Hamiltonian> {
    if spec.n_qubits != spec.graph.n_vertices() {
        return Err(Error::InvalidConfig(format!(
            "n_qubits {} disagrees with graph vertex count {}",
            spec.n_qubits,
            spec.graph.n_vertices()
        )));
    }
    let n = spec.n_qubits;
    let mut terms = Vec::with_capacity(3 * spec.graph.edges().len() + n);
    for &(u, v) in spec.graph.edges() {
        for op in [PauliOp::X, PauliOp::Y, PauliOp::Z] {
            let mut ops = vec![PauliOp::I; n];
            ops[u] = op;
            ops[v] = op;
            terms.push(PauliTerm::new(spec.j, PauliString::from_ops(&ops)));
        }
    }
    for q in 0..n {
        terms.push(PauliTerm::new(spec.h_z, PauliString::single(n, q, PauliOp::Z)));
    }
    Hamiltonian::new(n, terms)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SykSpec {
    pub n_qubits: usize,
    pub j: f64,
    pub seed: u64,
}

impl SykSpec {
    pub fn new(n_qubits: usize, seed: u64) -> Self {
        SykSpec { n_qubits, j: DEFAULT_J, seed }
    }
}

/// Jordan-Wigner image of Majorana mode `index` on an N-qubit register.
///
/// Indices are 0-based here: modes 2q and 2q+1 live on qubit q as
/// X...X Z and X...X Y respectively, with the X tail covering qubits 0..q.
/// In the common 1-based convention these are χ_{2q+1} and χ_{2q+2}.
pub fn majorana(index: usize, n_qubits: usize) -> Result<PhasedPauli> {
    if index >= 2 * n_qubits {
        return Err(Error::QubitOutOfRange { qubit: index, n_qubits: 2 * n_qubits });
    }
    let q = index / 2;
    let mut ops = vec![PauliOp::I; n_qubits];
    for t in ops.iter_mut().take(q) {
        *t = PauliOp::X;
    }
    ops[q] = if index % 2 == 0 { PauliOp::Z } else { PauliOp::Y };
    Ok(PhasedPauli::new(Phase::one(), PauliString::from_ops(&ops)))
}

/// Coupling variance for an N-qubit instance at scale J: 3! J^2 / ((N-1)(N-2)(N-3)).
///
/// N here is the qubit count, not the Majorana count 2N; conventions that
/// normalize by the mode count differ by a constant factor.
pub fn syk_coupling_variance(n_qubits: usize, j: f64) -> f64 {
    let n = n_qubits as f64;
    6.0 * j * j / ((n - 1.0) * (n - 2.0) * (n - 3.0))
}

/// All-to-all four-Majorana Hamiltonian with i.i.d. Gaussian couplings.
///
/// One term per quadruple a < b < c < d of the 2N Majorana modes, visited in
/// lexicographic order with one normal draw each, so a seed pins the instance
/// bit-for-bit. Draws come from a ChaCha8 stream through the ziggurat normal
/// sampler. Each four-mode product collapses to a single Pauli string whose
/// accumulated phase must be +-1; that sign folds into the real weight.
pub fn build_syk(spec: &SykSpec) -> Result<Hamiltonian> {
    let n = spec.n_qubits;
    if n < 4 {
        return Err(Error::InvalidConfig(format!(
            "SYK needs at least 4 qubits for the variance normalization, got {n}"
        )));
    }
    let sigma = syk_coupling_variance(n, spec.j).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let modes: Vec<PhasedPauli> =
        (0..2 * n).map(|k| majorana(k, n)).collect::<Result<_>>()?;
    let mut terms = Vec::new();
    for a in 0..2 * n {
        for b in a + 1..2 * n {
            let ab = multiply(&modes[a], &modes[b])?;
            for c in b + 1..2 * n {
                let abc = multiply(&ab, &modes[c])?;
                for d in c + 1..2 * n {
                    let coupling: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
                    let prod = multiply(&abc, &modes[d])?;
                    let sign = prod.phase.as_real().ok_or_else(|| Error::NonRealWeight {
                        phase: format!("{:?}", prod.phase.value()),
                    })?;
                    terms.push(PauliTerm::new(coupling * sign, prod.string));
                }
            }
        }
    }
    Hamiltonian::new(n, terms)
}
