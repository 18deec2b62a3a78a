//! Pauli-string algebra in the symplectic (bitmask) representation.
//!
//! A string over n qubits is stored as an X-mask and a Z-mask; bit q of a
//! mask says whether X (resp. Z) acts on qubit q, and both bits set means Y.
//! The operator it denotes is `i^{|x∧z|} · X^x · Z^z`, which is exactly the
//! tensor product of the per-qubit {I, X, Y, Z} symbols. Products then reduce
//! to XOR plus phase bookkeeping, which is what the four-Majorana reductions
//! need.

use crate::sim::StateVector;
use crate::{Error, Result};
use num_complex::Complex64;
use std::collections::HashMap;
use std::fmt;

/// Coefficients below this are dropped when a Hamiltonian is assembled.
pub const WEIGHT_CUTOFF: f64 = 1e-14;

pub const MAX_STRING_QUBITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(PauliOp::I),
            'X' => Ok(PauliOp::X),
            'Y' => Ok(PauliOp::Y),
            'Z' => Ok(PauliOp::Z),
            other => Err(Error::Parse(format!("invalid Pauli symbol {other:?}"))),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1 && n_qubits <= MAX_STRING_QUBITS);
        PauliString { n_qubits, x: 0, z: 0 }
    }

    pub fn from_ops(ops: &[PauliOp]) -> Self {
        assert!(!ops.is_empty() && ops.len() <= MAX_STRING_QUBITS);
        let mut x = 0u64;
        let mut z = 0u64;
        for (q, op) in ops.iter().enumerate() {
            match op {
                PauliOp::I => {}
                PauliOp::X => x |= 1 << q,
                PauliOp::Y => {
                    x |= 1 << q;
                    z |= 1 << q;
                }
                PauliOp::Z => z |= 1 << q,
            }
        }
        PauliString { n_qubits: ops.len(), x, z }
    }

    /// Places `op` on qubit `q` of an otherwise-identity string.
    pub fn single(n_qubits: usize, q: usize, op: PauliOp) -> Self {
        let mut ops = vec![PauliOp::I; n_qubits];
        ops[q] = op;
        Self::from_ops(&ops)
    }

    /// Parses "XIZY"-style text, qubit 0 leftmost.
    pub fn parse(text: &str) -> Result<Self> {
        let ops = text
            .chars()
            .map(PauliOp::from_char)
            .collect::<Result<Vec<_>>>()?;
        if ops.is_empty() || ops.len() > MAX_STRING_QUBITS {
            return Err(Error::Parse(format!("bad string length {}", ops.len())));
        }
        Ok(Self::from_ops(&ops))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn op(&self, q: usize) -> PauliOp {
        match ((self.x >> q) & 1, (self.z >> q) & 1) {
            (0, 0) => PauliOp::I,
            (1, 0) => PauliOp::X,
            (1, 1) => PauliOp::Y,
            _ => PauliOp::Z,
        }
    }

    pub fn ops(&self) -> Vec<PauliOp> {
        (0..self.n_qubits).map(|q| self.op(q)).collect()
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// The canonical-form prefactor i^{|x∧z|}, one factor of i per Y.
    pub fn y_phase(&self) -> Complex64 {
        Phase::new((self.x & self.z).count_ones() as u8).value()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits {
            write!(f, "{}", self.op(q).to_char())?;
        }
        Ok(())
    }
}

/// One of {+1, +i, −1, −i}, stored as the exponent k in i^k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phase(u8);

impl Phase {
    pub fn new(exponent: u8) -> Self {
        Phase(exponent & 3)
    }

    pub fn one() -> Self {
        Phase(0)
    }

    pub fn value(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    /// ±1 as a real number, or None for ±i.
    pub fn as_real(self) -> Option<f64> {
        match self.0 {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhasedPauli {
    pub phase: Phase,
    pub string: PauliString,
}

impl PhasedPauli {
    pub fn new(phase: Phase, string: PauliString) -> Self {
        PhasedPauli { phase, string }
    }

    pub fn identity(n_qubits: usize) -> Self {
        PhasedPauli { phase: Phase::one(), string: PauliString::identity(n_qubits) }
    }
}

/// Exact product of two phased strings.
///
/// Writing each side in canonical form i^{|x∧z|} X^x Z^z, moving Z^{z_a} past
/// X^{x_b} contributes (−1)^{|z_a∧x_b|}, and the result re-absorbs its own
/// canonical prefactor. All arithmetic is on the 2-bit phase exponent.
pub fn multiply(a: &PhasedPauli, b: &PhasedPauli) -> Result<PhasedPauli> {
    if a.string.n_qubits != b.string.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: a.string.n_qubits,
            got: b.string.n_qubits,
        });
    }
    let (xa, za) = (a.string.x, a.string.z);
    let (xb, zb) = (b.string.x, b.string.z);
    let x = xa ^ xb;
    let z = za ^ zb;
    let exponent = a.phase.0 as u32
        + b.phase.0 as u32
        + (xa & za).count_ones()
        + (xb & zb).count_ones()
        + 2 * (za & xb).count_ones()
        // subtracting |x∧z| of the product, mod 4
        + 3 * (x & z).count_ones();
    Ok(PhasedPauli {
        phase: Phase::new((exponent & 3) as u8),
        string: PauliString { n_qubits: a.string.n_qubits, x, z },
    })
}

/// Applies the string operator, returning a fresh state.
pub fn apply_pauli(string: &PauliString, state: &StateVector) -> Result<StateVector> {
    if string.n_qubits != state.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: 1 << string.n_qubits,
            got: state.amplitudes().len(),
        });
    }
    let amps = state.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    let x = string.x as usize;
    let z = string.z;
    let y_phase = string.y_phase();
    for (i, &a) in amps.iter().enumerate() {
        let v = if (i as u64 & z).count_ones() & 1 == 1 { -a } else { a };
        out[i ^ x] = y_phase * v;
    }
    StateVector::from_amplitudes(string.n_qubits, out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    weight: f64,
    string: PauliString,
}

impl PauliTerm {
    pub fn new(weight: f64, string: PauliString) -> Self {
        assert!(weight.is_finite(), "term weight must be finite");
        PauliTerm { weight, string }
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn string(&self) -> &PauliString {
        &self.string
    }
}

/// Weighted sum of Pauli strings. Duplicate strings are merged (weights
/// summed, first-seen order kept) and negligible terms dropped at
/// construction, so term lists stay tight and deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl Hamiltonian {
    pub fn new(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        let mut merged: Vec<PauliTerm> = Vec::with_capacity(terms.len());
        let mut index: HashMap<(u64, u64), usize> = HashMap::with_capacity(terms.len());
        for term in terms {
            if term.string.n_qubits != n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: n_qubits,
                    got: term.string.n_qubits,
                });
            }
            match index.entry((term.string.x, term.string.z)) {
                std::collections::hash_map::Entry::Occupied(e) => {
                    merged[*e.get()].weight += term.weight;
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(merged.len());
                    merged.push(term);
                }
            }
        }
        merged.retain(|t| t.weight.abs() >= WEIGHT_CUTOFF);
        Ok(Hamiltonian { n_qubits, terms: merged })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// dst = H·src without building a matrix; used by the eigensolver.
    pub fn apply(&self, src: &StateVector) -> Result<StateVector> {
        let amps = src.amplitudes();
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        for term in &self.terms {
            let x = term.string.x as usize;
            let z = term.string.z;
            let factor = term.weight * term.string.y_phase();
            for (i, &a) in amps.iter().enumerate() {
                let v = if (i as u64 & z).count_ones() & 1 == 1 { -a } else { a };
                out[i ^ x] += factor * v;
            }
        }
        StateVector::from_amplitudes(self.n_qubits, out)
    }

    /// One `<weight> <string>` term per line, qubit 0 leftmost in the string.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for term in &self.terms {
            out.push_str(&format!("{} {}\n", term.weight, term.string));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut n_qubits = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (w, s) = match (parts.next(), parts.next(), parts.next()) {
                (Some(w), Some(s), None) => (w, s),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected `<weight> <string>`, got {raw:?}",
                        lineno + 1
                    )))
                }
            };
            let weight: f64 = w
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad weight {w:?}: {e}", lineno + 1)))?;
            let string = PauliString::parse(s)?;
            match n_qubits {
                None => n_qubits = Some(string.n_qubits),
                Some(n) if n != string.n_qubits => {
                    return Err(Error::Parse(format!(
                        "line {}: string length {} disagrees with {}",
                        lineno + 1,
                        string.n_qubits,
                        n
                    )))
                }
                _ => {}
            }
            terms.push(PauliTerm::new(weight, string));
        }
        let n_qubits =
            n_qubits.ok_or_else(|| Error::Parse("no terms in Hamiltonian text".into()))?;
        Self::new(n_qubits, terms)
    }
}
