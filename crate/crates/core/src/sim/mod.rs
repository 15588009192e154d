//! State vectors over `n` qutrits and exact gate application.
//!
//! Basis index convention: the index of `|d_0 d_1 ... d_{n-1}>` is the
//! base-3 number with qutrit 0 as the most significant digit.

mod operator;
mod sparse;

use std::fmt;

use rand::Rng;

use crate::error::{arg, Result};
use crate::C64;

pub use operator::{
    apply_embedded_cnx, circuit_unitary, embedded_cnx_oracle, Operator, MAX_UNITARY_QUTRITS,
};
pub use sparse::SparseRegister;

/// Largest register the dense state vector accepts.
pub const MAX_QUTRITS: usize = 12;

const UNITARITY_TOL: f64 = 1e-12;

pub(crate) const fn pow3(k: usize) -> usize {
    let mut p = 1;
    let mut i = 0;
    while i < k {
        p *= 3;
        i += 1;
    }
    p
}

/// Stride of qutrit `q` in an `n`-qutrit basis index.
#[inline]
pub(crate) fn stride(n: usize, q: usize) -> usize {
    pow3(n - 1 - q)
}

#[inline]
pub(crate) fn digit(index: usize, stride: usize) -> usize {
    (index / stride) % 3
}

/// Basis index of a trit string (qutrit 0 first).
pub fn basis_index(digits: &[u8]) -> usize {
    digits.iter().fold(0, |acc, &d| acc * 3 + d as usize)
}

/// Trit string of a basis index.
pub fn basis_digits(index: usize, n: usize) -> Vec<u8> {
    (0..n).map(|q| digit(index, stride(n, q)) as u8).collect()
}

/// Basis index of a qubit-subspace bitstring given as an integer whose most
/// significant of `n` bits is qutrit 0.
pub fn qubit_basis_index(bits: usize, n: usize) -> usize {
    (0..n).fold(0, |acc, q| acc * 3 + ((bits >> (n - 1 - q)) & 1))
}

/// Dense unitary on one or two qutrits, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    arity: usize,
    data: Vec<C64>,
}

impl GateMatrix {
    /// Validates shape and unitarity (`|U^dag U - I|_max < 1e-12`).
    pub fn new(arity: usize, data: Vec<C64>) -> Result<Self> {
        if arity != 1 && arity != 2 {
            return arg(format!("gate arity must be 1 or 2, got {arity}"));
        }
        let dim = pow3(arity);
        if data.len() != dim * dim {
            return arg(format!(
                "gate on {arity} qutrit(s) needs {} entries, got {}",
                dim * dim,
                data.len()
            ));
        }
        let g = Self { arity, data };
        let dev = g.unitarity_deviation();
        if !(dev < UNITARITY_TOL) {
            return arg(format!("matrix is not unitary (deviation {dev:.3e})"));
        }
        Ok(g)
    }

    pub fn identity(arity: usize) -> Self {
        let dim = pow3(arity);
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::new(1.0, 0.0);
        }
        Self { arity, data }
    }

    /// Diagonal single-qutrit gate; panics if an entry is off the unit circle.
    pub(crate) fn diagonal(d: [C64; 3]) -> Self {
        let z = C64::new(0.0, 0.0);
        Self::new(1, vec![d[0], z, z, z, d[1], z, z, z, d[2]]).expect("diagonal phases are unitary")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        pow3(self.arity)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    /// Matrix product `self * rhs` (apply `rhs` first).
    pub fn mul(&self, rhs: &GateMatrix) -> GateMatrix {
        assert_eq!(self.arity, rhs.arity, "arity mismatch in gate product");
        let d = self.dim();
        let mut data = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    data[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        GateMatrix { arity: self.arity, data }
    }

    pub fn dagger(&self) -> GateMatrix {
        let d = self.dim();
        let mut data = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        GateMatrix { arity: self.arity, data }
    }

    /// Two-qutrit gate with the roles of its targets exchanged.
    pub fn swap_conjugated(&self) -> GateMatrix {
        assert_eq!(self.arity, 2);
        let sw = |i: usize| (i % 3) * 3 + i / 3;
        let mut data = vec![C64::new(0.0, 0.0); 81];
        for i in 0..9 {
            for j in 0..9 {
                data[sw(i) * 9 + sw(j)] = self.data[i * 9 + j];
            }
        }
        GateMatrix { arity: 2, data }
    }

    /// `|U^dag U - I|_max`.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..d {
                    s += self.data[k * d + i].conj() * self.data[k * d + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }

    /// Largest entrywise deviation after removing one global phase, aligned
    /// on the largest-magnitude entry of `other`.
    pub fn max_deviation_up_to_phase(&self, other: &GateMatrix) -> f64 {
        assert_eq!(self.arity, other.arity);
        phase_aligned_deviation(&self.data, &other.data)
    }
}

/// Largest entrywise deviation after aligning the global phase on `b`'s largest entry.
pub fn phase_aligned_deviation(a: &[C64], b: &[C64]) -> f64 {
    let (k, _) = b
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best });
    if b[k].norm() == 0.0 || a[k].norm() == 0.0 {
        return a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    }
    let ph = a[k] / b[k];
    let ph = ph / ph.norm();
    a.iter().zip(b).map(|(x, y)| (x - ph * y).norm()).fold(0.0, f64::max)
}

/// A measured trit string, qutrit 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisOutcome {
    pub digits: Vec<u8>,
}

impl BasisOutcome {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        if let Some(d) = digits.iter().find(|&&d| d > 2) {
            return arg(format!("trit out of range: {d}"));
        }
        Ok(Self { digits })
    }
}

impl fmt::Display for BasisOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.digits {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Operations the noise channels need from a register, shared by the dense
/// and sparse representations.
pub trait QuditState {
    fn num_qutrits(&self) -> usize;

    fn apply_1q(&mut self, gate: &GateMatrix, q: usize);

    /// `gate` row/column index is `3 * d_a + d_b`.
    fn apply_2q(&mut self, gate: &GateMatrix, qa: usize, qb: usize);

    /// Multiplies every amplitude by `diag[d_q]`; entries need not be unit.
    fn scale_levels(&mut self, q: usize, diag: [C64; 3]);

    fn level_populations(&self, q: usize) -> [f64; 3];

    fn norm_sqr(&self) -> f64;

    fn renormalize(&mut self);

    /// Born-rule sample of a full trit string.
    fn sample_digits<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8>;
}

/// Dense state vector over `3^n` amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct QutritRegister {
    n: usize,
    amps: Vec<C64>,
}

impl QutritRegister {
    /// `|0...0>`.
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(&vec![0; n])
    }

    pub fn basis(digits: &[u8]) -> Result<Self> {
        let n = digits.len();
        check_size(n)?;
        BasisOutcome::new(digits.to_vec())?;
        let mut amps = vec![C64::new(0.0, 0.0); pow3(n)];
        amps[basis_index(digits)] = C64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Takes amplitudes as given; the caller is responsible for the norm.
    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        check_size(n)?;
        if amps.len() != pow3(n) {
            return arg(format!("expected {} amplitudes, got {}", pow3(n), amps.len()));
        }
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, digits: &[u8]) -> C64 {
        self.amps[basis_index(digits)]
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    /// Total population of basis states with at least one qutrit in `|2>`.
    pub fn leaked_population(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| basis_digits(*i, self.n).contains(&2))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// In-place form of [`apply_gate`].
    pub fn apply(&mut self, gate: &GateMatrix, targets: &[usize]) -> Result<()> {
        check_targets(self.n, gate.arity(), targets)?;
        match targets {
            [q] => self.apply_1q(gate, *q),
            [a, b] => self.apply_2q(gate, *a, *b),
            _ => unreachable!(),
        }
        Ok(())
    }

    pub fn inner(&self, other: &QutritRegister) -> Result<C64> {
        if self.n != other.n {
            return arg(format!("register size mismatch: {} vs {}", self.n, other.n));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUTRITS {
        return arg(format!("register size must be in 1..={MAX_QUTRITS}, got {n}"));
    }
    Ok(())
}

pub(crate) fn check_targets(n: usize, arity: usize, targets: &[usize]) -> Result<()> {
    if targets.len() != arity {
        return arg(format!("gate of arity {arity} given {} target(s)", targets.len()));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= n) {
        return arg(format!("target {t} out of range for {n} qutrits"));
    }
    if arity == 2 && targets[0] == targets[1] {
        return arg(format!("duplicate target {}", targets[0]));
    }
    Ok(())
}

impl QuditState for QutritRegister {
    fn num_qutrits(&self) -> usize {
        self.n
    }

    fn apply_1q(&mut self, gate: &GateMatrix, q: usize) {
        let s = stride(self.n, q);
        let u = gate.entries();
        let block = 3 * s;
        for hi in (0..self.amps.len()).step_by(block) {
            for lo in 0..s {
                let i0 = hi + lo;
                let (a0, a1, a2) = (self.amps[i0], self.amps[i0 + s], self.amps[i0 + 2 * s]);
                self.amps[i0] = u[0] * a0 + u[1] * a1 + u[2] * a2;
                self.amps[i0 + s] = u[3] * a0 + u[4] * a1 + u[5] * a2;
                self.amps[i0 + 2 * s] = u[6] * a0 + u[7] * a1 + u[8] * a2;
            }
        }
    }

    fn apply_2q(&mut self, gate: &GateMatrix, qa: usize, qb: usize) {
        let (sa, sb) = (stride(self.n, qa), stride(self.n, qb));
        let u = gate.entries();
        let mut idx = [0usize; 9];
        let mut v = [C64::new(0.0, 0.0); 9];
        for base in 0..self.amps.len() {
            if digit(base, sa) != 0 || digit(base, sb) != 0 {
                continue;
            }
            for da in 0..3 {
                for db in 0..3 {
                    idx[da * 3 + db] = base + da * sa + db * sb;
                }
            }
            for k in 0..9 {
                v[k] = self.amps[idx[k]];
            }
            for r in 0..9 {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..9 {
                    acc += u[r * 9 + c] * v[c];
                }
                self.amps[idx[r]] = acc;
            }
        }
    }

    fn scale_levels(&mut self, q: usize, diag: [C64; 3]) {
        let s = stride(self.n, q);
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= diag[digit(i, s)];
        }
    }

    fn level_populations(&self, q: usize) -> [f64; 3] {
        let s = stride(self.n, q);
        let mut p = [0.0; 3];
        for (i, a) in self.amps.iter().enumerate() {
            p[digit(i, s)] += a.norm_sqr();
        }
        p
    }

    fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn renormalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            for a in &mut self.amps {
                *a /= norm;
            }
        }
    }

    fn sample_digits<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        let total = self.norm_sqr();
        let mut u = rng.random::<f64>() * total;
        let mut last = 0;
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            last = i;
            if u < p {
                return basis_digits(i, self.n);
            }
            u -= p;
        }
        basis_digits(last, self.n)
    }
}

/// Applies `gate` on `targets`, identity elsewhere.
pub fn apply_gate(state: &QutritRegister, gate: &GateMatrix, targets: &[usize]) -> Result<QutritRegister> {
    let mut out = state.clone();
    out.apply(gate, targets)?;
    Ok(out)
}

/// `|<a|b>|^2`.
pub fn state_fidelity(a: &QutritRegister, b: &QutritRegister) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Born-rule sample of a normalized register.
pub fn sample_outcome<R: Rng + ?Sized>(state: &QutritRegister, rng: &mut R) -> BasisOutcome {
    BasisOutcome { digits: state.sample_digits(rng) }
}
