use rand::Rng;

use super::{basis_digits, basis_index, check_size, digit, pow3, stride, GateMatrix, QuditState, QutritRegister};
use crate::error::Result;
use crate::C64;

/// Matrix entries below this magnitude are treated as exact zeros
/// (e.g. `cos(pi/2)` from a pi pulse).
const ENTRY_CUT: f64 = 1e-14;
/// Amplitudes with `|a|^2` below this are dropped.
const AMP_CUT: f64 = 1e-30;

/// Register stored as a sorted list of non-zero amplitudes.
///
/// Trajectories that start in a basis state and see only pi pulses, XX(pi/2)
/// and Pauli-type jumps stay a single term, so per-shot cost is independent
/// of `3^n`.
#[derive(Debug, Clone)]
pub struct SparseRegister {
    n: usize,
    terms: Vec<(usize, C64)>,
    scratch: Vec<(usize, C64)>,
}

impl SparseRegister {
    pub fn basis(digits: &[u8]) -> Result<Self> {
        check_size(digits.len())?;
        super::BasisOutcome::new(digits.to_vec())?;
        Ok(Self {
            n: digits.len(),
            terms: vec![(basis_index(digits), C64::new(1.0, 0.0))],
            scratch: Vec::new(),
        })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(&vec![0; n])
    }

    pub fn from_dense(state: &QutritRegister) -> Self {
        let terms = state
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() >= AMP_CUT)
            .map(|(i, a)| (i, *a))
            .collect();
        Self { n: state.n(), terms, scratch: Vec::new() }
    }

    pub fn to_dense(&self) -> QutritRegister {
        let mut amps = vec![C64::new(0.0, 0.0); pow3(self.n)];
        for &(i, a) in &self.terms {
            amps[i] = a;
        }
        QutritRegister::from_amplitudes(self.n, amps).expect("same size")
    }

    pub fn terms(&self) -> &[(usize, C64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn merge_scratch(&mut self) {
        let s = &mut self.scratch;
        if s.len() > 1 {
            s.sort_unstable_by_key(|t| t.0);
        }
        self.terms.clear();
        for &(i, a) in s.iter() {
            match self.terms.last_mut() {
                Some(last) if last.0 == i => last.1 += a,
                _ => self.terms.push((i, a)),
            }
        }
        self.terms.retain(|t| t.1.norm_sqr() >= AMP_CUT);
        s.clear();
    }
}

impl QuditState for SparseRegister {
    fn num_qutrits(&self) -> usize {
        self.n
    }

    fn apply_1q(&mut self, gate: &GateMatrix, q: usize) {
        let s = stride(self.n, q);
        let u = gate.entries();
        self.scratch.clear();
        for &(idx, a) in &self.terms {
            let d = digit(idx, s);
            let base = idx - d * s;
            for r in 0..3 {
                let c = u[r * 3 + d];
                if c.norm() >= ENTRY_CUT {
                    self.scratch.push((base + r * s, c * a));
                }
            }
        }
        self.merge_scratch();
    }

    fn apply_2q(&mut self, gate: &GateMatrix, qa: usize, qb: usize) {
        let (sa, sb) = (stride(self.n, qa), stride(self.n, qb));
        let u = gate.entries();
        self.scratch.clear();
        for &(idx, a) in &self.terms {
            let (da, db) = (digit(idx, sa), digit(idx, sb));
            let base = idx - da * sa - db * sb;
            let col = da * 3 + db;
            for r in 0..9 {
                let c = u[r * 9 + col];
                if c.norm() >= ENTRY_CUT {
                    self.scratch.push((base + (r / 3) * sa + (r % 3) * sb, c * a));
                }
            }
        }
        self.merge_scratch();
    }

    fn scale_levels(&mut self, q: usize, diag: [C64; 3]) {
        let s = stride(self.n, q);
        for t in &mut self.terms {
            t.1 *= diag[digit(t.0, s)];
        }
        self.terms.retain(|t| t.1.norm_sqr() >= AMP_CUT);
    }

    fn level_populations(&self, q: usize) -> [f64; 3] {
        let s = stride(self.n, q);
        let mut p = [0.0; 3];
        for &(i, a) in &self.terms {
            p[digit(i, s)] += a.norm_sqr();
        }
        p
    }

    fn norm_sqr(&self) -> f64 {
        self.terms.iter().map(|t| t.1.norm_sqr()).sum()
    }

    fn renormalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            for t in &mut self.terms {
                t.1 /= norm;
            }
        }
    }

    fn sample_digits<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        let mut u = rng.random::<f64>() * self.norm_sqr();
        for &(i, a) in &self.terms {
            let p = a.norm_sqr();
            if u < p {
                return basis_digits(i, self.n);
            }
            u -= p;
        }
        basis_digits(self.terms.last().map_or(0, |t| t.0), self.n)
    }
}
