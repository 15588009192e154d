use super::{basis_digits, check_size, phase_aligned_deviation, pow3, stride, QuditState, QutritRegister};
use crate::error::{arg, Error, Result};
use crate::gates::Circuit;
use crate::C64;

/// Largest register for which full `3^n x 3^n` matrices are built.
pub const MAX_UNITARY_QUTRITS: usize = 6;

/// Dense operator on the full `3^n`-dimensional register, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    n: usize,
    dim: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn identity(n: usize) -> Result<Self> {
        guard(n)?;
        let dim = pow3(n);
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::new(1.0, 0.0);
        }
        Ok(Self { n, dim, data })
    }

    fn from_columns(n: usize, columns: Vec<QutritRegister>) -> Self {
        let dim = pow3(n);
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for (j, col) in columns.iter().enumerate() {
            for (i, a) in col.amplitudes().iter().enumerate() {
                data[i * dim + j] = *a;
            }
        }
        Self { n, dim, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn column(&self, col: usize) -> QutritRegister {
        let amps = (0..self.dim).map(|r| self.get(r, col)).collect();
        QutritRegister::from_amplitudes(self.n, amps).expect("column length matches register")
    }

    /// Sub-block on the given basis indices (rows and columns).
    pub fn restrict(&self, indices: &[usize]) -> Vec<C64> {
        let mut out = Vec::with_capacity(indices.len() * indices.len());
        for &r in indices {
            for &c in indices {
                out.push(self.get(r, c));
            }
        }
        out
    }

    pub fn max_deviation_up_to_phase(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim);
        phase_aligned_deviation(&self.data, &other.data)
    }

    /// `|U^dag U - I|_max`.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
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
}

fn guard(n: usize) -> Result<()> {
    if n > MAX_UNITARY_QUTRITS {
        return Err(Error::Capability(format!(
            "full unitary limited to {MAX_UNITARY_QUTRITS} qutrits (3^{MAX_UNITARY_QUTRITS} = {}), got {n}",
            pow3(MAX_UNITARY_QUTRITS)
        )));
    }
    check_size(n)
}

/// Product of the embedded instruction unitaries in circuit order.
///
/// Barriers are skipped; measurement instructions are rejected.
pub fn circuit_unitary(circuit: &Circuit, n: usize) -> Result<Operator> {
    guard(n)?;
    if circuit.n() != n {
        return arg(format!("circuit is on {} qutrits, requested {n}", circuit.n()));
    }
    let gates = circuit.unitary_steps()?;
    let columns = (0..pow3(n))
        .map(|j| {
            let mut s = QutritRegister::from_amplitudes(n, basis_column(n, j)).expect("sized");
            for (g, targets) in &gates {
                match targets.as_slice() {
                    [q] => s.apply_1q(g, *q),
                    [a, b] => s.apply_2q(g, *a, *b),
                    _ => unreachable!("unitary_steps emits 1- or 2-qutrit steps"),
                }
            }
            s
        })
        .collect();
    Ok(Operator::from_columns(n, columns))
}

fn basis_column(n: usize, j: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); pow3(n)];
    v[j] = C64::new(1.0, 0.0);
    v
}

fn cnx_image(index: usize, n: usize) -> usize {
    let digits = basis_digits(index, n);
    if digits.contains(&2) {
        return index;
    }
    if digits[..n - 1].iter().all(|&d| d == 1) {
        let t = stride(n, n - 1);
        if digits[n - 1] == 0 {
            index + t
        } else {
            index - t
        }
    } else {
        index
    }
}

/// Permutation matrix of `C^{n-1}X` (target = last qutrit) on the qubit
/// subspace, identity on every basis state containing a `|2>`.
pub fn embedded_cnx_oracle(n: usize) -> Result<Operator> {
    if n < 3 {
        return arg(format!("C^(n-1)X oracle needs n >= 3, got {n}"));
    }
    guard(n)?;
    let dim = pow3(n);
    let mut data = vec![C64::new(0.0, 0.0); dim * dim];
    for j in 0..dim {
        data[cnx_image(j, n) * dim + j] = C64::new(1.0, 0.0);
    }
    Ok(Operator { n, dim, data })
}

/// State-application form of [`embedded_cnx_oracle`], valid up to 12 qutrits.
pub fn apply_embedded_cnx(state: &QutritRegister) -> Result<QutritRegister> {
    let n = state.n();
    if n < 3 {
        return arg(format!("C^(n-1)X oracle needs n >= 3, got {n}"));
    }
    let mut out = vec![C64::new(0.0, 0.0); state.amplitudes().len()];
    for (j, a) in state.amplitudes().iter().enumerate() {
        out[cnx_image(j, n)] = *a;
    }
    QutritRegister::from_amplitudes(n, out)
}
