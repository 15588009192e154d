//! Native gate set of the trapped-ion qutrit processor, composite pulses,
//! the circuit IR and the addressing-legality checker.

mod ir;
mod legality;

use std::f64::consts::PI;

use crate::error::{arg, Result};
use crate::sim::GateMatrix;
use crate::C64;

pub use ir::{Circuit, GateKind, HardwareProfile, Instruction, Params};
pub use legality::{legality_check, Violation};

const Z: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// `R^{0j}_phi(theta) = exp(-i sigma^{0j}_phi theta / 2)`.
pub fn r_0j(j: u8, theta: f64, phi: f64) -> Result<GateMatrix> {
    if j != 1 && j != 2 {
        return arg(format!("R0J level must be 1 or 2, got {j}"));
    }
    let j = j as usize;
    let (s, c) = (theta / 2.0).sin_cos();
    let mut m = [Z; 9];
    let spectator = 3 - j;
    m[spectator * 3 + spectator] = ONE;
    m[0] = C64::new(c, 0.0);
    m[j * 3 + j] = C64::new(c, 0.0);
    m[j] = C64::new(0.0, -s) * C64::from_polar(1.0, -phi);
    m[j * 3] = C64::new(0.0, -s) * C64::from_polar(1.0, phi);
    Ok(GateMatrix::new(1, m.to_vec()).expect("rotation is unitary"))
}

/// `R^j_z(theta) = exp(i theta |j><j|)`.
pub fn rz_j(j: u8, theta: f64) -> Result<GateMatrix> {
    if j > 2 {
        return arg(format!("RZJ level must be 0, 1 or 2, got {j}"));
    }
    let mut d = [ONE; 3];
    d[j as usize] = C64::from_polar(1.0, theta);
    Ok(GateMatrix::diagonal(d))
}

/// `exp(-i chi sigma^{01}_x (x) sigma^{01}_x)`, identity on any state with a `|2>`.
pub fn xx(chi: f64) -> GateMatrix {
    xx_tilde(chi, 0.0, 0.0)
}

/// `exp[-i(chi sx(x)sx + chi_a P(x)I + chi_b I(x)P)]`, `P = |0><0| + |1><1|`.
pub fn xx_tilde(chi: f64, chi_a: f64, chi_b: f64) -> GateMatrix {
    let (s, c) = chi.sin_cos();
    let mut m = vec![Z; 81];
    for a in 0..3 {
        for b in 0..3 {
            let row = a * 3 + b;
            let pa = a < 2;
            let pb = b < 2;
            let phase = C64::from_polar(
                1.0,
                -(if pa { chi_a } else { 0.0 }) - (if pb { chi_b } else { 0.0 }),
            );
            if pa && pb {
                m[row * 9 + row] = C64::new(c, 0.0) * phase;
                let flipped = (1 - a) * 3 + (1 - b);
                m[flipped * 9 + row] = C64::new(0.0, -s) * phase;
            } else {
                m[row * 9 + row] = phase;
            }
        }
    }
    GateMatrix::new(2, m).expect("XX is unitary")
}

/// Single-qubit Paulis on the `{|0>,|1>}` subspace (identity on `|2>`),
/// in the order I, X, Y, Z.
pub fn qubit_paulis() -> [GateMatrix; 4] {
    let i = C64::new(0.0, 1.0);
    let mk = |a: C64, b: C64, c: C64, d: C64| {
        GateMatrix::new(1, vec![a, b, Z, c, d, Z, Z, Z, ONE]).expect("Pauli is unitary")
    };
    [
        GateMatrix::identity(1),
        mk(Z, ONE, ONE, Z),
        mk(Z, -i, i, Z),
        mk(ONE, Z, Z, -ONE),
    ]
}

/// SK1 composite pulse for `R^{01}_phi(theta)` on one ion: the target
/// rotation followed by `R_{phi1}(2pi)` and `R_{phi2}(2pi)`.
pub fn sk1(theta: f64, phi: f64, target: usize, hw: &HardwareProfile) -> Result<Vec<Instruction>> {
    if !theta.is_finite() || theta.abs() > 2.0 * PI {
        return arg(format!("SK1 needs |theta| <= 2pi, got {theta}"));
    }
    let a = (-theta / (4.0 * PI)).acos();
    Ok(vec![
        Instruction::rot(1, theta, phi, target, hw),
        Instruction::rot(1, 2.0 * PI, phi - a, target, hw),
        Instruction::rot(1, 2.0 * PI, phi + a, target, hw),
    ])
}
