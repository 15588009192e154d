//! Qubit-only baselines built from `R^{01}` pulses, virtual `R_z^1` and `XX`.

use std::f64::consts::PI;

use crate::error::{arg, Result};
use crate::gates::{Circuit, HardwareProfile, Instruction};

/// Largest register accepted by [`qubit_cnx`].
pub const QUBIT_CNX_MAX: usize = 8;

fn rz(theta: f64, q: usize) -> Instruction {
    Instruction::rz(1, theta, Some(q))
}

/// CNOT from `c` to `t` (up to global phase) with one `XX(pi/4)`.
pub fn cx(c: usize, t: usize, hw: &HardwareProfile) -> Vec<Instruction> {
    vec![
        Instruction::ry(PI / 2.0, c, hw),
        Instruction::xx(PI / 4.0, c, t, hw),
        Instruction::rx(-PI / 2.0, c, hw),
        Instruction::rx(-PI / 2.0, t, hw),
        Instruction::ry(-PI / 2.0, c, hw),
    ]
}

/// Ion-specific three-qubit Toffoli with six `XX(pi/4)`; target is qubit 2.
pub fn qubit_ccx(hw: &HardwareProfile) -> Circuit {
    let x = |a, b| Instruction::xx(PI / 4.0, a, b, hw);
    let rx = |t, q| Instruction::rx(t, q, hw);
    let ry = |t, q| Instruction::ry(t, q, hw);
    let mut c = Circuit::new(3);
    c.extend([
        ry(PI / 2.0, 0),
        ry(PI / 2.0, 1),
        ry(PI / 2.0, 2),
        rx(PI / 4.0, 0),
        x(1, 2),
        rx(PI / 4.0, 1),
        rx(-PI / 2.0, 2),
        rz(PI / 4.0, 2),
        x(0, 2),
        rx(-PI / 2.0, 2),
        rz(-PI / 4.0, 2),
        x(1, 2),
        ry(PI / 2.0, 1),
        rx(-PI / 2.0, 2),
        rz(PI / 4.0, 2),
        x(0, 2),
        x(0, 1),
        rx(-PI / 2.0, 1),
        ry(-PI / 4.0, 2),
        rz(PI / 4.0, 1),
        rz(-PI / 2.0, 2),
        x(0, 1),
        ry(-PI / 2.0, 0),
        rx(PI / 2.0, 1),
    ]);
    c
}

/// Multi-controlled Z on `qubits` as a Gray-code phase polynomial:
/// `pi x_0...x_{k-1}` expands into parities, each parity is computed onto
/// its highest qubit with CX ladders and phased with `R_z^1`.
pub fn mcz(qubits: &[usize], hw: &HardwareProfile) -> Vec<Instruction> {
    let m = qubits.len();
    let scale = PI / (1u64 << (m - 1)) as f64;
    let mut v = Vec::new();
    for k in 0..m {
        let target = qubits[k];
        let mut prev = 0usize;
        for i in 0..1usize << k {
            let gray = i ^ (i >> 1);
            if i > 0 {
                let b = (gray ^ prev).trailing_zeros() as usize;
                v.extend(cx(qubits[b], target, hw));
            }
            let size = gray.count_ones() + 1;
            let sign = if size % 2 == 1 { 1.0 } else { -1.0 };
            v.push(rz(sign * scale, target));
            prev = gray;
        }
        if k > 0 {
            v.extend(cx(qubits[k - 1], target, hw));
        }
    }
    v
}

/// Ancilla-free `C^{n-1}X` (target = qubit `n-1`) with `2^n - 2` XX gates.
pub fn qubit_cnx(n: usize, hw: &HardwareProfile) -> Result<Circuit> {
    if !(3..=QUBIT_CNX_MAX).contains(&n) {
        return arg(format!("qubit C^(n-1)X supports 3 <= n <= {QUBIT_CNX_MAX}, got {n}"));
    }
    let qubits: Vec<usize> = (0..n).collect();
    let mut c = Circuit::new(n);
    c.push(Instruction::ry(-PI / 2.0, n - 1, hw));
    c.extend(mcz(&qubits, hw));
    c.push(Instruction::ry(PI / 2.0, n - 1, hw));
    Ok(c)
}
