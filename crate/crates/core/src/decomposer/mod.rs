//! Circuit builders: the qutrit `C^{N-1}X`, qubit baselines, XX~ phase
//! correction, Ramsey calibration, basis preparation and Grover search.

mod calibration;
mod grover;
mod qubit;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::gates::{sk1, Circuit, HardwareProfile, Instruction};

pub use calibration::{
    calibration_circuit, expand_xxtilde, expand_xxtilde_with, CorrectionVariant, PhaseCalibration, Probe,
    XxTildeTruth,
};
pub use grover::{grover3, ToffoliVariant};
pub use qubit::{cx, mcz, qubit_ccx, qubit_cnx, QUBIT_CNX_MAX};

/// Largest register the qutrit Toffoli builder accepts.
pub const TOFFOLI_MAX: usize = crate::sim::MAX_QUTRITS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToffoliOptions {
    pub n: usize,
    /// Park idle qutrits outside `|1>` while they wait (T1 mitigation).
    pub stash_idle: bool,
    pub emit_leak_measure: bool,
    pub hardware: HardwareProfile,
}

impl ToffoliOptions {
    pub fn new(n: usize) -> Self {
        Self { n, stash_idle: true, emit_leak_measure: false, hardware: HardwareProfile::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 3 || self.n > TOFFOLI_MAX {
            return arg(format!("qutrit Toffoli needs 3 <= n <= {TOFFOLI_MAX}, got {}", self.n));
        }
        self.hardware.validate()
    }
}

fn check_pair(q1: usize, q2: usize, n: usize) -> Result<()> {
    if q2 != q1 + 1 || q2 >= n {
        return arg(format!("invalid neighbour pair ({q1}, {q2}) on {n} qutrits"));
    }
    Ok(())
}

/// Compute block `U1` on qutrits `(q1, q1+1)`: afterwards `q2` is in `|1>`
/// iff both inputs were `|1>`, with the other outcomes parked in `|0>`/`|2>`.
pub fn u1(q1: usize, q2: usize, opts: &ToffoliOptions) -> Result<Vec<Instruction>> {
    opts.validate()?;
    let n = opts.n;
    check_pair(q1, q2, n)?;
    let hw = &opts.hardware;
    let mut v = vec![
        Instruction::ry(-PI, q1, hw),
        Instruction::global_rot(2, -PI, 0.0, hw),
        Instruction::ry(PI, q1, hw),
    ];
    if opts.stash_idle {
        if q1 == 0 {
            v.extend((2..n).map(|q| Instruction::ry(PI, q, hw)));
        } else {
            v.push(Instruction::ry(-PI, q2, hw));
        }
    }
    v.push(Instruction::xx(PI / 2.0, q1, q2, hw));
    if q2 != n - 2 {
        v.push(Instruction::global_rot(2, PI, 0.0, hw));
    }
    Ok(v)
}

/// Final block `U2` on `(n-2, n-1)`: flips the target iff `q1` is `|1>`.
pub fn u2(q1: usize, q2: usize, opts: &ToffoliOptions) -> Result<Vec<Instruction>> {
    opts.validate()?;
    check_pair(q1, q2, opts.n)?;
    let hw = &opts.hardware;
    let mut v = Vec::with_capacity(11);
    if opts.stash_idle {
        v.push(Instruction::ry(-PI, q2, hw));
    }
    v.extend([
        Instruction::ry(-PI, q1, hw),
        Instruction::global_rot(2, PI, 0.0, hw),
        Instruction::ry(PI, q1, hw),
        Instruction::xx(PI / 2.0, q1, q2, hw),
        Instruction::rx(-PI, q2, hw),
        Instruction::rx(-PI, q1, hw),
        Instruction::ry(-PI, q1, hw),
        Instruction::global_rot(2, -PI, 0.0, hw),
        Instruction::ry(PI, q1, hw),
    ]);
    if opts.stash_idle {
        // An x-axis pulse here leaves a relative phase i on the target.
        v.push(Instruction::ry(PI, q2, hw));
    }
    Ok(v)
}

/// Qutrit `C^{N-1}X` with `2N-3` XX gates; controls are qutrits
/// `0..n-1`, the target is qutrit `n-1`.
pub fn qutrit_toffoli(opts: &ToffoliOptions) -> Result<Circuit> {
    opts.validate()?;
    let n = opts.n;
    let mut c = Circuit::new(n);
    let mut blocks = Vec::with_capacity(n - 2);
    for q in 0..n - 2 {
        let b = u1(q, q + 1, opts)?;
        c.extend(b.iter().cloned());
        blocks.push(b);
    }
    c.extend(u2(n - 2, n - 1, opts)?);
    for b in blocks.iter().rev() {
        for ins in b.iter().rev() {
            c.push(ins.inverse()?);
        }
    }
    if opts.emit_leak_measure {
        c.push(Instruction::measure_leak(&opts.hardware));
    }
    Ok(c)
}

/// `R^{01}_x(pi)` (bare or SK1) on every qutrit whose bit is set.
pub fn basis_prep(bits: &[u8], use_sk1: bool, hw: &HardwareProfile) -> Result<Vec<Instruction>> {
    let mut v = Vec::new();
    for (q, &b) in bits.iter().enumerate() {
        match b {
            0 => {}
            1 if use_sk1 => v.extend(sk1(PI, 0.0, q, hw)?),
            1 => v.push(Instruction::rx(PI, q, hw)),
            _ => return arg(format!("basis preparation takes bits, got {b} at position {q}")),
        }
    }
    Ok(v)
}

/// Bits of `x` as a length-`n` string, qutrit 0 = most significant.
pub fn bits_of(x: usize, n: usize) -> Vec<u8> {
    (0..n).map(|q| ((x >> (n - 1 - q)) & 1) as u8).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{legality_check, GateKind};
    use crate::sim::{
        basis_index, circuit_unitary, embedded_cnx_oracle, qubit_basis_index, QuditState, QutritRegister,
    };

    fn run(c: &Circuit, digits: &[u8]) -> QutritRegister {
        let mut s = QutritRegister::basis(digits).unwrap();
        for (g, t) in c.unitary_steps().unwrap() {
            match t.as_slice() {
                [q] => s.apply_1q(&g, *q),
                [a, b] => s.apply_2q(&g, *a, *b),
                _ => unreachable!(),
            }
        }
        s
    }

    fn opts(n: usize, stash: bool) -> ToffoliOptions {
        ToffoliOptions { stash_idle: stash, ..ToffoliOptions::new(n) }
    }

    #[test]
    fn u1_marks_and_condition() {
        let o = opts(3, false);
        let c = Circuit::from_instructions(3, u1(0, 1, &o).unwrap());
        assert_eq!(c.xx_count(), 1);
        for x in 0..8 {
            let bits = bits_of(x, 3);
            let s = run(&c, &bits);
            let p1 = s.level_populations(1)[1];
            let expect = if bits[0] == 1 && bits[1] == 1 { 1.0 } else { 0.0 };
            assert!((p1 - expect).abs() < 1e-12, "input {bits:?}: {p1}");
        }
        let mut full = c.clone();
        full.append(&c.dagger().unwrap());
        let u = circuit_unitary(&full, 3).unwrap();
        assert!(u.max_deviation_up_to_phase(&crate::sim::Operator::identity(3).unwrap()) < 1e-10);
    }

    #[test]
    fn u2_flips_on_control() {
        let o = opts(3, false);
        let body = u2(0, 1, &o).unwrap();
        let c = Circuit::from_instructions(2, body.clone());
        assert_eq!(c.xx_count(), 1);
        let globals = body.iter().filter(|i| i.kind == GateKind::R0j && i.params.j == Some(2) && i.is_global());
        assert_eq!(globals.count(), 2);
        // U2 runs after the last U1's global R^{02}_x(-pi), so a logical 0
        // on the target sits in |2> until U1^dag restores it
        let mut c = Circuit::new(2);
        c.push(Instruction::global_rot(2, -PI, 0.0, &o.hardware));
        c.extend(body);
        for (ctl, t) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
            let s = run(&c, &[ctl, t]);
            let want = if ctl == 1 { 1 - t } else { t };
            let level = if want == 0 { 2 } else { 1 };
            assert!((s.level_populations(1)[level] - 1.0).abs() < 1e-12, "{ctl}{t}");
        }
        let mut round = Circuit::from_instructions(2, u2(0, 1, &o).unwrap());
        round.append(&round.dagger().unwrap());
        let u = circuit_unitary(&round, 2).unwrap();
        assert!(u.max_deviation_up_to_phase(&crate::sim::Operator::identity(2).unwrap()) < 1e-10);
    }

    #[test]
    fn gate_count_law() {
        for n in 3..=12 {
            for stash in [true, false] {
                assert_eq!(qutrit_toffoli(&opts(n, stash)).unwrap().xx_count(), 2 * n - 3);
            }
        }
        assert!(qutrit_toffoli(&opts(2, true)).is_err());
    }

    #[test]
    fn legal_and_exact_small() {
        let hw = HardwareProfile::default();
        for n in 3..=5 {
            let oracle = embedded_cnx_oracle(n).unwrap();
            let q: Vec<usize> = (0..1 << n).map(|x| qubit_basis_index(x, n)).collect();
            for stash in [true, false] {
                let c = qutrit_toffoli(&opts(n, stash)).unwrap();
                assert!(legality_check(&c, &hw).is_empty());
                let u = circuit_unitary(&c, n).unwrap();
                let dev = crate::sim::phase_aligned_deviation(&u.restrict(&q), &oracle.restrict(&q));
                assert!(dev < 1e-9, "n={n} stash={stash}: {dev}");
            }
        }
    }

    #[test]
    fn uncompute_mirrors_compute() {
        let o = opts(5, true);
        let c = qutrit_toffoli(&o).unwrap();
        let head: usize = (0..3).map(|q| u1(q, q + 1, &o).unwrap().len()).sum();
        let ins = c.instructions();
        let tail = &ins[ins.len() - head..];
        for (a, b) in ins[..head].iter().zip(tail.iter().rev()) {
            assert_eq!(&a.inverse().unwrap(), b);
        }
    }

    #[test]
    fn toffoli_three_flips_target() {
        let c = qutrit_toffoli(&opts(3, true)).unwrap();
        let s = run(&c, &[1, 1, 0]);
        assert!((s.amplitude(&[1, 1, 1]).norm_sqr() - 1.0).abs() < 1e-10);
        assert!(s.leaked_population() < 1e-12);
        assert_eq!(basis_index(&[1, 1, 1]), 13);
    }

    #[test]
    fn basis_prep_fragments() {
        let hw = HardwareProfile::default();
        assert!(basis_prep(&[0, 0, 0], true, &hw).unwrap().is_empty());
        assert_eq!(basis_prep(&[1, 1, 1], false, &hw).unwrap().len(), 3);
        assert_eq!(basis_prep(&[1, 0, 1], true, &hw).unwrap().len(), 6);
        for sk in [true, false] {
            let c = Circuit::from_instructions(3, basis_prep(&[1, 0, 1], sk, &hw).unwrap());
            let s = run(&c, &[0, 0, 0]);
            assert!((s.amplitude(&[1, 0, 1]).norm_sqr() - 1.0).abs() < 1e-10);
        }
        assert!(basis_prep(&[2], false, &hw).is_err());
    }
}
