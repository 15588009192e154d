use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{qubit, qutrit_toffoli, ToffoliOptions};
use crate::error::{arg, Result};
use crate::gates::{Circuit, HardwareProfile, Instruction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToffoliVariant {
    Qubit,
    Qutrit,
    QutritMidmeasure,
}

impl ToffoliVariant {
    pub const ALL: [ToffoliVariant; 3] = [Self::Qubit, Self::Qutrit, Self::QutritMidmeasure];

    pub fn name(self) -> &'static str {
        match self {
            Self::Qubit => "qubit",
            Self::Qutrit => "qutrit",
            Self::QutritMidmeasure => "qutrit_midmeasure",
        }
    }
}

/// Single-iteration Grover search over qubits 0 and 1 for the marked
/// string `s = (s0, s1)`, with qubit 2 as the `|->` phase-kickback target.
/// Ends with the final readout.
pub fn grover3(s: [u8; 2], variant: ToffoliVariant, hw: &HardwareProfile) -> Result<Circuit> {
    if s.iter().any(|&b| b > 1) {
        return arg(format!("marked string must be two bits, got {s:?}"));
    }
    let ry = |t, q| Instruction::ry(t, q, hw);
    let rx = |t, q| Instruction::rx(t, q, hw);
    let mut c = Circuit::new(3);
    c.extend([ry(PI / 2.0, 0), ry(PI / 2.0, 1), ry(-PI / 2.0, 2)]);

    let flips: Vec<usize> = (0..2).filter(|&q| s[q] == 0).collect();
    c.extend(flips.iter().map(|&q| rx(PI, q)));
    let toffoli = match variant {
        ToffoliVariant::Qubit => qubit::qubit_ccx(hw),
        _ => qutrit_toffoli(&ToffoliOptions { hardware: hw.clone(), ..ToffoliOptions::new(3) })?,
    };
    c.append(&toffoli);
    if variant == ToffoliVariant::QutritMidmeasure {
        c.push(Instruction::measure_mid2(hw));
        c.extend((0..3).map(|q| rx(PI, q)));
        c.push(Instruction::measure_mid2(hw));
        c.extend((0..3).map(|q| rx(-PI, q)));
    }
    c.extend(flips.iter().map(|&q| rx(-PI, q)));

    // diffusion: A^dag, reflect about |00>, A
    c.extend([ry(-PI / 2.0, 0), ry(-PI / 2.0, 1), rx(PI, 0), rx(PI, 1)]);
    c.extend(qubit::mcz(&[0, 1], hw));
    c.extend([rx(-PI, 0), rx(-PI, 1), ry(PI / 2.0, 0), ry(PI / 2.0, 1)]);

    c.push(ry(PI / 2.0, 2));
    c.push(Instruction::measure_main(hw));
    Ok(c)
}
