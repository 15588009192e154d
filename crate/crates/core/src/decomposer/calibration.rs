//! XX~ phase correction and the Ramsey-type phase calibration circuit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{Circuit, GateKind, HardwareProfile, Instruction};

/// Residual single-ion phases per XX instance (in circuit order).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseCalibration {
    pub chi_a: Vec<f64>,
    pub chi_b: Vec<f64>,
}

impl PhaseCalibration {
    pub fn get(&self, k: usize) -> Result<(f64, f64)> {
        match (self.chi_a.get(k), self.chi_b.get(k)) {
            (Some(&a), Some(&b)) if a.is_finite() && b.is_finite() => Ok((a, b)),
            _ => Err(Error::MissingCalibration(k)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionVariant {
    /// `R_x^{01}(pi)`, `R^{01}_{-chi}(-pi)`, `R_z^1(2 chi)` on each ion.
    Full,
    /// One virtual `R_z^2(-chi)` per ion; needs individual `|2>` control.
    Simplified,
}

/// Replace every `XX(chi)` by the hardware `XX~(chi, chi_a, chi_b)` plus
/// per-ion corrections. The variant follows `profile.individual_02_control`.
pub fn expand_xxtilde(circuit: &Circuit, calib: &PhaseCalibration, profile: &HardwareProfile) -> Result<Circuit> {
    let variant = if profile.individual_02_control { CorrectionVariant::Simplified } else { CorrectionVariant::Full };
    expand_xxtilde_with(circuit, calib, profile, variant)
}

pub fn expand_xxtilde_with(
    circuit: &Circuit,
    calib: &PhaseCalibration,
    profile: &HardwareProfile,
    variant: CorrectionVariant,
) -> Result<Circuit> {
    let mut out = Circuit::new(circuit.n());
    let mut k = 0;
    for ins in circuit.instructions() {
        if ins.kind != GateKind::Xx {
            out.push(ins.clone());
            continue;
        }
        let (ca, cb) = calib.get(k)?;
        k += 1;
        let chi = ins.params.chi.ok_or_else(|| Error::Argument("XX instruction without chi".into()))?;
        let (a, b) = (ins.targets[0], ins.targets[1]);
        out.push(Instruction::xx_tilde(chi, ca, cb, a, b, profile));
        for (q, c) in [(a, ca), (b, cb)] {
            match variant {
                CorrectionVariant::Full => out.extend([
                    Instruction::rx(PI, q, profile),
                    Instruction::rot(1, -PI, -c, q, profile),
                    Instruction::rz(1, 2.0 * c, Some(q)),
                ]),
                CorrectionVariant::Simplified => out.push(Instruction::rz(2, -c, Some(q))),
            }
        }
    }
    Ok(out)
}

/// Which ion of the pair carries the Ramsey superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    A,
    B,
}

/// Phases the simulated hardware XX~ actually applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XxTildeTruth {
    pub chi: f64,
    pub chi_a: f64,
    pub chi_b: f64,
}

/// Two-ion Ramsey circuit: probe in `(|0> - i|2>)/sqrt2`, partner in `|2>`,
/// then `XX~(pi/2)`, a global analysing `R^{02}_phi(-pi/2)` and the double
/// readout. `P(|2>)` on the probe is `(1 - cos(phi - chi_probe)) / 2`.
pub fn calibration_circuit(phi: f64, truth: XxTildeTruth, probe: Probe, hw: &HardwareProfile) -> Circuit {
    let p = match probe {
        Probe::A => 0,
        Probe::B => 1,
    };
    let mut c = Circuit::new(2);
    c.extend(calibration_prefix(p, hw));
    c.push(Instruction::xx_tilde(truth.chi, truth.chi_a, truth.chi_b, 0, 1, hw));
    c.push(Instruction::global_rot(2, -PI / 2.0, phi, hw));
    c.push(Instruction::measure_leak(hw));
    c
}

pub(crate) fn calibration_prefix(probe: usize, hw: &HardwareProfile) -> Vec<Instruction> {
    vec![
        Instruction::rx(PI, probe, hw),
        Instruction::global_rot(2, PI / 2.0, 0.0, hw),
        Instruction::rx(-PI, probe, hw),
        Instruction::global_rot(2, PI / 2.0, 0.0, hw),
    ]
}
