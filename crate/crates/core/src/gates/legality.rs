use std::fmt;

use serde::Serialize;

use super::{Circuit, GateKind, HardwareProfile};

/// One addressing or structural rule broken by an instruction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub kind: GateKind,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {}: {}", self.index, self.kind.name(), self.reason)
    }
}

/// All violations of the addressing rules; empty iff the circuit is legal.
///
/// The `|0>-|2>` transition is driven by a global microwave field, so
/// `R^{02}` and `R_z^{0}`, `R_z^{2}` must be global unless the profile
/// grants individual control.
pub fn legality_check(circuit: &Circuit, profile: &HardwareProfile) -> Vec<Violation> {
    let n = circuit.n();
    let mut out = Vec::new();
    let mut seen_final = false;
    for (index, ins) in circuit.instructions().iter().enumerate() {
        let mut bad = |reason: String| out.push(Violation { index, kind: ins.kind, reason });
        let t = &ins.targets;
        if let Some(&q) = t.iter().find(|&&q| q >= n) {
            bad(format!("target {q} outside register of {n}"));
        }
        if t.iter().enumerate().any(|(i, a)| t[..i].contains(a)) {
            bad("duplicate targets".into());
        }
        if !(ins.duration_s >= 0.0 && ins.duration_s.is_finite()) {
            bad(format!("invalid duration {}", ins.duration_s));
        }
        if let Err(e) = ins.gate() {
            bad(e.to_string());
        }
        for v in [ins.params.theta, ins.params.phi, ins.params.chi, ins.params.chi_a, ins.params.chi_b]
            .into_iter()
            .flatten()
        {
            if !v.is_finite() {
                bad("non-finite parameter".into());
            }
        }
        if seen_final {
            bad("instruction after final measurement".into());
        }
        let j = ins.params.j.unwrap_or(0);
        match ins.kind {
            GateKind::R0j if j == 1 => {
                if t.len() != 1 {
                    bad("R^{01} needs exactly one individually addressed target".into());
                }
            }
            GateKind::R0j | GateKind::Rzj if j == 2 || (ins.kind == GateKind::Rzj && j == 0) => {
                if profile.individual_02_control {
                    if t.len() > 1 {
                        bad("at most one target for an individually addressed 0-2 gate".into());
                    }
                } else if !t.is_empty() {
                    bad("0-2 transition is only driven globally on this hardware".into());
                }
            }
            GateKind::Rzj => {
                if t.len() > 1 {
                    bad("R_z^1 takes one target or none (global)".into());
                }
            }
            GateKind::Xx | GateKind::XxTilde => {
                if t.len() != 2 {
                    bad("entangling gate needs two distinct individual targets".into());
                }
            }
            GateKind::MeasureMain | GateKind::MeasureLeak => {
                if !t.is_empty() {
                    bad("final readout is register-wide".into());
                }
                seen_final = true;
            }
            GateKind::MeasureMid2 => {
                if !t.is_empty() {
                    bad("mid-circuit detection is register-wide".into());
                }
            }
            _ => {}
        }
    }
    out
}
