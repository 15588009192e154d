use std::fmt::Write as _;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{r_0j, rz_j, xx, xx_tilde};
use crate::error::{arg, Error, Result};
use crate::sim::GateMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "R0J")]
    R0j,
    #[serde(rename = "RZJ")]
    Rzj,
    #[serde(rename = "XX")]
    Xx,
    #[serde(rename = "XXTILDE")]
    XxTilde,
    #[serde(rename = "BARRIER")]
    Barrier,
    #[serde(rename = "MEASURE_MAIN")]
    MeasureMain,
    #[serde(rename = "MEASURE_LEAK")]
    MeasureLeak,
    #[serde(rename = "MEASURE_MID2")]
    MeasureMid2,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::R0j => "R0J",
            GateKind::Rzj => "RZJ",
            GateKind::Xx => "XX",
            GateKind::XxTilde => "XXTILDE",
            GateKind::Barrier => "BARRIER",
            GateKind::MeasureMain => "MEASURE_MAIN",
            GateKind::MeasureLeak => "MEASURE_LEAK",
            GateKind::MeasureMid2 => "MEASURE_MID2",
        }
    }

    pub fn is_final_measure(self) -> bool {
        matches!(self, GateKind::MeasureMain | GateKind::MeasureLeak)
    }

    pub fn is_two_qutrit(self) -> bool {
        matches!(self, GateKind::Xx | GateKind::XxTilde)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_b: Option<f64>,
}

/// Addressing capabilities and gate durations (seconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardwareProfile {
    pub individual_02_control: bool,
    pub t_pi_01: f64,
    pub t_pi_02: f64,
    pub t_xx: f64,
    pub t_readout: f64,
    pub t_mid_half: f64,
}

impl Default for HardwareProfile {
    fn default() -> Self {
        Self {
            individual_02_control: false,
            t_pi_01: 10e-6,
            t_pi_02: 10e-6,
            t_xx: 916e-6,
            t_readout: 0.5e-3,
            t_mid_half: 0.25e-3,
        }
    }
}

impl HardwareProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_pi_01", self.t_pi_01),
            ("t_pi_02", self.t_pi_02),
            ("t_xx", self.t_xx),
            ("t_readout", self.t_readout),
            ("t_mid_half", self.t_mid_half),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return arg(format!("hardware duration {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// One IR instruction. Empty `targets` means global (all qutrits).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instruction {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub params: Params,
    pub duration_s: f64,
}

fn pulse_duration(j: u8, theta: f64, hw: &HardwareProfile) -> f64 {
    let t_pi = if j == 2 { hw.t_pi_02 } else { hw.t_pi_01 };
    theta.abs() / PI * t_pi
}

impl Instruction {
    /// Individually addressed `R^{0j}_phi(theta)`.
    pub fn rot(j: u8, theta: f64, phi: f64, target: usize, hw: &HardwareProfile) -> Self {
        Self {
            kind: GateKind::R0j,
            targets: vec![target],
            params: Params { j: Some(j), theta: Some(theta), phi: Some(phi), ..Params::default() },
            duration_s: pulse_duration(j, theta, hw),
        }
    }

    /// Global `R^{0j}_phi(theta)` on every ion.
    pub fn global_rot(j: u8, theta: f64, phi: f64, hw: &HardwareProfile) -> Self {
        Self { targets: Vec::new(), ..Self::rot(j, theta, phi, 0, hw) }
    }

    pub fn rx(theta: f64, target: usize, hw: &HardwareProfile) -> Self {
        Self::rot(1, theta, 0.0, target, hw)
    }

    pub fn ry(theta: f64, target: usize, hw: &HardwareProfile) -> Self {
        Self::rot(1, theta, PI / 2.0, target, hw)
    }

    /// Virtual `R^j_z(theta)`; `None` target means global.
    pub fn rz(j: u8, theta: f64, target: Option<usize>) -> Self {
        Self {
            kind: GateKind::Rzj,
            targets: target.into_iter().collect(),
            params: Params { j: Some(j), theta: Some(theta), ..Params::default() },
            duration_s: 0.0,
        }
    }

    pub fn xx(chi: f64, a: usize, b: usize, hw: &HardwareProfile) -> Self {
        Self {
            kind: GateKind::Xx,
            targets: vec![a, b],
            params: Params { chi: Some(chi), ..Params::default() },
            duration_s: hw.t_xx,
        }
    }

    pub fn xx_tilde(chi: f64, chi_a: f64, chi_b: f64, a: usize, b: usize, hw: &HardwareProfile) -> Self {
        Self {
            kind: GateKind::XxTilde,
            targets: vec![a, b],
            params: Params { chi: Some(chi), chi_a: Some(chi_a), chi_b: Some(chi_b), ..Params::default() },
            duration_s: hw.t_xx,
        }
    }

    pub fn barrier() -> Self {
        Self::bare(GateKind::Barrier, 0.0)
    }

    pub fn measure_main(hw: &HardwareProfile) -> Self {
        Self::bare(GateKind::MeasureMain, hw.t_readout)
    }

    /// Double readout: main shelving readout followed by the leak stage.
    pub fn measure_leak(hw: &HardwareProfile) -> Self {
        Self::bare(GateKind::MeasureLeak, 2.0 * hw.t_readout)
    }

    /// One half of the mid-circuit `|2>` detection.
    pub fn measure_mid2(hw: &HardwareProfile) -> Self {
        Self::bare(GateKind::MeasureMid2, hw.t_mid_half)
    }

    fn bare(kind: GateKind, duration_s: f64) -> Self {
        Self { kind, targets: Vec::new(), params: Params::default(), duration_s }
    }

    pub fn is_global(&self) -> bool {
        self.targets.is_empty()
    }

    /// Qutrits the instruction acts on in an `n`-qutrit register.
    pub fn touched(&self, n: usize) -> Vec<usize> {
        if self.targets.is_empty() {
            (0..n).collect()
        } else {
            self.targets.clone()
        }
    }

    fn missing(&self, what: &str) -> Error {
        Error::Argument(format!("{} instruction is missing parameter {what}", self.kind.name()))
    }

    /// Unitary of a gate instruction; `None` for barriers and measurements.
    pub fn gate(&self) -> Result<Option<GateMatrix>> {
        let p = &self.params;
        let j = || p.j.ok_or_else(|| self.missing("j"));
        let theta = || p.theta.ok_or_else(|| self.missing("theta"));
        let chi = || p.chi.ok_or_else(|| self.missing("chi"));
        Ok(Some(match self.kind {
            GateKind::R0j => r_0j(j()?, theta()?, p.phi.ok_or_else(|| self.missing("phi"))?)?,
            GateKind::Rzj => rz_j(j()?, theta()?)?,
            GateKind::Xx => xx(chi()?),
            GateKind::XxTilde => xx_tilde(
                chi()?,
                p.chi_a.ok_or_else(|| self.missing("chi_a"))?,
                p.chi_b.ok_or_else(|| self.missing("chi_b"))?,
            ),
            _ => return Ok(None),
        }))
    }

    /// Inverse gate instruction (same targets and duration).
    pub fn inverse(&self) -> Result<Self> {
        let mut out = self.clone();
        let neg = |x: &mut Option<f64>| {
            if let Some(v) = x {
                *v = -*v;
            }
        };
        match self.kind {
            GateKind::R0j | GateKind::Rzj => neg(&mut out.params.theta),
            GateKind::Xx => neg(&mut out.params.chi),
            GateKind::XxTilde => {
                neg(&mut out.params.chi);
                neg(&mut out.params.chi_a);
                neg(&mut out.params.chi_b);
            }
            GateKind::Barrier => {}
            k => return arg(format!("{} has no inverse", k.name())),
        }
        Ok(out)
    }

    fn label(&self) -> String {
        let p = &self.params;
        let f = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.4}"));
        match self.kind {
            GateKind::R0j => format!("R0{}({}, {})", p.j.unwrap_or(0), f(p.theta), f(p.phi)),
            GateKind::Rzj => format!("Rz{}({})", p.j.unwrap_or(0), f(p.theta)),
            GateKind::Xx => format!("XX({})", f(p.chi)),
            GateKind::XxTilde => format!("XX~({}, {}, {})", f(p.chi), f(p.chi_a), f(p.chi_b)),
            k => k.name().to_string(),
        }
    }
}

/// Ordered instruction list on an `n`-qutrit register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circuit {
    n: usize,
    instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Self { n, instructions: Vec::new() }
    }

    pub fn from_instructions(n: usize, instructions: Vec<Instruction>) -> Self {
        Self { n, instructions }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn push(&mut self, instr: Instruction) {
        self.instructions.push(instr);
    }

    pub fn extend(&mut self, instrs: impl IntoIterator<Item = Instruction>) {
        self.instructions.extend(instrs);
    }

    pub fn append(&mut self, other: &Circuit) {
        self.instructions.extend_from_slice(&other.instructions);
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.instructions.iter().filter(|i| i.kind == kind).count()
    }

    /// Entangling-gate count (XX and XX~).
    pub fn xx_count(&self) -> usize {
        self.instructions.iter().filter(|i| i.kind.is_two_qutrit()).count()
    }

    pub fn total_duration(&self) -> f64 {
        self.instructions.iter().map(|i| i.duration_s).sum()
    }

    /// Reversed, parameter-negated circuit. Fails on measurements.
    pub fn dagger(&self) -> Result<Circuit> {
        let instructions = self.instructions.iter().rev().map(Instruction::inverse).collect::<Result<_>>()?;
        Ok(Self { n: self.n, instructions })
    }

    /// Gate matrices with explicit targets; global instructions are
    /// expanded to every qutrit and barriers dropped.
    pub fn unitary_steps(&self) -> Result<Vec<(GateMatrix, Vec<usize>)>> {
        let mut out = Vec::new();
        for (k, ins) in self.instructions.iter().enumerate() {
            if ins.kind == GateKind::Barrier {
                continue;
            }
            let Some(g) = ins.gate()? else {
                return arg(format!("instruction {k} ({}) is not unitary", ins.kind.name()));
            };
            if ins.targets.iter().any(|&t| t >= self.n) {
                return arg(format!("instruction {k} targets a qutrit outside 0..{}", self.n));
            }
            if ins.kind.is_two_qutrit() {
                out.push((g, ins.targets.clone()));
            } else {
                for q in ins.touched(self.n) {
                    out.push((g.clone(), vec![q]));
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Graphviz rendering of the dependency DAG (edges follow each qutrit wire).
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph circuit {\n  rankdir=LR;\n  node [shape=box, fontname=\"monospace\"];\n");
        let mut last: Vec<Option<String>> = vec![None; self.n];
        for q in 0..self.n {
            let _ = writeln!(s, "  in{q} [label=\"q{q}\", shape=plaintext];");
            last[q] = Some(format!("in{q}"));
        }
        for (k, ins) in self.instructions.iter().enumerate() {
            let tg = if ins.is_global() {
                "all".to_string()
            } else {
                ins.targets.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
            };
            let _ = writeln!(s, "  g{k} [label=\"{} @{tg}\"];", ins.label());
            for q in ins.touched(self.n) {
                if let Some(prev) = last.get_mut(q) {
                    if let Some(p) = prev.replace(format!("g{k}")) {
                        let _ = writeln!(s, "  {p} -> g{k} [label=\"q{q}\"];");
                    }
                }
            }
        }
        s.push_str("}\n");
        s
    }
}
