//! Stochastic error channels and the Monte-Carlo trajectory engine.
//!
//! Every channel acts on a [`QuditState`] trajectory and keeps it
//! normalised. Idle channels are applied lazily per qutrit (see
//! [`engine`]), which is exact because they commute with operations on
//! other qutrits.

mod engine;
mod schedule;

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::gates::{qubit_paulis, r_0j};
use crate::sim::{GateMatrix, QuditState};
use crate::C64;

pub use engine::{derive_seed, run_shots, ShotRecord, Simulator};
pub use schedule::{schedule, ScheduledCircuit, ScheduledInstruction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrosstalkMode {
    /// Full pi flip of the spectator with probability `sin^2(eps theta / 2)`.
    Stochastic,
    /// Spectator rotated by `eps * theta` about the same axis.
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Channels {
    pub decay: bool,
    pub dephasing: bool,
    pub depolarizing: bool,
    pub leakage: bool,
    pub crosstalk: bool,
    pub spam: bool,
    pub stark: bool,
    pub amplitude_error: bool,
}

impl Default for Channels {
    fn default() -> Self {
        Self::all(true)
    }
}

impl Channels {
    pub fn all(on: bool) -> Self {
        Self {
            decay: on,
            dephasing: on,
            depolarizing: on,
            leakage: on,
            crosstalk: on,
            spam: on,
            stark: on,
            amplitude_error: on,
        }
    }
}

/// Error-channel parameters. Times in seconds, rates as probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseProfile {
    pub t1: f64,
    pub t2_star: f64,
    /// Bell-state fidelity of one `XX(pi/4)`; sets the two-qubit depolarizing rate.
    pub xx_fidelity: f64,
    /// Probability per ion per XX of leaving the computational levels.
    pub xx_leak_prob: f64,
    /// Fraction of `|1>` decays that end in `|0>` (the rest go to `|2>`).
    pub decay_branch_to_0: f64,
    pub crosstalk_ratio: f64,
    pub crosstalk_mode: CrosstalkMode,
    /// Probability that a bright ion is read dark.
    pub spam_flip: f64,
    /// Probability that a dark ion is read bright; defaults to `spam_flip`.
    pub spam_flip_dark: Option<f64>,
    /// Readout-laser Stark phase on `|1>` per mid-circuit half.
    pub stark_phase: f64,
    /// Relative over-rotation of every `R^{0j}` pulse.
    pub amplitude_error: f64,
    /// Mid-circuit discard looks at every ion (otherwise only touched ones).
    pub discard_all_ions: bool,
    pub enabled: Channels,
    pub master_seed: u64,
}

impl Default for NoiseProfile {
    fn default() -> Self {
        Self {
            t1: 53e-3,
            t2_star: 31e-3,
            xx_fidelity: 0.963,
            xx_leak_prob: 0.015,
            decay_branch_to_0: 0.5,
            crosstalk_ratio: 0.02,
            crosstalk_mode: CrosstalkMode::Stochastic,
            spam_flip: 0.01,
            spam_flip_dark: None,
            stark_phase: 0.7,
            amplitude_error: 0.0,
            discard_all_ions: true,
            enabled: Channels::default(),
            master_seed: 0,
        }
    }
}

impl NoiseProfile {
    /// Every channel off: runs reduce to ideal Born sampling.
    pub fn noiseless() -> Self {
        Self { enabled: Channels::all(false), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("t1", self.t1), ("t2_star", self.t2_star)] {
            if !(v > 0.0) {
                return arg(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("xx_fidelity", self.xx_fidelity),
            ("xx_leak_prob", self.xx_leak_prob),
            ("decay_branch_to_0", self.decay_branch_to_0),
            ("spam_flip", self.spam_flip),
            ("spam_flip_dark", self.spam_flip_dark.unwrap_or(0.0)),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return arg(format!("{name} must be a probability, got {v}"));
            }
        }
        if !(0.0..1.0).contains(&self.crosstalk_ratio) {
            return arg(format!("crosstalk_ratio must be in [0, 1), got {}", self.crosstalk_ratio));
        }
        if self.depolarizing_prob() > 1.0 {
            return arg(format!("xx_fidelity {} too low for a depolarizing model (min 0.2)", self.xx_fidelity));
        }
        if !self.stark_phase.is_finite() || !self.amplitude_error.is_finite() {
            return arg("stark_phase and amplitude_error must be finite");
        }
        Ok(())
    }

    /// Two-qubit depolarizing probability giving Bell fidelity `xx_fidelity`:
    /// three of the fifteen Paulis stabilise the Bell state.
    pub fn depolarizing_prob(&self) -> f64 {
        (1.0 - self.xx_fidelity) * 15.0 / 12.0
    }

    pub fn flip_bright(&self) -> f64 {
        if self.enabled.spam {
            self.spam_flip
        } else {
            0.0
        }
    }

    pub fn flip_dark(&self) -> f64 {
        if self.enabled.spam {
            self.spam_flip_dark.unwrap_or(self.spam_flip)
        } else {
            0.0
        }
    }
}

/// Populations below this are rounding residue of exact pulses.
pub(crate) const NEGLIGIBLE: f64 = 1e-24;

static PAULIS: OnceLock<[GateMatrix; 4]> = OnceLock::new();

fn permutation(map: [usize; 3]) -> GateMatrix {
    let mut m = vec![C64::new(0.0, 0.0); 9];
    for (col, &row) in map.iter().enumerate() {
        m[row * 3 + col] = C64::new(1.0, 0.0);
    }
    GateMatrix::new(1, m).expect("permutation is unitary")
}

fn project<S: QuditState + ?Sized>(state: &mut S, q: usize, keep: [bool; 3]) {
    let d = keep.map(|k| C64::new(if k { 1.0 } else { 0.0 }, 0.0));
    state.scale_levels(q, d);
    state.renormalize();
}

/// Spontaneous decay of `|1>` over an idle interval `dt`. Returns whether a
/// jump happened.
pub fn apply_idle_decay<S: QuditState + ?Sized, R: Rng + ?Sized>(
    state: &mut S,
    q: usize,
    dt: f64,
    profile: &NoiseProfile,
    rng: &mut R,
) -> bool {
    if dt <= 0.0 {
        return false;
    }
    let p1 = state.level_populations(q)[1];
    if p1 <= NEGLIGIBLE {
        return false;
    }
    let gamma = 1.0 - (-dt / profile.t1).exp();
    if rng.random::<f64>() < p1 * gamma {
        project(state, q, [false, true, false]);
        let to = if rng.random::<f64>() < profile.decay_branch_to_0 { 0 } else { 2 };
        let map = if to == 0 { [1, 0, 2] } else { [0, 2, 1] };
        state.apply_1q(&permutation(map), q);
        true
    } else {
        let keep = (-dt / (2.0 * profile.t1)).exp();
        let one = C64::new(1.0, 0.0);
        state.scale_levels(q, [one, C64::new(keep, 0.0), one]);
        state.renormalize();
        false
    }
}

/// Random `R_z^1` phase with variance `2 dt / T2*`.
pub fn apply_dephasing<S: QuditState + ?Sized, R: Rng + ?Sized>(
    state: &mut S,
    q: usize,
    dt: f64,
    profile: &NoiseProfile,
    rng: &mut R,
) {
    if dt <= 0.0 {
        return;
    }
    let sigma = (2.0 * dt / profile.t2_star).sqrt();
    let phi = Normal::new(0.0, sigma).expect("finite sigma").sample(rng);
    let one = C64::new(1.0, 0.0);
    state.scale_levels(q, [one, C64::from_polar(1.0, phi), one]);
}

/// Collapse qutrit `q` onto a level and move it to `|2>`. The engine then
/// freezes the ion, so it stays outside the computational levels.
pub fn apply_leak<S: QuditState + ?Sized, R: Rng + ?Sized>(state: &mut S, q: usize, rng: &mut R) {
    let p = state.level_populations(q);
    let total: f64 = p.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut level = 2;
    for (k, &pk) in p.iter().enumerate() {
        if u < pk {
            level = k;
            break;
        }
        u -= pk;
    }
    let mut keep = [false; 3];
    keep[level] = true;
    project(state, q, keep);
    match level {
        0 => state.apply_1q(&permutation([2, 1, 0]), q),
        1 => state.apply_1q(&permutation([0, 2, 1]), q),
        _ => {}
    }
}

/// Depolarizing and leakage after an XX on `(a, b)`. Returns which of the
/// two ions leaked.
pub fn apply_xx_error<S: QuditState + ?Sized, R: Rng + ?Sized>(
    state: &mut S,
    pair: (usize, usize),
    profile: &NoiseProfile,
    rng: &mut R,
) -> [bool; 2] {
    if profile.enabled.depolarizing && rng.random::<f64>() < profile.depolarizing_prob() {
        let k = 1 + rng.random_range(0..15usize);
        let paulis = PAULIS.get_or_init(qubit_paulis);
        let (pa, pb) = (k / 4, k % 4);
        if pa != 0 {
            state.apply_1q(&paulis[pa], pair.0);
        }
        if pb != 0 {
            state.apply_1q(&paulis[pb], pair.1);
        }
    }
    let mut leaked = [false; 2];
    if profile.enabled.leakage {
        for (i, q) in [pair.0, pair.1].into_iter().enumerate() {
            if rng.random::<f64>() < profile.xx_leak_prob {
                apply_leak(state, q, rng);
                leaked[i] = true;
            }
        }
    }
    leaked
}

/// Cross-talk of an individually addressed `R^{01}_phi(theta)` on ion
/// `target` onto its chain neighbours. Returns the ions that were hit.
pub fn apply_crosstalk<S: QuditState + ?Sized, R: Rng + ?Sized>(
    state: &mut S,
    target: usize,
    theta: f64,
    phi: f64,
    skip: &dyn Fn(usize) -> bool,
    profile: &NoiseProfile,
    rng: &mut R,
) -> Vec<usize> {
    let eps = profile.crosstalk_ratio;
    let n = state.num_qutrits();
    let mut hit = Vec::new();
    if eps == 0.0 {
        return hit;
    }
    for k in [target.wrapping_sub(1), target + 1] {
        if k >= n || skip(k) {
            continue;
        }
        match profile.crosstalk_mode {
            CrosstalkMode::Stochastic => {
                if rng.random::<f64>() < (eps * theta / 2.0).sin().powi(2) {
                    state.apply_1q(&r_0j(1, PI, phi).expect("j=1"), k);
                    hit.push(k);
                }
            }
            CrosstalkMode::Coherent => {
                state.apply_1q(&r_0j(1, eps * theta, phi).expect("j=1"), k);
                hit.push(k);
            }
        }
    }
    hit
}
