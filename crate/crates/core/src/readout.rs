//! Shelving readout models, confusion matrices, SPAM correction and
//! post-selection.
//!
//! Bit convention: an ion that fluoresces ("bright") reads `0`, a dark ion
//! reads `1`. Outcomes are packed into integers with qutrit 0 as the most
//! significant of `n` bits.

use std::fmt::Write as _;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::gates::{r_0j, Circuit, HardwareProfile, Instruction};
use crate::noise::{run_shots, NoiseProfile, ShotRecord};
use crate::sim::QuditState;
use crate::C64;

/// Condition number above which [`spam_correct`] refuses to invert.
pub const CONDITION_LIMIT: f64 = 1e6;

/// Largest register for which a `2^n x 2^n` confusion matrix is built.
pub const MAX_CONFUSION_QUBITS: usize = 12;

fn flip<R: Rng + ?Sized>(dark: bool, profile: &NoiseProfile, rng: &mut R) -> bool {
    let p = if dark { profile.flip_dark() } else { profile.flip_bright() };
    if p > 0.0 && rng.random::<f64>() < p {
        !dark
    } else {
        dark
    }
}

fn pack(bits: impl Iterator<Item = bool>) -> u32 {
    bits.fold(0, |acc, b| (acc << 1) | b as u32)
}

/// Main shelving readout: Born-sample the trits, map `0` to bright and
/// `1`, `2` to dark, then apply per-ion misassignment. The state is left
/// projected onto the sampled trits.
pub fn main_readout<S: QuditState, R: Rng + ?Sized>(state: &mut S, profile: &NoiseProfile, rng: &mut R) -> (u32, Vec<u8>) {
    let trits = collapse(state, rng);
    let bits = pack(trits.iter().map(|&t| flip(t != 0, profile, rng)));
    (bits, trits)
}

fn collapse<S: QuditState, R: Rng + ?Sized>(state: &mut S, rng: &mut R) -> Vec<u8> {
    let trits = state.sample_digits(rng);
    let z = C64::new(0.0, 0.0);
    for (q, &t) in trits.iter().enumerate() {
        let mut d = [z; 3];
        d[t as usize] = C64::new(1.0, 0.0);
        state.scale_levels(q, d);
    }
    state.renormalize();
    trits
}

/// Double readout. The first stage is the main readout; before the second,
/// the shelved `|2>` population is returned to a bright state while `|1>`
/// stays dark. An ion reading dark then bright is flagged as leaked.
pub fn leak_readout<S: QuditState, R: Rng + ?Sized>(state: &mut S, profile: &NoiseProfile, rng: &mut R) -> (u32, u32) {
    let trits = collapse(state, rng);
    let stage1: Vec<bool> = trits.iter().map(|&t| flip(t != 0, profile, rng)).collect();
    let stage2: Vec<bool> = trits.iter().map(|&t| flip(t == 1, profile, rng)).collect();
    let bits = pack(stage1.iter().copied());
    let leaked = pack(stage1.iter().zip(&stage2).map(|(&d1, &d2)| d1 && !d2));
    (bits, leaked)
}

/// One half of the mid-circuit `|2>` detection: `|2>` fluoresces, `|0>` and
/// `|1>` are preserved but `|1>` picks up the Stark phase. Ions in `frozen`
/// have left the computational levels and always fluoresce. Returns whether
/// any ion in `watched` was bright.
pub fn mid2_half<S: QuditState, R: Rng + ?Sized>(
    state: &mut S,
    profile: &NoiseProfile,
    frozen: &[bool],
    watched: &[bool],
    rng: &mut R,
) -> bool {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let mut bright = false;
    for q in 0..state.num_qutrits() {
        if frozen[q] {
            bright |= watched[q];
            continue;
        }
        let p2 = state.level_populations(q)[2];
        let is_bright = p2 > crate::noise::NEGLIGIBLE && rng.random::<f64>() < p2;
        if is_bright {
            state.scale_levels(q, [z, z, one]);
            bright |= watched[q];
        } else {
            let phase = if profile.enabled.stark { C64::from_polar(1.0, profile.stark_phase) } else { one };
            state.scale_levels(q, [one, phase, z]);
        }
        state.renormalize();
    }
    bright
}

/// Complete mid-circuit detection on every ion, optionally with the
/// dynamical-decoupling sandwich (`R_x^{01}(pi)` between the halves,
/// `R_x^{01}(-pi)` after). Returns whether any ion was bright.
pub fn midcircuit_measure2<S: QuditState, R: Rng + ?Sized>(
    state: &mut S,
    profile: &NoiseProfile,
    dd: bool,
    rng: &mut R,
) -> bool {
    let n = state.num_qutrits();
    let frozen = vec![false; n];
    let watched = vec![true; n];
    let mut bright = mid2_half(state, profile, &frozen, &watched, rng);
    if dd {
        let x = r_0j(1, PI, 0.0).expect("j=1");
        (0..n).for_each(|q| state.apply_1q(&x, q));
    }
    bright |= mid2_half(state, profile, &frozen, &watched, rng);
    if dd {
        let x = r_0j(1, -PI, 0.0).expect("j=1");
        (0..n).for_each(|q| state.apply_1q(&x, q));
    }
    bright
}

/// Quasi-probability vector over `2^n` bitstrings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub n: usize,
    pub values: Vec<f64>,
}

impl Distribution {
    pub fn from_counts(n: usize, counts: &[u64]) -> Result<Self> {
        if counts.len() != 1 << n {
            return arg(format!("expected {} counts, got {}", 1usize << n, counts.len()));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return arg("no shots to build a distribution from");
        }
        Ok(Self { n, values: counts.iter().map(|&c| c as f64 / total as f64).collect() })
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bitstring,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{},{v}", bitstring(i as u32, self.n));
        }
        s
    }
}

pub fn bitstring(bits: u32, n: usize) -> String {
    (0..n).map(|q| if (bits >> (n - 1 - q)) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Column-stochastic confusion matrix, entry `(i, j) = P(read i | prepared j)`.
///
/// A matrix recorded with one row per prepared state is the transpose of
/// this one, which is why the correction is often quoted as `(C^T)^{-1}`
/// in that layout; in this layout it is `C^{-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub n: usize,
    pub shots_per_state: u64,
    /// Row-major `2^n x 2^n`.
    pub matrix: Vec<f64>,
}

impl ConfusionMatrix {
    pub fn identity(n: usize) -> Self {
        let d = 1usize << n;
        let mut matrix = vec![0.0; d * d];
        (0..d).for_each(|i| matrix[i * d + i] = 1.0);
        Self { n, shots_per_state: 0, matrix }
    }

    /// From `counts[j][i]` = times `i` was read after preparing `j`.
    pub fn from_counts(n: usize, counts: &[Vec<u64>]) -> Result<Self> {
        let d = 1usize << n;
        if counts.len() != d || counts.iter().any(|c| c.len() != d) {
            return arg(format!("confusion counts must be {d} x {d}"));
        }
        let mut matrix = vec![0.0; d * d];
        let mut shots = 0;
        for (j, col) in counts.iter().enumerate() {
            let total: u64 = col.iter().sum();
            if total == 0 {
                return arg(format!("no shots for prepared state {j}"));
            }
            shots = shots.max(total);
            for (i, &c) in col.iter().enumerate() {
                matrix[i * d + j] = c as f64 / total as f64;
            }
        }
        Ok(Self { n, shots_per_state: shots, matrix })
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, read: usize, prepared: usize) -> f64 {
        self.matrix[read * self.dim() + prepared]
    }

    fn as_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.matrix)
    }

    /// 2-norm condition number.
    pub fn condition_number(&self) -> f64 {
        let sv = self.as_matrix().singular_values();
        let max = sv.max();
        let min = sv.min();
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// `C^{-1}`, row-major; fails when the condition number exceeds the limit.
    pub fn correction_matrix(&self) -> Result<Vec<f64>> {
        let cond = self.condition_number();
        if !(cond <= CONDITION_LIMIT) {
            return Err(Error::IllConditioned { condition: cond, limit: CONDITION_LIMIT });
        }
        let inv = self
            .as_matrix()
            .try_inverse()
            .ok_or(Error::IllConditioned { condition: f64::INFINITY, limit: CONDITION_LIMIT })?;
        let d = self.dim();
        Ok((0..d * d).map(|k| inv[(k / d, k % d)]).collect())
    }

    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut s = format!("# n={},shots_per_state={}\n", self.n, self.shots_per_state);
        for i in 0..d {
            let row: Vec<String> = (0..d).map(|j| self.get(i, j).to_string()).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty confusion CSV".into()))?;
        let mut n = None;
        let mut shots = 0;
        for kv in header.trim_start_matches('#').trim().split(',') {
            match kv.split_once('=') {
                Some(("n", v)) => n = v.parse().ok(),
                Some(("shots_per_state", v)) => shots = v.parse().map_err(|_| Error::Parse(format!("bad shots {v}")))?,
                _ => return Err(Error::Parse(format!("unexpected header field {kv}"))),
            }
        }
        let n: usize = n.ok_or_else(|| Error::Parse("header lacks n".into()))?;
        let mut matrix = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            for v in line.split(',') {
                matrix.push(v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad entry {v}")))?);
            }
        }
        if matrix.len() != (1 << n) * (1 << n) {
            return Err(Error::Parse(format!("expected {} entries, got {}", (1usize << (2 * n)), matrix.len())));
        }
        Ok(Self { n, shots_per_state: shots, matrix })
    }
}

/// Prepare every computational basis state (SK1 pulses) and read it out.
pub fn estimate_confusion(
    n: usize,
    profile: &NoiseProfile,
    hw: &HardwareProfile,
    shots_per_state: usize,
) -> Result<ConfusionMatrix> {
    if n == 0 || n > MAX_CONFUSION_QUBITS {
        return arg(format!("confusion matrix supports 1 <= n <= {MAX_CONFUSION_QUBITS}, got {n}"));
    }
    if shots_per_state == 0 {
        return arg("shots_per_state must be positive");
    }
    let d = 1usize << n;
    let mut counts = vec![vec![0u64; d]; d];
    for (j, col) in counts.iter_mut().enumerate() {
        let mut c = Circuit::new(n);
        c.extend(crate::decomposer::basis_prep(&crate::decomposer::bits_of(j, n), true, hw)?);
        c.push(Instruction::measure_main(hw));
        for r in run_shots(&c, profile, hw, shots_per_state, confusion_stream(n, j))? {
            col[r.outcome as usize] += 1;
        }
    }
    ConfusionMatrix::from_counts(n, &counts)
}

fn confusion_stream(n: usize, j: usize) -> u64 {
    0xC0F0_0000_0000_0000 | ((n as u64) << 32) | j as u64
}

/// Apply the SPAM correction `C^{-1}` to a measured distribution. Entries
/// may become negative; they are not clipped.
pub fn spam_correct(dist: &Distribution, cm: &ConfusionMatrix) -> Result<Distribution> {
    if dist.n != cm.n {
        return arg(format!("distribution on {} qubits, confusion matrix on {}", dist.n, cm.n));
    }
    let inv = cm.correction_matrix()?;
    Ok(Distribution { n: dist.n, values: apply_square(&inv, &dist.values) })
}

pub(crate) fn apply_square(m: &[f64], v: &[f64]) -> Vec<f64> {
    let d = v.len();
    (0..d).map(|i| (0..d).map(|j| m[i * d + j] * v[j]).sum()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostSelect {
    /// Drop shots with any final leak flag.
    LeakFlags,
    /// Drop shots with a bright mid-circuit detection.
    MidCircuit,
}

pub fn keep_shot(r: &ShotRecord, mode: PostSelect) -> bool {
    match mode {
        PostSelect::LeakFlags => r.leaked == 0,
        PostSelect::MidCircuit => !r.mid_flag,
    }
}

/// Kept records and the kept fraction.
pub fn post_select(records: &[ShotRecord], mode: PostSelect) -> Result<(Vec<ShotRecord>, f64)> {
    if records.is_empty() {
        return arg("post-selection over zero shots");
    }
    let kept: Vec<ShotRecord> = records.iter().filter(|r| keep_shot(r, mode)).cloned().collect();
    let frac = kept.len() as f64 / records.len() as f64;
    Ok((kept, frac))
}
