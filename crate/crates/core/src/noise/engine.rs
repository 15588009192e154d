use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{apply_crosstalk, apply_dephasing, apply_idle_decay, apply_xx_error, NoiseProfile};
use crate::error::{Error, Result};
use crate::gates::{legality_check, r_0j, Circuit, GateKind, HardwareProfile};
use crate::readout::{leak_readout, main_readout, mid2_half};
use crate::sim::{GateMatrix, QuditState, SparseRegister};

/// Outcome of one trajectory. Bit masks put qutrit 0 in the most
/// significant of `n` bits; a set outcome bit means the ion read dark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub n: usize,
    pub outcome: u32,
    /// Ions flagged by the double readout (always 0 for `MEASURE_MAIN`).
    pub leaked: u32,
    /// A mid-circuit detection saw a bright ion.
    pub mid_flag: bool,
    pub trajectory_seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trajectory `shot` in `stream`. Depends only on the three
/// inputs, so results do not depend on how shots are spread over threads.
pub fn derive_seed(master: u64, stream: u64, shot: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ shot)
}

#[derive(Debug, Clone)]
enum Op {
    Single { gate: GateMatrix, targets: Vec<usize>, duration: f64, crosstalk: Option<(f64, f64)> },
    Pair { gate: GateMatrix, a: usize, b: usize, duration: f64 },
    Mid { duration: f64 },
    Final { leak: bool },
    Wait { duration: f64 },
}

/// A circuit compiled against a noise profile, ready to run trajectories.
#[derive(Debug, Clone)]
pub struct Simulator {
    n: usize,
    ops: Vec<Op>,
    watched: Vec<bool>,
    profile: NoiseProfile,
}

struct Trajectory {
    t: f64,
    last: Vec<f64>,
    frozen: Vec<bool>,
}

impl Simulator {
    pub fn new(circuit: &Circuit, profile: &NoiseProfile, hw: &HardwareProfile) -> Result<Self> {
        profile.validate()?;
        hw.validate()?;
        let violations = legality_check(circuit, hw);
        if !violations.is_empty() {
            return Err(Error::Illegal(violations));
        }
        let n = circuit.n();
        if n > 20 {
            return Err(Error::Capability(format!("outcome masks hold at most 20 qutrits, got {n}")));
        }
        let over = if profile.enabled.amplitude_error { 1.0 + profile.amplitude_error } else { 1.0 };
        let mut watched = vec![profile.discard_all_ions; n];
        let mut ops = Vec::with_capacity(circuit.len());
        for ins in circuit.instructions() {
            let duration = ins.duration_s;
            let op = match ins.kind {
                GateKind::R0j => {
                    let p = &ins.params;
                    let (j, theta, phi) = (p.j.unwrap_or(1), p.theta.unwrap_or(0.0) * over, p.phi.unwrap_or(0.0));
                    let crosstalk = (j == 1 && !ins.is_global()).then_some((theta, phi));
                    Op::Single { gate: r_0j(j, theta, phi)?, targets: ins.touched(n), duration, crosstalk }
                }
                GateKind::Rzj => {
                    let gate = ins.gate()?.expect("RZJ is a gate");
                    Op::Single { gate, targets: ins.touched(n), duration, crosstalk: None }
                }
                GateKind::Xx | GateKind::XxTilde => {
                    let gate = ins.gate()?.expect("XX is a gate");
                    Op::Pair { gate, a: ins.targets[0], b: ins.targets[1], duration }
                }
                GateKind::MeasureMid2 => Op::Mid { duration },
                GateKind::MeasureMain => Op::Final { leak: false },
                GateKind::MeasureLeak => Op::Final { leak: true },
                GateKind::Barrier => Op::Wait { duration },
            };
            if !ins.is_global() {
                ins.targets.iter().for_each(|&q| watched[q] = true);
            }
            ops.push(op);
        }
        if !matches!(ops.last(), Some(Op::Final { .. })) {
            ops.push(Op::Final { leak: false });
        }
        Ok(Self { n, ops, watched, profile: profile.clone() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn profile(&self) -> &NoiseProfile {
        &self.profile
    }

    /// Trajectory `shot` of `stream`, seeded from the profile's master seed.
    pub fn shot(&self, stream: u64, shot: u64) -> ShotRecord {
        let seed = derive_seed(self.profile.master_seed, stream, shot);
        let state = SparseRegister::zero(self.n).expect("size checked in new");
        self.run_on(state, seed)
    }

    /// Run one trajectory from `state` (normally `|0...0>`).
    pub fn run_on<S: QuditState>(&self, mut state: S, seed: u64) -> ShotRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prof = &self.profile;
        let mut tr = Trajectory { t: 0.0, last: vec![0.0; self.n], frozen: vec![false; self.n] };
        let mut mid_flag = false;
        let mut record = ShotRecord { n: self.n, outcome: 0, leaked: 0, mid_flag: false, trajectory_seed: seed };
        for op in &self.ops {
            match op {
                Op::Single { gate, targets, duration, crosstalk } => {
                    for &q in targets {
                        if tr.frozen[q] {
                            continue;
                        }
                        self.flush(&mut state, &mut tr, q, &mut rng);
                        state.apply_1q(gate, q);
                        if let (Some((theta, phi)), true) = (crosstalk, prof.enabled.crosstalk) {
                            for k in [q.wrapping_sub(1), q + 1] {
                                if k < self.n && !tr.frozen[k] {
                                    self.flush(&mut state, &mut tr, k, &mut rng);
                                }
                            }
                            let frozen = &tr.frozen;
                            apply_crosstalk(&mut state, q, *theta, *phi, &|k| frozen[k], prof, &mut rng);
                        }
                    }
                    tr.t += duration;
                }
                Op::Pair { gate, a, b, duration } => {
                    self.flush(&mut state, &mut tr, *a, &mut rng);
                    self.flush(&mut state, &mut tr, *b, &mut rng);
                    state.apply_2q(gate, *a, *b);
                    tr.t += duration;
                    let leaked = apply_xx_error(&mut state, (*a, *b), prof, &mut rng);
                    if leaked[0] {
                        tr.frozen[*a] = true;
                    }
                    if leaked[1] {
                        tr.frozen[*b] = true;
                    }
                }
                Op::Mid { duration } => {
                    self.flush_all(&mut state, &mut tr, &mut rng);
                    mid_flag |= mid2_half(&mut state, prof, &tr.frozen, &self.watched, &mut rng);
                    tr.t += duration;
                }
                Op::Final { leak } => {
                    self.flush_all(&mut state, &mut tr, &mut rng);
                    if *leak {
                        let (bits, leaked) = leak_readout(&mut state, prof, &mut rng);
                        record.outcome = bits;
                        record.leaked = leaked;
                    } else {
                        record.outcome = main_readout(&mut state, prof, &mut rng).0;
                    }
                    break;
                }
                Op::Wait { duration } => tr.t += duration,
            }
        }
        record.mid_flag = mid_flag;
        record
    }

    fn flush<S: QuditState>(&self, state: &mut S, tr: &mut Trajectory, q: usize, rng: &mut ChaCha8Rng) {
        let dt = tr.t - tr.last[q];
        tr.last[q] = tr.t;
        if dt <= 0.0 || tr.frozen[q] {
            return;
        }
        let prof = &self.profile;
        if prof.enabled.decay {
            apply_idle_decay(state, q, dt, prof, rng);
        }
        if prof.enabled.dephasing {
            apply_dephasing(state, q, dt, prof, rng);
        }
    }

    fn flush_all<S: QuditState>(&self, state: &mut S, tr: &mut Trajectory, rng: &mut ChaCha8Rng) {
        for q in 0..self.n {
            self.flush(state, tr, q, rng);
        }
    }

    /// Shots `range` of `stream`, in order, spread over the rayon pool.
    pub fn run(&self, stream: u64, shots: std::ops::Range<u64>) -> Vec<ShotRecord> {
        shots.into_par_iter().map(|s| self.shot(stream, s)).collect()
    }
}

/// Run `n_shots` trajectories of `circuit`. Shot `i` uses the seed
/// `derive_seed(profile.master_seed, stream, i)`.
pub fn run_shots(
    circuit: &Circuit,
    profile: &NoiseProfile,
    hw: &HardwareProfile,
    n_shots: usize,
    stream: u64,
) -> Result<Vec<ShotRecord>> {
    let sim = Simulator::new(circuit, profile, hw)?;
    Ok(sim.run(stream, 0..n_shots as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposer::{basis_prep, bits_of, qutrit_toffoli, ToffoliOptions};
    use crate::gates::Instruction;
    use crate::noise::Channels;
    use crate::sim::QutritRegister;

    fn prepared_toffoli(n: usize, x: usize, hw: &HardwareProfile) -> Circuit {
        let mut c = Circuit::new(n);
        c.extend(basis_prep(&bits_of(x, n), false, hw).unwrap());
        c.append(&qutrit_toffoli(&ToffoliOptions::new(n)).unwrap());
        c.push(Instruction::measure_main(hw));
        c
    }

    #[test]
    fn noiseless_toffoli_is_deterministic() {
        let hw = HardwareProfile::default();
        for x in 0..8 {
            let c = prepared_toffoli(3, x, &hw);
            let want = if x >= 6 { x ^ 1 } else { x } as u32;
            for r in run_shots(&c, &NoiseProfile::noiseless(), &hw, 20, 0).unwrap() {
                assert_eq!(r.outcome, want);
            }
        }
    }

    #[test]
    fn seeds_reproduce_and_differ() {
        let hw = HardwareProfile::default();
        let c = prepared_toffoli(4, 13, &hw);
        let p = NoiseProfile { master_seed: 7, ..NoiseProfile::default() };
        let a = run_shots(&c, &p, &hw, 300, 1).unwrap();
        let b = run_shots(&c, &p, &hw, 300, 1).unwrap();
        assert_eq!(a, b);
        let sim = Simulator::new(&c, &p, &hw).unwrap();
        assert_eq!(sim.shot(1, 123), a[123]);
        let other = run_shots(&c, &NoiseProfile { master_seed: 8, ..p.clone() }, &hw, 300, 1).unwrap();
        assert_ne!(a, other);
        assert_ne!(derive_seed(0, 0, 1), derive_seed(0, 1, 0));
    }

    #[test]
    fn dense_and_sparse_agree() {
        let hw = HardwareProfile::default();
        let c = prepared_toffoli(3, 7, &hw);
        let sim = Simulator::new(&c, &NoiseProfile::default(), &hw).unwrap();
        for s in 0..200 {
            let seed = derive_seed(0, 9, s);
            let a = sim.run_on(SparseRegister::zero(3).unwrap(), seed);
            let b = sim.run_on(QutritRegister::zero(3).unwrap(), seed);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn illegal_circuit_rejected() {
        let hw = HardwareProfile::default();
        let c = Circuit::from_instructions(2, vec![Instruction::rot(2, 1.0, 0.0, 0, &hw)]);
        assert!(matches!(run_shots(&c, &NoiseProfile::noiseless(), &hw, 1, 0), Err(Error::Illegal(_))));
    }

    #[test]
    fn leaked_ion_is_flagged() {
        let hw = HardwareProfile::default();
        let mut enabled = Channels::all(false);
        enabled.leakage = true;
        let p = NoiseProfile { xx_leak_prob: 1.0, enabled, ..NoiseProfile::default() };
        let mut c = Circuit::new(2);
        c.push(Instruction::xx(0.3, 0, 1, &hw));
        c.push(Instruction::global_rot(2, std::f64::consts::PI, 0.0, &hw));
        c.push(Instruction::measure_leak(&hw));
        for r in run_shots(&c, &p, &hw, 50, 0).unwrap() {
            assert_eq!((r.outcome, r.leaked), (0b11, 0b11));
        }
    }
}
