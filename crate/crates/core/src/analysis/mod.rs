//! Experiments and metrics: truth-table fidelity, leakage scans and fits,
//! the Ramsey phase calibration, Grover search error and bootstrap
//! uncertainties.

mod fit;

use std::fmt::Write as _;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposer::{
    basis_prep, bits_of, calibration_circuit, grover3, qubit_cnx, qutrit_toffoli, PhaseCalibration, Probe,
    ToffoliOptions, ToffoliVariant, XxTildeTruth,
};
use crate::error::{arg, Result};
use crate::gates::{Circuit, GateKind, HardwareProfile, Instruction};
use crate::noise::{derive_seed, NoiseProfile, Simulator};
use crate::readout::{bitstring, estimate_confusion, ConfusionMatrix};
use crate::sim::{QuditState, QutritRegister};

pub use fit::{fit_leakage, fit_ramsey, wrap, LeakPoint, LeakageFit, RamseyFit};

/// Shots per input when none is given.
pub const DEFAULT_SHOTS: usize = 2048;
pub const DEFAULT_RESAMPLES: usize = 1000;

const TRUTH_STREAM: u64 = 0x7454_0000_0000_0000;
const GROVER_STREAM: u64 = 0x6752_0000_0000_0000;
const RAMSEY_STREAM: u64 = 0x5241_0000_0000_0000;
const BOOT_STREAM: u64 = 0xB007_0000_0000_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Qubit,
    Qutrit,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Self::Qubit => "qubit",
            Self::Qutrit => "qutrit",
        }
    }
}

/// The `C^{n-1}X` circuit of a family, ending in its readout (double
/// readout for qutrits).
pub fn toffoli_circuit(family: Family, n: usize, stash_idle: bool, hw: &HardwareProfile) -> Result<Circuit> {
    match family {
        Family::Qutrit => qutrit_toffoli(&ToffoliOptions {
            n,
            stash_idle,
            emit_leak_measure: true,
            hardware: hw.clone(),
        }),
        Family::Qubit => {
            let mut c = qubit_cnx(n, hw)?;
            c.push(Instruction::measure_main(hw));
            Ok(c)
        }
    }
}

/// Correct `C^{n-1}X` output for input bits `x` (target = last bit).
pub fn toffoli_output(x: u32, n: usize) -> u32 {
    let controls = (1u32 << (n - 1)) - 1;
    if x >> 1 == controls {
        x ^ 1
    } else {
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruthTableOptions {
    pub shots: usize,
    pub postselect: bool,
    /// Shots per prepared state for the confusion matrix; 0 skips SPAM
    /// correction.
    pub confusion_shots: usize,
    pub resamples: usize,
    pub stash_idle: bool,
}

impl Default for TruthTableOptions {
    fn default() -> Self {
        Self {
            shots: DEFAULT_SHOTS,
            postselect: false,
            confusion_shots: DEFAULT_SHOTS,
            resamples: DEFAULT_RESAMPLES,
            stash_idle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostSelected {
    pub f_x: Vec<f64>,
    pub f_tt: f64,
    pub f_tt_sigma: f64,
    pub kept_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTableResult {
    pub n: usize,
    pub shots: usize,
    pub xx_count: usize,
    /// Frequency of the correct output for each input, in input order.
    pub f_x: Vec<f64>,
    pub f_tt: f64,
    pub f_tt_sigma: f64,
    /// Fraction of shots per input with a leak flag.
    pub leak_x: Vec<f64>,
    pub f_x_corrected: Option<Vec<f64>>,
    pub f_tt_corrected: Option<f64>,
    pub f_tt_corrected_sigma: Option<f64>,
    pub postselected: Option<PostSelected>,
}

impl TruthTableResult {
    pub fn mean_leak(&self) -> f64 {
        self.leak_x.iter().sum::<f64>() / self.leak_x.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("input,expected,f_x,f_x_corrected,f_x_postselected,leak\n");
        for (x, f) in self.f_x.iter().enumerate() {
            let corr = self.f_x_corrected.as_ref().map_or(String::new(), |v| v[x].to_string());
            let ps = self.postselected.as_ref().map_or(String::new(), |p| p.f_x[x].to_string());
            let _ = writeln!(
                s,
                "{},{},{f},{corr},{ps},{}",
                bitstring(x as u32, self.n),
                bitstring(toffoli_output(x as u32, self.n), self.n),
                self.leak_x[x]
            );
        }
        s
    }
}

/// Per-input outcome tallies.
#[derive(Debug, Clone, Default)]
struct InputCounts {
    /// Nonzero `(outcome, count)` pairs, sorted by outcome.
    outcomes: Vec<(u32, u64)>,
    correct: u64,
    leaked: u64,
    kept: u64,
    kept_correct: u64,
}

fn tally(records: &[crate::noise::ShotRecord], want: u32) -> InputCounts {
    let mut c = InputCounts::default();
    let mut outs: Vec<u32> = records.iter().map(|r| r.outcome).collect();
    outs.sort_unstable();
    for chunk in outs.chunk_by(|a, b| a == b) {
        c.outcomes.push((chunk[0], chunk.len() as u64));
    }
    for r in records {
        let ok = r.outcome == want;
        c.correct += ok as u64;
        if r.leaked != 0 {
            c.leaked += 1;
        } else {
            c.kept += 1;
            c.kept_correct += ok as u64;
        }
    }
    c
}

/// Strip a trailing final measurement, returning whether it was the
/// double readout.
fn split_measure(circuit: &Circuit) -> (Circuit, bool) {
    let ins = circuit.instructions();
    match ins.last() {
        Some(last) if last.kind.is_final_measure() => (
            Circuit::from_instructions(circuit.n(), ins[..ins.len() - 1].to_vec()),
            last.kind == GateKind::MeasureLeak,
        ),
        _ => (circuit.clone(), false),
    }
}

fn run_inputs(
    circuit: &Circuit,
    shots: usize,
    profile: &NoiseProfile,
    hw: &HardwareProfile,
) -> Result<(Vec<InputCounts>, bool)> {
    if shots == 0 {
        return arg("shots must be at least 1");
    }
    let n = circuit.n();
    if n < 3 {
        return arg(format!("truth tables need n >= 3, got {n}"));
    }
    let (body, leak) = split_measure(circuit);
    let mut out = Vec::with_capacity(1 << n);
    for x in 0..1usize << n {
        let mut c = Circuit::new(n);
        c.extend(basis_prep(&bits_of(x, n), true, hw)?);
        c.append(&body);
        c.push(if leak { Instruction::measure_leak(hw) } else { Instruction::measure_main(hw) });
        let sim = Simulator::new(&c, profile, hw)?;
        let records = sim.run(TRUTH_STREAM | ((n as u64) << 32) | x as u64, 0..shots as u64);
        out.push(tally(&records, toffoli_output(x as u32, n)));
    }
    Ok((out, leak))
}

/// Truth table of the family's `C^{n-1}X` under `profile`.
pub fn truth_table_experiment(
    family: Family,
    n: usize,
    opts: &TruthTableOptions,
    profile: &NoiseProfile,
    hw: &HardwareProfile,
) -> Result<TruthTableResult> {
    let c = toffoli_circuit(family, n, opts.stash_idle, hw)?;
    truth_table_for_circuit(&c, opts, profile, hw)
}

/// Truth table of an arbitrary `C^{n-1}X` circuit; its final measurement
/// (if any) selects the readout.
pub fn truth_table_for_circuit(
    circuit: &Circuit,
    opts: &TruthTableOptions,
    profile: &NoiseProfile,
    hw: &HardwareProfile,
) -> Result<TruthTableResult> {
    let n = circuit.n();
    let (counts, _) = run_inputs(circuit, opts.shots, profile, hw)?;
    let d = counts.len();
    let shots = opts.shots as f64;
    let f_x: Vec<f64> = counts.iter().map(|c| c.correct as f64 / shots).collect();
    let f_tt = mean(&f_x);
    let leak_x: Vec<f64> = counts.iter().map(|c| c.leaked as f64 / shots).collect();
    let seed = profile.master_seed;

    let f_tt_sigma = bootstrap_groups(
        &counts.iter().map(|c| vec![c.correct, opts.shots as u64 - c.correct]).collect::<Vec<_>>(),
        opts.resamples,
        derive_seed(seed, BOOT_STREAM | 1, n as u64),
        |g| g.iter().map(|v| v[0] as f64 / (v[0] + v[1]) as f64).sum::<f64>() / d as f64,
    );

    let (mut f_x_corrected, mut f_tt_corrected, mut f_tt_corrected_sigma) = (None, None, None);
    if opts.confusion_shots > 0 {
        let cm = estimate_confusion(n, profile, hw, opts.confusion_shots)?;
        let inv = cm.correction_matrix()?;
        let row = |x: usize| toffoli_output(x as u32, n) as usize * d;
        let corrected = |x: usize, outcomes: &[(u32, u64)], cnt: &[u64]| -> f64 {
            let total: u64 = cnt.iter().sum();
            outcomes.iter().zip(cnt).map(|(&(o, _), &k)| inv[row(x) + o as usize] * k as f64).sum::<f64>()
                / total as f64
        };
        let fx: Vec<f64> = counts
            .iter()
            .enumerate()
            .map(|(x, c)| corrected(x, &c.outcomes, &c.outcomes.iter().map(|o| o.1).collect::<Vec<_>>()))
            .collect();
        let groups: Vec<Vec<u64>> = counts.iter().map(|c| c.outcomes.iter().map(|o| o.1).collect()).collect();
        let sigma = bootstrap_groups(&groups, opts.resamples, derive_seed(seed, BOOT_STREAM | 2, n as u64), |g| {
            g.iter().enumerate().map(|(x, cnt)| corrected(x, &counts[x].outcomes, cnt)).sum::<f64>() / d as f64
        });
        f_tt_corrected = Some(mean(&fx));
        f_tt_corrected_sigma = Some(sigma);
        f_x_corrected = Some(fx);
    }

    let postselected = opts.postselect.then(|| {
        let ps = |c: &InputCounts| if c.kept == 0 { 0.0 } else { c.kept_correct as f64 / c.kept as f64 };
        let fx: Vec<f64> = counts.iter().map(ps).collect();
        let groups: Vec<Vec<u64>> =
            counts.iter().map(|c| vec![c.kept_correct, c.kept - c.kept_correct, c.leaked]).collect();
        let sigma = bootstrap_groups(&groups, opts.resamples, derive_seed(seed, BOOT_STREAM | 3, n as u64), |g| {
            g.iter().map(|v| if v[0] + v[1] == 0 { 0.0 } else { v[0] as f64 / (v[0] + v[1]) as f64 }).sum::<f64>()
                / d as f64
        });
        let kept: u64 = counts.iter().map(|c| c.kept).sum();
        PostSelected { f_tt: mean(&fx), f_x: fx, f_tt_sigma: sigma, kept_fraction: kept as f64 / (shots * d as f64) }
    });

    Ok(TruthTableResult {
        n,
        shots: opts.shots,
        xx_count: circuit.xx_count(),
        f_x,
        f_tt,
        f_tt_sigma,
        leak_x,
        f_x_corrected,
        f_tt_corrected,
        f_tt_corrected_sigma,
        postselected,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Multinomial resample of `counts` with the same total.
fn resample<R: rand::Rng + ?Sized>(counts: &[u64], rng: &mut R) -> Vec<u64> {
    let mut left: u64 = counts.iter().sum();
    let mut mass = left as f64;
    let mut out = Vec::with_capacity(counts.len());
    for &c in counts {
        let k = if left == 0 || c == 0 {
            0
        } else if c as f64 >= mass {
            left
        } else {
            Binomial::new(left, (c as f64 / mass).min(1.0)).expect("valid binomial").sample(rng)
        };
        out.push(k);
        left -= k;
        mass -= c as f64;
    }
    out
}

/// Standard deviation of `stat` over `resamples` multinomial resamples of
/// every group. Resample `r` is seeded from `(seed, r)` alone.
pub fn bootstrap_groups<F>(groups: &[Vec<u64>], resamples: usize, seed: u64, stat: F) -> f64
where
    F: Fn(&[Vec<u64>]) -> f64 + Sync,
{
    if resamples < 2 {
        return 0.0;
    }
    let values: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, BOOT_STREAM, r));
            let g: Vec<Vec<u64>> = groups.iter().map(|c| resample(c, &mut rng)).collect();
            stat(&g)
        })
        .collect();
    std_dev(&values)
}

/// Bootstrap 1-sigma of each category's frequency.
pub fn bootstrap_sigma(counts: &[u64], resamples: usize, seed: u64) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    (0..counts.len())
        .map(|k| bootstrap_groups(&[counts.to_vec()], resamples, seed, |g| g[0][k] as f64 / total as f64))
        .collect()
}

/// Mean leak probability for each register size, on qutrit Toffolis.
/// `shots_per_n` is spread evenly over the `2^N` inputs (at least one each).
pub fn leak_scan(
    ns: &[usize],
    shots_per_n: usize,
    stash_idle: bool,
    profile: &NoiseProfile,
    hw: &HardwareProfile,
) -> Result<Vec<LeakPoint>> {
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        let c = toffoli_circuit(Family::Qutrit, n, stash_idle, hw)?;
        let per = shots_per_n.div_ceil(1 << n).max(1);
        let (counts, _) = run_inputs(&c, per, profile, hw)?;
        let leak: Vec<f64> = counts.iter().map(|c| c.leaked as f64 / per as f64).collect();
        let m = mean(&leak);
        let total = (per << n) as f64;
        out.push(LeakPoint { n, mean: m, spread: std_dev(&leak), sigma: (m * (1.0 - m) / total).sqrt() });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub marked: [u8; 2],
    /// Counts of the two search-qubit bits `00, 01, 10, 11`.
    pub counts: [u64; 4],
    pub p_correct: f64,
    pub kept: Option<u64>,
    pub p_correct_postselected: Option<f64>,
    pub counts_postselected: Option<[u64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroverResult {
    pub variant: ToffoliVariant,
    pub shots: usize,
    pub oracles: Vec<OracleResult>,
    pub p_err: f64,
    pub p_err_postselected: Option<f64>,
    pub postselected_fraction: Option<f64>,
}

/// All four Grover oracles for one Toffoli variant. The mid-measure
/// variant also reports results post-selected on no mid-circuit detection.
pub fn grover_experiment(
    variant: ToffoliVariant,
    shots: usize,
    profile: &NoiseProfile,
    hw: &HardwareProfile,
) -> Result<GroverResult> {
    if shots == 0 {
        return arg("shots must be at least 1");
    }
    let mid = variant == ToffoliVariant::QutritMidmeasure;
    let mut oracles = Vec::with_capacity(4);
    for (k, marked) in [[0, 0], [0, 1], [1, 0], [1, 1]].into_iter().enumerate() {
        let c = grover3(marked, variant, hw)?;
        let sim = Simulator::new(&c, profile, hw)?;
        let stream = GROVER_STREAM | ((variant as u64) << 8) | k as u64;
        let records = sim.run(stream, 0..shots as u64);
        let want = (marked[0] as usize) << 1 | marked[1] as usize;
        let mut counts = [0u64; 4];
        let mut kept_counts = [0u64; 4];
        for r in &records {
            let s = (r.outcome >> 1) as usize & 3;
            counts[s] += 1;
            if !r.mid_flag {
                kept_counts[s] += 1;
            }
        }
        let kept: u64 = kept_counts.iter().sum();
        oracles.push(OracleResult {
            marked,
            counts,
            p_correct: counts[want] as f64 / shots as f64,
            kept: mid.then_some(kept),
            p_correct_postselected: mid.then(|| if kept == 0 { 0.0 } else { kept_counts[want] as f64 / kept as f64 }),
            counts_postselected: mid.then_some(kept_counts),
        });
    }
    let p_err = 1.0 - oracles.iter().map(|o| o.p_correct).sum::<f64>() / 4.0;
    let p_err_postselected =
        mid.then(|| 1.0 - oracles.iter().filter_map(|o| o.p_correct_postselected).sum::<f64>() / 4.0);
    let postselected_fraction =
        mid.then(|| oracles.iter().filter_map(|o| o.kept).sum::<u64>() as f64 / (4 * shots) as f64);
    Ok(GroverResult { variant, shots, oracles, p_err, p_err_postselected, postselected_fraction })
}

/// Evenly spaced analysis phases over one period.
pub fn ramsey_phases(points: usize) -> Vec<f64> {
    (0..points).map(|k| 2.0 * PI * k as f64 / points as f64).collect()
}

/// Exact `P(|2>)` of the probe ion for each analysis phase.
pub fn ramsey_scan_exact(phis: &[f64], truth: XxTildeTruth, probe: Probe, hw: &HardwareProfile) -> Result<Vec<f64>> {
    let q = match probe {
        Probe::A => 0,
        Probe::B => 1,
    };
    phis.iter()
        .map(|&phi| {
            let (body, _) = split_measure(&calibration_circuit(phi, truth, probe, hw));
            let mut s = QutritRegister::zero(2)?;
            for (g, t) in body.unitary_steps()? {
                s.apply(&g, &t)?;
            }
            Ok(s.level_populations(q)[2])
        })
        .collect()
}

/// Sampled `P(|2>)` of the probe from the leak flags of the double readout.
pub fn ramsey_scan_sampled(
    phis: &[f64],
    truth: XxTildeTruth,
    probe: Probe,
    shots: usize,
    profile: &NoiseProfile,
    hw: &HardwareProfile,
) -> Result<Vec<f64>> {
    if shots == 0 {
        return arg("shots must be at least 1");
    }
    let bit = match probe {
        Probe::A => 1,
        Probe::B => 0,
    };
    phis.iter()
        .enumerate()
        .map(|(k, &phi)| {
            let sim = Simulator::new(&calibration_circuit(phi, truth, probe, hw), profile, hw)?;
            let stream = RAMSEY_STREAM | ((probe as u64) << 16) | k as u64;
            let hits = sim.run(stream, 0..shots as u64).iter().filter(|r| (r.leaked >> bit) & 1 == 1).count();
            Ok(hits as f64 / shots as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub truth: XxTildeTruth,
    pub phis: Vec<f64>,
    pub p2_a: Vec<f64>,
    pub p2_b: Vec<f64>,
    pub fit_a: RamseyFit,
    pub fit_b: RamseyFit,
    pub chi_a: f64,
    pub chi_b: f64,
}

impl CalibrationReport {
    pub fn calibration(&self) -> PhaseCalibration {
        PhaseCalibration { chi_a: vec![self.chi_a], chi_b: vec![self.chi_b] }
    }
}

/// Ramsey scans on both ions and the recovered single-ion phases.
/// `shots = None` uses exact populations.
pub fn calibrate_phases(
    truth: XxTildeTruth,
    points: usize,
    shots: Option<usize>,
    profile: &NoiseProfile,
    hw: &HardwareProfile,
) -> Result<CalibrationReport> {
    let phis = ramsey_phases(points);
    let scan = |probe| match shots {
        None => ramsey_scan_exact(&phis, truth, probe, hw),
        Some(s) => ramsey_scan_sampled(&phis, truth, probe, s, profile, hw),
    };
    let p2_a = scan(Probe::A)?;
    let p2_b = scan(Probe::B)?;
    let fit_a = fit_ramsey(&phis, &p2_a)?;
    let fit_b = fit_ramsey(&phis, &p2_b)?;
    Ok(CalibrationReport {
        truth,
        chi_a: fit_a.acquired_phase(),
        chi_b: fit_b.acquired_phase(),
        phis,
        p2_a,
        p2_b,
        fit_a,
        fit_b,
    })
}

/// Confusion matrix plus its condition number, for reporting.
pub fn confusion_report(cm: &ConfusionMatrix) -> (f64, bool) {
    let c = cm.condition_number();
    (c, c <= crate::readout::CONDITION_LIMIT)
}
