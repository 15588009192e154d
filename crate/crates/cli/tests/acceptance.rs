//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release -p qtk-cli --test acceptance`.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use qtk_core::analysis::{
    bootstrap_groups, bootstrap_sigma, calibrate_phases, fit_leakage, grover_experiment, leak_scan,
    truth_table_experiment, Family, TruthTableOptions,
};
use qtk_core::decomposer::{
    expand_xxtilde_with, grover3, qubit_ccx, qutrit_toffoli, CorrectionVariant, PhaseCalibration, ToffoliOptions,
    ToffoliVariant, XxTildeTruth,
};
use qtk_core::gates::{r_0j, sk1, xx, Circuit, GateKind, HardwareProfile, Instruction};
use qtk_core::noise::{Channels, NoiseProfile};
use qtk_core::readout::{midcircuit_measure2, spam_correct, ConfusionMatrix, Distribution};
use qtk_core::sim::{
    apply_embedded_cnx, basis_index, circuit_unitary, embedded_cnx_oracle, phase_aligned_deviation,
    qubit_basis_index, state_fidelity, QuditState, QutritRegister,
};
use qtk_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn hw() -> HardwareProfile {
    HardwareProfile::default()
}

/// Noiseless state-vector run; mid-circuit detections must find no `|2>`.
fn evolve(c: &Circuit, mut s: QutritRegister) -> Result<QutritRegister, String> {
    for ins in c.instructions() {
        match ins.kind {
            GateKind::MeasureMid2 => {
                let p2: f64 = (0..s.n()).map(|q| s.level_populations(q)[2]).sum();
                if p2 > 1e-12 {
                    return Err(format!("mid-circuit detection sees |2> population {p2:e}"));
                }
            }
            k if k.is_final_measure() || k == GateKind::Barrier => {}
            k => {
                let g = ins.gate().map_err(|e| e.to_string())?.expect("gate");
                if k.is_two_qutrit() {
                    s.apply(&g, &ins.targets).map_err(|e| e.to_string())?;
                } else {
                    for q in ins.touched(s.n()) {
                        s.apply(&g, &[q]).map_err(|e| e.to_string())?;
                    }
                }
            }
        }
    }
    Ok(s)
}

fn qubit_indices(n: usize) -> Vec<usize> {
    (0..1 << n).map(|x| qubit_basis_index(x, n)).collect()
}

fn haar_qubit_state(n: usize, rng: &mut ChaCha8Rng) -> QutritRegister {
    let mut amps = vec![C64::new(0.0, 0.0); 3usize.pow(n as u32)];
    for x in 0..1 << n {
        amps[qubit_basis_index(x, n)] = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    QutritRegister::from_amplitudes(n, amps).unwrap()
}

fn c1_exact_decomposition() -> Check {
    let mut worst_basis = 0.0f64;
    for n in 3..=7 {
        for stash in [true, false] {
            let c = qutrit_toffoli(&ToffoliOptions { stash_idle: stash, ..ToffoliOptions::new(n) }).unwrap();
            for x in 0..1usize << n {
                let bits: Vec<u8> = (0..n).map(|q| ((x >> (n - 1 - q)) & 1) as u8).collect();
                let out = evolve(&c, QutritRegister::basis(&bits).unwrap())?;
                let want = apply_embedded_cnx(&QutritRegister::basis(&bits).unwrap()).unwrap();
                worst_basis = worst_basis.max(1.0 - state_fidelity(&out, &want).unwrap());
            }
        }
    }
    let mut worst_unitary = 0.0f64;
    for n in 3..=5 {
        for stash in [true, false] {
            let c = qutrit_toffoli(&ToffoliOptions { stash_idle: stash, ..ToffoliOptions::new(n) }).unwrap();
            let q = qubit_indices(n);
            let u = circuit_unitary(&c, n).unwrap();
            let dev = phase_aligned_deviation(&u.restrict(&q), &embedded_cnx_oracle(n).unwrap().restrict(&q));
            worst_unitary = worst_unitary.max(dev);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_haar = 0.0f64;
    for n in [8, 10] {
        let c = qutrit_toffoli(&ToffoliOptions::new(n)).unwrap();
        for _ in 0..20 {
            let s = haar_qubit_state(n, &mut rng);
            let out = evolve(&c, s.clone())?;
            worst_haar = worst_haar.max(1.0 - state_fidelity(&out, &apply_embedded_cnx(&s).unwrap()).unwrap());
        }
    }
    ensure(
        worst_basis <= 1e-9 && worst_unitary <= 1e-9 && worst_haar <= 1e-8,
        format!("basis 1-F {worst_basis:.1e}, restricted unitary {worst_unitary:.1e}, Haar 1-F {worst_haar:.1e}"),
    )
}

fn c2_gate_counts() -> Check {
    let table = [(3, 3), (4, 5), (5, 7), (6, 9), (7, 11), (8, 13), (10, 17)];
    let mut bad = Vec::new();
    for n in 3..=12 {
        let got = qutrit_toffoli(&ToffoliOptions::new(n)).unwrap().xx_count();
        let want = table.iter().find(|t| t.0 == n).map_or(2 * n - 3, |t| t.1);
        if got != want || got != 2 * n - 3 {
            bad.push(format!("n={n}: {got}"));
        }
    }
    let ccx = qubit_ccx(&hw()).xx_count();
    ensure(bad.is_empty() && ccx == 6, format!("2N-3 for N=3..12 {}, qubit CCX {ccx} XX", if bad.is_empty() { "ok".into() } else { bad.join(", ") }))
}

fn c3_grover() -> Check {
    let mut worst = 0.0f64;
    for v in ToffoliVariant::ALL {
        for s in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let c = grover3(s, v, &hw()).unwrap();
            let out = evolve(&c, QutritRegister::zero(3).unwrap())?;
            let p: f64 = (0..2)
                .map(|t| out.probability(basis_index(&[s[0], s[1], t])))
                .sum();
            worst = worst.max((1.0 - p).abs());
        }
        let sampled = grover_experiment(v, 64, &NoiseProfile::noiseless(), &hw()).unwrap();
        worst = worst.max(sampled.p_err.abs());
    }
    ensure(worst <= 1e-9, format!("max |1 - P(success)| = {worst:.1e} over 4 oracles x 3 variants"))
}

/// Deviation of the corrected hardware gate from `XX(chi)`: the hardware
/// applies `truth` phases, the corrections use `calib`.
fn xx_equivalence(chi: f64, truth: (f64, f64), calib: &PhaseCalibration, variant: CorrectionVariant) -> f64 {
    let hw = HardwareProfile { individual_02_control: variant == CorrectionVariant::Simplified, ..hw() };
    let c = Circuit::from_instructions(2, vec![Instruction::xx(chi, 0, 1, &hw)]);
    let mut e = expand_xxtilde_with(&c, calib, &hw, variant).unwrap().instructions().to_vec();
    for ins in e.iter_mut().filter(|i| i.kind == GateKind::XxTilde) {
        ins.params.chi_a = Some(truth.0);
        ins.params.chi_b = Some(truth.1);
    }
    let u = circuit_unitary(&Circuit::from_instructions(2, e), 2).unwrap();
    let all: Vec<usize> = (0..9).collect();
    phase_aligned_deviation(&u.restrict(&all), xx(chi).entries())
}

fn c4_xxtilde() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let chi = rng.random_range(-PI..PI);
        let (a, b) = (rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        let calib = PhaseCalibration { chi_a: vec![a], chi_b: vec![b] };
        for v in [CorrectionVariant::Full, CorrectionVariant::Simplified] {
            worst = worst.max(xx_equivalence(chi, (a, b), &calib, v));
        }
    }
    ensure(worst <= 1e-9, format!("max deviation {worst:.1e} over 10 triples, both variants"))
}

fn c5_calibration() -> Check {
    let truth = XxTildeTruth { chi: PI / 2.0, chi_a: 0.3, chi_b: 0.0 };
    let rep = calibrate_phases(truth, 16, None, &NoiseProfile::noiseless(), &hw()).map_err(|e| e.to_string())?;
    let calib = rep.calibration();
    let worst = [CorrectionVariant::Full, CorrectionVariant::Simplified]
        .iter()
        .map(|&v| xx_equivalence(PI / 2.0, (truth.chi_a, truth.chi_b), &calib, v))
        .fold(0.0, f64::max);
    ensure(
        worst <= 1e-6,
        format!("recovered chi_a={:.9} chi_b={:.1e}, corrected XX deviation {worst:.1e}", rep.chi_a, rep.chi_b),
    )
}

fn c6_leakage_fit() -> Check {
    let ns: Vec<usize> = (3..=10).collect();
    let mut enabled = Channels::all(false);
    enabled.leakage = true;
    let q = 0.04;
    let leak_only = NoiseProfile { xx_leak_prob: q, enabled, ..NoiseProfile::default() };
    let pts = leak_scan(&ns, 10_000, true, &leak_only, &hw()).map_err(|e| e.to_string())?;
    let f1 = fit_leakage(&pts).map_err(|e| e.to_string())?;
    let want = (1.0 - q) * (1.0 - q);
    let pts = leak_scan(&ns, 10_000, true, &NoiseProfile::default(), &hw()).map_err(|e| e.to_string())?;
    let f2 = fit_leakage(&pts).map_err(|e| e.to_string())?;
    let monotone = pts.windows(2).all(|w| w[1].mean >= w[0].mean);
    ensure(
        (f1.p - want).abs() <= 0.01 && (0.89..=0.95).contains(&f2.p),
        format!(
            "q=0.04 leak-only: p={:.4} vs (1-q)^2={want:.4}; defaults: p={:.4}({:.4}) A={:.3}, means non-decreasing: {monotone}",
            f1.p,
            f2.p,
            f2.sigma_p(),
            f2.a
        ),
    )
}

fn c7_fidelity_bands() -> Check {
    let prof = NoiseProfile::default();
    let opts = TruthTableOptions { shots: 2048, postselect: true, confusion_shots: 0, resamples: 200, ..Default::default() };
    let mut qutrit = Vec::new();
    let mut ps = Vec::new();
    for n in [3, 4, 5, 6, 7, 8, 9, 10] {
        let r = truth_table_experiment(Family::Qutrit, n, &opts, &prof, &hw()).map_err(|e| e.to_string())?;
        ps.push(r.postselected.as_ref().unwrap().f_tt);
        qutrit.push(r.f_tt);
    }
    let mut qubit = Vec::new();
    for n in 3..=6 {
        let r = truth_table_experiment(Family::Qubit, n, &opts, &prof, &hw()).map_err(|e| e.to_string())?;
        qubit.push(r.f_tt);
    }
    let band = (qutrit[0] - 0.883).abs() <= 0.08;
    let cross = (1..=3).all(|i| qutrit[i] > qubit[i]);
    let post = ps.iter().zip(&qutrit).all(|(p, r)| p >= r);
    let mono = qutrit.windows(2).all(|w| w[1] <= w[0]) && qubit.windows(2).all(|w| w[1] <= w[0]);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    ensure(
        band && cross && post && mono,
        format!(
            "qutrit raw [{}] post-selected [{}] qubit [{}]; N=3 band {band}, qutrit>qubit {cross}, post>=raw {post}, non-increasing {mono}",
            fmt(&qutrit),
            fmt(&ps),
            fmt(&qubit)
        ),
    )
}

fn c8_spam() -> Check {
    let id = ConfusionMatrix::identity(3);
    let d = Distribution { n: 3, values: vec![0.3, 0.0, 0.1, 0.05, 0.15, 0.2, 0.12, 0.08] };
    let ident = spam_correct(&d, &id)
        .map_err(|e| e.to_string())?
        .values
        .iter()
        .zip(&d.values)
        .all(|(a, b)| (a - b).abs() < 1e-15);

    // forward-sample a product confusion with 1% flips
    let e: f64 = 0.01;
    let dim = 8;
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let flips = (i ^ j).count_ones() as i32;
            m[i * dim + j] = e.powi(flips) * (1.0 - e).powi(3 - flips);
        }
    }
    let cm = ConfusionMatrix { n: 3, shots_per_state: 0, matrix: m };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let shots = 1_000_000u64;
    let mut counts = vec![0u64; dim];
    let cdf: Vec<f64> = d.values.iter().scan(0.0, |acc, p| {
        *acc += p;
        Some(*acc)
    }).collect();
    for _ in 0..shots {
        let u: f64 = rng.random();
        let x = cdf.iter().position(|&c| u < c).unwrap_or(dim - 1);
        let mut y = x;
        for b in 0..3 {
            if rng.random::<f64>() < e {
                y ^= 1 << b;
            }
        }
        counts[y] += 1;
    }
    let measured = Distribution::from_counts(3, &counts).unwrap();
    let corrected = spam_correct(&measured, &cm).map_err(|e| e.to_string())?;
    let inv = cm.correction_matrix().unwrap();
    let sigmas: Vec<f64> = (0..dim)
        .map(|k| {
            bootstrap_groups(&[counts.clone()], 400, 80 + k as u64, |g| {
                let t: u64 = g[0].iter().sum();
                (0..dim).map(|j| inv[k * dim + j] * g[0][j] as f64 / t as f64).sum()
            })
        })
        .collect();
    let within = (0..dim).all(|k| (corrected.values[k] - d.values[k]).abs() <= 3.0 * sigmas[k].max(1e-12));
    let worst = (0..dim)
        .map(|k| (corrected.values[k] - d.values[k]).abs() / sigmas[k].max(1e-12))
        .fold(0.0, f64::max);
    let s = bootstrap_sigma(&[1024, 1024], 1000, 11)[0];
    let analytic = (0.25f64 / 2048.0).sqrt();
    let boot_ok = (s - analytic).abs() <= 0.2 * analytic;
    ensure(
        ident && within && boot_ok,
        format!(
            "identity map {ident}; corrected within {worst:.2} sigma (limit 3); binomial bootstrap sigma {s:.5} vs {analytic:.5}"
        ),
    )
}

fn random_qubit_state(n: usize, rng: &mut ChaCha8Rng) -> QutritRegister {
    haar_qubit_state(n, rng)
}

fn c9_dd() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_dd = 0.0f64;
    let mut best_off = 0.0f64;
    for phi in [0.1, 0.7, 2.9] {
        let mut enabled = Channels::all(false);
        enabled.stark = true;
        let prof = NoiseProfile { stark_phase: phi, enabled, ..NoiseProfile::default() };
        for _ in 0..10 {
            let input = random_qubit_state(3, &mut rng);
            let mut s = input.clone();
            if midcircuit_measure2(&mut s, &prof, true, &mut rng) {
                return Err("qubit-subspace state flagged bright".into());
            }
            worst_dd = worst_dd.max(1.0 - state_fidelity(&s, &input).unwrap());
            if phi == 0.7 {
                let mut s = input.clone();
                midcircuit_measure2(&mut s, &prof, false, &mut rng);
                best_off = best_off.max(state_fidelity(&s, &input).unwrap());
            }
        }
    }
    ensure(
        worst_dd <= 1e-10 && best_off < 1.0 - 1e-4,
        format!("DD on: max 1-F {worst_dd:.1e}; DD off at 0.7 rad: max F {best_off:.6}"),
    )
}

/// `1 - |tr(W)/2|^2` for `W = ideal^dag actual` on the `{0,1}` block.
fn pulse_infidelity(seq: &[(f64, f64)], eps: f64, ideal: (f64, f64)) -> f64 {
    let mut u = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]];
    for &(theta, phi) in seq {
        let g = r_0j(1, theta * (1.0 + eps), phi).unwrap();
        let m = [[g.get(0, 0), g.get(0, 1)], [g.get(1, 0), g.get(1, 1)]];
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = m[i][0] * u[0][j] + m[i][1] * u[1][j];
            }
        }
        u = out;
    }
    let g = r_0j(1, ideal.0, ideal.1).unwrap();
    // W = G^dag U is in SU(2): [[a, -b*], [b, a*]]
    let a = g.get(0, 0).conj() * u[0][0] + g.get(1, 0).conj() * u[1][0];
    let b = g.get(0, 1).conj() * u[0][0] + g.get(1, 1).conj() * u[1][0];
    b.norm_sqr() + a.im * a.im
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn c10_sk1() -> Check {
    let eps: Vec<f64> = (0..9).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / 8.0)).collect();
    let seq: Vec<(f64, f64)> = sk1(PI, 0.0, 0, &hw())
        .unwrap()
        .iter()
        .map(|i| (i.params.theta.unwrap(), i.params.phi.unwrap()))
        .collect();
    let comp: Vec<f64> = eps.iter().map(|&e| pulse_infidelity(&seq, e, (PI, 0.0))).collect();
    let bare: Vec<f64> = eps.iter().map(|&e| pulse_infidelity(&[(PI, 0.0)], e, (PI, 0.0))).collect();
    let (sc, sb) = (slope(&eps, &comp), slope(&eps, &bare));
    ensure(sc >= 3.5 && (sb - 2.0).abs() < 0.1, format!("log-log slope SK1 {sc:.2}, bare {sb:.2}"))
}

fn c11_determinism() -> Check {
    let exe = env!("CARGO_BIN_EXE_qtk");
    let dir = std::env::temp_dir().join(format!("qtk-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let cases: [&[&str]; 4] = [
        &["truth-table", "-n", "4", "--shots", "300", "--postselect", "--confusion-shots", "200", "--resamples", "100"],
        &["grover", "--shots", "500"],
        &["leak-scan", "--n-range", "3..6", "--shots", "2000"],
        &["calibrate", "--chi-a", "0.3", "--shots", "200"],
    ];
    let mut identical = 0;
    for (k, args) in cases.iter().enumerate() {
        let mut outs = Vec::new();
        for jobs in ["1", "3"] {
            let path = dir.join(format!("{k}-{jobs}.json"));
            let status = Command::new(exe)
                .args(["--seed", "7", "--jobs", jobs, "-o"])
                .arg(&path)
                .args(*args)
                .stdout(std::process::Stdio::null())
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("`qtk {}` failed", args.join(" ")));
            }
            outs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        if outs[0] == outs[1] {
            identical += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    ensure(identical == cases.len(), format!("{identical}/{} commands byte-identical across --jobs 1 and 3", cases.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("exact decomposition", c1_exact_decomposition),
        ("gate-count law", c2_gate_counts),
        ("Grover phase correctness", c3_grover),
        ("XX~ correction equivalence", c4_xxtilde),
        ("calibration closed loop", c5_calibration),
        ("leakage-scaling fit", c6_leakage_fit),
        ("fidelity bands and orderings", c7_fidelity_bands),
        ("SPAM machinery", c8_spam),
        ("DD mid-circuit readout", c9_dd),
        ("SK1 robustness", c10_sk1),
        ("determinism", c11_determinism),
    ];
    let only: Option<usize> = std::env::var("QTK_ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let t = Instant::now();
        let res = f();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("[PASS] {:>2} {name}: {msg} ({secs:.1}s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {msg} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
