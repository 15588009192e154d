//! `qtk`: decompose, simulate and analyse qutrit-assisted Toffoli gates.

mod config;
mod plot;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::{Output, RunConfig, SCHEMA};
use plot::{line_chart, Series};
use qtk_core::analysis::{
    self, calibrate_phases, fit_leakage, grover_experiment, leak_scan, toffoli_circuit, truth_table_experiment,
    truth_table_for_circuit, Family, LeakPoint, TruthTableOptions,
};
use qtk_core::decomposer::{expand_xxtilde, ToffoliVariant, XxTildeTruth};
use qtk_core::gates::{legality_check, Circuit, GateKind};
use qtk_core::readout::estimate_confusion;

#[derive(Parser)]
#[command(name = "qtk", version, about = "Qutrit-assisted generalized Toffoli toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed (falls back to the config file, then QTK_SEED, then 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for shot-level parallelism (results do not depend on it).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// TOML file with `seed`, `[noise]` and `[hardware]` tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Disable every noise channel.
    #[arg(long, global = true)]
    noiseless: bool,
    /// Write the result JSON here instead of stdout.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Qubit,
    Qutrit,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Qubit => Family::Qubit,
            FamilyArg::Qutrit => Family::Qutrit,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Emit {
    Json,
    Dot,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum VariantArg {
    All,
    Qubit,
    Qutrit,
    QutritMidmeasure,
}

#[derive(Subcommand)]
enum Command {
    /// Build a C^{n-1}X circuit and report its gate counts.
    Decompose {
        #[arg(long, value_enum, default_value = "qutrit")]
        family: FamilyArg,
        #[arg(short)]
        n: usize,
        /// Keep idle qutrits in |1> instead of stashing them.
        #[arg(long)]
        no_stash: bool,
        /// Leave the final readout off the circuit.
        #[arg(long)]
        no_measure: bool,
        /// Circuit file to write.
        #[arg(long)]
        circuit_out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        emit: Emit,
    },
    /// Truth-table fidelity over all 2^n basis inputs.
    TruthTable {
        #[arg(long, value_enum, default_value = "qutrit")]
        family: FamilyArg,
        #[arg(short, conflicts_with = "n_range")]
        n: Option<usize>,
        /// Inclusive range such as `3..6`.
        #[arg(long)]
        n_range: Option<String>,
        /// Use this circuit file instead of building one.
        #[arg(long, conflicts_with_all = ["n", "n_range"])]
        circuit: Option<PathBuf>,
        #[arg(long, default_value_t = analysis::DEFAULT_SHOTS)]
        shots: usize,
        /// Add columns post-selected on no leak flag.
        #[arg(long)]
        postselect: bool,
        /// Shots per prepared state for the SPAM confusion matrix (0 disables correction).
        #[arg(long, default_value_t = analysis::DEFAULT_SHOTS)]
        confusion_shots: usize,
        #[arg(long, default_value_t = analysis::DEFAULT_RESAMPLES)]
        resamples: usize,
        #[arg(long)]
        no_stash: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// SVG chart of F_tt against n.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Three-qubit Grover search with each Toffoli variant.
    Grover {
        #[arg(long, value_enum, default_value = "all")]
        variant: VariantArg,
        #[arg(long, default_value_t = analysis::DEFAULT_SHOTS)]
        shots: usize,
    },
    /// Mean leak probability against n, with the exponential fit.
    LeakScan {
        #[arg(long, default_value = "3..10")]
        n_range: String,
        /// Shots per n, spread over the 2^n inputs.
        #[arg(long, default_value_t = 10_000)]
        shots: usize,
        #[arg(long)]
        no_stash: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Ramsey calibration of the XX~ single-ion phases.
    Calibrate {
        #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
        chi_a: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        chi_b: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2, allow_hyphen_values = true)]
        chi: f64,
        #[arg(long, default_value_t = 16)]
        points: usize,
        /// Sample the scan with this many shots per point (default: exact populations).
        #[arg(long)]
        shots: Option<usize>,
    },
    /// Fit `1 - A p^(2N-3)` to a leak-scan CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
    /// Estimate the SPAM confusion matrix.
    Confusion {
        #[arg(short)]
        n: usize,
        #[arg(long, default_value_t = analysis::DEFAULT_SHOTS)]
        shots: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<Vec<usize>> {
    let (a, b) = s.split_once("..").ok_or_else(|| anyhow!("range must look like 3..10, got {s:?}"))?;
    let b = b.trim_start_matches('=');
    let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
    if a > b {
        bail!("empty range {s:?}");
    }
    Ok((a..=b).collect())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit<T: Serialize>(common: &Common, command: &str, cfg: &RunConfig, result: T) -> Result<()> {
    let text = serde_json::to_string_pretty(&Output { schema: SCHEMA, command, config: cfg, result })? + "\n";
    match &common.out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct DecomposeSummary {
    family: Family,
    n: usize,
    xx_count: usize,
    instructions: usize,
    single_qutrit_pulses: usize,
    duration_s: f64,
    circuit: Circuit,
}

fn main() -> std::process::ExitCode {
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    if let Some(k) = common.jobs {
        if k == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    let cfg = RunConfig::resolve(common.config.as_deref(), common.seed, common.noiseless)?;
    let hw = &cfg.hardware;
    let noise = &cfg.noise;

    match &cli.command {
        Command::Decompose { family, n, no_stash, no_measure, circuit_out, emit: fmt } => {
            let family = Family::from(*family);
            let mut c = toffoli_circuit(family, *n, !no_stash, hw)?;
            if *no_measure {
                c = Circuit::from_instructions(
                    c.n(),
                    c.instructions().iter().filter(|i| !i.kind.is_final_measure()).cloned().collect(),
                );
            }
            let violations = legality_check(&c, hw);
            if !violations.is_empty() {
                bail!(qtk_core::Error::Illegal(violations));
            }
            if let Some(p) = circuit_out {
                write_file(p, &(if *fmt == Emit::Dot { c.to_dot() } else { c.to_json()? + "\n" }))?;
            }
            if *fmt == Emit::Dot && circuit_out.is_none() {
                print!("{}", c.to_dot());
                return Ok(());
            }
            eprintln!("{} C^{}X: {} XX gates, {} instructions", family.name(), n - 1, c.xx_count(), c.len());
            let summary = DecomposeSummary {
                family,
                n: *n,
                xx_count: c.xx_count(),
                instructions: c.len(),
                single_qutrit_pulses: c.count(GateKind::R0j),
                duration_s: c.total_duration(),
                circuit: c,
            };
            emit(common, "decompose", &cfg, summary)
        }
        Command::TruthTable {
            family,
            n,
            n_range,
            circuit,
            shots,
            postselect,
            confusion_shots,
            resamples,
            no_stash,
            csv,
            plot,
        } => {
            let opts = TruthTableOptions {
                shots: *shots,
                postselect: *postselect,
                confusion_shots: *confusion_shots,
                resamples: *resamples,
                stash_idle: !no_stash,
            };
            let results = if let Some(path) = circuit {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let c = Circuit::from_json(&text)?;
                vec![truth_table_for_circuit(&c, &opts, noise, hw)?]
            } else {
                let ns = match (n, n_range) {
                    (Some(n), _) => vec![*n],
                    (None, Some(r)) => parse_range(r)?,
                    (None, None) => bail!("give -n, --n-range or --circuit"),
                };
                ns.iter()
                    .map(|&n| truth_table_experiment(Family::from(*family), n, &opts, noise, hw))
                    .collect::<qtk_core::Result<Vec<_>>>()?
            };
            if let Some(p) = csv {
                let text: String = results.iter().map(|r| format!("# n={}\n{}", r.n, r.to_csv())).collect();
                write_file(p, &text)?;
            }
            if let Some(p) = plot {
                let mut series = vec![Series {
                    name: "raw",
                    color: "#c0392b",
                    points: results.iter().map(|r| (r.n as f64, r.f_tt)).collect(),
                }];
                if results.iter().all(|r| r.f_tt_corrected.is_some()) {
                    series.push(Series {
                        name: "SPAM-corrected",
                        color: "#2c3e50",
                        points: results.iter().map(|r| (r.n as f64, r.f_tt_corrected.unwrap_or(0.0))).collect(),
                    });
                }
                if results.iter().all(|r| r.postselected.is_some()) {
                    series.push(Series {
                        name: "post-selected",
                        color: "#27ae60",
                        points: results
                            .iter()
                            .map(|r| (r.n as f64, r.postselected.as_ref().map_or(0.0, |p| p.f_tt)))
                            .collect(),
                    });
                }
                write_file(p, &line_chart("Truth-table fidelity", "N", "F_tt", &series))?;
            }
            for r in &results {
                eprintln!("n={} F_tt={:.4}({:.4})", r.n, r.f_tt, r.f_tt_sigma);
            }
            if results.len() == 1 {
                emit(common, "truth-table", &cfg, &results[0])
            } else {
                emit(common, "truth-table", &cfg, &results)
            }
        }
        Command::Grover { variant, shots } => {
            let variants: Vec<ToffoliVariant> = match variant {
                VariantArg::All => ToffoliVariant::ALL.to_vec(),
                VariantArg::Qubit => vec![ToffoliVariant::Qubit],
                VariantArg::Qutrit => vec![ToffoliVariant::Qutrit],
                VariantArg::QutritMidmeasure => vec![ToffoliVariant::QutritMidmeasure],
            };
            let results = variants
                .iter()
                .map(|&v| grover_experiment(v, *shots, noise, hw))
                .collect::<qtk_core::Result<Vec<_>>>()?;
            for r in &results {
                eprintln!("{}: P_err={:.4}", r.variant.name(), r.p_err);
            }
            emit(common, "grover", &cfg, &results)
        }
        Command::LeakScan { n_range, shots, no_stash, csv, plot } => {
            let ns = parse_range(n_range)?;
            let points = leak_scan(&ns, *shots, !no_stash, noise, hw)?;
            if let Some(p) = csv {
                write_file(p, &leak_csv(&points))?;
            }
            let fit = fit_leakage(&points).ok();
            if let Some(p) = plot {
                let mut series =
                    vec![Series { name: "mean leak", color: "#c0392b", points: points.iter().map(|p| (p.n as f64, p.mean)).collect() }];
                if let Some(f) = &fit {
                    series.push(Series {
                        name: "fit",
                        color: "#7f8c8d",
                        points: points.iter().map(|p| (p.n as f64, f.predict(p.n))).collect(),
                    });
                }
                write_file(p, &line_chart("Leak probability", "N", "P(leak)", &series))?;
            }
            if let Some(f) = &fit {
                eprintln!("A={:.4} p={:.4}({:.4})", f.a, f.p, f.sigma_p());
            }
            #[derive(Serialize)]
            struct Scan {
                points: Vec<LeakPoint>,
                fit: Option<analysis::LeakageFit>,
            }
            emit(common, "leak-scan", &cfg, Scan { points, fit })
        }
        Command::Calibrate { chi_a, chi_b, chi, points, shots } => {
            let truth = XxTildeTruth { chi: *chi, chi_a: *chi_a, chi_b: *chi_b };
            let rep = calibrate_phases(truth, *points, *shots, noise, hw)?;
            let probe = Circuit::from_instructions(2, vec![qtk_core::gates::Instruction::xx(*chi, 0, 1, hw)]);
            let corrected = expand_xxtilde(&probe, &rep.calibration(), hw)?;
            eprintln!("chi_a={:.6} chi_b={:.6}", rep.chi_a, rep.chi_b);
            #[derive(Serialize)]
            struct Cal {
                report: analysis::CalibrationReport,
                corrected_xx: Circuit,
            }
            emit(common, "calibrate", &cfg, Cal { report: rep, corrected_xx: corrected })
        }
        Command::Fit { input } => {
            let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
            let points = read_leak_csv(&text)?;
            let fit = fit_leakage(&points)?;
            eprintln!("A={:.4} p={:.4}({:.4})", fit.a, fit.p, fit.sigma_p());
            emit(common, "fit", &cfg, fit)
        }
        Command::Confusion { n, shots, csv } => {
            let cm = estimate_confusion(*n, noise, hw, *shots)?;
            if let Some(p) = csv {
                write_file(p, &cm.to_csv())?;
            }
            #[derive(Serialize)]
            struct Conf {
                condition_number: f64,
                confusion: qtk_core::readout::ConfusionMatrix,
            }
            emit(common, "confusion", &cfg, Conf { condition_number: cm.condition_number(), confusion: cm })
        }
    }
}

fn leak_csv(points: &[LeakPoint]) -> String {
    let mut s = String::from("n,mean,spread,sigma\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", p.n, p.mean, p.spread, p.sigma);
    }
    s
}

fn read_leak_csv(text: &str) -> Result<Vec<LeakPoint>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("n,") {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() < 2 {
            bail!("line {}: expected n,mean[,spread,sigma]", k + 1);
        }
        let num = |i: usize| -> Result<f64> {
            f.get(i).map_or(Ok(0.0), |v| v.parse::<f64>().with_context(|| format!("line {}: bad number {v:?}", k + 1)))
        };
        out.push(LeakPoint {
            n: f[0].parse().with_context(|| format!("line {}: bad n", k + 1))?,
            mean: num(1)?,
            spread: num(2)?,
            sigma: num(3)?,
        });
    }
    Ok(out)
}
