// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Argument parsing and command execution for the `amfm` binary.
//!
//! Units at this boundary: gate times in µs, drift in kHz, frequencies in
//! MHz or kHz as named by each flag. Qubit pairs are 1-based qubit numbers
//! within the chain's qubit window.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use amfm_core::analysis::{
    default_grid, fit_sideband, power_metrics, sample_and_demodulate, simulate_scan, sweep_drift, sweep_power_vs_tau,
    NoiseModel,
};
use amfm_core::chain_model::{preset, ModeData};
use amfm_core::report::{Column, Row, SweepReport};
use amfm_core::spectral_kernels::quadrature::{verify_closed_forms, VerifyPlan};
use amfm_core::synthesis::{
    repeat_pulse, synthesize, EnsKnob, FmatrixCut, Protocol, PulseSolution, SynthesisRequest,
};
use amfm_core::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "amfm", version, about = "Power-optimal AMFM pulse synthesis for trapped-ion entangling gates")]
pub struct Command {
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Verb {
    /// Solve a chain and write its mode file.
    Modes {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Synthesize one pulse and write it as JSON.
    Synth {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        design: DesignArgs,
        /// Gate time, µs.
        #[arg(long = "tau-us")]
        tau_us: f64,
        /// Split the pulse into this many back-to-back copies.
        #[arg(long, default_value_t = 1)]
        repeat: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Power against gate time (CSV plus a `.json` sidecar).
    SweepTau {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        design: DesignArgs,
        /// Comma-separated gate times, µs.
        #[arg(long = "taus-us", value_delimiter = ',', num_args = 0..)]
        taus_us: Vec<f64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Infidelity against uniform mode drift for a pulse file.
    SweepDrift {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, value_parser = existing_file)]
        solution: PathBuf,
        /// Half-width of the drift grid, kHz.
        #[arg(long = "range-khz", default_value_t = 10.0)]
        range_khz: f64,
        #[arg(long, default_value_t = 81)]
        points: usize,
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sample a pulse file and split it into envelope and detuning.
    Demod {
        #[arg(long, value_parser = existing_file)]
        solution: PathBuf,
        /// Samples per period of the highest basis tone.
        #[arg(long = "samples-per-period", default_value_t = 16)]
        samples_per_period: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulate a sideband scan and fit it.
    SpectroSim {
        /// Mode frequency, MHz.
        #[arg(long = "mode-mhz")]
        mode_mhz: f64,
        /// Sideband Rabi rate, kHz.
        #[arg(long = "rabi-khz")]
        rabi_khz: f64,
        /// Pulse length, µs; defaults to a resonant π pulse.
        #[arg(long = "duration-us")]
        duration_us: Option<f64>,
        /// Half-width of the scan, kHz.
        #[arg(long = "span-khz", default_value_t = 30.0)]
        span_khz: f64,
        #[arg(long, default_value_t = 81)]
        points: usize,
        /// Additive Gaussian population noise.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compare closed forms with quadrature on seeded random samples.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        samples: usize,
        #[arg(long = "near-resonant", default_value_t = 10)]
        near_resonant: usize,
        #[arg(long = "kernel-samples", default_value_t = 2)]
        kernel_samples: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Clone, PartialEq, Args)]
#[group(required = true, multiple = false)]
pub struct ChainArgs {
    /// Built-in chain: umd7 or chain15.
    #[arg(long)]
    pub preset: Option<String>,
    /// Mode file (frequencies in Hz).
    #[arg(long, value_parser = existing_file)]
    pub modes: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolName {
    Exact,
    Fmatrix,
    Ens,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct DesignArgs {
    /// Qubit pair, 1-based, e.g. `4,5`.
    #[arg(long, value_parser = parse_pair)]
    pub pair: (usize, usize),
    /// Stabilization order.
    #[arg(long = "K", default_value_t = 0)]
    pub order: u32,
    #[arg(long, value_enum, default_value_t = ProtocolName::Exact)]
    pub protocol: ProtocolName,
    #[arg(long = "l-cut", conflicts_with = "l_bar_cut")]
    pub l_cut: Option<usize>,
    #[arg(long = "l-bar-cut")]
    pub l_bar_cut: Option<usize>,
    /// Relative threshold on normalized Γ eigenvalues.
    #[arg(long = "Z", conflicts_with = "target_f")]
    pub z: Option<f64>,
    #[arg(long = "target-f")]
    pub target_f: Option<f64>,
    /// Number of sine tones; automatic when omitted.
    #[arg(long = "basis-size")]
    pub basis_size: Option<usize>,
    /// Zero amplitudes below this fraction of the largest one.
    #[arg(long = "amplitude-floor")]
    pub amplitude_floor: Option<f64>,
    #[arg(long = "convergence-check")]
    pub convergence_check: bool,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct OutArgs {
    /// Output path; standard output when omitted.
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

fn existing_file(s: &str) -> std::result::Result<PathBuf, String> {
    let p = PathBuf::from(s);
    if p.is_file() {
        Ok(p)
    } else {
        Err(format!("no such file: {s}"))
    }
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => {
            let a: usize = a.parse().map_err(|_| format!("bad qubit number {a:?}"))?;
            let b: usize = b.parse().map_err(|_| format!("bad qubit number {b:?}"))?;
            Ok((a, b))
        }
        _ => Err(format!("expected two comma-separated qubit numbers, got {s:?}")),
    }
}

/// Parses `argv` (without the program name).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<Command, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Command::try_parse_from(std::iter::once(std::ffi::OsString::from("amfm")).chain(argv.into_iter().map(Into::into)))
}

/// Parses and executes; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match parse_args(argv) {
        Ok(cmd) => execute(&cmd),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}

/// Runs a parsed command. Failures print a JSON error object on standard
/// error and return 1.
pub fn execute(cmd: &Command) -> i32 {
    match dispatch(cmd) {
        Ok(()) => 0,
        Err(e) => {
            let body = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{body}");
            1
        }
    }
}

fn load_chain(chain: &ChainArgs) -> Result<ModeData> {
    match (&chain.preset, &chain.modes) {
        (Some(name), _) => Ok(preset(name)?.modes),
        (None, Some(path)) => ModeData::load(path),
        (None, None) => Err(Error::InvalidRequest("a chain is required".into())),
    }
}

fn request(modes: &ModeData, design: &DesignArgs, tau: f64) -> Result<SynthesisRequest> {
    let ion = |q: usize| {
        modes.qubit_window.ion_of_qubit(q).ok_or_else(|| {
            Error::InvalidPair(
                design.pair.0,
                design.pair.1,
                format!("qubit {q} outside 1..={}", modes.qubit_window.count),
            )
        })
    };
    let ions = (ion(design.pair.0)?, ion(design.pair.1)?);
    let protocol = match design.protocol {
        ProtocolName::Exact => Protocol::Exact,
        ProtocolName::Fmatrix => {
            let cut = match (design.l_cut, design.l_bar_cut) {
                (Some(l), _) => FmatrixCut::Keep(l),
                (None, Some(l)) => FmatrixCut::Discard(l),
                (None, None) => {
                    return Err(Error::InvalidRequest("fmatrix needs --l-cut or --l-bar-cut".into()));
                }
            };
            Protocol::Fmatrix { cut }
        }
        ProtocolName::Ens => {
            let knob = match (design.z, design.target_f) {
                (Some(z), _) => EnsKnob::Threshold(z),
                (None, Some(f)) => EnsKnob::TargetInfidelity(f),
                (None, None) => return Err(Error::InvalidRequest("ens needs --Z or --target-f".into())),
            };
            Protocol::Ens { knob }
        }
    };
    let mut req = SynthesisRequest::new(ions, tau, design.order, protocol);
    req.basis_size = design.basis_size;
    req.amplitude_floor = design.amplitude_floor;
    req.convergence_check = design.convergence_check;
    Ok(req)
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn emit(out: &OutArgs, text: &str) -> Result<()> {
    match &out.output {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// CSV to the output (or standard output) and the sidecar next to it.
fn emit_report(out: &OutArgs, report: &SweepReport) -> Result<()> {
    let csv = report.to_csv_string()?;
    let sidecar = report.sidecar_json()? + "\n";
    match &out.output {
        Some(path) => {
            write_atomic(path, csv.as_bytes())?;
            let mut side = path.as_os_str().to_owned();
            side.push(".json");
            write_atomic(Path::new(&side), sidecar.as_bytes())
        }
        None => emit(out, &csv),
    }
}

fn json_line<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn dispatch(cmd: &Command) -> Result<()> {
    match &cmd.verb {
        Verb::Modes { chain, out } => {
            let modes = load_chain(chain)?;
            emit(out, &json_line(&modes.to_file())?)
        }
        Verb::Synth {
            chain,
            design,
            tau_us,
            repeat,
            out,
        } => {
            let modes = load_chain(chain)?;
            let req = request(&modes, design, tau_us * 1e-6)?;
            let mut sol = synthesize(&modes, &req)?;
            if *repeat != 1 {
                sol = repeat_pulse(&sol, &modes, *repeat)?;
            }
            emit(out, &(sol.to_json()? + "\n"))
        }
        Verb::SweepTau {
            chain,
            design,
            taus_us,
            jobs,
            out,
        } => {
            let modes = load_chain(chain)?;
            let first = taus_us.first().copied().unwrap_or(100.0);
            let template = request(&modes, design, first * 1e-6)?;
            let taus: Vec<f64> = taus_us.iter().map(|t| t * 1e-6).collect();
            emit_report(out, &sweep_power_vs_tau(&modes, &template, &taus, *jobs)?)
        }
        Verb::SweepDrift {
            chain,
            solution,
            range_khz,
            points,
            threshold,
            jobs,
            out,
        } => {
            let modes = load_chain(chain)?;
            let sol = PulseSolution::load(solution)?;
            let range = 2.0 * PI * range_khz * 1e3;
            let curve = match jobs {
                Some(n) => rayon_pool(*n)?.install(|| sweep_drift(&sol, &modes, range, *points, *threshold))?,
                None => sweep_drift(&sol, &modes, range, *points, *threshold)?,
            };
            emit_report(out, &curve.to_report(&sol)?)
        }
        Verb::Demod {
            solution,
            samples_per_period,
            out,
        } => {
            let sol = PulseSolution::load(solution)?;
            let d = sample_and_demodulate(&sol, &default_grid(&sol, *samples_per_period))?;
            let metrics = power_metrics(&sol);
            let mut report = SweepReport::new(
                "demodulation",
                vec![
                    Column::new("t", "s"),
                    Column::new("g", "rad/s"),
                    Column::new("envelope", "rad/s"),
                    Column::new("phase", "rad"),
                    Column::new("detuning", "rad/s"),
                ],
                sol.chain_fingerprint.clone(),
            )
            .with_request("protocol", sol.protocol)?
            .with_request("knobs", sol.knobs)?
            .with_request("tau_s", sol.tau_s)?
            .with_request("samples_per_period", samples_per_period)?
            .with_request("power", metrics)?;
            report.rows = (0..d.times.len())
                .map(|k| Row {
                    values: vec![
                        Some(d.times[k]),
                        Some(d.pulse[k]),
                        Some(d.envelope[k]),
                        Some(d.phase[k]),
                        Some(d.detuning[k]),
                    ],
                    error: None,
                })
                .collect();
            emit_report(out, &report)
        }
        Verb::SpectroSim {
            mode_mhz,
            rabi_khz,
            duration_us,
            span_khz,
            points,
            sigma,
            shots,
            seed,
            out,
        } => {
            let wp = 2.0 * PI * mode_mhz * 1e6;
            let rabi = 2.0 * PI * rabi_khz * 1e3;
            if !(rabi > 0.0) {
                return Err(Error::InvalidRequest("--rabi-khz must be positive".into()));
            }
            let t = duration_us.map(|d| d * 1e-6).unwrap_or(PI / (2.0 * rabi));
            if *points < 2 {
                return Err(Error::InvalidRequest("a scan needs at least two points".into()));
            }
            let half = 2.0 * PI * span_khz * 1e3;
            let grid: Vec<f64> = (0..*points)
                .map(|k| wp - half + 2.0 * half * k as f64 / (*points - 1) as f64)
                .collect();
            let noise = NoiseModel {
                gaussian_sigma: *sigma,
                shots: *shots,
            };
            let scan = simulate_scan(wp, rabi, t, &grid, noise, *seed)?;
            let fit = fit_sideband(&scan)?;
            let mut report = SweepReport::new(
                "sideband_scan",
                vec![Column::new("drive", "rad/s"), Column::new("population", "")],
                String::new(),
            )
            .with_request("truth", scan.truth)?
            .with_request("pulse_duration_s", t)?
            .with_request("noise", noise)?
            .with_request("seed", seed)?
            .with_request("fit", fit)?;
            report.rows = grid
                .iter()
                .zip(&scan.populations)
                .map(|(&d, &p)| Row {
                    values: vec![Some(d), Some(p)],
                    error: None,
                })
                .collect();
            emit_report(out, &report)
        }
        Verb::Verify {
            seed,
            samples,
            near_resonant,
            kernel_samples,
            out,
        } => {
            let plan = VerifyPlan {
                seed: *seed,
                random: *samples,
                near_resonant: *near_resonant,
                kernel: *kernel_samples,
                ..VerifyPlan::default()
            };
            let report = verify_closed_forms(&plan)?;
            emit(out, &json_line(&report)?)?;
            if report.passed {
                Ok(())
            } else {
                Err(Error::InvalidRequest(format!(
                    "closed forms disagree with quadrature (max c error {:e}, max kernel error {:e})",
                    report.max_c_error, report.max_kernel_error
                )))
            }
        }
    }
}

fn rayon_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidRequest(format!("cannot start {jobs} worker threads: {e}")))
}
