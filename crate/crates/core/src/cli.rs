//! `mdr` command line: `sweep`, `verify` and `estimate`.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 verification
//! failure, 3 I/O failure.

use std::ffi::OsString;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiment::{
    exact_outcomes, exact_report, reconstruct, reconstruct_counts, reconstruct_pair, sample_shots,
    ExperimentConfig, ReconstructedPair, DEFAULT_GAMMA_SQ,
};
use crate::mdr_theory::{MdrReport, Mode};
use crate::qmodel::DensityState;
use crate::verify::{grid, quarter_turn_grid, random_identity_suites, round_trip_suites, SuiteResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const DEFAULT_P_LIST: [f64; 5] = [0.0, 0.05, 0.1, 0.15, 0.2];

pub const SWEEP_HEADER: &str = "theta,p,gamma_sq,epsilon,eta,sigma_a,sigma_b,c,h,o,\
epsilon_recon,eta_recon,heisenberg_holds,ozawa_holds,shots,seed";

pub const ESTIMATE_HEADER: &str = "seed,theta,p,gamma_sq,mode,shots,estimate,estimate_sq_raw";

#[derive(Debug, Parser)]
#[command(name = "mdr", version, about = "Measurement precision and disturbance: exact values and weak-measurement reconstruction")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate exact and reconstructed quantities over a θ × p grid
    Sweep(SweepArgs),
    /// Run the randomized identity suites and the operational round trip
    Verify(VerifyArgs),
    /// Repeated finite-shot reconstructions at a single configuration
    Estimate(EstimateArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Smallest meter angle (radians)
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta_min: f64,
    /// Largest meter angle (radians)
    #[arg(long, default_value_t = FRAC_PI_4, allow_negative_numbers = true)]
    theta_max: f64,
    /// Grid points, endpoints included
    #[arg(long, default_value_t = 101)]
    theta_steps: usize,
    /// CNOT error rate; repeat for several (default 0, 0.05, 0.1, 0.15, 0.2)
    #[arg(long = "p", allow_negative_numbers = true)]
    p: Vec<f64>,
    /// Probe γ²; strength is 2γ² − 1
    #[arg(long, default_value_t = DEFAULT_GAMMA_SQ)]
    gamma_sq: f64,
    /// Shots per reconstruction; 0 uses exact statistics
    #[arg(long, default_value_t = 0)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random models per identity suite
    #[arg(long, default_value_t = 100)]
    instances: usize,
    /// θ points over [0, π/2] for the round-trip suites
    #[arg(long, default_value_t = 101)]
    round_trip_points: usize,
    /// Evaluate the direct disturbance with a corrupted observable
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Meter angle (radians)
    #[arg(long, default_value_t = FRAC_PI_8, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long, default_value_t = DEFAULT_GAMMA_SQ)]
    gamma_sq: f64,
    /// CNOT error rate
    #[arg(long = "p", default_value_t = 0.0, allow_negative_numbers = true)]
    p: f64,
    /// disturbance (η̂) or precision (ε̂)
    #[arg(long, default_value = "disturbance")]
    mode: Mode,
    #[arg(long, default_value_t = 1_000_000)]
    shots: u64,
    /// First seed; runs use seed, seed + 1, …
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of independent runs
    #[arg(long, default_value_t = 30)]
    seeds: u64,
    /// Output CSV (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Formats like C's `%.12g`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (11 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Validated sweep parameters.
#[derive(Clone, Debug)]
pub struct SweepRequest {
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_steps: usize,
    pub p_list: Vec<f64>,
    pub gamma_sq: f64,
    pub shots: u64,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
}

impl Default for SweepRequest {
    fn default() -> Self {
        Self {
            theta_min: 0.0,
            theta_max: FRAC_PI_4,
            theta_steps: 101,
            p_list: DEFAULT_P_LIST.to_vec(),
            gamma_sq: DEFAULT_GAMMA_SQ,
            shots: 0,
            seed: 0,
            output_path: None,
        }
    }
}

impl SweepRequest {
    pub fn validate(&self) -> Result<()> {
        if !self.theta_min.is_finite() || !self.theta_max.is_finite() || self.theta_min > self.theta_max {
            return Err(Error::InvalidParameter(format!(
                "theta range [{}, {}] is not a finite interval",
                self.theta_min, self.theta_max
            )));
        }
        if self.theta_steps < 2 {
            return Err(Error::InvalidParameter("theta-steps must be at least 2".into()));
        }
        if self.p_list.is_empty() {
            return Err(Error::InvalidParameter("at least one error rate is required".into()));
        }
        if let Some(p) = self.p_list.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidParameter(format!("error rate {p} outside [0, 1]")));
        }
        crate::experiment::ProbeSpec::new(self.gamma_sq, crate::experiment::ProbeBasis::Z)?;
        Ok(())
    }

    pub fn thetas(&self) -> Vec<f64> {
        grid(self.theta_min, self.theta_max, self.theta_steps)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    pub theta: f64,
    pub p: f64,
    pub gamma_sq: f64,
    pub exact: MdrReport,
    pub recon: ReconstructedPair,
    pub shots: u64,
    pub seed: u64,
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        let e = &self.exact;
        [
            fmt_num(self.theta),
            fmt_num(self.p),
            fmt_num(self.gamma_sq),
            fmt_num(e.epsilon),
            fmt_num(e.eta),
            fmt_num(e.sigma_a),
            fmt_num(e.sigma_b),
            fmt_num(e.c),
            fmt_num(e.h),
            fmt_num(e.o),
            fmt_num(self.recon.epsilon.value),
            fmt_num(self.recon.eta.value),
            e.heisenberg_holds.to_string(),
            e.ozawa_holds.to_string(),
            self.shots.to_string(),
            self.seed.to_string(),
        ]
        .join(",")
    }
}

/// Rows in p-major, θ-minor order; computed in parallel.
pub fn sweep_rows(req: &SweepRequest) -> Result<Vec<SweepRow>> {
    req.validate()?;
    let signal = DensityState::plus_i();
    let thetas = req.thetas();
    let cells: Vec<(f64, f64)> = req
        .p_list
        .iter()
        .flat_map(|&p| thetas.iter().map(move |&t| (p, t)))
        .collect();
    cells
        .par_iter()
        .map(|&(p, theta)| {
            Ok(SweepRow {
                theta,
                p,
                gamma_sq: req.gamma_sq,
                exact: exact_report(theta, p, &signal)?,
                recon: reconstruct_pair(theta, req.gamma_sq, p, req.shots, req.seed, &signal)?,
                shots: req.shots,
                seed: req.seed,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    w.flush()
}

fn open_output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let req = SweepRequest {
        theta_min: args.theta_min,
        theta_max: args.theta_max,
        theta_steps: args.theta_steps,
        p_list: if args.p.is_empty() { DEFAULT_P_LIST.to_vec() } else { args.p },
        gamma_sq: args.gamma_sq,
        shots: args.shots,
        seed: args.seed,
        output_path: args.out,
    };
    let rows = sweep_rows(&req)?;
    write_sweep_csv(&rows, open_output(&req.output_path)?)?;
    Ok(())
}

pub fn verification_report(
    seed: u64,
    instances: usize,
    round_trip_points: usize,
    inject_fault: bool,
) -> Result<Vec<SuiteResult>> {
    let mut suites = random_identity_suites(seed, instances, inject_fault)?;
    suites.extend(round_trip_suites(&quarter_turn_grid(round_trip_points))?);
    Ok(suites)
}

fn cmd_verify(args: VerifyArgs) -> Result<bool> {
    let suites = verification_report(args.seed, args.instances, args.round_trip_points, args.inject_fault)?;
    for s in &suites {
        println!(
            "{:<26} instances={:<4} max_deviation={:.3e} tolerance={:.0e} {}",
            s.name,
            s.instances,
            s.max_deviation,
            s.tolerance,
            if s.passed() { "PASS" } else { "FAIL" }
        );
    }
    Ok(suites.iter().all(SuiteResult::passed))
}

/// One finite-shot reconstruction per seed, plus the exact-statistics value.
#[derive(Clone, Debug)]
pub struct EstimateRun {
    pub seeds: Vec<u64>,
    pub estimates: Vec<f64>,
    pub squared_raw: Vec<f64>,
    pub exact: f64,
}

impl EstimateRun {
    pub fn mean(&self) -> f64 {
        self.estimates.iter().sum::<f64>() / self.estimates.len() as f64
    }

    /// Sample standard deviation over √n; zero for fewer than two runs.
    pub fn standard_error(&self) -> f64 {
        let n = self.estimates.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        let var = self.estimates.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    }
}

pub fn estimate_runs(
    theta: f64,
    gamma_sq: f64,
    p: f64,
    mode: Mode,
    shots: u64,
    first_seed: u64,
    n_seeds: u64,
) -> Result<EstimateRun> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let base = ExperimentConfig::new(theta, gamma_sq, mode, p)?;
    let exact = reconstruct(&base, &exact_outcomes(&base)?)?.value;
    let seeds: Vec<u64> = (0..n_seeds).map(|i| first_seed.wrapping_add(i)).collect();
    let results: Vec<(f64, f64)> = seeds
        .iter()
        .map(|&seed| {
            let cfg = base.clone().with_shots(shots, seed);
            let r = reconstruct_counts(&cfg, &sample_shots(&cfg)?)?;
            Ok((r.value, r.squared_raw))
        })
        .collect::<Result<_>>()?;
    Ok(EstimateRun {
        seeds,
        estimates: results.iter().map(|r| r.0).collect(),
        squared_raw: results.iter().map(|r| r.1).collect(),
        exact,
    })
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    let run = estimate_runs(args.theta, args.gamma_sq, args.p, args.mode, args.shots, args.seed, args.seeds)?;
    let mut out = open_output(&args.out)?;
    writeln!(out, "{ESTIMATE_HEADER}")?;
    for ((seed, est), raw) in run.seeds.iter().zip(&run.estimates).zip(&run.squared_raw) {
        writeln!(
            out,
            "{seed},{},{},{},{},{},{},{}",
            fmt_num(args.theta),
            fmt_num(args.p),
            fmt_num(args.gamma_sq),
            args.mode.as_str(),
            args.shots,
            fmt_num(*est),
            fmt_num(*raw)
        )?;
    }
    out.flush()?;
    let summary = format!(
        "mode={} seeds={} shots={} mean={} stderr={} exact={}",
        args.mode.as_str(),
        run.estimates.len(),
        args.shots,
        fmt_num(run.mean()),
        fmt_num(run.standard_error()),
        fmt_num(run.exact)
    );
    if args.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Sweep(a) => cmd_sweep(a).map(|_| EXIT_OK),
        Command::Verify(a) => cmd_verify(a).map(|ok| if ok { EXIT_OK } else { EXIT_VERIFY_FAILED }),
        Command::Estimate(a) => cmd_estimate(a).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_matches_printf_g() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(std::f64::consts::SQRT_2), "1.41421356237");
        assert_eq!(fmt_num(0.585_786_437_626_905), "0.585786437627");
        assert_eq!(fmt_num(1e-20), "1e-20");
        assert_eq!(fmt_num(1.5e-5), "1.5e-05");
        assert_eq!(fmt_num(0.0001), "0.0001");
        assert_eq!(fmt_num(123456789012.0), "123456789012");
        assert_eq!(fmt_num(1234567890123.0), "1.23456789012e+12");
    }

    #[test]
    fn sweep_request_validation() {
        let ok = SweepRequest::default();
        assert!(ok.validate().is_ok());
        let bad = [
            SweepRequest { theta_steps: 1, ..ok.clone() },
            SweepRequest { theta_min: 1.0, theta_max: 0.0, ..ok.clone() },
            SweepRequest { p_list: vec![1.5], ..ok.clone() },
            SweepRequest { p_list: vec![], ..ok.clone() },
            SweepRequest { gamma_sq: 0.5, ..ok.clone() },
        ];
        for r in bad {
            assert!(r.validate().is_err(), "{r:?}");
        }
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["mdr", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["mdr", "sweep", "--theta-steps", "1"]), EXIT_USAGE);
        assert_eq!(run(["mdr", "estimate", "--gamma-sq", "0.5"]), EXIT_USAGE);
        assert_eq!(run(["mdr", "estimate", "--mode", "sideways"]), EXIT_USAGE);
    }

    #[test]
    fn verify_exit_codes() {
        assert_eq!(run(["mdr", "verify", "--instances", "0", "--round-trip-points", "0"]), EXIT_OK);
        assert_eq!(
            run(["mdr", "verify", "--instances", "3", "--round-trip-points", "0", "--inject-fault"]),
            EXIT_VERIFY_FAILED
        );
    }

    #[test]
    fn unwritable_output_exits_three() {
        let code = run(["mdr", "sweep", "--theta-steps", "2", "--p", "0", "--out", "/nonexistent-dir/x.csv"]);
        assert_eq!(code, EXIT_IO);
    }

    #[test]
    fn standard_error_of_constant_runs_is_zero() {
        let r = EstimateRun {
            seeds: vec![0, 1, 2],
            estimates: vec![0.5, 0.5, 0.5],
            squared_raw: vec![0.25; 3],
            exact: 0.5,
        };
        assert_eq!(r.mean(), 0.5);
        assert_eq!(r.standard_error(), 0.0);
    }
}
