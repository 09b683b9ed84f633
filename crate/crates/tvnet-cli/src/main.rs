//! Thin command-line driver for the tvnet solver library.
//!
//! Exit codes: 0 success, 1 input or I/O error, 2 solver hit the iteration
//! cap without converging (outputs are still written).

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};

use tvnet::data::{
    center_columns, empirical_covariances, load_timeseries, InputFormat, ObservationSet,
};
use tvnet::eval::{f1_score, generate_scenario, td_ratio, temporal_deviation, ScenarioKind};
use tvnet::interpolate::infer_intermediate;
use tvnet::output::{round_sig, write_deviation_csv, MatrixData, NetworkFile, ScenarioBundle};
use tvnet::penalty::{PenaltyKind, PenaltySpec};
use tvnet::solver::{solve, SolverConfig};
use tvnet::stream::StreamState;

#[derive(Parser)]
#[command(
    name = "tvnet",
    about = "Time-varying sparse Gaussian graphical model estimation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Batch inference: estimate one network per timestamp from a CSV/TSV
    /// time-series file.
    Solve(SolveArgs),
    /// Online inference: read observation rows from stdin, emit one JSON
    /// line per timestamp with the sliding-window estimates.
    Stream(StreamArgs),
    /// Generate a synthetic scenario bundle (planted networks + samples).
    Synth(SynthArgs),
    /// Score the penalties against a synthetic bundle's planted truth.
    Eval(EvalArgs),
    /// Estimate the network at a time between two solved timestamps.
    Interpolate(InterpolateArgs),
}

#[derive(Args)]
struct SolverOpts {
    /// Evolution penalty: l1 | l2 | laplacian | linf | perturbed-node
    #[arg(long, default_value = "l2")]
    penalty: String,
    /// Sparsity weight (lambda >= 0)
    #[arg(long, default_value_t = 0.25)]
    lambda: f64,
    /// Temporal smoothness weight (beta >= 0)
    #[arg(long, default_value_t = 10.0)]
    beta: f64,
    /// ADMM step size
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Absolute stopping tolerance
    #[arg(long, default_value_t = 1e-5)]
    eps_abs: f64,
    /// Relative stopping tolerance
    #[arg(long, default_value_t = 1e-4)]
    eps_rel: f64,
    /// Outer iteration cap
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Worker threads for the per-timestamp updates (0 = all cores)
    #[arg(long, env = "TVNET_THREADS", default_value_t = 0)]
    threads: usize,
}

impl SolverOpts {
    fn penalty_spec(&self) -> Result<PenaltySpec, tvnet::error::TvnetError> {
        PenaltySpec::new(PenaltyKind::parse(&self.penalty)?, self.lambda, self.beta)
    }

    fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            rho: self.rho,
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
            max_iter: self.max_iter,
            threads: self.threads,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Input CSV/TSV: first column time, remaining columns sensor values
    #[arg(long)]
    input: PathBuf,
    /// First input line is a header
    #[arg(long)]
    has_header: bool,
    /// Re-bin timestamps into buckets of this width before solving
    #[arg(long)]
    bucket: Option<f64>,
    /// Subtract each column's global mean before solving
    #[arg(long)]
    center: bool,
    #[command(flatten)]
    solver: SolverOpts,
    /// Directory for networks.json, deviation.csv, report.json
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct StreamArgs {
    /// Sliding window length (timestamps kept live)
    #[arg(long, default_value_t = 10)]
    window: usize,
    #[command(flatten)]
    solver: SolverOpts,
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario shape: global-shift | local-shift
    #[arg(long, default_value = "global-shift")]
    kind: String,
    /// Number of variables
    #[arg(long, default_value_t = 10)]
    p: usize,
    /// Number of timestamps
    #[arg(long, default_value_t = 100)]
    timesteps: usize,
    /// Samples drawn per timestamp
    #[arg(long, default_value_t = 10)]
    samples_per_t: usize,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for scenario.json and observations.csv
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Scenario bundle written by `tvnet synth`
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    solver: SolverOpts,
    /// Directory for results.json
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct InterpolateArgs {
    /// networks.json written by `tvnet solve`
    #[arg(long)]
    input: PathBuf,
    /// Time at which to estimate the network
    #[arg(long)]
    at: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Stream(args) => cmd_stream(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Interpolate(args) => cmd_interpolate(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn load_observations(
    path: &Path,
    has_header: bool,
    bucket: Option<f64>,
    center: bool,
) -> anyhow::Result<ObservationSet> {
    let mut obs = load_timeseries(path, InputFormat::for_path(path, has_header))?;
    if let Some(width) = bucket {
        obs = obs.rebucket(width)?;
    }
    if center {
        obs = center_columns(&obs);
    }
    Ok(obs)
}

fn cmd_solve(args: &SolveArgs) -> anyhow::Result<u8> {
    let obs = load_observations(&args.input, args.has_header, args.bucket, args.center)?;
    let covs = empirical_covariances(&obs);
    let penalty = args.solver.penalty_spec()?;
    let cfg = args.solver.solver_config();
    let (seq, report) = solve(&covs, &penalty, &cfg, None)?;

    std::fs::create_dir_all(&args.output_dir)?;
    NetworkFile::from_sequence(&seq, obs.timestamps(), &penalty)
        .save(args.output_dir.join("networks.json"))?;
    write_deviation_csv(
        args.output_dir.join("deviation.csv"),
        obs.timestamps(),
        &temporal_deviation(&seq),
    )?;
    std::fs::write(
        args.output_dir.join("report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;

    if report.converged {
        Ok(0)
    } else {
        eprintln!(
            "warning: no convergence after {} iterations (primal {:.3e}, dual {:.3e})",
            report.iterations, report.primal_res, report.dual_res
        );
        Ok(2)
    }
}

/// One malformed stdin row: warn and keep the stream alive.
fn stream_warn(state: &mut StreamState, line_no: usize, message: impl std::fmt::Display) {
    eprintln!("warning: skipping line {line_no}: {message}");
    state.record_skip();
}

fn cmd_stream(args: &StreamArgs) -> anyhow::Result<u8> {
    let penalty = args.solver.penalty_spec()?;
    let cfg = args.solver.solver_config();
    let mut state = StreamState::new(args.window, penalty, cfg)?;

    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut bucket: Vec<DVector<f64>> = Vec::new();
    let mut bucket_time: Option<f64> = None;
    let mut dim: Option<usize> = None;
    let mut all_converged = true;

    let flush_bucket = |state: &mut StreamState,
                            bucket: &mut Vec<DVector<f64>>,
                            time: f64,
                            out: &mut dyn Write,
                            all_converged: &mut bool|
     -> anyhow::Result<()> {
        if bucket.is_empty() {
            return Ok(());
        }
        let p = bucket[0].len();
        let mut cov = DMatrix::zeros(p, p);
        for v in bucket.iter() {
            cov += v * v.transpose();
        }
        cov /= bucket.len() as f64;
        let n = bucket.len();
        bucket.clear();
        match state.append(cov, n, time) {
            Ok(update) => {
                *all_converged &= update.report.converged;
                let line = serde_json::json!({
                    "time": round_sig(time),
                    "samples": n,
                    "newest_deviation": update.newest_deviation.map(round_sig),
                    "converged": update.report.converged,
                    "window_times": state
                        .timestamps()
                        .iter()
                        .rev()
                        .take(state.window().min(state.appends()))
                        .rev()
                        .map(|&t| round_sig(t))
                        .collect::<Vec<_>>(),
                    "window_estimates": update
                        .window_estimates
                        .thetas
                        .iter()
                        .map(MatrixData::from_matrix)
                        .collect::<Vec<_>>(),
                });
                writeln!(out, "{line}")?;
            }
            Err(err) => {
                eprintln!("warning: dropping timestamp {time}: {err}");
                state.record_skip();
            }
        }
        Ok(())
    };

    for (idx, line) in stdin.lock().lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(|c| c.trim()).collect();
        if cells.len() < 2 {
            stream_warn(&mut state, line_no, "expected a time column plus values");
            continue;
        }
        let parsed: Option<Vec<f64>> = cells.iter().map(|c| c.parse().ok()).collect();
        let Some(values) = parsed else {
            stream_warn(&mut state, line_no, "non-numeric cell");
            continue;
        };
        let (time, coords) = (values[0], &values[1..]);
        match dim {
            None => dim = Some(coords.len()),
            Some(p) if p != coords.len() => {
                stream_warn(
                    &mut state,
                    line_no,
                    format!("ragged row: {} values, expected {p}", coords.len()),
                );
                continue;
            }
            _ => {}
        }
        if bucket_time.is_some_and(|t| t != time) {
            flush_bucket(
                &mut state,
                &mut bucket,
                bucket_time.unwrap(),
                &mut out,
                &mut all_converged,
            )?;
        }
        bucket_time = Some(time);
        bucket.push(DVector::from_column_slice(coords));
    }
    if let Some(time) = bucket_time {
        flush_bucket(&mut state, &mut bucket, time, &mut out, &mut all_converged)?;
    }

    if state.appends() + state.skipped() > 0 {
        eprintln!(
            "stream summary: {} timestamps processed, {} inputs skipped",
            state.appends(),
            state.skipped()
        );
    }
    Ok(if all_converged { 0 } else { 2 })
}

fn cmd_synth(args: &SynthArgs) -> anyhow::Result<u8> {
    let kind = match args.kind.as_str() {
        "global-shift" => ScenarioKind::GlobalShift,
        "local-shift" => ScenarioKind::LocalShift,
        other => anyhow::bail!("unknown scenario kind '{other}' (expected global-shift | local-shift)"),
    };
    let (truth, obs) = generate_scenario(kind, args.p, args.timesteps, args.samples_per_t, args.seed)?;
    std::fs::create_dir_all(&args.output_dir)?;
    ScenarioBundle::from_parts(&truth, &obs).save(args.output_dir.join("scenario.json"))?;

    // flat CSV mirror of the observations, consumable by solve/stream
    let mut csv = String::new();
    for (t, samples) in obs.timestamps().iter().zip(obs.samples()) {
        for v in samples {
            csv.push_str(&t.to_string());
            for x in v.iter() {
                csv.push(',');
                csv.push_str(&round_sig(*x).to_string());
            }
            csv.push('\n');
        }
    }
    std::fs::write(args.output_dir.join("observations.csv"), csv)?;
    println!(
        "wrote scenario.json and observations.csv ({} vars, {} timestamps, shift at {})",
        truth.p, truth.t, truth.shift_time
    );
    Ok(0)
}

fn cmd_eval(args: &EvalArgs) -> anyhow::Result<u8> {
    let bundle = ScenarioBundle::load(&args.input)?;
    let truth = bundle.truth()?;
    let obs = bundle.observations()?;
    let covs = empirical_covariances(&obs);
    let cfg = args.solver.solver_config();

    // one column per penalty at the requested (lambda, beta), plus the
    // static baseline (beta = 0: independent per-timestamp lasso)
    let mut columns = vec![(
        "static".to_string(),
        PenaltySpec::new(PenaltyKind::GroupL2, args.solver.lambda, 0.0)?,
    )];
    for kind in [
        PenaltyKind::ElementL1,
        PenaltyKind::GroupL2,
        PenaltyKind::Laplacian,
        PenaltyKind::LInf,
        PenaltyKind::PerturbedNode,
    ] {
        columns.push((
            kind.name().to_string(),
            PenaltySpec::new(kind, args.solver.lambda, args.solver.beta)?,
        ));
    }

    let mut results = Vec::new();
    println!("{:<16} {:>8} {:>10} {:>8} {:>6}", "penalty", "f1", "td-ratio", "argmax", "iters");
    for (name, penalty) in &columns {
        let (seq, report) = solve(&covs, penalty, &cfg, None)?;
        let f1 = f1_score(&seq, &truth);
        let td = td_ratio(&seq, truth.shift_time);
        println!(
            "{name:<16} {f1:>8.4} {:>10.3} {:>8} {:>6}",
            td.ratio, td.argmax_timestamp, report.iterations
        );
        results.push(serde_json::json!({
            "penalty": name,
            "lambda": penalty.lambda,
            "beta": penalty.beta,
            "f1": round_sig(f1),
            "td_ratio": round_sig(td.ratio),
            "argmax_timestamp": td.argmax_timestamp,
            "converged": report.converged,
            "iterations": report.iterations,
        }));
    }

    std::fs::create_dir_all(&args.output_dir)?;
    let table = serde_json::json!({
        "scenario": {
            "kind": truth.kind,
            "p": truth.p,
            "t": truth.t,
            "shift_time": truth.shift_time,
            "samples_per_t": truth.samples_per_t,
            "seed": truth.seed,
        },
        "results": results,
    });
    std::fs::write(
        args.output_dir.join("results.json"),
        serde_json::to_string_pretty(&table)?,
    )?;
    Ok(0)
}

fn cmd_interpolate(args: &InterpolateArgs) -> anyhow::Result<u8> {
    let file = NetworkFile::load(&args.input)?;
    let seq = file.to_sequence()?;
    let times = &file.timestamps;
    anyhow::ensure!(!times.is_empty(), "networks file holds no timestamps");
    let s = args.at;
    let (first, last) = (times[0], times[times.len() - 1]);
    anyhow::ensure!(
        (first..=last).contains(&s),
        "time {s} is outside the solved range [{first}, {last}]"
    );

    let matrix = if let Some(k) = times.iter().position(|&t| t == s) {
        file.matrices[k].to_matrix()?
    } else {
        let right = times.iter().position(|&t| t > s).expect("s < last");
        infer_intermediate(
            &seq.thetas[right - 1],
            &seq.thetas[right],
            times[right - 1],
            times[right],
            s,
            &file.penalty,
        )?
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "time": round_sig(s),
            "matrix": MatrixData::from_matrix(&matrix),
        }))?
    );
    Ok(0)
}
