mod args;
mod manifest;
mod plots;
mod problem;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Parser;
use lfp_core::gradients::grad_check;
use lfp_core::risk::{bayes_risk, posterior};
use lfp_core::solver::{random_masses, report, solve, sweep, CardinalityBounds, SweepEntry};
use lfp_core::{DiscreteDistributionF64, GradientMode, SolveResultF64, SolverConfigF64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use args::{BoundsArgs, Cli, Command, Format, GradCheckArgs, GradientArg, OutputArgs, RiskEvalArgs, SolveArgs};
use manifest::RunManifest;

/// Bad flags or flag combinations; exits with status 64.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

const EXIT_USAGE: u8 = 64;
const EXIT_NOT_CONVERGED: u8 = 2;
/// `grad-check` fails above this relative error.
const GRAD_CHECK_TOL: f64 = 1e-4;

struct Outcome {
    code: u8,
    manifest: RunManifest,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let result = match cli.command {
        Command::Replay(r) => replay(&r.manifest, r.out.as_deref()),
        command => execute(command, argv[1..].to_vec()).map(|o| o.code),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn execute(command: Command, args: Vec<String>) -> Result<Outcome> {
    let started = Instant::now();
    let (name, out, outcome) = match &command {
        Command::Solve(a) => ("solve", a.output.out.clone(), with_jobs(&a.output, || cmd_solve(a))?),
        Command::Sweep(a) => ("sweep", a.output.out.clone(), with_jobs(&a.output, || cmd_sweep(a))?),
        Command::Bounds(a) => ("bounds", a.output.out.clone(), cmd_bounds(a)?),
        Command::RiskEval(a) => ("risk-eval", a.output.out.clone(), cmd_risk_eval(a)?),
        Command::GradCheck(a) => ("grad-check", a.output.out.clone(), cmd_grad_check(a)?),
        Command::Replay(_) => unreachable!("replay is dispatched in main"),
    };
    let (code, config, seed, digest) = outcome;
    let manifest = RunManifest {
        command: name.into(),
        args,
        config,
        seed,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        input_digest: digest,
    };
    manifest.emit(out.as_deref())?;
    Ok(Outcome { code, manifest })
}

/// Exit code, resolved config, seed and input digest of one command.
type Finished = (u8, serde_json::Value, Option<u64>, String);

fn with_jobs<F: FnOnce() -> Result<Finished> + Send>(out: &OutputArgs, f: F) -> Result<Finished> {
    match out.jobs {
        None => f(),
        Some(0) => Err(UsageError("--jobs must be at least 1".into()).into()),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .context("building thread pool")?
            .install(f),
    }
}

fn replay(path: &Path, out: Option<&Path>) -> Result<u8> {
    let recorded = RunManifest::read(path)?;
    let mut args = recorded.args.clone();
    if let Some(dir) = out {
        args = replace_out(&args, dir);
    }
    let mut argv = vec!["lfp".to_string()];
    argv.extend(args.iter().cloned());
    let cli = Cli::try_parse_from(&argv).map_err(|e| UsageError(format!("manifest arguments: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        bail!(UsageError("a manifest cannot record a replay".into()));
    }
    let outcome = execute(cli.command, args)?;
    if outcome.manifest.input_digest != recorded.input_digest {
        bail!(
            "inputs changed since the run was recorded (digest {} != {})",
            outcome.manifest.input_digest,
            recorded.input_digest
        );
    }
    Ok(outcome.code)
}

fn replace_out(args: &[String], dir: &Path) -> Vec<String> {
    let mut kept = Vec::with_capacity(args.len() + 2);
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if !a.starts_with("--out=") {
            kept.push(a.clone());
        }
    }
    kept.push("--out".into());
    kept.push(dir.display().to_string());
    kept
}

fn solver_config(a: &SolveArgs) -> Result<SolverConfigF64> {
    let s = &a.solver;
    let mut cfg = SolverConfigF64 {
        d: s.d,
        step: s.step,
        seed: s.seed,
        gradient_mode: match s.gradient {
            GradientArg::Auto => GradientMode::Auto,
            GradientArg::Analytic => GradientMode::Analytic,
            GradientArg::Fd => GradientMode::Fd,
        },
        minimize_support: !s.no_support_search,
        ..Default::default()
    };
    if let Some(m) = s.max_iter {
        cfg.max_iter = m;
    }
    if let Some(r) = s.restarts {
        cfg.restarts = r;
    }
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

#[derive(Serialize)]
struct Resolved<'a, P: Serialize, C: Serialize> {
    problem: &'a P,
    config: &'a C,
}

fn cmd_solve(a: &SolveArgs) -> Result<Finished> {
    let parameter = problem::single_parameter(&a.problem)?;
    let (spec, description) = problem::build(&a.problem, parameter)?;
    let cfg = solver_config(a)?;
    let result = solve(&spec, &cfg)?;
    let entries = [SweepEntry {
        parameter: parameter.unwrap_or(0),
        result,
    }];
    let result = &entries[0].result;
    match a.output.format {
        Format::Json => print!("{}", to_json(result)?),
        Format::Csv => print!("{}", report::support_csv(&entries)),
    }
    if let Some(dir) = &a.output.out {
        create_dir(dir)?;
        write_file(dir, "result.json", &to_json(result)?)?;
        write_file(dir, "support.csv", &report::support_csv(&entries))?;
        write_file(dir, "trace.csv", &report::trace_csv(result))?;
    }
    let digest = manifest::digest(&description)?;
    let config = serde_json::to_value(Resolved {
        problem: &description,
        config: &cfg,
    })?;
    Ok((exit_for(result), config, Some(cfg.seed), digest))
}

fn exit_for(result: &SolveResultF64) -> u8 {
    if result.converged {
        0
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn cmd_sweep(a: &SolveArgs) -> Result<Finished> {
    let dir: PathBuf = a
        .output
        .out
        .clone()
        .ok_or_else(|| UsageError("sweep needs --out DIR".into()))?;
    let values = problem::parameter_values(&a.problem)?
        .ok_or_else(|| UsageError("sweep needs a channel with --m or --levels".into()))?;
    let cfg = solver_config(a)?;
    let mut descriptions = Vec::with_capacity(values.len());
    for &v in &values {
        // Builds every problem up front so that bad values fail before any solving.
        descriptions.push(problem::build(&a.problem, Some(v))?.1);
    }
    let entries = sweep(
        |v| {
            problem::build(&a.problem, Some(v))
                .map(|(spec, _)| spec)
                .map_err(|e| match e.downcast::<lfp_core::Error>() {
                    Ok(core) => core,
                    Err(other) => lfp_core::Error::InvalidParameter(other.to_string()),
                })
        },
        &values,
        &cfg,
    )?;
    create_dir(&dir)?;
    write_file(&dir, "support.csv", &report::support_csv(&entries))?;
    write_file(&dir, "pmf.csv", &report::pmf_csv(&entries))?;
    write_file(&dir, "summary.csv", &report::summary_csv(&entries))?;
    write_file(&dir, "results.json", &to_json(&entries)?)?;
    write_file(&dir, "plot_support.py", plots::SUPPORT_SCRIPT)?;
    write_file(&dir, "plot_pmf.py", plots::PMF_SCRIPT)?;
    match a.output.format {
        Format::Json => print!("{}", to_json(&entries)?),
        Format::Csv => print!("{}", report::summary_csv(&entries)),
    }
    let code = entries.iter().map(|e| exit_for(&e.result)).max().unwrap_or(0);
    let digest = manifest::digest(&descriptions)?;
    let config = serde_json::to_value(Resolved {
        problem: &descriptions,
        config: &cfg,
    })?;
    Ok((code, config, Some(cfg.seed), digest))
}

fn cmd_bounds(a: &BoundsArgs) -> Result<Finished> {
    if a.outputs == 0 || a.n == 0 {
        return Err(UsageError("--N and --n must be at least 1".into()).into());
    }
    let b = CardinalityBounds::new(a.outputs, a.k, a.n);
    let text = match a.output.format {
        Format::Json => serde_json::to_string(&b)? + "\n",
        Format::Csv => format!("general,t_compatible,refined\n{},{},{}\n", b.general, b.t_compatible, b.refined),
    };
    print!("{text}");
    if let Some(dir) = &a.output.out {
        create_dir(dir)?;
        write_file(dir, "bounds.json", &to_json(&b)?)?;
    }
    let inputs = (a.outputs, a.k, a.n);
    Ok((0, serde_json::to_value(a)?, None, manifest::digest(&inputs)?))
}

fn read_prior(path: &Path) -> Result<(DiscreteDistributionF64, String)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw: DiscreteDistributionF64 =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    // Re-validates lengths and masses.
    let prior = DiscreteDistributionF64::new(raw.points, raw.masses)?;
    Ok((prior, text))
}

#[derive(Serialize)]
struct RiskEvalOutput {
    risk: f64,
    marginal: Vec<f64>,
    cond_mean: Vec<Option<Vec<f64>>>,
}

fn cmd_risk_eval(a: &RiskEvalArgs) -> Result<Finished> {
    let parameter = problem::single_parameter(&a.problem)?;
    let (spec, description) = problem::build(&a.problem, parameter)?;
    let (prior, text) = read_prior(&a.prior)?;
    if let Err(v) = prior.validate(&spec.support) {
        bail!(lfp_core::Error::InvalidParameter(format!("prior does not fit the support: {v:?}")));
    }
    let table = posterior(&prior, spec.channel.as_ref())?;
    let out = RiskEvalOutput {
        risk: bayes_risk(&prior, spec.channel.as_ref(), &spec.loss)?,
        marginal: table.marginal,
        cond_mean: table.cond_mean,
    };
    let text_out = match a.output.format {
        Format::Json => to_json(&out)?,
        Format::Csv => {
            let mut s = String::from("output,marginal,cond_mean\n");
            for (j, (m, c)) in out.marginal.iter().zip(&out.cond_mean).enumerate() {
                let c = c
                    .as_ref()
                    .map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"))
                    .unwrap_or_default();
                s.push_str(&format!("{j},{m},{c}\n"));
            }
            s
        }
    };
    print!("{text_out}");
    if let Some(dir) = &a.output.out {
        create_dir(dir)?;
        write_file(dir, "risk.json", &to_json(&out)?)?;
    }
    let digest = manifest::digest(&(&description, &text))?;
    let config = serde_json::to_value(Resolved {
        problem: &description,
        config: a,
    })?;
    Ok((0, config, None, digest))
}

/// Atoms uniform over the bounding box of the support, masses from [`random_masses`].
fn random_prior(spec: &lfp_core::ProblemSpecF64, atoms: usize, seed: u64) -> Result<DiscreteDistributionF64> {
    if atoms == 0 {
        return Err(UsageError("--atoms must be at least 1".into()).into());
    }
    let (lo, hi) = spec.support.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..atoms)
        .map(|_| {
            let x: Vec<f64> = lo.iter().zip(&hi).map(|(&l, &h)| l + (h - l) * rng.gen::<f64>()).collect();
            spec.support.project(&x)
        })
        .collect();
    Ok(DiscreteDistributionF64::new(points, random_masses(atoms, seed))?)
}

fn cmd_grad_check(a: &GradCheckArgs) -> Result<Finished> {
    let parameter = problem::single_parameter(&a.problem)?;
    let (spec, description) = problem::build(&a.problem, parameter)?;
    let (prior, prior_text) = match &a.prior {
        Some(path) => {
            let (p, t) = read_prior(path)?;
            (p, Some(t))
        }
        None => (random_prior(&spec, a.atoms, a.seed)?, None),
    };
    let report = grad_check(&prior, spec.channel.as_ref(), &spec.loss, a.fd_step, Some(&spec.support))?;
    let text = match a.output.format {
        Format::Json => to_json(&report)?,
        Format::Csv => format!(
            "max_rel_err,analytic,numeric\n{},{},{}\n",
            report.max_rel_err, report.analytic, report.numeric
        ),
    };
    print!("{text}");
    if let Some(dir) = &a.output.out {
        create_dir(dir)?;
        write_file(dir, "grad_check.json", &to_json(&report)?)?;
        write_file(dir, "prior.json", &to_json(&prior)?)?;
    }
    let code = if report.max_rel_err > GRAD_CHECK_TOL { 1 } else { 0 };
    let digest = manifest::digest(&(&description, &prior_text, a.atoms, a.seed, a.fd_step))?;
    let config = serde_json::to_value(Resolved {
        problem: &description,
        config: a,
    })?;
    Ok((code, config, Some(a.seed), digest))
}
