//! Command-line front end for `quantune`.

pub mod cli;
pub mod error;
pub mod io;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use quantune::{
    coverage_probability, estimate_threshold, run_plan, run_repeated_splits, sweep_gammas, GuaranteeParams, Method,
    SampleSet, SampleStream, SamplingMode, Source, SplitPlan, StreamRole, SweepTarget, TrialPlan, ValidationReport,
};
use serde::Serialize;

use cli::{Cli, Command, GuaranteeArgs, ModeArg, OutputArgs, TrialArgs, OUTPUT_DIR_ENV};
pub use error::CliError;
use report::{CoverageValue, Payload, ReportEnvelope, SweepEntry};

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn main_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let target: &mut dyn Write = if shown { stdout } else { stderr };
            let _ = write!(target, "{}", e.render());
            return if shown { 0 } else { 2 };
        }
    };
    run(cli.command, stdout, stderr)
}

/// Runs a parsed command.
pub fn run(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match execute(&command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn guarantee(args: &GuaranteeArgs) -> Result<GuaranteeParams, CliError> {
    Ok(GuaranteeParams::new(args.gamma, args.epsilon, args.rho)?)
}

fn inputs<T: Serialize>(args: &T, dataset: Option<&SampleSet>) -> Result<serde_json::Value, CliError> {
    let mut value = serde_json::to_value(args)?;
    if let (Some(data), Some(map)) = (dataset, value.as_object_mut()) {
        map.insert("n_points".into(), data.len().into());
    }
    Ok(value)
}

fn destination(output: &OutputArgs, command: &str) -> Option<PathBuf> {
    output.output.clone().or_else(|| {
        std::env::var_os(OUTPUT_DIR_ENV).map(|dir| PathBuf::from(dir).join(format!("{command}.{}", output.format.extension())))
    })
}

fn emit(
    envelope: ReportEnvelope,
    output: &OutputArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let dest = destination(output, &envelope.command);
    for path in report::write_report(&envelope, dest.as_deref(), output.format, stdout)? {
        writeln!(stderr, "wrote {}", path.display())?;
    }
    Ok(())
}

fn summarize(r: &ValidationReport, stderr: &mut dyn Write) -> Result<(), CliError> {
    writeln!(
        stderr,
        "{} N={} trials={} fraction_outside={} median_far={}",
        r.metadata.method, r.metadata.n_samples, r.metadata.n_trials, r.fraction_outside, r.summary.median
    )?;
    Ok(())
}

fn default_mode(mode: Option<ModeArg>, source: &quantune::SourceSpec) -> SamplingMode {
    match mode {
        Some(m) => m.into(),
        None if source.is_trajectory() => SamplingMode::SequentialTrajectory,
        None => SamplingMode::IidFresh,
    }
}

fn split_plan(guarantee: GuaranteeParams, t: &TrialArgs, label: String) -> SplitPlan {
    SplitPlan {
        guarantee,
        method: t.method.into(),
        n_trials: t.trials,
        beta_weight: t.beta,
        master_seed: t.seed,
        bin_width: t.bin_width,
        dataset_label: label,
    }
}

fn execute(command: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let name = command.name();
    match command {
        Command::SampleSize(args) => {
            let params = guarantee(&args.guarantee)?;
            let results = args
                .method
                .methods()
                .into_iter()
                .map(|m| m.sample_size(&params).map_err(|e| CliError::from(e).prefixed(m)))
                .collect::<Result<Vec<_>, _>>()?;
            if params.epsilon_warning() {
                writeln!(stderr, "warning: epsilon exceeds min(gamma, 1 - gamma); the band leaves [0, 1]")?;
            }
            let line: Vec<String> = results
                .iter()
                .map(|r| format!("N_{}={}", r.method.to_string().to_uppercase(), r.n_samples))
                .collect();
            writeln!(stderr, "{}", line.join(" "))?;
            let env = ReportEnvelope::new(name, inputs(args, None)?, Payload::SampleSize(results));
            emit(env, &args.output, stdout, stderr)
        }
        Command::Estimate(args) => {
            let data = io::load_samples(&args.input.input, args.input.column.as_deref())?;
            let estimate = estimate_threshold(&data, args.gamma, args.beta)?;
            writeln!(
                stderr,
                "threshold={} from order statistics {} and {} of {}",
                estimate.value, estimate.lower_index, estimate.upper_index, estimate.n_samples
            )?;
            let env = ReportEnvelope::new(name, inputs(args, Some(&data))?, Payload::Estimate(estimate));
            emit(env, &args.output, stdout, stderr)
        }
        Command::Simulate(args) => {
            let t = &args.trials;
            let plan = TrialPlan {
                source: args.source.clone(),
                guarantee: guarantee(&args.guarantee)?,
                method: t.method.into(),
                n_trials: t.trials,
                validation_size: args.validation_size,
                sampling_mode: default_mode(args.mode, &args.source),
                beta_weight: t.beta,
                master_seed: t.seed,
                bin_width: t.bin_width,
            };
            let report = run_plan(&plan)?;
            summarize(&report, stderr)?;
            let env = ReportEnvelope::new(name, inputs(args, None)?, Payload::Validation(Box::new(report)));
            emit(env, &args.output, stdout, stderr)
        }
        Command::SplitEval(args) => {
            let data = io::load_samples(&args.input.input, args.input.column.as_deref())?;
            let plan = split_plan(guarantee(&args.guarantee)?, &args.trials, args.input.input.display().to_string());
            let report = run_repeated_splits(&data, &plan)?;
            summarize(&report, stderr)?;
            let env = ReportEnvelope::new(name, inputs(args, Some(&data))?, Payload::Validation(Box::new(report)));
            emit(env, &args.output, stdout, stderr)
        }
        Command::Coverage(args) => {
            let coverage = coverage_probability(args.m, args.n, args.gamma.as_f64(), args.epsilon)?;
            writeln!(stderr, "coverage={coverage}")?;
            let value = CoverageValue {
                m: args.m,
                n: args.n,
                gamma: args.gamma,
                epsilon: args.epsilon,
                coverage,
            };
            let env = ReportEnvelope::new(name, inputs(args, None)?, Payload::Coverage(value));
            emit(env, &args.output, stdout, stderr)
        }
        Command::Sweep(args) => {
            let first = *args.gammas.first().ok_or_else(|| CliError::Usage("--gammas is empty".into()))?;
            let base = GuaranteeParams::new(first, args.epsilon, args.rho)?;
            let t = &args.trials;
            let dataset = match &args.input {
                Some(path) => Some(io::load_samples(path, args.column.as_deref())?),
                None => None,
            };
            let target = match (&dataset, &args.source) {
                (Some(data), _) => SweepTarget::Dataset {
                    data,
                    plan: split_plan(base, t, args.input.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
                },
                (None, Some(source)) => SweepTarget::Plan(TrialPlan {
                    source: source.clone(),
                    guarantee: base,
                    method: t.method.into(),
                    n_trials: t.trials,
                    validation_size: args.validation_size,
                    sampling_mode: default_mode(args.mode, source),
                    beta_weight: t.beta,
                    master_seed: t.seed,
                    bin_width: t.bin_width,
                }),
                (None, None) => return Err(CliError::Usage("sweep needs --input or --source".into())),
            };
            let entries: Vec<SweepEntry> = sweep_gammas(&target, &args.gammas)
                .into_iter()
                .map(|(gamma, result)| match result {
                    Ok(report) => SweepEntry {
                        gamma,
                        report: Some(report),
                        error: None,
                    },
                    Err(e) => SweepEntry {
                        gamma,
                        report: None,
                        error: Some(e.to_string()),
                    },
                })
                .collect();
            for e in &entries {
                match (&e.report, &e.error) {
                    (Some(r), _) => writeln!(
                        stderr,
                        "gamma={} N={} fraction_outside={} median_far={}",
                        e.gamma, r.metadata.n_samples, r.fraction_outside, r.summary.median
                    )?,
                    (None, Some(err)) => writeln!(stderr, "gamma={} error: {err}", e.gamma)?,
                    (None, None) => {}
                }
            }
            let env = ReportEnvelope::new(name, inputs(args, dataset.as_ref())?, Payload::Sweep(entries));
            emit(env, &args.output, stdout, stderr)
        }
        Command::Generate(args) => {
            let source = Source::new(args.source.clone())?;
            let mut stream = SampleStream::substream(args.seed, StreamRole::Dataset, 0);
            let values = source.generate(&mut stream, args.length, args.seed);
            match &args.output {
                Some(path) => {
                    let mut file =
                        std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                    io::write_values(&values, &mut file)?;
                    writeln!(stderr, "wrote {} values to {}", values.len(), path.display())?;
                }
                None => io::write_values(&values, stdout)?,
            }
            Ok(())
        }
    }
}

impl CliError {
    fn prefixed(self, method: Method) -> Self {
        match self {
            CliError::Precondition(m) => CliError::Precondition(format!("{method}: {m}")),
            CliError::Usage(m) => CliError::Usage(format!("{method}: {m}")),
            other => other,
        }
    }
}
