use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use mmrecon::codes::{derive_family, read_family_dir, write_family_dir, CodeFamily, WaveLayout};
use mmrecon::decoder::{ConvergenceMode, Schedule};
use mmrecon::estimation::{default_threshold, EstimateMethod};
use mmrecon_bench::experiment::{parse_profile, VariantKind};
use mmrecon_bench::report::{write_csv_files, write_records};
use mmrecon_bench::{
    child_seed, run_variants, summarize, BenchError, BuildParams, DecodeRate, ErrorModel,
    Experiment, ExperimentSpec, FamilySet, FamilySource, MetricsRecord, Variant,
};

#[derive(Parser, Debug)]
#[command(name = "mmrecon", version, about = "Multi-matrix LDPC reconciliation experiments")]
struct Cli {
    /// Master seed for code construction, keys and channel noise.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Output path: a directory for `build`, a CSV file otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a code family and write it as alist files plus a manifest.
    Build {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0.8)]
        rate: f64,
        #[arg(long, default_value_t = 5)]
        u: usize,
        /// compact or separated
        #[arg(long, default_value = "separated")]
        wave: String,
        /// Column degree profile such as `3:0.5,2:0.19,20:0.15`; regular
        /// degree 3 when absent.
        #[arg(long)]
        profile: Option<String>,
        #[arg(long, default_value_t = 16)]
        max_attempts: usize,
    },
    /// Estimate the QBER of simulated key pairs.
    Estimate {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        qber: f64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// multi, single or sampling
        #[arg(long, default_value = "multi")]
        method: String,
        #[arg(long, default_value = "exact_count")]
        error_model: String,
        #[arg(long, default_value_t = 0.5)]
        sample_rate: f64,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Reconcile simulated key pairs with a stored family.
    Reconcile {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        qber: f64,
        /// flooding, shuffled or layered
        #[arg(long, default_value = "flooding")]
        schedule: String,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        /// random-one or all
        #[arg(long, default_value = "all")]
        mode: String,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value = "exact_count")]
        error_model: String,
        /// Abort threshold; defaults to the Shannon-limit error rate of the code.
        #[arg(long)]
        threshold: Option<f64>,
        /// Rate fed to the decoder: estimated or injected.
        #[arg(long, default_value = "estimated")]
        decode_rate: String,
    },
    /// Run an experiment preset.
    Bench(BenchArgs),
}

#[derive(clap::Args, Debug)]
struct BenchArgs {
    /// est_accuracy, iterations_vs_qber, iterations_vs_u, wave_effect,
    /// success_rate, corrections_per_iter or ber_after_k
    experiment: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    u: Option<usize>,
    /// Comma-separated QBER values.
    #[arg(long)]
    qber: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Comma-separated schedules.
    #[arg(long)]
    schedules: Option<String>,
    #[arg(long)]
    error_model: Option<String>,
    #[arg(long)]
    k_iters: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
    /// injected or estimated
    #[arg(long)]
    decode_rate: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    sample_rate: Option<f64>,
    /// Comma-separated layouts.
    #[arg(long)]
    wave: Option<String>,
    /// Comma-separated family sizes for iterations_vs_u.
    #[arg(long)]
    u_list: Option<String>,
    /// Column degree profile, as for `build`.
    #[arg(long)]
    profile: Option<String>,
    /// Use a stored family instead of building one.
    #[arg(long)]
    family: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    max_attempts: usize,
    /// Write 0 for wall_seconds so that reruns give identical files.
    #[arg(long)]
    no_timing: bool,
}

fn parse<T: FromStr>(s: &str, what: &str) -> Result<T, BenchError>
where
    T::Err: std::fmt::Display,
{
    s.trim()
        .parse::<T>()
        .map_err(|e| BenchError::Args(format!("{what} {s:?}: {e}")))
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, BenchError>
where
    T::Err: std::fmt::Display,
{
    s.split(',').map(|item| parse(item, what)).collect()
}

fn load_family(dir: &Path) -> Result<Arc<CodeFamily>, BenchError> {
    Ok(Arc::new(read_family_dir(dir)?))
}

fn emit(out: Option<&Path>, records: &[MetricsRecord]) -> Result<(), BenchError> {
    match out {
        Some(path) => write_csv_files(path, records)?,
        None => write_records(io::stdout().lock(), records)?,
    }
    let mut err = io::stderr().lock();
    for s in summarize(records) {
        writeln!(
            err,
            "{:<16} qber {:<8} n {:<5} iters {:>7.2} +- {:<5.2} success {:>6.4} ber {:.3e} rmse {:.3e}",
            s.algorithm,
            s.qber_injected,
            s.count,
            s.mean_iterations,
            s.se_iterations,
            s.success_rate,
            s.ber,
            s.rmse_estimate
        )?;
    }
    Ok(())
}

fn build(cli: &Cli, n: usize, rate: f64, u: usize, wave: &str, profile: Option<&str>, max_attempts: usize) -> Result<(), BenchError> {
    let out = cli
        .out
        .as_deref()
        .ok_or_else(|| BenchError::Args("build needs --out DIR".into()))?;
    let layout: WaveLayout = parse(wave, "wave layout")?;
    if u == 0 {
        return Err(BenchError::Args("u must be at least 1".into()));
    }
    let params = BuildParams {
        n,
        rate,
        profile: profile.map(parse_profile).transpose()?,
        seed: cli.seed,
        max_attempts,
    };
    let base = params.build_base()?;
    let family = derive_family(&base, u, layout, child_seed(cli.seed, &[u64::MAX]))?;
    write_family_dir(&family, out)?;
    eprintln!(
        "wrote {} members of {}x{} to {}",
        family.u(),
        family.m(),
        family.n(),
        out.display()
    );
    Ok(())
}

fn single_variant_run(
    cli: &Cli,
    family: Arc<CodeFamily>,
    mut spec: ExperimentSpec,
    variant: Variant,
) -> Result<(), BenchError> {
    spec.n = family.n();
    spec.rate = 1.0 - family.m() as f64 / family.n() as f64;
    spec.u = family.u();
    spec.seed = cli.seed;
    spec.wave_layouts = vec![family.wave_layout()];
    let variants = vec![variant];
    let families = FamilySet::prepare_for(&spec, &variants, &FamilySource::Family(family))?;
    let records = run_variants(&spec, &variants, &families)?;
    emit(cli.out.as_deref(), &records)
}

fn run(cli: &Cli) -> Result<(), BenchError> {
    match &cli.command {
        Command::Build {
            n,
            rate,
            u,
            wave,
            profile,
            max_attempts,
        } => build(cli, *n, *rate, *u, wave, profile.as_deref(), *max_attempts),
        Command::Estimate {
            family,
            qber,
            trials,
            method,
            error_model,
            sample_rate,
            threshold,
        } => {
            let family = load_family(family)?;
            let method = match method.as_str() {
                "multi" => EstimateMethod::MultiSyndrome,
                "single" => EstimateMethod::SingleSyndrome,
                "sampling" => EstimateMethod::Sampling,
                other => return Err(BenchError::Args(format!("unknown method {other:?}"))),
            };
            let mut spec = ExperimentSpec::preset(Experiment::EstAccuracy);
            spec.qber_list = vec![*qber];
            spec.trials = *trials;
            spec.error_model = parse(error_model, "error model")?;
            spec.sample_rate = *sample_rate;
            spec.threshold = *threshold;
            let u = match method {
                EstimateMethod::Sampling => 0,
                EstimateMethod::SingleSyndrome => 1,
                EstimateMethod::MultiSyndrome => family.u(),
            };
            let variant = Variant {
                label: method.to_string(),
                u,
                layout: family.wave_layout(),
                kind: VariantKind::Estimate(method),
            };
            single_variant_run(cli, family, spec, variant)
        }
        Command::Reconcile {
            family,
            qber,
            schedule,
            max_iter,
            mode,
            trials,
            error_model,
            threshold,
            decode_rate,
        } => {
            let family = load_family(family)?;
            let schedule: Schedule = parse(schedule, "schedule")?;
            let mut spec = ExperimentSpec::preset(Experiment::SuccessRate);
            spec.qber_list = vec![*qber];
            spec.trials = *trials;
            spec.max_iterations = *max_iter;
            spec.convergence_mode = parse::<ConvergenceMode>(mode, "convergence mode")?;
            spec.error_model = parse(error_model, "error model")?;
            spec.threshold = threshold.unwrap_or_else(|| default_threshold(family.m(), family.n()));
            spec.decode_rate = parse(decode_rate, "decode rate")?;
            let variant = Variant {
                label: schedule.algorithm_name(family.u()),
                u: family.u(),
                layout: family.wave_layout(),
                kind: VariantKind::Reconcile(schedule),
            };
            single_variant_run(cli, family, spec, variant)
        }
        Command::Bench(args) => bench(cli, args),
    }
}

fn bench(cli: &Cli, a: &BenchArgs) -> Result<(), BenchError> {
    let experiment: Experiment = a.experiment.parse()?;
    let mut spec = ExperimentSpec::preset(experiment);
    spec.seed = cli.seed;
    if let Some(v) = a.n {
        spec.n = v;
    }
    if let Some(v) = a.rate {
        spec.rate = v;
    }
    if let Some(v) = a.u {
        spec.u = v;
    }
    if let Some(v) = &a.qber {
        spec.qber_list = parse_list(v, "QBER")?;
    }
    if let Some(v) = a.trials {
        spec.trials = v;
    }
    if let Some(v) = a.max_iter {
        spec.max_iterations = v;
    }
    if let Some(v) = &a.schedules {
        spec.schedule_list = parse_list(v, "schedule")?;
    }
    if let Some(v) = &a.error_model {
        spec.error_model = parse::<ErrorModel>(v, "error model")?;
    }
    if let Some(v) = a.k_iters {
        spec.k_iters = v;
    }
    if let Some(v) = &a.mode {
        spec.convergence_mode = parse(v, "convergence mode")?;
    }
    if let Some(v) = &a.decode_rate {
        spec.decode_rate = parse::<DecodeRate>(v, "decode rate")?;
    }
    if let Some(v) = a.threshold {
        spec.threshold = v;
    }
    if let Some(v) = a.sample_rate {
        spec.sample_rate = v;
    }
    if let Some(v) = &a.wave {
        spec.wave_layouts = parse_list(v, "wave layout")?;
    }
    if let Some(v) = &a.u_list {
        spec.u_list = parse_list(v, "u")?;
    }
    spec.timing = !a.no_timing;

    let source = match &a.family {
        Some(dir) => {
            let family = load_family(dir)?;
            spec.n = family.n();
            spec.rate = 1.0 - family.m() as f64 / family.n() as f64;
            FamilySource::Family(family)
        }
        None => FamilySource::Build(BuildParams {
            n: spec.n,
            rate: spec.rate,
            profile: a.profile.as_deref().map(parse_profile).transpose()?,
            seed: cli.seed,
            max_attempts: a.max_attempts,
        }),
    };
    spec.validate()?;
    let variants = spec.variants();
    let families = FamilySet::prepare_for(&spec, &variants, &source)?;
    let records = run_variants(&spec, &variants, &families)?;
    emit(cli.out.as_deref(), &records)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
