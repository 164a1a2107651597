//! Command-line driver binding the dataset, harness and evaluation modules
//! into reproducible experiments.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.
//! Every experiment prints its fully resolved configuration to stderr so a
//! result file can always be traced back to its inputs.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use idiorec_core::dataset::{generate_synthetic_seeded, load_votes, write_votes, VoteFormat};
use idiorec_core::error::Error as CoreError;
use idiorec_core::eval::{summarize, wilcoxon_p, wilcoxon_ranks, Summary};
use idiorec_core::harness::{run_experiment, swap_experiment, sweep, Algo, ExperimentConfig, SweepParam};
use idiorec_core::predictor::PredictionOptions;
use idiorec_core::{csvio, Dataset, Score};

#[derive(Parser)]
#[command(name = "idiorec", version, about = "Immune-network collaborative filtering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a clustered synthetic votes file
    Synth(SynthArgs),
    /// Load and validate a votes file, reporting basic statistics
    Validate(ValidateArgs),
    /// Run the reserved-vote experiment and write a results CSV
    Run(RunArgs),
    /// Sweep the stimulation or suppression rate over a list of values
    Sweep(SweepArgs),
    /// Record SP and AIS neighbourhoods, evaluate all four swapped regimes
    Swap(SwapArgs),
    /// Wilcoxon signed-rank test over two columns of a CSV
    Wilcoxon(WilcoxonArgs),
    /// Summarize a results CSV
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    users: usize,
    #[arg(long)]
    movies: usize,
    #[arg(long)]
    clusters: usize,
    #[arg(long)]
    sparsity: f64,
    #[arg(long)]
    noise: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Output encoding: raw0to5 or normalized
    #[arg(long, default_value = "normalized")]
    format: String,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    votes: PathBuf,
    #[arg(long, default_value = "normalized")]
    format: String,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    votes: PathBuf,
    #[arg(long, default_value = "normalized")]
    format: String,
    /// Stimulation rate k1 (required for ais and matched-sp)
    #[arg(long)]
    stim: Option<f64>,
    /// Suppression rate k2 (required for ais and matched-sp)
    #[arg(long)]
    supp: Option<f64>,
    /// Death rate k3
    #[arg(long, default_value_t = 0.1)]
    death: f64,
    /// Antibody pool capacity
    #[arg(long, default_value_t = 100)]
    pool: usize,
    #[arg(long, default_value_t = 100)]
    test_users: usize,
    #[arg(long, default_value_t = 15000)]
    max_reviewers: usize,
    /// Neighbourhood size for the Simple Pearson predictor
    #[arg(long, default_value_t = 100)]
    sp_k: usize,
    #[arg(long)]
    seed: u64,
    /// Default vote for neighbours who have not seen a film: none or a
    /// quantized value such as 0.4
    #[arg(long, default_value = "none")]
    default_vote: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// sp, ais or matched-sp
    #[arg(long)]
    algo: String,
    #[arg(long)]
    out: PathBuf,
    /// Directory for per-user AIS concentration trajectories
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Also dump the selected neighbourhoods to this CSV
    #[arg(long)]
    dump_neighborhoods: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// stim or supp
    #[arg(long)]
    param: String,
    /// Comma-separated list of rate values
    #[arg(long)]
    values: String,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SwapArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Prefix for the output files (records, comparisons, characteristics,
    /// membership, neighborhoods)
    #[arg(long)]
    out_prefix: String,
}

#[derive(Args)]
struct WilcoxonArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    col_a: String,
    #[arg(long)]
    col_b: String,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> CliError {
        match &err {
            CoreError::Parse { .. }
            | CoreError::Io(_)
            | CoreError::Csv(_)
            | CoreError::NotEnoughUsers { .. } => CliError::Data(err.to_string()),
            CoreError::InvalidInput(_) => CliError::Usage(err.to_string()),
            _ => CliError::Runtime(err.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Swap(args) => cmd_swap(args),
        Command::Wilcoxon(args) => cmd_wilcoxon(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn parse_format(s: &str) -> Result<VoteFormat, CliError> {
    VoteFormat::parse(s).map_err(|e| CliError::Usage(e.to_string()))
}

fn open_input(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))
}

fn create_output(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

fn load_dataset(path: &Path, format: VoteFormat) -> Result<Dataset, CliError> {
    let reader = open_input(path)?;
    load_votes(reader, format).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let format = parse_format(&args.format)?;
    let dataset = generate_synthetic_seeded(
        args.users,
        args.movies,
        args.clusters,
        args.sparsity,
        args.noise,
        args.seed,
    )?;
    eprintln!(
        "config: synth users={} movies={} clusters={} sparsity={} noise={} seed={} format={} out={}",
        args.users,
        args.movies,
        args.clusters,
        args.sparsity,
        args.noise,
        args.seed,
        args.format,
        args.out.display()
    );
    let out = create_output(&args.out)?;
    write_votes(&dataset, out, format)?;
    println!(
        "wrote {} votes from {} users on {} movies to {}",
        dataset.num_votes(),
        dataset.num_users(),
        dataset.movie_ids().len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let format = parse_format(&args.format)?;
    let dataset = load_dataset(&args.votes, format)?;
    let min = dataset.users().iter().map(|u| u.len()).min().unwrap_or(0);
    let max = dataset.users().iter().map(|u| u.len()).max().unwrap_or(0);
    println!(
        "{}: {} users, {} movies, {} votes (profile sizes {min}..{max})",
        args.votes.display(),
        dataset.num_users(),
        dataset.movie_ids().len(),
        dataset.num_votes()
    );
    Ok(())
}

/// Materialises an ExperimentConfig from flags, enforcing that the immune
/// algorithms get their rate constants.
fn build_config(args: &ExperimentArgs, algo: Algo) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::new(algo, args.seed);
    if matches!(algo, Algo::Ais | Algo::MatchedSp) {
        let stim = args.stim.ok_or_else(|| {
            CliError::Usage(format!("--stim is required for --algo {algo}"))
        })?;
        let supp = args.supp.ok_or_else(|| {
            CliError::Usage(format!("--supp is required for --algo {algo}"))
        })?;
        cfg.ais.stimulation = stim;
        cfg.ais.suppression = supp;
    } else {
        cfg.ais.stimulation = args.stim.unwrap_or(0.0);
        cfg.ais.suppression = args.supp.unwrap_or(0.0);
    }
    cfg.ais.death_rate = args.death;
    cfg.ais.pool_size = args.pool;
    cfg.n_test_users = args.test_users;
    cfg.max_reviewers = args.max_reviewers;
    cfg.sp_k = args.sp_k;
    cfg.pred = PredictionOptions {
        default_vote: parse_default_vote(&args.default_vote)?,
        ..Default::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_default_vote(raw: &str) -> Result<Option<Score>, CliError> {
    if raw == "none" {
        return Ok(None);
    }
    let value: f64 = raw
        .parse()
        .map_err(|_| CliError::Usage(format!("--default-vote must be 'none' or a number, got '{raw}'")))?;
    Score::from_normalized(value)
        .map(Some)
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn echo_config(what: &str, args: &ExperimentArgs, cfg: &ExperimentConfig) {
    eprintln!(
        "config: {what} votes={} format={} algo={} stim={} supp={} death={} pool={} \
         test_users={} max_reviewers={} sp_k={} seed={} default_vote={} overlap_penalty={} \
         no_overlap_default={} zero_variance_default={} conc_init={} conc_max={} conc_min={} \
         antigen_conc={} removal_threshold={} stability_window={} step_size={} \
         max_differentiation_iters={} include_self_suppression={} clamp_output={} \
         weight_sum_epsilon={} abs_weight_denominator={} repeats={}",
        args.votes.display(),
        args.format,
        cfg.algo,
        cfg.ais.stimulation,
        cfg.ais.suppression,
        cfg.ais.death_rate,
        cfg.ais.pool_size,
        cfg.n_test_users,
        cfg.max_reviewers,
        cfg.sp_k,
        cfg.seed,
        cfg.pred
            .default_vote
            .map(|s| s.value().to_string())
            .unwrap_or_else(|| "none".into()),
        cfg.sim.overlap_penalty,
        cfg.sim.no_overlap_default,
        cfg.sim.zero_variance_default,
        cfg.ais.conc_init,
        cfg.ais.conc_max,
        cfg.ais.conc_min,
        cfg.ais.antigen_conc,
        cfg.ais.removal_threshold,
        cfg.ais.stability_window,
        cfg.ais.step_size,
        cfg.ais.max_differentiation_iters,
        cfg.ais.include_self_suppression,
        cfg.pred.clamp_output,
        cfg.pred.weight_sum_epsilon,
        cfg.pred.abs_weight_denominator,
        cfg.repeats,
    );
}

fn print_summary(summary: &Summary) {
    println!(
        "records={} fallbacks={} mae={:.4} tau={} (n={}) recs={:.1} overlap={:.1} neighbors={:.1} reviewers={:.1}",
        summary.n_records,
        summary.n_fallback,
        summary.mae,
        summary
            .tau_mean
            .map(|t| format!("{t:.4}"))
            .unwrap_or_else(|| "absent".into()),
        summary.tau_count,
        summary.recommendations_mean,
        summary.overlap_mean,
        summary.neighbors_mean,
        summary.reviewers_mean,
    );
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let algo = Algo::parse(&args.algo).map_err(|e| CliError::Usage(e.to_string()))?;
    let format = parse_format(&args.experiment.format)?;
    let mut cfg = build_config(&args.experiment, algo)?;
    cfg.trace_dir = args.trace_dir.clone();
    let dataset = load_dataset(&args.experiment.votes, format)?;
    echo_config("run", &args.experiment, &cfg);
    let records = run_experiment(&dataset, &cfg)?;
    csvio::write_records_csv(create_output(&args.out)?, &records)?;
    if let Some(path) = &args.dump_neighborhoods {
        let rows = rebuild_neighborhood_dump(&dataset, &cfg)?;
        csvio::write_neighborhoods_csv(create_output(path)?, &rows)?;
    }
    print_summary(&summarize(&records)?);
    Ok(())
}

/// Re-derives the per-user neighbourhoods for the dump file. Selection is
/// deterministic, so this reproduces exactly what the run used.
fn rebuild_neighborhood_dump(
    dataset: &Dataset,
    cfg: &ExperimentConfig,
) -> Result<Vec<idiorec_core::harness::NeighborhoodDumpRow>, CliError> {
    use idiorec_core::harness::{dump_rows, rebuild_neighborhoods};
    let mut rows = Vec::new();
    for (user, nh) in rebuild_neighborhoods(dataset, cfg)? {
        rows.extend(dump_rows(&nh, user));
    }
    Ok(rows)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let param = SweepParam::parse(&args.param).map_err(|e| CliError::Usage(e.to_string()))?;
    let format = parse_format(&args.experiment.format)?;
    let values: Vec<f64> = args
        .values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("invalid sweep value '{v}'")))
        })
        .collect::<Result<_, _>>()?;
    let mut cfg = build_config(&args.experiment, Algo::Ais)?;
    cfg.repeats = args.repeats;
    if cfg.repeats == 0 {
        return Err(CliError::Usage("--repeats must be >= 1".into()));
    }
    let dataset = load_dataset(&args.experiment.votes, format)?;
    echo_config(&format!("sweep param={param} values={:?}", values), &args.experiment, &cfg);
    let table = sweep(&dataset, &cfg, param, &values)?;
    csvio::write_sweep_csv(create_output(&args.out)?, &table)?;
    for agg in table.aggregates() {
        println!(
            "{param}={:<6} mae={:.4}±{:.4} tau={} recs={:.1}±{:.1} overlap={:.1}±{:.1} neighbors={:.1}±{:.1} reviewers={:.1}±{:.1}",
            agg.value,
            agg.mae.0,
            agg.mae.1,
            agg.tau
                .map(|(m, s)| format!("{m:.4}±{s:.4}"))
                .unwrap_or_else(|| "absent".into()),
            agg.recommendations.0,
            agg.recommendations.1,
            agg.overlap.0,
            agg.overlap.1,
            agg.neighbors.0,
            agg.neighbors.1,
            agg.reviewers.0,
            agg.reviewers.1,
        );
    }
    Ok(())
}

fn cmd_swap(args: SwapArgs) -> Result<(), CliError> {
    let format = parse_format(&args.experiment.format)?;
    let cfg = build_config(&args.experiment, Algo::Ais)?;
    let dataset = load_dataset(&args.experiment.votes, format)?;
    echo_config("swap", &args.experiment, &cfg);
    let out = swap_experiment(&dataset, &cfg)?;
    let prefix = &args.out_prefix;
    let path = |suffix: &str| PathBuf::from(format!("{prefix}{suffix}"));
    csvio::write_swap_records_csv(create_output(&path("records.csv"))?, &out.regimes)?;
    csvio::write_comparisons_csv(create_output(&path("comparisons.csv"))?, &out.comparisons)?;
    csvio::write_characteristics_csv(
        create_output(&path("characteristics.csv"))?,
        &out.characteristics,
    )?;
    csvio::write_membership_csv(create_output(&path("membership.csv"))?, &out.membership)?;
    csvio::write_neighborhoods_csv(
        create_output(&path("neighborhoods.csv"))?,
        &out.base_neighborhoods,
    )?;
    for row in &out.comparisons {
        println!(
            "{}: {}/{} vs {}/{} medians {:.4}/{:.4} n={} w+={} w-={} p={}",
            row.metric,
            row.pred1,
            row.nh1,
            row.pred2,
            row.nh2,
            row.median1,
            row.median2,
            row.n,
            row.w_plus,
            row.w_minus,
            row.p.map(|p| format!("{p:.4e}")).unwrap_or_else(|| "n/a".into()),
        );
    }
    Ok(())
}

fn cmd_wilcoxon(args: WilcoxonArgs) -> Result<(), CliError> {
    let reader = open_input(&args.input)?;
    let (pairs, skipped) = csvio::read_paired_columns(reader, &args.col_a, &args.col_b)
        .map_err(|e| CliError::Data(e.to_string()))?;
    if skipped > 0 {
        eprintln!("skipped {skipped} rows with missing or non-numeric values");
    }
    if pairs.is_empty() {
        return Err(CliError::Data("no complete pairs found".into()));
    }
    let ranks = wilcoxon_ranks(&pairs).map_err(CliError::from)?;
    let p = match wilcoxon_p(ranks.n_effective, ranks.w_plus) {
        Ok(p) => format!("{p:.6e}"),
        Err(e) => format!("n/a ({e})"),
    };
    println!(
        "n={} w_plus={} w_minus={} p={}",
        ranks.n_effective, ranks.w_plus, ranks.w_minus, p
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let reader = open_input(&args.input)?;
    let records = csvio::read_records_csv(reader).map_err(|e| CliError::Data(e.to_string()))?;
    if records.is_empty() {
        return Err(CliError::Data("results file has no records".into()));
    }
    let summary = summarize(&records)?;
    let mut out = create_output(&args.out)?;
    write_summary_csv(&mut out, &summary)?;
    print_summary(&summary);
    Ok(())
}

fn write_summary_csv<W: std::io::Write>(out: &mut W, s: &Summary) -> Result<(), CliError> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    writeln!(
        out,
        "records,fallbacks,mae,mae_std,tau_mean,tau_std,tau_count,recs_mean,recs_std,\
         overlap_mean,overlap_std,reviewers_mean,reviewers_std,neighbors_mean,neighbors_std"
    )
    .map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        s.n_records,
        s.n_fallback,
        s.mae,
        s.mae_std,
        opt(s.tau_mean),
        opt(s.tau_std),
        s.tau_count,
        s.recommendations_mean,
        s.recommendations_std,
        s.overlap_mean,
        s.overlap_std,
        s.reviewers_mean,
        s.reviewers_std,
        s.neighbors_mean,
        s.neighbors_std,
    )
    .map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}
