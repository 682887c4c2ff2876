mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "rsr", version, about = "Areal spatial regression: fitting, simulation studies and posterior checks")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Only warnings and errors on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Fit one model to a CSV dataset.
    Fit(FitArgs),
    /// Run a simulation study.
    Simulate(SimArgs),
    /// Run the theorem and lemma checks on random instances.
    VerifyTheorems(VerifyArgs),
    /// Posterior variances as synthetic covariates are added to a non-spatial model.
    OverfitDemo(OverfitArgs),
    /// Summaries of a chain CSV written by `fit --save-chain`.
    Summarize(SummarizeArgs),
}

#[derive(Args, Debug, Default)]
struct DataArgs {
    /// Edge list path, `us48` or `slovenia`.
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Column roles and priors for a known schema: sat | slovenia.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    response: Option<String>,
    /// Comma separated; `name^2` squares a column.
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
    /// Column of expected counts (logged internally).
    #[arg(long)]
    offset: Option<String>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// ns | icar | rhz | hh
    #[arg(long)]
    model: Option<String>,
    /// Number of HH basis vectors.
    #[arg(long)]
    q: Option<usize>,
    /// HH sizes a..b fitted by quadrature (Gaussian only).
    #[arg(long)]
    q_sweep: Option<String>,
    /// gaussian | poisson
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Also write every retained draw.
    #[arg(long)]
    save_chain: bool,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// sim1 | sim2 | sim3
    #[arg(long)]
    study: Option<String>,
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    /// Effects 0.1 and 0.2 instead of 1 and 2.
    #[arg(long)]
    small_effect: bool,
    /// Replicates and iterations of the published studies.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    instances: Option<usize>,
    /// Gibbs iterations per instance; 0 skips the sampler check.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    rotations: Option<usize>,
    #[arg(long)]
    lemma_instances: Option<usize>,
    #[arg(long)]
    lemma_grid: Option<usize>,
    #[arg(long)]
    tail_instances: Option<usize>,
}

#[derive(Args, Debug)]
struct OverfitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// abs (by |correlation|) | signed
    #[arg(long)]
    order: Option<String>,
}

#[derive(Args, Debug)]
struct SummarizeArgs {
    /// Chain CSV.
    #[arg(long)]
    chain: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
}

fn roles(d: &DataArgs) -> Option<rsr_core::data::ColumnRoles> {
    let response = d.response.clone()?;
    Some(rsr_core::data::ColumnRoles {
        response,
        covariates: d.covariates.clone().unwrap_or_default(),
        offset: d.offset.clone(),
        id: None,
    })
}

fn flags_of(cli: &Cli) -> RunConfig {
    let mut c = RunConfig {
        seed: cli.seed,
        out: cli.out.clone(),
        ..Default::default()
    };
    let set_data = |c: &mut RunConfig, d: &DataArgs| {
        c.graph = d.graph.clone();
        c.data = d.data.clone();
        c.preset = d.preset.clone();
        c.columns = roles(d);
    };
    match &cli.cmd {
        Cmd::Fit(a) => {
            c.command = Some("fit".into());
            set_data(&mut c, &a.data);
            c.model = a.model.clone();
            c.q = a.q;
            c.q_sweep = a.q_sweep.clone();
            c.family = a.family.clone();
            c.iters = a.iters;
            c.burnin = a.burnin;
            c.alpha = a.alpha;
            c.save_chain = a.save_chain.then_some(true);
        }
        Cmd::Simulate(a) => {
            c.command = Some("simulate".into());
            c.study = a.study.clone();
            c.graph = a.graph.clone();
            c.replicates = a.replicates;
            c.iters = a.iters;
            c.burnin = a.burnin;
            c.small_effect = a.small_effect.then_some(true);
            c.paper_scale = a.paper_scale.then_some(true);
        }
        Cmd::VerifyTheorems(a) => {
            c.command = Some("verify-theorems".into());
            c.instances = a.instances;
            c.iters = a.iters;
            c.rotations = a.rotations;
            c.lemma_instances = a.lemma_instances;
            c.lemma_grid = a.lemma_grid;
            c.tail_instances = a.tail_instances;
        }
        Cmd::OverfitDemo(a) => {
            c.command = Some("overfit-demo".into());
            set_data(&mut c, &a.data);
            c.order = a.order.clone();
        }
        Cmd::Summarize(a) => {
            c.command = Some("summarize".into());
            c.chain = a.chain.clone();
            c.alpha = a.alpha;
        }
    }
    c
}

fn run(cli: Cli) -> Result<(), CliError> {
    let flags = flags_of(&cli);
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let (Some(cmd), Some(want)) = (&cfg.command, &flags.command) {
        if cmd != want {
            return Err(CliError::Usage(format!("config file is for '{cmd}', not '{want}'")));
        }
    }
    cfg = cfg.overlay(&flags);
    match &cli.cmd {
        Cmd::Fit(_) => commands::fit(cfg),
        Cmd::Simulate(_) => commands::simulate(cfg),
        Cmd::VerifyTheorems(_) => commands::verify(cfg),
        Cmd::OverfitDemo(_) => commands::overfit(cfg),
        Cmd::Summarize(_) => commands::summarize_cmd(cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
