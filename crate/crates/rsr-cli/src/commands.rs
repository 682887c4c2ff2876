//! Subcommand bodies. Each resolves its settings, writes the resolved
//! config into the output directory, then its CSV outputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use rsr_core::analytics::{quadrature_moments, summarize_series, PosteriorSummary, VerifyConfig};
use rsr_core::bases::HhSize;
use rsr_core::data::{read_dataset, write_chain_csv, write_summary_csv, ColumnRoles, Dataset};
use rsr_core::graph::{read_edge_list, AdjacencyGraph};
use rsr_core::model::{make_count_model, make_model, Family, ModelKind, ModelSpec, PriorConfig};
use rsr_core::samplers::{gibbs_gaussian, mh_poisson, run_chain_diagnostics, ChainConfig};
use rsr_core::sim::{overfit_demo, run_simulation, write_overfit_csv, OrderRule, SimConfig, Study};

use crate::config::{parse_range, RunConfig};
use crate::error::CliError;

const DEFAULT_SEED: u64 = 20240607;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// `us48`, `slovenia` (SRSR_SLOVENIA_GRAPH or the 194-vertex surrogate), or a path.
pub fn resolve_graph(name: &str) -> Result<AdjacencyGraph, CliError> {
    match name {
        "us48" => Ok(AdjacencyGraph::us48()),
        "slovenia" => match std::env::var_os("SRSR_SLOVENIA_GRAPH") {
            Some(p) => Ok(read_edge_list(PathBuf::from(p), None)?),
            None => {
                warn!("SRSR_SLOVENIA_GRAPH not set; using the 194-vertex surrogate graph");
                Ok(AdjacencyGraph::surrogate194())
            }
        },
        path => Ok(read_edge_list(path, None)?),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("rsr_out"));
    fs::create_dir_all(&out)?;
    let mut w = create(&out, "config.json")?;
    w.write_all(cfg.to_json().as_bytes())?;
    w.flush()?;
    Ok(out)
}

fn preset_roles(preset: Option<&str>) -> Result<Option<ColumnRoles>, CliError> {
    match preset {
        None => Ok(None),
        Some("sat") => Ok(Some(ColumnRoles::sat())),
        Some("slovenia") => Ok(Some(ColumnRoles::slovenia())),
        Some(p) => Err(usage(format!("unknown preset '{p}' (sat | slovenia)"))),
    }
}

fn preset_graph(preset: Option<&str>) -> Option<&'static str> {
    match preset {
        Some("sat") => Some("us48"),
        Some("slovenia") => Some("slovenia"),
        _ => None,
    }
}

fn parse_family(s: &str) -> Result<bool, CliError> {
    match s {
        "gaussian" => Ok(false),
        "poisson" => Ok(true),
        other => Err(usage(format!("unknown family '{other}' (gaussian | poisson)"))),
    }
}

fn parse_kind(s: &str, q: Option<usize>) -> Result<ModelKind, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "ns" => Ok(ModelKind::Ns),
        "icar" => Ok(ModelKind::Icar),
        "rhz" => Ok(ModelKind::Rhz),
        "hh" => Ok(ModelKind::Hh(q.map(HhSize::Fixed).unwrap_or(HhSize::Default))),
        other => Err(usage(format!("unknown model '{other}' (ns | icar | rhz | hh)"))),
    }
}

/// Fills every data-related field so the written config is self-contained.
fn resolve_data(cfg: &mut RunConfig) -> Result<(AdjacencyGraph, Dataset), CliError> {
    let preset = cfg.preset.clone();
    if cfg.columns.is_none() {
        cfg.columns = preset_roles(preset.as_deref())?;
    }
    let roles = cfg
        .columns
        .clone()
        .ok_or_else(|| usage("no column roles: pass --preset or --response/--covariates"))?;
    if cfg.graph.is_none() {
        cfg.graph = preset_graph(preset.as_deref()).map(String::from);
    }
    let gname = cfg.graph.clone().ok_or_else(|| usage("--graph is required"))?;
    let path = cfg.data.clone().ok_or_else(|| usage("--data is required"))?;
    let data = read_dataset(&path, &roles)?;
    let graph = resolve_graph(&gname)?;
    data.check_graph(&graph)?;
    Ok((graph, data))
}

fn default_priors(preset: Option<&str>, poisson: bool) -> PriorConfig {
    match (preset, poisson) {
        (_, true) => PriorConfig::poisson_default(),
        (Some("sat"), false) => PriorConfig::sat(),
        _ => PriorConfig::gaussian_default(),
    }
}

fn build_spec(kind: ModelKind, graph: &AdjacencyGraph, data: &Dataset, priors: PriorConfig, poisson: bool) -> Result<ModelSpec, CliError> {
    // ICAR absorbs the intercept
    let design = data.design(kind != ModelKind::Icar)?;
    if poisson {
        data.check_counts()?;
        Ok(make_count_model(kind, graph, design, priors, data.log_offset()?, &data.y)?)
    } else {
        Ok(make_model(kind, graph, design, priors, Family::Gaussian)?)
    }
}

#[derive(Serialize)]
struct FitInfo {
    model: String,
    family: String,
    n: usize,
    p: usize,
    q: usize,
    penalty_rank: usize,
    iterations: usize,
    burn_in: usize,
    seed: u64,
    acceptance_beta: Option<f64>,
    acceptance_delta: Option<f64>,
    warnings: Vec<String>,
    notes: Vec<String>,
}

fn print_summary(s: &PosteriorSummary) {
    println!(
        "{:<14}{:>14}{:>14}{:>14}{:>14}{:>12}",
        "coefficient", "mean", "variance", "ci_lo", "ci_hi", "mcse"
    );
    for r in &s.rows {
        println!(
            "{:<14}{:>14.6}{:>14.6e}{:>14.6}{:>14.6}{:>12.2e}",
            r.coefficient, r.mean, r.variance, r.ci_lo, r.ci_hi, r.mcse
        );
    }
}

pub fn fit(mut cfg: RunConfig) -> Result<(), CliError> {
    let (graph, data) = resolve_data(&mut cfg)?;
    let family = cfg.family.get_or_insert_with(|| "gaussian".into()).clone();
    let poisson = parse_family(&family)?;
    if cfg.priors.is_none() {
        cfg.priors = Some(default_priors(cfg.preset.as_deref(), poisson));
    }
    let priors = cfg.priors.unwrap();
    let seed = *cfg.seed.get_or_insert(DEFAULT_SEED);
    let alpha = *cfg.alpha.get_or_insert(0.05);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(usage("alpha must lie in (0, 1)"));
    }
    if let Some(sweep) = cfg.q_sweep.clone() {
        if poisson {
            return Err(usage("--q-sweep uses quadrature and needs the Gaussian family"));
        }
        cfg.model.get_or_insert_with(|| "hh".into());
        let range = parse_range(&sweep)?;
        let out = prepare_out(&cfg)?;
        return q_sweep(&graph, &data, priors, range, &out);
    }
    let model = cfg.model.get_or_insert_with(|| "ns".into()).clone();
    let kind = parse_kind(&model, cfg.q)?;
    let iters = *cfg.iters.get_or_insert(20_000);
    let burn_in = *cfg.burnin.get_or_insert(iters / 10);
    cfg.save_chain.get_or_insert(false);
    let chain_cfg = ChainConfig::new(iters, seed).with_burn_in(burn_in);
    chain_cfg.validate()?;
    let out = prepare_out(&cfg)?;

    let spec = build_spec(kind, &graph, &data, priors, poisson)?;
    info!("fitting {} ({family}), n = {}, p = {}, q = {}", kind.label(), spec.n(), spec.p(), spec.q());
    let chain = if poisson {
        mh_poisson(&spec, &data.y, &chain_cfg)?
    } else {
        gibbs_gaussian(&spec, &data.y, &chain_cfg)?
    };
    for w in &chain.warnings {
        warn!("{w}");
    }
    let summary = rsr_core::analytics::summarize(&chain, alpha)?;
    write_summary_csv(&summary, create(&out, "summary.csv")?)?;
    let mut diag = csv::Writer::from_writer(create(&out, "diagnostics.csv")?);
    for d in run_chain_diagnostics(&chain) {
        diag.serialize(d).map_err(rsr_core::Error::from)?;
    }
    diag.flush()?;
    if cfg.save_chain == Some(true) {
        write_chain_csv(&chain, create(&out, "chain.csv")?)?;
    }
    let info = FitInfo {
        model: kind.label(),
        family,
        n: spec.n(),
        p: spec.p(),
        q: spec.q(),
        penalty_rank: spec.penalty_rank,
        iterations: iters,
        burn_in,
        seed,
        acceptance_beta: chain.acceptance.beta,
        acceptance_delta: chain.acceptance.delta,
        warnings: chain.warnings.clone(),
        notes: spec.notes.clone(),
    };
    let mut w = create(&out, "fit.json")?;
    w.write_all((serde_json::to_string_pretty(&info).expect("serialisable") + "\n").as_bytes())?;
    w.flush()?;
    print_summary(&summary);
    Ok(())
}

/// Exact posterior means and variances for HH models with q in `range`,
/// next to the NS values.
fn q_sweep(graph: &AdjacencyGraph, data: &Dataset, priors: PriorConfig, range: (usize, usize), out: &Path) -> Result<(), CliError> {
    let ns = build_spec(ModelKind::Ns, graph, data, priors, false)?;
    let ns_m = quadrature_moments(&ns, &data.y)?;
    let names = ns.design.names().to_vec();
    let mut wr = csv::Writer::from_writer(create(out, "q_sweep.csv")?);
    let cw = |e: csv::Error| CliError::from(rsr_core::Error::from(e));
    wr.write_record(["q", "moran_eigenvalue", "coefficient", "mean", "variance", "ns_variance", "sigma_mean"])
        .map_err(cw)?;
    for (j, name) in names.iter().enumerate() {
        wr.write_record(["0", "", name, &ns_m.mean[j].to_string(), &ns_m.cov[(j, j)].to_string(), &ns_m.cov[(j, j)].to_string(), &ns_m.sigma_mean.to_string()])
            .map_err(cw)?;
    }
    let mut above = 0;
    for q in range.0..=range.1 {
        let spec = build_spec(ModelKind::Hh(HhSize::Fixed(q)), graph, data, priors, false)?;
        let m = quadrature_moments(&spec, &data.y)?;
        let ev = spec.moran_eigenvalues.as_ref().map(|v| v[q - 1].to_string()).unwrap_or_default();
        for (j, name) in names.iter().enumerate() {
            let v = m.cov[(j, j)];
            if v > ns_m.cov[(j, j)] {
                above += 1;
            }
            wr.write_record([&q.to_string(), &ev, name, &m.mean[j].to_string(), &v.to_string(), &ns_m.cov[(j, j)].to_string(), &m.sigma_mean.to_string()])
                .map_err(cw)?;
        }
        info!("q = {q} done");
    }
    wr.flush()?;
    println!(
        "q = {}..{}: {} of {} HH posterior variances exceed the NS variance",
        range.0,
        range.1,
        above,
        (range.1 - range.0 + 1) * names.len()
    );
    Ok(())
}

pub fn simulate(mut cfg: RunConfig) -> Result<(), CliError> {
    let study: Study = cfg.study.get_or_insert_with(|| "sim1".into()).parse()?;
    let seed = *cfg.seed.get_or_insert(DEFAULT_SEED);
    let paper = *cfg.paper_scale.get_or_insert(false);
    let mut sc = if paper { SimConfig::paper_scale(study, seed) } else { SimConfig::new(study, seed) };
    sc.small_effect = *cfg.small_effect.get_or_insert(false);
    sc.replicates = *cfg.replicates.get_or_insert(sc.replicates);
    if let Some(it) = cfg.iters {
        sc.iterations = it;
        sc.burn_in = it / 10;
    }
    cfg.iters = Some(sc.iterations);
    sc.burn_in = *cfg.burnin.get_or_insert(sc.burn_in);
    sc.validate()?;
    let gname = cfg
        .graph
        .get_or_insert_with(|| if study.is_poisson() { "slovenia".into() } else { "us48".into() })
        .clone();
    let graph = resolve_graph(&gname)?;
    let out = prepare_out(&cfg)?;
    let report = run_simulation(&sc, &graph)?;
    report.write_cells_csv(create(&out, "cells.csv")?)?;
    report.write_comparisons_csv(create(&out, "comparisons.csv")?)?;
    report.write_replicates_csv(create(&out, "replicates.csv")?)?;
    let text = report.render_text();
    let mut w = create(&out, "report.txt")?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    print!("{text}");
    Ok(())
}

pub fn verify(mut cfg: RunConfig) -> Result<(), CliError> {
    let d = VerifyConfig::default();
    let vc = VerifyConfig {
        seed: *cfg.seed.get_or_insert(d.seed),
        instances: *cfg.instances.get_or_insert(d.instances),
        gibbs_iterations: *cfg.iters.get_or_insert(d.gibbs_iterations),
        rotations: *cfg.rotations.get_or_insert(d.rotations),
        lemma_instances: *cfg.lemma_instances.get_or_insert(d.lemma_instances),
        lemma_grid: *cfg.lemma_grid.get_or_insert(d.lemma_grid),
        tail_instances: *cfg.tail_instances.get_or_insert(d.tail_instances),
    };
    let out = prepare_out(&cfg)?;
    let report = rsr_core::analytics::run_verification(&vc)?;
    report.write_csv(create(&out, "verification.csv")?)?;
    let mut failed = Vec::new();
    for check in report.checks() {
        let (pass, total) = report.tally(&check);
        let control = report.rows_for(&check).iter().any(|r| r.negative_control);
        println!(
            "{check:<24} {pass:>4}/{total:<4} {}{}",
            if pass == total { "ok" } else { "FAILED" },
            if control { "  (control)" } else { "" }
        );
        if pass < total {
            failed.push(format!("{check} {pass}/{total}"));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

pub fn overfit(mut cfg: RunConfig) -> Result<(), CliError> {
    cfg.preset.get_or_insert_with(|| "sat".into());
    let (_graph, data) = resolve_data(&mut cfg)?;
    let rule = match cfg.order.get_or_insert_with(|| "abs".into()).as_str() {
        "abs" => OrderRule::AbsDecreasing,
        "signed" => OrderRule::Decreasing,
        other => return Err(usage(format!("unknown order '{other}' (abs | signed)"))),
    };
    if cfg.priors.is_none() {
        cfg.priors = Some(default_priors(cfg.preset.as_deref(), false));
    }
    let priors = cfg.priors.unwrap();
    let out = prepare_out(&cfg)?;
    let d = data.design(true)?;
    let rows = overfit_demo(&d, &data.y, &priors, rule)?;
    write_overfit_csv(&rows, d.names(), create(&out, "overfit.csv")?)?;
    print!("{:>4}", "k");
    for n in d.names() {
        print!("{:>20}", format!("var({n})"));
    }
    println!("{:>16}", "E[1/tau_eps|Y]");
    for r in &rows {
        print!("{:>4}", r.k);
        for v in &r.variances {
            print!("{v:>20.6e}");
        }
        println!("{:>16.6}", r.sigma_mean);
    }
    Ok(())
}

pub fn summarize_chain(path: &Path, alpha: f64) -> Result<PosteriorSummary, CliError> {
    let mut rd = csv::Reader::from_path(path).map_err(rsr_core::Error::from)?;
    let headers = rd.headers().map_err(rsr_core::Error::from)?.clone();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (k, rec) in rd.records().enumerate() {
        let rec = rec.map_err(rsr_core::Error::from)?;
        for (j, f) in rec.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| {
                CliError::Core(rsr_core::Error::Parse {
                    line: Some(k + 2),
                    msg: format!("cannot parse '{f}' as a number"),
                })
            })?;
            cols[j].push(v);
        }
    }
    let rows = headers
        .iter()
        .zip(&cols)
        .filter(|(h, _)| *h != "iteration")
        .map(|(h, c)| summarize_series(h, c, alpha))
        .collect::<rsr_core::Result<Vec<_>>>()?;
    Ok(PosteriorSummary { alpha, rows })
}

pub fn summarize_cmd(mut cfg: RunConfig) -> Result<(), CliError> {
    let path = cfg.chain.clone().ok_or_else(|| usage("--chain is required"))?;
    let alpha = *cfg.alpha.get_or_insert(0.05);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(usage("alpha must lie in (0, 1)"));
    }
    let out = prepare_out(&cfg)?;
    let s = summarize_chain(&path, alpha)?;
    write_summary_csv(&s, create(&out, "summary.csv")?)?;
    print_summary(&s);
    Ok(())
}
