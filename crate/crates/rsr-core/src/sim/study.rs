//! Study driver: fixed covariates, replicated responses, three analysis
//! models per replicate, aggregated coverage / Type-S / power / bias / MSE.

use std::fmt::Write as _;
use std::io::Write;

use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::covariates::{gen_covariate, CovariateRecipe};
use super::metrics::{self, agreement_classify, covers, excludes_zero, nested, percent, Agreement};
use super::response::{GenKind, ResponseFamily, ResponseGenerator};
use crate::analytics::summary::{summarize, CoefSummary};
use crate::bases::DesignMatrix;
use crate::error::{Error, Result};
use crate::graph::{laplacian_eigen, AdjacencyGraph};
use crate::model::{make_count_model, make_model, Family, ModelKind, ModelSpec, PriorConfig};
use crate::rng;
use crate::samplers::{gibbs_gaussian, mh_poisson, ChainConfig};

/// Analysis models use the same three labels as the generating models.
pub type AnalysisKind = GenKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Study {
    /// Gaussian, one spatially smooth covariate.
    Sim1,
    /// Gaussian, adds a null covariate; X₁ omitted from the NS/RHZ analysis under NS generation.
    Sim2,
    /// Poisson version of Sim2.
    Sim3,
}

impl Study {
    pub fn label(&self) -> &'static str {
        match self {
            Study::Sim1 => "sim1",
            Study::Sim2 => "sim2",
            Study::Sim3 => "sim3",
        }
    }

    fn id(&self) -> u64 {
        match self {
            Study::Sim1 => 1,
            Study::Sim2 => 2,
            Study::Sim3 => 3,
        }
    }

    pub fn is_poisson(&self) -> bool {
        matches!(self, Study::Sim3)
    }

    /// (β₀, β₁[, β₂]) for the generating model.
    pub fn truth(&self, small_effect: bool) -> Vec<f64> {
        let (b0, b1) = match (self, small_effect) {
            (_, true) => (0.1, 0.2),
            (Study::Sim3, false) => (1.0, 1.0),
            _ => (1.0, 2.0),
        };
        match self {
            Study::Sim1 => vec![b0, b1],
            _ => vec![b0, b1, 0.0],
        }
    }
}

impl std::str::FromStr for Study {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sim1" | "1" => Ok(Study::Sim1),
            "sim2" | "2" => Ok(Study::Sim2),
            "sim3" | "3" => Ok(Study::Sim3),
            other => Err(Error::InvalidParameter(format!("unknown study '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub study: Study,
    pub small_effect: bool,
    pub replicates: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub alpha: f64,
    pub generating: Vec<GenKind>,
}

impl SimConfig {
    /// Desk scale: 200 replicates x 20k iterations (Gaussian), 50 x 200k (Poisson).
    pub fn new(study: Study, seed: u64) -> Self {
        let (replicates, iterations) = if study.is_poisson() { (50, 200_000) } else { (200, 20_000) };
        Self {
            study,
            small_effect: false,
            replicates,
            iterations,
            burn_in: iterations / 10,
            seed,
            alpha: 0.05,
            generating: GenKind::ALL.to_vec(),
        }
    }

    /// 1000 x 80k (Gaussian), 100 x 1M (Poisson).
    pub fn paper_scale(study: Study, seed: u64) -> Self {
        let (replicates, iterations) = if study.is_poisson() { (100, 1_000_000) } else { (1000, 80_000) };
        Self {
            replicates,
            iterations,
            burn_in: iterations / 10,
            ..Self::new(study, seed)
        }
    }

    pub fn with_scale(mut self, replicates: usize, iterations: usize) -> Self {
        self.replicates = replicates;
        self.iterations = iterations;
        self.burn_in = iterations / 10;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("at least one replicate is required".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter("alpha must lie in (0, 1)".into()));
        }
        if self.generating.is_empty() {
            return Err(Error::InvalidParameter("no generating models selected".into()));
        }
        ChainConfig::new(self.iterations, 0).with_burn_in(self.burn_in).validate()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitRecord {
    pub analysis: AnalysisKind,
    pub coefs: Vec<CoefSummary>,
    pub warnings: Vec<String>,
}

impl FitRecord {
    pub fn coef(&self, name: &str) -> Option<&CoefSummary> {
        self.coefs.iter().find(|c| c.coefficient == name)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicateRecord {
    pub generating: GenKind,
    pub replicate: usize,
    pub fits: Vec<FitRecord>,
    /// Set when any fit failed; the replicate is then excluded from metrics.
    pub error: Option<String>,
}

impl ReplicateRecord {
    pub fn fit(&self, a: AnalysisKind) -> Option<&FitRecord> {
        self.fits.iter().find(|f| f.analysis == a)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellMetrics {
    pub generating: GenKind,
    pub analysis: AnalysisKind,
    pub replicates: usize,
    /// Coverage of β₁ (the target) in percent; None when the analysis omits X₁.
    pub coverage: Option<f64>,
    /// Interval for β₁ excludes zero.
    pub power: Option<f64>,
    /// Interval for the null β₂ excludes zero.
    pub type_s: Option<f64>,
    pub bias_p10: Option<f64>,
    pub bias_p90: Option<f64>,
    pub mse: Option<f64>,
    pub mean_ci_width: Option<f64>,
    pub mean_variance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonMetrics {
    pub generating: GenKind,
    pub replicates: usize,
    pub failures: usize,
    /// β₁ coverage, RHZ against NS: (Agree, RHZ+, NS+).
    pub coverage_agreement: Option<(f64, f64, f64)>,
    /// β₂ Type-S (coverage of 0), RHZ against NS.
    pub type_s_agreement: Option<(f64, f64, f64)>,
    /// RHZ β₁ interval inside the NS one, percent.
    pub nesting: Option<f64>,
    /// Coefficient fits where both RHZ and NS endpoints lie within 0.05, percent.
    pub endpoints_within_05: Option<f64>,
    /// RHZ posterior variance ≤ NS posterior variance for β₁, percent.
    pub variance_ordering: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub config: SimConfig,
    pub graph_n: usize,
    pub truth: Vec<f64>,
    pub cells: Vec<CellMetrics>,
    pub comparisons: Vec<ComparisonMetrics>,
    pub records: Vec<ReplicateRecord>,
}

const TARGET: &str = "x1";
const NULL: &str = "x2";

struct Prepared {
    full: DesignMatrix,
    generators: Vec<ResponseGenerator>,
    /// Analysis design per generating model.
    analysis_design: Vec<DesignMatrix>,
    /// Cached Gaussian specs, indexed [gen][analysis].
    gaussian_specs: Option<Vec<Vec<ModelSpec>>>,
}

fn analysis_kinds() -> [AnalysisKind; 3] {
    [GenKind::Ns, GenKind::Rhz, GenKind::Icar]
}

fn model_kind(a: AnalysisKind) -> ModelKind {
    match a {
        GenKind::Ns => ModelKind::Ns,
        GenKind::Rhz => ModelKind::Rhz,
        GenKind::Icar => ModelKind::Icar,
    }
}

/// ICAR always drops the intercept column.
fn design_for(a: AnalysisKind, d: &DesignMatrix) -> Result<DesignMatrix> {
    if a == GenKind::Icar {
        d.without_intercept()
    } else {
        Ok(d.clone())
    }
}

fn prepare(cfg: &SimConfig, graph: &AdjacencyGraph) -> Result<Prepared> {
    let n = graph.n();
    let eig = laplacian_eigen(graph)?;
    let mut r = rng::stream(cfg.seed, &[cfg.study.id(), 0xc0]);
    let x1 = gen_covariate(&eig, &CovariateRecipe::lowest_fraction(0.2, n), &mut r)?;
    let mut cols = vec![x1];
    if cfg.study != Study::Sim1 {
        cols.push(gen_covariate(&eig, &CovariateRecipe::lowest_fraction(0.5, n), &mut r)?);
    }
    let names: Vec<&str> = [TARGET, NULL][..cols.len()].to_vec();
    let cov = DMatrix::from_columns(&cols);
    let full = DesignMatrix::from_covariates(&cov, true, &names)?;
    let truth = DVector::from_vec(cfg.study.truth(cfg.small_effect));
    let family = if cfg.study.is_poisson() { ResponseFamily::Poisson } else { ResponseFamily::Gaussian };
    let mut generators = Vec::new();
    let mut analysis_design = Vec::new();
    for g in &cfg.generating {
        generators.push(ResponseGenerator::new(*g, graph, &full, &truth, 1.0, family)?);
        let d = if *g == GenKind::Ns && cfg.study != Study::Sim1 {
            // omit the spatially varying X₁
            let x2 = cov.columns(1, 1).into_owned();
            DesignMatrix::from_covariates(&x2, true, &[NULL])?
        } else {
            full.clone()
        };
        analysis_design.push(d);
    }
    let gaussian_specs = if cfg.study.is_poisson() {
        None
    } else {
        let priors = PriorConfig::gaussian_default();
        let mut all = Vec::new();
        for d in &analysis_design {
            let mut row = Vec::new();
            for a in analysis_kinds() {
                row.push(make_model(model_kind(a), graph, design_for(a, d)?, priors, Family::Gaussian)?);
            }
            all.push(row);
        }
        Some(all)
    };
    Ok(Prepared {
        full,
        generators,
        analysis_design,
        gaussian_specs,
    })
}

fn run_replicate(cfg: &SimConfig, graph: &AdjacencyGraph, prep: &Prepared, gi: usize, rep: usize) -> ReplicateRecord {
    let gen = cfg.generating[gi];
    let keys = [cfg.study.id(), gen.index(), rep as u64];
    let mut record = ReplicateRecord {
        generating: gen,
        replicate: rep,
        fits: Vec::new(),
        error: None,
    };
    let mut r = rng::stream(cfg.seed, &keys);
    let y = match prep.generators[gi].draw(&mut r) {
        Ok(y) => y,
        Err(e) => {
            record.error = Some(format!("generation: {e}"));
            return record;
        }
    };
    for (ai, a) in analysis_kinds().into_iter().enumerate() {
        let seed = rng::derive_seed(cfg.seed, &[keys[0], keys[1], keys[2], 0xa0 + ai as u64]);
        let chain_cfg = ChainConfig::new(cfg.iterations, seed).with_burn_in(cfg.burn_in);
        let fit = || -> Result<FitRecord> {
            let chain = match &prep.gaussian_specs {
                Some(specs) => gibbs_gaussian(&specs[gi][ai], &y, &chain_cfg)?,
                None => {
                    let d = design_for(a, &prep.analysis_design[gi])?;
                    let offset = DVector::zeros(graph.n());
                    let spec = make_count_model(model_kind(a), graph, d, PriorConfig::poisson_default(), offset, &y)?;
                    mh_poisson(&spec, &y, &chain_cfg)?
                }
            };
            let s = summarize(&chain, cfg.alpha)?;
            // β rows only; precisions are not compared across models
            let coefs = s.rows.into_iter().filter(|c| chain.beta_names.contains(&c.coefficient)).collect();
            Ok(FitRecord {
                analysis: a,
                coefs,
                warnings: chain.warnings,
            })
        };
        match fit() {
            Ok(f) => record.fits.push(f),
            Err(e) => {
                warn!("{} gen {} rep {rep}: {} fit failed: {e}", cfg.study.label(), gen.label(), a.label());
                record.error = Some(format!("{}: {e}", a.label()));
                return record;
            }
        }
    }
    info!("{} gen {} replicate {rep} done", cfg.study.label(), gen.label());
    record
}

fn ci(c: &CoefSummary) -> (f64, f64) {
    (c.ci_lo, c.ci_hi)
}

fn opt(v: f64) -> Option<f64> {
    if v.is_nan() {
        None
    } else {
        Some(v)
    }
}

fn aggregate(cfg: &SimConfig, truth: &[f64], records: &[ReplicateRecord]) -> (Vec<CellMetrics>, Vec<ComparisonMetrics>) {
    let b1 = truth[1];
    let mut cells = Vec::new();
    let mut comps = Vec::new();
    for &g in &cfg.generating {
        let ok: Vec<&ReplicateRecord> = records.iter().filter(|r| r.generating == g && r.error.is_none()).collect();
        let failures = records.iter().filter(|r| r.generating == g && r.error.is_some()).count();
        for a in analysis_kinds() {
            let fits: Vec<&FitRecord> = ok.iter().filter_map(|r| r.fit(a)).collect();
            let target: Vec<&CoefSummary> = fits.iter().filter_map(|f| f.coef(TARGET)).collect();
            let null: Vec<&CoefSummary> = fits.iter().filter_map(|f| f.coef(NULL)).collect();
            let m = target.len();
            let has_t = m > 0;
            let means: Vec<f64> = target.iter().map(|c| c.mean).collect();
            let (p10, p90) = metrics::bias_percentiles(&means, b1);
            cells.push(CellMetrics {
                generating: g,
                analysis: a,
                replicates: fits.len(),
                coverage: has_t.then(|| percent(target.iter().filter(|c| covers(ci(c), b1)).count(), m)),
                power: has_t.then(|| percent(target.iter().filter(|c| excludes_zero(ci(c))).count(), m)),
                type_s: (!null.is_empty())
                    .then(|| percent(null.iter().filter(|c| excludes_zero(ci(c))).count(), null.len())),
                bias_p10: has_t.then_some(p10),
                bias_p90: has_t.then_some(p90),
                mse: has_t.then(|| metrics::mean_squared_error(&means, b1)),
                mean_ci_width: has_t.then(|| target.iter().map(|c| c.ci_hi - c.ci_lo).sum::<f64>() / m as f64),
                mean_variance: has_t.then(|| target.iter().map(|c| c.variance).sum::<f64>() / m as f64),
            });
        }
        // RHZ against NS, replicate by replicate
        let mut cov_agree = Vec::new();
        let mut ts_agree = Vec::new();
        let mut nest = (0usize, 0usize);
        let mut close = (0usize, 0usize);
        let mut var_order = (0usize, 0usize);
        for r in &ok {
            let (Some(rhz), Some(ns)) = (r.fit(GenKind::Rhz), r.fit(GenKind::Ns)) else {
                continue;
            };
            if let (Some(cr), Some(cn)) = (rhz.coef(TARGET), ns.coef(TARGET)) {
                cov_agree.push(agreement_classify(ci(cr), ci(cn), b1));
                nest.1 += 1;
                if nested(ci(cr), ci(cn)) {
                    nest.0 += 1;
                }
                var_order.1 += 1;
                if cr.variance <= cn.variance {
                    var_order.0 += 1;
                }
            }
            if let (Some(cr), Some(cn)) = (rhz.coef(NULL), ns.coef(NULL)) {
                ts_agree.push(agreement_classify(ci(cr), ci(cn), 0.0));
            }
            for cr in &rhz.coefs {
                if let Some(cn) = ns.coef(&cr.coefficient) {
                    close.1 += 1;
                    if (cr.ci_lo - cn.ci_lo).abs() < 0.05 && (cr.ci_hi - cn.ci_hi).abs() < 0.05 {
                        close.0 += 1;
                    }
                }
            }
        }
        let triple = |v: &[Agreement]| (!v.is_empty()).then(|| metrics::agreement_triple(v));
        comps.push(ComparisonMetrics {
            generating: g,
            replicates: ok.len(),
            failures,
            coverage_agreement: triple(&cov_agree),
            type_s_agreement: triple(&ts_agree),
            nesting: opt(percent(nest.0, nest.1)),
            endpoints_within_05: opt(percent(close.0, close.1)),
            variance_ordering: opt(percent(var_order.0, var_order.1)),
        });
    }
    (cells, comps)
}

/// Run every (generating model, replicate) pair in parallel; each pair owns
/// RNG streams keyed by (seed, study, generating model, replicate).
pub fn run_simulation(cfg: &SimConfig, graph: &AdjacencyGraph) -> Result<SimulationReport> {
    cfg.validate()?;
    let prep = prepare(cfg, graph)?;
    info!(
        "{}: n = {}, {} replicates x {} iterations, p = {}",
        cfg.study.label(),
        graph.n(),
        cfg.replicates,
        cfg.iterations,
        prep.full.p()
    );
    let jobs: Vec<(usize, usize)> = (0..cfg.generating.len())
        .flat_map(|g| (0..cfg.replicates).map(move |r| (g, r)))
        .collect();
    let records: Vec<ReplicateRecord> = jobs
        .par_iter()
        .map(|&(g, r)| run_replicate(cfg, graph, &prep, g, r))
        .collect();
    let truth = cfg.study.truth(cfg.small_effect);
    let (cells, comparisons) = aggregate(cfg, &truth, &records);
    Ok(SimulationReport {
        config: cfg.clone(),
        graph_n: graph.n(),
        truth,
        cells,
        comparisons,
        records,
    })
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(x) => format!("{x:.digits$}"),
        None => "-".into(),
    }
}

impl SimulationReport {
    pub fn cell(&self, g: GenKind, a: AnalysisKind) -> Option<&CellMetrics> {
        self.cells.iter().find(|c| c.generating == g && c.analysis == a)
    }

    pub fn comparison(&self, g: GenKind) -> Option<&ComparisonMetrics> {
        self.comparisons.iter().find(|c| c.generating == g)
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn write_cells_csv<W: Write>(&self, w: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            study: &'a str,
            generating: &'a str,
            analysis: &'a str,
            replicates: usize,
            coverage: Option<f64>,
            power: Option<f64>,
            type_s: Option<f64>,
            bias_p10: Option<f64>,
            bias_p90: Option<f64>,
            mse: Option<f64>,
            mean_ci_width: Option<f64>,
            mean_variance: Option<f64>,
        }
        let mut wr = csv::Writer::from_writer(w);
        for c in &self.cells {
            wr.serialize(Row {
                study: self.config.study.label(),
                generating: c.generating.label(),
                analysis: c.analysis.label(),
                replicates: c.replicates,
                coverage: c.coverage,
                power: c.power,
                type_s: c.type_s,
                bias_p10: c.bias_p10,
                bias_p90: c.bias_p90,
                mse: c.mse,
                mean_ci_width: c.mean_ci_width,
                mean_variance: c.mean_variance,
            })?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_comparisons_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "study",
            "generating",
            "replicates",
            "failures",
            "coverage_agree",
            "coverage_rhz_plus",
            "coverage_ns_plus",
            "type_s_agree",
            "type_s_rhz_plus",
            "type_s_ns_plus",
            "nesting",
            "endpoints_within_05",
            "variance_ordering",
        ])?;
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.comparisons {
            let (a, b, d) = match c.coverage_agreement {
                Some((a, b, d)) => (Some(a), Some(b), Some(d)),
                None => (None, None, None),
            };
            let (ta, tb, td) = match c.type_s_agreement {
                Some((a, b, d)) => (Some(a), Some(b), Some(d)),
                None => (None, None, None),
            };
            wr.write_record([
                self.config.study.label().to_string(),
                c.generating.label().to_string(),
                c.replicates.to_string(),
                c.failures.to_string(),
                f(a),
                f(b),
                f(d),
                f(ta),
                f(tb),
                f(td),
                f(c.nesting),
                f(c.endpoints_within_05),
                f(c.variance_ordering),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// One row per (generating, replicate, analysis, coefficient).
    pub fn write_replicates_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["generating", "replicate", "analysis", "coefficient", "mean", "variance", "ci_lo", "ci_hi", "error"])?;
        for r in &self.records {
            if let Some(e) = &r.error {
                wr.write_record([r.generating.label(), &r.replicate.to_string(), "", "", "", "", "", "", e])?;
                continue;
            }
            for f in &r.fits {
                for c in &f.coefs {
                    wr.write_record([
                        r.generating.label(),
                        &r.replicate.to_string(),
                        f.analysis.label(),
                        &c.coefficient,
                        &c.mean.to_string(),
                        &c.variance.to_string(),
                        &c.ci_lo.to_string(),
                        &c.ci_hi.to_string(),
                        "",
                    ])?;
                }
            }
        }
        wr.flush()?;
        Ok(())
    }

    fn table(&self, title: &str, value: impl Fn(&CellMetrics) -> String) -> String {
        let gens = &self.config.generating;
        let mut s = String::new();
        let _ = writeln!(s, "{title}");
        let _ = write!(s, "{:<10}", "Analysis");
        for g in gens {
            let _ = write!(s, "{:>16}", g.label());
        }
        s.push('\n');
        for a in analysis_kinds() {
            let _ = write!(s, "{:<10}", a.label());
            for g in gens {
                let v = self.cell(*g, a).map(&value).unwrap_or_else(|| "-".into());
                let _ = write!(s, "{v:>16}");
            }
            s.push('\n');
        }
        s
    }

    fn agreement_table(&self, title: &str, pick: impl Fn(&ComparisonMetrics) -> Option<(f64, f64, f64)>) -> String {
        let gens = &self.config.generating;
        let mut s = String::new();
        let _ = writeln!(s, "{title}");
        let _ = write!(s, "{:<10}", "");
        for g in gens {
            let _ = write!(s, "{:>16}", g.label());
        }
        s.push('\n');
        for (i, name) in ["Agree", "RHZ +", "NS +"].iter().enumerate() {
            let _ = write!(s, "{name:<10}");
            for g in gens {
                let v = self
                    .comparison(*g)
                    .and_then(&pick)
                    .map(|t| format!("{:.1}%", [t.0, t.1, t.2][i]))
                    .unwrap_or_else(|| "-".into());
                let _ = write!(s, "{v:>16}");
            }
            s.push('\n');
        }
        s
    }

    /// Plain-text tables in the layout of the published ones.
    pub fn render_text(&self) -> String {
        let c = &self.config;
        let mut s = format!(
            "{}{}: n = {}, {} replicates, {} iterations ({} burn-in), seed {}, failures {}\n\n",
            c.study.label(),
            if c.small_effect { " (small effect)" } else { "" },
            self.graph_n,
            c.replicates,
            c.iterations,
            c.burn_in,
            c.seed,
            self.failures()
        );
        let pct = |v: Option<f64>| v.map(|x| format!("{x:.1}%")).unwrap_or_else(|| "-".into());
        s += &self.table("Coverage of beta_1", |m| pct(m.coverage));
        s.push('\n');
        s += &self.agreement_table("Coverage comparison, RHZ vs NS", |m| m.coverage_agreement);
        if c.study != Study::Sim1 {
            s.push('\n');
            s += &self.table("Type-S error of beta_2", |m| pct(m.type_s));
            s.push('\n');
            s += &self.agreement_table("Type-S comparison, RHZ vs NS", |m| m.type_s_agreement);
        }
        s.push('\n');
        s += &self.table("Power for beta_1", |m| pct(m.power));
        s.push('\n');
        s += &self.table("10th and 90th percentiles of bias, beta_1", |m| match (m.bias_p10, m.bias_p90) {
            (Some(a), Some(b)) => format!("({a:.2},{b:.2})"),
            _ => "-".into(),
        });
        s.push('\n');
        s += &self.table("Average MSE of beta_1", |m| fmt_opt(m.mse, 3));
        s.push('\n');
        let _ = writeln!(s, "RHZ vs NS per generating model");
        for m in &self.comparisons {
            let _ = writeln!(
                s,
                "  {:<5} nested {}  endpoints within .05 {}  Var_RHZ <= Var_NS {}",
                m.generating.label(),
                pct(m.nesting),
                pct(m.endpoints_within_05),
                pct(m.variance_ordering)
            );
        }
        s
    }
}
