//! Python bindings: graphs, model specs, samplers, quadrature moments,
//! simulation studies and the verification battery.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use rsr_core::analytics::{self, summary::CoefSummary};
use rsr_core::bases::{DesignMatrix, HhSize};
use rsr_core::graph::{self, AdjacencyGraph};
use rsr_core::model::{self as core_model, BetaPrior, Family, ModelKind, ModelSpec, PriorConfig};
use rsr_core::samplers::{gibbs_gaussian, mh_poisson, ChainConfig};
use rsr_core::sim::{self, CovariateRecipe, OrderRule, SimConfig, Study};

fn err(e: rsr_core::Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("ragged covariate rows"));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[pyclass(name = "Graph", module = "rsr", from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: AdjacencyGraph,
}

#[pymethods]
impl PyGraph {
    /// 48 contiguous US states sharing a border.
    #[staticmethod]
    fn us48() -> Self {
        Self { inner: AdjacencyGraph::us48() }
    }

    /// 194-vertex planar stand-in for the Slovenia municipality graph.
    #[staticmethod]
    fn surrogate194() -> Self {
        Self {
            inner: AdjacencyGraph::surrogate194(),
        }
    }

    #[staticmethod]
    fn lattice(rows: usize, cols: usize) -> Self {
        Self {
            inner: AdjacencyGraph::lattice(rows, cols),
        }
    }

    /// 0-based undirected edges.
    #[staticmethod]
    fn from_edges(edges: Vec<(usize, usize)>, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: graph::load_graph(&edges, n).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (path, n=None))]
    fn read(path: &str, n: Option<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: graph::read_edge_list(path, n).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges()
    }

    fn laplacian(&self) -> Vec<Vec<f64>> {
        rows_of(&self.inner.laplacian())
    }

    /// Laplacian eigenvalues, descending.
    fn eigenvalues(&self) -> PyResult<Vec<f64>> {
        let e = graph::laplacian_eigen(&self.inner).map_err(err)?;
        Ok(e.values.iter().copied().collect())
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.inner.n(), self.inner.edge_count())
    }
}

fn parse_kind(kind: &str, q: Option<usize>) -> PyResult<ModelKind> {
    match kind.to_ascii_lowercase().as_str() {
        "ns" => Ok(ModelKind::Ns),
        "icar" => Ok(ModelKind::Icar),
        "rhz" => Ok(ModelKind::Rhz),
        "hh" => Ok(ModelKind::Hh(q.map(HhSize::Fixed).unwrap_or(HhSize::Default))),
        "hh_attractive" => Ok(ModelKind::Hh(HhSize::Attractive)),
        other => Err(PyValueError::new_err(format!("unknown model kind '{other}'"))),
    }
}

fn priors_from(d: Option<HashMap<String, f64>>, poisson: bool) -> PyResult<PriorConfig> {
    let mut p = if poisson { PriorConfig::poisson_default() } else { PriorConfig::gaussian_default() };
    for (k, v) in d.unwrap_or_default() {
        match k.as_str() {
            "a_eps" => p.a_eps = v,
            "b_eps" => p.b_eps = v,
            "a_s" => p.a_s = v,
            "b_s" => p.b_s = v,
            "beta_sd" => p.beta_prior = BetaPrior::Normal { sd: v },
            other => return Err(PyValueError::new_err(format!("unknown prior key '{other}'"))),
        }
    }
    Ok(p)
}

#[pyclass(name = "Model", module = "rsr")]
struct PyModel {
    spec: ModelSpec,
}

#[pymethods]
impl PyModel {
    /// `covariates` is n rows of p values (no intercept column). ICAR never
    /// gets an intercept. Poisson models need the counts `y` and take an
    /// optional raw `expected` column which is logged.
    #[new]
    #[pyo3(signature = (kind, graph, covariates, names=None, intercept=true, q=None, family="gaussian", y=None, expected=None, priors=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        kind: &str,
        graph: &PyGraph,
        covariates: Vec<Vec<f64>>,
        names: Option<Vec<String>>,
        intercept: bool,
        q: Option<usize>,
        family: &str,
        y: Option<Vec<f64>>,
        expected: Option<Vec<f64>>,
        priors: Option<HashMap<String, f64>>,
    ) -> PyResult<Self> {
        let kind = parse_kind(kind, q)?;
        let cov = matrix(&covariates)?;
        let names = names.unwrap_or_else(|| (1..=cov.ncols()).map(|j| format!("x{j}")).collect());
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let design = DesignMatrix::from_covariates(&cov, intercept && kind != ModelKind::Icar, &refs).map_err(err)?;
        let spec = match family {
            "gaussian" => core_model::make_model(kind, &graph.inner, design, priors_from(priors, false)?, Family::Gaussian).map_err(err)?,
            "poisson" => {
                let y = DVector::from_vec(y.ok_or_else(|| PyValueError::new_err("Poisson models need y"))?);
                let offset = match expected {
                    Some(e) => {
                        if e.iter().any(|v| !(*v > 0.0)) {
                            return Err(PyValueError::new_err("expected counts must be positive"));
                        }
                        DVector::from_iterator(e.len(), e.iter().map(|v| v.ln()))
                    }
                    None => DVector::zeros(y.len()),
                };
                core_model::make_count_model(kind, &graph.inner, design, priors_from(priors, true)?, offset, &y).map_err(err)?
            }
            other => return Err(PyValueError::new_err(format!("unknown family '{other}'"))),
        };
        Ok(Self { spec })
    }

    #[getter]
    fn n(&self) -> usize {
        self.spec.n()
    }
    #[getter]
    fn p(&self) -> usize {
        self.spec.p()
    }
    #[getter]
    fn q(&self) -> usize {
        self.spec.q()
    }
    #[getter]
    fn label(&self) -> String {
        self.spec.kind.label()
    }
    #[getter]
    fn names(&self) -> Vec<String> {
        self.spec.design.names().to_vec()
    }

    /// Spatial basis W as n rows.
    fn basis(&self) -> Vec<Vec<f64>> {
        rows_of(&self.spec.w)
    }

    fn conditions(&self) -> Vec<(String, bool, String)> {
        core_model::validate_conditions(&self.spec)
            .checks
            .into_iter()
            .map(|c| (c.name.to_string(), c.passed, c.detail))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Model({}, n={}, p={}, q={})", self.spec.kind.label(), self.spec.n(), self.spec.p(), self.spec.q())
    }
}

fn coef_dict(c: &CoefSummary) -> HashMap<&'static str, f64> {
    HashMap::from([
        ("mean", c.mean),
        ("variance", c.variance),
        ("ci_lo", c.ci_lo),
        ("ci_hi", c.ci_hi),
        ("median", c.median),
        ("mcse", c.mcse),
    ])
}

/// Run the Gibbs (Gaussian) or MH (Poisson) sampler; returns a summary per
/// parameter and the retained β draws.
#[pyfunction]
#[pyo3(signature = (model, y, iters=20_000, burnin=None, seed=20240607, alpha=0.05))]
fn fit(py: Python<'_>, model: &PyModel, y: Vec<f64>, iters: usize, burnin: Option<usize>, seed: u64, alpha: f64) -> PyResult<Py<PyAny>> {
    let y = DVector::from_vec(y);
    let cfg = ChainConfig::new(iters, seed).with_burn_in(burnin.unwrap_or(iters / 10));
    let spec = &model.spec;
    let chain = py
        .detach(|| if spec.is_gaussian() { gibbs_gaussian(spec, &y, &cfg) } else { mh_poisson(spec, &y, &cfg) })
        .map_err(err)?;
    let s = analytics::summarize(&chain, alpha).map_err(err)?;
    let out = pyo3::types::PyDict::new(py);
    let summary: HashMap<String, HashMap<&'static str, f64>> = s.rows.iter().map(|c| (c.coefficient.clone(), coef_dict(c))).collect();
    out.set_item("summary", summary)?;
    out.set_item("beta_names", chain.beta_names.clone())?;
    out.set_item("beta", rows_of(&chain.beta))?;
    out.set_item("tau_eps", chain.tau_eps.clone())?;
    out.set_item("tau_s", chain.tau_s.clone())?;
    out.set_item("acceptance_beta", chain.acceptance.beta)?;
    out.set_item("acceptance_delta", chain.acceptance.delta)?;
    out.set_item("warnings", chain.warnings.clone())?;
    Ok(out.into_any().unbind())
}

/// Exact posterior mean, covariance and E[1/τ_ε|Y] (Gaussian, flat β prior).
#[pyfunction]
fn quadrature_moments(model: &PyModel, y: Vec<f64>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, f64)> {
    let m = analytics::quadrature_moments(&model.spec, &DVector::from_vec(y)).map_err(err)?;
    Ok((m.mean.iter().copied().collect(), rows_of(&m.cov), m.sigma_mean))
}

/// Ordinary least squares for the model's design.
#[pyfunction]
fn ols(model: &PyModel, y: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(model.spec.design.ols(&DVector::from_vec(y)).map_err(err)?.iter().copied().collect())
}

/// Covariate correlated with the k lowest-frequency Laplacian eigenvectors.
#[pyfunction]
#[pyo3(signature = (graph, k, seed, sd=1.0, mean=0.0))]
fn gen_covariate(graph: &PyGraph, k: usize, seed: u64, sd: f64, mean: f64) -> PyResult<Vec<f64>> {
    let eig = graph::laplacian_eigen(&graph.inner).map_err(err)?;
    let recipe = CovariateRecipe {
        s_l: sd,
        l_bar: mean,
        ..CovariateRecipe::lowest(k)
    };
    let mut r = rsr_core::rng::from_seed(seed);
    Ok(sim::gen_covariate(&eig, &recipe, &mut r).map_err(err)?.iter().copied().collect())
}

/// Run a simulation study; returns (plain-text report, per-cell metrics).
#[pyfunction]
#[pyo3(signature = (study, replicates, iters, seed=20240607, small_effect=false, graph=None))]
fn simulate(
    py: Python<'_>,
    study: &str,
    replicates: usize,
    iters: usize,
    seed: u64,
    small_effect: bool,
    graph: Option<PyGraph>,
) -> PyResult<(String, Vec<HashMap<String, Option<f64>>>)> {
    let st: Study = study.parse().map_err(err)?;
    let mut cfg = SimConfig::new(st, seed).with_scale(replicates, iters);
    cfg.small_effect = small_effect;
    let g = match graph {
        Some(g) => g.inner,
        None if st.is_poisson() => AdjacencyGraph::surrogate194(),
        None => AdjacencyGraph::us48(),
    };
    let report = py.detach(|| sim::run_simulation(&cfg, &g)).map_err(err)?;
    let cells = report
        .cells
        .iter()
        .map(|c| {
            let mut m: HashMap<String, Option<f64>> = HashMap::new();
            m.insert(format!("generating={}", c.generating.label()), None);
            m.insert(format!("analysis={}", c.analysis.label()), None);
            m.insert("coverage".into(), c.coverage);
            m.insert("power".into(), c.power);
            m.insert("type_s".into(), c.type_s);
            m.insert("mse".into(), c.mse);
            m.insert("bias_p10".into(), c.bias_p10);
            m.insert("bias_p90".into(), c.bias_p90);
            m
        })
        .collect();
    Ok((report.render_text(), cells))
}

/// Theorem/lemma battery; one (check, instance, value, threshold, passed) per row.
#[pyfunction]
#[pyo3(signature = (instances=100, gibbs_iterations=20_000, rotations=20, lemma_instances=20, lemma_grid=20, tail_instances=5, seed=20240607))]
fn verify(
    py: Python<'_>,
    instances: usize,
    gibbs_iterations: usize,
    rotations: usize,
    lemma_instances: usize,
    lemma_grid: usize,
    tail_instances: usize,
    seed: u64,
) -> PyResult<Vec<(String, String, f64, f64, bool)>> {
    let cfg = analytics::VerifyConfig {
        seed,
        instances,
        gibbs_iterations,
        rotations,
        lemma_instances,
        lemma_grid,
        tail_instances,
    };
    let r = py.detach(|| analytics::run_verification(&cfg)).map_err(err)?;
    Ok(r.rows.into_iter().map(|x| (x.check, x.instance, x.value, x.threshold, x.passed)).collect())
}

/// Variance trajectory as synthetic covariates from C(X)^⊥ are added.
/// Returns (k, variances of the original coefficients, E[1/τ_ε|Y]) per step.
#[pyfunction]
#[pyo3(signature = (covariates, y, intercept=true, order="abs"))]
fn overfit_demo(covariates: Vec<Vec<f64>>, y: Vec<f64>, intercept: bool, order: &str) -> PyResult<Vec<(usize, Vec<f64>, f64)>> {
    let cov = matrix(&covariates)?;
    let names: Vec<String> = (1..=cov.ncols()).map(|j| format!("x{j}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let d = DesignMatrix::from_covariates(&cov, intercept, &refs).map_err(err)?;
    let rule = match order {
        "abs" => OrderRule::AbsDecreasing,
        "signed" => OrderRule::Decreasing,
        other => return Err(PyValueError::new_err(format!("unknown order '{other}'"))),
    };
    let rows = sim::overfit_demo(&d, &DVector::from_vec(y), &PriorConfig::sat(), rule).map_err(err)?;
    Ok(rows.into_iter().map(|r| (r.k, r.variances, r.sigma_mean)).collect())
}

#[pymodule]
fn rsr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(quadrature_moments, m)?)?;
    m.add_function(wrap_pyfunction!(ols, m)?)?;
    m.add_function(wrap_pyfunction!(gen_covariate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(overfit_demo, m)?)?;
    Ok(())
}
