use std::path::PathBuf;

use rsr_core::analytics::{quadrature_moments, summarize};
use rsr_core::bases::HhSize;
use rsr_core::data::{read_dataset, write_chain_csv, write_summary_csv, ColumnRoles};
use rsr_core::graph::{read_edge_list, AdjacencyGraph};
use rsr_core::model::{make_count_model, make_model, validate_conditions, Family, ModelKind, PriorConfig};
use rsr_core::samplers::{gibbs_gaussian, mh_poisson, ChainConfig};
use rsr_core::sim::metrics::spearman;
use rsr_core::sim::{overfit_demo, run_simulation, GenKind, OrderRule, SimConfig, Study};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

#[test]
fn shipped_graphs_match_builtins() {
    let us = read_edge_list(data("us48.edges"), None).unwrap();
    assert_eq!(us.n(), 48);
    assert_eq!(us.edge_count(), 107);
    assert_eq!(us.edges(), AdjacencyGraph::us48().edges());
    let slo = read_edge_list(data("slovenia_surrogate.edges"), None).unwrap();
    assert_eq!(slo.edges(), AdjacencyGraph::surrogate194().edges());
}

#[test]
fn sat_fixture_gibbs_matches_quadrature() {
    let d = read_dataset(data("sat_fixture.csv"), &ColumnRoles::sat()).unwrap();
    let g = AdjacencyGraph::us48();
    let spec = make_model(ModelKind::Hh(HhSize::Fixed(10)), &g, d.design(true).unwrap(), PriorConfig::sat(), Family::Gaussian).unwrap();
    assert!(validate_conditions(&spec).all_passed());
    let q = quadrature_moments(&spec, &d.y).unwrap();
    let chain = gibbs_gaussian(&spec, &d.y, &ChainConfig::new(40_000, 3)).unwrap();
    let s = summarize(&chain, 0.05).unwrap();
    for (j, row) in s.rows.iter().take(3).enumerate() {
        let z = (row.mean - q.mean[j]) / row.mcse;
        assert!(z.abs() < 4.5, "{} z = {z}", row.coefficient);
        let rel = row.variance / q.cov[(j, j)] - 1.0;
        assert!(rel.abs() < 0.1, "{} variance ratio off by {rel}", row.coefficient);
    }
    let mut buf = Vec::new();
    write_summary_csv(&s, &mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("coefficient,mean,variance,ci_lo,ci_hi,median,mcse\n"));
    let mut buf = Vec::new();
    write_chain_csv(&chain, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), chain.len() + 1);
}

#[test]
fn slovenia_fixture_poisson_models_fit() {
    let d = read_dataset(data("slovenia_fixture.csv"), &ColumnRoles::slovenia()).unwrap();
    let g = AdjacencyGraph::surrogate194();
    let off = d.log_offset().unwrap();
    for kind in [ModelKind::Ns, ModelKind::Rhz, ModelKind::Hh(HhSize::Fixed(19)), ModelKind::Icar] {
        let design = d.design(kind != ModelKind::Icar).unwrap();
        let spec = make_count_model(kind, &g, design, PriorConfig::poisson_default(), off.clone(), &d.y).unwrap();
        let chain = mh_poisson(&spec, &d.y, &ChainConfig::new(20_000, 5)).unwrap();
        let s = summarize(&chain, 0.05).unwrap();
        let b = s.get("seco").unwrap();
        assert!(b.ci_lo < b.mean && b.mean < b.ci_hi);
        assert!(b.mean.is_finite() && b.variance > 0.0, "{}", kind.label());
    }
}

#[test]
fn sat_fixture_overfit_trajectory() {
    let d = read_dataset(data("sat_fixture.csv"), &ColumnRoles::sat()).unwrap();
    let design = d.design(true).unwrap();
    let rows = overfit_demo(&design, &d.y, &PriorConfig::sat(), OrderRule::AbsDecreasing).unwrap();
    assert_eq!(rows.first().unwrap().k, 0);
    assert_eq!(rows.last().unwrap().k, 43);
    let k: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
    for j in 0..3 {
        let v: Vec<f64> = rows.iter().map(|r| r.variances[j]).collect();
        assert!(spearman(&k, &v) < 0.0);
    }
}

#[test]
fn tiny_sim3_runs_and_is_reproducible() {
    let g = AdjacencyGraph::surrogate194();
    let cfg = SimConfig::new(Study::Sim3, 4).with_scale(1, 2_000);
    let a = run_simulation(&cfg, &g).unwrap();
    let b = run_simulation(&cfg, &g).unwrap();
    assert_eq!(a.failures(), 0);
    assert_eq!(a.render_text(), b.render_text());
    let c = a.comparison(GenKind::Icar).unwrap();
    let (x, y, z) = c.coverage_agreement.unwrap();
    assert!((x + y + z - 100.0).abs() < 1e-9);
}
