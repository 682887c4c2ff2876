//! One line per acceptance criterion. Runs at desk scale unless
//! RSR_ACCEPT_QUICK=1 (smaller studies, same checks, labelled as such).
//! Exits non-zero on any FAIL only when RSR_ACCEPT_STRICT=1.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use rsr_core::analytics::oracles::ClosedFormNs;
use rsr_core::analytics::{quadrature_moments, summarize, VerificationReport, VerifyConfig};
use rsr_core::bases::{DesignMatrix, HhSize};
use rsr_core::data::{read_dataset, ColumnRoles};
use rsr_core::graph::{read_edge_list, AdjacencyGraph};
use rsr_core::model::{make_count_model, make_model, Family, ModelKind, PriorConfig};
use rsr_core::rng;
use rsr_core::samplers::{gibbs_gaussian, mh_poisson, ChainConfig};
use rsr_core::sim::{run_simulation, GenKind, SimConfig, SimulationReport, Study};

const SEED: u64 = 20240607;

#[derive(Clone, Copy, PartialEq)]
enum Status {
    Pass,
    Fail,
    NotEvaluated,
}

struct Outcome {
    id: usize,
    status: Status,
    text: String,
}

fn outcome(id: usize, ok: bool, text: String) -> Outcome {
    Outcome {
        id,
        status: if ok { Status::Pass } else { Status::Fail },
        text,
    }
}

fn print(o: &Outcome) {
    let tag = match o.status {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::NotEvaluated => "NOT EVALUATED",
    };
    println!("criterion {:>2} [{tag}] {}", o.id, o.text);
}

fn quick() -> bool {
    std::env::var("RSR_ACCEPT_QUICK").is_ok_and(|v| v == "1")
}

fn env_path(name: &str) -> Option<PathBuf> {
    std::env::var_os(name).map(PathBuf::from).filter(|p| !p.as_os_str().is_empty())
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../rsr-core/data")
}

fn all_pass(r: &VerificationReport, check: &str) -> (bool, usize, usize) {
    let (p, n) = r.tally(check);
    (p == n && n > 0, p, n)
}

fn worst(r: &VerificationReport, check: &str) -> f64 {
    r.rows_for(check).iter().map(|x| x.value).fold(f64::NEG_INFINITY, f64::max)
}

fn theorem_criteria() -> Vec<Outcome> {
    let cfg = VerifyConfig::default();
    let t = Instant::now();
    let report = rsr_core::analytics::run_verification(&cfg);
    let secs = t.elapsed().as_secs_f64();
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            return (1..=4).map(|i| outcome(i, false, format!("verification battery errored: {e}"))).collect();
        }
    };
    let mut out = Vec::new();
    let (q_ok, qp, qn) = all_pass(&report, "thm1_quadrature");
    let (g_ok, gp, gn) = all_pass(&report, "thm1_gibbs");
    out.push(outcome(
        1,
        q_ok && g_ok && secs < 300.0,
        format!(
            "Thm 1: quadrature mean = OLS {qp}/{qn} (worst {:.1e}), Gibbs within 3 MCSE {gp}/{gn}; battery {secs:.0} s (< 300)",
            worst(&report, "thm1_quadrature")
        ),
    ));
    let (ok2, p2, n2) = all_pass(&report, "thm2_ordering");
    let (okc, pc, nc) = all_pass(&report, "thm2_conditional");
    out.push(outcome(
        2,
        ok2,
        format!(
            "Thm 2: Var_RSR <= Var_NS + 1e-10 on {p2}/{n2} instances (worst excess {:.3e}); proof step E[sigma|Y,r] <= E[sigma_NS|Y] {pc}/{nc}{}",
            worst(&report, "thm2_ordering"),
            if okc { "" } else { " FAILED" }
        ),
    ));
    // timed on its own
    let t = Instant::now();
    let only4 = rsr_core::analytics::run_verification(&VerifyConfig {
        instances: 0,
        lemma_instances: 0,
        tail_instances: 0,
        gibbs_iterations: 0,
        ..cfg
    });
    let secs4 = t.elapsed().as_secs_f64();
    match only4 {
        Ok(r4) => {
            let (ok, p, n) = all_pass(&r4, "thm4_rotation");
            let (okn, _, _) = all_pass(&r4, "thm4_negative_control");
            let ctrl = worst(&r4, "thm4_negative_control");
            out.push(outcome(
                3,
                ok && okn && n == cfg.rotations && secs4 < 120.0,
                format!(
                    "Thm 4: {p}/{n} rotations agree (worst {:.1e} <= 1e-8); negative control differs by {ctrl:.3} (> 1e-4); {secs4:.1} s (< 120)",
                    worst(&r4, "thm4_rotation")
                ),
            ));
        }
        Err(e) => out.push(outcome(3, false, format!("Thm 4 run errored: {e}"))),
    }
    let (ok_a, pa, na) = all_pass(&report, "lemma_sigma_psd");
    let (ok_b, pb, nb) = all_pass(&report, "lemma_determinant");
    let min_eig = report.rows_for("lemma_sigma_psd").iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    out.push(outcome(
        4,
        ok_a && ok_b && na == cfg.lemma_instances,
        format!(
            "Lemmas on {}x{} grid: min eig(Sigma) >= -1e-10 {pa}/{na} (min {min_eig:.2e}); determinant bound {pb}/{nb}",
            cfg.lemma_grid, cfg.lemma_grid
        ),
    ));
    out
}

fn sim_config(study: Study) -> SimConfig {
    let c = SimConfig::new(study, SEED);
    if quick() {
        if study.is_poisson() {
            c.with_scale(10, 20_000)
        } else {
            c.with_scale(50, 5_000)
        }
    } else {
        c
    }
}

fn scale_note(c: &SimConfig) -> String {
    format!("[{} reps x {} iters{}]", c.replicates, c.iterations, if quick() { ", QUICK" } else { "" })
}

fn cov(r: &SimulationReport, g: GenKind, a: GenKind) -> f64 {
    r.cell(g, a).and_then(|c| c.coverage).unwrap_or(f64::NAN)
}

fn type_s(r: &SimulationReport, g: GenKind, a: GenKind) -> f64 {
    r.cell(g, a).and_then(|c| c.type_s).unwrap_or(f64::NAN)
}

/// Replicate-weighted pool of a per-generating-model percentage.
fn pooled(r: &SimulationReport, f: impl Fn(&rsr_core::sim::study::ComparisonMetrics) -> Option<f64>) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for c in &r.comparisons {
        if let Some(v) = f(c) {
            num += v * c.replicates as f64;
            den += c.replicates as f64;
        }
    }
    num / den
}

fn criterion5() -> Outcome {
    let c = sim_config(Study::Sim1);
    let r = match run_simulation(&c, &AdjacencyGraph::us48()) {
        Ok(r) => r,
        Err(e) => return outcome(5, false, format!("Sim 1 errored: {e}")),
    };
    let mut order_ok = true;
    let mut cells = Vec::new();
    for g in GenKind::ALL {
        let (i, n, z) = (cov(&r, g, GenKind::Icar), cov(&r, g, GenKind::Ns), cov(&r, g, GenKind::Rhz));
        order_ok &= i >= n && n >= z;
        cells.push(format!("{}: {i:.1}/{n:.1}/{z:.1}", g.label()));
    }
    let ns_i = cov(&r, GenKind::Icar, GenKind::Ns);
    let rhz_i = cov(&r, GenKind::Icar, GenKind::Rhz);
    let rhz_plus = r
        .comparisons
        .iter()
        .filter_map(|m| m.coverage_agreement.map(|t| t.1))
        .fold(0.0, f64::max);
    let nest = pooled(&r, |m| m.nesting);
    let ok = order_ok && (ns_i - 84.6).abs() <= 6.0 && (rhz_i - 72.5).abs() <= 6.0 && rhz_plus <= 1.0 && nest >= 90.0;
    outcome(
        5,
        ok,
        format!(
            "Sim 1 {}: coverage ICAR/NS/RHZ {} (ordering {}); ICAR-gen NS {ns_i:.1} (84.6 +- 6), RHZ {rhz_i:.1} (72.5 +- 6); max RHZ+ {rhz_plus:.1}% (<= 1); nesting {nest:.1}% (>= 90); failures {}",
            scale_note(&c),
            cells.join(", "),
            if order_ok { "holds" } else { "violated" },
            r.failures()
        ),
    )
}

fn criterion6() -> Outcome {
    let c = sim_config(Study::Sim2);
    let r = match run_simulation(&c, &AdjacencyGraph::us48()) {
        Ok(r) => r,
        Err(e) => return outcome(6, false, format!("Sim 2 errored: {e}")),
    };
    let rhz = type_s(&r, GenKind::Ns, GenKind::Rhz);
    let ns = type_s(&r, GenKind::Ns, GenKind::Ns);
    let icar: Vec<f64> = GenKind::ALL.iter().map(|g| type_s(&r, *g, GenKind::Icar)).collect();
    let icar_max = icar.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        6,
        rhz - ns >= 20.0 && icar_max <= 10.0,
        format!(
            "Sim 2 {}: NS-gen Type-S RHZ {rhz:.1}% vs NS {ns:.1}% (gap {:.1} >= 20); ICAR Type-S by column {:.1}/{:.1}/{:.1}% (<= 10); failures {}",
            scale_note(&c),
            rhz - ns,
            icar[0],
            icar[1],
            icar[2],
            r.failures()
        ),
    )
}

fn slovenia_graph() -> Result<(AdjacencyGraph, &'static str), String> {
    match env_path("SRSR_SLOVENIA_GRAPH") {
        Some(p) => read_edge_list(&p, None).map(|g| (g, "Slovenia graph")).map_err(|e| e.to_string()),
        None => Ok((AdjacencyGraph::surrogate194(), "194-vertex surrogate graph")),
    }
}

fn criterion7() -> Outcome {
    let c = sim_config(Study::Sim3);
    let (g, which) = match slovenia_graph() {
        Ok(x) => x,
        Err(e) => return outcome(7, false, format!("cannot read SRSR_SLOVENIA_GRAPH: {e}")),
    };
    let r = match run_simulation(&c, &g) {
        Ok(r) => r,
        Err(e) => return outcome(7, false, format!("Sim 3 errored: {e}")),
    };
    let icar = cov(&r, GenKind::Icar, GenKind::Icar);
    let ns = cov(&r, GenKind::Icar, GenKind::Ns);
    let rhz = cov(&r, GenKind::Icar, GenKind::Rhz);
    let close = pooled(&r, |m| m.endpoints_within_05);
    outcome(
        7,
        icar >= 90.0 && ns <= 50.0 && rhz <= 50.0 && close >= 95.0,
        format!(
            "Sim 3 {} on {which}: ICAR-gen coverage ICAR {icar:.1}% (>= 90), NS {ns:.1}%, RHZ {rhz:.1}% (<= 50); RHZ/NS endpoints within .05 in {close:.1}% of fits (>= 95); failures {}",
            scale_note(&c),
            r.failures()
        ),
    )
}

fn criterion8() -> Outcome {
    let (Some(csv), Some(graph)) = (env_path("SRSR_SLOVENIA_CSV"), env_path("SRSR_SLOVENIA_GRAPH")) else {
        return Outcome {
            id: 8,
            status: Status::NotEvaluated,
            text: "Slovenia application: set SRSR_SLOVENIA_CSV and SRSR_SLOVENIA_GRAPH (user-supplied data)".into(),
        };
    };
    let run = || -> Result<Outcome, String> {
        let e = |x: rsr_core::Error| x.to_string();
        let g = read_edge_list(&graph, None).map_err(e)?;
        let data = read_dataset(&csv, &ColumnRoles::slovenia()).map_err(e)?;
        data.check_graph(&g).map_err(e)?;
        let offset = data.log_offset().map_err(e)?;
        let mut fits = BTreeMap::new();
        let kinds = [
            ("NS", ModelKind::Ns),
            ("RHZ", ModelKind::Rhz),
            ("HH19", ModelKind::Hh(HhSize::Fixed(19))),
            ("HHpos", ModelKind::Hh(HhSize::Attractive)),
            ("ICAR", ModelKind::Icar),
        ];
        for (i, (name, kind)) in kinds.iter().enumerate() {
            let d = data.design(*kind != ModelKind::Icar).map_err(e)?;
            let spec = make_count_model(*kind, &g, d, PriorConfig::poisson_default(), offset.clone(), &data.y).map_err(e)?;
            let cfg = ChainConfig::new(200_000, rng::derive_seed(SEED, &[8, i as u64]));
            let chain = mh_poisson(&spec, &data.y, &cfg).map_err(e)?;
            let s = summarize(&chain, 0.05).map_err(e)?;
            let row = s.get("seco").ok_or("no seco row")?.clone();
            fits.insert(*name, row);
        }
        let ns = &fits["NS"];
        let ns_ok = (ns.mean + 0.137).abs() <= 0.005 && (ns.ci_lo + 0.175).abs() <= 0.005 && (ns.ci_hi + 0.098).abs() <= 0.005;
        let icar_ok = fits["ICAR"].contains(0.0);
        let mut nested = Vec::new();
        for name in ["RHZ", "HH19", "HHpos"] {
            let f = &fits[name];
            nested.push((name, f.ci_lo >= ns.ci_lo - 1e-12 && f.ci_hi <= ns.ci_hi + 1e-12));
        }
        let all_nested = nested.iter().all(|x| x.1);
        let rows: Vec<String> = fits
            .iter()
            .map(|(k, v)| format!("{k} {:.3} ({:.3}, {:.3})", v.mean, v.ci_lo, v.ci_hi))
            .collect();
        Ok(outcome(
            8,
            ns_ok && icar_ok && all_nested,
            format!(
                "Slovenia: {}; NS vs (-.137, -.175, -.098) +-.005 {}; ICAR CI contains 0 {}; RSR nested in NS {:?}",
                rows.join("; "),
                ns_ok,
                icar_ok,
                nested
            ),
        ))
    };
    run().unwrap_or_else(|m| outcome(8, false, format!("Slovenia application errored: {m}")))
}

/// HH posterior variances by quadrature against NS, q = 1..=q_max.
fn hh_sweep(data: &rsr_core::data::Dataset) -> Result<(usize, usize, usize), String> {
    let e = |x: rsr_core::Error| x.to_string();
    let g = AdjacencyGraph::us48();
    let pr = PriorConfig::sat();
    let ns = make_model(ModelKind::Ns, &g, data.design(true).map_err(e)?, pr, Family::Gaussian).map_err(e)?;
    let ns_v = quadrature_moments(&ns, &data.y).map_err(e)?.variances();
    let q_max = data.n() - ns.p();
    let mut ok = 0;
    let mut total = 0;
    for q in 1..=q_max {
        let spec = make_model(ModelKind::Hh(HhSize::Fixed(q)), &g, data.design(true).map_err(e)?, pr, Family::Gaussian).map_err(e)?;
        let v = quadrature_moments(&spec, &data.y).map_err(e)?.variances();
        for j in 0..v.len() {
            total += 1;
            if v[j] <= ns_v[j] {
                ok += 1;
            }
        }
    }
    Ok((ok, total, q_max))
}

fn criterion9() -> Outcome {
    let Some(csv) = env_path("SRSR_SAT_CSV") else {
        let fixture = read_dataset(data_dir().join("sat_fixture.csv"), &ColumnRoles::sat());
        let structural = match fixture.map_err(|e| e.to_string()).and_then(|d| hh_sweep(&d)) {
            Ok((ok, total, q)) => format!("fixture: HH variances <= NS {ok}/{total} over q = 1..{q}"),
            Err(e) => format!("fixture sweep errored: {e}"),
        };
        return Outcome {
            id: 9,
            status: Status::NotEvaluated,
            text: format!("SAT application: set SRSR_SAT_CSV (user-supplied data); {structural}"),
        };
    };
    let run = || -> Result<Outcome, String> {
        let data = read_dataset(&csv, &ColumnRoles::sat()).map_err(|e| e.to_string())?;
        data.check_graph(&AdjacencyGraph::us48()).map_err(|e| e.to_string())?;
        let b = data.design(true).and_then(|d| d.ols(&data.y)).map_err(|e| e.to_string())?;
        let round = |x: f64, dp: i32| (x * 10f64.powi(dp)).round() / 10f64.powi(dp);
        let ols_ok = round(b[0], 1) == 590.5 && round(b[1], 2) == -2.84 && round(b[2], 3) == 0.022;
        let (ok, total, q) = hh_sweep(&data)?;
        Ok(outcome(
            9,
            ols_ok && ok == total && q >= 45,
            format!(
                "SAT: OLS ({:.1}, {:.2}, {:.3}) vs (590.5, -2.84, .022); HH variances <= NS {ok}/{total} over q = 1..{q}",
                b[0], b[1], b[2]
            ),
        ))
    };
    run().unwrap_or_else(|m| outcome(9, false, format!("SAT application errored: {m}")))
}

fn criterion10() -> Outcome {
    let run = || -> rsr_core::Result<Outcome> {
        let n = 48;
        let mut r = rng::stream(SEED, &[10]);
        let mut z = || -> f64 { StandardNormal.sample(&mut r) };
        let x = DVector::from_fn(n, |_, _| z());
        let y = DVector::from_fn(n, |i, _| 0.7 * x[i] + 1.3 * z());
        let priors = PriorConfig::gaussian_default();
        let cf = ClosedFormNs::new(&x, &y, &priors)?;
        let mass = cf.total_mass()?;
        let d = DesignMatrix::new(DMatrix::from_columns(&[x.clone()]), false, vec!["x".into()])?;
        let spec = make_model(ModelKind::Ns, &AdjacencyGraph::path(n), d, priors, Family::Gaussian)?;
        let m = 100_000;
        let chain = gibbs_gaussian(&spec, &y, &ChainConfig::new(m + 10_000, SEED).with_burn_in(10_000))?;
        let mut draws: Vec<f64> = chain.beta.column(0).iter().copied().collect();
        draws.sort_by(|a, b| a.total_cmp(b));
        let mut ks: f64 = 0.0;
        for (i, v) in draws.iter().enumerate() {
            let f = cf.cdf(*v)?;
            ks = ks.max((f - i as f64 / m as f64).abs()).max((f - (i + 1) as f64 / m as f64).abs());
        }
        Ok(outcome(
            10,
            (mass - 1.0).abs() <= 1e-6 && ks < 0.02,
            format!("closed-form NS density: mass {mass:.9} (|1 - mass| <= 1e-6); KS to {m} Gibbs draws {ks:.4} (< .02)"),
        ))
    };
    run().unwrap_or_else(|e| outcome(10, false, format!("errored: {e}")))
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut m = BTreeMap::new();
    if let Ok(rd) = std::fs::read_dir(dir) {
        for e in rd.flatten() {
            m.insert(e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap_or_default());
        }
    }
    m
}

fn rsr(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_rsr"))
        .args(args)
        .arg("--quiet")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() && out.status.code() != Some(3) {
        return Err(format!("{:?} exited {:?}: {}", args, out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn criterion11() -> Outcome {
    let tmp = match tempfile::tempdir() {
        Ok(t) => t,
        Err(e) => return outcome(11, false, format!("tempdir: {e}")),
    };
    let dd = data_dir();
    let sat = dd.join("sat_fixture.csv");
    let slo = dd.join("slovenia_fixture.csv");
    let (sat, slo) = (sat.to_string_lossy().into_owned(), slo.to_string_lossy().into_owned());
    let o = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    let chain_csv = format!("{}/chain.csv", o("fit"));
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("fit", vec!["fit", "--data", &sat, "--preset", "sat", "--model", "hh", "--q", "5", "--iters", "3000", "--save-chain"].into_iter().map(String::from).collect()),
        ("fit_poisson", vec!["fit", "--data", &slo, "--preset", "slovenia", "--family", "poisson", "--model", "rhz", "--iters", "3000"].into_iter().map(String::from).collect()),
        ("sweep", vec!["fit", "--data", &sat, "--preset", "sat", "--q-sweep", "1..3"].into_iter().map(String::from).collect()),
        ("simulate", vec!["simulate", "--study", "sim2", "--replicates", "3", "--iters", "1000"].into_iter().map(String::from).collect()),
        ("verify", vec!["verify-theorems", "--instances", "2", "--iters", "2000", "--rotations", "2", "--lemma-instances", "1", "--lemma-grid", "4", "--tail-instances", "1"].into_iter().map(String::from).collect()),
        ("overfit", vec!["overfit-demo", "--data", &sat].into_iter().map(String::from).collect()),
        ("summarize", vec!["summarize", "--chain", &chain_csv].into_iter().map(String::from).collect()),
    ];
    let mut bad = Vec::new();
    for (name, args) in &runs {
        let out = o(name);
        let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
        a.extend(["--seed", "7", "--out", &out]);
        let first = rsr(&a);
        let snap1 = snapshot(Path::new(&out));
        let second = rsr(&a);
        let snap2 = snapshot(Path::new(&out));
        // re-run from the config copy written into the output directory
        let cfg = format!("{out}/config.json");
        let sub = args[0].as_str();
        let third = rsr(&[sub, "--config", &cfg]);
        let snap3 = snapshot(Path::new(&out));
        match (first, second, third) {
            (Ok(a1), Ok(a2), Ok(a3)) => {
                if a1 != a2 || snap1 != snap2 {
                    bad.push(format!("{name}: rerun differs"));
                } else if a1 != a3 || snap1 != snap3 {
                    bad.push(format!("{name}: config round-trip differs"));
                } else if snap1.is_empty() {
                    bad.push(format!("{name}: no output"));
                }
            }
            (a, b, c) => bad.push(format!("{name}: {:?}", [a.err(), b.err(), c.err()])),
        }
    }
    outcome(
        11,
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} commands byte-identical on rerun and on re-run from the written config", runs.len())
        } else {
            bad.join("; ")
        },
    )
}

fn main() {
    // `cargo test -- --list` and similar probes
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    println!(
        "acceptance: seed {SEED}, scale {}",
        if quick() { "QUICK (RSR_ACCEPT_QUICK=1)" } else { "desk" }
    );
    let mut all: Vec<Outcome> = Vec::new();
    let emit = |v: Vec<Outcome>, all: &mut Vec<Outcome>| {
        for o in v {
            print(&o);
            all.push(o);
        }
    };
    emit(theorem_criteria(), &mut all);
    emit(vec![criterion5()], &mut all);
    emit(vec![criterion6()], &mut all);
    emit(vec![criterion7()], &mut all);
    emit(vec![criterion8()], &mut all);
    emit(vec![criterion9()], &mut all);
    emit(vec![criterion10()], &mut all);
    emit(vec![criterion11()], &mut all);
    let count = |s: Status| all.iter().filter(|o| o.status == s).count();
    println!(
        "acceptance summary: {} pass, {} fail, {} not evaluated",
        count(Status::Pass),
        count(Status::Fail),
        count(Status::NotEvaluated)
    );
    if std::env::var("RSR_ACCEPT_STRICT").is_ok_and(|v| v == "1") && count(Status::Fail) > 0 {
        std::process::exit(1);
    }
}
