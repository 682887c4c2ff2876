//! Areal adjacency graphs, the graph Laplacian and ICAR draws.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;

const US48_EDGES: &str = include_str!("../data/us48.edges");
const US48_STATES: &str = include_str!("../data/us48_states.txt");
const SURROGATE194_EDGES: &str = include_str!("../data/slovenia_surrogate.edges");

/// Binary symmetric adjacency with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyGraph {
    n: usize,
    neighbors: Vec<Vec<usize>>,
}

impl AdjacencyGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted neighbour list of vertex `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Undirected edges with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, nb) in self.neighbors.iter().enumerate() {
            out.extend(nb.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (i, nb) in self.neighbors.iter().enumerate() {
            for &j in nb {
                a[(i, j)] = 1.0;
            }
        }
        a
    }

    /// Q = diag(A 1) - A. Degrees are counted in integers before the cast, so
    /// every row of Q sums to exactly zero.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.n, self.n);
        for (i, nb) in self.neighbors.iter().enumerate() {
            q[(i, i)] = nb.len() as f64;
            for &j in nb {
                q[(i, j)] = -1.0;
            }
        }
        q
    }

    /// The 48 contiguous US states (queen contiguity), ordered by postal code.
    pub fn us48() -> Self {
        parse_edge_list(US48_EDGES, Some(48)).expect("bundled us48 graph is valid")
    }

    pub fn us48_names() -> Vec<&'static str> {
        US48_STATES.lines().filter(|l| !l.is_empty()).collect()
    }

    /// Synthetic connected planar graph on 194 vertices, standing in for the
    /// Slovenian municipality map when that is not supplied.
    pub fn surrogate194() -> Self {
        parse_edge_list(SURROGATE194_EDGES, Some(194)).expect("bundled surrogate graph is valid")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        load_graph(&edges, n).expect("path graph is valid")
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        load_graph(&edges, n).expect("complete graph is valid")
    }

    /// rows x cols rook lattice.
    pub fn lattice(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if c + 1 < cols {
                    edges.push((i, i + 1));
                }
                if r + 1 < rows {
                    edges.push((i, i + cols));
                }
            }
        }
        load_graph(&edges, rows * cols).expect("lattice is valid")
    }
}

/// Build a graph from undirected vertex pairs. Duplicates and reversed pairs
/// collapse to a single edge.
pub fn load_graph(edges: &[(usize, usize)], n: usize) -> Result<AdjacencyGraph> {
    let mut sets = vec![BTreeSet::new(); n];
    for &(i, j) in edges {
        check_edge(i, j, n, None)?;
        sets[i].insert(j);
        sets[j].insert(i);
    }
    Ok(AdjacencyGraph {
        n,
        neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
    })
}

fn check_edge(i: usize, j: usize, n: usize, line: Option<usize>) -> Result<()> {
    if i == j {
        return Err(Error::InvalidEdge {
            line,
            detail: format!("self-loop at vertex {i}"),
        });
    }
    if i >= n || j >= n {
        return Err(Error::InvalidEdge {
            line,
            detail: format!("edge ({i}, {j}) outside vertex range 0..{n}"),
        });
    }
    Ok(())
}

/// Parse the "i j" per line edge-list format. Lines starting with '#' are
/// comments. When `n` is `None` the vertex count is one more than the largest
/// index seen, unless a comment of the form `# n = 194` declares it.
pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<AdjacencyGraph> {
    let mut pairs = Vec::new();
    let mut declared = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            let c = c.trim();
            if let Some(v) = c.strip_prefix("n =").or_else(|| c.strip_prefix("n=")) {
                declared = v.trim().parse::<usize>().ok();
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize> {
            tok.ok_or_else(|| Error::Parse {
                line: Some(lineno + 1),
                msg: "expected two vertex indices".into(),
            })?
            .parse::<usize>()
            .map_err(|e| Error::Parse {
                line: Some(lineno + 1),
                msg: format!("bad vertex index: {e}"),
            })
        };
        let i = parse(it.next())?;
        let j = parse(it.next())?;
        if it.next().is_some() {
            return Err(Error::Parse {
                line: Some(lineno + 1),
                msg: "more than two fields".into(),
            });
        }
        pairs.push((i, j, lineno + 1));
    }
    let inferred = pairs.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
    let n = n.or(declared).unwrap_or(inferred);
    for &(i, j, l) in &pairs {
        check_edge(i, j, n, Some(l))?;
    }
    let edges: Vec<_> = pairs.into_iter().map(|(i, j, _)| (i, j)).collect();
    load_graph(&edges, n)
}

pub fn read_edge_list(path: impl AsRef<Path>, n: Option<usize>) -> Result<AdjacencyGraph> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text, n)
}

/// Connected components, each sorted, ordered by smallest member.
pub fn connected_components(g: &AdjacencyGraph) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.n];
    let mut comps = Vec::new();
    for start in 0..g.n {
        if seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &w in &g.neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Laplacian and its spectrum, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct LaplacianEigen {
    pub q: DMatrix<f64>,
    pub vectors: DMatrix<f64>,
    pub values: DVector<f64>,
    /// Number of eigenvalues with |λ| ≤ 1e-8 λ₁.
    pub kernel_dim: usize,
}

impl LaplacianEigen {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn is_connected(&self) -> bool {
        self.kernel_dim == 1
    }

    /// Moore-Penrose pseudo-inverse of τ Q.
    pub fn pseudo_inverse(&self, tau: f64) -> DMatrix<f64> {
        let n = self.n();
        let k = n - self.kernel_dim;
        let v = self.vectors.columns(0, k);
        let inv = DVector::from_iterator(k, self.values.iter().take(k).map(|l| 1.0 / (tau * l)));
        v * DMatrix::from_diagonal(&inv) * v.transpose()
    }
}

pub fn laplacian_eigen(g: &AdjacencyGraph) -> Result<LaplacianEigen> {
    let q = g.laplacian();
    let (values, vectors) = linalg::sym_eigen_desc(&q)?;
    let top = values.get(0).copied().unwrap_or(0.0);
    let kernel_dim = if top <= 0.0 {
        values.len()
    } else {
        values.iter().filter(|l| l.abs() <= 1e-8 * top).count()
    };
    Ok(LaplacianEigen {
        q,
        vectors,
        values,
        kernel_dim,
    })
}

/// ICAR draw δ = Σ_{i<n} v_i z_i / sqrt(τ_s λ_i) from standard normals `z`
/// (only the first n-1 entries are used).
pub fn icar_from_normals(eig: &LaplacianEigen, tau_s: f64, z: &[f64]) -> Result<DVector<f64>> {
    if !(tau_s > 0.0 && tau_s.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau_s must be positive, got {tau_s}")));
    }
    if !eig.is_connected() {
        return Err(Error::DisconnectedGraph(eig.kernel_dim));
    }
    let n = eig.n();
    if z.len() + 1 < n {
        return Err(Error::DimensionMismatch(format!(
            "need {} normals, got {}",
            n - 1,
            z.len()
        )));
    }
    let mut delta = DVector::zeros(n);
    for i in 0..n - 1 {
        let c = z[i] / (tau_s * eig.values[i]).sqrt();
        delta.axpy(c, &eig.vectors.column(i), 1.0);
    }
    Ok(delta)
}

pub fn sample_icar<R: Rng + ?Sized>(
    eig: &LaplacianEigen,
    tau_s: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let n = eig.n();
    let z: Vec<f64> = (0..n.saturating_sub(1)).map(|_| rng.sample(StandardNormal)).collect();
    icar_from_normals(eig, tau_s, &z)
}
