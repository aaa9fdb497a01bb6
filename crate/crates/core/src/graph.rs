//! Spatial and temporal graph operators.

use std::collections::{BTreeMap, VecDeque};
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::tensor::DenseTensor;

/// Undirected weighted graph without self-loops. Edges are kept as `(i, j, w)`
/// with `i < j`, sorted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGraph {
    n_nodes: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl SpatialGraph {
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(invalid("graph needs at least one node"));
        }
        let mut map = BTreeMap::new();
        for (i, j, w) in edges {
            if i == j {
                return Err(invalid(format!("self-loop at node {i}")));
            }
            if i >= n_nodes || j >= n_nodes {
                return Err(invalid(format!("edge ({i},{j}) outside 0..{n_nodes}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(invalid(format!("edge ({i},{j}) has non-positive weight {w}")));
            }
            let key = (i.min(j), i.max(j));
            if map.insert(key, w).is_some() {
                return Err(invalid(format!("duplicate edge ({},{})", key.0, key.1)));
            }
        }
        Ok(Self {
            n_nodes,
            edges: map.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
        })
    }

    /// Graph with no edges.
    pub fn empty(n_nodes: usize) -> Result<Self> {
        Self::new(n_nodes, std::iter::empty())
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for &(i, j, _) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj.iter_mut().for_each(|v| v.sort_unstable());
        adj
    }

    /// Every edge weight replaced by 1.
    pub fn binarized(&self) -> Self {
        Self {
            n_nodes: self.n_nodes,
            edges: self.edges.iter().map(|&(i, j, _)| (i, j, 1.0)).collect(),
        }
    }

    /// Parses the edge-list CSV: a `# nodes=<n>` header, then `i,j,weight`
    /// lines with 0-based indices.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut n_nodes = None;
        let mut edges = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(n) = rest.trim().strip_prefix("nodes=") {
                    n_nodes = Some(n.trim().parse::<usize>().map_err(|e| {
                        Error::Format(format!("line {}: bad node count: {e}", lineno + 1))
                    })?);
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Format(format!(
                    "line {}: expected i,j,weight",
                    lineno + 1
                )));
            }
            let bad = |e: &dyn std::fmt::Display| Error::Format(format!("line {}: {e}", lineno + 1));
            let i = fields[0].parse::<usize>().map_err(|e| bad(&e))?;
            let j = fields[1].parse::<usize>().map_err(|e| bad(&e))?;
            let w = fields[2].parse::<f64>().map_err(|e| bad(&e))?;
            edges.push((i, j, w));
        }
        let n = n_nodes.ok_or_else(|| Error::Format("missing `# nodes=<n>` header".into()))?;
        Self::new(n, edges)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# nodes={}", self.n_nodes)?;
        for &(i, j, wt) in &self.edges {
            writeln!(w, "{i},{j},{wt}")?;
        }
        Ok(())
    }
}

/// Dense matrices derived from a [`SpatialGraph`].
#[derive(Clone, Debug)]
pub struct GraphOperators<T: Real> {
    pub adjacency: DMatrix<T>,
    pub degree: DVector<T>,
    pub laplacian: DMatrix<T>,
    pub normalized_laplacian: DMatrix<T>,
}

/// Builds `A`, `D`, `L = D - A` and `L_n = I - D^{-1/2} A D^{-1/2}`.
///
/// Isolated nodes get a zero entry in `D^{-1/2}`, so their row of `L_n` is the
/// identity row.
pub fn build_operators<T: Real>(g: &SpatialGraph) -> GraphOperators<T> {
    let n = g.n_nodes();
    let mut adjacency = DMatrix::zeros(n, n);
    for &(i, j, w) in g.edges() {
        adjacency[(i, j)] = T::c(w);
        adjacency[(j, i)] = T::c(w);
    }
    let degree = DVector::from_fn(n, |i, _| adjacency.row(i).sum());
    let mut laplacian = -adjacency.clone();
    for i in 0..n {
        laplacian[(i, i)] = degree[i];
    }
    let inv_sqrt = degree.map(|d| if d > T::zero() { T::one() / d.sqrt() } else { T::zero() });
    let normalized_laplacian = DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { T::one() } else { T::zero() };
        delta - adjacency[(i, j)] * (inv_sqrt[i] * inv_sqrt[j])
    });
    GraphOperators {
        adjacency,
        degree,
        laplacian,
        normalized_laplacian,
    }
}

/// Temporal difference operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOperator<T: Real> {
    pub matrix: DMatrix<T>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemporalOperator {
    /// (n-1) x n forward differences.
    #[default]
    NonCyclic,
    /// n x n `I - A_t` with a wrap-around shift.
    Cyclic,
}

/// The (n-1) x n forward-difference matrix with rows `(.., 1, -1, ..)`.
pub fn diff_operator<T: Real>(n: usize) -> Result<DiffOperator<T>> {
    if n < 2 {
        return Err(invalid("difference operator needs n >= 2"));
    }
    let mut m = DMatrix::zeros(n - 1, n);
    for r in 0..n - 1 {
        m[(r, r)] = T::one();
        m[(r, r + 1)] = -T::one();
    }
    Ok(DiffOperator { matrix: m })
}

pub fn cyclic_diff_operator<T: Real>(n: usize) -> Result<DiffOperator<T>> {
    if n < 2 {
        return Err(invalid("difference operator needs n >= 2"));
    }
    let mut m = DMatrix::zeros(n, n);
    for r in 0..n {
        m[(r, r)] += T::one();
        m[(r, (r + 1) % n)] -= T::one();
    }
    Ok(DiffOperator { matrix: m })
}

impl TemporalOperator {
    pub fn build<T: Real>(self, n: usize) -> Result<DiffOperator<T>> {
        match self {
            TemporalOperator::NonCyclic => diff_operator(n),
            TemporalOperator::Cyclic => cyclic_diff_operator(n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnOptions {
    pub k: usize,
    /// Gaussian kernel variance; `None` picks the median squared distance
    /// over the selected pairs.
    pub sigma2: Option<f64>,
    /// Replace every kernel weight by 1.
    pub binary: bool,
}

/// Gaussian-kernel k-NN graph over the rows of the mode-`mode` unfolding.
/// Two rows are joined when either is among the other's k nearest.
pub fn knn_graph<T: Real>(x: &DenseTensor<T>, mode: usize, opts: &KnnOptions) -> Result<SpatialGraph> {
    let unf = x.unfold(mode)?.matrix;
    let n = unf.nrows();
    if opts.k == 0 {
        return Err(invalid("k must be positive"));
    }
    if opts.k >= n {
        return Err(invalid(format!("k = {} must be below the mode size {n}", opts.k)));
    }
    if let Some(s) = opts.sigma2 {
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid("kernel variance must be positive"));
        }
    }
    let mut d2 = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = (unf.row(i) - unf.row(j)).norm_squared().to_f64_lossy();
            d2[i][j] = d;
            d2[j][i] = d;
        }
    }
    let mut pairs = BTreeMap::new();
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| d2[i][a].total_cmp(&d2[i][b]).then(a.cmp(&b)));
        for &j in others.iter().take(opts.k) {
            pairs.insert((i.min(j), i.max(j)), d2[i][j]);
        }
    }
    let sigma2 = match opts.sigma2 {
        Some(s) => s,
        None => {
            let mut ds: Vec<f64> = pairs.values().copied().collect();
            ds.sort_by(f64::total_cmp);
            let m = median_sorted(&ds);
            if m > 0.0 {
                m
            } else {
                1.0
            }
        }
    };
    let edges = pairs.into_iter().map(|((i, j), d)| {
        let w = if opts.binary {
            1.0
        } else {
            (-d / (2.0 * sigma2)).exp().max(f64::MIN_POSITIVE)
        };
        (i, j, w)
    });
    SpatialGraph::new(n, edges)
}

pub(crate) fn median_sorted(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// 4-connected `rows x cols` lattice with unit weights; node = row * cols + col.
pub fn grid_graph(rows: usize, cols: usize) -> Result<SpatialGraph> {
    if rows == 0 || cols == 0 {
        return Err(invalid("grid dimensions must be positive"));
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1, 1.0));
            }
            if r + 1 < rows {
                edges.push((v, v + cols, 1.0));
            }
        }
    }
    SpatialGraph::new(rows * cols, edges)
}

/// Nodes within `k` hops of `s`: `s` first, then by (hop distance, index).
pub fn k_hop_neighborhood(g: &SpatialGraph, s: usize, k: usize) -> Result<Vec<usize>> {
    let adj = g.neighbors();
    k_hop_with(&adj, s, k)
}

pub(crate) fn k_hop_with(adj: &[Vec<usize>], s: usize, k: usize) -> Result<Vec<usize>> {
    if s >= adj.len() {
        return Err(invalid(format!("node {s} outside 0..{}", adj.len())));
    }
    let mut dist = vec![usize::MAX; adj.len()];
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    let mut found = vec![(0usize, s)];
    while let Some(u) = queue.pop_front() {
        if dist[u] == k {
            continue;
        }
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                found.push((dist[v], v));
                queue.push_back(v);
            }
        }
    }
    found.sort_unstable();
    Ok(found.into_iter().map(|(_, v)| v).collect())
}
