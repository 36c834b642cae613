//! Spectral graph machinery and random topology sampling.
//!
//! A [`TopologyModel`] is a distribution over Laplacians `L(i)` with a known
//! mean `L̄ = E[L(i)]`. Individual samples may be disconnected; what matters
//! for convergence is `λ₂(L̄) > 0`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// Eigenvalues within this distance of zero count as zero.
pub const ZERO_EIGEN_TOL: f64 = 1e-9;
/// `λ₂(L̄)` must exceed this for the mean graph to count as connected.
pub const CONNECTIVITY_TOL: f64 = 1e-9;

/// Undirected simple graph on vertices `0..n`.
///
/// Edges are stored normalized as `(u, v)` with `u < v`. The text format is
/// 1-indexed, see [`Graph::parse_edge_list`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from 0-indexed edges. Rejects self-loops, out-of-range
    /// endpoints and duplicate pairs (in either orientation).
    pub fn new(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::Graph("graph needs at least one vertex".into()));
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (u, v) in edges {
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::Graph(format!(
                    "edge ({}, {}) out of range for {n_vertices} vertices",
                    u + 1,
                    v + 1
                )));
            }
            if u == v {
                return Err(Error::Graph(format!("self-loop at vertex {}", u + 1)));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::Graph(format!("duplicate edge ({}, {})", e.0 + 1, e.1 + 1)));
            }
            out.push(e);
        }
        Ok(Self {
            n_vertices,
            edges: out,
        })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, [])
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|v| (v - 1, v)))
    }

    /// Cycle on `n` vertices. For `n ≤ 2` this degenerates to a path.
    pub fn ring(n: usize) -> Result<Self> {
        if n <= 2 {
            return Self::path(n);
        }
        Self::new(n, (0..n).map(|v| (v, (v + 1) % n)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    /// G(n, p): every pair independently present with probability `p`.
    pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Graph(format!("edge probability {p} outside [0, 1]")));
        }
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        Self::new(n, edges)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Neighbourhood `Ω_v`.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| match (a == v, b == v) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect()
    }

    /// Breadth-first connectivity check.
    pub fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; self.n_vertices];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n_vertices
    }

    /// Parses the plain-text edge list: first non-comment line is `N`, then one
    /// `u v` pair per line, 1-indexed. Blank lines and `#` comments are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Graph("empty edge list".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| Error::Graph(format!("bad vertex count {header:?}")))?;
        let mut edges = Vec::new();
        for (lineno, line) in lines {
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.and_then(|t| t.parse::<usize>().ok())
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| Error::Graph(format!("line {}: expected `u v`, got {line:?}", lineno + 1)))
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::Graph(format!("line {}: trailing tokens", lineno + 1)));
            }
            edges.push((u - 1, v - 1));
        }
        Self::new(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{}\n", self.n_vertices);
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "{} {}", u + 1, v + 1);
        }
        s
    }
}

/// Symmetric, zero row-sum, PSD matrix with non-positive off-diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian(DMatrix<f64>);

impl Laplacian {
    /// Validates the Laplacian invariants on an arbitrary matrix.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        let tol = 1e-9 * m.amax().max(1.0);
        if !m.is_square() {
            return Err(Error::Graph("Laplacian must be square".into()));
        }
        if !linalg::is_symmetric(&m, 1e-12) {
            return Err(Error::Graph("Laplacian must be symmetric".into()));
        }
        for (r, row) in m.row_iter().enumerate() {
            if row.sum().abs() > tol {
                return Err(Error::Graph(format!("row {} does not sum to zero", r + 1)));
            }
            for (c, &v) in row.iter().enumerate() {
                if r != c && v > tol {
                    return Err(Error::Graph(format!("positive off-diagonal at ({}, {})", r + 1, c + 1)));
                }
            }
        }
        let smallest = linalg::sym_eigenvalues(&m)?[0];
        if smallest < -tol {
            return Err(Error::Graph(format!("not positive semidefinite (λ_min = {smallest:e})")));
        }
        Ok(Self(m))
    }

    /// `Σ_e w_e L_e`, valid by construction for non-negative weights.
    fn from_weighted_edges(n: usize, edges: impl IntoIterator<Item = ((usize, usize), f64)>) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for ((u, v), w) in edges {
            m[(u, u)] += w;
            m[(v, v)] += w;
            m[(u, v)] -= w;
            m[(v, u)] -= w;
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::sym_eigenvalues(&self.0)
    }
}

/// `L = D − A`.
pub fn laplacian(g: &Graph) -> Laplacian {
    Laplacian::from_weighted_edges(g.n_vertices, g.edges.iter().map(|&e| (e, 1.0)))
}

/// Algebraic connectivity `λ₂(L)`, clamped at zero. A single vertex has λ₂ = 0.
pub fn fiedler_value(l: &Laplacian) -> Result<f64> {
    if l.dim() < 2 {
        return Ok(0.0);
    }
    let vals = l.eigenvalues()?;
    let lambda2 = vals[1];
    if lambda2 < -ZERO_EIGEN_TOL * l.0.amax().max(1.0) {
        return Err(Error::Numerical(format!("negative Laplacian eigenvalue {lambda2:e}")));
    }
    Ok(lambda2.max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopologyKind {
    Fixed(Laplacian),
    /// Each base edge kept independently with probability `p`.
    BernoulliLinkFailure { base: Graph, p: f64 },
    /// Exactly one base edge active per iteration, drawn from `weights`.
    PairwiseGossip {
        base: Graph,
        weights: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

/// Distribution over Laplacians with its mean cached at construction.
///
/// Spatially correlated failures beyond the gossip model would be a new
/// [`TopologyKind`] variant with its own closed-form mean.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyModel {
    kind: TopologyKind,
    mean: Laplacian,
}

impl TopologyModel {
    pub fn fixed(l: Laplacian) -> Self {
        Self {
            mean: l.clone(),
            kind: TopologyKind::Fixed(l),
        }
    }

    pub fn fixed_graph(g: &Graph) -> Self {
        Self::fixed(laplacian(g))
    }

    pub fn bernoulli(base: Graph, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Topology(format!("link success probability {p} outside (0, 1]")));
        }
        let mean = Laplacian::from_weighted_edges(base.n_vertices, base.edges.iter().map(|&e| (e, p)));
        Ok(Self {
            kind: TopologyKind::BernoulliLinkFailure { base, p },
            mean,
        })
    }

    pub fn gossip(base: Graph, weights: Vec<f64>) -> Result<Self> {
        if base.edges.is_empty() {
            return Err(Error::Topology("gossip needs at least one base edge".into()));
        }
        if weights.len() != base.edges.len() {
            return Err(Error::Topology(format!(
                "{} selection weights for {} edges",
                weights.len(),
                base.edges.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::Topology("selection weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Topology(format!("selection weights sum to {total}, not 1")));
        }
        let mut cumulative: Vec<f64> = weights
            .iter()
            .scan(0.0, |acc, &w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        let last = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        for c in &mut cumulative[last..] {
            *c = 1.0;
        }
        let mean = Laplacian::from_weighted_edges(
            base.n_vertices,
            base.edges.iter().copied().zip(weights.iter().copied()),
        );
        Ok(Self {
            kind: TopologyKind::PairwiseGossip {
                base,
                weights,
                cumulative,
            },
            mean,
        })
    }

    pub fn gossip_uniform(base: Graph) -> Result<Self> {
        let m = base.edges.len().max(1);
        Self::gossip(base, vec![1.0 / m as f64; m])
    }

    pub fn kind(&self) -> &TopologyKind {
        &self.kind
    }

    pub fn n_vertices(&self) -> usize {
        self.mean.dim()
    }

    /// Closed-form `E[L(i)]`.
    pub fn mean_laplacian(&self) -> &Laplacian {
        &self.mean
    }

    /// Draws one Laplacian `L(i)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Laplacian {
        match &self.kind {
            TopologyKind::Fixed(l) => l.clone(),
            TopologyKind::BernoulliLinkFailure { base, p } => {
                let keep = base.edges.iter().filter(|_| *p >= 1.0 || rng.random::<f64>() < *p);
                Laplacian::from_weighted_edges(base.n_vertices, keep.map(|&e| (e, 1.0)))
            }
            TopologyKind::PairwiseGossip {
                base, cumulative, ..
            } => {
                let u: f64 = rng.random();
                let k = cumulative
                    .partition_point(|&c| c <= u)
                    .min(cumulative.len() - 1);
                Laplacian::from_weighted_edges(base.n_vertices, [(base.edges[k], 1.0)])
            }
        }
    }
}

pub fn sample_topology<R: Rng + ?Sized>(model: &TopologyModel, rng: &mut R) -> Laplacian {
    model.sample(rng)
}

pub fn mean_laplacian(model: &TopologyModel) -> Laplacian {
    model.mean.clone()
}

/// `(λ₂(L̄) > CONNECTIVITY_TOL, λ₂(L̄))`. A single vertex counts as connected.
pub fn check_mean_connectivity(model: &TopologyModel) -> Result<(bool, f64)> {
    if model.n_vertices() < 2 {
        return Ok((true, 0.0));
    }
    let l2 = fiedler_value(&model.mean)?;
    Ok((l2 > CONNECTIVITY_TOL, l2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mat(n: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, v)
    }

    #[test]
    fn laplacian_examples() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        assert_eq!(laplacian(&g).matrix(), &mat(2, &[1.0, -1.0, -1.0, 1.0]));
        assert_eq!(laplacian(&Graph::empty(3).unwrap()).matrix(), &DMatrix::zeros(3, 3));
        let p3 = laplacian(&Graph::path(3).unwrap());
        assert_eq!(
            p3.matrix(),
            &mat(3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0])
        );
    }

    #[test]
    fn graph_rejects_bad_edges() {
        assert!(Graph::new(3, [(0, 0)]).is_err());
        assert!(Graph::new(3, [(0, 3)]).is_err());
        assert!(Graph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(0, []).is_err());
    }

    #[test]
    fn fiedler_examples() {
        let two_edges = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(fiedler_value(&laplacian(&two_edges)).unwrap().abs() < 1e-12);
        let k3 = fiedler_value(&laplacian(&Graph::complete(3).unwrap())).unwrap();
        assert!((k3 - 3.0).abs() < 1e-12);
        let k2 = fiedler_value(&laplacian(&Graph::path(2).unwrap())).unwrap();
        assert!((k2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sample_fixed_and_full_bernoulli() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = laplacian(&Graph::path(3).unwrap());
        let fixed = TopologyModel::fixed(l.clone());
        let bern = TopologyModel::bernoulli(Graph::complete(2).unwrap(), 1.0).unwrap();
        for _ in 0..20 {
            assert_eq!(sample_topology(&fixed, &mut rng), l);
            assert_eq!(sample_topology(&bern, &mut rng).matrix(), &mat(2, &[1.0, -1.0, -1.0, 1.0]));
        }
    }

    #[test]
    fn gossip_frequencies_on_k3() {
        let g = Graph::complete(3).unwrap();
        let model = TopologyModel::gossip_uniform(g.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 3];
        let draws = 30_000;
        for _ in 0..draws {
            let l = sample_topology(&model, &mut rng);
            let k = g
                .edges()
                .iter()
                .position(|&(u, v)| l.matrix()[(u, v)] == -1.0)
                .unwrap();
            counts[k] += 1;
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 1.0 / 3.0).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn mean_laplacian_examples() {
        let base = Graph::ring(5).unwrap();
        let bern = TopologyModel::bernoulli(base.clone(), 0.5).unwrap();
        assert_eq!(mean_laplacian(&bern).matrix(), &(laplacian(&base).into_inner() * 0.5));

        let gossip = TopologyModel::gossip_uniform(Graph::complete(3).unwrap()).unwrap();
        let expected = DMatrix::identity(3, 3) - DMatrix::from_element(3, 3, 1.0 / 3.0);
        assert!((mean_laplacian(&gossip).matrix() - &expected).amax() < 1e-15);
        assert!((fiedler_value(gossip.mean_laplacian()).unwrap() - 1.0).abs() < 1e-12);

        let l = laplacian(&Graph::path(4).unwrap());
        assert_eq!(mean_laplacian(&TopologyModel::fixed(l.clone())), l);
    }

    #[test]
    fn mean_connectivity_examples() {
        let gossip = TopologyModel::gossip_uniform(Graph::complete(3).unwrap()).unwrap();
        let (ok, l2) = check_mean_connectivity(&gossip).unwrap();
        assert!(ok && (l2 - 1.0).abs() < 1e-12);

        let split = TopologyModel::fixed_graph(&Graph::new(4, [(0, 1), (2, 3)]).unwrap());
        let (ok, l2) = check_mean_connectivity(&split).unwrap();
        assert!(!ok && l2.abs() < 1e-12);

        let bern = TopologyModel::bernoulli(Graph::path(3).unwrap(), 0.3).unwrap();
        let (ok, l2) = check_mean_connectivity(&bern).unwrap();
        assert!(ok && (l2 - 0.3).abs() < 1e-12);
    }

    #[test]
    fn invalid_models_rejected() {
        let g = Graph::complete(3).unwrap();
        assert!(TopologyModel::bernoulli(g.clone(), 0.0).is_err());
        assert!(TopologyModel::bernoulli(g.clone(), 1.5).is_err());
        assert!(TopologyModel::gossip(g.clone(), vec![0.5, 0.5]).is_err());
        assert!(TopologyModel::gossip(g.clone(), vec![0.5, 0.6, -0.1]).is_err());
        assert!(TopologyModel::gossip(g, vec![0.2, 0.2, 0.2]).is_err());
        assert!(TopologyModel::gossip_uniform(Graph::empty(3).unwrap()).is_err());
    }

    #[test]
    fn zero_weight_edges_never_drawn() {
        let g = Graph::complete(3).unwrap();
        let model = TopologyModel::gossip(g, vec![0.5, 0.5, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5_000 {
            let l = model.sample(&mut rng);
            assert_eq!(l.matrix()[(1, 2)], 0.0);
        }
    }

    #[test]
    fn laplacian_validation() {
        assert!(Laplacian::from_matrix(mat(2, &[1.0, -1.0, -1.0, 1.0])).is_ok());
        assert!(Laplacian::from_matrix(mat(2, &[1.0, 1.0, 1.0, 1.0])).is_err());
        assert!(Laplacian::from_matrix(mat(2, &[1.0, -0.5, -1.0, 1.0])).is_err());
        assert!(Laplacian::from_matrix(mat(2, &[1.0, 0.0, 0.0, 1.0])).is_err());
    }

    #[test]
    fn edge_list_text() {
        let g = Graph::parse_edge_list("# ring\n3\n1 2\n2 3\n\n3 1 # wrap\n").unwrap();
        assert_eq!(g, Graph::ring(3).unwrap());
        assert_eq!(Graph::parse_edge_list(&g.to_edge_list()).unwrap(), g);
        assert!(Graph::parse_edge_list("3\n0 1\n").is_err());
        assert!(Graph::parse_edge_list("3\n1 2 3\n").is_err());
        assert!(Graph::parse_edge_list("").is_err());
    }

    fn check_sample(l: &Laplacian, n: usize) {
        let m = l.matrix();
        assert!(linalg::is_symmetric(m, 0.0));
        for r in 0..n {
            assert!(m.row(r).sum().abs() < 1e-12);
            for c in 0..n {
                if r != c {
                    assert!(m[(r, c)] == 0.0 || m[(r, c)] == -1.0);
                }
            }
        }
        let ev = l.eigenvalues().unwrap();
        assert!(ev[0] > -1e-9 && ev[n - 1] <= n as f64 + 1e-9);
    }

    fn empirical_mean(model: &TopologyModel, draws: usize, seed: u64) -> DMatrix<f64> {
        let n = model.n_vertices();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = DMatrix::zeros(n, n);
        for _ in 0..draws {
            acc += model.sample(&mut rng).matrix();
        }
        acc / draws as f64
    }

    #[test]
    fn mean_matches_empirical_for_every_variant() {
        let base = Graph::ring(6).unwrap();
        let n = 6.0;
        let models = [
            TopologyModel::fixed_graph(&base),
            TopologyModel::bernoulli(base.clone(), 0.4).unwrap(),
            TopologyModel::gossip_uniform(base.clone()).unwrap(),
            TopologyModel::gossip(base, vec![0.1, 0.3, 0.05, 0.15, 0.2, 0.2]).unwrap(),
        ];
        for (k, m) in models.iter().enumerate() {
            let emp = empirical_mean(m, 100_000, 11 + k as u64);
            let err = (emp - m.mean_laplacian().matrix()).norm();
            assert!(err < 0.02 * n, "variant {k}: {err}");
        }
    }

    #[test]
    fn gossip_samples_have_two_unit_diagonals() {
        let model = TopologyModel::gossip_uniform(Graph::complete(5).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let l = model.sample(&mut rng);
            let diag: Vec<f64> = l.matrix().diagonal().iter().copied().filter(|&d| d != 0.0).collect();
            assert_eq!(diag, vec![1.0, 1.0]);
        }
    }

    proptest! {
        #[test]
        fn sampled_laplacians_are_valid(seed in any::<u64>(), n in 2usize..9, p in 0.05f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = Graph::erdos_renyi(n, 0.6, &mut rng).unwrap();
            let bern = TopologyModel::bernoulli(base.clone(), p).unwrap();
            check_sample(&bern.sample(&mut rng), n);
            if !base.edges().is_empty() {
                let gossip = TopologyModel::gossip_uniform(base).unwrap();
                check_sample(&gossip.sample(&mut rng), n);
            }
        }

        #[test]
        fn fiedler_invariant_under_relabeling(seed in any::<u64>(), n in 2usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Graph::erdos_renyi(n, 0.5, &mut rng).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let relabeled = Graph::new(n, g.edges().iter().map(|&(u, v)| (perm[u], perm[v]))).unwrap();
            let a = fiedler_value(&laplacian(&g)).unwrap();
            let b = fiedler_value(&laplacian(&relabeled)).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn gossip_over_connected_graph_is_mean_connected(seed in any::<u64>(), n in 2usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = loop {
                let g = Graph::erdos_renyi(n, 0.5, &mut rng).unwrap();
                if g.is_connected() { break g; }
            };
            let raw: Vec<f64> = g.edges().iter().map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let model = TopologyModel::gossip(g, raw.iter().map(|w| w / total).collect()).unwrap();
            prop_assert!(check_mean_connectivity(&model).unwrap().0);
        }
    }
}
