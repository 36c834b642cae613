use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{critical_gain_scale, optimal_gain, DEFAULT_BURN_IN};
use crate::error::{Error, Result};
use crate::estimators::{validate_central_params, validate_glu_params, CentralParams, GluParams, Violation};
use crate::graph::{check_mean_connectivity, Graph, TopologyModel};
use crate::linalg;
use crate::sensing::{check_global_observability, NoiseDistribution, SensingModel};

/// Experiment description as read from a TOML file.
///
/// ```toml
/// theta_star = [1.0, -1.0]
/// iterations = 10000
/// trials = 20
/// seed = 7
/// topology = "gossip-uniform: 4"
///
/// [sensing]
/// field_dim = 2
/// sensors = [[[1.0, 0.0]], [[0.0, 1.0]], [[1.0, 0.0]], [[0.0, 1.0]]]
/// noise_cov = "identity"
///
/// [glu]
/// tau1 = 1.0
/// tau2 = 0.1
/// a = { critical_multiple = 3.0 }
/// b = 0.5
/// gain = "optimal"
///
/// [central]
/// mirror = true
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sensing: SensingSpec,
    pub topology: TopologySpec,
    pub glu: GluSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub central: Option<CentralSpec>,
    pub theta_star: Vec<f64>,
    pub iterations: u64,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub record_every: u64,
    /// Result directory. Not part of the config hash.
    #[serde(default, skip_serializing)]
    pub outputs: Option<PathBuf>,
    #[serde(default)]
    pub allow_invalid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
}

fn default_stride() -> u64 {
    1
}

fn default_burn_in() -> f64 {
    DEFAULT_BURN_IN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingSpec {
    pub field_dim: usize,
    /// One row-major matrix per sensor.
    pub sensors: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub noise_cov: CovarianceSpec,
    #[serde(default)]
    pub gamma0: f64,
    #[serde(default)]
    pub noise_dist: NoiseDistribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon1: Option<f64>,
}

/// `"identity"`, `"diag: [..]"` or a row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovarianceSpec {
    Shorthand(String),
    Matrix(Vec<Vec<f64>>),
}

impl Default for CovarianceSpec {
    fn default() -> Self {
        CovarianceSpec::Shorthand("identity".into())
    }
}

/// Either a shorthand string (`"ring: N"`, `"complete: N"`, `"path: N"`,
/// `"gossip-uniform: N"`) or a table with a `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TopologySpec {
    Shorthand(String),
    Table(TopologyTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologyTable {
    Fixed {
        graph: GraphSpec,
    },
    Bernoulli {
        graph: GraphSpec,
        p: f64,
    },
    Gossip {
        graph: GraphSpec,
        /// Selection probability per base edge, in edge-list order. Uniform
        /// when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
}

/// Base graph: a shorthand string, an inline 1-indexed edge list, or a path
/// to an edge-list file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSpec {
    Shorthand(String),
    Edges { vertices: usize, edges: Vec<[usize; 2]> },
    File { edge_list: PathBuf },
}

/// A positive number, or a multiple of the smallest stable innovation scale
/// `N/(2 λ_min(KG))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScaleSpec {
    Value(f64),
    Critical { critical_multiple: f64 },
}

/// `"identity"`, `"optimal"` (`G⁻¹`) or a row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

impl Default for GainSpec {
    fn default() -> Self {
        GainSpec::Named("identity".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GluSpec {
    pub tau1: f64,
    pub a: ScaleSpec,
    pub tau2: f64,
    pub b: f64,
    #[serde(default)]
    pub gain: GainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon1: Option<f64>,
}

/// Either `mirror = true` (same exponent, scale and gain as the distributed
/// recursion) or explicit parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CentralSpec {
    #[serde(default)]
    pub mirror: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_c: Option<ScaleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<GainSpec>,
}

/// Initial estimates: `"zero"`, `"theta_star"`, one M-vector shared by all
/// sensors, or one M-vector per sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Named(String),
    Shared(Vec<f64>),
    PerSensor(Vec<Vec<f64>>),
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file. Relative edge-list paths are resolved against
    /// the config's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml_str(&text)?;
        if let Some(dir) = path.parent() {
            config.resolve_paths(dir);
        }
        Ok(config)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        if let TopologySpec::Table(
            TopologyTable::Fixed { graph }
            | TopologyTable::Bernoulli { graph, .. }
            | TopologyTable::Gossip { graph, .. },
        ) = &mut self.topology
        {
            if let GraphSpec::File { edge_list } = graph {
                if edge_list.is_relative() {
                    *edge_list = dir.join(&*edge_list);
                }
            }
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form, hex encoded. The output directory
    /// is excluded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// A config resolved into model objects and checked against every
/// assumption.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: SensingModel,
    pub topology: TopologyModel,
    pub glu: GluParams,
    pub central: Option<CentralParams>,
    pub theta_star: DVector<f64>,
    pub initial: DVector<f64>,
    violations: Vec<Violation>,
    hash: String,
}

impl Experiment {
    /// Builds and validates. Assumption violations are an error unless the
    /// config sets `allow_invalid`.
    pub fn from_config(config: ExperimentConfig) -> Result<Self> {
        let exp = Self::build(config)?;
        if !exp.violations.is_empty() && !exp.config.allow_invalid {
            return Err(Error::Validation(exp.violations));
        }
        Ok(exp)
    }

    /// Builds without enforcing the assumptions; they are available through
    /// [`Experiment::violations`].
    pub fn build(config: ExperimentConfig) -> Result<Self> {
        if config.iterations == 0 || config.trials == 0 || config.record_every == 0 {
            return Err(Error::Config("iterations, trials and record_every must be at least 1".into()));
        }
        if !(config.burn_in >= 0.0 && config.burn_in < 1.0) {
            return Err(Error::Config(format!("burn_in {} outside [0, 1)", config.burn_in)));
        }
        let model = build_model(&config.sensing)?;
        let topology = build_topology(&config.topology)?;
        let n = model.n_sensors();
        let m = model.field_dim();
        if topology.n_vertices() != n {
            return Err(Error::Config(format!(
                "topology has {} vertices but there are {n} sensors",
                topology.n_vertices()
            )));
        }
        if config.theta_star.len() != m {
            return Err(Error::Config(format!("theta_star has length {}, field_dim is {m}", config.theta_star.len())));
        }
        let theta_star = DVector::from_column_slice(&config.theta_star);

        let gain = build_gain(&config.glu.gain, &model)?;
        let a = resolve_scale(config.glu.a, &model, &gain)?;
        let mut glu = GluParams::new(config.glu.tau1, a, config.glu.tau2, config.glu.b, gain);
        if let Some(e) = config.glu.epsilon1 {
            glu.epsilon1 = e;
        }
        let central = match &config.central {
            None => None,
            Some(spec) if spec.mirror => {
                if spec.tau_c.is_some() || spec.a_c.is_some() || spec.gain.is_some() {
                    return Err(Error::Config("mirrored central params take no explicit fields".into()));
                }
                Some(glu.mirrored_central())
            }
            Some(spec) => {
                let (Some(tau_c), Some(a_c)) = (spec.tau_c, spec.a_c) else {
                    return Err(Error::Config("central params need tau_c and a_c, or mirror = true".into()));
                };
                let gain = build_gain(spec.gain.as_ref().unwrap_or(&GainSpec::default()), &model)?;
                let a_c = resolve_scale(a_c, &model, &gain)?;
                Some(CentralParams::new(tau_c, a_c, gain))
            }
        };
        let initial = build_initial(config.initial.as_ref(), &theta_star, n)?;

        let mut violations = Vec::new();
        if !model.gamma0_is_admissible() {
            violations.push(Violation::FadingExponent { gamma0: model.gamma0() });
        }
        let (observable, smallest_singular) = check_global_observability(&model);
        if !observable {
            violations.push(Violation::NotObservable { smallest_singular });
        }
        let (connected, fiedler) = check_mean_connectivity(&topology)?;
        if !connected {
            violations.push(Violation::NotMeanConnected { fiedler });
        }
        violations.extend(validate_glu_params(&glu, &model));
        if let Some(c) = &central {
            violations.extend(validate_central_params(c, &model));
        }
        let hash = config.hash();
        Ok(Self {
            config,
            model,
            topology,
            glu,
            central,
            theta_star,
            initial,
            violations,
            hash,
        })
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    linalg::from_rows(rows).map_err(|e| Error::Config(format!("{what}: {e}")))
}

fn build_model(spec: &SensingSpec) -> Result<SensingModel> {
    let sensors = spec
        .sensors
        .iter()
        .enumerate()
        .map(|(n, rows)| matrix(rows, &format!("sensor {}", n + 1)))
        .collect::<Result<Vec<_>>>()?;
    let total: usize = sensors.iter().map(|h| h.nrows()).sum();
    let cov = match &spec.noise_cov {
        CovarianceSpec::Matrix(rows) => matrix(rows, "noise_cov")?,
        CovarianceSpec::Shorthand(s) => parse_covariance(s, total)?,
    };
    let model = SensingModel::with_any_fading(spec.field_dim, sensors, cov, spec.gamma0, spec.noise_dist)?;
    match spec.epsilon1 {
        Some(e) => model.with_epsilon1(e),
        None => Ok(model),
    }
}

fn parse_covariance(s: &str, total: usize) -> Result<DMatrix<f64>> {
    let s = s.trim();
    if s == "identity" {
        return Ok(DMatrix::identity(total, total));
    }
    let Some(rest) = s.strip_prefix("diag:") else {
        return Err(Error::Config(format!("unknown noise_cov shorthand {s:?}")));
    };
    let values: Vec<f64> = serde_json::from_str(rest.trim())
        .map_err(|e| Error::Config(format!("noise_cov diag list: {e}")))?;
    if values.len() != total {
        return Err(Error::Config(format!(
            "noise_cov diag has {} entries, stacked observation length is {total}",
            values.len()
        )));
    }
    Ok(DMatrix::from_diagonal(&DVector::from_vec(values)))
}

fn parse_shorthand(s: &str) -> Result<(&str, usize)> {
    let (kind, n) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("expected \"kind: N\", got {s:?}")))?;
    let n = n
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad vertex count in {s:?}")))?;
    Ok((kind.trim(), n))
}

fn build_graph(spec: &GraphSpec) -> Result<Graph> {
    match spec {
        GraphSpec::Shorthand(s) => match parse_shorthand(s)? {
            ("ring", n) => Graph::ring(n),
            ("complete", n) => Graph::complete(n),
            ("path", n) => Graph::path(n),
            (kind, _) => Err(Error::Config(format!("unknown graph shorthand {kind:?}"))),
        },
        GraphSpec::Edges { vertices, edges } => {
            let zero_based = edges
                .iter()
                .map(|&[u, v]| {
                    if u == 0 || v == 0 {
                        Err(Error::Config("edge endpoints are 1-indexed".into()))
                    } else {
                        Ok((u - 1, v - 1))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Graph::new(*vertices, zero_based)
        }
        GraphSpec::File { edge_list } => {
            let text = std::fs::read_to_string(edge_list).map_err(|e| Error::io(edge_list, e))?;
            Graph::parse_edge_list(&text)
        }
    }
}

fn build_topology(spec: &TopologySpec) -> Result<TopologyModel> {
    match spec {
        TopologySpec::Shorthand(s) => match parse_shorthand(s)? {
            ("gossip-uniform", n) => TopologyModel::gossip_uniform(Graph::ring(n)?),
            _ => Ok(TopologyModel::fixed_graph(&build_graph(&GraphSpec::Shorthand(s.clone()))?)),
        },
        TopologySpec::Table(TopologyTable::Fixed { graph }) => Ok(TopologyModel::fixed_graph(&build_graph(graph)?)),
        TopologySpec::Table(TopologyTable::Bernoulli { graph, p }) => TopologyModel::bernoulli(build_graph(graph)?, *p),
        TopologySpec::Table(TopologyTable::Gossip { graph, weights }) => {
            let g = build_graph(graph)?;
            match weights {
                Some(w) => TopologyModel::gossip(g, w.clone()),
                None => TopologyModel::gossip_uniform(g),
            }
        }
    }
}

fn build_gain(spec: &GainSpec, model: &SensingModel) -> Result<DMatrix<f64>> {
    let m = model.field_dim();
    match spec {
        GainSpec::Named(s) if s == "identity" => Ok(DMatrix::identity(m, m)),
        GainSpec::Named(s) if s == "optimal" => optimal_gain(model),
        GainSpec::Named(s) => Err(Error::Config(format!("unknown gain {s:?}; use \"identity\", \"optimal\" or a matrix"))),
        GainSpec::Matrix(rows) => matrix(rows, "gain"),
    }
}

fn resolve_scale(spec: ScaleSpec, model: &SensingModel, gain: &DMatrix<f64>) -> Result<f64> {
    match spec {
        ScaleSpec::Value(v) => Ok(v),
        ScaleSpec::Critical { critical_multiple } => Ok(critical_multiple * critical_gain_scale(model, gain)?),
    }
}

fn build_initial(spec: Option<&InitialSpec>, theta_star: &DVector<f64>, n: usize) -> Result<DVector<f64>> {
    let m = theta_star.len();
    let shared = |v: &DVector<f64>| DVector::from_fn(n * m, |r, _| v[r % m]);
    match spec {
        None => Ok(DVector::zeros(n * m)),
        Some(InitialSpec::Named(s)) if s == "zero" => Ok(DVector::zeros(n * m)),
        Some(InitialSpec::Named(s)) if s == "theta_star" => Ok(shared(theta_star)),
        Some(InitialSpec::Named(s)) => Err(Error::Config(format!("unknown initial estimate {s:?}"))),
        Some(InitialSpec::Shared(v)) if v.len() == m => Ok(shared(&DVector::from_column_slice(v))),
        Some(InitialSpec::PerSensor(vs)) if vs.len() == n && vs.iter().all(|v| v.len() == m) => {
            Ok(DVector::from_iterator(n * m, vs.iter().flatten().copied()))
        }
        Some(_) => Err(Error::Config(format!("initial estimates must be one {m}-vector or {n} of them"))),
    }
}
