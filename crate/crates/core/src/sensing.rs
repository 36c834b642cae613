//! Linear observation model with fading noise.
//!
//! Sensor `n` observes `z_n(i) = H̄_n θ* + γ(i) ζ_n(i)` where the stacked noise
//! `ζ(i)` is i.i.d. over time with covariance `S_ζ` (possibly correlated across
//! sensors) and `γ(i) = (i+1)^γ₀`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Relative tolerance for deciding rank of the Grammian.
pub const RANK_TOL: f64 = 1e-10;
/// Eigenvalues of `S_ζ` below `-COV_NEG_TOL` are rejected; those in `[-COV_NEG_TOL, 0]` are clamped.
pub const COV_NEG_TOL: f64 = 1e-10;

/// Shape of the standardized i.i.d. draws that `S_ζ^{1/2}` is applied to.
/// Each variant is zero-mean with unit variance and has all moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistribution {
    #[default]
    Gaussian,
    /// Uniform on `[-√3, √3]`.
    UniformScaled,
    /// Laplace with scale `1/√2`.
    LaplaceScaled,
}

impl NoiseDistribution {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            NoiseDistribution::Gaussian => StandardNormal.sample(rng),
            NoiseDistribution::UniformScaled => (2.0 * rng.random::<f64>() - 1.0) * 3f64.sqrt(),
            NoiseDistribution::LaplaceScaled => {
                // inverse CDF on (-1/2, 1/2)
                let u: f64 = rng.sample::<f64, _>(rand::distr::Open01) - 0.5;
                let mag = -(1.0 - 2.0 * u.abs()).ln();
                mag.copysign(u) * std::f64::consts::FRAC_1_SQRT_2
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum NoiseFactor {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingModel {
    field_dim: usize,
    sensors: Vec<DMatrix<f64>>,
    offsets: Vec<usize>,
    noise_cov: DMatrix<f64>,
    factor: NoiseFactor,
    gamma0: f64,
    noise_dist: NoiseDistribution,
    /// Moment margin ε₁: `E‖ζ‖^{2+ε₁} < ∞`. All supported distributions have
    /// every moment, so 1 is always safe.
    epsilon1: f64,
}

impl SensingModel {
    /// Builds a model with an admissible fading exponent `0 ≤ γ₀ < 0.5`.
    pub fn new(
        field_dim: usize,
        sensors: Vec<DMatrix<f64>>,
        noise_cov: DMatrix<f64>,
        gamma0: f64,
        noise_dist: NoiseDistribution,
    ) -> Result<Self> {
        if !(0.0..0.5).contains(&gamma0) {
            return Err(Error::Model(format!("fading exponent γ₀ = {gamma0} outside [0, 0.5)")));
        }
        Self::with_any_fading(field_dim, sensors, noise_cov, gamma0, noise_dist)
    }

    /// Like [`SensingModel::new`] but accepts any finite `γ₀ ≥ 0`, for
    /// experiments that deliberately leave the consistent regime.
    pub fn with_any_fading(
        field_dim: usize,
        sensors: Vec<DMatrix<f64>>,
        noise_cov: DMatrix<f64>,
        gamma0: f64,
        noise_dist: NoiseDistribution,
    ) -> Result<Self> {
        if field_dim == 0 {
            return Err(Error::Model("field dimension must be positive".into()));
        }
        if sensors.is_empty() {
            return Err(Error::Model("at least one sensor is required".into()));
        }
        if !(gamma0 >= 0.0 && gamma0.is_finite()) {
            return Err(Error::Model(format!("fading exponent γ₀ = {gamma0} must be finite and ≥ 0")));
        }
        let mut offsets = Vec::with_capacity(sensors.len() + 1);
        offsets.push(0);
        for (n, h) in sensors.iter().enumerate() {
            if h.ncols() != field_dim {
                return Err(Error::Model(format!(
                    "sensor {} matrix has {} columns, field dimension is {field_dim}",
                    n + 1,
                    h.ncols()
                )));
            }
            if h.nrows() == 0 {
                return Err(Error::Model(format!("sensor {} has no observation rows", n + 1)));
            }
            offsets.push(offsets[n] + h.nrows());
        }
        let total = *offsets.last().unwrap();
        if noise_cov.shape() != (total, total) {
            return Err(Error::Model(format!(
                "noise covariance is {}x{}, stacked observation length is {total}",
                noise_cov.nrows(),
                noise_cov.ncols()
            )));
        }
        if !linalg::is_symmetric(&noise_cov, 1e-12) {
            return Err(Error::Model("noise covariance must be symmetric".into()));
        }
        let factor = psd_sqrt(&noise_cov)?;
        Ok(Self {
            field_dim,
            sensors,
            offsets,
            noise_cov,
            factor,
            gamma0,
            noise_dist,
            epsilon1: 1.0,
        })
    }

    pub fn with_epsilon1(mut self, epsilon1: f64) -> Result<Self> {
        if !(epsilon1 > 0.0) {
            return Err(Error::Model(format!("moment margin ε₁ = {epsilon1} must be positive")));
        }
        self.epsilon1 = epsilon1;
        Ok(self)
    }

    pub fn field_dim(&self) -> usize {
        self.field_dim
    }

    pub fn n_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn sensors(&self) -> &[DMatrix<f64>] {
        &self.sensors
    }

    pub fn observation_dim(&self, n: usize) -> usize {
        self.sensors[n].nrows()
    }

    /// Length of the stacked observation vector `Σ M_n`.
    pub fn stacked_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn noise_cov(&self) -> &DMatrix<f64> {
        &self.noise_cov
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn gamma0_is_admissible(&self) -> bool {
        self.gamma0 < 0.5
    }

    pub fn noise_dist(&self) -> NoiseDistribution {
        self.noise_dist
    }

    pub fn epsilon1(&self) -> f64 {
        self.epsilon1
    }

    /// `S_ζ^{1/2}` as a dense matrix.
    pub fn noise_factor(&self) -> DMatrix<f64> {
        match &self.factor {
            NoiseFactor::Diagonal(d) => DMatrix::from_diagonal(d),
            NoiseFactor::Dense(f) => f.clone(),
        }
    }

    /// `D̄_H = blockdiag(H̄_1ᵀ, …, H̄_Nᵀ)`, shape `NM × ΣM_n`.
    ///
    /// The stacked recursion never defines this symbol; the block structure is
    /// the only one under which the stacked and per-sensor updates agree.
    pub fn stacked_observation_transpose(&self) -> DMatrix<f64> {
        let blocks: Vec<_> = self.sensors.iter().map(|h| h.transpose()).collect();
        linalg::block_diag(&blocks)
    }

    /// `D_H = blockdiag(H̄_1ᵀH̄_1, …, H̄_NᵀH̄_N)`, shape `NM × NM`.
    pub fn stacked_grammian_blocks(&self) -> DMatrix<f64> {
        let blocks: Vec<_> = self.sensors.iter().map(|h| h.transpose() * h).collect();
        linalg::block_diag(&blocks)
    }

    /// `D_H` mapped onto stacked observations: `blockdiag(H̄_n)`, shape `ΣM_n × NM`.
    pub fn stacked_observation(&self) -> DMatrix<f64> {
        linalg::block_diag(&self.sensors)
    }
}

fn psd_sqrt(cov: &DMatrix<f64>) -> Result<NoiseFactor> {
    let n = cov.nrows();
    let neg_tol = COV_NEG_TOL * cov.amax().max(1.0);
    let is_diag = (0..n).all(|r| (0..n).all(|c| r == c || cov[(r, c)] == 0.0));
    if is_diag {
        let d = cov.diagonal();
        if let Some(v) = d.iter().find(|&&v| v < -neg_tol) {
            return Err(Error::Model(format!("noise covariance has negative variance {v:e}")));
        }
        return Ok(NoiseFactor::Diagonal(d.map(|v| v.max(0.0).sqrt())));
    }
    let (vals, vecs) = linalg::sym_eigen(cov)?;
    if let Some(v) = vals.iter().find(|&&v| v < -neg_tol) {
        return Err(Error::Model(format!(
            "noise covariance is not positive semidefinite (eigenvalue {v:e})"
        )));
    }
    let root = vals.map(|v| v.max(0.0).sqrt());
    Ok(NoiseFactor::Dense(&vecs * DMatrix::from_diagonal(&root) * vecs.transpose()))
}

/// One round of observations, `z_n(i)` for every sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedObservation {
    pub iteration: u64,
    pub per_sensor: Vec<DVector<f64>>,
}

impl StackedObservation {
    pub fn stacked(&self) -> DVector<f64> {
        let total = self.per_sensor.iter().map(|z| z.len()).sum();
        DVector::from_iterator(total, self.per_sensor.iter().flat_map(|z| z.iter().copied()))
    }

    pub(crate) fn check(&self, model: &SensingModel) -> Result<()> {
        if self.per_sensor.len() != model.n_sensors()
            || self
                .per_sensor
                .iter()
                .zip(model.sensors())
                .any(|(z, h)| z.len() != h.nrows())
        {
            return Err(Error::Dimension("observation does not match sensing model".into()));
        }
        Ok(())
    }
}

/// `γ(i) = (i+1)^γ₀`. No range check on `γ₀`.
pub fn fading_gain(i: u64, gamma0: f64) -> f64 {
    if gamma0 == 0.0 {
        1.0
    } else {
        ((i + 1) as f64).powf(gamma0)
    }
}

/// `G = Σ H̄_nᵀ H̄_n`.
pub fn grammian(model: &SensingModel) -> DMatrix<f64> {
    let m = model.field_dim;
    model
        .sensors
        .iter()
        .fold(DMatrix::zeros(m, m), |acc, h| acc + h.transpose() * h)
}

/// Global observability: `rank(G) = M`. Returns the decision and the smallest
/// singular value of `G`.
pub fn check_global_observability(model: &SensingModel) -> (bool, f64) {
    let g = grammian(model);
    let sv = g.singular_values();
    let largest = sv.max();
    let smallest = sv.min();
    (largest > 0.0 && smallest > RANK_TOL * largest, smallest)
}

/// Draws `z(i)`: standardized i.i.d. draws are coloured by `S_ζ^{1/2}`, scaled
/// by `γ(i)` and added to the noiseless signal `H̄_n θ*`.
pub fn sample_observation<R: Rng + ?Sized>(
    model: &SensingModel,
    theta_star: &DVector<f64>,
    i: u64,
    rng: &mut R,
) -> Result<StackedObservation> {
    if theta_star.len() != model.field_dim {
        return Err(Error::Dimension(format!(
            "θ* has length {}, field dimension is {}",
            theta_star.len(),
            model.field_dim
        )));
    }
    let total = model.stacked_dim();
    let dist = model.noise_dist;
    let white = DVector::from_iterator(total, (0..total).map(|_| dist.draw(rng)));
    let noise = match &model.factor {
        NoiseFactor::Diagonal(d) => white.component_mul(d),
        NoiseFactor::Dense(f) => f * white,
    };
    let gain = fading_gain(i, model.gamma0);
    let per_sensor = model
        .sensors
        .iter()
        .enumerate()
        .map(|(n, h)| {
            let rows = model.offsets[n]..model.offsets[n + 1];
            h * theta_star + noise.rows(rows.start, rows.len()) * gain
        })
        .collect();
    Ok(StackedObservation {
        iteration: i,
        per_sensor,
    })
}

/// `‖J₁(z(i))‖`: spread of the gained local innovations `K H̄_nᵀ z_n(i)` around
/// their network average, stacked over sensors.
pub fn innovation_dispersion(
    model: &SensingModel,
    obs: &StackedObservation,
    gain: &DMatrix<f64>,
) -> Result<f64> {
    obs.check(model)?;
    let m = model.field_dim;
    if gain.shape() != (m, m) {
        return Err(Error::Dimension(format!("gain must be {m}x{m}")));
    }
    let local: Vec<DVector<f64>> = model
        .sensors
        .iter()
        .zip(&obs.per_sensor)
        .map(|(h, z)| gain * (h.transpose() * z))
        .collect();
    let avg = local.iter().fold(DVector::zeros(m), |acc, v| acc + v) / local.len() as f64;
    Ok(local.iter().map(|v| (v - &avg).norm_squared()).sum::<f64>().sqrt())
}
