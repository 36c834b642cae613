//! The distributed mixed time-scale recursion, the centralized baseline, their
//! weight schedules and the admissibility checks on design parameters.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Laplacian;
use crate::linalg;
use crate::sensing::{grammian, SensingModel, StackedObservation};

/// `‖KG − GK‖_F ≤ COMMUTATOR_TOL · ‖K‖_F · ‖G‖_F` counts as commuting.
pub const COMMUTATOR_TOL: f64 = 1e-10;
/// Relative eigenvalue floor for positive definiteness of gains.
const PD_TOL: f64 = 1e-12;

/// Design tuple `(τ₁, a, τ₂, b, K)` of the distributed estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct GluParams {
    pub tau1: f64,
    pub a: f64,
    pub tau2: f64,
    pub b: f64,
    pub gain: DMatrix<f64>,
    pub epsilon1: f64,
}

impl GluParams {
    pub fn new(tau1: f64, a: f64, tau2: f64, b: f64, gain: DMatrix<f64>) -> Self {
        Self {
            tau1,
            a,
            tau2,
            b,
            gain,
            epsilon1: 1.0,
        }
    }

    /// `β(i) = b/(i+1)^τ₂`.
    pub fn consensus_weight(&self, i: u64) -> f64 {
        decay(self.b, self.tau2, i)
    }

    /// Centralized parameters with `τ_c = τ₁`, `a_c = a`, `K_c = K`.
    pub fn mirrored_central(&self) -> CentralParams {
        CentralParams::new(self.tau1, self.a, self.gain.clone())
    }
}

/// Design tuple `(τ_c, a_c, K_c)` of the centralized estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralParams {
    pub tau_c: f64,
    pub a_c: f64,
    pub gain: DMatrix<f64>,
}

impl CentralParams {
    pub fn new(tau_c: f64, a_c: f64, gain: DMatrix<f64>) -> Self {
        Self { tau_c, a_c, gain }
    }
}

/// Anything with an innovation schedule `scale/(i+1)^exponent`.
pub trait InnovationSchedule {
    fn innovation_weight(&self, i: u64) -> f64;
}

impl InnovationSchedule for GluParams {
    fn innovation_weight(&self, i: u64) -> f64 {
        decay(self.a, self.tau1, i)
    }
}

impl InnovationSchedule for CentralParams {
    fn innovation_weight(&self, i: u64) -> f64 {
        decay(self.a_c, self.tau_c, i)
    }
}

#[inline]
fn decay(scale: f64, exponent: f64, i: u64) -> f64 {
    let t = (i + 1) as f64;
    if exponent == 1.0 {
        scale / t
    } else {
        scale / t.powf(exponent)
    }
}

/// `α(i)` (or `α_c(i)`).
pub fn innovation_weight<P: InnovationSchedule + ?Sized>(p: &P, i: u64) -> f64 {
    p.innovation_weight(i)
}

/// `β(i)`.
pub fn consensus_weight(p: &GluParams, i: u64) -> f64 {
    p.consensus_weight(i)
}

/// One failed admissibility condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    ExponentOrder { tau1: f64, tau2: f64 },
    NonPositive { name: &'static str, value: f64 },
    WeightExponents { tau1: f64, bound: f64 },
    MomentMargin { assumed: f64, available: f64 },
    GoodWindow { tau_c: f64, lower: f64 },
    GainShape { expected: usize, rows: usize, cols: usize },
    GainNotPositiveDefinite,
    GainNotCommuting { residual: f64, tolerance: f64 },
    FadingExponent { gamma0: f64 },
    NotObservable { smallest_singular: f64 },
    NotMeanConnected { fiedler: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ExponentOrder { tau1, tau2 } => {
                write!(f, "weight exponents must satisfy 0 < τ₂ ≤ τ₁ ≤ 1 (τ₁ = {tau1}, τ₂ = {tau2})")
            }
            Violation::NonPositive { name, value } => write!(f, "{name} = {value} must be positive"),
            Violation::WeightExponents { tau1, bound } => write!(
                f,
                "mixed time-scale condition: τ₁ = {tau1} must exceed max(0.5 + γ₀, τ₂ + γ₀ + 1/(2+ε₁)) = {bound:.6}"
            ),
            Violation::MomentMargin { assumed, available } => write!(
                f,
                "moment margin ε₁ = {assumed} exceeds what the noise model guarantees ({available})"
            ),
            Violation::GoodWindow { tau_c, lower } => write!(
                f,
                "centralized estimator is not good: need {lower} = 0.5 + γ₀ < τ_c ≤ 1, got τ_c = {tau_c}"
            ),
            Violation::GainShape { expected, rows, cols } => {
                write!(f, "gain is {rows}x{cols}, expected {expected}x{expected}")
            }
            Violation::GainNotPositiveDefinite => write!(f, "gain must be symmetric positive definite"),
            Violation::GainNotCommuting { residual, tolerance } => write!(
                f,
                "gain does not commute with the Grammian: ‖KG − GK‖_F = {residual:.3e} > {tolerance:.3e}"
            ),
            Violation::FadingExponent { gamma0 } => {
                write!(f, "fading exponent γ₀ = {gamma0} must lie in [0, 0.5)")
            }
            Violation::NotObservable { smallest_singular } => write!(
                f,
                "Grammian is rank deficient (smallest singular value {smallest_singular:.3e})"
            ),
            Violation::NotMeanConnected { fiedler } => {
                write!(f, "mean graph is disconnected (λ₂(L̄) = {fiedler:.3e})")
            }
        }
    }
}

fn check_gain(gain: &DMatrix<f64>, g: &DMatrix<f64>, out: &mut Vec<Violation>) {
    let m = g.nrows();
    if gain.shape() != (m, m) {
        out.push(Violation::GainShape {
            expected: m,
            rows: gain.nrows(),
            cols: gain.ncols(),
        });
        return;
    }
    if !linalg::is_positive_definite(gain, PD_TOL) {
        out.push(Violation::GainNotPositiveDefinite);
    }
    let residual = (gain * g - g * gain).norm();
    let tolerance = COMMUTATOR_TOL * gain.norm() * g.norm();
    if residual > tolerance {
        out.push(Violation::GainNotCommuting { residual, tolerance });
    }
}

/// Checks `(τ₁, a, τ₂, b, K, ε₁)` against the model's `γ₀`, `ε₁` and `G`.
/// Returns every violated condition; empty means admissible.
pub fn validate_glu_params(p: &GluParams, model: &SensingModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let gamma0 = model.gamma0();
    if !(p.tau2 > 0.0 && p.tau2 <= p.tau1 && p.tau1 <= 1.0) {
        out.push(Violation::ExponentOrder {
            tau1: p.tau1,
            tau2: p.tau2,
        });
    }
    for (name, value) in [("a", p.a), ("b", p.b), ("ε₁", p.epsilon1)] {
        if !(value > 0.0) {
            out.push(Violation::NonPositive { name, value });
        }
    }
    if p.epsilon1 > model.epsilon1() {
        out.push(Violation::MomentMargin {
            assumed: p.epsilon1,
            available: model.epsilon1(),
        });
    }
    let bound = (0.5 + gamma0).max(p.tau2 + gamma0 + 1.0 / (2.0 + p.epsilon1));
    if !(p.tau1 > bound) {
        out.push(Violation::WeightExponents { tau1: p.tau1, bound });
    }
    check_gain(&p.gain, &grammian(model), &mut out);
    out
}

/// Checks that `(τ_c, a_c, K_c)` defines a good centralized estimator.
pub fn validate_central_params(p: &CentralParams, model: &SensingModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let lower = 0.5 + model.gamma0();
    if !(p.tau_c > lower && p.tau_c <= 1.0) {
        out.push(Violation::GoodWindow { tau_c: p.tau_c, lower });
    }
    if !(p.a_c > 0.0) {
        out.push(Violation::NonPositive {
            name: "a_c",
            value: p.a_c,
        });
    }
    check_gain(&p.gain, &grammian(model), &mut out);
    out
}

/// Stacked per-sensor estimates `x(i) = [x_1ᵀ … x_Nᵀ]ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub x: DVector<f64>,
    pub i: u64,
    field_dim: usize,
}

impl NetworkState {
    pub fn new(x: DVector<f64>, field_dim: usize) -> Result<Self> {
        if field_dim == 0 || !x.len().is_multiple_of(field_dim) || x.is_empty() {
            return Err(Error::Dimension(format!(
                "state of length {} is not a stack of {field_dim}-vectors",
                x.len()
            )));
        }
        Ok(Self { x, i: 0, field_dim })
    }

    pub fn zeros(n_sensors: usize, field_dim: usize) -> Self {
        Self {
            x: DVector::zeros(n_sensors * field_dim),
            i: 0,
            field_dim,
        }
    }

    /// Every sensor starts at `theta`: `1_N ⊗ θ`.
    pub fn consensus(theta: &DVector<f64>, n_sensors: usize) -> Self {
        let m = theta.len();
        Self {
            x: DVector::from_fn(n_sensors * m, |r, _| theta[r % m]),
            i: 0,
            field_dim: m,
        }
    }

    pub fn field_dim(&self) -> usize {
        self.field_dim
    }

    pub fn n_sensors(&self) -> usize {
        self.x.len() / self.field_dim
    }

    pub fn sensor(&self, n: usize) -> DVector<f64> {
        self.x.rows(n * self.field_dim, self.field_dim).into_owned()
    }

    /// `‖x(i) − 1_N ⊗ x_avg(i)‖`.
    pub fn disagreement(&self) -> f64 {
        let avg = network_average(self);
        let m = self.field_dim;
        (0..self.n_sensors())
            .map(|n| (self.x.rows(n * m, m) - &avg).norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

/// Centralized estimate `u(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralState {
    pub u: DVector<f64>,
    pub i: u64,
}

impl CentralState {
    pub fn new(u: DVector<f64>) -> Self {
        Self { u, i: 0 }
    }
}

fn check_step_dims(
    x_len: usize,
    m: usize,
    gain: &DMatrix<f64>,
    obs: &StackedObservation,
    model: &SensingModel,
) -> Result<()> {
    if m != model.field_dim() {
        return Err(Error::Dimension(format!(
            "state field dimension {m} vs model {}",
            model.field_dim()
        )));
    }
    if x_len != model.n_sensors() * m {
        return Err(Error::Dimension(format!(
            "state has length {x_len}, expected {} sensors × {m}",
            model.n_sensors()
        )));
    }
    if gain.shape() != (m, m) {
        return Err(Error::Dimension(format!("gain must be {m}x{m}")));
    }
    obs.check(model)
}

/// One distributed update, per sensor:
///
/// `x_n ← x_n − β(i) Σ_{l∈Ω_n(i)} (x_n − x_l) + α(i) K H̄_nᵀ (z_n − H̄_n x_n)`
///
/// The consensus sum is read off the sampled Laplacian as `Σ_l L_nl x_l`, so
/// weighted Laplacians (such as `L̄`) work too.
pub fn glu_step(
    state: &NetworkState,
    l: &Laplacian,
    obs: &StackedObservation,
    p: &GluParams,
    model: &SensingModel,
) -> Result<NetworkState> {
    let m = state.field_dim;
    check_step_dims(state.x.len(), m, &p.gain, obs, model)?;
    let n_sensors = model.n_sensors();
    if l.dim() != n_sensors {
        return Err(Error::Dimension(format!(
            "Laplacian is {0}x{0} for {n_sensors} sensors",
            l.dim()
        )));
    }
    let alpha = p.innovation_weight(state.i);
    let beta = p.consensus_weight(state.i);
    let lm = l.matrix();
    let x = &state.x;
    let mut next = x.clone();
    for n in 0..n_sensors {
        let mut out = next.rows_mut(n * m, m);
        // Zero row sums turn Σ_k L_nk x_k into Σ_k L_nk (x_k − x_n), which
        // vanishes exactly at consensus.
        for k in (0..n_sensors).filter(|&k| k != n) {
            let w = lm[(n, k)];
            if w != 0.0 {
                for c in 0..m {
                    out[c] -= beta * w * (x[k * m + c] - x[n * m + c]);
                }
            }
        }
        let h = &model.sensors()[n];
        let resid = &obs.per_sensor[n] - h * x.rows(n * m, m);
        let innovation = &p.gain * h.tr_mul(&resid);
        out.axpy(alpha, &innovation, 1.0);
    }
    Ok(NetworkState {
        x: next,
        i: state.i + 1,
        field_dim: m,
    })
}

/// The same update in stacked Kronecker form,
/// `x ← x − β(i)(L⊗I_M)x + α(i)(I_N⊗K) D̄_H (z − blockdiag(H̄_n) x)`.
/// Slow; kept as an independent check of [`glu_step`].
pub fn glu_step_stacked(
    state: &NetworkState,
    l: &Laplacian,
    obs: &StackedObservation,
    p: &GluParams,
    model: &SensingModel,
) -> Result<NetworkState> {
    let m = state.field_dim;
    check_step_dims(state.x.len(), m, &p.gain, obs, model)?;
    let n = model.n_sensors();
    let alpha = p.innovation_weight(state.i);
    let beta = p.consensus_weight(state.i);
    let consensus = linalg::kron(l.matrix(), &DMatrix::identity(m, m));
    let gains = linalg::kron(&DMatrix::identity(n, n), &p.gain);
    let z = obs.stacked();
    let x = &state.x;
    let innovation = gains * model.stacked_observation_transpose() * (z - model.stacked_observation() * x);
    Ok(NetworkState {
        x: x - consensus * x * beta + innovation * alpha,
        i: state.i + 1,
        field_dim: m,
    })
}

/// `u ← u + (α_c(i)/N) K_c Σ_n (H̄_nᵀ z_n − H̄_nᵀ H̄_n u)`.
pub fn centralized_step(
    state: &CentralState,
    obs: &StackedObservation,
    p: &CentralParams,
    model: &SensingModel,
) -> Result<CentralState> {
    let m = state.u.len();
    check_step_dims(model.n_sensors() * m, m, &p.gain, obs, model)?;
    let mut acc = DVector::zeros(m);
    for (h, z) in model.sensors().iter().zip(&obs.per_sensor) {
        acc += h.tr_mul(&(z - h * &state.u));
    }
    let scale = p.innovation_weight(state.i) / model.n_sensors() as f64;
    Ok(CentralState {
        u: &state.u + &p.gain * acc * scale,
        i: state.i + 1,
    })
}

/// `x_avg(i) = (1/N)(1_Nᵀ ⊗ I_M) x(i)`.
pub fn network_average(state: &NetworkState) -> DVector<f64> {
    let m = state.field_dim;
    let n = state.n_sensors();
    let mut avg = DVector::zeros(m);
    for k in 0..n {
        avg += state.x.rows(k * m, m);
    }
    avg / n as f64
}
