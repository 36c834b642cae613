//! Closed-form and numerical analysis: the asymptotic covariance of the
//! centralized (and, by time-scale separation, distributed) estimator, the
//! optimal gain, executable oracles for the scalar recursions and the
//! quadratic-form bound used in the convergence argument, power-law rate
//! fitting, and normality diagnostics.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Laplacian;
use crate::linalg::{self, serialize_matrix};
use crate::sensing::{check_global_observability, grammian, SensingModel};

/// Fraction of a trajectory discarded as transient before rate fitting.
pub const DEFAULT_BURN_IN: f64 = 0.1;
/// Minimum number of usable points for [`rate_fit`].
pub const MIN_FIT_POINTS: usize = 8;
/// Minimum sample count for [`normality_check`].
pub const MIN_NORMALITY_SAMPLES: usize = 200;

/// Limiting covariance `S_c(K)` of `√(i+1)(u(i) − θ*)` together with the
/// matrices of the Lyapunov equation `Σ₁X + XΣ₁ᵀ + (a²/N²)S₁ = 0` it solves.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticCovariance {
    #[serde(serialize_with = "serialize_matrix")]
    pub s_c: DMatrix<f64>,
    /// `Σ₁ = −(a/N)KG + I/2`.
    #[serde(serialize_with = "serialize_matrix")]
    pub sigma1: DMatrix<f64>,
    /// `S₁ = K (Σ_{n,l} H̄_nᵀ [S_ζ]_{nl} H̄_l) Kᵀ`.
    #[serde(serialize_with = "serialize_matrix")]
    pub s1: DMatrix<f64>,
    /// `−max Re λ(Σ₁)`.
    pub hurwitz_margin: f64,
    /// Frobenius norm of the Lyapunov residual.
    pub residual: f64,
}

/// Smallest `a` for which `Σ₁` is Hurwitz: `N/(2 λ_min(KG))`.
pub fn critical_gain_scale(model: &SensingModel, gain: &DMatrix<f64>) -> Result<f64> {
    let kg = gain * grammian(model);
    let lmin = linalg::lambda_min_sym(&kg)?;
    if lmin <= 0.0 {
        return Err(Error::Contract("KG is not positive definite".into()));
    }
    Ok(model.n_sensors() as f64 / (2.0 * lmin))
}

/// `S_c(K)` for innovation scale `a` and gain `K`. Requires `γ₀ = 0`.
pub fn asymptotic_covariance(
    model: &SensingModel,
    a: f64,
    gain: &DMatrix<f64>,
) -> Result<AsymptoticCovariance> {
    if model.gamma0() != 0.0 {
        return Err(Error::Contract(format!(
            "asymptotic covariance is defined for stationary noise only (γ₀ = {})",
            model.gamma0()
        )));
    }
    let m = model.field_dim();
    if gain.shape() != (m, m) {
        return Err(Error::Dimension(format!("gain must be {m}x{m}")));
    }
    let n = model.n_sensors() as f64;
    let g = grammian(model);
    let sigma1 = -(gain * &g) * (a / n) + DMatrix::identity(m, m) * 0.5;

    let max_real = max_real_eigenvalue(&sigma1)?;
    if max_real >= 0.0 {
        return Err(Error::Stability {
            max_real,
            bound: critical_gain_scale(model, gain)?,
        });
    }

    // (1_N ⊗ I_M)ᵀ D̄_H is the horizontal concatenation [H̄_1ᵀ … H̄_Nᵀ].
    let pooled = model.stacked_observation_transpose();
    let mut h_cat = DMatrix::zeros(m, pooled.ncols());
    for k in 0..model.n_sensors() {
        h_cat += pooled.rows(k * m, m);
    }
    let s1 = linalg::symmetrize(&(gain * &h_cat * model.noise_cov() * h_cat.transpose() * gain.transpose()));
    let forcing = &s1 * (a * a / (n * n));
    let s_c = linalg::symmetrize(&solve_lyapunov(&sigma1, &forcing)?);
    let residual = (&sigma1 * &s_c + &s_c * sigma1.transpose() + &forcing).norm();
    Ok(AsymptoticCovariance {
        s_c,
        sigma1,
        s1,
        hurwitz_margin: -max_real,
        residual,
    })
}

fn max_real_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    if linalg::is_symmetric(a, 1e-12) {
        return Ok(*linalg::sym_eigenvalues(a)?.last().unwrap());
    }
    let eig = a.clone().complex_eigenvalues();
    eig.iter()
        .map(|z| z.re)
        .reduce(f64::max)
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Numerical("eigenvalue computation failed".into()))
}

/// Solves `AX + XAᵀ + C = 0` for Hurwitz `A`, i.e. `X = ∫₀^∞ e^{Av} C e^{Aᵀv} dv`.
///
/// Symmetric `A` is diagonalized and the equation solved entrywise in the
/// eigenbasis. Otherwise the integral is accumulated by doubling from a short
/// exact segment (block-matrix exponential).
pub fn solve_lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    if !a.is_square() || c.shape() != (m, m) {
        return Err(Error::Dimension("Lyapunov operands must be square and conformant".into()));
    }
    if linalg::is_symmetric(a, 1e-12) {
        let (vals, vecs) = linalg::sym_eigen(&linalg::symmetrize(a))?;
        let ct = vecs.transpose() * c * &vecs;
        let mut xt = DMatrix::zeros(m, m);
        for r in 0..m {
            for s in 0..m {
                let denom = vals[r] + vals[s];
                if denom >= 0.0 {
                    return Err(Error::Numerical("Lyapunov operator is not Hurwitz".into()));
                }
                xt[(r, s)] = -ct[(r, s)] / denom;
            }
        }
        return Ok(&vecs * xt * vecs.transpose());
    }
    lyapunov_doubling(a, c)
}

fn lyapunov_doubling(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300) * m as f64;
    let h = 0.5 / scale;
    let mut block = DMatrix::zeros(2 * m, 2 * m);
    block.view_mut((0, 0), (m, m)).copy_from(&(-a * h));
    block.view_mut((0, m), (m, m)).copy_from(&(c * h));
    block.view_mut((m, m), (m, m)).copy_from(&(a.transpose() * h));
    let f = block.exp();
    let f22 = f.view((m, m), (m, m)).into_owned();
    let f12 = f.view((0, m), (m, m)).into_owned();
    let mut x = f22.transpose() * f12;
    let mut e = f22.transpose();
    for _ in 0..200 {
        let step = &e * &x * e.transpose();
        x += &step;
        e = &e * &e;
        if !e.iter().all(|v| v.is_finite()) {
            break;
        }
        if e.norm() < 1e-18 && step.norm() <= 1e-16 * x.norm() {
            return Ok(x);
        }
    }
    Err(Error::Numerical("Lyapunov doubling did not converge (A not Hurwitz?)".into()))
}

/// `K* = G⁻¹`, the gain minimizing the asymptotic covariance.
pub fn optimal_gain(model: &SensingModel) -> Result<DMatrix<f64>> {
    let (observable, smallest) = check_global_observability(model);
    if !observable {
        return Err(Error::Observability(smallest));
    }
    let g = grammian(model);
    let chol = g
        .cholesky()
        .ok_or(Error::Observability(smallest))?;
    Ok(linalg::symmetrize(&chol.inverse()))
}

/// `scale/(i+1)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySchedule {
    pub scale: f64,
    pub exponent: f64,
}

impl DecaySchedule {
    pub fn new(scale: f64, exponent: f64) -> Self {
        Self { scale, exponent }
    }

    pub fn at(&self, i: u64) -> f64 {
        let t = (i + 1) as f64;
        if self.exponent == 1.0 {
            self.scale / t
        } else {
            self.scale / t.powf(self.exponent)
        }
    }
}

/// Contraction factor schedule for [`scalar_recursion`]. With `spread > 0`
/// each realization is `r̄(i) + spread·min(r̄(i), 1 − r̄(i))·(2U − 1)`, U
/// uniform on [0, 1): independent, mean `r̄(i)`, and inside [0, 1] whenever
/// `r̄(i)` is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionSchedule {
    pub mean: DecaySchedule,
    pub spread: f64,
}

impl ContractionSchedule {
    pub fn deterministic(scale: f64, exponent: f64) -> Self {
        Self {
            mean: DecaySchedule::new(scale, exponent),
            spread: 0.0,
        }
    }

    pub fn random(scale: f64, exponent: f64, spread: f64) -> Self {
        Self {
            mean: DecaySchedule::new(scale, exponent),
            spread,
        }
    }
}

/// Iterates `y(i+1) = (1 − r₁(i)) y(i) + r₂(i)` for `steps` steps and returns
/// `y(0..=steps)`.
pub fn scalar_recursion<R: Rng + ?Sized>(
    y0: f64,
    r1: &ContractionSchedule,
    r2: &DecaySchedule,
    steps: u64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (a1, d1) = (r1.mean.scale, r1.mean.exponent);
    let (a2, d2) = (r2.scale, r2.exponent);
    if !(y0 >= 0.0 && a1 > 0.0 && (0.0..=1.0).contains(&d1) && a2 >= 0.0 && d2 >= 0.0 && d1 < d2) {
        return Err(Error::Contract(format!(
            "scalar recursion needs y0 ≥ 0, a₁ > 0, 0 ≤ δ₁ ≤ 1, a₂ ≥ 0, δ₁ < δ₂ \
             (got y0={y0}, a₁={a1}, δ₁={d1}, a₂={a2}, δ₂={d2})"
        )));
    }
    if !(0.0..=1.0).contains(&r1.spread) {
        return Err(Error::Contract(format!("spread {} outside [0, 1]", r1.spread)));
    }
    let mut out = Vec::with_capacity(steps as usize + 1);
    let mut y = y0;
    out.push(y);
    for i in 0..steps {
        let mean = r1.mean.at(i);
        let r = if r1.spread > 0.0 {
            let u: f64 = rng.random();
            mean + r1.spread * mean.min(1.0 - mean).max(0.0) * (2.0 * u - 1.0)
        } else {
            mean
        };
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Contract(format!("r₁({i}) = {r} outside [0, 1]")));
        }
        y = (1.0 - r) * y + r2.at(i);
        out.push(y);
    }
    Ok(out)
}

/// Numerical certificate for the quadratic-form lower bound.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticFormBound {
    /// Smallest swept `ρ = β/α` with a positive definite symmetric part.
    pub threshold_ratio: f64,
    /// `λ_min` at the largest swept ratio: the constant `c₄`.
    pub c4: f64,
    /// `(ρ, λ_min)` for every swept ratio.
    pub sweep: Vec<(f64, f64)>,
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_sweep(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// 61 ratios from 1e-2 to 1e4.
pub fn default_ratio_sweep() -> Vec<f64> {
    log_sweep(1e-2, 1e4, 61)
}

/// Sweeps `ρ` and tracks `λ_min` of the symmetric part of
/// `ρ L̄⊗I_M + (I_N⊗K) D_H`, with `D_H = blockdiag(H̄_nᵀH̄_n)`.
pub fn quadratic_form_bound(
    l_bar: &Laplacian,
    model: &SensingModel,
    gain: &DMatrix<f64>,
    ratios: &[f64],
) -> Result<QuadraticFormBound> {
    let m = model.field_dim();
    let n = model.n_sensors();
    if l_bar.dim() != n || gain.shape() != (m, m) {
        return Err(Error::Dimension("Laplacian or gain does not match the sensing model".into()));
    }
    if ratios.is_empty() {
        return Err(Error::Contract("empty ratio sweep".into()));
    }
    let innovation = linalg::symmetrize(
        &(linalg::kron(&DMatrix::identity(n, n), gain) * model.stacked_grammian_blocks()),
    );
    let consensus = linalg::kron(l_bar.matrix(), &DMatrix::identity(m, m));
    let mut sorted = ratios.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sweep = Vec::with_capacity(sorted.len());
    for &rho in &sorted {
        let a = &consensus * rho + &innovation;
        let lmin = linalg::sym_eigenvalues(&a)?[0];
        sweep.push((rho, lmin));
    }
    let (rho_max, c4) = *sweep.last().unwrap();
    let tol = 1e-9 * (innovation.norm() + rho_max * consensus.norm()).max(1.0);
    let threshold = sweep.iter().find(|&&(_, l)| l > tol).map(|&(r, _)| r);
    match threshold {
        Some(threshold_ratio) if c4 > tol => Ok(QuadraticFormBound {
            threshold_ratio,
            c4,
            sweep,
        }),
        _ => Err(Error::NoPositiveRatio),
    }
}

/// Least-squares power law `value ≈ e^intercept · (i+1)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (u64, u64),
    pub points_used: usize,
    /// Points in the window discarded for being zero, negative or non-finite.
    pub dropped: usize,
}

/// Window `[⌈fraction·last⌉, last]`.
pub fn burn_in_window(last: u64, fraction: f64) -> (u64, u64) {
    ((last as f64 * fraction).ceil() as u64, last)
}

/// Fits a line to `(ln(i+1), ln value)` over points with `i` in `window`
/// (inclusive).
pub fn rate_fit(points: &[(u64, f64)], window: (u64, u64)) -> Result<RateFit> {
    if window.0 >= window.1 {
        return Err(Error::Contract(format!("empty fit window {window:?}")));
    }
    let in_window = points.iter().filter(|(i, _)| (window.0..=window.1).contains(i));
    let mut dropped = 0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(i, v) in in_window {
        if v > 0.0 && v.is_finite() {
            xs.push(((i + 1) as f64).ln());
            ys.push(v.ln());
        } else {
            dropped += 1;
        }
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} usable points in window {window:?} ({dropped} dropped), need {MIN_FIT_POINTS}",
            xs.len()
        )));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all points share one abscissa".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - exponent * x).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(RateFit {
        exponent,
        intercept,
        r_squared,
        window,
        points_used: xs.len(),
        dropped,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalityReport {
    pub samples: usize,
    /// `‖Ĉ − S_ref‖_F / ‖S_ref‖_F` (absolute when `S_ref = 0`).
    pub covariance_rel_error: f64,
    #[serde(serialize_with = "serialize_matrix")]
    pub covariance: DMatrix<f64>,
    pub mean: Vec<f64>,
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
}

impl NormalityReport {
    pub fn max_abs_skewness(&self) -> f64 {
        self.skewness.iter().fold(0.0, |a, s| a.max(s.abs()))
    }

    pub fn max_abs_excess_kurtosis(&self) -> f64 {
        self.excess_kurtosis.iter().fold(0.0, |a, s| a.max(s.abs()))
    }
}

/// Sample covariance against a reference plus marginal skewness and excess
/// kurtosis.
pub fn normality_check(samples: &[DVector<f64>], s_ref: &DMatrix<f64>) -> Result<NormalityReport> {
    if samples.len() < MIN_NORMALITY_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples, need {MIN_NORMALITY_SAMPLES}",
            samples.len()
        )));
    }
    let d = s_ref.nrows();
    if !s_ref.is_square() || samples.iter().any(|s| s.len() != d) {
        return Err(Error::Dimension("samples do not match reference covariance".into()));
    }
    let k = samples.len() as f64;
    let mean = samples.iter().fold(DVector::zeros(d), |acc, s| acc + s) / k;
    let mut cov = DMatrix::zeros(d, d);
    for s in samples {
        let e = s - &mean;
        cov += &e * e.transpose();
    }
    cov /= k - 1.0;
    let ref_norm = s_ref.norm();
    let diff = (&cov - s_ref).norm();
    let covariance_rel_error = if ref_norm > 0.0 { diff / ref_norm } else { diff };

    let mut skewness = Vec::with_capacity(d);
    let mut excess_kurtosis = Vec::with_capacity(d);
    for c in 0..d {
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for s in samples {
            let e = s[c] - mean[c];
            let e2 = e * e;
            m2 += e2;
            m3 += e2 * e;
            m4 += e2 * e2;
        }
        let (m2, m3, m4) = (m2 / k, m3 / k, m4 / k);
        if m2 > 0.0 {
            skewness.push(m3 / m2.powf(1.5));
            excess_kurtosis.push(m4 / (m2 * m2) - 3.0);
        } else {
            skewness.push(0.0);
            excess_kurtosis.push(0.0);
        }
    }
    Ok(NormalityReport {
        samples: samples.len(),
        covariance_rel_error,
        covariance: cov,
        mean: mean.iter().copied().collect(),
        skewness,
        excess_kurtosis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian, Graph};
    use crate::sensing::NoiseDistribution;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn model(m: usize, hs: Vec<DMatrix<f64>>) -> SensingModel {
        let total = hs.iter().map(|h| h.nrows()).sum();
        SensingModel::new(m, hs, DMatrix::identity(total, total), 0.0, NoiseDistribution::Gaussian).unwrap()
    }

    #[test]
    fn scalar_closed_form_covariance() {
        let m = model(1, vec![scalar(1.0), scalar(1.0)]);
        let cov = asymptotic_covariance(&m, 2.0, &scalar(0.5)).unwrap();
        assert!((cov.sigma1[(0, 0)] + 0.5).abs() < 1e-15);
        assert!((cov.s1[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((cov.s_c[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((cov.hurwitz_margin - 0.5).abs() < 1e-12);
    }

    #[test]
    fn half_identity_drift_returns_forcing() {
        let a = DMatrix::identity(3, 3) * -0.5;
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.7]);
        let x = solve_lyapunov(&a, &q).unwrap();
        assert!((x - q).amax() < 1e-14);
    }

    #[test]
    fn below_critical_scale_is_unstable() {
        let m = model(1, vec![scalar(1.0), scalar(1.0)]);
        let k = scalar(0.5);
        let bound = critical_gain_scale(&m, &k).unwrap();
        assert!((bound - 1.0).abs() < 1e-12);
        match asymptotic_covariance(&m, 0.99 * bound, &k) {
            Err(Error::Stability { bound: b, .. }) => assert!((b - bound).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fading_noise_rejected() {
        let m = SensingModel::new(1, vec![scalar(1.0)], scalar(1.0), 0.2, NoiseDistribution::Gaussian).unwrap();
        assert!(matches!(asymptotic_covariance(&m, 5.0, &scalar(1.0)), Err(Error::Contract(_))));
    }

    #[test]
    fn doubling_matches_eigen_route() {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 0.2, 0.0, 0.2, -2.0, 0.5, 0.0, 0.5, -0.7]);
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.0, 0.1, 2.0, 0.3, 0.0, 0.3, 0.5]);
        let eig = solve_lyapunov(&a, &c).unwrap();
        let dbl = lyapunov_doubling(&a, &c).unwrap();
        assert!((&eig - &dbl).norm() < 1e-10 * eig.norm());
    }

    #[test]
    fn doubling_handles_nonsymmetric_drift() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 3.0, 0.0, -2.0]);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let x = solve_lyapunov(&a, &c).unwrap();
        let residual = &a * &x + &x * a.transpose() + &c;
        assert!(residual.norm() < 1e-10 * c.norm());
        let unstable = DMatrix::from_row_slice(2, 2, &[0.5, 3.0, 0.0, -2.0]);
        assert!(solve_lyapunov(&unstable, &c).is_err());
    }

    #[test]
    fn optimal_gain_examples() {
        let diag = model(2, vec![DMatrix::from_row_slice(1, 2, &[2f64.sqrt(), 0.0]), DMatrix::from_row_slice(1, 2, &[0.0, 2.0])]);
        let k = optimal_gain(&diag).unwrap();
        assert!((k - DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.25])).amax() < 1e-12);
        let id = model(2, vec![DMatrix::identity(2, 2)]);
        assert!((optimal_gain(&id).unwrap() - DMatrix::identity(2, 2)).amax() < 1e-15);
        let pm = model(2, vec![DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DMatrix::from_row_slice(1, 2, &[1.0, -1.0])]);
        let k = optimal_gain(&pm).unwrap();
        assert!((&k - DMatrix::identity(2, 2) * 0.5).amax() < 1e-15);
        assert!((grammian(&pm) * k - DMatrix::identity(2, 2)).amax() < 1e-10);

        let blind = model(2, vec![DMatrix::from_row_slice(1, 2, &[1.0, 0.0]); 2]);
        assert!(matches!(optimal_gain(&blind), Err(Error::Observability(_))));
    }

    #[test]
    fn scalar_recursion_zero_forcing() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ys = scalar_recursion(
            0.0,
            &ContractionSchedule::deterministic(0.5, 0.5),
            &DecaySchedule::new(0.0, 1.0),
            1000,
            &mut rng,
        )
        .unwrap();
        assert!(ys.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn scalar_recursion_rate_trend() {
        // With a₁ = a₂ = 1 the quasi-stationary level is y ≈ (i+1)^{-1/2}, so
        // (i+1)^{0.4} y(i) ≈ (i+1)^{-0.1}: vanishing, but only 0.25 at 10⁶.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ys = scalar_recursion(
            1.0,
            &ContractionSchedule::deterministic(1.0, 0.5),
            &DecaySchedule::new(1.0, 1.0),
            1_000_000,
            &mut rng,
        )
        .unwrap();
        let scaled = |i: usize| ((i + 1) as f64).powf(0.4) * ys[i];
        assert!(scaled(10_000) > scaled(100_000) && scaled(100_000) > scaled(1_000_000));
        assert!((scaled(1_000_000) - 1e6f64.powf(-0.1)).abs() < 0.02);
    }

    #[test]
    fn scalar_recursion_gain_below_rate_does_not_vanish() {
        // δ₁ = 1, a₁ = 0.3 < δ₀ = 0.4: y decays like (i+1)^{-0.3}.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ys = scalar_recursion(
            1.0,
            &ContractionSchedule::deterministic(0.3, 1.0),
            &DecaySchedule::new(1.0, 1.5),
            1_000_000,
            &mut rng,
        )
        .unwrap();
        let scaled = |i: usize| ((i + 1) as f64).powf(0.4) * ys[i];
        assert!(scaled(1_000_000) > scaled(10_000));
        assert!(scaled(1_000_000) > 1.0);
    }

    #[test]
    fn scalar_recursion_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r2 = DecaySchedule::new(1.0, 1.0);
        assert!(scalar_recursion(-1.0, &ContractionSchedule::deterministic(1.0, 0.5), &r2, 10, &mut rng).is_err());
        assert!(scalar_recursion(1.0, &ContractionSchedule::deterministic(1.0, 1.0), &r2, 10, &mut rng).is_err());
        assert!(scalar_recursion(1.0, &ContractionSchedule::random(1.0, 0.5, 1.5), &r2, 10, &mut rng).is_err());
        // r̄₁(0) = 2 > 1
        let err = scalar_recursion(1.0, &ContractionSchedule::deterministic(2.0, 0.5), &r2, 10, &mut rng);
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn random_contraction_stays_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ys = scalar_recursion(
            1.0,
            &ContractionSchedule::random(1.0, 0.6, 1.0),
            &DecaySchedule::new(0.1, 1.0),
            100_000,
            &mut rng,
        )
        .unwrap();
        assert!(ys.iter().all(|y| *y >= 0.0));
        assert!(ys[100_000] < ys[1000]);
    }

    #[test]
    fn quadratic_form_single_node() {
        let m = model(2, vec![DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0])]);
        let k = optimal_gain(&m).unwrap() * 0.7;
        let l = laplacian(&Graph::empty(1).unwrap());
        let bound = quadratic_form_bound(&l, &m, &k, &default_ratio_sweep()).unwrap();
        let kg = linalg::lambda_min_sym(&(&k * grammian(&m))).unwrap();
        assert!(bound.sweep.iter().all(|&(_, l)| (l - kg).abs() < 1e-12));
        assert!((bound.c4 - kg).abs() < 1e-12);
    }

    #[test]
    fn quadratic_form_partially_observed_pair() {
        let m = model(1, vec![scalar(1.0), scalar(0.0)]);
        let l = laplacian(&Graph::path(2).unwrap());
        let bound = quadratic_form_bound(&l, &m, &scalar(1.0), &default_ratio_sweep()).unwrap();
        for &(rho, lmin) in &bound.sweep {
            let exact = (2.0 * rho + 1.0 - (4.0 * rho * rho + 1.0).sqrt()) / 2.0;
            assert!((lmin - exact).abs() < 1e-9 * (1.0 + rho), "ρ={rho}");
            assert!(lmin > 0.0);
        }
        assert!(bound.threshold_ratio < 1.0);
        assert!((bound.c4 - 0.5).abs() < 1e-3);
    }

    #[test]
    fn quadratic_form_fails_without_connectivity_or_observability() {
        let hs = vec![DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), DMatrix::from_row_slice(1, 2, &[1.0, 0.0])];
        let m = model(2, hs);
        let l = laplacian(&Graph::empty(2).unwrap());
        let err = quadratic_form_bound(&l, &m, &DMatrix::identity(2, 2), &default_ratio_sweep());
        assert!(matches!(err, Err(Error::NoPositiveRatio)));
    }

    #[test]
    fn rate_fit_exact_power_laws() {
        let pts: Vec<_> = (0..1000u64).map(|i| (i, ((i + 1) as f64).powf(-0.5))).collect();
        let fit = rate_fit(&pts, (100, 999)).unwrap();
        assert!((fit.exponent + 0.5).abs() < 1e-9);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert_eq!(fit.points_used, 900);

        let pts: Vec<_> = (0..1000u64).map(|i| (i, 3.0 * ((i + 1) as f64).powf(-1.2))).collect();
        let fit = rate_fit(&pts, burn_in_window(999, DEFAULT_BURN_IN)).unwrap();
        assert!((fit.exponent + 1.2).abs() < 1e-9);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn rate_fit_noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts: Vec<_> = (0..10_000u64)
            .map(|i| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                (i, ((i + 1) as f64).powf(-0.5) * (1.0 + 0.1 * noise))
            })
            .collect();
        let fit = rate_fit(&pts, burn_in_window(9_999, DEFAULT_BURN_IN)).unwrap();
        assert!((fit.exponent + 0.5).abs() < 0.05, "{}", fit.exponent);
    }

    #[test]
    fn rate_fit_drops_zeros_and_needs_data() {
        let mut pts: Vec<_> = (0..20u64).map(|i| (i, 1.0 / (i + 1) as f64)).collect();
        pts[5].1 = 0.0;
        pts[6].1 = f64::NAN;
        let fit = rate_fit(&pts, (0, 19)).unwrap();
        assert_eq!(fit.dropped, 2);
        assert_eq!(fit.points_used, 18);
        assert!(matches!(rate_fit(&pts[..7], (0, 6)), Err(Error::InsufficientData(_))));
        assert!(rate_fit(&pts, (5, 5)).is_err());
    }

    fn correlated_draws(s_ref: &DMatrix<f64>, n: usize, seed: u64) -> Vec<DVector<f64>> {
        let chol = s_ref.clone().cholesky().unwrap().l();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| &chol * DVector::from_fn(s_ref.nrows(), |_, _| StandardNormal.sample(&mut rng)))
            .collect()
    }

    #[test]
    fn normality_self_test() {
        let s_ref = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let samples = correlated_draws(&s_ref, 10_000, 77);
        let rep = normality_check(&samples, &s_ref).unwrap();
        assert!(rep.covariance_rel_error < 0.05);
        assert!(rep.max_abs_skewness() < 0.1);
        assert!(rep.max_abs_excess_kurtosis() < 0.2);

        let zeros = vec![DVector::zeros(2); 300];
        let rep = normality_check(&zeros, &DMatrix::identity(2, 2)).unwrap();
        assert!((rep.covariance_rel_error - 1.0).abs() < 1e-15);

        let doubled: Vec<_> = samples.iter().map(|s| s * 2.0).collect();
        let base = normality_check(&samples, &s_ref).unwrap().covariance;
        let rep = normality_check(&doubled, &base).unwrap();
        assert!((rep.covariance_rel_error - 3.0).abs() < 1e-9);

        assert!(matches!(normality_check(&samples[..199], &s_ref), Err(Error::InsufficientData(_))));
    }

    proptest! {
        #[test]
        fn rate_fit_scale_invariant(c in 1e-3f64..1e3, p in -2.0f64..0.5, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<_> = (0..200u64)
                .map(|i| (i, ((i + 1) as f64).powf(p) * rng.random_range(0.5..1.5)))
                .collect();
            let scaled: Vec<_> = pts.iter().map(|&(i, v)| (i, v * c)).collect();
            let a = rate_fit(&pts, (20, 199)).unwrap();
            let b = rate_fit(&scaled, (20, 199)).unwrap();
            prop_assert!((a.exponent - b.exponent).abs() < 1e-9);
            prop_assert!((b.intercept - a.intercept - c.ln()).abs() < 1e-9);
        }

        #[test]
        fn c4_monotone_in_ratio(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2..6);
            let g = loop {
                let g = Graph::erdos_renyi(n, 0.6, &mut rng).unwrap();
                if g.is_connected() { break g; }
            };
            let hs: Vec<_> = (0..n).map(|_| DMatrix::from_fn(1, 2, |_, _| rng.random_range(-1.0..1.0))).collect();
            let m = model(2, hs);
            prop_assume!(check_global_observability(&m).1 > 0.05);
            let k = DMatrix::identity(2, 2);
            let bound = quadratic_form_bound(&laplacian(&g), &m, &k, &default_ratio_sweep()).unwrap();
            let past: Vec<_> = bound.sweep.iter().filter(|(r, _)| *r >= bound.threshold_ratio).collect();
            for w in past.windows(2) {
                prop_assert!(w[1].1 >= w[0].1 - 1e-10);
            }
        }
    }
}
