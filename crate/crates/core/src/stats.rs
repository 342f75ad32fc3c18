//! Deterministic first- and second-order statistics of the pilot
//! observations and channel estimates.
//!
//! Everything here is a closed-form function of the large-scale coefficients
//! (h̄, β), the pilot assignment, and the powers; no randomness is involved.
//! The per-link scalars λ, λ′, c, c′ and the per-UE diagonal aggregates R,
//! R′, L, Ω, Ω′, Z are the building blocks of every spectral-efficiency
//! expression downstream, so they are computed once per network instance and
//! reused.

use crate::channel::{FrameConfig, PilotAssignment, PowerConfig};
use crate::geometry::NetworkInstance;
use crate::mat::Mat;
use crate::num::{count, Real};
use crate::{Error, Estimator};

/// Closed-form estimator statistics for one network instance.
///
/// All tables are M×K. The per-UE aggregates R, R′, L, Ω, Ω′, Z name M×M
/// diagonal matrices; column k of the corresponding table stores the
/// diagonal of the matrix for UE k.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorStatistics<T> {
    /// λ = Σ_{l∈P_k} p̂_l·τ_p·β_l + σ², the NLoS-only pilot power scale.
    pub lambda: Mat<T>,
    /// λ′ = Σ_{l∈P_k} p̂_l·τ_p·β′_l + σ², the phase-averaged pilot power scale.
    pub lambda_prime: Mat<T>,
    /// β′ = β + h̄², total per-link channel power.
    pub beta_prime: Mat<T>,
    /// Phase-aware MMSE error variance c = β − p̂·τ_p·β²/λ.
    pub c: Mat<T>,
    /// LMMSE error variance c′ = β′ − p̂·τ_p·β′²/λ′.
    pub c_prime: Mat<T>,
    /// LS error variance λ′/(p̂·τ_p) − β′ (infinite where p̂ = 0).
    pub ls_error: Mat<T>,
    /// Diagonal of R_k: the NLoS power β.
    pub r: Mat<T>,
    /// Diagonal of R′_k: the total power β′.
    pub r_prime: Mat<T>,
    /// Diagonal of L_k: the LoS power h̄².
    pub l: Mat<T>,
    /// Diagonal of Ω_k = R_k Λ_k R_k: β²/λ.
    pub omega: Mat<T>,
    /// Diagonal of Ω′_k = R′_k Λ′_k R′_k: β′²/λ′.
    pub omega_prime: Mat<T>,
    /// Diagonal of Z_k = p̂_k·τ_p·Ω_k + L_k, the MMSE estimate power.
    pub z: Mat<T>,
}

/// Computes every closed-form statistic the estimators and SE expressions
/// need for one instance under one pilot assignment.
pub fn compute_statistics<T: Real>(
    net: &NetworkInstance<T>,
    assign: &PilotAssignment,
    powers: &PowerConfig<T>,
    frame: &FrameConfig,
) -> Result<EstimatorStatistics<T>, Error> {
    let (m, k) = (net.num_aps(), net.num_ues());
    if assign.pilot_of_ue.len() != k || powers.num_ues() != k {
        return Err(Error::InvalidConfig(format!(
            "instance has K={k} UEs but assignment covers {} and powers cover {}",
            assign.pilot_of_ue.len(),
            powers.num_ues()
        )));
    }
    let tau_p = count::<T>(frame.tau_p);
    let sigma2 = powers.noise_ul;

    let beta = |i: usize, j: usize| net.nlos_var[(i, j)];
    let beta_prime_at = |i: usize, j: usize| {
        net.nlos_var[(i, j)] + net.los_mean[(i, j)] * net.los_mean[(i, j)]
    };

    let lambda = Mat::from_fn(m, k, |i, j| {
        assign.cohort[j]
            .iter()
            .map(|&l| powers.pilot_power[l] * tau_p * beta(i, l))
            .sum::<T>()
            + sigma2
    });
    let lambda_prime = Mat::from_fn(m, k, |i, j| {
        assign.cohort[j]
            .iter()
            .map(|&l| powers.pilot_power[l] * tau_p * beta_prime_at(i, l))
            .sum::<T>()
            + sigma2
    });
    let beta_prime = Mat::from_fn(m, k, beta_prime_at);

    let c = Mat::from_fn(m, k, |i, j| {
        let b = beta(i, j);
        b - powers.pilot_power[j] * tau_p * b * b / lambda[(i, j)]
    });
    let c_prime = Mat::from_fn(m, k, |i, j| {
        let b = beta_prime[(i, j)];
        b - powers.pilot_power[j] * tau_p * b * b / lambda_prime[(i, j)]
    });
    let ls_error = Mat::from_fn(m, k, |i, j| {
        if powers.pilot_power[j] > T::zero() {
            lambda_prime[(i, j)] / (powers.pilot_power[j] * tau_p) - beta_prime[(i, j)]
        } else {
            T::infinity()
        }
    });

    let r = Mat::from_fn(m, k, beta);
    let r_prime = beta_prime.clone();
    let l = Mat::from_fn(m, k, |i, j| {
        net.los_mean[(i, j)] * net.los_mean[(i, j)]
    });
    let omega = Mat::from_fn(m, k, |i, j| {
        let b = beta(i, j);
        b * b / lambda[(i, j)]
    });
    let omega_prime = Mat::from_fn(m, k, |i, j| {
        let b = beta_prime[(i, j)];
        b * b / lambda_prime[(i, j)]
    });
    let z = Mat::from_fn(m, k, |i, j| {
        powers.pilot_power[j] * tau_p * omega[(i, j)] + l[(i, j)]
    });

    Ok(EstimatorStatistics {
        lambda,
        lambda_prime,
        beta_prime,
        c,
        c_prime,
        ls_error,
        r,
        r_prime,
        l,
        omega,
        omega_prime,
        z,
    })
}

/// Average estimate power E{|ĥ_{m,k}|²} for the chosen estimator, the
/// normalizer behind precoder scaling and the UL noise term.
pub fn estimate_power<T: Real>(
    stats: &EstimatorStatistics<T>,
    powers: &PowerConfig<T>,
    frame: &FrameConfig,
    estimator: Estimator,
) -> Result<Mat<T>, Error> {
    let (m, k) = (stats.lambda.rows(), stats.lambda.cols());
    if powers.num_ues() != k {
        return Err(Error::InvalidConfig(format!(
            "statistics cover K={k} UEs but powers cover {}",
            powers.num_ues()
        )));
    }
    if estimator == Estimator::Ls {
        if let Some(j) = powers.pilot_power.iter().position(|&p| !(p > T::zero())) {
            return Err(Error::Domain(format!(
                "LS estimate power needs positive pilot power, UE {j} has none"
            )));
        }
    }
    let tau_p = count::<T>(frame.tau_p);
    Ok(Mat::from_fn(m, k, |i, j| match estimator {
        Estimator::Mmse => stats.z[(i, j)],
        Estimator::Lmmse => powers.pilot_power[j] * tau_p * stats.omega_prime[(i, j)],
        Estimator::Ls => stats.lambda_prime[(i, j)] / (powers.pilot_power[j] * tau_p),
    }))
}
