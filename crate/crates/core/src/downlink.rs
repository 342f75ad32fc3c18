//! Closed-form DL spectral efficiency under maximum-ratio precoding.
//!
//! Each AP precodes with its local channel estimate, normalized by the
//! average estimate power so every precoder has unit mean square. Two
//! transmission modes are evaluated: coherent, where all APs send the same
//! data symbol and the UE decodes through channel hardening, and
//! non-coherent, where each AP sends an independently encoded copy and the
//! UE strips the M streams by successive interference cancellation. The SIC
//! sum-rate telescopes into a single effective SINR that is independent of
//! the decoding order. Both modes reuse the same first/second moments of
//! ĥ_{m,l}^*·h_{m,k} as the UL analysis.

use crate::channel::{FrameConfig, PowerConfig};
use crate::mat::Mat;
use crate::num::{count, Real};
use crate::stats::{estimate_power, EstimatorStatistics};
use crate::uplink::MomentSet;
use crate::{Error, Estimator};

/// DL transmission mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlMode {
    /// All APs transmit the same symbol, combining coherently over the air.
    Coherent,
    /// Each AP transmits its own stream; the UE cancels successively.
    NonCoherent,
}

/// Per-link DL power allocation and the induced precoder scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct DlPowerAllocation<T> {
    /// Estimator whose estimate power normalizes the precoders.
    pub estimator: Estimator,
    /// Mode the `d` diagonals were assembled for.
    pub mode: DlMode,
    /// Transmit power ρ_{m,k} in Watts (M×K).
    pub rho: Mat<T>,
    /// Power fractions η_{m,k} = β′_{m,k}/Σ_l β′_{m,l} (M×K).
    pub eta: Mat<T>,
    /// Column k is the diagonal of D_k: ρ scaled by 1/E{|ĥ|²} in coherent
    /// mode, ρ itself in non-coherent mode (M×K).
    pub d: Mat<T>,
}

/// Allocates DL power proportional to channel quality:
/// ρ_{m,k} = (ρ_dl/K)·η_{m,k} with η_{m,k} = β′_{m,k}/Σ_l β′_{m,l}.
pub fn dl_power_allocation<T: Real>(
    stats: &EstimatorStatistics<T>,
    powers: &PowerConfig<T>,
    frame: &FrameConfig,
    estimator: Estimator,
    mode: DlMode,
) -> Result<DlPowerAllocation<T>, Error> {
    let (m, k) = (stats.beta_prime.rows(), stats.beta_prime.cols());
    if powers.num_ues() != k {
        return Err(Error::InvalidConfig(format!(
            "statistics cover K={k} UEs but powers cover {}",
            powers.num_ues()
        )));
    }
    let eta = Mat::from_fn(m, k, |i, j| {
        let row_total: T = (0..k).map(|l| stats.beta_prime[(i, l)]).sum();
        stats.beta_prime[(i, j)] / row_total
    });
    let share = powers.dl_total_power / count::<T>(k);
    let rho = Mat::from_fn(m, k, |i, j| share * eta[(i, j)]);
    let d = match mode {
        DlMode::NonCoherent => rho.clone(),
        DlMode::Coherent => {
            let normalizer = estimate_power(stats, powers, frame, estimator)?;
            for i in 0..m {
                for j in 0..k {
                    if !(normalizer[(i, j)] > T::zero()) {
                        return Err(Error::Degenerate(format!(
                            "estimate power vanishes on link (AP {i}, UE {j})"
                        )));
                    }
                }
            }
            Mat::from_fn(m, k, |i, j| rho[(i, j)] / normalizer[(i, j)])
        }
    };
    Ok(DlPowerAllocation {
        estimator,
        mode,
        rho,
        eta,
        d,
    })
}

fn check_pairing<T: Real>(
    moments: &MomentSet<T>,
    alloc: &DlPowerAllocation<T>,
    mode: DlMode,
) -> Result<(usize, usize), Error> {
    if alloc.mode != mode {
        return Err(Error::InvalidConfig(format!(
            "allocation was assembled for {:?} but evaluated as {mode:?}",
            alloc.mode
        )));
    }
    if alloc.estimator != moments.estimator() {
        return Err(Error::InvalidConfig(format!(
            "allocation normalized for {:?} but moments are for {:?}",
            alloc.estimator,
            moments.estimator()
        )));
    }
    let (m, k) = (moments.num_aps(), moments.num_ues());
    if alloc.rho.rows() != m || alloc.rho.cols() != k {
        return Err(Error::InvalidConfig(format!(
            "allocation is {}x{} but moments cover {m}x{k}",
            alloc.rho.rows(),
            alloc.rho.cols()
        )));
    }
    Ok((m, k))
}

/// Coherent-mode effective SINR per UE through the hardening bound:
/// γ_k = |E{g_{k,k}}|² / (Σ_l E{|g_{l,k}|²} − |E{g_{k,k}}|² + σ²_dl) with
/// g_{l,k} = Σ_m √d_{m,l}·ĥ_{m,l}^*·h_{m,k}. The l=k term cancels its own
/// mean square exactly, so the denominator is assembled without subtraction.
pub fn dl_sinr_coherent<T: Real>(
    moments: &MomentSet<T>,
    alloc: &DlPowerAllocation<T>,
    noise_dl: T,
) -> Result<Vec<T>, Error> {
    let (m, k) = check_pairing(moments, alloc, DlMode::Coherent)?;
    let sqrt_d = Mat::from_fn(m, k, |i, j| alloc.d[(i, j)].sqrt());
    let mut out = Vec::with_capacity(k);
    for ue in 0..k {
        let num: T = (0..m)
            .map(|i| sqrt_d[(i, ue)] * moments.b_kk(ue)[i])
            .sum();
        let mut denom = noise_dl;
        for l in 0..k {
            let excess: T = (0..m)
                .map(|i| alloc.d[(i, l)] * moments.excess(l, ue)[i])
                .sum();
            denom = denom + excess;
            if l != ue {
                let mean: T = (0..m)
                    .map(|i| sqrt_d[(i, l)] * moments.b(l, ue)[i])
                    .sum();
                denom = denom + mean * mean;
            }
        }
        if !(denom > T::zero()) || !denom.is_finite() {
            return Err(Error::Degenerate(format!(
                "coherent DL SINR denominator for UE {ue} is {denom}"
            )));
        }
        let sinr = num * num / denom;
        if !sinr.is_finite() {
            return Err(Error::Numerical(format!(
                "coherent DL SINR for UE {ue} is not finite"
            )));
        }
        out.push(sinr);
    }
    Ok(out)
}

/// Non-coherent-mode effective SINR per UE. Per-AP streams are decoded by
/// SIC; the telescoped aggregate is
/// γ_k = S_k / (Σ_l Σ_n ρ_{n,l}·E{|w̃_{n,l}^*h_{n,k}|²} − S_k + σ²_dl) with
/// S_k = Σ_n ρ_{n,k}·|E{w̃_{n,k}^*h_{n,k}}|² and unit-power precoders w̃.
/// The l=k mean squares cancel exactly and are never subtracted.
pub fn dl_sinr_noncoherent<T: Real>(
    moments: &MomentSet<T>,
    alloc: &DlPowerAllocation<T>,
    noise_dl: T,
) -> Result<Vec<T>, Error> {
    let (m, k) = check_pairing(moments, alloc, DlMode::NonCoherent)?;
    let mut out = Vec::with_capacity(k);
    for ue in 0..k {
        let g2_k = moments.gamma2(ue);
        let b_kk = moments.b_kk(ue);
        let num: T = (0..m)
            .map(|i| alloc.rho[(i, ue)] * b_kk[i] * b_kk[i] / g2_k[i])
            .sum();
        let mut denom = noise_dl;
        for l in 0..k {
            let g2_l = moments.gamma2(l);
            let (b_lk, e_lk) = (moments.b(l, ue), moments.excess(l, ue));
            for i in 0..m {
                let cross = if l == ue {
                    e_lk[i]
                } else {
                    b_lk[i] * b_lk[i] + e_lk[i]
                };
                denom = denom + alloc.rho[(i, l)] * cross / g2_l[i];
            }
        }
        if !(denom > T::zero()) || !denom.is_finite() {
            return Err(Error::Degenerate(format!(
                "non-coherent DL SINR denominator for UE {ue} is {denom}"
            )));
        }
        let sinr = num / denom;
        if !sinr.is_finite() {
            return Err(Error::Numerical(format!(
                "non-coherent DL SINR for UE {ue} is not finite"
            )));
        }
        out.push(sinr);
    }
    Ok(out)
}

/// Residual of the SIC telescoping identity: with per-AP signal terms s_m
/// over a common interference-plus-noise floor B,
/// Σ_m log2(1 + s_m/(B + Σ_{n>m} s_n)) = log2(1 + Σ_m s_m / B).
/// Returns |lhs − rhs|.
pub fn dl_sic_telescoping_check<T: Real>(signal: &[T], base: T) -> T {
    // Later-stage interference as suffix sums; subtracting stages from the
    // total instead would cancel catastrophically when base is small.
    let mut tail = T::zero();
    let mut stages = Vec::with_capacity(signal.len());
    for &s in signal.iter().rev() {
        stages.push((s, tail));
        tail = tail + s;
    }
    let total = tail;
    let mut lhs = T::zero();
    for &(s, tail) in stages.iter().rev() {
        lhs = lhs + (T::one() + s / (base + tail)).log2();
    }
    let rhs = (T::one() + total / base).log2();
    (lhs - rhs).abs()
}

/// DL SE in bit/s/Hz: (τ_d/τ_c)·log2(1+γ).
pub fn dl_se<T: Real>(sinr: T, frame: &FrameConfig) -> T {
    count::<T>(frame.tau_d) / count::<T>(frame.tau_c) * (T::one() + sinr).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{assign_pilots, PilotAssignment};
    use crate::geometry::{build_instance, AreaSpec, NetworkInstance, ShadowModel};
    use crate::rng::substream;
    use crate::stats::compute_statistics;
    use crate::uplink::ul_moments;

    fn random_setup(
        m: usize,
        k: usize,
        tau_p: usize,
        seed: u64,
    ) -> (
        PilotAssignment,
        PowerConfig<f64>,
        FrameConfig,
        EstimatorStatistics<f64>,
    ) {
        let area = AreaSpec::<f64>::urban_square();
        let model = ShadowModel::urban_default();
        let mut rng = substream(51, &[seed]);
        let net = build_instance(m, k, &area, &model, &mut rng).unwrap();
        let frame = FrameConfig::split(200, tau_p).unwrap();
        let assign = assign_pilots(&net, tau_p, &mut rng).unwrap();
        let powers =
            PowerConfig::uniform(k, 0.2, 0.2, 0.2 * k as f64, 3.98e-13, 3.98e-13).unwrap();
        let stats = compute_statistics(&net, &assign, &powers, &frame).unwrap();
        (assign, powers, frame, stats)
    }

    #[test]
    fn single_ue_takes_the_whole_share() {
        let (_, powers, frame, stats) = random_setup(4, 1, 1, 1);
        let alloc =
            dl_power_allocation(&stats, &powers, &frame, Estimator::Mmse, DlMode::NonCoherent)
                .unwrap();
        for i in 0..4 {
            assert!((alloc.eta[(i, 0)] - 1.0).abs() < 1e-15);
            assert!((alloc.rho[(i, 0)] - powers.dl_total_power).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_quality_splits_power_evenly() {
        let net = NetworkInstance::<f64>::from_coefficients(
            Mat::fill(2, 2, 0.3),
            Mat::fill(2, 2, 0.7),
        )
        .unwrap();
        let assign = PilotAssignment::from_pilots(vec![0, 1], 2).unwrap();
        let frame = FrameConfig::split(200, 2).unwrap();
        let powers = PowerConfig::uniform(2, 0.2, 0.2, 0.4, 1e-13, 1e-13).unwrap();
        let stats = compute_statistics(&net, &assign, &powers, &frame).unwrap();
        let alloc =
            dl_power_allocation(&stats, &powers, &frame, Estimator::Lmmse, DlMode::NonCoherent)
                .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((alloc.eta[(i, j)] - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn per_ap_power_stays_within_budget() {
        let (_, powers, frame, stats) = random_setup(6, 5, 2, 2);
        for est in [Estimator::Mmse, Estimator::Lmmse, Estimator::Ls] {
            for mode in [DlMode::Coherent, DlMode::NonCoherent] {
                let alloc = dl_power_allocation(&stats, &powers, &frame, est, mode).unwrap();
                for i in 0..6 {
                    let spent: f64 = (0..5).map(|j| alloc.rho[(i, j)]).sum();
                    assert!(
                        spent <= powers.dl_total_power * (1.0 + 1e-12),
                        "AP {i} spends {spent} of {}",
                        powers.dl_total_power
                    );
                    assert!((0..5).all(|j| alloc.rho[(i, j)] >= 0.0));
                }
            }
        }
    }

    #[test]
    fn coherent_normalizer_matches_estimate_power() {
        let (_, powers, frame, stats) = random_setup(3, 2, 1, 3);
        for est in [Estimator::Mmse, Estimator::Lmmse, Estimator::Ls] {
            let alloc =
                dl_power_allocation(&stats, &powers, &frame, est, DlMode::Coherent).unwrap();
            let norm = estimate_power(&stats, &powers, &frame, est).unwrap();
            for i in 0..3 {
                for j in 0..2 {
                    let expected = alloc.rho[(i, j)] / norm[(i, j)];
                    assert!((alloc.d[(i, j)] - expected).abs() <= 1e-15 * expected);
                }
            }
        }
    }

    #[test]
    fn scalar_rayleigh_coherent_reference() {
        // M=K=1, h̄=0, MMSE: numerator ρ·Z and denominator ρ·β + σ², by
        // direct substitution into the hardening bound.
        let (beta, p_hat, tau, sigma2, rho_dl) = (1.5, 0.4, 3usize, 0.2, 0.8);
        let net = NetworkInstance::from_coefficients(
            Mat::fill(1, 1, 0.0),
            Mat::fill(1, 1, beta),
        )
        .unwrap();
        let assign = PilotAssignment::from_pilots(vec![0], tau).unwrap();
        let frame = FrameConfig::split(200, tau).unwrap();
        let powers = PowerConfig::uniform(1, p_hat, 0.2, rho_dl, sigma2, sigma2).unwrap();
        let stats = compute_statistics(&net, &assign, &powers, &frame).unwrap();
        let moments = ul_moments(Estimator::Mmse, &stats, &powers, &assign, &frame).unwrap();
        let alloc =
            dl_power_allocation(&stats, &powers, &frame, Estimator::Mmse, DlMode::Coherent)
                .unwrap();
        let got = dl_sinr_coherent(&moments, &alloc, sigma2).unwrap()[0];

        let lambda = p_hat * tau as f64 * beta + sigma2;
        let z = p_hat * tau as f64 * beta * beta / lambda;
        let expected = rho_dl * z / (rho_dl * beta + sigma2);
        assert!((got - expected).abs() / expected < 1e-13, "{got} vs {expected}");
    }

    #[test]
    fn overwhelming_noise_kills_the_sinr() {
        let (assign, powers, frame, stats) = random_setup(3, 2, 1, 4);
        let moments = ul_moments(Estimator::Lmmse, &stats, &powers, &assign, &frame).unwrap();
        let alloc =
            dl_power_allocation(&stats, &powers, &frame, Estimator::Lmmse, DlMode::Coherent)
                .unwrap();
        let sinr = dl_sinr_coherent(&moments, &alloc, 1e6).unwrap();
        assert!(sinr.iter().all(|&g| g < 1e-10));
    }

    #[test]
    fn single_ap_modes_coincide() {
        let (assign, powers, frame, stats) = random_setup(1, 3, 2, 5);
        for est in [Estimator::Mmse, Estimator::Lmmse, Estimator::Ls] {
            let moments = ul_moments(est, &stats, &powers, &assign, &frame).unwrap();
            let coh = dl_power_allocation(&stats, &powers, &frame, est, DlMode::Coherent).unwrap();
            let non =
                dl_power_allocation(&stats, &powers, &frame, est, DlMode::NonCoherent).unwrap();
            let a = dl_sinr_coherent(&moments, &coh, powers.noise_dl).unwrap();
            let b = dl_sinr_noncoherent(&moments, &non, powers.noise_dl).unwrap();
            for k in 0..3 {
                let rel = (a[k] - b[k]).abs() / a[k];
                assert!(rel < 1e-12, "{est:?} UE {k}: {} vs {} (rel {rel})", a[k], b[k]);
            }
        }
    }

    #[test]
    fn noncoherent_lmmse_equals_ls() {
        for seed in 0..5u64 {
            let (assign, powers, frame, stats) = random_setup(5, 4, 2, 10 + seed);
            let lmmse = ul_moments(Estimator::Lmmse, &stats, &powers, &assign, &frame).unwrap();
            let ls = ul_moments(Estimator::Ls, &stats, &powers, &assign, &frame).unwrap();
            let alloc_lmmse =
                dl_power_allocation(&stats, &powers, &frame, Estimator::Lmmse, DlMode::NonCoherent)
                    .unwrap();
            let alloc_ls =
                dl_power_allocation(&stats, &powers, &frame, Estimator::Ls, DlMode::NonCoherent)
                    .unwrap();
            let a = dl_sinr_noncoherent(&lmmse, &alloc_lmmse, powers.noise_dl).unwrap();
            let b = dl_sinr_noncoherent(&ls, &alloc_ls, powers.noise_dl).unwrap();
            for k in 0..4 {
                let rel = (a[k] - b[k]).abs() / a[k];
                assert!(rel < 1e-12, "UE {k}: rel {rel}");
            }
        }
    }

    #[test]
    fn telescoping_identity_holds() {
        assert_eq!(dl_sic_telescoping_check(&[0.7], 0.3), 0.0);
        assert_eq!(dl_sic_telescoping_check(&[0.0; 4], 1.0), 0.0);
        // Log-uniform stage powers spanning nine decades against the base,
        // the regime where stage interference must not be formed by
        // subtraction from the total.
        let mut rng = substream(52, &[1]);
        for _ in 0..100 {
            let signal: Vec<f64> = (0..5)
                .map(|_| 10f64.powf(f64::standard_uniform(&mut rng) * 9.0 - 6.0))
                .collect();
            let base = 10f64.powf(f64::standard_uniform(&mut rng) * 9.0 - 6.0);
            let residual = dl_sic_telescoping_check(&signal, base);
            assert!(residual < 1e-10, "residual {residual}");
        }
    }

    #[test]
    fn mode_and_estimator_mismatches_are_rejected() {
        let (assign, powers, frame, stats) = random_setup(2, 2, 1, 6);
        let moments = ul_moments(Estimator::Mmse, &stats, &powers, &assign, &frame).unwrap();
        let non =
            dl_power_allocation(&stats, &powers, &frame, Estimator::Mmse, DlMode::NonCoherent)
                .unwrap();
        assert!(matches!(
            dl_sinr_coherent(&moments, &non, powers.noise_dl),
            Err(Error::InvalidConfig(_))
        ));
        let coh_ls =
            dl_power_allocation(&stats, &powers, &frame, Estimator::Ls, DlMode::Coherent).unwrap();
        assert!(matches!(
            dl_sinr_coherent(&moments, &coh_ls, powers.noise_dl),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn se_applies_the_prelog() {
        let frame = FrameConfig::split(200, 5).unwrap();
        assert_eq!(dl_se(0.0f64, &frame), 0.0);
        assert!((dl_se(1.0f64, &frame) - 0.975).abs() < 1e-15);
        let frame = FrameConfig::split(200, 20).unwrap();
        assert!((dl_se(15.0f64, &frame) - 3.6).abs() < 1e-15);
    }
}
