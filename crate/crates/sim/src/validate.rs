//! Desk-scale validation suite: every closed-form SINR the library can
//! produce, checked against the Monte Carlo oracle on small random
//! networks where the full moment matrices are affordable.

use cellfree_core::channel::{assign_pilots, FrameConfig, PowerConfig};
use cellfree_core::downlink::{dl_power_allocation, dl_sinr_coherent, dl_sinr_noncoherent, DlMode};
use cellfree_core::geometry::{build_instance, AreaSpec, ShadowModel};
use cellfree_core::montecarlo::{
    mc_dl_sinr_from_moments, mc_ul_moments, mc_ul_sinr, validate, ValidationCheck,
};
use cellfree_core::rng::{purpose, substream};
use rand::RngCore;
use cellfree_core::stats::{compute_statistics, estimate_power};
use cellfree_core::uplink::{optimal_lsfd, single_layer_weights, ul_moments, ul_sinr};
use cellfree_core::{Error, Estimator};

/// One labeled closed-form-versus-oracle comparison.
#[derive(Debug, Clone)]
pub struct SuiteCheck {
    pub label: String,
    pub check: ValidationCheck<f64>,
}

/// Runs the full validation suite: `instances` random desk-scale networks
/// (2 to 5 APs, 2 to 4 UEs, 1 or 2 pilots), each probing uplink SINRs under
/// both combining schemes for all three estimators, coherent downlink for
/// all three, and non-coherent downlink for the two distinct ones.
pub fn validation_suite(
    instances: usize,
    trials: usize,
    z: f64,
    master_seed: u64,
) -> Result<Vec<SuiteCheck>, Error> {
    let area = AreaSpec::<f64>::urban_square();
    let shadow = ShadowModel::urban_default();
    let mut checks = Vec::new();
    for i in 0..instances {
        let m = 2 + i % 4;
        let k = 2 + i % 3;
        let tau_p = 1 + i % 2;
        let mut rng = substream(master_seed, &[purpose::SETUP, i as u64]);
        let net = build_instance(m, k, &area, &shadow, &mut rng)?;
        let assign = assign_pilots(&net, tau_p, &mut rng)?;
        let frame = FrameConfig::split(200, tau_p)?;
        let noise = 10f64.powf((-94.0 - 30.0) / 10.0);
        let powers = PowerConfig::uniform(k, 0.2, 0.2, 0.2 * k as f64, noise, noise)?;
        let stats = compute_statistics(&net, &assign, &powers, &frame)?;
        for est in Estimator::ALL {
            let mc_seed = substream(master_seed, &[purpose::MONTE_CARLO, i as u64, est as u64])
                .next_u64();
            let closed = ul_moments(est, &stats, &powers, &assign, &frame)?;
            let moments =
                mc_ul_moments(&net, &assign, &powers, &frame, est, trials, mc_seed)?;
            let est_power = estimate_power(&stats, &powers, &frame, est)?;
            for ue in 0..k {
                for (scheme, weights) in [
                    ("ul-single", single_layer_weights(m)),
                    ("ul-lsfd", optimal_lsfd(&closed, ue)?),
                ] {
                    let closed_sinr = ul_sinr(&closed, ue, &weights, powers.ul_data_power[ue])?;
                    let mc = mc_ul_sinr(&moments, ue, &weights, &powers)?;
                    checks.push(SuiteCheck {
                        label: format!("instance {i} {} {scheme} ue {ue}", est.label()),
                        check: validate(closed_sinr, &mc, z),
                    });
                }
            }
            for mode in [DlMode::Coherent, DlMode::NonCoherent] {
                if mode == DlMode::NonCoherent && est == Estimator::Ls {
                    // Identical to LMMSE by construction; skip the duplicate.
                    continue;
                }
                let alloc = dl_power_allocation(&stats, &powers, &frame, est, mode)?;
                let closed_sinr = match mode {
                    DlMode::Coherent => dl_sinr_coherent(&closed, &alloc, powers.noise_dl)?,
                    DlMode::NonCoherent => dl_sinr_noncoherent(&closed, &alloc, powers.noise_dl)?,
                };
                let scheme = match mode {
                    DlMode::Coherent => "dl-coherent",
                    DlMode::NonCoherent => "dl-noncoherent",
                };
                for ue in 0..k {
                    let mc =
                        mc_dl_sinr_from_moments(&moments, &alloc, &est_power, powers.noise_dl, ue)?;
                    checks.push(SuiteCheck {
                        label: format!("instance {i} {} {scheme} ue {ue}", est.label()),
                        check: validate(closed_sinr[ue], &mc, z),
                    });
                }
            }
        }
    }
    Ok(checks)
}
