//! Multi-setup sweep over random network realizations.
//!
//! Each setup draws its own geometry and shadowing from a stream keyed by
//! (master seed, setup index), computes closed-form spectral efficiencies
//! for every requested estimator and scheme, and optionally appends Monte
//! Carlo validation rows. Setups run in parallel; rows are gathered and
//! sorted by (setup, ue) so the output never depends on scheduling.

use rand::RngCore;
use rayon::prelude::*;

use cellfree_core::channel::{assign_pilots, FrameConfig, PilotAssignment, PowerConfig};
use cellfree_core::downlink::{
    dl_power_allocation, dl_sinr_coherent, dl_sinr_noncoherent, DlMode,
};
use cellfree_core::geometry::{build_instance, NetworkInstance};
use cellfree_core::montecarlo::{mc_dl_sinr_direct, mc_ul_sinr_direct};
use cellfree_core::report::{Scheme, SeReport};
use cellfree_core::rng::{purpose, substream};
use cellfree_core::stats::compute_statistics;
use cellfree_core::uplink::{optimal_lsfd, single_layer_weights, ul_moments, ul_sinr, LsfdWeights};
use cellfree_core::{Error, Estimator};

use crate::config::SimConfig;

/// One per-UE result line.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub setup: usize,
    pub ue: usize,
    pub estimator: Estimator,
    pub scheme: Scheme,
    /// True for Monte Carlo validation rows, which aggregates skip.
    pub mc: bool,
    pub sinr: f64,
    pub se: f64,
}

impl ResultRow {
    /// Scheme column value; oracle rows carry a "+mc" suffix.
    pub fn scheme_label(&self) -> String {
        if self.mc {
            format!("{}+mc", self.scheme.label())
        } else {
            self.scheme.label().to_string()
        }
    }
}

fn estimator_index(e: Estimator) -> usize {
    Estimator::ALL.iter().position(|&x| x == e).unwrap()
}

fn scheme_index(s: Scheme) -> usize {
    Scheme::ALL.iter().position(|&x| x == s).unwrap()
}

/// All rows of a sweep plus the bandwidth they were computed under.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub bandwidth_hz: f64,
}

impl ResultTable {
    /// Closed-form SE values pooled over setups and UEs for one cell.
    pub fn pooled_se(&self, estimator: Estimator, scheme: Scheme) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| !r.mc && r.estimator == estimator && r.scheme == scheme)
            .map(|r| r.se)
            .collect()
    }

    /// Mean closed-form SE, or None when the cell has no rows.
    pub fn mean_se(&self, estimator: Estimator, scheme: Scheme) -> Option<f64> {
        let se = self.pooled_se(estimator, scheme);
        if se.is_empty() {
            None
        } else {
            Some(se.iter().sum::<f64>() / se.len() as f64)
        }
    }

    /// The empirical CDF of per-UE SE on a 1% grid: entry i is the i-th
    /// percentile (nearest rank), so the vector has 101 nondecreasing
    /// entries.
    pub fn percentile_grid(&self, estimator: Estimator, scheme: Scheme) -> Option<Vec<f64>> {
        let mut se = self.pooled_se(estimator, scheme);
        if se.is_empty() {
            return None;
        }
        se.sort_by(f64::total_cmp);
        let n = se.len();
        Some(
            (0..=100)
                .map(|i| se[(i * (n - 1) + 50) / 100])
                .collect(),
        )
    }

    /// Estimator/scheme pairs with closed-form rows, in canonical order.
    pub fn cells(&self) -> Vec<(Estimator, Scheme)> {
        let mut out = Vec::new();
        for est in Estimator::ALL {
            for scheme in Scheme::ALL {
                if self
                    .rows
                    .iter()
                    .any(|r| !r.mc && r.estimator == est && r.scheme == scheme)
                {
                    out.push((est, scheme));
                }
            }
        }
        out
    }
}

/// Runs every setup of the sweep and gathers the sorted result table.
pub fn run_sweep(cfg: &SimConfig) -> Result<ResultTable, Error> {
    cfg.validate()?;
    let estimators = cfg.estimator_set()?;
    let schemes = cfg.scheme_set()?;
    let area = cfg.area()?;
    let shadow = cfg.shadow()?;
    let frame = cfg.frame()?;
    let powers = cfg.power_config()?;

    let per_setup: Result<Vec<Vec<ResultRow>>, Error> = (0..cfg.num_setups)
        .into_par_iter()
        .map(|setup| {
            run_setup(cfg, setup, &estimators, &schemes, &area, &shadow, &frame, &powers)
                .map_err(|e| Error::InvalidConfig(format!("setup {setup}: {e}")))
        })
        .collect();
    let mut rows: Vec<ResultRow> = per_setup?.into_iter().flatten().collect();
    rows.sort_by_key(|r| {
        (
            r.setup,
            r.ue,
            estimator_index(r.estimator),
            scheme_index(r.scheme),
            r.mc,
        )
    });
    Ok(ResultTable {
        rows,
        bandwidth_hz: cfg.bandwidth_hz,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_setup(
    cfg: &SimConfig,
    setup: usize,
    estimators: &[Estimator],
    schemes: &[Scheme],
    area: &cellfree_core::geometry::AreaSpec<f64>,
    shadow: &cellfree_core::geometry::ShadowModel<f64>,
    frame: &FrameConfig,
    powers: &PowerConfig<f64>,
) -> Result<Vec<ResultRow>, Error> {
    let mut rng = substream(cfg.master_seed, &[purpose::SETUP, setup as u64]);
    let net = build_instance(cfg.m, cfg.k, area, shadow, &mut rng)?;
    let assign = assign_pilots(&net, cfg.tau_p, &mut rng)?;
    let stats = compute_statistics(&net, &assign, powers, frame)?;

    let mut rows = Vec::new();
    for &est in estimators {
        let moments = ul_moments(est, &stats, powers, &assign, frame)?;
        for &scheme in schemes {
            let sinrs = match scheme {
                Scheme::UlSingle => (0..cfg.k)
                    .map(|ue| {
                        ul_sinr(
                            &moments,
                            ue,
                            &single_layer_weights(cfg.m),
                            powers.ul_data_power[ue],
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                Scheme::UlLsfd => (0..cfg.k)
                    .map(|ue| {
                        ul_sinr(
                            &moments,
                            ue,
                            &optimal_lsfd(&moments, ue)?,
                            powers.ul_data_power[ue],
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                Scheme::DlCoherent => {
                    let alloc =
                        dl_power_allocation(&stats, powers, frame, est, DlMode::Coherent)?;
                    dl_sinr_coherent(&moments, &alloc, powers.noise_dl)?
                }
                Scheme::DlNonCoherent => {
                    let alloc =
                        dl_power_allocation(&stats, powers, frame, est, DlMode::NonCoherent)?;
                    dl_sinr_noncoherent(&moments, &alloc, powers.noise_dl)?
                }
            };
            for (ue, &sinr) in sinrs.iter().enumerate() {
                let report = SeReport::new(est, scheme, sinr, frame);
                rows.push(ResultRow {
                    setup,
                    ue,
                    estimator: est,
                    scheme,
                    mc: false,
                    sinr,
                    se: report.se,
                });
            }
        }
        if cfg.mc_trials > 0 {
            for &scheme in schemes {
                let seed = substream(
                    cfg.master_seed,
                    &[
                        purpose::MONTE_CARLO,
                        setup as u64,
                        estimator_index(est) as u64,
                        scheme_index(scheme) as u64,
                    ],
                )
                .next_u64();
                let estimates = mc_rows(
                    cfg, &net, &assign, powers, frame, est, scheme, &moments, seed,
                )?;
                for (ue, mc_est) in estimates.into_iter().enumerate() {
                    let report = SeReport::new(est, scheme, mc_est.value, frame);
                    rows.push(ResultRow {
                        setup,
                        ue,
                        estimator: est,
                        scheme,
                        mc: true,
                        sinr: mc_est.value,
                        se: report.se,
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn mc_rows(
    cfg: &SimConfig,
    net: &NetworkInstance<f64>,
    assign: &PilotAssignment,
    powers: &PowerConfig<f64>,
    frame: &FrameConfig,
    est: Estimator,
    scheme: Scheme,
    moments: &cellfree_core::uplink::MomentSet<f64>,
    seed: u64,
) -> Result<Vec<cellfree_core::montecarlo::McEstimate<f64>>, Error> {
    match scheme {
        Scheme::UlSingle | Scheme::UlLsfd => {
            let weights: Vec<LsfdWeights<f64>> = (0..cfg.k)
                .map(|ue| {
                    if scheme == Scheme::UlLsfd {
                        optimal_lsfd(moments, ue)
                    } else {
                        Ok(single_layer_weights(cfg.m))
                    }
                })
                .collect::<Result<_, _>>()?;
            mc_ul_sinr_direct(
                net,
                assign,
                powers,
                frame,
                est,
                &weights,
                cfg.mc_trials,
                seed,
            )
        }
        Scheme::DlCoherent | Scheme::DlNonCoherent => {
            let mode = if scheme == Scheme::DlCoherent {
                DlMode::Coherent
            } else {
                DlMode::NonCoherent
            };
            mc_dl_sinr_direct(
                net,
                assign,
                powers,
                frame,
                est,
                mode,
                cfg.mc_trials,
                seed,
            )
        }
    }
}
