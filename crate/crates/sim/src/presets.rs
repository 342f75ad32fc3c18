//! Named sweep presets reproducing the reference experiments: average
//! uplink SE versus the number of APs, uplink SE distributions for short
//! and long pilots, and the downlink counterparts.

use cellfree_core::Error;

use crate::config::SimConfig;

/// One labeled run of a preset; labels become output subdirectories.
#[derive(Debug, Clone)]
pub struct PresetRun {
    pub label: String,
    pub cfg: SimConfig,
}

pub const PRESET_NAMES: [&str; 4] = ["fig1", "fig3", "fig5", "fig7"];

/// Expands a preset name into its configured runs. `setups` overrides the
/// per-run setup count, which defaults to 100.
pub fn preset_runs(name: &str, setups: Option<usize>) -> Result<Vec<PresetRun>, Error> {
    let base = |estimators: &[&str], schemes: &[&str]| {
        let mut cfg = SimConfig {
            estimators: estimators.iter().map(|s| s.to_string()).collect(),
            schemes: schemes.iter().map(|s| s.to_string()).collect(),
            ..SimConfig::default()
        };
        if let Some(n) = setups {
            cfg.num_setups = n;
        }
        cfg
    };
    let ap_sweep = |cfg_for: &dyn Fn() -> SimConfig| -> Vec<PresetRun> {
        [20usize, 40, 60, 80, 100]
            .into_iter()
            .map(|m| {
                let mut cfg = cfg_for();
                cfg.m = m;
                PresetRun {
                    label: format!("m{m:03}"),
                    cfg,
                }
            })
            .collect()
    };
    let pilot_sweep = |cfg_for: &dyn Fn() -> SimConfig| -> Vec<PresetRun> {
        [5usize, 20]
            .into_iter()
            .map(|tau_p| {
                let mut cfg = cfg_for();
                cfg.tau_p = tau_p;
                PresetRun {
                    label: format!("taup{tau_p:02}"),
                    cfg,
                }
            })
            .collect()
    };
    match name {
        // Average UL SE versus M, all estimators, both combining schemes.
        "fig1" => Ok(ap_sweep(&|| {
            base(&["mmse", "lmmse", "ls"], &["ul-single", "ul-lsfd"])
        })),
        // UL SE distribution at M=100 for short and long pilots.
        "fig3" => Ok(pilot_sweep(&|| base(&["mmse", "lmmse"], &["ul-lsfd"]))),
        // Average DL SE versus M for both transmission modes.
        "fig5" => Ok(ap_sweep(&|| {
            base(&["mmse", "lmmse"], &["dl-coherent", "dl-noncoherent"])
        })),
        // Coherent DL SE distribution for short and long pilots.
        "fig7" => Ok(pilot_sweep(&|| base(&["mmse", "lmmse"], &["dl-coherent"]))),
        other => Err(Error::InvalidConfig(format!(
            "unknown preset {other:?}; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}
