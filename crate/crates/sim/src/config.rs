//! Typed sweep configuration.
//!
//! The file format is flat TOML. Every field has a default matching the
//! urban reference scenario: a 1 km × 1 km wraparound square, 100 APs at
//! 12.5 m serving 40 UEs at 1.5 m, coherence blocks of 200 samples with 5
//! pilots, 200 mW per-UE transmit powers, and −94 dBm noise over 20 MHz.
//! Unknown keys are rejected so typos cannot silently fall back to
//! defaults.

use serde::Deserialize;

use cellfree_core::channel::{FrameConfig, PowerConfig};
use cellfree_core::geometry::{AreaSpec, ShadowModel};
use cellfree_core::report::Scheme;
use cellfree_core::{Error, Estimator};

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Number of access points.
    pub m: usize,
    /// Number of UEs.
    pub k: usize,
    /// Coherence block length in samples.
    pub tau_c: usize,
    /// Pilot sequence length in samples.
    pub tau_p: usize,
    /// Per-UE pilot transmit power in Watts.
    pub pilot_power_w: f64,
    /// Per-UE uplink data power in Watts.
    pub ul_power_w: f64,
    /// Downlink budget per served UE in Watts; the total is K times this.
    pub dl_power_per_ue_w: f64,
    /// Receiver noise power in dBm over the configured bandwidth.
    pub noise_dbm: f64,
    /// Bandwidth in Hz; recorded for throughput conversion, SE stays per-Hz.
    pub bandwidth_hz: f64,
    /// Side length of the square deployment area in meters.
    pub side_m: f64,
    pub ap_height_m: f64,
    pub ue_height_m: f64,
    /// Wrap distances around the square to remove boundary effects.
    pub wraparound: bool,
    /// Shadow-fading standard deviation in dB.
    pub sigma_sf_db: f64,
    /// Share of shadowing variance attributed to the AP side, in [0, 1].
    pub shadow_delta: f64,
    /// Shadowing decorrelation distance in meters.
    pub decorrelation_m: f64,
    /// Estimators to evaluate: "mmse", "lmmse", "ls".
    pub estimators: Vec<String>,
    /// Schemes to evaluate: "ul-single", "ul-lsfd", "dl-coherent",
    /// "dl-noncoherent".
    pub schemes: Vec<String>,
    /// Independent network realizations to average over.
    pub num_setups: usize,
    /// Monte Carlo trials per validation row; 0 disables oracle rows.
    pub mc_trials: usize,
    pub master_seed: u64,
    pub out_dir: String,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            m: 100,
            k: 40,
            tau_c: 200,
            tau_p: 5,
            pilot_power_w: 0.2,
            ul_power_w: 0.2,
            dl_power_per_ue_w: 0.2,
            noise_dbm: -94.0,
            bandwidth_hz: 20e6,
            side_m: 1000.0,
            ap_height_m: 12.5,
            ue_height_m: 1.5,
            wraparound: true,
            sigma_sf_db: 8.0,
            shadow_delta: 0.5,
            decorrelation_m: 100.0,
            estimators: vec!["mmse".into(), "lmmse".into(), "ls".into()],
            schemes: vec![
                "ul-single".into(),
                "ul-lsfd".into(),
                "dl-coherent".into(),
                "dl-noncoherent".into(),
            ],
            num_setups: 100,
            mc_trials: 0,
            master_seed: 1,
            out_dir: "results".into(),
        }
    }
}

/// Parses and fully validates a configuration document.
pub fn parse_config(text: &str) -> Result<SimConfig, Error> {
    let cfg: SimConfig = toml::from_str(text)
        .map_err(|e| Error::InvalidConfig(format!("config parse: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn ensure(cond: bool, key: &str, msg: &str) -> Result<(), Error> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{key}: {msg}")))
    }
}

impl SimConfig {
    /// Checks every constraint the downstream modules rely on, naming the
    /// offending key.
    pub fn validate(&self) -> Result<(), Error> {
        ensure(self.m >= 1, "m", "need at least one AP")?;
        ensure(self.k >= 1, "k", "need at least one UE")?;
        ensure(self.tau_p >= 1, "tau_p", "pilots need at least one sample")?;
        ensure(
            self.tau_p <= self.tau_c,
            "tau_p",
            "pilots cannot exceed the coherence block",
        )?;
        for (key, v) in [
            ("pilot_power_w", self.pilot_power_w),
            ("ul_power_w", self.ul_power_w),
            ("dl_power_per_ue_w", self.dl_power_per_ue_w),
        ] {
            ensure(v.is_finite() && v >= 0.0, key, "power must be finite and nonnegative")?;
        }
        ensure(self.noise_dbm.is_finite(), "noise_dbm", "must be finite")?;
        ensure(
            self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0,
            "bandwidth_hz",
            "must be positive",
        )?;
        ensure(self.side_m.is_finite() && self.side_m > 0.0, "side_m", "must be positive")?;
        ensure(self.ap_height_m >= 0.0, "ap_height_m", "must be nonnegative")?;
        ensure(self.ue_height_m >= 0.0, "ue_height_m", "must be nonnegative")?;
        ensure(self.sigma_sf_db >= 0.0, "sigma_sf_db", "must be nonnegative")?;
        ensure(
            (0.0..=1.0).contains(&self.shadow_delta),
            "shadow_delta",
            "must lie in [0, 1]",
        )?;
        ensure(
            self.decorrelation_m > 0.0,
            "decorrelation_m",
            "must be positive",
        )?;
        ensure(!self.estimators.is_empty(), "estimators", "must not be empty")?;
        ensure(!self.schemes.is_empty(), "schemes", "must not be empty")?;
        ensure(self.num_setups >= 1, "num_setups", "need at least one setup")?;
        ensure(!self.out_dir.is_empty(), "out_dir", "must not be empty")?;
        self.estimator_set()?;
        self.scheme_set()?;
        Ok(())
    }

    /// Noise power in Watts derived from the dBm figure.
    pub fn noise_w(&self) -> f64 {
        10f64.powf((self.noise_dbm - 30.0) / 10.0)
    }

    pub fn estimator_set(&self) -> Result<Vec<Estimator>, Error> {
        let mut out = Vec::new();
        for name in &self.estimators {
            let est = Estimator::ALL
                .into_iter()
                .find(|e| e.label() == name)
                .ok_or_else(|| {
                    Error::InvalidConfig(format!("estimators: unknown estimator {name:?}"))
                })?;
            if out.contains(&est) {
                return Err(Error::InvalidConfig(format!(
                    "estimators: duplicate entry {name:?}"
                )));
            }
            out.push(est);
        }
        Ok(out)
    }

    pub fn scheme_set(&self) -> Result<Vec<Scheme>, Error> {
        let mut out = Vec::new();
        for name in &self.schemes {
            let scheme = Scheme::ALL
                .into_iter()
                .find(|s| s.label() == name)
                .ok_or_else(|| Error::InvalidConfig(format!("schemes: unknown scheme {name:?}")))?;
            if out.contains(&scheme) {
                return Err(Error::InvalidConfig(format!("schemes: duplicate entry {name:?}")));
            }
            out.push(scheme);
        }
        Ok(out)
    }

    pub fn area(&self) -> Result<AreaSpec<f64>, Error> {
        AreaSpec::new(self.side_m, self.wraparound, self.ap_height_m, self.ue_height_m)
    }

    pub fn shadow(&self) -> Result<ShadowModel<f64>, Error> {
        ShadowModel::new(self.sigma_sf_db, self.shadow_delta, self.decorrelation_m)
    }

    pub fn frame(&self) -> Result<FrameConfig, Error> {
        FrameConfig::split(self.tau_c, self.tau_p)
    }

    pub fn power_config(&self) -> Result<PowerConfig<f64>, Error> {
        let noise = self.noise_w();
        PowerConfig::new(
            vec![self.pilot_power_w; self.k],
            vec![self.ul_power_w; self.k],
            self.dl_power_per_ue_w * self.k as f64,
            noise,
            noise,
        )
    }
}
