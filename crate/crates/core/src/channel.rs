//! Coherence-block channel realizations, pilot reception, and the three
//! channel estimators.
//!
//! Each channel coefficient is Rician with a LoS phase redrawn uniformly at
//! random in every coherence block: h = h̄·e^{jφ} + g with g ~ CN(0, β).
//! Pilot sequences are orthogonal, so the despread observation per
//! (AP, pilot) is a sufficient statistic and pilots are tracked as integer
//! indices; the despreading noise is drawn once per (AP, pilot) and shared
//! by every UE on that pilot. Three estimators consume the observation: the
//! phase-aware MMSE estimator knows φ, the LMMSE estimator uses only
//! statistics averaged over the phase, and the LS estimator uses no prior.

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::geometry::NetworkInstance;
use crate::mat::Mat;
use crate::num::{count, real, Real};
use crate::stats::EstimatorStatistics;
use crate::{Error, Estimator};

/// Sample budget of one coherence block.
///
/// A block carries pilots plus data in a single direction at a time, so the
/// UL and DL data budgets each equal the full remainder of the block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameConfig {
    /// Samples per coherence block.
    pub tau_c: usize,
    /// Pilot samples per block.
    pub tau_p: usize,
    /// UL data samples per block.
    pub tau_u: usize,
    /// DL data samples per block.
    pub tau_d: usize,
}

impl FrameConfig {
    /// Splits a block of `tau_c` samples into `tau_p` pilots and data.
    pub fn split(tau_c: usize, tau_p: usize) -> Result<Self, Error> {
        if tau_p == 0 || tau_p > tau_c {
            return Err(Error::InvalidConfig(format!(
                "pilot length must satisfy 1 <= tau_p <= tau_c, got tau_p={tau_p}, tau_c={tau_c}"
            )));
        }
        Ok(Self {
            tau_c,
            tau_p,
            tau_u: tau_c - tau_p,
            tau_d: tau_c - tau_p,
        })
    }
}

/// Transmit and noise powers, all in Watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig<T> {
    /// Pilot transmit power per UE (p̂_k).
    pub pilot_power: Vec<T>,
    /// UL data transmit power per UE (p_k).
    pub ul_data_power: Vec<T>,
    /// Total DL power budget per AP (ρ_dl).
    pub dl_total_power: T,
    /// UL receiver noise power (σ²_ul).
    pub noise_ul: T,
    /// DL receiver noise power (σ²_dl).
    pub noise_dl: T,
}

impl<T: Real> PowerConfig<T> {
    pub fn new(
        pilot_power: Vec<T>,
        ul_data_power: Vec<T>,
        dl_total_power: T,
        noise_ul: T,
        noise_dl: T,
    ) -> Result<Self, Error> {
        if pilot_power.len() != ul_data_power.len() {
            return Err(Error::InvalidConfig(format!(
                "pilot powers cover {} UEs but UL data powers cover {}",
                pilot_power.len(),
                ul_data_power.len()
            )));
        }
        let nonneg = |v: &[T]| v.iter().all(|&x| x >= T::zero());
        if !nonneg(&pilot_power) || !nonneg(&ul_data_power) || !(dl_total_power >= T::zero()) {
            return Err(Error::InvalidConfig("transmit powers must be nonnegative".into()));
        }
        if !(noise_ul > T::zero()) || !(noise_dl > T::zero()) {
            return Err(Error::InvalidConfig("noise powers must be positive".into()));
        }
        Ok(Self {
            pilot_power,
            ul_data_power,
            dl_total_power,
            noise_ul,
            noise_dl,
        })
    }

    /// Same pilot and UL data power for every UE.
    pub fn uniform(
        k: usize,
        pilot: T,
        ul_data: T,
        dl_total: T,
        noise_ul: T,
        noise_dl: T,
    ) -> Result<Self, Error> {
        Self::new(vec![pilot; k], vec![ul_data; k], dl_total, noise_ul, noise_dl)
    }

    /// Number of UEs the per-UE powers cover.
    pub fn num_ues(&self) -> usize {
        self.pilot_power.len()
    }
}

/// Which UE transmits which pilot, plus the induced sharing structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotAssignment {
    /// Pilot index of each UE, in [0, tau_p).
    pub pilot_of_ue: Vec<usize>,
    /// For each UE k, the UEs sharing its pilot (k included), ascending.
    pub cohort: Vec<Vec<usize>>,
}

impl PilotAssignment {
    /// Builds the cohort structure from a raw pilot index per UE.
    pub fn from_pilots(pilot_of_ue: Vec<usize>, tau_p: usize) -> Result<Self, Error> {
        if pilot_of_ue.is_empty() {
            return Err(Error::InvalidConfig("pilot assignment covers no UEs".into()));
        }
        if let Some(&bad) = pilot_of_ue.iter().find(|&&t| t >= tau_p) {
            return Err(Error::InvalidConfig(format!(
                "pilot index {bad} out of range for tau_p={tau_p}"
            )));
        }
        let cohort = pilot_of_ue
            .iter()
            .map(|&t| {
                pilot_of_ue
                    .iter()
                    .enumerate()
                    .filter(|(_, &s)| s == t)
                    .map(|(l, _)| l)
                    .collect()
            })
            .collect();
        Ok(Self { pilot_of_ue, cohort })
    }

    /// Whether UEs `k` and `l` transmit the same pilot.
    pub fn shares_pilot(&self, k: usize, l: usize) -> bool {
        self.pilot_of_ue[k] == self.pilot_of_ue[l]
    }
}

/// Assigns pilots: the first min(tau_p, K) UEs draw distinct pilots at
/// random, and each remaining UE takes the pilot with the least large-scale
/// overlap Σ_{l∈P_t} Σ_m β′_{m,l}·β′_{m,k} against the UEs already on it,
/// lowest pilot index winning ties.
pub fn assign_pilots<T: Real, R: Rng + ?Sized>(
    net: &NetworkInstance<T>,
    tau_p: usize,
    rng: &mut R,
) -> Result<PilotAssignment, Error> {
    let (m, k) = (net.num_aps(), net.num_ues());
    if tau_p == 0 || k == 0 {
        return Err(Error::InvalidConfig(format!(
            "pilot assignment needs tau_p >= 1 and K >= 1, got tau_p={tau_p}, K={k}"
        )));
    }
    let beta_prime = |i: usize, j: usize| {
        net.nlos_var[(i, j)] + net.los_mean[(i, j)] * net.los_mean[(i, j)]
    };

    let mut shuffled: Vec<usize> = (0..tau_p).collect();
    shuffled.shuffle(rng);

    let mut pilot_of_ue = vec![0usize; k];
    // Aggregated β′ of the UEs already on each pilot, per AP.
    let mut load = Mat::fill(tau_p, m, T::zero());
    for ue in 0..k {
        let t = if ue < tau_p {
            shuffled[ue]
        } else {
            let mut best_t = 0usize;
            let mut best_score = T::infinity();
            for cand in 0..tau_p {
                let score: T = (0..m).map(|i| load[(cand, i)] * beta_prime(i, ue)).sum();
                if score < best_score {
                    best_score = score;
                    best_t = cand;
                }
            }
            best_t
        };
        pilot_of_ue[ue] = t;
        for i in 0..m {
            load[(t, i)] = load[(t, i)] + beta_prime(i, ue);
        }
    }
    PilotAssignment::from_pilots(pilot_of_ue, tau_p)
}

/// One coherence block of channel state.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    /// Channel coefficients h = h̄·e^{jφ} + g (M×K).
    pub h: Mat<Complex<T>>,
    /// LoS phases φ in [−π, π) (M×K).
    pub phase: Mat<T>,
    /// NLoS components g (M×K).
    pub nlos: Mat<Complex<T>>,
    /// Despread pilot observations per (AP, UE); columns of UEs sharing a
    /// pilot are identical (M×K). Zero until pilots are received.
    pub pilot_obs: Mat<Complex<T>>,
}

/// Draws one coherence block: fresh uniform phases and fresh NLoS
/// components on every call, large-scale coefficients fixed by the instance.
pub fn sample_channel<T: Real, R: Rng + ?Sized>(
    net: &NetworkInstance<T>,
    rng: &mut R,
) -> ChannelRealization<T> {
    let (m, k) = (net.num_aps(), net.num_ues());
    let zero = Complex::new(T::zero(), T::zero());
    let mut phase = Mat::fill(m, k, T::zero());
    let mut nlos = Mat::fill(m, k, zero);
    let mut h = Mat::fill(m, k, zero);
    let half = real::<T>(0.5);
    for i in 0..m {
        for j in 0..k {
            let phi = (real::<T>(2.0) * T::standard_uniform(rng) - T::one()) * T::PI();
            let scale = (net.nlos_var[(i, j)] * half).sqrt();
            let g = Complex::new(
                T::standard_normal(rng) * scale,
                T::standard_normal(rng) * scale,
            );
            phase[(i, j)] = phi;
            nlos[(i, j)] = g;
            h[(i, j)] = Complex::from_polar(net.los_mean[(i, j)], phi) + g;
        }
    }
    ChannelRealization {
        h,
        phase,
        nlos,
        pilot_obs: Mat::fill(m, k, zero),
    }
}

/// Forms the despread pilot observations in place:
/// y_{m,k} = Σ_{l∈P_k} √p̂_l·τ_p·h_{m,l} + ν_{m,t(k)} with
/// ν ~ CN(0, σ²·τ_p) drawn once per (AP, pilot).
pub fn receive_pilots<T: Real, R: Rng + ?Sized>(
    realization: &mut ChannelRealization<T>,
    assign: &PilotAssignment,
    powers: &PowerConfig<T>,
    frame: &FrameConfig,
    rng: &mut R,
) -> Result<(), Error> {
    let (m, k) = (realization.h.rows(), realization.h.cols());
    if assign.pilot_of_ue.len() != k || powers.num_ues() != k {
        return Err(Error::InvalidConfig(format!(
            "realization has K={k} UEs but assignment covers {} and powers cover {}",
            assign.pilot_of_ue.len(),
            powers.num_ues()
        )));
    }
    if let Some(&bad) = assign.pilot_of_ue.iter().find(|&&t| t >= frame.tau_p) {
        return Err(Error::InvalidConfig(format!(
            "pilot index {bad} out of range for tau_p={}",
            frame.tau_p
        )));
    }
    let tau_p = count::<T>(frame.tau_p);
    let noise_scale = (powers.noise_ul * tau_p * real::<T>(0.5)).sqrt();
    // Noise is drawn for every pilot whether or not a UE uses it, so the
    // stream layout does not depend on the assignment.
    let mut noise = Mat::fill(m, frame.tau_p, Complex::new(T::zero(), T::zero()));
    for i in 0..m {
        for t in 0..frame.tau_p {
            noise[(i, t)] = Complex::new(
                T::standard_normal(rng) * noise_scale,
                T::standard_normal(rng) * noise_scale,
            );
        }
    }
    for i in 0..m {
        for j in 0..k {
            let mut y = noise[(i, assign.pilot_of_ue[j])];
            for &l in &assign.cohort[j] {
                y += realization.h[(i, l)] * (powers.pilot_power[l].sqrt() * tau_p);
            }
            realization.pilot_obs[(i, j)] = y;
        }
    }
    Ok(())
}

/// Phase-aware MMSE estimate:
/// ĥ = h̄·e^{jφ} + √p̂·β·(y − ȳ)/λ with ȳ = Σ_{l∈P_k} √p̂_l·τ_p·h̄_l·e^{jφ_l}.
pub fn estimate_mmse<T: Real>(
    realization: &ChannelRealization<T>,
    net: &NetworkInstance<T>,
    stats: &EstimatorStatistics<T>,
    assign: &PilotAssignment,
    powers: &PowerConfig<T>,
    frame: &FrameConfig,
) -> Mat<Complex<T>> {
    let (m, k) = (realization.h.rows(), realization.h.cols());
    let tau_p = count::<T>(frame.tau_p);
    Mat::from_fn(m, k, |i, j| {
        let mut centered = realization.pilot_obs[(i, j)];
        for &l in &assign.cohort[j] {
            let mean_l = Complex::from_polar(net.los_mean[(i, l)], realization.phase[(i, l)]);
            centered -= mean_l * (powers.pilot_power[l].sqrt() * tau_p);
        }
        let gain = powers.pilot_power[j].sqrt() * net.nlos_var[(i, j)] / stats.lambda[(i, j)];
        Complex::from_polar(net.los_mean[(i, j)], realization.phase[(i, j)]) + centered * gain
    })
}

/// LMMSE estimate without phase knowledge: ĥ = √p̂·β′·y/λ′.
pub fn estimate_lmmse<T: Real>(
    realization: &ChannelRealization<T>,
    stats: &EstimatorStatistics<T>,
    powers: &PowerConfig<T>,
) -> Mat<Complex<T>> {
    let (m, k) = (realization.h.rows(), realization.h.cols());
    Mat::from_fn(m, k, |i, j| {
        let gain = powers.pilot_power[j].sqrt() * stats.beta_prime[(i, j)] / stats.lambda_prime[(i, j)];
        realization.pilot_obs[(i, j)] * gain
    })
}

/// LS estimate: ĥ = y/(√p̂·τ_p). Defined only for positive pilot power.
pub fn estimate_ls<T: Real>(
    realization: &ChannelRealization<T>,
    powers: &PowerConfig<T>,
    frame: &FrameConfig,
) -> Result<Mat<Complex<T>>, Error> {
    if let Some(j) = powers.pilot_power.iter().position(|&p| !(p > T::zero())) {
        return Err(Error::Domain(format!(
            "LS estimation needs positive pilot power, UE {j} has none"
        )));
    }
    let (m, k) = (realization.h.rows(), realization.h.cols());
    let tau_p = count::<T>(frame.tau_p);
    Ok(Mat::from_fn(m, k, |i, j| {
        realization.pilot_obs[(i, j)] / (powers.pilot_power[j].sqrt() * tau_p)
    }))
}

/// Runs the chosen estimator over one realization.
pub fn estimate<T: Real>(
    estimator: Estimator,
    realization: &ChannelRealization<T>,
    net: &NetworkInstance<T>,
    stats: &EstimatorStatistics<T>,
    assign: &PilotAssignment,
    powers: &PowerConfig<T>,
    frame: &FrameConfig,
) -> Result<Mat<Complex<T>>, Error> {
    match estimator {
        Estimator::Mmse => Ok(estimate_mmse(realization, net, stats, assign, powers, frame)),
        Estimator::Lmmse => Ok(estimate_lmmse(realization, stats, powers)),
        Estimator::Ls => estimate_ls(realization, powers, frame),
    }
}
