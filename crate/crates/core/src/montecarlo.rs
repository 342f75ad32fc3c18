//! Monte Carlo oracle for every expectation in the closed-form analysis.
//!
//! Sample means over independent coherence blocks estimate the first and
//! second moments behind the UatF SINRs, the SINRs themselves, and the
//! estimation MSEs. Trials are split into up to 20 contiguous batches and
//! standard errors come from the delete-one-batch jackknife. Every trial
//! draws from its own substream keyed by (master seed, purpose, trial
//! index) and batch partials merge in batch order, so results are
//! bit-identical for any thread count.
//!
//! Two accumulation strategies coexist: the moment path stores the full
//! M×M cross matrices per UE pair and suits desk-scale validation, while
//! the direct path accumulates only the scalar statistics entering one SINR
//! and scales to full-size networks.

use num_complex::Complex;
use rayon::prelude::*;

use crate::channel::{
    estimate, receive_pilots, sample_channel, ChannelRealization, FrameConfig, PilotAssignment,
    PowerConfig,
};
use crate::downlink::{DlMode, DlPowerAllocation};
use crate::geometry::NetworkInstance;
use crate::mat::Mat;
use crate::num::{count, Real};
use crate::rng::{purpose, substream};
use crate::stats::{compute_statistics, estimate_power, EstimatorStatistics};
use crate::uplink::LsfdWeights;
use crate::{Error, Estimator};

/// Number of jackknife batches when enough trials are available.
pub const JACKKNIFE_BATCHES: usize = 20;

/// One empirically estimated quantity with its jackknife or direct
/// standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    pub value: T,
    pub std_error: T,
    pub trials: usize,
}

/// Outcome of comparing a closed-form value against its oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationCheck<T> {
    pub closed: T,
    pub mc: McEstimate<T>,
    /// Acceptance threshold in standard errors.
    pub z: T,
    /// |closed − mc.value|.
    pub gap: T,
    pub pass: bool,
}

/// Passes iff the closed form sits within z standard errors of the oracle.
pub fn validate<T: Real>(closed: T, mc: &McEstimate<T>, z: T) -> ValidationCheck<T> {
    let gap = (closed - mc.value).abs();
    ValidationCheck {
        closed,
        mc: *mc,
        z,
        gap,
        pass: gap <= z * mc.std_error,
    }
}

impl<T: Real> std::fmt::Display for ValidationCheck<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sigmas = if self.mc.std_error > T::zero() {
            self.gap / self.mc.std_error
        } else if self.gap == T::zero() {
            T::zero()
        } else {
            T::infinity()
        };
        write!(
            f,
            "closed {:.6e} vs mc {:.6e} +- {:.2e} ({:.2} sigma, z={}): {}",
            self.closed,
            self.mc.value,
            self.mc.std_error,
            sigmas,
            self.z,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

/// Contiguous near-equal batch ranges; the partition never affects results,
/// only the jackknife granularity.
fn batch_bounds(trials: usize) -> Vec<(usize, usize)> {
    let nb = trials.min(JACKKNIFE_BATCHES).max(1);
    (0..nb)
        .map(|b| (trials * b / nb, trials * (b + 1) / nb))
        .collect()
}

/// Runs one batch range per rayon task and merges in batch order.
fn run_batches<S, F>(trials: usize, f: F) -> Result<Vec<(usize, S)>, Error>
where
    S: Send,
    F: Fn(usize, usize) -> Result<S, Error> + Sync,
{
    batch_bounds(trials)
        .into_par_iter()
        .map(|(start, end)| Ok((end - start, f(start, end)?)))
        .collect()
}

/// Draws the coherence block of trial `t` and runs the chosen estimator.
fn draw_block<T: Real>(
    net: &NetworkInstance<T>,
    assign: &PilotAssignment,
    powers: &PowerConfig<T>,
    frame: &FrameConfig,
    stats: &EstimatorStatistics<T>,
    estimator: Estimator,
    seed: u64,
    t: u64,
) -> Result<(ChannelRealization<T>, Mat<Complex<T>>), Error> {
    let mut channel_rng = substream(seed, &[purpose::CHANNEL, t]);
    let mut noise_rng = substream(seed, &[purpose::PILOT_NOISE, t]);
    let mut realization = sample_channel(net, &mut channel_rng);
    receive_pilots(&mut realization, assign, powers, frame, &mut noise_rng)?;
    let est = estimate(estimator, &realization, net, stats, assign, powers, frame)?;
    Ok((realization, est))
}

/// Delete-one-batch jackknife around a statistic of the batch sums.
fn jackknife<T: Real>(
    trials: usize,
    batch_trials: &[usize],
    theta: impl Fn(Option<usize>) -> Result<T, Error>,
) -> Result<McEstimate<T>, Error> {
    let value = theta(None)?;
    let nonempty: Vec<usize> = batch_trials
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(i, _)| i)
        .collect();
    if nonempty.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "jackknife needs at least 2 nonempty batches, got {} from {trials} trials",
            nonempty.len()
        )));
    }
    let loo: Vec<T> = nonempty
        .iter()
        .map(|&i| theta(Some(i)))
        .collect::<Result<_, _>>()?;
    let nb = count::<T>(loo.len());
    let mean = loo.iter().copied().sum::<T>() / nb;
    let var = loo
        .iter()
        .map(|&x| (x - mean) * (x - mean))
        .sum::<T>()
        * (nb - T::one())
        / nb;
    Ok(McEstimate {
        value,
        std_error: var.sqrt(),
        trials,
    })
}

/// Empirical moments of t_{m} = ĥ_{m,k}^*·h_{m,l} with full M×M cross
/// matrices, held as per-batch sums for jackknifing.
#[derive(Debug, Clone)]
pub struct McUlMoments<T> {
    estimator: Estimator,
    m: usize,
    k: usize,
    trials: usize,
    batch_trials: Vec<usize>,
    /// Per batch: Σ_t t_m, layout [(k·K+l)·M + m].
    b_sum: Vec<Vec<Complex<T>>>,
    /// Per batch: Σ_t t_i·conj(t_j), layout [(k·K+l)·M² + i·M + j].
    g1_sum: Vec<Vec<Complex<T>>>,
    /// Per batch: Σ_t |ĥ_{m,k}|², layout [k·M + m].
    g2_sum: Vec<Vec<T>>,
}

impl<T: Real> McUlMoments<T> {
    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    fn included(&self, exclude: Option<usize>) -> T {
        let n: usize = self
            .batch_trials
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != exclude)
            .map(|(_, &n)| n)
            .sum();
        count(n)
    }

    fn b_mean_ex(&self, k: usize, l: usize, exclude: Option<usize>) -> Vec<Complex<T>> {
        let n = self.included(exclude);
        let base = (k * self.k + l) * self.m;
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.m];
        for (i, bs) in self.b_sum.iter().enumerate() {
            if Some(i) == exclude {
                continue;
            }
            for m in 0..self.m {
                out[m] += bs[base + m];
            }
        }
        out.iter_mut().for_each(|x| *x /= n);
        out
    }

    fn g1_raw_ex(&self, k: usize, l: usize, exclude: Option<usize>) -> Vec<Complex<T>> {
        let n = self.included(exclude);
        let base = (k * self.k + l) * self.m * self.m;
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.m * self.m];
        for (i, gs) in self.g1_sum.iter().enumerate() {
            if Some(i) == exclude {
                continue;
            }
            for e in 0..self.m * self.m {
                out[e] += gs[base + e];
            }
        }
        out.iter_mut().for_each(|x| *x /= n);
        out
    }

    fn g2_mean_ex(&self, k: usize, exclude: Option<usize>) -> Vec<T> {
        let n = self.included(exclude);
        let base = k * self.m;
        let mut out = vec![T::zero(); self.m];
        for (i, gs) in self.g2_sum.iter().enumerate() {
            if Some(i) == exclude {
                continue;
            }
            for m in 0..self.m {
                out[m] = out[m] + gs[base + m];
            }
        }
        out.iter_mut().for_each(|x| *x = *x / n);
        out
    }

    /// Sample-mean first moments b̂_{k,l}.
    pub fn b_mean(&self, k: usize, l: usize) -> Vec<Complex<T>> {
        self.b_mean_ex(k, l, None)
    }

    /// Hermitian-symmetrized sample-mean second moments Γ̂^(1)_{k,l}.
    pub fn gamma1_mean(&self, k: usize, l: usize) -> Mat<Complex<T>> {
        let raw = self.g1_raw_ex(k, l, None);
        let m = self.m;
        Mat::from_fn(m, m, |i, j| {
            (raw[i * m + j] + raw[j * m + i].conj()) * crate::num::real::<T>(0.5)
        })
    }

    /// Sample-mean estimate powers Γ̂^(2)_k.
    pub fn gamma2_mean(&self, k: usize) -> Vec<T> {
        self.g2_mean_ex(k, None)
    }
}

/// Estimates b_{k,l}, Γ^(1)_{k,l}, and Γ^(2)_k by sample means over
/// independent coherence blocks. Memory scales as K²M², so this is the
/// desk-scale oracle.
pub fn mc_ul_moments<T: Real>(
    net: &NetworkInstance<T>,
    assign: &PilotAssignment,
    powers: &PowerConfig<T>,
    frame: &FrameConfig,
    estimator: Estimator,
    trials: usize,
    seed: u64,
) -> Result<McUlMoments<T>, Error> {
    if trials == 0 {
        return Err(Error::InvalidConfig("Monte Carlo needs at least one trial".into()));
    }
    let (m, k) = (net.num_aps(), net.num_ues());
    let stats = compute_statistics(net, assign, powers, frame)?;

    struct Sums<T> {
        b: Vec<Complex<T>>,
        g1: Vec<Complex<T>>,
        g2: Vec<T>,
    }
    let parts = run_batches(trials, |start, end| {
        let zero = Complex::new(T::zero(), T::zero());
        let mut s = Sums {
            b: vec![zero; k * k * m],
            g1: vec![zero; k * k * m * m],
            g2: vec![T::zero(); k * m],
        };
        let mut t_buf = vec![zero; m];
        for t in start..end {
            let (realization, est) =
                draw_block(net, assign, powers, frame, &stats, estimator, seed, t as u64)?;
            for ue in 0..k {
                for ap in 0..m {
                    s.g2[ue * m + ap] = s.g2[ue * m + ap] + est[(ap, ue)].norm_sqr();
                }
                for l in 0..k {
                    for ap in 0..m {
                        t_buf[ap] = est[(ap, ue)].conj() * realization.h[(ap, l)];
                    }
                    let base_b = (ue * k + l) * m;
                    for ap in 0..m {
                        s.b[base_b + ap] += t_buf[ap];
                    }
                    let base_g = (ue * k + l) * m * m;
                    for i in 0..m {
                        for j in 0..m {
                            s.g1[base_g + i * m + j] += t_buf[i] * t_buf[j].conj();
                        }
                    }
                }
            }
        }
        Ok(s)
    })?;

    let mut out = McUlMoments {
        estimator,
        m,
        k,
        trials,
        batch_trials: Vec::new(),
        b_sum: Vec::new(),
        g1_sum: Vec::new(),
        g2_sum: Vec::new(),
    };
    for (n, s) in parts {
        out.batch_trials.push(n);
        out.b_sum.push(s.b);
        out.g1_sum.push(s.g1);
        out.g2_sum.push(s.g2);
    }
    Ok(out)
}

/// Plugs empirical moments into the UL SINR quotient for fixed weights and
/// jackknifes the batches for an error bar.
pub fn mc_ul_sinr<T: Real>(
    moments: &McUlMoments<T>,
    k: usize,
    weights: &LsfdWeights<T>,
    powers: &PowerConfig<T>,
) -> Result<McEstimate<T>, Error> {
    let (m, n_ue) = (moments.m, moments.k);
    if weights.a.len() != m || powers.num_ues() != n_ue {
        return Err(Error::InvalidConfig(
            "weights or powers do not match the Monte Carlo moments".into(),
        ));
    }
    let a = &weights.a;
    let theta = |exclude: Option<usize>| -> Result<T, Error> {
        let b_kk = moments.b_mean_ex(k, k, exclude);
        let dot = b_kk
            .iter()
            .zip(a)
            .fold(Complex::new(T::zero(), T::zero()), |s, (b, w)| {
                s + w.conj() * *b
            });
        let num = powers.ul_data_power[k] * dot.norm_sqr();
        let mut denom = -num;
        for l in 0..n_ue {
            let g1 = moments.g1_raw_ex(k, l, exclude);
            let mut quad = Complex::new(T::zero(), T::zero());
            for i in 0..m {
                for j in 0..m {
                    quad += a[i].conj() * g1[i * m + j] * a[j];
                }
            }
            denom = denom + powers.ul_data_power[l] * quad.re;
        }
        let g2 = moments.g2_mean_ex(k, exclude);
        for i in 0..m {
            denom = denom + powers.noise_ul * a[i].norm_sqr() * g2[i];
        }
        if !(denom > T::zero()) || !denom.is_finite() {
            return Err(Error::Degenerate(format!(
                "empirical UL SINR denominator for UE {k} is {denom}"
            )));
        }
        Ok(num / denom)
    };
    jackknife(moments.trials, &moments.batch_trials, theta)
}

/// Plugs empirical moments into the DL SINR of the allocation's mode.
/// `est_power` is the closed-form E{|ĥ|²} that normalizes the precoders.
pub fn mc_dl_sinr_from_moments<T: Real>(
    moments: &McUlMoments<T>,
    alloc: &DlPowerAllocation<T>,
    est_power: &Mat<T>,
    noise_dl: T,
    k: usize,
) -> Result<McEstimate<T>, Error> {
    let (m, n_ue) = (moments.m, moments.k);
    if alloc.estimator != moments.estimator {
        return Err(Error::InvalidConfig(format!(
            "allocation normalized for {:?} but Monte Carlo moments are for {:?}",
            alloc.estimator, moments.estimator
        )));
    }
    if alloc.rho.rows() != m || alloc.rho.cols() != n_ue {
        return Err(Error::InvalidConfig("allocation does not match the moments".into()));
    }
    let theta = |exclude: Option<usize>| -> Result<T, Error> {
        let (num, mut denom) = match alloc.mode {
            DlMode::Coherent => {
                let b_kk = moments.b_mean_ex(k, k, exclude);
                let mean: Complex<T> = (0..m)
                    .map(|i| b_kk[i] * alloc.d[(i, k)].sqrt())
                    .fold(Complex::new(T::zero(), T::zero()), |s, x| s + x);
                let num = mean.norm_sqr();
                let mut total = T::zero();
                for l in 0..n_ue {
                    let g1 = moments.g1_raw_ex(l, k, exclude);
                    for i in 0..m {
                        for j in 0..m {
                            total = total
                                + alloc.d[(i, l)].sqrt()
                                    * alloc.d[(j, l)].sqrt()
                                    * g1[i * m + j].re;
                        }
                    }
                }
                (num, total - num)
            }
            DlMode::NonCoherent => {
                let b_kk = moments.b_mean_ex(k, k, exclude);
                let num: T = (0..m)
                    .map(|i| alloc.rho[(i, k)] * b_kk[i].norm_sqr() / est_power[(i, k)])
                    .sum();
                let mut total = T::zero();
                for l in 0..n_ue {
                    let g1 = moments.g1_raw_ex(l, k, exclude);
                    for i in 0..m {
                        total =
                            total + alloc.rho[(i, l)] * g1[i * m + i].re / est_power[(i, l)];
                    }
                }
                (num, total - num)
            }
        };
        denom = denom + noise_dl;
        if !(denom > T::zero()) || !denom.is_finite() {
            return Err(Error::Degenerate(format!(
                "empirical DL SINR denominator for UE {k} is {denom}"
            )));
        }
        Ok(num / denom)
    };
    jackknife(moments.trials, &moments.batch_trials, theta)
}

/// Full DL oracle from an instance: samples blocks, builds the moment
/// matrices, and returns one estimate per UE. Desk scale.
#[allow(clippy::too_many_arguments)]
pub fn mc_dl_sinr<T: Real>(
    net: &NetworkInstance<T>,
    assign: &PilotAssignment,
    powers: &PowerConfig<T>,
    frame: &FrameConfig,
    estimator: Estimator,
    mode: DlMode,
    trials: usize,
    seed: u64,
) -> Result<Vec<McEstimate<T>>, Error> {
    let stats = compute_statistics(net, assign, powers, frame)?;
    let alloc = crate::downlink::dl_power_allocation(&stats, powers, frame, estimator, mode)?;
    let est_power = estimate_power(&stats, powers, frame, estimator)?;
    let moments = mc_ul_moments(net, assign, powers, frame, estimator, trials, seed)?;
    (0..net.num_ues())
        .map(|k| mc_dl_sinr_from_moments(&moments, &alloc, &est_power, powers.noise_dl, k))
        .collect()
}

/// Empirical estimation MSE E{|h − ĥ|²} per link with a direct standard
/// error from the sample variance.
pub fn mc_estimation_mse<T: Real>(
    net: &NetworkInstance<T>,
    assign: &PilotAssignment,
    powers: &PowerConfig<T>,
    frame: &FrameConfig,
    estimator: Estimator,
    trials: usize,
    seed: u64,
) -> Result<Mat<McEstimate<T>>, Error> {
    if trials < 2 {
        return Err(Error::InvalidConfig("MSE oracle needs at least 2 trials".into()));
    }
    let (m, k) = (net.num_aps(), net.num_ues());
    let stats = compute_statistics(net, assign, powers, frame)?;
    let parts = run_batches(trials, |start, end| {
        let mut sum = vec![T::zero(); m * k];
        let mut sum_sq = vec![T::zero(); m * k];
        for t in start..end {
            let (realization, est) =
                draw_block(net, assign, powers, frame, &stats, estimator, seed, t as u64)?;
            for i in 0..m {
                for j in 0..k {
                    let x = (realization.h[(i, j)] - est[(i, j)]).norm_sqr();
                    sum[i * k + j] = sum[i * k + j] + x;
                    sum_sq[i * k + j] = sum_sq[i * k + j] + x * x;
                }
            }
        }
        Ok((sum, sum_sq))
    })?;
    let mut sum = vec![T::zero(); m * k];
    let mut sum_sq = vec![T::zero(); m * k];
    for (_, (s, sq)) in parts {
        for e in 0..m * k {
            sum[e] = sum[e] + s[e];
            sum_sq[e] = sum_sq[e] + sq[e];
        }
    }
    let n = count::<T>(trials);
    Ok(Mat::from_fn(m, k, |i, j| {
        let mean = sum[i * k + j] / n;
        let var = (sum_sq[i * k + j] / n - mean * mean).max(T::zero());
        McEstimate {
            value: mean,
            std_error: (var / n).sqrt(),
            trials,
        }
    }))
}

/// Large-network UL SINR oracle for fixed per-UE weights: accumulates only
/// the K² scalar statistics entering each UE's quotient, so memory stays
/// flat however many APs the instance has.
#[allow(clippy::too_many_arguments)]
pub fn mc_ul_sinr_direct<T: Real>(
    net: &NetworkInstance<T>,
    assign: &PilotAssignment,
    powers: &PowerConfig<T>,
    frame: &FrameConfig,
    estimator: Estimator,
    weights: &[LsfdWeights<T>],
    trials: usize,
    seed: u64,
) -> Result<Vec<McEstimate<T>>, Error> {
    let (m, k) = (net.num_aps(), net.num_ues());
    if weights.len() != k || weights.iter().any(|w| w.a.len() != m) {
        return Err(Error::InvalidConfig("need one length-M weight vector per UE".into()));
    }
    let stats = compute_statistics(net, assign, powers, frame)?;

    struct Sums<T> {
        /// Σ_t aᴴt for l = k, per UE.
        x_own: Vec<Complex<T>>,
        /// Σ_t |aᴴt|², layout [k·K + l].
        x_sq: Vec<T>,
        /// Σ_t Σ_m |a_m|²·|ĥ_{m,k}|², per UE.
        w2: Vec<T>,
    }
    let parts = run_batches(trials, |start, end| {
        let zero = Complex::new(T::zero(), T::zero());
        let mut s = Sums {
            x_own: vec![zero; k],
            x_sq: vec![T::zero(); k * k],
            w2: vec![T::zero(); k],
        };
        let mut coeff = vec![zero; m];
        for t in start..end {
            let (realization, est) =
                draw_block(net, assign, powers, frame, &stats, estimator, seed, t as u64)?;
            for ue in 0..k {
                let a = &weights[ue].a;
                for ap in 0..m {
                    coeff[ap] = (a[ap] * est[(ap, ue)]).conj();
                    s.w2[ue] = s.w2[ue] + a[ap].norm_sqr() * est[(ap, ue)].norm_sqr();
                }
                for l in 0..k {
                    let x = (0..m).fold(zero, |acc, ap| acc + coeff[ap] * realization.h[(ap, l)]);
                    s.x_sq[ue * k + l] = s.x_sq[ue * k + l] + x.norm_sqr();
                    if l == ue {
                        s.x_own[ue] += x;
                    }
                }
            }
        }
        Ok(s)
    })?;

    let batch_trials: Vec<usize> = parts.iter().map(|(n, _)| *n).collect();
    (0..k)
        .map(|ue| {
            let theta = |exclude: Option<usize>| -> Result<T, Error> {
                let mut n = T::zero();
                let mut x_own = Complex::new(T::zero(), T::zero());
                let mut x_sq = vec![T::zero(); k];
                let mut w2 = T::zero();
                for (i, (nb, s)) in parts.iter().enumerate() {
                    if Some(i) == exclude {
                        continue;
                    }
                    n = n + count::<T>(*nb);
                    x_own += s.x_own[ue];
                    w2 = w2 + s.w2[ue];
                    for l in 0..k {
                        x_sq[l] = x_sq[l] + s.x_sq[ue * k + l];
                    }
                }
                let num = powers.ul_data_power[ue] * (x_own / n).norm_sqr();
                let mut denom = powers.noise_ul * w2 / n - num;
                for l in 0..k {
                    denom = denom + powers.ul_data_power[l] * x_sq[l] / n;
                }
                if !(denom > T::zero()) || !denom.is_finite() {
                    return Err(Error::Degenerate(format!(
                        "empirical UL SINR denominator for UE {ue} is {denom}"
                    )));
                }
                Ok(num / denom)
            };
            jackknife(trials, &batch_trials, theta)
        })
        .collect()
}

/// Large-network DL SINR oracle: accumulates the per-UE-pair effective
/// gains for the requested mode.
#[allow(clippy::too_many_arguments)]
pub fn mc_dl_sinr_direct<T: Real>(
    net: &NetworkInstance<T>,
    assign: &PilotAssignment,
    powers: &PowerConfig<T>,
    frame: &FrameConfig,
    estimator: Estimator,
    mode: DlMode,
    trials: usize,
    seed: u64,
) -> Result<Vec<McEstimate<T>>, Error> {
    let (m, k) = (net.num_aps(), net.num_ues());
    let stats = compute_statistics(net, assign, powers, frame)?;
    let alloc = crate::downlink::dl_power_allocation(&stats, powers, frame, estimator, mode)?;
    let est_power = estimate_power(&stats, powers, frame, estimator)?;

    struct Sums<T> {
        /// Coherent: Σ_t g_{k,k}. Non-coherent: Σ_t t_{n,k} flattened [k·M+n].
        own: Vec<Complex<T>>,
        /// Σ_t of the squared-gain statistic per (l, k) pair, [l·K + k].
        cross_sq: Vec<T>,
    }
    let own_len = match mode {
        DlMode::Coherent => k,
        DlMode::NonCoherent => k * m,
    };
    let parts = run_batches(trials, |start, end| {
        let zero = Complex::new(T::zero(), T::zero());
        let mut s = Sums {
            own: vec![zero; own_len],
            cross_sq: vec![T::zero(); k * k],
        };
        let mut coeff = vec![zero; m];
        for t in start..end {
            let (realization, est) =
                draw_block(net, assign, powers, frame, &stats, estimator, seed, t as u64)?;
            for l in 0..k {
                match mode {
                    DlMode::Coherent => {
                        for ap in 0..m {
                            coeff[ap] = est[(ap, l)].conj() * alloc.d[(ap, l)].sqrt();
                        }
                        for ue in 0..k {
                            let g = (0..m)
                                .fold(zero, |acc, ap| acc + coeff[ap] * realization.h[(ap, ue)]);
                            s.cross_sq[l * k + ue] = s.cross_sq[l * k + ue] + g.norm_sqr();
                            if ue == l {
                                s.own[l] += g;
                            }
                        }
                    }
                    DlMode::NonCoherent => {
                        for ue in 0..k {
                            let mut q = T::zero();
                            for ap in 0..m {
                                let t_n = est[(ap, l)].conj() * realization.h[(ap, ue)];
                                q = q
                                    + alloc.rho[(ap, l)] * t_n.norm_sqr() / est_power[(ap, l)];
                                if ue == l {
                                    s.own[l * m + ap] += t_n;
                                }
                            }
                            s.cross_sq[l * k + ue] = s.cross_sq[l * k + ue] + q;
                        }
                    }
                }
            }
        }
        Ok(s)
    })?;

    let batch_trials: Vec<usize> = parts.iter().map(|(n, _)| *n).collect();
    (0..k)
        .map(|ue| {
            let theta = |exclude: Option<usize>| -> Result<T, Error> {
                let zero = Complex::new(T::zero(), T::zero());
                let mut n = T::zero();
                let mut own = vec![zero; own_len];
                let mut cross = vec![T::zero(); k];
                for (i, (nb, s)) in parts.iter().enumerate() {
                    if Some(i) == exclude {
                        continue;
                    }
                    n = n + count::<T>(*nb);
                    for l in 0..k {
                        cross[l] = cross[l] + s.cross_sq[l * k + ue];
                    }
                    match mode {
                        DlMode::Coherent => own[ue] += s.own[ue],
                        DlMode::NonCoherent => {
                            for ap in 0..m {
                                own[ue * m + ap] += s.own[ue * m + ap];
                            }
                        }
                    }
                }
                let num = match mode {
                    DlMode::Coherent => (own[ue] / n).norm_sqr(),
                    DlMode::NonCoherent => (0..m)
                        .map(|ap| {
                            alloc.rho[(ap, ue)] * (own[ue * m + ap] / n).norm_sqr()
                                / est_power[(ap, ue)]
                        })
                        .sum(),
                };
                let mut denom = powers.noise_dl - num;
                for l in 0..k {
                    denom = denom + cross[l] / n;
                }
                if !(denom > T::zero()) || !denom.is_finite() {
                    return Err(Error::Degenerate(format!(
                        "empirical DL SINR denominator for UE {ue} is {denom}"
                    )));
                }
                Ok(num / denom)
            };
            jackknife(trials, &batch_trials, theta)
        })
        .collect()
}
