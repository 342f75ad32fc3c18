//! Closed-form UL spectral efficiency under maximum-ratio combining.
//!
//! Each AP correlates its received signal with its local channel estimate
//! and forwards the result; a second decoding layer combines the M scalars
//! with large-scale fading decoding (LSFD) weights. The use-and-then-forget
//! bound turns the ergodic SE into a deterministic SINR built from the first
//! and second moments of v_{m,k}^*·h_{m,l} over channel realizations. Those
//! moments are closed-form in the large-scale coefficients for all three
//! estimators, and every moment matrix is a real diagonal core plus a short
//! list of real rank-one pilot-contamination updates, so the SINR evaluation
//! scales linearly in M outside the optimal-weight solve.

use num_complex::Complex;

use crate::channel::{FrameConfig, PilotAssignment, PowerConfig};
use crate::linalg::solve_sym_pd;
use crate::mat::Mat;
use crate::num::{count, Real};
use crate::stats::EstimatorStatistics;
use crate::{Error, Estimator};

/// Real symmetric matrix stored as a diagonal core plus rank-one updates
/// c·v·vᵀ; densified only when a linear solve needs the full matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadForm<T> {
    /// Diagonal core.
    pub diag: Vec<T>,
    /// Rank-one updates (coefficient, vector), vectors real.
    pub rank_one: Vec<(T, Vec<T>)>,
}

impl<T: Real> QuadForm<T> {
    /// Evaluates aᴴ·M·a, which is real for this matrix structure.
    pub fn quad(&self, a: &[Complex<T>]) -> T {
        let mut acc = self
            .diag
            .iter()
            .zip(a)
            .map(|(&d, x)| d * x.norm_sqr())
            .sum::<T>();
        for (c, v) in &self.rank_one {
            let dot = v
                .iter()
                .zip(a)
                .fold(Complex::new(T::zero(), T::zero()), |s, (&vi, x)| {
                    s + x.conj() * vi
                });
            acc = acc + *c * dot.norm_sqr();
        }
        acc
    }

    /// Expands to a dense matrix.
    pub fn densify(&self) -> Mat<T> {
        let n = self.diag.len();
        let mut out = Mat::fill(n, n, T::zero());
        for i in 0..n {
            out[(i, i)] = self.diag[i];
        }
        for (c, v) in &self.rank_one {
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + *c * v[i] * v[j];
                }
            }
        }
        out
    }
}

/// Closed-form moments of v_{m,k}^*·h_{m,l} for one estimator on one
/// instance: first moments b, per-link second-moment excesses over b², the
/// estimate powers Γ^(2), and the assembled per-UE denominator matrices Γ.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet<T> {
    estimator: Estimator,
    m: usize,
    k: usize,
    /// b_{k,l}[m] = E{ĥ_{m,k}^*·h_{m,l}}, real; layout [(k·K + l)·M + m].
    b: Vec<T>,
    /// diag(Γ^(1)_{k,l}) − b_{k,l}∘b_{k,l}; same layout as `b`.
    excess: Vec<T>,
    /// Γ^(2)_k[m] = E{|ĥ_{m,k}|²} = E{|v_{m,k}|²}; layout [k·M + m].
    gamma2: Vec<T>,
    /// Denominator matrix Γ_k per UE.
    gamma: Vec<QuadForm<T>>,
}

impl<T: Real> MomentSet<T> {
    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    pub fn num_aps(&self) -> usize {
        self.m
    }

    pub fn num_ues(&self) -> usize {
        self.k
    }

    /// First-moment vector b_{k,l}; zero unless l shares UE k's pilot.
    pub fn b(&self, k: usize, l: usize) -> &[T] {
        let start = (k * self.k + l) * self.m;
        &self.b[start..start + self.m]
    }

    /// Desired-signal first moment b_{k,k}.
    pub fn b_kk(&self, k: usize) -> &[T] {
        self.b(k, k)
    }

    /// Diagonal excess of Γ^(1)_{k,l} over b_{k,l}·b_{k,l}ᵀ.
    pub fn excess(&self, k: usize, l: usize) -> &[T] {
        let start = (k * self.k + l) * self.m;
        &self.excess[start..start + self.m]
    }

    /// Estimate power Γ^(2)_k (diagonal, per AP).
    pub fn gamma2(&self, k: usize) -> &[T] {
        &self.gamma2[k * self.m..(k + 1) * self.m]
    }

    /// Assembled UL denominator matrix Γ_k.
    pub fn gamma(&self, k: usize) -> &QuadForm<T> {
        &self.gamma[k]
    }

    /// Dense second-moment matrix Γ^(1)_{k,l} = b·bᵀ + diag(excess).
    pub fn gamma1_dense(&self, k: usize, l: usize) -> Mat<T> {
        let (b, e) = (self.b(k, l), self.excess(k, l));
        Mat::from_fn(self.m, self.m, |i, j| {
            let mut v = b[i] * b[j];
            if i == j {
                v = v + e[i];
            }
            v
        })
    }
}

/// Computes the moment set for the chosen estimator.
pub fn ul_moments<T: Real>(
    estimator: Estimator,
    stats: &EstimatorStatistics<T>,
    powers: &PowerConfig<T>,
    assign: &PilotAssignment,
    frame: &FrameConfig,
) -> Result<MomentSet<T>, Error> {
    let (m, k) = (stats.lambda.rows(), stats.lambda.cols());
    if powers.num_ues() != k || assign.pilot_of_ue.len() != k {
        return Err(Error::InvalidConfig(format!(
            "statistics cover K={k} UEs but powers cover {} and assignment {}",
            powers.num_ues(),
            assign.pilot_of_ue.len()
        )));
    }
    let est_power = crate::stats::estimate_power(stats, powers, frame, estimator)?;
    let tau_p = count::<T>(frame.tau_p);
    let mut b = vec![T::zero(); k * k * m];
    let mut excess = vec![T::zero(); k * k * m];
    let mut gamma2 = vec![T::zero(); k * m];

    for ue in 0..k {
        let p_hat_k = powers.pilot_power[ue];
        for ap in 0..m {
            gamma2[ue * m + ap] = est_power[(ap, ue)];
        }
        for other in 0..k {
            let shared = assign.shares_pilot(ue, other);
            let p_hat_l = powers.pilot_power[other];
            let base = (ue * k + other) * m;
            for ap in 0..m {
                let beta_prime_l = stats.r_prime[(ap, other)];
                let los4_l = stats.l[(ap, other)] * stats.l[(ap, other)];
                let (b_val, e_val) = match estimator {
                    Estimator::Mmse => {
                        let z_k = stats.z[(ap, ue)];
                        let b_val = if other == ue {
                            z_k
                        } else if shared {
                            (p_hat_k * p_hat_l).sqrt() * tau_p * stats.r[(ap, other)]
                                * stats.r[(ap, ue)]
                                / stats.lambda[(ap, ue)]
                        } else {
                            T::zero()
                        };
                        let mut e_val = beta_prime_l * z_k;
                        if other == ue {
                            e_val = e_val - stats.l[(ap, ue)] * stats.l[(ap, ue)];
                        }
                        (b_val, e_val)
                    }
                    Estimator::Lmmse => {
                        let omega_prime_k = stats.omega_prime[(ap, ue)];
                        let lambda_prime_k = stats.lambda_prime[(ap, ue)];
                        let mut b_val = T::zero();
                        let mut e_val = p_hat_k * tau_p * omega_prime_k * beta_prime_l;
                        if shared {
                            b_val = (p_hat_k * p_hat_l).sqrt() * tau_p * beta_prime_l
                                * stats.r_prime[(ap, ue)]
                                / lambda_prime_k;
                            e_val = e_val
                                - p_hat_k * p_hat_l * tau_p * tau_p
                                    * (omega_prime_k / lambda_prime_k)
                                    * los4_l;
                        }
                        (b_val, e_val)
                    }
                    Estimator::Ls => {
                        let lambda_prime_k = stats.lambda_prime[(ap, ue)];
                        let mut b_val = T::zero();
                        let mut e_val = lambda_prime_k * beta_prime_l / (p_hat_k * tau_p);
                        if shared {
                            b_val = (p_hat_l / p_hat_k).sqrt() * beta_prime_l;
                            e_val = e_val - (p_hat_l / p_hat_k) * los4_l;
                        }
                        (b_val, e_val)
                    }
                };
                b[base + ap] = b_val;
                excess[base + ap] = e_val;
            }
        }
    }

    // Γ_k = Σ_l p_l·Γ^(1)_{k,l} − p_k·b_{k,k}·b_{k,k}ᵀ + σ²·diag(Γ^(2)_k).
    // The l=k rank-one cancels exactly, leaving the diagonal core plus one
    // rank-one update per pilot-sharing interferer.
    let sigma2 = powers.noise_ul;
    let mut gamma = Vec::with_capacity(k);
    for ue in 0..k {
        let mut diag = vec![T::zero(); m];
        for other in 0..k {
            let p_l = powers.ul_data_power[other];
            let base = (ue * k + other) * m;
            for ap in 0..m {
                diag[ap] = diag[ap] + p_l * excess[base + ap];
            }
        }
        for ap in 0..m {
            diag[ap] = diag[ap] + sigma2 * gamma2[ue * m + ap];
        }
        let mut rank_one = Vec::new();
        for &other in &assign.cohort[ue] {
            if other == ue || !(powers.ul_data_power[other] > T::zero()) {
                continue;
            }
            let base = (ue * k + other) * m;
            rank_one.push((powers.ul_data_power[other], b[base..base + m].to_vec()));
        }
        gamma.push(QuadForm { diag, rank_one });
    }

    let finite = b.iter().all(|x| x.is_finite())
        && excess.iter().all(|x| x.is_finite())
        && gamma2.iter().all(|x| x.is_finite());
    if !finite {
        return Err(Error::Numerical("non-finite UL moment encountered".into()));
    }

    Ok(MomentSet {
        estimator,
        m,
        k,
        b,
        excess,
        gamma2,
        gamma,
    })
}

/// Moment set for the phase-aware MMSE estimator.
pub fn ul_moments_mmse<T: Real>(
    stats: &EstimatorStatistics<T>,
    powers: &PowerConfig<T>,
    assign: &PilotAssignment,
    frame: &FrameConfig,
) -> Result<MomentSet<T>, Error> {
    ul_moments(Estimator::Mmse, stats, powers, assign, frame)
}

/// Moment set for the LMMSE estimator.
pub fn ul_moments_lmmse<T: Real>(
    stats: &EstimatorStatistics<T>,
    powers: &PowerConfig<T>,
    assign: &PilotAssignment,
    frame: &FrameConfig,
) -> Result<MomentSet<T>, Error> {
    ul_moments(Estimator::Lmmse, stats, powers, assign, frame)
}

/// Moment set for the LS estimator.
pub fn ul_moments_ls<T: Real>(
    stats: &EstimatorStatistics<T>,
    powers: &PowerConfig<T>,
    assign: &PilotAssignment,
    frame: &FrameConfig,
) -> Result<MomentSet<T>, Error> {
    ul_moments(Estimator::Ls, stats, powers, assign, frame)
}

/// Second-layer combining weights for one UE.
#[derive(Debug, Clone, PartialEq)]
pub struct LsfdWeights<T> {
    /// Per-AP weight a_k; all-ones in single-layer mode.
    pub a: Vec<Complex<T>>,
}

/// All-ones weights: single-layer decoding.
pub fn single_layer_weights<T: Real>(m: usize) -> LsfdWeights<T> {
    LsfdWeights {
        a: vec![Complex::new(T::one(), T::zero()); m],
    }
}

/// SINR-optimal LSFD weights a_k = Γ_k^{−1}·b_{k,k}, via a symmetric
/// positive-definite solve (Γ_k is real here, so the weights are too).
pub fn optimal_lsfd<T: Real>(moments: &MomentSet<T>, k: usize) -> Result<LsfdWeights<T>, Error> {
    let dense = moments.gamma(k).densify();
    let x = solve_sym_pd(moments.m, dense.as_slice(), moments.b_kk(k))?;
    Ok(LsfdWeights {
        a: x.into_iter().map(|v| Complex::new(v, T::zero())).collect(),
    })
}

/// Effective UL SINR γ_k = p_k·|aᴴb_{k,k}|² / (aᴴΓ_k·a).
pub fn ul_sinr<T: Real>(
    moments: &MomentSet<T>,
    k: usize,
    weights: &LsfdWeights<T>,
    p_k: T,
) -> Result<T, Error> {
    let b = moments.b_kk(k);
    let dot = b
        .iter()
        .zip(&weights.a)
        .fold(Complex::new(T::zero(), T::zero()), |s, (&bi, a)| {
            s + a.conj() * bi
        });
    let denom = moments.gamma(k).quad(&weights.a);
    if !(denom > T::zero()) || !denom.is_finite() {
        return Err(Error::Degenerate(format!(
            "UL SINR denominator for UE {k} is {denom}"
        )));
    }
    Ok(p_k * dot.norm_sqr() / denom)
}

/// UL SE in bit/s/Hz: (τ_u/τ_c)·log2(1+γ).
pub fn ul_se<T: Real>(sinr: T, frame: &FrameConfig) -> T {
    count::<T>(frame.tau_u) / count::<T>(frame.tau_c) * (T::one() + sinr).log2()
}
