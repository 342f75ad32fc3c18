//! Closed-form spectral-efficiency analysis of cell-free massive MIMO over
//! Rician fading whose line-of-sight phases rotate independently in every
//! coherence block.
//!
//! A set of M single-antenna access points jointly serves K single-antenna
//! UEs over a channel h = h̄·e^{jφ} + g, where h̄ is the deterministic
//! line-of-sight amplitude, φ is uniform on [−π, π) and unknown a priori,
//! and g isCN(0, β) scattering. The crate builds random network instances
//! with wraparound geometry and correlated shadowing, derives the exact
//! statistics of three pilot-based channel estimators (phase-aware MMSE,
//! linear MMSE, least-squares), and turns them into closed-form uplink and
//! downlink SINRs under the use-and-then-forget bound: uplink with
//! single-layer or optimal large-scale fading decoding, downlink with
//! coherent or non-coherent joint transmission. A Monte Carlo oracle
//! re-estimates every expectation by simulation so each closed form can be
//! validated against its own sampling error.
//!
//! Numerics are generic over the scalar type through [`num::Real`]; the
//! `*64` aliases at the crate root pin the common double-precision case.

pub mod channel;
pub mod downlink;
pub mod geometry;
pub mod linalg;
pub mod mat;
pub mod montecarlo;
pub mod num;
pub mod report;
pub mod rng;
pub mod stats;
pub mod uplink;

/// Pilot-based channel estimator family.
///
/// All three share the same pilot observation; they differ in how much
/// prior knowledge they use. `Mmse` knows the line-of-sight component and
/// the current phase, `Lmmse` knows only second-order statistics, and `Ls`
/// knows nothing beyond the pilot power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Mmse,
    Lmmse,
    Ls,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Mmse, Estimator::Lmmse, Estimator::Ls];

    pub fn label(self) -> &'static str {
        match self {
            Estimator::Mmse => "mmse",
            Estimator::Lmmse => "lmmse",
            Estimator::Ls => "ls",
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Errors surfaced by constructors and closed-form evaluations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inputs violate a structural precondition (dimensions, ranges).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// A formula was evaluated outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical routine lost too much precision to continue.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A quantity that must be positive came out zero or negative.
    #[error("degenerate quantity: {0}")]
    Degenerate(String),
}

pub type AreaSpec64 = geometry::AreaSpec<f64>;
pub type ShadowModel64 = geometry::ShadowModel<f64>;
pub type NetworkInstance64 = geometry::NetworkInstance<f64>;
pub type PowerConfig64 = channel::PowerConfig<f64>;
pub type ChannelRealization64 = channel::ChannelRealization<f64>;
pub type EstimatorStatistics64 = stats::EstimatorStatistics<f64>;
pub type MomentSet64 = uplink::MomentSet<f64>;
pub type LsfdWeights64 = uplink::LsfdWeights<f64>;
pub type DlPowerAllocation64 = downlink::DlPowerAllocation<f64>;
pub type McEstimate64 = montecarlo::McEstimate<f64>;
pub type McUlMoments64 = montecarlo::McUlMoments<f64>;
pub type ValidationCheck64 = montecarlo::ValidationCheck<f64>;
pub type SeReport64 = report::SeReport<f64>;
