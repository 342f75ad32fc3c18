//! Per-UE spectral-efficiency rows shared by the uplink and downlink paths.

use crate::channel::FrameConfig;
use crate::num::{count, Real};
use crate::Estimator;

/// Transmission scheme a spectral-efficiency figure refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Uplink with equal large-scale combining weights.
    UlSingle,
    /// Uplink with optimal large-scale fading decoding.
    UlLsfd,
    /// Downlink with phase-aligned joint transmission.
    DlCoherent,
    /// Downlink with per-AP independent data streams.
    DlNonCoherent,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::UlSingle,
        Scheme::UlLsfd,
        Scheme::DlCoherent,
        Scheme::DlNonCoherent,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::UlSingle => "ul-single",
            Scheme::UlLsfd => "ul-lsfd",
            Scheme::DlCoherent => "dl-coherent",
            Scheme::DlNonCoherent => "dl-noncoherent",
        }
    }

    pub fn is_uplink(self) -> bool {
        matches!(self, Scheme::UlSingle | Scheme::UlLsfd)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One UE's SINR and spectral efficiency under a scheme and estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeReport<T> {
    pub estimator: Estimator,
    pub scheme: Scheme,
    /// Fraction of the coherence block carrying payload in this direction.
    pub prelog: T,
    pub sinr: T,
    /// Spectral efficiency in bit/s/Hz.
    pub se: T,
    /// Optimal large-scale decoding weights require the channel statistics
    /// that the least-squares estimator exists to avoid, so that pairing is
    /// flagged for downstream consumers.
    pub lsfd_impractical: bool,
}

impl<T: Real> SeReport<T> {
    /// Builds a row from a SINR, deriving pre-log and SE from the frame.
    pub fn new(estimator: Estimator, scheme: Scheme, sinr: T, frame: &FrameConfig) -> Self {
        let payload = if scheme.is_uplink() {
            frame.tau_u
        } else {
            frame.tau_d
        };
        let prelog = count::<T>(payload) / count::<T>(frame.tau_c);
        SeReport {
            estimator,
            scheme,
            prelog,
            sinr,
            se: prelog * (T::one() + sinr).log2(),
            lsfd_impractical: scheme == Scheme::UlLsfd && estimator == Estimator::Ls,
        }
    }
}
