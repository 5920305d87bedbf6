use thiserror::Error;

/// Errors raised by the simulation engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// |ψ|² fell below the node floor; the guidance law is 0/0 here.
    #[error("wave function node at {at:?} (|psi|^2 = {density:e} below floor {floor:e})")]
    Node { at: Vec<f64>, density: f64, floor: f64 },

    #[error("phase step {step:.3} rad exceeds the unwrapping limit")]
    PhaseJump { step: f64 },

    #[error("grid of {points} points per dimension under-resolves the mode comb (need more than {required})")]
    Nyquist { points: usize, required: usize },

    #[error("basis size {size} exceeds the configured limit {limit}")]
    BasisTooLarge { size: usize, limit: usize },

    #[error("step size underflow at parameter {at}")]
    StepUnderflow { at: f64 },

    #[error("too many integration steps ({steps})")]
    TooManySteps { steps: usize },

    #[error("infinite velocity: denominator {denominator:e} vanishes")]
    InfiniteVelocity { denominator: f64 },

    #[error("vacuum survival amplitude vanishes at t = {t}; its phase is undefined")]
    PhaseUndefined { t: f64 },

    #[error("effectivity undefined: every particle-number sector vanishes at this configuration")]
    UndefinedEffectivity,

    #[error("nonrelativistic limit not applicable: max |k|/m = {ratio} > {limit}")]
    NotNonrelativistic { ratio: f64, limit: f64 },

    #[error("channels overlap: max overlap {overlap:e} above threshold {threshold:e}")]
    ChannelOverlap { overlap: f64, threshold: f64 },

    #[error("{hits} of {total} samples ended between pointer channels")]
    GapHits { hits: usize, total: usize },

    #[error("truncation under-resolved: doubling n_max shifts the result by {shift:e} (limit {limit:e})")]
    UnderResolved { shift: f64, limit: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Invalid(_) | Error::Nyquist { .. } | Error::NotNonrelativistic { .. } | Error::BasisTooLarge { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
