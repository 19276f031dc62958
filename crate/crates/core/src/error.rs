use thiserror::Error;

/// A pair of reactions `(k, l)` where a firing of `k` can drive the intensity
/// of `l` to zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InterruptingPair {
    pub interrupter: usize,
    pub interrupted: usize,
}

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed network, functional or experiment description.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the domain of an operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The approximate process would still admit interruptions.
    #[error("non-interruptive condition violated: {}", describe_pairs(.pairs))]
    NonInterruptive { pairs: Vec<InterruptingPair> },

    /// A path exceeded the configured jump cap.
    #[error("explosion guard tripped: more than {cap} jumps before t = {time}")]
    Explosion { cap: u64, time: f64 },

    /// Probability mass escaping the truncation box exceeded the tolerance.
    #[error("truncation box too small: leaked mass {leaked:.3e} exceeds {tolerance:.1e}; enlarge the box")]
    Truncation { leaked: f64, tolerance: f64 },

    /// An internal invariant failed; indicates a bug or a model outside the
    /// supported class.
    #[error("invariant violation: {0}")]
    Invariant(String),
}

fn describe_pairs(pairs: &[InterruptingPair]) -> String {
    pairs
        .iter()
        .map(|p| format!("reaction {} interrupts reaction {}", p.interrupter + 1, p.interrupted + 1))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
