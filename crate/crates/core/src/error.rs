use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("receivers {i} and {j} overlap: centre separation {separation} <= 2a = {limit}")]
    Overlap {
        i: usize,
        j: usize,
        separation: f64,
        limit: f64,
    },

    #[error("transmitter lies inside receiver {index}: r = {distance} <= a = {radius}")]
    TransmitterInside { index: usize, distance: f64, radius: f64 },

    #[error("receiver index {index} out of range for a system of {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("pairwise distance needs two distinct receivers, got i = j = {0}")]
    SameIndex(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("operation requires {expected} receivers, system has {actual}")]
    WrongCount { expected: usize, actual: usize },

    #[error("singular channel matrix at s = {re} + {im}i")]
    SingularMatrix { re: f64, im: f64 },

    #[error("recursive evaluation limited to {limit} receivers, got {n}")]
    RecursionDepth { n: usize, limit: usize },

    #[error("transform evaluation failed at s = {re} + {im}i: {reason}")]
    Evaluation { re: f64, im: f64, reason: String },

    #[error("inverse Laplace methods disagree at t = {t}: talbot = {talbot}, stehfest = {stehfest}")]
    Disagreement { t: f64, talbot: f64, stehfest: f64 },

    #[error("series did not reach tolerance after {terms} terms (last layer bound {last_bound:e})")]
    NonConvergence { terms: usize, last_bound: f64 },

    #[error("composition enumeration exceeds budget: {needed} > {budget}")]
    CombinatorialBlowup { needed: u128, budget: u128 },

    #[error("array gain needs equidistant receivers: r_{index} = {distance} differs from r_0 = {reference}")]
    AsymmetricSystem {
        index: usize,
        distance: f64,
        reference: f64,
    },

    #[error("time {t} is outside the recorded grid [0, {t_max}]")]
    OutsideGrid { t: f64, t_max: f64 },
}
