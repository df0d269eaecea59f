use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("product space of ({n_a_max}+1) x ({n_b_max}+1) states is not addressable")]
    Sizing { n_a_max: usize, n_b_max: usize },

    #[error("coherent state with |alpha|^2 = {mean:.6} needs n_max >= {required}, got {n_max} (tail weight {tail_weight:.3e})")]
    Truncation {
        mean: f64,
        n_max: usize,
        required: usize,
        tail_weight: f64,
    },

    #[error("initial state does not fit the basis: {0}")]
    Spec(String),

    #[error("operands live on different bases")]
    BasisMismatch,

    #[error("dense reference limited to dimension {max}, got {dim}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("integration failed at t = {t:.6e}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("growth fit failed: {0}")]
    Fit(String),

    #[error("truncation certification failed: {0}")]
    Certification(String),

    #[error("invalid input: {0}")]
    Input(String),
}
