use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("series did not converge within {terms} terms (last term magnitude {last_term:e})")]
    Truncation { terms: usize, last_term: f64 },

    #[error(
        "quadrature did not reach tolerance {tol:e} within {intervals} subintervals \
         (error estimate {estimate:e})"
    )]
    Quadrature {
        tol: f64,
        intervals: usize,
        estimate: f64,
    },

    #[error(
        "relative error {eps:e} not achievable for harmonic {h} within {cap} moments \
         (best residual {best:e})"
    )]
    NotAchievable {
        h: u32,
        eps: f64,
        cap: usize,
        best: f64,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
