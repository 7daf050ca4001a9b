use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite field encountered at t = {t}")]
    Instability { t: f64 },

    #[error("maximum principle violated at t = {t}: rho in [{min}, {max}]")]
    MaxPrinciple { t: f64, min: f64, max: f64 },

    #[error("pressure solve did not converge: {iterations} iterations, relative residual {residual:e}")]
    PoissonNonConvergence { iterations: usize, residual: f64 },

    #[error("at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("quadrature did not converge: estimated error {error:e}")]
    Quadrature { error: f64 },

    #[error("interpolation inequality violated: ratio {ratio}")]
    InequalityViolation { ratio: f64 },

    #[error("malformed profile: {0}")]
    MalformedProfile(String),

    #[error("bad snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Attaches the simulation time at which the error occurred.
    pub fn at_time(self, t: f64) -> Error {
        match self {
            e @ (Error::AtTime { .. } | Error::Instability { .. } | Error::MaxPrinciple { .. }) => e,
            e => Error::AtTime { t, source: Box::new(e) },
        }
    }
}

pub(crate) fn check_unit(what: &'static str, s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: s,
            domain: "[0, 1]",
        })
    }
}
