use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// An implicit node (or DG system) solve that did not reach its tolerance.
///
/// Location fields are filled in as the error propagates outward: the node
/// solver knows only the residual, the sweep adds the node, the stepper adds
/// the iteration and interval start, the time loop adds the step index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewtonFailure {
    pub residual: f64,
    pub iterations: usize,
    pub node: Option<usize>,
    pub sweep: Option<usize>,
    pub level: Option<usize>,
    pub t: Option<f64>,
    pub step: Option<usize>,
}

impl NewtonFailure {
    pub fn new(residual: f64, iterations: usize) -> Self {
        Self {
            residual,
            iterations,
            ..Default::default()
        }
    }
}

impl fmt::Display for NewtonFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "newton solve failed after {} iterations (residual {:e})",
            self.iterations, self.residual
        )?;
        if let Some(step) = self.step {
            write!(f, " at step {step}")?;
        }
        if let Some(t) = self.t {
            write!(f, " t_n={t}")?;
        }
        if let Some(level) = self.level {
            write!(f, " level {level}")?;
        }
        if let Some(sweep) = self.sweep {
            write!(f, " sweep {sweep}")?;
        }
        if let Some(node) = self.node {
            write!(f, " node {node}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("polynomial degree {0} outside supported range 0..={max}", max = crate::radau::MAX_DEGREE)]
    DegreeOutOfRange(usize),
    #[error("singular matrix encountered ({0})")]
    Singular(&'static str),
    #[error("semi-implicit sweep requires a problem with a stiff/non-stiff splitting")]
    MissingSplit,
    #[error("{0}")]
    Newton(NewtonFailure),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Applies `f` to the carried [`NewtonFailure`], if any.
    pub(crate) fn map_newton(self, f: impl FnOnce(&mut NewtonFailure)) -> Self {
        match self {
            Error::Newton(mut nf) => {
                f(&mut nf);
                Error::Newton(nf)
            }
            other => other,
        }
    }
}

impl From<NewtonFailure> for Error {
    fn from(value: NewtonFailure) -> Self {
        Error::Newton(value)
    }
}
