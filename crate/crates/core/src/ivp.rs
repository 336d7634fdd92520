//! Initial value problems `u' = f(t, u)` on `[0, T]`, optionally split as
//! `f = f_N + f_S` into a non-stiff (explicit) and a stiff (implicit) part.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub type RhsFn<S> = Arc<dyn Fn(f64, &[S], &mut [S]) + Send + Sync>;
pub type JacobianFn<S> = Arc<dyn Fn(f64, &[S]) -> Matrix<S> + Send + Sync>;
pub type ExactFn<S> = Arc<dyn Fn(f64) -> Vec<S> + Send + Sync>;

/// Which part of the right-hand side an evaluation or implicit solve uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Full,
    NonStiff,
    Stiff,
}

#[derive(Clone)]
struct Split<S> {
    nonstiff: RhsFn<S>,
    stiff: RhsFn<S>,
    stiff_jacobian: Option<JacobianFn<S>>,
    stiff_affine: bool,
}

/// An IVP description. Cloning is cheap; all callbacks are shared and must
/// be reentrant because scans evaluate them from several threads.
#[derive(Clone)]
pub struct IvpProblem<S> {
    name: String,
    initial: Vec<S>,
    t_end: f64,
    rhs: RhsFn<S>,
    jacobian: Option<JacobianFn<S>>,
    affine: bool,
    split: Option<Split<S>>,
    exact: Option<ExactFn<S>>,
}

impl<S> fmt::Debug for IvpProblem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IvpProblem")
            .field("name", &self.name)
            .field("dim", &self.initial.len())
            .field("t_end", &self.t_end)
            .field("split", &self.split.is_some())
            .field("jacobian", &self.jacobian.is_some())
            .field("affine", &self.affine)
            .finish()
    }
}

impl<S: Scalar> IvpProblem<S> {
    pub fn new(
        name: impl Into<String>,
        initial: Vec<S>,
        t_end: f64,
        rhs: impl Fn(f64, &[S], &mut [S]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if initial.is_empty() {
            return Err(Error::InvalidArgument("problem dimension must be >= 1".into()));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidArgument(format!("final time must be positive, got {t_end}")));
        }
        Ok(Self {
            name: name.into(),
            initial,
            t_end,
            rhs: Arc::new(rhs),
            jacobian: None,
            affine: false,
            split: None,
            exact: None,
        })
    }

    pub fn with_jacobian(mut self, jac: impl Fn(f64, &[S]) -> Matrix<S> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    /// Declares `f` affine in `u`, so a single Newton step solves any
    /// implicit node equation exactly.
    pub fn affine(mut self) -> Self {
        self.affine = true;
        self
    }

    pub fn with_split(
        mut self,
        nonstiff: impl Fn(f64, &[S], &mut [S]) + Send + Sync + 'static,
        stiff: impl Fn(f64, &[S], &mut [S]) + Send + Sync + 'static,
    ) -> Self {
        self.split = Some(Split {
            nonstiff: Arc::new(nonstiff),
            stiff: Arc::new(stiff),
            stiff_jacobian: None,
            stiff_affine: false,
        });
        self
    }

    /// Analytic Jacobian of the stiff part; ignored without a split.
    pub fn with_stiff_jacobian(mut self, jac: impl Fn(f64, &[S]) -> Matrix<S> + Send + Sync + 'static) -> Self {
        if let Some(split) = self.split.as_mut() {
            split.stiff_jacobian = Some(Arc::new(jac));
        }
        self
    }

    pub fn stiff_affine(mut self) -> Self {
        if let Some(split) = self.split.as_mut() {
            split.stiff_affine = true;
        }
        self
    }

    pub fn with_exact(mut self, exact: impl Fn(f64) -> Vec<S> + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(exact));
        self
    }

    pub fn with_initial(mut self, initial: Vec<S>) -> Result<Self> {
        if initial.len() != self.initial.len() {
            return Err(Error::InvalidArgument(format!(
                "initial value has dimension {}, expected {}",
                initial.len(),
                self.initial.len()
            )));
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn with_t_end(mut self, t_end: f64) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidArgument(format!("final time must be positive, got {t_end}")));
        }
        self.t_end = t_end;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    pub fn initial(&self) -> &[S] {
        &self.initial
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn has_split(&self) -> bool {
        self.split.is_some()
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn exact(&self, t: f64) -> Option<Vec<S>> {
        self.exact.as_ref().map(|f| f(t))
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn is_affine(&self, part: Part) -> bool {
        match part {
            Part::Full => self.affine,
            Part::Stiff => self.split.as_ref().is_some_and(|s| s.stiff_affine),
            Part::NonStiff => false,
        }
    }

    pub fn eval_into(&self, part: Part, t: f64, u: &[S], out: &mut [S]) -> Result<()> {
        match part {
            Part::Full => (self.rhs)(t, u, out),
            Part::NonStiff => (self.split.as_ref().ok_or(Error::MissingSplit)?.nonstiff)(t, u, out),
            Part::Stiff => (self.split.as_ref().ok_or(Error::MissingSplit)?.stiff)(t, u, out),
        }
        Ok(())
    }

    /// Full right-hand side `f(t, u)`.
    pub fn rhs(&self, t: f64, u: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); u.len()];
        (self.rhs)(t, u, &mut out);
        out
    }

    pub fn eval(&self, part: Part, t: f64, u: &[S]) -> Result<Vec<S>> {
        let mut out = vec![S::zero(); u.len()];
        self.eval_into(part, t, u, &mut out)?;
        Ok(out)
    }

    /// Jacobian of the requested part: analytic when supplied, otherwise
    /// forward differences with the default step rule.
    pub fn jacobian(&self, part: Part, t: f64, u: &[S]) -> Result<Matrix<S>> {
        let analytic = match part {
            Part::Full => self.jacobian.clone(),
            Part::Stiff => self.split.as_ref().ok_or(Error::MissingSplit)?.stiff_jacobian.clone(),
            Part::NonStiff => {
                self.split.as_ref().ok_or(Error::MissingSplit)?;
                None
            }
        };
        match analytic {
            Some(jac) => Ok(jac(t, u)),
            None => {
                let f = |t: f64, u: &[S], out: &mut [S]| {
                    self.eval_into(part, t, u, out).expect("part checked above")
                };
                Ok(finite_difference_jacobian(f, t, u, None))
            }
        }
    }

    /// Max-norm of `f_N + f_S - f` at `(t, u)`.
    pub fn split_defect(&self, t: f64, u: &[S]) -> Result<f64> {
        let full = self.eval(Part::Full, t, u)?;
        let n = self.eval(Part::NonStiff, t, u)?;
        let s = self.eval(Part::Stiff, t, u)?;
        Ok(full
            .iter()
            .zip(n.iter().zip(&s))
            .fold(0.0, |acc, (f, (a, b))| acc.max((*a + *b - *f).modulus())))
    }
}

/// Forward-difference Jacobian, one column per perturbed component.
///
/// With `step = None` the perturbation of component `j` is
/// `sqrt(eps) * (1 + |u_j|)`.
pub fn finite_difference_jacobian<S: Scalar>(
    f: impl Fn(f64, &[S], &mut [S]),
    t: f64,
    u: &[S],
    step: Option<f64>,
) -> Matrix<S> {
    let d = u.len();
    let mut f0 = vec![S::zero(); d];
    f(t, u, &mut f0);
    let mut jac = Matrix::zeros(d, d);
    let mut up = u.to_vec();
    let mut fp = vec![S::zero(); d];
    let sqrt_eps = f64::EPSILON.sqrt();
    for j in 0..d {
        let h = step.unwrap_or(sqrt_eps * (1.0 + u[j].modulus()));
        up[j] = u[j] + S::from_real(h);
        f(t, &up, &mut fp);
        for i in 0..d {
            jac[(i, j)] = (fp[i] - f0[i]).scale(1.0 / h);
        }
        up[j] = u[j];
    }
    jac
}

/// Jacobian of the full right-hand side. Uses the analytic Jacobian when the
/// problem carries one, otherwise forward differences with step `h_fd`.
pub fn numerical_jacobian<S: Scalar>(problem: &IvpProblem<S>, t: f64, u: &[S], h_fd: f64) -> Result<Matrix<S>> {
    if !(h_fd > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h_fd}")));
    }
    if let Some(jac) = &problem.jacobian {
        return Ok(jac(t, u));
    }
    Ok(finite_difference_jacobian(|t, u, out| (problem.rhs)(t, u, out), t, u, Some(h_fd)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;
    use proptest::prelude::*;

    #[test]
    fn linear_jacobian() {
        let p = IvpProblem::new("lin", vec![1.0], 1.0, |_, u: &[f64], out: &mut [f64]| out[0] = -3.5 * u[0]).unwrap();
        let j = numerical_jacobian(&p, 0.0, &[0.7], 1e-7).unwrap();
        assert!((j[(0, 0)] + 3.5).abs() < 1e-7);
    }

    #[test]
    fn constant_rhs_has_zero_jacobian() {
        let p = IvpProblem::new("c", vec![0.0, 0.0], 1.0, |_, _: &[f64], out: &mut [f64]| {
            out[0] = 2.0;
            out[1] = -1.0;
        })
        .unwrap();
        let j = p.jacobian(Part::Full, 0.3, &[1.0, 5.0]).unwrap();
        assert!(j.max_abs() <= 1e-10);
    }

    #[test]
    fn vanderpol_fd_matches_hand_jacobian() {
        let eps = 0.1;
        let (u, v) = (2.0, -2.0 / 3.0);
        let hand = [[0.0, 1.0], [(-1.0 - 2.0 * u * v) / eps, (1.0 - u * u) / eps]];
        let vdp = problems::vanderpol(eps).unwrap();
        let f = |t: f64, x: &[f64], out: &mut [f64]| vdp.eval_into(Part::Full, t, x, out).unwrap();
        let fd = finite_difference_jacobian(f, 0.0, &[u, v], None);
        for i in 0..2 {
            for j in 0..2 {
                assert!((fd[(i, j)] - hand[i][j]).abs() <= 1e-6 * (1.0 + 30.0), "{i}{j}");
            }
        }
        // and the analytic one agrees exactly with the hand formula
        let an = vdp.jacobian(Part::Full, 0.0, &[u, v]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((an[(i, j)] - hand[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_bad_descriptions() {
        assert!(IvpProblem::<f64>::new("x", vec![], 1.0, |_, _, _| {}).is_err());
        assert!(IvpProblem::new("x", vec![1.0], 0.0, |_, _: &[f64], _: &mut [f64]| {}).is_err());
        let p = IvpProblem::new("x", vec![1.0], 1.0, |_, _: &[f64], _: &mut [f64]| {}).unwrap();
        assert_eq!(p.eval(Part::Stiff, 0.0, &[1.0]).unwrap_err(), Error::MissingSplit);
        assert!(numerical_jacobian(&p, 0.0, &[1.0], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn vanderpol_split_is_consistent(u in -3.0f64..3.0, v in -3.0f64..3.0, t in 0.0f64..1.0, eps in 1e-3f64..1.0) {
            let p = problems::vanderpol(eps).unwrap();
            prop_assert!(p.split_defect(t, &[u, v]).unwrap() <= 1e-12 * (1.0 + 1.0 / eps));
        }

        #[test]
        fn fd_jacobian_close_to_analytic(u in -2.5f64..2.5, v in -2.5f64..2.5) {
            let p = problems::vanderpol(0.5).unwrap();
            let an = p.jacobian(Part::Full, 0.0, &[u, v]).unwrap();
            let f = |t: f64, x: &[f64], out: &mut [f64]| p.eval_into(Part::Full, t, x, out).unwrap();
            let fd = finite_difference_jacobian(f, 0.0, &[u, v], None);
            prop_assert!(fd.max_abs_diff(&an) <= 1e-5 * (1.0 + an.max_abs()));
        }
    }
}
