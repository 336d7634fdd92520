//! Convergence studies and the classical explicit Runge-Kutta comparators.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ivp::IvpProblem;
use crate::scalar::{axpy_real, Scalar};
use crate::scheme::{integrate, SchemeConfig, Trajectory, Variant};

/// Explicit Runge-Kutta comparators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RungeKutta {
    /// Classical fourth-order method.
    Rk4,
    /// Three-stage strong-stability-preserving third-order method.
    SspRk3,
}

impl RungeKutta {
    fn step<S: Scalar>(self, problem: &IvpProblem<S>, t: f64, u: &[S], dt: f64) -> Vec<S> {
        let add = |base: &[S], a: f64, k: &[S]| {
            let mut out = base.to_vec();
            axpy_real(a, k, &mut out);
            out
        };
        match self {
            RungeKutta::Rk4 => {
                let k1 = problem.rhs(t, u);
                let k2 = problem.rhs(t + 0.5 * dt, &add(u, 0.5 * dt, &k1));
                let k3 = problem.rhs(t + 0.5 * dt, &add(u, 0.5 * dt, &k2));
                let k4 = problem.rhs(t + dt, &add(u, dt, &k3));
                let mut out = u.to_vec();
                axpy_real(dt / 6.0, &k1, &mut out);
                axpy_real(dt / 3.0, &k2, &mut out);
                axpy_real(dt / 3.0, &k3, &mut out);
                axpy_real(dt / 6.0, &k4, &mut out);
                out
            }
            RungeKutta::SspRk3 => {
                let u1 = add(u, dt, &problem.rhs(t, u));
                let u1f = add(&u1, dt, &problem.rhs(t + dt, &u1));
                let u2: Vec<S> = u.iter().zip(&u1f).map(|(a, b)| a.scale(0.75) + b.scale(0.25)).collect();
                let u2f = add(&u2, dt, &problem.rhs(t + 0.5 * dt, &u2));
                u.iter()
                    .zip(&u2f)
                    .map(|(a, b)| a.scale(1.0 / 3.0) + b.scale(2.0 / 3.0))
                    .collect()
            }
        }
    }

    /// Fixed-step integration over `[0, T]` on the same grid as
    /// [`integrate`](crate::scheme::integrate).
    pub fn integrate<S: Scalar>(self, problem: &IvpProblem<S>, n_steps: usize) -> Result<Trajectory<S>> {
        if n_steps == 0 {
            return Err(Error::InvalidArgument("number of steps must be >= 1".into()));
        }
        let t_end = problem.t_end();
        let mut times = vec![0.0];
        let mut states = vec![problem.initial().to_vec()];
        for n in 0..n_steps {
            let (t0, t1) = (t_end * n as f64 / n_steps as f64, t_end * (n + 1) as f64 / n_steps as f64);
            let next = self.step(problem, t0, &states[n], t1 - t0);
            times.push(t1);
            states.push(next);
        }
        Ok(Trajectory {
            times,
            states,
            nodal: None,
        })
    }
}

/// Any fixed-step method a convergence study can run.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Sdg(SchemeConfig),
    RungeKutta(RungeKutta),
}

impl Method {
    pub fn integrate<S: Scalar>(&self, problem: &IvpProblem<S>, n_steps: usize) -> Result<Trajectory<S>> {
        match self {
            Method::Sdg(config) => integrate(problem, config, n_steps),
            Method::RungeKutta(rk) => rk.integrate(problem, n_steps),
        }
    }
}

impl From<SchemeConfig> for Method {
    fn from(value: SchemeConfig) -> Self {
        Method::Sdg(value)
    }
}

/// Where the reference endpoint value comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference<S> {
    /// The problem's exact solution at `T`.
    Analytic,
    /// A fine-grid run of a high-order scheme.
    Numeric { config: SchemeConfig, n_steps: usize },
    /// A precomputed value.
    Values(Vec<S>),
}

impl<S: Scalar> Reference<S> {
    /// Degree-9 fine-grid reference: semi-implicit when the problem is
    /// split, implicit otherwise, with `2p+1` sweeps.
    pub fn fine_grid(problem: &IvpProblem<S>, n_steps: usize) -> Self {
        let variant = if problem.has_split() { Variant::SiSdg } else { Variant::ImSdg };
        Reference::Numeric {
            config: SchemeConfig::new(variant, 9, 19),
            n_steps,
        }
    }

    fn describe(&self) -> String {
        match self {
            Reference::Analytic => "analytic".to_string(),
            Reference::Numeric { config, n_steps } => format!(
                "numeric {} p={} K={} steps={}",
                config.variant, config.degree, config.iterations, n_steps
            ),
            Reference::Values(_) => "supplied values".to_string(),
        }
    }

    fn resolve(&self, problem: &IvpProblem<S>) -> Result<Vec<S>> {
        match self {
            Reference::Analytic => problem
                .exact(problem.t_end())
                .ok_or_else(|| Error::InvalidArgument(format!("problem '{}' has no exact solution", problem.name()))),
            Reference::Numeric { config, n_steps } => Ok(integrate(problem, config, *n_steps)?.final_state().to_vec()),
            Reference::Values(v) => Ok(v.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub n_steps: usize,
    /// `|u_N - u_ref|` per component at `T`.
    pub errors: Vec<f64>,
    /// Observed order per component relative to the previous row.
    pub orders: Vec<Option<f64>>,
}

impl ConvergenceRow {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub reference: String,
}

impl ConvergenceTable {
    /// Observed orders of component `comp` between consecutive rows whose
    /// errors both exceed `floor`.
    pub fn orders_above(&self, comp: usize, floor: f64) -> Vec<f64> {
        self.rows
            .windows(2)
            .filter(|w| w[0].errors[comp] > floor && w[1].errors[comp] > floor)
            .filter_map(|w| w[1].orders[comp])
            .collect()
    }

    pub fn errors(&self, comp: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.errors[comp]).collect()
    }
}

/// `log(e_prev / e_cur) / log(dt_prev / dt_cur)`, undefined when either
/// error is zero or non-finite.
pub fn observed_order(e_prev: f64, e_cur: f64, dt_prev: f64, dt_cur: f64) -> Option<f64> {
    let ok = |e: f64| e > 0.0 && e.is_finite();
    (ok(e_prev) && ok(e_cur)).then(|| (e_prev / e_cur).ln() / (dt_prev / dt_cur).ln())
}

/// Number of uniform steps of size `dt` that cover `[0, t_end]` exactly.
pub fn steps_for(t_end: f64, dt: f64) -> Result<usize> {
    let n = (t_end / dt).round();
    if !(dt > 0.0) || n < 1.0 || ((n * dt - t_end).abs() > 1e-9 * t_end) {
        return Err(Error::InvalidArgument(format!("step {dt} does not divide the interval [0, {t_end}]")));
    }
    Ok(n as usize)
}

/// Integrates at each step size (rows run concurrently) and measures the
/// endpoint error against `reference`.
pub fn run_convergence<S: Scalar>(
    problem: &IvpProblem<S>,
    method: &Method,
    dt_list: &[f64],
    reference: &Reference<S>,
) -> Result<ConvergenceTable> {
    if dt_list.is_empty() {
        return Err(Error::InvalidArgument("empty step-size list".into()));
    }
    if dt_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("step sizes must be strictly decreasing".into()));
    }
    let steps = dt_list
        .iter()
        .map(|&dt| steps_for(problem.t_end(), dt))
        .collect::<Result<Vec<_>>>()?;
    let exact = reference.resolve(problem)?;
    let finals = steps
        .par_iter()
        .enumerate()
        .map(|(row, &n)| {
            method
                .integrate(problem, n)
                .map(|t| t.final_state().to_vec())
                .map_err(|e| e.map_newton(|nf| nf.step = nf.step.or(Some(row))))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(dt_list.len());
    for (i, (u, (&dt, &n))) in finals.iter().zip(dt_list.iter().zip(&steps)).enumerate() {
        let errors: Vec<f64> = u.iter().zip(&exact).map(|(a, b)| (*a - *b).modulus()).collect();
        let orders = match i {
            0 => vec![None; errors.len()],
            _ => {
                let prev = &rows[i - 1];
                errors
                    .iter()
                    .zip(&prev.errors)
                    .map(|(e, ep)| observed_order(*ep, *e, prev.dt, dt))
                    .collect()
            }
        };
        rows.push(ConvergenceRow {
            dt,
            n_steps: n,
            errors,
            orders,
        });
    }
    Ok(ConvergenceTable {
        rows,
        reference: reference.describe(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;

    #[test]
    fn order_helper() {
        assert!((observed_order(1e-3, 1.25e-4, 0.2, 0.1).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(observed_order(0.0, 0.0, 0.2, 0.1), None);
        assert_eq!(observed_order(1e-3, 0.0, 0.2, 0.1), None);
    }

    #[test]
    fn steps_must_divide_interval() {
        assert_eq!(steps_for(1.0, 0.125).unwrap(), 8);
        assert_eq!(steps_for(0.5, 0.025).unwrap(), 20);
        assert!(steps_for(1.0, 0.3).is_err());
    }

    #[test]
    fn rk4_is_fourth_order() {
        let p = problems::dahlquist(-1.0);
        let t = run_convergence(&p, &Method::RungeKutta(RungeKutta::Rk4), &[0.1, 0.05, 0.025], &Reference::Analytic).unwrap();
        for o in t.orders_above(0, 1e-14) {
            assert!((o - 4.0).abs() < 0.1);
        }
    }

    #[test]
    fn ssprk3_is_third_order() {
        let p = problems::dahlquist(-1.0);
        let t = run_convergence(&p, &Method::RungeKutta(RungeKutta::SspRk3), &[0.1, 0.05, 0.025], &Reference::Analytic).unwrap();
        for o in t.orders_above(0, 1e-14) {
            assert!((o - 3.0).abs() < 0.1);
        }
    }

    #[test]
    fn errors_decrease_with_exact_reference() {
        let p = problems::dahlquist(-1.0);
        let cfg = SchemeConfig::new(Variant::ImSdg, 1, 2);
        let t = run_convergence(&p, &cfg.into(), &[0.5, 0.25, 0.125, 0.0625], &Reference::Analytic).unwrap();
        let e = t.errors(0);
        assert!(e.windows(2).all(|w| w[1] < w[0]));
        assert!(t.rows[0].orders[0].is_none());
    }

    #[test]
    fn zero_errors_have_no_order() {
        let p = problems::dahlquist(0.0);
        let cfg = SchemeConfig::new(Variant::ExSdg, 2, 4);
        let t = run_convergence(&p, &cfg.into(), &[0.5, 0.25], &Reference::Analytic).unwrap();
        assert_eq!(t.rows[1].errors, vec![0.0]);
        assert_eq!(t.rows[1].orders, vec![None]);
    }

    #[test]
    fn rejects_non_decreasing_steps() {
        let p = problems::dahlquist(-1.0);
        let cfg: Method = SchemeConfig::new(Variant::ExSdg, 2, 4).into();
        assert!(run_convergence(&p, &cfg, &[0.25, 0.5], &Reference::Analytic).is_err());
        assert!(run_convergence(&p, &cfg, &[], &Reference::Analytic).is_err());
    }
}
