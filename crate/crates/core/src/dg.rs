//! The fully implicit nodal DG step, i.e. the fixed point that every sweep
//! converges to.

use num_complex::Complex64;

use crate::error::{Error, NewtonFailure, Result};
use crate::ivp::{IvpProblem, Part};
use crate::linalg::Matrix;
use crate::radau::{operators, OperatorSet};
use crate::scalar::{max_norm, Scalar};
use crate::scheme::{init_predictor, Init, NewtonOptions, SchemeConfig, SweepState, Variant};

/// `L U + (Δt/2) diag(ω) F(U) + B`, one vector per node.
#[derive(Debug, Clone, PartialEq)]
pub struct DgResidual<S> {
    pub value: Vec<Vec<S>>,
}

impl<S: Scalar> DgResidual<S> {
    pub fn max_norm(&self) -> f64 {
        self.value.iter().map(|v| max_norm(v)).fold(0.0, f64::max)
    }
}

/// Residual of the DG system (with optional FAS correction `τ`, which enters
/// as `-L τ`) for the nodal values and cached `F` of `state`.
pub fn dg_residual<S: Scalar>(state: &SweepState<S>, ops: &OperatorSet) -> DgResidual<S> {
    let n = ops.size();
    let d = state.u_n.len();
    let h = 0.5 * state.dt;
    let w = ops.weights();
    let value = (0..n)
        .map(|i| {
            let mut r = vec![S::zero(); d];
            for j in 0..n {
                let lij = ops.l[(i, j)];
                for k in 0..d {
                    r[k] += state.nodes[j][k].scale(lij);
                    if let Some(tau) = &state.tau {
                        r[k] -= tau[j][k].scale(lij);
                    }
                }
            }
            for k in 0..d {
                r[k] += state.f[i][k].scale(h * w[i]) + state.u_n[k].scale(ops.boundary[i]);
            }
            r
        })
        .collect();
    DgResidual { value }
}

/// Solves the nodal DG system on `[t_n, t_n + dt]` by Newton's method,
/// starting from the implicit Euler-march predictor.
pub fn dg_step_newton<S: Scalar>(
    problem: &IvpProblem<S>,
    p: usize,
    u_n: &[S],
    t_n: f64,
    dt: f64,
    newton: &NewtonOptions,
) -> Result<SweepState<S>> {
    let ops = operators(p)?;
    let config = SchemeConfig::new(Variant::ImSdg, p, 0)
        .with_init(Init::EulerMarch)
        .with_newton(*newton);
    let state = init_predictor(problem, &config, &ops, u_n, t_n, dt)?;
    dg_newton_from(problem, &ops, state, newton)
}

/// Newton iteration on the (possibly τ-corrected) DG system from a given
/// starting state.
pub fn dg_newton_from<S: Scalar>(
    problem: &IvpProblem<S>,
    ops: &OperatorSet,
    mut state: SweepState<S>,
    newton: &NewtonOptions,
) -> Result<SweepState<S>> {
    let n = ops.size();
    let d = state.u_n.len();
    let h = 0.5 * state.dt;
    let w = ops.weights();
    let times = state.times(ops);
    let affine = problem.is_affine(Part::Full);
    let mut res_norm = f64::INFINITY;
    for it in 0..newton.max_iter {
        let residual = dg_residual(&state, ops);
        res_norm = residual.max_norm();
        if !res_norm.is_finite() {
            break;
        }
        if res_norm <= newton.tol {
            return Ok(state);
        }
        let mut jac = Matrix::zeros(n * d, n * d);
        for m in 0..n {
            let jf = problem.jacobian(Part::Full, times[m], &state.nodes[m])?;
            for j in 0..n {
                for i in 0..d {
                    jac[(m * d + i, j * d + i)] += S::from_real(ops.l[(m, j)]);
                }
            }
            for i in 0..d {
                for k in 0..d {
                    jac[(m * d + i, m * d + k)] += jf[(i, k)].scale(h * w[m]);
                }
            }
        }
        let rhs: Vec<S> = residual.value.concat();
        let delta = jac
            .solve(&rhs)
            .map_err(|_| Error::from(NewtonFailure::new(res_norm, it + 1)))?;
        for m in 0..n {
            for i in 0..d {
                state.nodes[m][i] -= delta[m * d + i];
            }
        }
        state.refresh(problem, ops, state.f_split.is_some())?;
        if affine {
            return Ok(state);
        }
    }
    let final_res = dg_residual(&state, ops).max_norm();
    if final_res <= newton.tol {
        return Ok(state);
    }
    Err(NewtonFailure::new(res_norm.min(final_res), newton.max_iter).into())
}

/// DG nodal solution of `u' = λ u` on one step: `(L + λ(Δt/2) M) U = -u_n b`.
pub fn dg_linear_step<S: Scalar>(p: usize, lambda: S, dt: f64, u_n: S) -> Result<Vec<S>> {
    let ops = operators(p)?;
    let n = ops.size();
    let h = 0.5 * dt;
    let w = ops.weights();
    let a = Matrix::from_fn(n, n, |i, j| {
        let diag = if i == j { lambda.scale(h * w[i]) } else { S::zero() };
        S::from_real(ops.l[(i, j)]) + diag
    });
    let rhs: Vec<S> = ops.boundary.iter().map(|b| -u_n.scale(*b)).collect();
    a.solve(&rhs)
}

/// Amplification factor of the converged DG scheme, `u(Δt) = Am(λ) u(0)`.
pub fn dg_amplification(p: usize, lambda: Complex64, dt: f64) -> Result<Complex64> {
    let u = dg_linear_step(p, lambda, dt, Complex64::from_real(1.0))?;
    Ok(*u.last().expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;

    #[test]
    fn dahlquist_p1_dt1_is_8_11_and_4_11() {
        let u = dg_linear_step(1, -1.0, 1.0, 1.0).unwrap();
        assert!((u[0] - 8.0 / 11.0).abs() < 1e-14);
        assert!((u[1] - 4.0 / 11.0).abs() < 1e-14);
        let prob = problems::dahlquist(-1.0);
        let st = dg_step_newton(&prob, 1, &[1.0], 0.0, 1.0, &NewtonOptions::default()).unwrap();
        assert!((st.endpoint()[0] - 4.0 / 11.0).abs() < 1e-12);
        assert!(dg_residual(&st, &operators(1).unwrap()).max_norm() <= 1e-12);
    }

    #[test]
    fn zero_rhs_gives_constant() {
        let prob = problems::dahlquist(0.0);
        let st = dg_step_newton(&prob, 4, &[2.5], 0.0, 0.3, &NewtonOptions::default()).unwrap();
        for u in &st.nodes {
            assert!((u[0] - 2.5).abs() < 1e-13);
        }
    }

    #[test]
    fn p0_amplification_is_implicit_euler() {
        for &l in &[-0.5, -3.0, 2.0, -100.0] {
            let am = dg_amplification(0, Complex64::new(l, 0.0), 1.0).unwrap();
            assert!((am - Complex64::new(1.0 / (1.0 - l), 0.0)).norm() < 1e-14);
        }
        assert_eq!(dg_amplification(6, Complex64::new(0.0, 0.0), 1.0).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn dg_is_a_stable_on_imaginary_axis() {
        for p in 0..=9 {
            for k in -40..=40 {
                let y = 10f64.powf(k as f64 / 10.0);
                for s in [1.0, -1.0] {
                    let am = dg_amplification(p, Complex64::new(0.0, s * y), 1.0).unwrap();
                    assert!(am.norm() <= 1.0 + 1e-10, "p={p} y={y} |Am|={}", am.norm());
                }
            }
        }
    }

    #[test]
    fn newton_is_fast_on_linear_problems() {
        // Non-affine declaration forces the generic loop; it must still
        // converge in at most 3 iterations.
        let prob = IvpProblem::new("lin", vec![1.0], 1.0, |_, u: &[f64], out: &mut [f64]| out[0] = -4.0 * u[0])
            .unwrap()
            .with_jacobian(|_, _| Matrix::from_rows(&[vec![-4.0]]));
        let opts = NewtonOptions { tol: 1e-12, max_iter: 3 };
        let st = dg_step_newton(&prob, 3, &[1.0], 0.0, 0.5, &opts).unwrap();
        let exact = dg_linear_step(3, -4.0, 0.5, 1.0).unwrap();
        assert!((st.endpoint()[0] - exact[3]).abs() < 1e-12);
    }

    #[test]
    fn endpoint_superconvergence_p2() {
        // Local endpoint error O(h^{2p+2}) = O(h^6) for p = 2.
        let errs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&dt| (dg_linear_step(2, -1.0, dt, 1.0).unwrap()[2] - (-dt as f64).exp()).abs())
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 6.0).abs() < 0.3, "local order {order}");
        }
    }

    #[test]
    fn nonlinear_system_solution() {
        let prob = problems::vanderpol(0.1).unwrap();
        let u0 = prob.initial().to_vec();
        let st = dg_step_newton(&prob, 3, &u0, 0.0, 0.05, &NewtonOptions::default()).unwrap();
        assert!(dg_residual(&st, &operators(3).unwrap()).max_norm() <= 1e-12);
    }
}
