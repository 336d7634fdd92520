//! Built-in test problems.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ivp::IvpProblem;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Initial `v` value of the Van der Pol benchmark.
pub const VANDERPOL_V0: f64 = -0.6666654321121172;

/// `u' = λ u`, `u(0) = 1` on `[0, 1]`, exact solution `e^{λt}`.
pub fn dahlquist<S: Scalar>(lambda: S) -> IvpProblem<S> {
    IvpProblem::new("dahlquist", vec![S::one()], 1.0, move |_, u: &[S], out: &mut [S]| {
        out[0] = lambda * u[0];
    })
    .expect("valid description")
    .with_jacobian(move |_, _| Matrix::from_rows(&[vec![lambda]]))
    .affine()
    .with_exact(move |t| vec![lambda.scale(t).exp()])
}

/// Which Van der Pol equation the IMEX split treats implicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VanDerPolSplit {
    /// `f_S = (v, 0)`, `f_N = (0, (-u + (1 - u²) v)/ε)`.
    #[default]
    FirstImplicit,
    /// `f_S = (0, (-u + (1 - u²) v)/ε)`, `f_N = (v, 0)`.
    SecondImplicit,
}

/// Van der Pol oscillator `u' = v`, `v' = (-u + (1 - u²) v)/ε` on `[0, 0.5]`,
/// split with the first equation implicit and the second explicit.
pub fn vanderpol(eps: f64) -> Result<IvpProblem<f64>> {
    vanderpol_split(eps, VanDerPolSplit::FirstImplicit)
}

pub fn vanderpol_split(eps: f64, split: VanDerPolSplit) -> Result<IvpProblem<f64>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let first = |_: f64, x: &[f64], out: &mut [f64]| {
        out[0] = x[1];
        out[1] = 0.0;
    };
    let second = move |_: f64, x: &[f64], out: &mut [f64]| {
        let (u, v) = (x[0], x[1]);
        out[0] = 0.0;
        out[1] = (-u + (1.0 - u * u) * v) / eps;
    };
    let problem = IvpProblem::new("vanderpol", vec![2.0, VANDERPOL_V0], 0.5, move |_, x: &[f64], out: &mut [f64]| {
        let (u, v) = (x[0], x[1]);
        out[0] = v;
        out[1] = (-u + (1.0 - u * u) * v) / eps;
    })?
    .with_jacobian(move |_, x| {
        let (u, v) = (x[0], x[1]);
        Matrix::from_rows(&[vec![0.0, 1.0], vec![(-1.0 - 2.0 * u * v) / eps, (1.0 - u * u) / eps]])
    });
    Ok(match split {
        VanDerPolSplit::FirstImplicit => problem
            .with_split(second, first)
            .with_stiff_jacobian(|_, _| Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]))
            .stiff_affine(),
        VanDerPolSplit::SecondImplicit => problem.with_split(first, second).with_stiff_jacobian(move |_, x| {
            let (u, v) = (x[0], x[1]);
            Matrix::from_rows(&[vec![0.0, 0.0], vec![(-1.0 - 2.0 * u * v) / eps, (1.0 - u * u) / eps]])
        }),
    })
}

/// Exact solution of the non-Lipschitz example: `-⌊t⌋ + (1 - 3^{t-⌊t⌋})/2`.
pub fn bad_example_exact(t: f64) -> f64 {
    let k = t.floor();
    -k + 0.5 * (1.0 - 3f64.powf(t - k))
}

/// `y' = ln 3 (y - ⌊y⌋ - 3/2)`, `y(0) = 0` on `[0, 2]`. The right-hand side
/// jumps whenever `y` crosses an integer, which the exact solution does at
/// every integer time.
pub fn bad_example() -> IvpProblem<f64> {
    let ln3 = 3f64.ln();
    IvpProblem::new("bad", vec![0.0], 2.0, move |_, y: &[f64], out: &mut [f64]| {
        out[0] = ln3 * (y[0] - y[0].floor() - 1.5);
    })
    .expect("valid description")
    .with_jacobian(move |_, _| Matrix::from_rows(&[vec![ln3]]))
    .with_exact(|t| vec![bad_example_exact(t)])
}

/// First-order periodic upwind semi-discretization of `u_t + u_x = 0` on
/// `[0, 1]` with cell-centred data `sin(2πx)`, integrated to `T = 1`.
///
/// The attached exact solution is that of the semi-discrete system (a single
/// Fourier mode with eigenvalue `(e^{-iθ} - 1)/Δx`, `θ = 2πΔx`), so time
/// errors can be measured without spatial error.
pub fn advection(n_cells: usize) -> Result<IvpProblem<f64>> {
    if n_cells < 8 {
        return Err(Error::InvalidArgument(format!("advection needs at least 8 cells, got {n_cells}")));
    }
    let dx = 1.0 / n_cells as f64;
    let centres: Vec<f64> = (0..n_cells).map(|i| (i as f64 + 0.5) * dx).collect();
    let initial = centres.iter().map(|x| (2.0 * PI * x).sin()).collect();
    let theta = 2.0 * PI * dx;
    let mu = (Complex64::new(0.0, -theta).exp() - 1.0) / dx;
    let problem = IvpProblem::new("advection", initial, 1.0, move |_, u: &[f64], out: &mut [f64]| {
        let n = u.len();
        for i in 0..n {
            let left = u[(i + n - 1) % n];
            out[i] = -(u[i] - left) / dx;
        }
    })?
    .with_jacobian(move |_, u| {
        let n = u.len();
        let mut j = Matrix::zeros(n, n);
        for i in 0..n {
            j[(i, i)] = -1.0 / dx;
            j[(i, (i + n - 1) % n)] += 1.0 / dx;
        }
        j
    })
    .affine()
    .with_exact(move |t| {
        centres
            .iter()
            .map(|x| (Complex64::new(0.0, 2.0 * PI * x) + mu * t).exp().im)
            .collect()
    });
    Ok(problem)
}

/// Eigenvalues `(e^{-iθ_k} - 1)/Δx` of the periodic upwind operator.
pub fn advection_eigenvalues(n_cells: usize) -> Vec<Complex64> {
    let dx = 1.0 / n_cells as f64;
    (0..n_cells)
        .map(|k| (Complex64::new(0.0, -2.0 * PI * k as f64 / n_cells as f64).exp() - 1.0) / dx)
        .collect()
}
