//! SDG sweeps and the drivers built on them.
//!
//! On an interval `[t_n, t_n + Δt]` the nodal unknowns `U = (u_0..u_p)` at the
//! right Radau points satisfy the quadrature-reduced DG system
//! `L U + (Δt/2) diag(ω) F(U) + u_n·b = 0` (`b_j = ℓ_j(-1)`). Every sweep is
//! one step of a preconditioned fixed-point iteration for that system:
//!
//! - `ExDg`: plain Picard, `U ← -(Δt/2) L⁻¹ diag(ω) F(U) - u_n L⁻¹ b`,
//! - `ExSdg` / `ImSdg` / `SiSdg`: node-by-node marching with the bidiagonal
//!   surrogate of `L` as preconditioner (explicit, implicit, IMEX),
//! - `ImSdgTheta`: `K-1` implicit sweeps followed by one sweep whose
//!   correction difference is damped by θ.
//!
//! An optional FAS correction `τ` turns the system into
//! `U + (Δt/2) L⁻¹ diag(ω) F(U) + L⁻¹ B - τ = 0`; in the sweep formulas it
//! contributes `+τ_0` at node 0 and `+(τ_{m+1} - τ_m)` at node `m+1`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, NewtonFailure, Result};
use crate::ivp::{IvpProblem, Part};
use crate::linalg::Matrix;
use crate::radau::{operators, OperatorSet, MAX_DEGREE};
use crate::scalar::{axpy_real, max_norm, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    ExDg,
    ExSdg,
    ImSdg,
    SiSdg,
    ImSdgTheta,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::ExDg,
        Variant::ExSdg,
        Variant::ImSdg,
        Variant::SiSdg,
        Variant::ImSdgTheta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::ExDg => "exdg",
            Variant::ExSdg => "exsdg",
            Variant::ImSdg => "imsdg",
            Variant::SiSdg => "sisdg",
            Variant::ImSdgTheta => "imsdg-theta",
        }
    }

    pub fn is_explicit(self) -> bool {
        matches!(self, Variant::ExDg | Variant::ExSdg)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == lower || (lower == "theta" && *v == Variant::ImSdgTheta))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme '{s}'")))
    }
}

/// How the iteration is started on each interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Node-to-node Euler marching, explicit for explicit variants and
    /// implicit otherwise.
    #[default]
    EulerMarch,
    /// Every node starts at the inflow value.
    Constant,
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler-march" | "euler" => Ok(Init::EulerMarch),
            "constant" => Ok(Init::Constant),
            _ => Err(Error::InvalidArgument(format!("unknown init '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Absolute tolerance on the max-norm of the node residual.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub variant: Variant,
    pub degree: usize,
    pub iterations: usize,
    pub theta: f64,
    pub init: Init,
    pub newton: NewtonOptions,
}

impl SchemeConfig {
    pub fn new(variant: Variant, degree: usize, iterations: usize) -> Self {
        Self {
            variant,
            degree,
            iterations,
            theta: 1.0,
            init: Init::EulerMarch,
            newton: NewtonOptions::default(),
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn with_newton(mut self, newton: NewtonOptions) -> Self {
        self.newton = newton;
        self
    }

    pub fn validate<S: Scalar>(&self, problem: &IvpProblem<S>) -> Result<()> {
        if self.degree > MAX_DEGREE {
            return Err(Error::DegreeOutOfRange(self.degree));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidArgument(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if self.variant == Variant::SiSdg && !problem.has_split() {
            return Err(Error::MissingSplit);
        }
        if !(self.newton.tol > 0.0) || self.newton.max_iter == 0 {
            return Err(Error::InvalidArgument("newton tolerance and iteration limit must be positive".into()));
        }
        Ok(())
    }
}

/// Nodal iterate on one interval together with its cached right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepState<S> {
    /// Inflow value `u_h(t_n^-)`.
    pub u_n: Vec<S>,
    pub t_n: f64,
    pub dt: f64,
    /// `U[m] ≈ u(t_{n,m})`.
    pub nodes: Vec<Vec<S>>,
    /// `F[m] = f(t_{n,m}, U[m])`.
    pub f: Vec<Vec<S>>,
    /// `(f_N, f_S)` at the nodes; present when the state is used by IMEX sweeps.
    pub f_split: Option<(Vec<Vec<S>>, Vec<Vec<S>>)>,
    /// FAS correction, one vector per node.
    pub tau: Option<Vec<Vec<S>>>,
}

impl<S: Scalar> SweepState<S> {
    /// Builds a state from nodal values and evaluates the caches.
    pub fn from_nodes(
        problem: &IvpProblem<S>,
        ops: &OperatorSet,
        u_n: Vec<S>,
        t_n: f64,
        dt: f64,
        nodes: Vec<Vec<S>>,
        with_split: bool,
    ) -> Result<Self> {
        let mut state = Self {
            u_n,
            t_n,
            dt,
            f: Vec::new(),
            nodes,
            f_split: None,
            tau: None,
        };
        state.refresh(problem, ops, with_split)?;
        Ok(state)
    }

    /// Re-evaluates `F` (and the split caches when requested) from `nodes`.
    pub fn refresh(&mut self, problem: &IvpProblem<S>, ops: &OperatorSet, with_split: bool) -> Result<()> {
        let times: Vec<f64> = self.times(ops);
        self.f = self
            .nodes
            .iter()
            .zip(&times)
            .map(|(u, &t)| problem.rhs(t, u))
            .collect();
        self.f_split = if with_split {
            let mut fns = Vec::with_capacity(self.nodes.len());
            let mut fss = Vec::with_capacity(self.nodes.len());
            for (u, &t) in self.nodes.iter().zip(&times) {
                fns.push(problem.eval(Part::NonStiff, t, u)?);
                fss.push(problem.eval(Part::Stiff, t, u)?);
            }
            Some((fns, fss))
        } else {
            None
        };
        Ok(())
    }

    pub fn times(&self, ops: &OperatorSet) -> Vec<f64> {
        (0..ops.size())
            .map(|m| ops.nodes.physical_time(m, self.t_n, self.dt))
            .collect()
    }

    /// `U[p]`, which is `u_h(t_{n+1}^-)`.
    pub fn endpoint(&self) -> &[S] {
        self.nodes.last().expect("node set is never empty")
    }

    pub fn with_tau(mut self, tau: Option<Vec<Vec<S>>>) -> Self {
        self.tau = tau;
        self
    }

    fn tau_increment(&self, m: usize) -> Option<Vec<S>> {
        let tau = self.tau.as_ref()?;
        Some(if m == 0 {
            tau[0].clone()
        } else {
            tau[m].iter().zip(&tau[m - 1]).map(|(a, b)| *a - *b).collect()
        })
    }
}

/// Solves `u = c + coeff · f_part(t, u)` by Newton's method.
///
/// The iteration starts from `guess` (or `c`) and always takes at least one
/// Newton step. Affine parts are solved by that single step. Otherwise iteration stops once the residual max-norm
/// is within `newton.tol`, or once the step stagnates at round-off level of
/// the equation's terms.
pub fn node_solve<S: Scalar>(
    problem: &IvpProblem<S>,
    part: Part,
    t: f64,
    c: &[S],
    coeff: f64,
    guess: Option<&[S]>,
    newton: &NewtonOptions,
) -> Result<Vec<S>> {
    let d = c.len();
    let mut u = guess.unwrap_or(c).to_vec();
    let mut fu = vec![S::zero(); d];
    let mut residual = vec![S::zero(); d];
    let mut res_norm = f64::INFINITY;
    let affine = problem.is_affine(part);
    for it in 0..newton.max_iter {
        problem.eval_into(part, t, &u, &mut fu)?;
        for i in 0..d {
            residual[i] = u[i] - c[i] - fu[i].scale(coeff);
        }
        res_norm = max_norm(&residual);
        if !res_norm.is_finite() {
            break;
        }
        // At least one Newton step, so an accurate guess is still refined.
        if res_norm <= newton.tol && it > 0 {
            return Ok(u);
        }
        let jf = problem.jacobian(part, t, &u)?;
        let jac = Matrix::from_fn(d, d, |i, j| {
            let id = if i == j { S::one() } else { S::zero() };
            id - jf[(i, j)].scale(coeff)
        });
        let delta = jac
            .solve(&residual)
            .map_err(|_| Error::from(NewtonFailure::new(res_norm, it + 1)))?;
        for i in 0..d {
            u[i] -= delta[i];
        }
        if affine {
            return Ok(u);
        }
        let floor = 64.0 * f64::EPSILON * (max_norm(c) + coeff.abs() * max_norm(&fu) + max_norm(&u));
        if max_norm(&delta) <= floor && res_norm <= newton.tol.max(floor) {
            return Ok(u);
        }
    }
    if res_norm.is_finite() {
        problem.eval_into(part, t, &u, &mut fu)?;
        let final_res = u
            .iter()
            .zip(c.iter().zip(&fu))
            .fold(0.0_f64, |acc, (ui, (ci, fi))| acc.max((*ui - *ci - fi.scale(coeff)).modulus()));
        if final_res <= newton.tol {
            return Ok(u);
        }
        res_norm = final_res;
    }
    Err(NewtonFailure::new(res_norm, newton.max_iter).into())
}

fn uses_split(variant: Variant) -> bool {
    variant == Variant::SiSdg
}

/// Fills the initial iterate `U^0` on `[t_n, t_n + dt]`.
pub fn init_predictor<S: Scalar>(
    problem: &IvpProblem<S>,
    config: &SchemeConfig,
    ops: &OperatorSet,
    u_n: &[S],
    t_n: f64,
    dt: f64,
) -> Result<SweepState<S>> {
    let n = ops.size();
    let nodes = match config.init {
        Init::Constant => vec![u_n.to_vec(); n],
        Init::EulerMarch => {
            let times: Vec<f64> = (0..n).map(|m| ops.nodes.physical_time(m, t_n, dt)).collect();
            let mut nodes = Vec::with_capacity(n);
            let mut prev = u_n.to_vec();
            let mut t_prev = t_n;
            for (m, &t) in times.iter().enumerate() {
                let h = t - t_prev;
                let next = if config.variant.is_explicit() {
                    let mut next = prev.clone();
                    axpy_real(h, &problem.rhs(t_prev, &prev), &mut next);
                    next
                } else {
                    node_solve(problem, Part::Full, t, &prev, h, Some(&prev), &config.newton)
                        .map_err(|e| e.map_newton(|nf| nf.node = Some(m)))?
                };
                nodes.push(next.clone());
                prev = next;
                t_prev = t;
            }
            nodes
        }
    };
    SweepState::from_nodes(problem, ops, u_n.to_vec(), t_n, dt, nodes, uses_split(config.variant))
}

/// Naive fixed-point sweep `U ← -(Δt/2) L⁻¹ diag(ω) F(U) - L⁻¹ B + τ`.
pub fn exdg_sweep<S: Scalar>(state: &SweepState<S>, ops: &OperatorSet, problem: &IvpProblem<S>) -> Result<SweepState<S>> {
    let n = ops.size();
    let d = state.u_n.len();
    let h = 0.5 * state.dt;
    let w = ops.weights();
    let mut nodes = vec![vec![S::zero(); d]; n];
    for (i, out) in nodes.iter_mut().enumerate() {
        for j in 0..n {
            let a = ops.l_inv[(i, j)];
            axpy_real(-h * a * w[j], &state.f[j], out);
            axpy_real(-a * ops.boundary[j], &state.u_n, out);
        }
        if let Some(tau) = &state.tau {
            axpy_real(1.0, &tau[i], out);
        }
    }
    let mut next = SweepState {
        nodes,
        f: Vec::new(),
        f_split: None,
        ..state.clone()
    };
    next.refresh(problem, ops, state.f_split.is_some())?;
    Ok(next)
}

#[derive(Clone, Copy)]
struct Marching {
    explicit: Option<Part>,
    implicit: Option<Part>,
    implicit_scale: f64,
}

fn marching_sweep<S: Scalar>(
    state: &SweepState<S>,
    ops: &OperatorSet,
    problem: &IvpProblem<S>,
    kind: Marching,
    newton: &NewtonOptions,
) -> Result<SweepState<S>> {
    let n = ops.size();
    let d = state.u_n.len();
    let h = 0.5 * state.dt;
    let w = ops.weights();
    let times = state.times(ops);
    let need_split = kind.explicit == Some(Part::NonStiff) || kind.implicit == Some(Part::Stiff);

    let owned_split;
    let split_cache = match (&state.f_split, need_split) {
        (Some(cache), _) => Some(cache),
        (None, true) => {
            let mut tmp = state.clone();
            tmp.refresh(problem, ops, true)?;
            owned_split = tmp.f_split.expect("refreshed with split");
            Some(&owned_split)
        }
        (None, false) => None,
    };
    let cached = |part: Part, m: usize| -> &Vec<S> {
        match part {
            Part::Full => &state.f[m],
            Part::NonStiff => &split_cache.expect("split cache").0[m],
            Part::Stiff => &split_cache.expect("split cache").1[m],
        }
    };

    // ω-weighted quadrature term (Δt/2) Σ_j L̃_mj ω_j f(u_j^k) for every node.
    let quad: Vec<Vec<S>> = (0..n)
        .map(|m| {
            let mut acc = vec![S::zero(); d];
            for j in 0..n {
                axpy_real(h * ops.l_tilde[(m, j)] * w[j], &state.f[j], &mut acc);
            }
            acc
        })
        .collect();

    let mut nodes: Vec<Vec<S>> = Vec::with_capacity(n);
    let mut f_new: Vec<Vec<S>> = Vec::with_capacity(n);
    let mut fn_new: Vec<Vec<S>> = Vec::with_capacity(n);
    let mut fs_new: Vec<Vec<S>> = Vec::with_capacity(n);
    let mut explicit_prev: Option<Vec<S>> = None;

    for m in 0..n {
        let mut c = if m == 0 { state.u_n.clone() } else { nodes[m - 1].clone() };
        axpy_real(1.0, &quad[m], &mut c);
        if let Some(tau) = state.tau_increment(m) {
            axpy_real(1.0, &tau, &mut c);
        }
        if let (Some(part), true) = (kind.explicit, m > 0) {
            let fresh = explicit_prev.as_ref().expect("explicit part of previous node");
            axpy_real(h * w[m - 1], fresh, &mut c);
            axpy_real(-h * w[m - 1], cached(part, m - 1), &mut c);
        }
        let u = match kind.implicit {
            Some(part) => {
                let coeff = kind.implicit_scale * h * w[m];
                axpy_real(-coeff, cached(part, m), &mut c);
                node_solve(problem, part, times[m], &c, coeff, Some(&state.nodes[m]), newton)
                    .map_err(|e| e.map_newton(|nf| nf.node = Some(m)))?
            }
            None => c,
        };
        let f_full = problem.rhs(times[m], &u);
        if need_split || split_cache.is_some() {
            fn_new.push(problem.eval(Part::NonStiff, times[m], &u)?);
            fs_new.push(problem.eval(Part::Stiff, times[m], &u)?);
        }
        explicit_prev = kind.explicit.map(|part| match part {
            Part::Full => f_full.clone(),
            Part::NonStiff => fn_new[m].clone(),
            Part::Stiff => fs_new[m].clone(),
        });
        f_new.push(f_full);
        nodes.push(u);
    }

    Ok(SweepState {
        u_n: state.u_n.clone(),
        t_n: state.t_n,
        dt: state.dt,
        nodes,
        f: f_new,
        f_split: if fn_new.is_empty() { None } else { Some((fn_new, fs_new)) },
        tau: state.tau.clone(),
    })
}

/// Explicit SDG sweep. The correction difference at node `m+1` uses `ω_m`
/// and node-`m` values.
pub fn exsdg_sweep<S: Scalar>(state: &SweepState<S>, ops: &OperatorSet, problem: &IvpProblem<S>) -> Result<SweepState<S>> {
    let kind = Marching {
        explicit: Some(Part::Full),
        implicit: None,
        implicit_scale: 1.0,
    };
    marching_sweep(state, ops, problem, kind, &NewtonOptions::default())
}

/// Implicit SDG sweep; node `m` solves `u = c_m + (Δt/2) ω_m f(u)`.
pub fn imsdg_sweep<S: Scalar>(
    state: &SweepState<S>,
    ops: &OperatorSet,
    problem: &IvpProblem<S>,
    newton: &NewtonOptions,
) -> Result<SweepState<S>> {
    theta_sweep(state, ops, problem, 1.0, newton)
}

/// Semi-implicit (IMEX) SDG sweep: `f_N` explicit with `ω_m` at node `m+1`,
/// `f_S` implicit with `ω_{m+1}`, quadrature over the full `f`.
pub fn sisdg_sweep<S: Scalar>(
    state: &SweepState<S>,
    ops: &OperatorSet,
    problem: &IvpProblem<S>,
    newton: &NewtonOptions,
) -> Result<SweepState<S>> {
    if !problem.has_split() {
        return Err(Error::MissingSplit);
    }
    let kind = Marching {
        explicit: Some(Part::NonStiff),
        implicit: Some(Part::Stiff),
        implicit_scale: 1.0,
    };
    marching_sweep(state, ops, problem, kind, newton)
}

/// Implicit sweep with the correction difference scaled by `theta`.
pub fn theta_sweep<S: Scalar>(
    state: &SweepState<S>,
    ops: &OperatorSet,
    problem: &IvpProblem<S>,
    theta: f64,
    newton: &NewtonOptions,
) -> Result<SweepState<S>> {
    let kind = Marching {
        explicit: None,
        implicit: Some(Part::Full),
        implicit_scale: theta,
    };
    marching_sweep(state, ops, problem, kind, newton)
}

/// One sweep of `variant`. For `ImSdgTheta` this is the damped sweep; use
/// [`step`] for the full `K-1` implicit + 1 damped schedule.
pub fn sweep<S: Scalar>(
    variant: Variant,
    state: &SweepState<S>,
    ops: &OperatorSet,
    problem: &IvpProblem<S>,
    config: &SchemeConfig,
) -> Result<SweepState<S>> {
    match variant {
        Variant::ExDg => exdg_sweep(state, ops, problem),
        Variant::ExSdg => exsdg_sweep(state, ops, problem),
        Variant::ImSdg => imsdg_sweep(state, ops, problem, &config.newton),
        Variant::SiSdg => sisdg_sweep(state, ops, problem, &config.newton),
        Variant::ImSdgTheta => theta_sweep(state, ops, problem, config.theta, &config.newton),
    }
}

/// Runs the `k`-th sweep (1-based) of the configured schedule.
pub(crate) fn scheduled_sweep<S: Scalar>(
    k: usize,
    state: &SweepState<S>,
    ops: &OperatorSet,
    problem: &IvpProblem<S>,
    config: &SchemeConfig,
) -> Result<SweepState<S>> {
    let variant = match config.variant {
        Variant::ImSdgTheta if k < config.iterations => Variant::ImSdg,
        v => v,
    };
    sweep(variant, state, ops, problem, config)
        .map_err(|e| e.map_newton(|nf| nf.sweep = Some(k)))
}

/// One time step: predictor followed by `K` sweeps. Returns the endpoint
/// value `U[p]` and the final nodal state.
pub fn step<S: Scalar>(
    problem: &IvpProblem<S>,
    config: &SchemeConfig,
    u_n: &[S],
    t_n: f64,
    dt: f64,
) -> Result<(Vec<S>, SweepState<S>)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {dt}")));
    }
    config.validate(problem)?;
    let ops = operators(config.degree)?;
    let tag = |e: Error| e.map_newton(|nf| nf.t = Some(t_n));
    let mut state = init_predictor(problem, config, &ops, u_n, t_n, dt)
        .map_err(|e| e.map_newton(|nf| nf.sweep = Some(0)))
        .map_err(tag)?;
    for k in 1..=config.iterations {
        state = scheduled_sweep(k, &state, &ops, problem, config).map_err(tag)?;
    }
    Ok((state.endpoint().to_vec(), state))
}

/// Uniform-grid solution: endpoint values at `t_0 = 0, ..., t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<Vec<S>>,
    /// Final nodal state of every step, when requested.
    pub nodal: Option<Vec<SweepState<S>>>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn final_state(&self) -> &[S] {
        self.states.last().expect("trajectory has the initial state")
    }
}

pub fn integrate<S: Scalar>(problem: &IvpProblem<S>, config: &SchemeConfig, n_steps: usize) -> Result<Trajectory<S>> {
    integrate_with(problem, config, n_steps, false)
}

/// Time loop over `n_steps` equal steps of `[0, T]`; step `n` starts at
/// `T·n/N` so the grid hits `T` exactly.
pub fn integrate_with<S: Scalar>(
    problem: &IvpProblem<S>,
    config: &SchemeConfig,
    n_steps: usize,
    keep_nodal: bool,
) -> Result<Trajectory<S>> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("number of steps must be >= 1".into()));
    }
    config.validate(problem)?;
    let t_end = problem.t_end();
    let grid = |n: usize| t_end * n as f64 / n_steps as f64;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut nodal = keep_nodal.then(|| Vec::with_capacity(n_steps));
    times.push(0.0);
    states.push(problem.initial().to_vec());
    for n in 0..n_steps {
        let (t_n, t_next) = (grid(n), grid(n + 1));
        let (end, state) = step(problem, config, &states[n], t_n, t_next - t_n)
            .map_err(|e| e.map_newton(|nf| nf.step = Some(n)))?;
        if let Some(v) = nodal.as_mut() {
            v.push(state);
        }
        times.push(t_next);
        states.push(end);
    }
    Ok(Trajectory { times, states, nodal })
}
