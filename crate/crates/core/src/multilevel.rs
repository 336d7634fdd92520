//! FAS p-multigrid in time: sweeps on a hierarchy of decreasing polynomial
//! degrees over the same interval, coupled by Lagrange interpolation and the
//! FAS τ correction.
//!
//! Level 0 is the finest. The level-ℓ equation is
//! `U + (Δt/2) L⁻¹_ℓ diag(ω_ℓ) F(U) + L⁻¹_ℓ B_ℓ - τ_ℓ = 0` with `τ_0 = 0`.

use std::sync::Arc;

use crate::dg::dg_step_newton;
use crate::error::{Error, Result};
use crate::ivp::IvpProblem;
use crate::linalg::Matrix;
use crate::radau::{operators, OperatorSet};
use crate::scalar::{max_diff, Scalar};
use crate::scheme::{init_predictor, sweep, SchemeConfig, SweepState, Variant};

#[derive(Debug, Clone)]
pub struct Level {
    pub degree: usize,
    pub ops: Arc<OperatorSet>,
}

#[derive(Debug, Clone)]
pub struct LevelHierarchy {
    pub levels: Vec<Level>,
    /// `restrict[ℓ]` maps level-ℓ nodal values onto level ℓ+1.
    pub restrict: Vec<Matrix<f64>>,
    /// `prolong[ℓ]` maps level-(ℓ+1) nodal values onto level ℓ.
    pub prolong: Vec<Matrix<f64>>,
}

/// Interpolation matrix with entries `ℓ_b^{source}(t_a^{target})`.
fn interpolation(source: &OperatorSet, target: &OperatorSet) -> Matrix<f64> {
    let tx = target.nodes.nodes();
    Matrix::from_fn(target.size(), source.size(), |a, b| source.nodes.lagrange_eval(b, tx[a]))
}

pub fn build_hierarchy(degrees: &[usize]) -> Result<LevelHierarchy> {
    if degrees.is_empty() {
        return Err(Error::InvalidArgument("level hierarchy needs at least one degree".into()));
    }
    if degrees.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "level degrees must be strictly decreasing, got {degrees:?}"
        )));
    }
    let levels = degrees
        .iter()
        .map(|&p| Ok(Level { degree: p, ops: operators(p)? }))
        .collect::<Result<Vec<_>>>()?;
    let restrict = levels
        .windows(2)
        .map(|w| interpolation(&w[0].ops, &w[1].ops))
        .collect();
    let prolong = levels
        .windows(2)
        .map(|w| interpolation(&w[1].ops, &w[0].ops))
        .collect();
    Ok(LevelHierarchy { levels, restrict, prolong })
}

/// Default coarsening `p, ⌊p/2⌋, ⌊p/4⌋, ...` with `n_levels` entries.
pub fn halving_schedule(p: usize, n_levels: usize) -> Result<Vec<usize>> {
    let mut degrees = vec![p];
    while degrees.len() < n_levels {
        let last = *degrees.last().expect("non-empty");
        if last == 0 {
            return Err(Error::InvalidArgument(format!("cannot build {n_levels} levels below degree {p}")));
        }
        degrees.push(last / 2);
    }
    Ok(degrees)
}

impl LevelHierarchy {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn finest(&self) -> &Arc<OperatorSet> {
        &self.levels[0].ops
    }
}

/// Applies a transfer matrix node-wise to a list of state vectors.
pub fn transfer<S: Scalar>(matrix: &Matrix<f64>, values: &[Vec<S>]) -> Vec<Vec<S>> {
    let d = values.first().map_or(0, Vec::len);
    (0..matrix.rows())
        .map(|a| {
            let mut out = vec![S::zero(); d];
            for (b, v) in values.iter().enumerate() {
                let c = matrix[(a, b)];
                if c != 0.0 {
                    for k in 0..d {
                        out[k] += v[k].scale(c);
                    }
                }
            }
            out
        })
        .collect()
}

fn linv_weighted<S: Scalar>(ops: &OperatorSet, f: &[Vec<S>]) -> Vec<Vec<S>> {
    let n = ops.size();
    let d = f.first().map_or(0, Vec::len);
    let w = ops.weights();
    (0..n)
        .map(|i| {
            let mut out = vec![S::zero(); d];
            for j in 0..n {
                let c = ops.l_inv[(i, j)] * w[j];
                for k in 0..d {
                    out[k] += f[j][k].scale(c);
                }
            }
            out
        })
        .collect()
}

/// FAS correction for level `fine + 1`:
/// `τ_c = (Δt/2) (L⁻¹_c F_c(I U) - I L⁻¹_f F_f(U)) + I τ_f`,
/// with `F` the ω-weighted nodal right-hand side of each level.
pub fn fas_tau<S: Scalar>(
    hierarchy: &LevelHierarchy,
    fine: usize,
    fine_f: &[Vec<S>],
    coarse_f: &[Vec<S>],
    fine_tau: Option<&[Vec<S>]>,
    dt: f64,
) -> Vec<Vec<S>> {
    let h = 0.5 * dt;
    let restrict = &hierarchy.restrict[fine];
    let coarse_term = linv_weighted(&hierarchy.levels[fine + 1].ops, coarse_f);
    let fine_term = transfer(restrict, &linv_weighted(&hierarchy.levels[fine].ops, fine_f));
    let mut tau: Vec<Vec<S>> = coarse_term
        .iter()
        .zip(&fine_term)
        .map(|(c, f)| c.iter().zip(f).map(|(a, b)| (*a - *b).scale(h)).collect())
        .collect();
    if let Some(tf) = fine_tau {
        for (t, r) in tau.iter_mut().zip(transfer(restrict, tf)) {
            for (a, b) in t.iter_mut().zip(r) {
                *a += b;
            }
        }
    }
    tau
}

fn level_variant(config: &SchemeConfig) -> Variant {
    match config.variant {
        Variant::ImSdgTheta => Variant::ImSdg,
        v => v,
    }
}

/// One multilevel V-cycle: fine sweep, restriction with FAS correction and a
/// sweep on each coarser level, then coarse corrections interpolated back up
/// with a sweep on each intermediate level, and a final fine correction.
///
/// The correction added on the way up is the difference between the swept
/// coarse iterate and the value stored right after restriction.
pub fn ml_cycle<S: Scalar>(
    hierarchy: &LevelHierarchy,
    problem: &IvpProblem<S>,
    config: &SchemeConfig,
    state: &SweepState<S>,
) -> Result<SweepState<S>> {
    let variant = level_variant(config);
    let with_split = state.f_split.is_some();
    let n_levels = hierarchy.len();
    let tag = |level: usize| move |e: Error| e.map_newton(|nf| nf.level = Some(level));

    let mut current: Vec<SweepState<S>> = Vec::with_capacity(n_levels);
    let mut restricted: Vec<Vec<Vec<S>>> = Vec::with_capacity(n_levels);
    current.push(sweep(variant, state, &hierarchy.levels[0].ops, problem, config).map_err(tag(0))?);
    restricted.push(Vec::new());

    for l in 0..n_levels - 1 {
        let coarse_ops = &hierarchy.levels[l + 1].ops;
        let fine = &current[l];
        let nodes = transfer(&hierarchy.restrict[l], &fine.nodes);
        let mut coarse = SweepState::from_nodes(problem, coarse_ops, fine.u_n.clone(), fine.t_n, fine.dt, nodes, with_split)?;
        let tau = fas_tau(hierarchy, l, &fine.f, &coarse.f, fine.tau.as_deref(), fine.dt);
        coarse.tau = Some(tau);
        restricted.push(coarse.nodes.clone());
        let swept = sweep(variant, &coarse, coarse_ops, problem, config).map_err(tag(l + 1))?;
        current.push(swept);
    }

    for l in (0..n_levels - 1).rev() {
        let delta: Vec<Vec<S>> = current[l + 1]
            .nodes
            .iter()
            .zip(&restricted[l + 1])
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| *x - *y).collect())
            .collect();
        let correction = transfer(&hierarchy.prolong[l], &delta);
        let ops = &hierarchy.levels[l].ops;
        let target = &mut current[l];
        for (u, c) in target.nodes.iter_mut().zip(correction) {
            for (a, b) in u.iter_mut().zip(c) {
                *a += b;
            }
        }
        target.refresh(problem, ops, with_split)?;
        if l > 0 {
            let swept = sweep(variant, &current[l], ops, problem, config).map_err(tag(l))?;
            current[l] = swept;
        }
    }
    current.truncate(1);
    Ok(current.pop().expect("finest level"))
}

/// Error history of repeated cycles on one step, measured against the DG
/// nodal solution: entry 0 is the predictor, entry `k` follows `k` cycles.
pub fn ml_error_history<S: Scalar>(
    hierarchy: &LevelHierarchy,
    problem: &IvpProblem<S>,
    config: &SchemeConfig,
    u_n: &[S],
    t_n: f64,
    dt: f64,
    cycles: usize,
) -> Result<Vec<f64>> {
    let ops = hierarchy.finest();
    let dg = dg_step_newton(problem, ops.degree(), u_n, t_n, dt, &config.newton)?;
    let err = |s: &SweepState<S>| {
        s.nodes
            .iter()
            .zip(&dg.nodes)
            .map(|(a, b)| max_diff(a, b))
            .fold(0.0, f64::max)
    };
    let mut state = init_predictor(problem, config, ops, u_n, t_n, dt)?;
    let mut history = vec![err(&state)];
    for _ in 0..cycles {
        state = ml_cycle(hierarchy, problem, config, &state)?;
        history.push(err(&state));
    }
    Ok(history)
}
