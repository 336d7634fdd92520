//! Right Gauss-Radau node sets, the nodal Lagrange basis, and the DG
//! operator tables that every scheme is assembled from.
//!
//! Nodes live on the reference interval [-1, 1] and always include +1, so
//! the last nodal value of an interval is the DG endpoint value.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Largest supported degree. Beyond this the simultaneous root iteration
/// and the barycentric weights lose accuracy.
pub const MAX_DEGREE: usize = 30;

/// The p+1 right Gauss-Radau points and weights on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
}

impl NodeSet {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Barycentric weights `1 / prod_{k != j} (t_j - t_k)`.
    pub fn barycentric_weights(&self) -> &[f64] {
        &self.bary
    }

    /// Maps reference node `m` onto the physical interval `[t_n, t_n + dt]`.
    pub fn physical_time(&self, m: usize, t_n: f64, dt: f64) -> f64 {
        t_n + 0.5 * (1.0 + self.nodes[m]) * dt
    }

    /// Value of the Lagrange basis polynomial `j` at `t`.
    pub fn lagrange_eval(&self, j: usize, t: f64) -> f64 {
        lagrange_eval(self, j, t)
    }

    /// Derivative of the Lagrange basis polynomial `j` at `t`.
    pub fn lagrange_deriv(&self, j: usize, t: f64) -> f64 {
        lagrange_deriv(self, j, t)
    }

    /// Evaluates the interpolant through `values` (one per node) at `t`.
    pub fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        (0..self.len()).map(|j| values[j] * self.lagrange_eval(j, t)).sum()
    }
}

/// Legendre P_n and P_{n-1} together with their derivatives at `x`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64, f64, f64) {
    debug_assert!(n >= 1);
    let (mut p_prev, mut p) = (1.0, x);
    let (mut d_prev, mut d) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        // P'_{k+1} = P'_{k-1} + (2k+1) P_k
        let d_next = d_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, p_prev, d, d_prev)
}

/// Right Gauss-Radau rule with `p + 1` points.
///
/// The nodes are the roots of `P_{p+1}(x) - P_p(x)`; the root at +1 is fixed
/// and the remaining `p` roots (those of the Jacobi polynomial with weight
/// `1 - x`) are found simultaneously with an Aberth-Ehrlich iteration that
/// deflates the known root, then polished by Newton.
pub fn radau_nodes(p: usize) -> Result<NodeSet> {
    if p > MAX_DEGREE {
        return Err(Error::DegreeOutOfRange(p));
    }
    let n = p + 1;
    let mut nodes = Vec::with_capacity(n);
    if p > 0 {
        // Left-Radau asymptotic guesses -cos(2πk/(2n-1)), mirrored.
        let mut roots: Vec<f64> = (1..n)
            .map(|k| (2.0 * std::f64::consts::PI * k as f64 / (2 * n - 1) as f64).cos())
            .collect();
        let log_ratio = |x: f64| {
            let (pn, pm, dn, dm) = legendre_pair(n, x);
            // d/dx log( (P_n - P_{n-1}) / (x - 1) )
            (dn - dm) / (pn - pm) - 1.0 / (x - 1.0)
        };
        for _ in 0..200 {
            let mut max_step: f64 = 0.0;
            for k in 0..roots.len() {
                let x = roots[k];
                let w = 1.0 / log_ratio(x);
                let repulsion: f64 = roots
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, xj)| 1.0 / (x - xj))
                    .sum();
                let step = w / (1.0 - w * repulsion);
                if step.is_finite() {
                    roots[k] = x - step;
                    max_step = max_step.max(step.abs());
                }
            }
            if max_step < 1e-15 {
                break;
            }
        }
        for x in roots.iter_mut() {
            for _ in 0..3 {
                let (pn, pm, dn, dm) = legendre_pair(n, *x);
                let step = (pn - pm) / (dn - dm);
                if !step.is_finite() || step == 0.0 {
                    break;
                }
                *x -= step;
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
        nodes.extend(roots);
    }
    nodes.push(1.0);

    let n2 = (n * n) as f64;
    let weights = nodes
        .iter()
        .map(|&x| {
            if n == 1 {
                return 2.0;
            }
            let (_, pm, _, _) = legendre_pair(n, x);
            (1.0 + x) / (n2 * pm * pm)
        })
        .collect();

    let bary = (0..n)
        .map(|j| {
            1.0 / (0..n)
                .filter(|&k| k != j)
                .map(|k| nodes[j] - nodes[k])
                .product::<f64>()
        })
        .collect();

    Ok(NodeSet {
        degree: p,
        nodes,
        weights,
        bary,
    })
}

fn node_index(ns: &NodeSet, t: f64) -> Option<usize> {
    ns.nodes.iter().position(|&x| x == t)
}

/// ℓ_j(t) in barycentric form; exactly δ_jm at node t_m.
pub fn lagrange_eval(ns: &NodeSet, j: usize, t: f64) -> f64 {
    if let Some(m) = node_index(ns, t) {
        return if m == j { 1.0 } else { 0.0 };
    }
    let denom: f64 = ns
        .nodes
        .iter()
        .zip(&ns.bary)
        .map(|(x, w)| w / (t - x))
        .sum();
    (ns.bary[j] / (t - ns.nodes[j])) / denom
}

/// ℓ'_j(t); at the nodes this is the barycentric differentiation matrix.
pub fn lagrange_deriv(ns: &NodeSet, j: usize, t: f64) -> f64 {
    let x = &ns.nodes;
    if let Some(m) = node_index(ns, t) {
        if m != j {
            return (ns.bary[j] / ns.bary[m]) / (x[m] - x[j]);
        }
        return (0..x.len())
            .filter(|&k| k != j)
            .map(|k| 1.0 / (x[j] - x[k]))
            .sum();
    }
    let sum: f64 = (0..x.len()).filter(|&k| k != j).map(|k| 1.0 / (t - x[k])).sum();
    lagrange_eval(ns, j, t) * sum
}

/// Dense DG operator tables for one degree.
///
/// - `l`: `L_ij = ω_j ℓ'_i(t_j) - δ_ip δ_jp`
/// - `mass`: `diag(ω)`
/// - `l_inv`: inverse of `l`
/// - `l_delta`: bidiagonal surrogate of `l` (-1 diagonal, +1 subdiagonal)
/// - `l_tilde`: `l_delta · l_inv`
/// - `boundary`: `ℓ_j(-1)`
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub nodes: NodeSet,
    pub l: Matrix<f64>,
    pub mass: Matrix<f64>,
    pub l_inv: Matrix<f64>,
    pub l_delta: Matrix<f64>,
    pub l_tilde: Matrix<f64>,
    pub boundary: Vec<f64>,
}

impl OperatorSet {
    pub fn degree(&self) -> usize {
        self.nodes.degree()
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn weights(&self) -> &[f64] {
        self.nodes.weights()
    }
}

pub fn build_operators(ns: &NodeSet) -> Result<OperatorSet> {
    let n = ns.len();
    let p = ns.degree();
    let w = ns.weights();
    let x = ns.nodes();

    let l = Matrix::from_fn(n, n, |i, j| {
        let jump = if i == p && j == p { 1.0 } else { 0.0 };
        w[j] * lagrange_deriv(ns, i, x[j]) - jump
    });
    let mass = Matrix::from_fn(n, n, |i, j| if i == j { w[i] } else { 0.0 });
    let l_inv = l.inverse().map_err(|_| Error::Singular("DG stiffness operator"))?;
    let l_delta = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            -1.0
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let l_tilde = Matrix::from_fn(n, n, |i, j| {
        if i == 0 {
            -l_inv[(0, j)]
        } else {
            l_inv[(i - 1, j)] - l_inv[(i, j)]
        }
    });
    let boundary = (0..n).map(|j| lagrange_eval(ns, j, -1.0)).collect();

    Ok(OperatorSet {
        nodes: ns.clone(),
        l,
        mass,
        l_inv,
        l_delta,
        l_tilde,
        boundary,
    })
}

/// Shared, lazily built operator tables for degree `p`.
pub fn operators(p: usize) -> Result<Arc<OperatorSet>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<OperatorSet>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(ops) = cache.lock().expect("operator cache poisoned").get(&p) {
        return Ok(Arc::clone(ops));
    }
    let ops = Arc::new(build_operators(&radau_nodes(p)?)?);
    let mut guard = cache.lock().expect("operator cache poisoned");
    Ok(Arc::clone(guard.entry(p).or_insert(ops)))
}
