//! Linear stability analysis on `u' = λ u` over one unit step.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problems::dahlquist;
use crate::scalar::Scalar;
use crate::scheme::{step, SchemeConfig};

/// `Am(λ)` such that one step of size 1 maps `u(0) = 1` to `Am(λ)`.
///
/// Implicit node equations are affine, so each node solve is a single
/// complex division.
pub fn scheme_amplification(config: &SchemeConfig, lambda: Complex64) -> Result<Complex64> {
    let problem = dahlquist(lambda);
    let (end, _) = step(&problem, config, &[Complex64::one()], 0.0, 1.0)?;
    Ok(end[0])
}

/// `|Am(λ)|`, with failed node solves and overflow reported as `f64::MAX`.
fn abs_amplification(config: &SchemeConfig, lambda: Complex64) -> f64 {
    match scheme_amplification(config, lambda) {
        Ok(am) if am.is_finite() => am.norm(),
        _ => f64::MAX,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionScan {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    /// `|Am|` at grid point `(ix, iy)` stored at `iy * nx + ix`; `iy = 0` is
    /// the bottom row (`im_range.0`).
    pub values: Vec<f64>,
}

impl RegionScan {
    pub fn re_at(&self, ix: usize) -> f64 {
        grid_point(self.re_range, self.nx, ix)
    }

    pub fn im_at(&self, iy: usize) -> f64 {
        grid_point(self.im_range, self.ny, iy)
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn is_stable(&self, ix: usize, iy: usize) -> bool {
        is_stable_value(self.value(ix, iy))
    }

    pub fn stable_count(&self) -> usize {
        self.values.iter().filter(|v| is_stable_value(**v)).count()
    }
}

/// Stability threshold `|Am| ≤ 1`.
pub fn is_stable_value(abs_am: f64) -> bool {
    abs_am <= 1.0
}

fn grid_point(range: (f64, f64), n: usize, i: usize) -> f64 {
    range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
}

pub const DEFAULT_RE_RANGE: (f64, f64) = (-15.0, 5.0);
pub const DEFAULT_IM_RANGE: (f64, f64) = (-15.0, 15.0);
pub const DEFAULT_RESOLUTION: (usize, usize) = (600, 600);

/// Evaluates `|Am|` on an `nx × ny` grid. Points are evaluated in parallel
/// on the current rayon pool; results are stored by grid index.
pub fn region_scan(
    config: &SchemeConfig,
    re_range: (f64, f64),
    im_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<RegionScan> {
    let (nx, ny) = resolution;
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(format!("scan resolution must be at least 2x2, got {nx}x{ny}")));
    }
    if !(re_range.0 < re_range.1) || !(im_range.0 < im_range.1) {
        return Err(Error::InvalidArgument("scan ranges must be increasing".into()));
    }
    // Surface configuration errors once instead of per point.
    scheme_amplification(config, Complex64::new(0.0, 0.0))?;
    let values = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (ix, iy) = (idx % nx, idx / nx);
            let lambda = Complex64::new(grid_point(re_range, nx, ix), grid_point(im_range, ny, iy));
            abs_amplification(config, lambda)
        })
        .collect();
    Ok(RegionScan {
        re_range,
        im_range,
        nx,
        ny,
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub max_abs: f64,
    pub worst: Complex64,
    pub samples: usize,
    pub pass: bool,
}

/// Tolerance on `max |Am|` for the A-stability verdict.
pub const A_STABILITY_SLACK: f64 = 1e-8;

/// Closed left half-plane sample set: the imaginary axis at log-spaced
/// `|y| ∈ [1e-4, 1e4]` (both signs, plus 0) and rays at 37 angles in
/// `[π/2, 3π/2]` with log-spaced `|λ| ∈ [1e-4, 1e6]`.
pub fn default_probe_samples() -> Vec<Complex64> {
    let mut samples = vec![Complex64::new(0.0, 0.0)];
    for k in 0..=160 {
        let y = 10f64.powf(-4.0 + 8.0 * k as f64 / 160.0);
        samples.push(Complex64::new(0.0, y));
        samples.push(Complex64::new(0.0, -y));
    }
    let n_angles = 36;
    for a in 0..=n_angles {
        let angle = std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * a as f64 / n_angles as f64;
        let dir = Complex64::from_polar(1.0, angle);
        // Exact imaginary-axis directions are already covered above.
        if a == 0 || a == n_angles {
            continue;
        }
        for k in 0..=100 {
            let r = 10f64.powf(-4.0 + 10.0 * k as f64 / 100.0);
            samples.push(dir * r);
        }
    }
    samples
}

pub fn a_stability_probe(config: &SchemeConfig, samples: &[Complex64]) -> Result<ProbeReport> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty sample set".into()));
    }
    scheme_amplification(config, Complex64::new(0.0, 0.0))?;
    let (max_abs, worst) = samples
        .par_iter()
        .map(|&lambda| (abs_amplification(config, lambda), lambda))
        .reduce(
            || (f64::NEG_INFINITY, Complex64::new(0.0, 0.0)),
            |a, b| if b.0 > a.0 { b } else { a },
        );
    Ok(ProbeReport {
        max_abs,
        worst,
        samples: samples.len(),
        pass: max_abs <= 1.0 + A_STABILITY_SLACK,
    })
}

/// Leftmost point `x ≤ 0` such that every sampled `λ ∈ [x, 0]` (spacing
/// `resolution`) is stable, refined by bisection at the first instability.
/// Returns `-limit` if the whole interval `[-limit, 0]` is stable.
pub fn real_stability_limit(config: &SchemeConfig, limit: f64, resolution: f64) -> Result<f64> {
    let stable = |x: f64| -> Result<bool> {
        Ok(is_stable_value(scheme_amplification(config, Complex64::new(x, 0.0))?.norm()))
    };
    let mut inside = 0.0;
    let steps = (limit / resolution).ceil() as usize;
    for k in 1..=steps {
        let x = -(k as f64 * resolution).min(limit);
        if !stable(x)? {
            let (mut good, mut bad) = (inside, x);
            for _ in 0..50 {
                let mid = 0.5 * (good + bad);
                if stable(mid)? {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            return Ok(good);
        }
        inside = x;
    }
    Ok(-limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::dg_amplification;
    use crate::scheme::{Init, Variant};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn amplification_at_zero_is_one() {
        for v in [Variant::ExDg, Variant::ExSdg, Variant::ImSdg, Variant::ImSdgTheta] {
            for p in [0, 3, 7] {
                let cfg = SchemeConfig::new(v, p, p + 1).with_theta(0.7);
                assert!((scheme_amplification(&cfg, c(0.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn imsdg_p0_is_implicit_euler() {
        for k in 1..4 {
            let cfg = SchemeConfig::new(Variant::ImSdg, 0, k);
            for lambda in [c(-2.0, 0.0), c(-1.0, 3.0), c(0.5, -0.2)] {
                let am = scheme_amplification(&cfg, lambda).unwrap();
                assert!((am - 1.0 / (1.0 - lambda)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn exsdg_p0_k1_is_picard_euler() {
        let cfg = SchemeConfig::new(Variant::ExSdg, 0, 1);
        for lambda in [c(-0.3, 0.0), c(-1.0, 2.0), c(1.5, 0.5)] {
            let am = scheme_amplification(&cfg, lambda).unwrap();
            assert!((am - (1.0 + lambda * (1.0 + lambda))).norm() < 1e-14);
        }
    }

    #[test]
    fn conjugate_symmetry() {
        for cfg in [
            SchemeConfig::new(Variant::ExSdg, 4, 8),
            SchemeConfig::new(Variant::ImSdg, 5, 5),
            SchemeConfig::new(Variant::ExDg, 3, 3),
        ] {
            for lambda in [c(-1.3, 2.1), c(-7.0, 0.4), c(0.2, 5.0)] {
                let a = scheme_amplification(&cfg, lambda).unwrap();
                let b = scheme_amplification(&cfg, lambda.conj()).unwrap();
                assert!((a.conj() - b).norm() <= 1e-13 * (1.0 + a.norm()));
            }
        }
    }

    #[test]
    fn theta_limit_p0_is_implicit_euler_decay() {
        let cfg = SchemeConfig::new(Variant::ImSdgTheta, 0, 2).with_theta(1.0);
        for r in [1e2, 1e4, 1e6] {
            let am = scheme_amplification(&cfg, c(-r, 0.0)).unwrap();
            assert!(am.norm() <= 1.0 / (1.0 + r) * 1.0000001);
        }
    }

    #[test]
    fn large_k_converges_to_dg() {
        for (v, p) in [(Variant::ImSdg, 3), (Variant::ExSdg, 4), (Variant::ImSdg, 6)] {
            let cfg = SchemeConfig::new(v, p, 60);
            for lambda in [c(-1.0, 0.5), c(-0.5, -1.0), c(-2.0, 0.0)] {
                let a = scheme_amplification(&cfg, lambda).unwrap();
                let b = dg_amplification(p, lambda, 1.0).unwrap();
                assert!((a - b).norm() <= 1e-10, "{v} p={p} λ={lambda}: {}", (a - b).norm());
            }
        }
    }

    #[test]
    fn scan_layout_and_origin() {
        let cfg = SchemeConfig::new(Variant::ExSdg, 2, 2);
        let scan = region_scan(&cfg, (-4.0, 2.0), (-3.0, 3.0), (7, 5)).unwrap();
        assert_eq!(scan.values.len(), 35);
        // λ = 0 sits at ix = 4, iy = 2.
        assert_eq!(scan.re_at(4), 0.0);
        assert_eq!(scan.im_at(2), 0.0);
        assert_eq!(scan.value(4, 2), 1.0);
        assert!(scan.is_stable(4, 2));
        assert!(scan.values.iter().all(|v| v.is_finite() && *v >= 0.0));
        let direct = scheme_amplification(&cfg, c(scan.re_at(1), scan.im_at(3))).unwrap().norm();
        assert_eq!(scan.value(1, 3), direct);
        assert!(region_scan(&cfg, (-1.0, 1.0), (-1.0, 1.0), (1, 5)).is_err());
    }

    #[test]
    fn amplitude_continuous_through_origin() {
        let cfg = SchemeConfig::new(Variant::ExSdg, 4, 4);
        let h = 1e-6;
        for dir in [c(1.0, 0.0), c(0.0, 1.0)] {
            let a = scheme_amplification(&cfg, dir * h).unwrap().norm();
            let b = scheme_amplification(&cfg, -dir * h).unwrap().norm();
            assert!((a - 1.0).abs() < 1e-5 && (b - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn explicit_scheme_unstable_far_left() {
        let cfg = SchemeConfig::new(Variant::ExSdg, 4, 4);
        assert!(scheme_amplification(&cfg, c(-100.0, 0.0)).unwrap().norm() > 1.0);
        let probe = a_stability_probe(&cfg, &default_probe_samples()).unwrap();
        assert!(!probe.pass);
    }

    #[test]
    fn probe_samples_cover_left_half_plane() {
        let s = default_probe_samples();
        assert!(s.iter().all(|z| z.re <= 1e-12));
        assert!(s.iter().any(|z| z.re == 0.0 && z.im.abs() >= 1e4 * 0.999));
        assert!(s.iter().map(|z| z.norm()).fold(0.0, f64::max) >= 1e6 * 0.999);
    }

    #[test]
    fn constant_init_changes_explicit_amplification() {
        let a = SchemeConfig::new(Variant::ExSdg, 0, 1);
        let b = a.clone().with_init(Init::Constant);
        let lambda = c(-0.5, 0.0);
        // constant start: one Euler step only
        assert!((scheme_amplification(&b, lambda).unwrap() - (1.0 + lambda)).norm() < 1e-15);
        assert!((scheme_amplification(&a, lambda).unwrap() - (1.0 + lambda * (1.0 + lambda))).norm() < 1e-15);
    }

    /// Hand computation for p=1, K=1 from constant data, λ → -∞:
    /// node 0 gives (1 - 5λ/12)/(1 - 3λ/4) → 5/9, node 1 gives
    /// (u_0 + 5λ/12)/(1 - λ/4) → -5/3.
    #[test]
    fn imsdg_p1_k1_constant_limit() {
        let cfg = SchemeConfig::new(Variant::ImSdg, 1, 1).with_init(Init::Constant);
        for lam in [c(-1e8, 0.0), c(0.0, 1e8)] {
            let am = scheme_amplification(&cfg, lam).unwrap();
            assert!((am - c(-5.0 / 3.0, 0.0)).norm() < 1e-6, "{am}");
        }
        let lam = -2.0;
        let u0 = (1.0 - 5.0 * lam / 12.0) / (1.0 - 0.75 * lam);
        let u1 = (u0 + 5.0 * lam / 12.0) / (1.0 - 0.25 * lam);
        assert!((scheme_amplification(&cfg, c(lam, 0.0)).unwrap() - c(u1, 0.0)).norm() < 1e-14);
    }
}
