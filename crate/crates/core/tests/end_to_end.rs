use num_complex::Complex64;
use sdg_core::bench::{run_convergence, Method, Reference};
use sdg_core::prelude::*;
use sdg_core::stability::scheme_amplification;

#[test]
fn oscillator_in_complex_arithmetic() {
    let omega = 2.0;
    let problem = problems::dahlquist(Complex64::new(0.0, omega));
    let config = SchemeConfig::new(Variant::ImSdg, 3, 6);
    let traj = integrate(&problem, &config, 20).unwrap();
    let end = traj.states.last().unwrap()[0];
    let exact = Complex64::new(0.0, omega).exp();
    assert!((end - exact).norm() < 1e-9, "{end} vs {exact}");
    // Rotation: modulus stays close to one.
    assert!((end.norm() - 1.0).abs() < 1e-9);
}

#[test]
fn repeated_steps_are_powers_of_the_amplification_factor() {
    let lambda = Complex64::new(-3.0, 1.5);
    let n = 8;
    for variant in [Variant::ExDg, Variant::ExSdg, Variant::ImSdg] {
        let config = SchemeConfig::new(variant, 2, 3);
        let am = scheme_amplification(&config, lambda / n as f64).unwrap();
        let traj = integrate(&problems::dahlquist(lambda), &config, n).unwrap();
        let end = traj.states.last().unwrap()[0];
        assert!((end - am.powu(n as u32)).norm() < 1e-13, "{variant}: {end} vs {}", am.powu(n as u32));
    }
}

#[test]
fn advection_converges_to_the_semi_discrete_solution() {
    // K = 2p sweeps reach the superconvergent rate 2p + 1.
    let problem = problems::advection(16).unwrap().with_t_end(0.5).unwrap();
    let method = Method::from(SchemeConfig::new(Variant::ImSdg, 2, 4));
    let table = run_convergence(&problem, &method, &[0.02, 0.01, 0.005], &Reference::Analytic).unwrap();
    let errors: Vec<f64> = table.rows.iter().map(|r| r.max_error()).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(table.orders_above(0, 1e-13).iter().all(|o| *o > 4.5), "{:?}", table.orders_above(0, 1e-13));
}
