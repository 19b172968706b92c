//! HEOM output against independent reference solutions.

mod common;

use driven_qubit::heom::{propagate, HeomConfig, InitialCondition, Terminator};
use driven_qubit::model::{bath_expansion, DiscreteBath, ModelParams};
use driven_qubit::operator::TwoLevelOperator;

fn dephasing_params() -> ModelParams {
    ModelParams { delta: 0.0, eps0: 0.0, epsd: 0.0, eta: 1.0, beta: 0.3, ..Default::default() }
}

#[test]
fn quadrature_reproduces_matsubara_sum() {
    let p = ModelParams { eta: 1.0, beta: 0.3, ..Default::default() };
    let bath = bath_expansion(&p, 2).unwrap();
    for t in [0.1, 0.3, 1.0, 3.0, 10.0] {
        let exact = common::correlation_quadrature(&p, t);
        let series = bath.correlation(t);
        let rel = (exact - series).norm() / exact.norm();
        assert!(rel < 1e-3, "t = {t}: quadrature {exact}, series {series}");
    }
}

#[test]
fn quadrature_reproduces_matsubara_sum_cold() {
    let p = ModelParams { eta: 0.4, beta: 5.0, omega_c: 2.0, ..Default::default() };
    let bath = bath_expansion(&p, 50).unwrap();
    for t in [0.2, 1.0, 4.0] {
        let exact = common::correlation_quadrature(&p, t);
        let rel = (exact - bath.correlation(t)).norm() / exact.norm();
        assert!(rel < 1e-5, "t = {t}: relative error {rel}");
    }
}

#[test]
fn matsubara_truncation_error_shrinks_with_k() {
    // Cold bath at short times: the dropped poles e^{−ν_k t} are not yet small.
    let p = ModelParams { eta: 0.4, beta: 5.0, omega_c: 2.0, ..Default::default() };
    let exact = common::correlation_quadrature(&p, 0.2);
    let err = |k| (exact - bath_expansion(&p, k).unwrap().correlation(0.2)).norm() / exact.norm();
    let (e12, e20, e50) = (err(12), err(20), err(50));
    assert!(e12 > e20 && e20 > e50, "{e12} {e20} {e50}");
    assert!(e12 > 1e-3 && e50 < 1e-5);
}

#[test]
fn dephasing_exponent_reference_values() {
    // Independent double-precision quadrature values of exp(−Γ(t)).
    let p = dephasing_params();
    for (t, expected) in [(0.1, 0.97769), (0.5, 0.62904), (1.0, 0.205899), (2.0, 7.8679e-3), (5.0, 3.99485e-8)] {
        let got = (-common::dephasing_exponent(&p, t)).exp();
        assert!((got / expected - 1.0).abs() < 1e-4, "t = {t}: {got} vs {expected}");
    }
}

#[test]
fn pure_dephasing_coherence() {
    let p = dephasing_params();
    let cfg = HeomConfig {
        max_tier: 20,
        n_matsubara: 2,
        dt: 0.01,
        t_final: 10.0,
        terminator: Terminator::MarkovianClosure,
        ..Default::default()
    };
    let bath = bath_expansion(&p, cfg.n_matsubara).unwrap();
    let traj = propagate(&InitialCondition::bloch([1.0, 0.0, 0.0]), &p, &bath, &cfg).unwrap();
    let sx = traj.expectation(1);
    for i in (0..traj.states.len()).step_by(50) {
        let t = traj.time(i);
        let expected = (-common::dephasing_exponent(&p, t)).exp();
        let rel = (sx[i].re - expected).abs() / expected;
        assert!(rel < 1e-2, "t = {t}: {} vs {expected}", sx[i].re);
        // Populations are untouched.
        assert!((traj.states[i][(0, 0)].re - 0.5).abs() < 1e-12);
    }
}

#[test]
fn weak_coupling_populations() {
    let p = ModelParams { eta: 0.1, beta: 0.3, eps0: 1.0, epsd: 0.0, ..Default::default() };
    let cfg = HeomConfig {
        max_tier: 6,
        n_matsubara: 2,
        dt: 0.01,
        t_final: 5.0,
        terminator: Terminator::MarkovianClosure,
        ..Default::default()
    };
    let bath = bath_expansion(&p, cfg.n_matsubara).unwrap();
    let ic = InitialCondition::bloch([0.0, 0.0, 1.0]);
    let heom = propagate(&ic, &p, &bath, &cfg).unwrap().expectation(3);
    let rho0 = TwoLevelOperator::from_bloch([0.0, 0.0, 1.0]).matrix;
    let discrete = DiscreteBath::drude(&p, 80);
    // Exact in the bath; what remains is sampling noise, whose worst point
    // over the grid is about 0.02 at this sample count.
    let oracle = common::stochastic_sigma_z(&p, &discrete, rho0, 0.05, 101, 10, 3000, 42);
    let worst = (0..oracle.len()).map(|i| (heom[5 * i].re - oracle[i]).abs()).fold(0.0, f64::max);
    assert!(worst < 0.05, "max deviation {worst}");
    let mean = (0..oracle.len()).map(|i| heom[5 * i].re - oracle[i]).sum::<f64>() / oracle.len() as f64;
    assert!(mean.abs() < 0.01, "mean deviation {mean}");
}

#[test]
fn second_order_master_equation_at_weak_coupling() {
    // TCL2 misses O(η²) terms; at η = 0.025 they are below 5e-3.
    let p = ModelParams { eta: 0.025, beta: 0.3, eps0: 1.0, epsd: 0.0, ..Default::default() };
    let cfg = HeomConfig {
        max_tier: 4,
        n_matsubara: 2,
        dt: 0.01,
        t_final: 5.0,
        terminator: Terminator::MarkovianClosure,
        ..Default::default()
    };
    let bath = bath_expansion(&p, cfg.n_matsubara).unwrap();
    let heom = propagate(&InitialCondition::bloch([0.0, 0.0, 1.0]), &p, &bath, &cfg).unwrap().expectation(3);
    let rho0 = TwoLevelOperator::from_bloch([0.0, 0.0, 1.0]).matrix;
    let oracle = common::tcl2_sigma_z(&p, &DiscreteBath::drude(&p, 80), rho0, cfg.dt, heom.len(), 4);
    let worst = heom.iter().zip(&oracle).map(|(a, b)| (a.re - b).abs()).fold(0.0, f64::max);
    assert!(worst < 5e-3, "max deviation {worst}");
}
