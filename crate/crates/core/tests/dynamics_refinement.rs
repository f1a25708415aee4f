//! Time-discretization oracles: self-convergence of trajectories, the
//! first-order refinement law of the energy-identity residual, discrete
//! energy decay under the automatic stabilization, and the closed-form
//! relaxation of a single deformation mode.

use mcps_core::dynamics::{dissipation_residuals, twin_run, Integrator, PotentialMode, SimState};
use mcps_core::fields::ModelParams;
use mcps_core::sphere::SpectralField;

fn refinement_params(dt: f64, stabilization: f64) -> ModelParams {
    let mut p = ModelParams::default_three_component();
    p.dt = dt;
    p.stabilization = stabilization;
    p
}

fn run_to(it: &Integrator, mut s: SimState, n_steps: usize) -> SimState {
    for _ in 0..n_steps {
        let (next, _) = it.step(&s).unwrap();
        s = next;
    }
    s
}

fn state_distance(a: &SimState, b: &SimState) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.phi.n() {
        acc += a.phi.component(i).sub(b.phi.component(i)).l2_norm_sq();
    }
    acc += a.u.field().sub(b.u.field()).l2_norm_sq();
    acc.sqrt()
}

#[test]
fn trajectory_error_decreases_at_first_order() {
    // fixed T, errors against a dt/64 reference; observed rate in [0.8, 1.2].
    // dt small enough that dt * lambda * S < 1, the asymptotic regime of the
    // stabilized scheme
    let lmax = 8;
    let t_final = 0.01;
    let dts = [2e-4, 1e-4, 5e-5];
    let s_stab = 50.0;

    let make_state = |dt: f64| {
        let it = Integrator::new(refinement_params(dt, s_stab), lmax).unwrap();
        let mut s = it.initial_state(0.1, 3, 0.05, 21).unwrap();
        // seed some deformation so both equations are exercised
        let mut uf = SpectralField::zeros(it.basis());
        uf.set_coeff(2, 1, 0.02);
        uf.set_coeff(3, -2, -0.015);
        s.u = mcps_core::fields::Deformation::project(uf);
        (it, s)
    };

    let dt_ref = dts[2] / 64.0;
    let (it_ref, s0_ref) = make_state(dt_ref);
    let reference = run_to(&it_ref, s0_ref, (t_final / dt_ref).round() as usize);

    let mut errors = Vec::new();
    for &dt in &dts {
        let (it, s0) = make_state(dt);
        let s = run_to(&it, s0, (t_final / dt).round() as usize);
        errors.push(state_distance(&s, &reference));
    }
    for w in errors.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!(
            (0.8..=1.2).contains(&rate),
            "observed rate {rate} (errors {errors:?})"
        );
    }
}

#[test]
fn energy_residual_obeys_first_order_refinement_law() {
    // r_n = E^{n+1} - E^n + dt (diss_u + diss_phi)^{n+1} is O(dt^2) per
    // step; halving dt shrinks max |r_n| by a factor in [3, 5]
    let lmax = 8;
    let t_final = 0.02;
    let mut max_residuals = Vec::new();
    for &dt in &[2e-4, 1e-4] {
        let it = Integrator::new(refinement_params(dt, 50.0), lmax).unwrap();
        let mut s = it.initial_state(0.1, 3, 0.05, 4).unwrap();
        let n_steps = (t_final / dt).round() as usize;
        let mut energies = vec![
            it.energy(&s.phi, &s.u, PotentialMode::Regularized)
                .unwrap()
                .total,
        ];
        let mut dp = Vec::new();
        let mut du = Vec::new();
        for _ in 0..n_steps {
            let (next, rec) = it.step(&s).unwrap();
            s = next;
            energies.push(
                it.energy(&s.phi, &s.u, PotentialMode::Regularized)
                    .unwrap()
                    .total,
            );
            dp.push(rec.diss_phi);
            du.push(rec.diss_u);
        }
        let worst = dissipation_residuals(&energies, &dp, &du, dt)
            .iter()
            .fold(0.0f64, |a, r| a.max(r.abs()));
        max_residuals.push(worst);
    }
    let ratio = max_residuals[0] / max_residuals[1];
    assert!(
        (3.0..=5.0).contains(&ratio),
        "residual ratio {ratio} ({max_residuals:?})"
    );
}

#[test]
fn discrete_energy_decays_with_automatic_stabilization() {
    // S = b/(eps h): the regularized energy is nonincreasing at every step
    let mut p = ModelParams::default_three_component();
    p.h = 1e-2;
    p.stabilization = ModelParams::auto_stabilization(p.b, p.epsilon, p.h);
    p.dt = 1e-3;
    let it = Integrator::new(p, 12).unwrap();
    let mut s = it.initial_state(0.12, 4, 0.05, 8).unwrap();
    let mut prev = it
        .energy(&s.phi, &s.u, PotentialMode::Regularized)
        .unwrap()
        .total;
    for step in 0..1000 {
        let (next, _) = it.step(&s).unwrap();
        s = next;
        let e = it
            .energy(&s.phi, &s.u, PotentialMode::Regularized)
            .unwrap()
            .total;
        assert!(e <= prev + 1e-10, "step {step}: energy rose {prev} -> {e}");
        prev = e;
    }
}

#[test]
fn deformation_mode_relaxes_like_the_exact_exponential() {
    // Lambda = 0, phi = alpha: a degree-2 deformation mode follows the ODE
    // beta u' = -(24 kappa/R^4 + 4 sigma/R^2) u; at dt -> 0 the trajectory
    // matches the exponential to 1e-3 relative at T = 0.1
    let mut p = ModelParams::default_three_component();
    p.lambda = vec![0.0; 3];
    p.dt = 1e-5;
    let it = Integrator::new(p.clone(), 8).unwrap();
    let mut s = it.homogeneous_state().unwrap();
    let mut uf = SpectralField::zeros(it.basis());
    let amp = 0.25;
    uf.set_coeff(2, 2, amp);
    s.u = mcps_core::fields::Deformation::project(uf);
    let rate = (24.0 * p.kappa / p.radius.powi(4) + 4.0 * p.sigma / p.radius.powi(2)) / p.beta;
    let t_final = 0.1;
    let n = (t_final / p.dt).round() as usize;
    let s = run_to(&it, s, n);
    let got = s.u.field().coeff(2, 2);
    let expect = amp * (-rate * t_final).exp();
    assert!(
        ((got - expect) / expect).abs() < 1e-3,
        "{got} vs {expect}"
    );
}

#[test]
fn twin_runs_stay_in_the_linear_response_regime() {
    // halving the perturbation size leaves the amplification within a
    // factor of two, and log D(t) grows at most linearly
    let mut p = ModelParams::default_three_component();
    p.dt = 1e-3;
    p.stabilization = 120.0;
    let it = Integrator::new(p, 10).unwrap();
    let base = it.initial_state(0.1, 3, 0.05, 17).unwrap();
    let n_steps = 200;
    let rep_a = twin_run(&it, &base, 1e-6, 1e-6, 5, n_steps, 10).unwrap();
    let rep_b = twin_run(&it, &base, 1e-8, 1e-8, 5, n_steps, 10).unwrap();
    assert!(rep_a.amplification > 0.0 && rep_b.amplification > 0.0);
    let ratio = rep_a.amplification / rep_b.amplification;
    assert!(
        (0.5..=2.0).contains(&ratio),
        "amplifications {} vs {}",
        rep_a.amplification,
        rep_b.amplification
    );

    // Gronwall shape: log D grows at most linearly, i.e. no terminal
    // acceleration. Doubling the window must not much more than double the
    // accumulated log growth (a t^p trend with p > 1 would).
    let logs: Vec<f64> = rep_a.d.iter().map(|&d| d.ln()).collect();
    let growth_half = logs[logs.len() / 2] - logs[0];
    let growth_full = logs[logs.len() - 1] - logs[0];
    assert!(
        growth_full <= 3.2 * growth_half + 1.0,
        "superlinear log growth: half {growth_half}, full {growth_full}"
    );
}
