//! Lower bound of the regularized energy over the admissible set, with
//! explicit constants derived from the Poincare chain and Young's
//! inequality, plus the coercivity constant of the regularized density.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mcps_core::dynamics::{Integrator, PotentialMode};
use mcps_core::fields::{project_tsigma, Deformation, ModelParams, PhaseField};
use mcps_core::sphere::SpectralField;

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

/// Explicit constants (K1, K2, K3) with
/// `E_h >= K1 |u|_{H2}^2 + K2 |grad phi|^2 - K3` on the admissible set.
///
/// Derivation, with D = |Delta u|, G = |grad u|, U = |u| and the Poincare
/// chain U^2 <= R^2/6 G^2 <= R^4/36 D^2 on K_2:
///   kappa (L.phi) Delta u        >= -kappa/8 D^2 - 2 kappa (L.phi)^2
///   2 kappa u (L.phi) / R^2      >= -kappa/R^4 U^2 - kappa (L.phi)^2
///   (sigma - 2 kappa/R^2) G^2/2  >= -max(0, 2 kappa/R^2 - sigma) R^2/12 D^2
///   -(sigma/R^2) U^2             >= -(sigma R^2/36) D^2
///   -(kappa/R^4) U^2             >= -(kappa/36) D^2
/// so E_H >= c_D D^2 - (5/2) kappa (L.phi)^2 with
///   c_D = kappa(1/2 - 1/8 - 1/36) - max(0, 2 kappa/R^2 - sigma) R^2/12
///         - sigma R^2/36,
/// and the pointwise coercivity psi_h(v) >= v^2/(4 h0) - Ktilde absorbs the
/// (L.phi)^2 term into E_CH for small enough h0.
fn lower_bound_constants(p: &ModelParams, h0: f64) -> (f64, f64, f64) {
    let r2 = p.radius * p.radius;
    let c_d = p.kappa * (0.5 - 0.125 - 1.0 / 36.0)
        - (2.0 * p.kappa / r2 - p.sigma).max(0.0) * r2 / 12.0
        - p.sigma * r2 / 36.0;
    assert!(c_d > 0.0, "parameter set outside the bound's regime");

    let lam_sq: f64 = p.lambda.iter().map(|l| l * l).sum();
    let coercive = 1.0 / (4.0 * h0) - p.interaction.lambda_max() / 2.0;
    assert!(coercive > 0.0);
    // the entropy coercivity must dominate the donated (Lambda.phi)^2 term
    assert!(p.b / p.epsilon * coercive >= 2.5 * p.kappa * lam_sq);

    // K tilde measured by minimization over a wide grid, per component
    let n = p.n_components() as f64;
    let mut k_tilde = 0.0f64;
    for j in 0..40_000 {
        let r = -25.0 + 50.0 * j as f64 / 39_999.0;
        k_tilde = k_tilde.max(r * r / (4.0 * h0) - p.entropy.psi_h(r, p.h));
    }
    let area = 4.0 * std::f64::consts::PI * r2;
    let k3 = p.b / p.epsilon * n * k_tilde * area + 1e-9;

    let h2_factor = 1.0 + r2 / 6.0 + r2 * r2 / 36.0;
    (c_d / h2_factor, 0.5 * p.b * p.epsilon, k3)
}

#[test]
fn regularized_energy_is_bounded_below_with_explicit_constants() {
    let configs = [
        ModelParams::default_three_component(),
        {
            // sigma below the 2 kappa / R^2 threshold: the other branch
            let mut p = ModelParams::default_three_component();
            p.kappa = 1.0;
            p.sigma = 1.0;
            p
        },
    ];
    for params in configs {
        let h0 = 2.0 * params.h;
        let (k1, k2, k3) = lower_bound_constants(&params, h0);
        let it = Integrator::new(params.clone(), 8).unwrap();
        let basis = it.basis();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            // admissible state: mean-alpha composition (values may leave the
            // simplex; the regularized density is global) and u in K_2
            let mut comps: Vec<SpectralField> = params
                .alpha
                .iter()
                .map(|&a| SpectralField::constant(basis, a))
                .collect();
            for k in 1..basis.n_modes() {
                let mut c: Vec<f64> = (0..3).map(|_| 0.8 * uniform(&mut rng)).collect();
                project_tsigma(&mut c);
                for i in 0..3 {
                    comps[i].coeffs_mut()[k] = c[i];
                }
            }
            let phi = PhaseField::from_components(comps, it.grid()).unwrap();
            let mut uf = SpectralField::zeros(basis);
            for k in 4..basis.n_modes() {
                uf.coeffs_mut()[k] = 0.5 * uniform(&mut rng);
            }
            let u = Deformation::project(uf);

            let e = it.energy(&phi, &u, PotentialMode::Regularized).unwrap().total;
            let u_h2 = u.field().l2_norm_sq()
                + u.field().h1_seminorm_sq()
                + u.field().h2_seminorm_sq();
            let grad_phi: f64 = (0..3).map(|i| phi.component(i).h1_seminorm_sq()).sum();
            let bound = k1 * u_h2 + k2 * grad_phi - k3;
            assert!(
                e >= bound,
                "energy {e} below bound {bound} (K1 {k1}, K2 {k2}, K3 {k3})"
            );
        }
    }
}
