//! The coupled evolution: chemical potential, potential differences, the
//! stabilized IMEX time stepper with per-degree block solves, energies, and
//! the dissipation bookkeeping.
//!
//! One step treats every linear operator implicitly and the regularized
//! entropy gradient explicitly with a stabilization term `S P(phi^{n+1} -
//! phi^n)` inside the potential differences. Per harmonic mode the unknowns
//! are the composition coefficients and the deformation coefficient, coupled
//! through a dense (N+1) x (N+1) system whose matrix depends only on the
//! degree, so one factorization per degree is reused across orders.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{CoreError, Result};
use crate::fields::{project_tsigma_fields, Deformation, ModelParams, PhaseField};
use crate::sphere::{HarmonicBasis, QuadratureGrid, SpectralField};

/// Which entropy branch to evaluate: the Yosida-regularized family that the
/// discrete scheme dissipates, or the exact logarithmic density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialMode {
    Regularized,
    Exact,
}

/// Chemical potential and its tangent projection.
#[derive(Debug, Clone)]
pub struct ChemicalPotential {
    /// mu on the grid, one vector per component.
    pub mu_grid: Vec<Vec<f64>>,
    /// w = P mu as spectral fields.
    pub w: Vec<SpectralField>,
    /// Spatial mean of each w component (the multiplier diagnostic).
    pub mean_w: Vec<f64>,
}

/// Simulation state at one time level.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub step: u64,
    pub phi: PhaseField,
    pub u: Deformation,
}

/// Energy split into the deformation (Helfrich) and composition parts.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBreakdown {
    pub helfrich: f64,
    pub cahn_hilliard: f64,
    pub total: f64,
}

/// Per-step bookkeeping produced by the stepper.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Implicit potential differences w^{n+1}.
    pub w: Vec<SpectralField>,
    /// Mean of each w component.
    pub mean_w: Vec<f64>,
    /// (L grad w^{n+1}, grad w^{n+1}).
    pub diss_phi: f64,
    /// beta |(u^{n+1} - u^n)/dt|^2.
    pub diss_u: f64,
    /// Grid value left [1e-14, 1 - 1e-14] this step (monitored, not fatal).
    pub breakdown: bool,
}

/// Time integrator with cached per-degree factorizations.
pub struct Integrator {
    params: ModelParams,
    basis: Arc<HarmonicBasis>,
    grid: Arc<QuadratureGrid>,
    p_lambda: Vec<f64>,
    theta: Vec<f64>,
    lus: Vec<LU<f64, Dyn, Dyn>>,
}

impl Integrator {
    pub fn new(params: ModelParams, lmax: usize) -> Result<Self> {
        params.validate()?;
        let basis = HarmonicBasis::new(lmax, params.radius)?;
        let grid = Arc::new(QuadratureGrid::for_basis(&basis));
        Self::with_discretization(params, basis, grid)
    }

    pub fn with_discretization(
        params: ModelParams,
        basis: Arc<HarmonicBasis>,
        grid: Arc<QuadratureGrid>,
    ) -> Result<Self> {
        params.validate()?;
        let n = params.n_components();
        let r2 = params.radius * params.radius;
        let p_lambda = crate::fields::projected_tsigma(&params.lambda);

        // theta_l: symbol of the implicit deformation operator
        let theta: Vec<f64> = (0..=basis.lmax())
            .map(|l| {
                let lam = basis.eigenvalue(l);
                params.kappa * lam * lam + (params.sigma - 2.0 * params.kappa / r2) * lam
                    - 2.0 * params.sigma / r2
            })
            .collect();
        if params.beta == 0.0 {
            for (l, &th) in theta.iter().enumerate().skip(2) {
                if !(th > 0.0) {
                    return Err(CoreError::InvalidParameter {
                        name: "beta",
                        reason: format!(
                            "quasi-static deformation needs a positive operator; \
                             symbol at degree {l} is {th}"
                        ),
                    });
                }
            }
        }

        // projector and the implicit w-block G = b eps lam I + S P
        //   - (b/eps) P A + kappa (P Lambda) Lambda^T
        let proj = DMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            delta - 1.0 / n as f64
        });
        let a_mat = DMatrix::from_fn(n, n, |i, j| params.interaction.entry(i, j));
        let l_mat = params.mobility.matrix().clone();
        let lam_col = DVector::from_row_slice(&p_lambda);
        let lam_row = DVector::from_row_slice(&params.lambda);

        let mut lus = Vec::with_capacity(basis.lmax() + 1);
        for l in 0..=basis.lmax() {
            let lam = basis.eigenvalue(l);
            let mut m = DMatrix::<f64>::identity(n + 1, n + 1);
            if l > 0 {
                let g = DMatrix::<f64>::identity(n, n) * (params.b * params.epsilon * lam)
                    + &proj * params.stabilization
                    - (&proj * &a_mat) * (params.b / params.epsilon)
                    + (&lam_col * lam_row.transpose()) * params.kappa;
                let top_left = DMatrix::<f64>::identity(n, n) + (&l_mat * g) * (params.dt * lam);
                m.view_mut((0, 0), (n, n)).copy_from(&top_left);
                if l >= 2 {
                    let cu = &l_mat
                        * (&lam_col * (2.0 * params.kappa / r2 - params.kappa * lam));
                    let top_right = cu * (params.dt * lam);
                    m.view_mut((0, n), (n, 1)).copy_from(&top_right);
                    for j in 0..n {
                        m[(n, j)] =
                            -params.dt * params.kappa * (lam - 2.0 / r2) * params.lambda[j];
                    }
                    m[(n, n)] = params.beta + params.dt * theta[l];
                }
                // l == 1: bottom row stays e_{N+1}, forcing q = 0
            }
            let lu = m.lu();
            let diag: Vec<f64> = (0..n + 1).map(|i| lu.u()[(i, i)].abs()).collect();
            let dmax = diag.iter().cloned().fold(0.0f64, f64::max);
            let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
            let rcond = if dmax > 0.0 { dmin / dmax } else { 0.0 };
            if !(rcond > 1e-14) {
                return Err(CoreError::SingularSystem { degree: l, rcond });
            }
            lus.push(lu);
        }

        Ok(Self {
            params,
            basis,
            grid,
            p_lambda,
            theta,
            lus,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn basis(&self) -> &Arc<HarmonicBasis> {
        &self.basis
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    /// The homogeneous state `(alpha, 0)` at t = 0.
    pub fn homogeneous_state(&self) -> Result<SimState> {
        let phi = PhaseField::from_components(
            self.params
                .alpha
                .iter()
                .map(|&a| SpectralField::constant(&self.basis, a))
                .collect(),
            &self.grid,
        )?;
        Ok(SimState {
            t: 0.0,
            step: 0,
            phi,
            u: Deformation::zeros(&self.basis),
        })
    }

    /// Seeded random initial state respecting all constraints.
    pub fn initial_state(
        &self,
        amplitude: f64,
        l_init: usize,
        margin: f64,
        seed: u64,
    ) -> Result<SimState> {
        let (phi, _) = crate::fields::init_phase(
            &self.params.alpha,
            &self.basis,
            &self.grid,
            amplitude,
            l_init,
            margin,
            seed,
        )?;
        Ok(SimState {
            t: 0.0,
            step: 0,
            phi,
            u: Deformation::zeros(&self.basis),
        })
    }

    /// Entropy-gradient term `(b/eps) P psi'_h(phi^n)` analyzed per mode;
    /// also reports whether any grid value left the monitored interval.
    fn explicit_entropy_term(&self, phi: &PhaseField) -> Result<(Vec<SpectralField>, bool)> {
        let n = phi.n();
        let scale = self.params.b / self.params.epsilon;
        let mut breakdown = false;
        let mut fields = Vec::with_capacity(n);
        for i in 0..n {
            let vals = phi.grid_values(i);
            let mut g = Vec::with_capacity(vals.len());
            for &v in vals {
                if !(1e-14..=1.0 - 1e-14).contains(&v) {
                    breakdown = true;
                }
                g.push(scale * self.params.entropy.psi_h_prime(v, self.params.h));
            }
            fields.push(self.grid.analyze(&g)?);
        }
        project_tsigma_fields(&mut fields);
        Ok((fields, breakdown))
    }

    /// One stabilized IMEX step.
    pub fn step(&self, state: &SimState) -> Result<(SimState, StepRecord)> {
        let n = self.params.n_components();
        let p = &self.params;
        let (r_fields, breakdown) = self.explicit_entropy_term(&state.phi)?;

        let n_modes = self.basis.n_modes();
        let mut new_phi: Vec<SpectralField> =
            (0..n).map(|_| SpectralField::zeros(&self.basis)).collect();
        let mut new_u = SpectralField::zeros(&self.basis);
        let mut w_fields: Vec<SpectralField> =
            (0..n).map(|_| SpectralField::zeros(&self.basis)).collect();

        let mut rhs = DVector::<f64>::zeros(n + 1);
        let mut diss_u = 0.0;
        for k in 0..n_modes {
            let mode = self.basis.modes()[k];
            let l = mode.l;
            let lam = self.basis.eigenvalue(l);
            let phin: Vec<f64> = (0..n)
                .map(|i| state.phi.component(i).coeffs()[k])
                .collect();
            let un = state.u.field().coeffs()[k];

            if l == 0 {
                // lambda_0 = 0: the mode is untouched; masses are exact
                for i in 0..n {
                    new_phi[i].coeffs_mut()[k] = phin[i];
                }
                // w at the mean mode, for the multiplier diagnostic
                let wk = self.w_mode(&phin, 0.0, lam, &phin, &r_fields, k);
                for i in 0..n {
                    w_fields[i].coeffs_mut()[k] = wk[i];
                }
                continue;
            }

            let pphin = crate::fields::projected_tsigma(&phin);
            let rk: Vec<f64> = (0..n).map(|i| r_fields[i].coeffs()[k]).collect();
            let stab_minus_entropy: Vec<f64> = (0..n)
                .map(|i| p.stabilization * pphin[i] - rk[i])
                .collect();
            let lterm = p.mobility.apply(&stab_minus_entropy);
            for i in 0..n {
                rhs[i] = phin[i] + p.dt * lam * lterm[i];
            }
            rhs[n] = if l >= 2 { p.beta * un } else { 0.0 };

            let sol = self.lus[l].solve(&rhs).ok_or(CoreError::SingularSystem {
                degree: l,
                rcond: 0.0,
            })?;
            let mut pv: Vec<f64> = (0..n).map(|i| sol[i]).collect();
            // remove the span{e} round-off drift: modes l >= 1 carry none
            let drift = pv.iter().sum::<f64>() / n as f64;
            for x in pv.iter_mut() {
                *x -= drift;
            }
            let q = if l >= 2 { sol[n] } else { 0.0 };

            for i in 0..n {
                new_phi[i].coeffs_mut()[k] = pv[i];
            }
            new_u.coeffs_mut()[k] = q;
            if l >= 2 {
                let du = (q - un) / p.dt;
                diss_u += du * du;
            }

            let wk = self.w_mode(&pv, q, lam, &phin, &r_fields, k);
            for i in 0..n {
                w_fields[i].coeffs_mut()[k] = wk[i];
            }
        }
        diss_u *= p.beta;

        // (L grad w, grad w) spectrally
        let mut diss_phi = 0.0;
        for k in 0..n_modes {
            let lam = self.basis.eigenvalue(self.basis.modes()[k].l);
            if lam == 0.0 {
                continue;
            }
            let wv: Vec<f64> = (0..n).map(|i| w_fields[i].coeffs()[k]).collect();
            let lw = p.mobility.apply(&wv);
            diss_phi += lam * wv.iter().zip(&lw).map(|(a, b)| a * b).sum::<f64>();
        }

        let area_sqrt = self.basis.area().sqrt();
        let mean_w: Vec<f64> = (0..n).map(|i| w_fields[i].coeffs()[0] / area_sqrt).collect();

        let phi = PhaseField::from_components(new_phi, &self.grid)?;
        let state_new = SimState {
            t: state.t + p.dt,
            step: state.step + 1,
            phi,
            u: Deformation::project(new_u),
        };
        Ok((
            state_new,
            StepRecord {
                w: w_fields,
                mean_w,
                diss_phi,
                diss_u,
                breakdown,
            },
        ))
    }

    /// Scheme-consistent potential differences at one mode:
    /// `w = b eps lam p + S P(p - phi^n) - (b/eps) P A p + kappa (Lam.p) PLam
    ///    + (2 kappa/R^2 - kappa lam) q PLam + r_k`.
    fn w_mode(
        &self,
        pv: &[f64],
        q: f64,
        lam: f64,
        phin: &[f64],
        r_fields: &[SpectralField],
        k: usize,
    ) -> Vec<f64> {
        let p = &self.params;
        let n = pv.len();
        let r2 = p.radius * p.radius;
        let diff: Vec<f64> = (0..n).map(|i| pv[i] - phin[i]).collect();
        let pdiff = crate::fields::projected_tsigma(&diff);
        let ap = p.interaction.apply(pv);
        let pap = crate::fields::projected_tsigma(&ap);
        let lam_dot_p: f64 = p.lambda.iter().zip(pv).map(|(a, b)| a * b).sum();
        let ucoef = 2.0 * p.kappa / r2 - p.kappa * lam;
        (0..n)
            .map(|i| {
                p.b * p.epsilon * lam * pv[i] + p.stabilization * pdiff[i]
                    - p.b / p.epsilon * pap[i]
                    + p.kappa * lam_dot_p * self.p_lambda[i]
                    + ucoef * q * self.p_lambda[i]
                    + r_fields[i].coeffs()[k]
            })
            .collect()
    }

    /// Chemical potential `mu` and its tangent projection `w = P mu`.
    pub fn chemical_potential(
        &self,
        phi: &PhaseField,
        u: &Deformation,
        mode: PotentialMode,
    ) -> Result<ChemicalPotential> {
        let n = phi.n();
        let p = &self.params;
        let r2 = p.radius * p.radius;
        let scale = p.b / p.epsilon;

        // nonlinear entropy term on the grid
        let mut mu: Vec<SpectralField> = Vec::with_capacity(n);
        for i in 0..n {
            let vals = phi.grid_values(i);
            let mut g = Vec::with_capacity(vals.len());
            for (idx, &v) in vals.iter().enumerate() {
                let pv = match mode {
                    PotentialMode::Regularized => p.entropy.psi_h_prime(v, p.h),
                    PotentialMode::Exact => {
                        p.entropy
                            .psi_prime(v)
                            .map_err(|_| CoreError::OutOfDomain {
                                component: i,
                                index: idx,
                                value: v,
                            })?
                    }
                };
                g.push(scale * pv);
            }
            mu.push(self.grid.analyze(&g)?);
        }

        // linear terms, mode by mode
        for k in 0..self.basis.n_modes() {
            let lam = self.basis.eigenvalue(self.basis.modes()[k].l);
            let phik: Vec<f64> = (0..n).map(|i| phi.component(i).coeffs()[k]).collect();
            let uk = u.field().coeffs()[k];
            let aphi = p.interaction.apply(&phik);
            let lam_dot: f64 = p.lambda.iter().zip(&phik).map(|(a, b)| a * b).sum();
            for i in 0..n {
                mu[i].coeffs_mut()[k] += -scale * aphi[i]
                    + 2.0 * p.kappa * uk * p.lambda[i] / r2
                    + p.b * p.epsilon * lam * phik[i]
                    + p.kappa * lam_dot * p.lambda[i]
                    - p.kappa * lam * uk * p.lambda[i];
            }
        }

        let mu_grid = mu
            .iter()
            .map(|f| self.grid.synthesize(f))
            .collect::<Result<Vec<_>>>()?;
        let mut w = mu;
        project_tsigma_fields(&mut w);
        let area_sqrt = self.basis.area().sqrt();
        let mean_w = (0..n).map(|i| w[i].coeffs()[0] / area_sqrt).collect();
        Ok(ChemicalPotential { mu_grid, w, mean_w })
    }

    /// Composition right-hand side `grad.(L grad w)`: per mode `-lam L w`.
    pub fn rhs_phase(&self, w: &[SpectralField]) -> Vec<SpectralField> {
        let n = w.len();
        let mut out: Vec<SpectralField> =
            (0..n).map(|_| SpectralField::zeros(&self.basis)).collect();
        for k in 0..self.basis.n_modes() {
            let lam = self.basis.eigenvalue(self.basis.modes()[k].l);
            if lam == 0.0 {
                continue;
            }
            let wv: Vec<f64> = (0..n).map(|i| w[i].coeffs()[k]).collect();
            let lw = self.params.mobility.apply(&wv);
            for i in 0..n {
                out[i].coeffs_mut()[k] = -lam * lw[i];
            }
        }
        out
    }

    /// Deformation right-hand side, unprojected. The degree-0/1 coefficients
    /// vanish analytically through the multiplier identities; callers that
    /// need the guarantee use [`Integrator::rhs_deformation`].
    pub fn rhs_deformation_raw(&self, phi: &PhaseField, u: &Deformation) -> SpectralField {
        let p = &self.params;
        let r2 = p.radius * p.radius;
        let n = phi.n();
        let area_sqrt = self.basis.area().sqrt();
        let mut out = SpectralField::zeros(&self.basis);
        for k in 0..self.basis.n_modes() {
            let l = self.basis.modes()[k].l;
            let lam = self.basis.eigenvalue(l);
            let uk = u.field().coeffs()[k];
            let lam_dot: f64 = (0..n)
                .map(|i| p.lambda[i] * phi.component(i).coeffs()[k])
                .sum();
            // the mean composition enters only the degree-0 coefficient
            let lam_dot_shift = if k == 0 {
                let alpha_dot: f64 = p.lambda.iter().zip(&p.alpha).map(|(a, b)| a * b).sum();
                lam_dot - alpha_dot * area_sqrt
            } else {
                lam_dot
            };
            out.coeffs_mut()[k] = -self.theta[l] * uk + p.kappa * lam * lam_dot
                - 2.0 * p.kappa / r2 * lam_dot_shift;
        }
        out
    }

    /// Deformation right-hand side, with the degree-0/1 vanishing asserted
    /// and then enforced exactly.
    pub fn rhs_deformation(&self, phi: &PhaseField, u: &Deformation) -> SpectralField {
        let raw = self.rhs_deformation_raw(phi, u);
        debug_assert!(
            raw.low_mode_leak() <= 1e-11 * (1.0 + raw.l2_norm()),
            "deformation right-hand side leaked into degree 0/1: {}",
            raw.low_mode_leak()
        );
        raw.project_k2()
    }

    /// Factorized deformation right-hand side
    /// `(kappa Delta + 2 kappa/R^2)(-Delta u + (sigma/kappa) u - Lam.(phi - alpha))`.
    pub fn rhs_deformation_factored(&self, phi: &PhaseField, u: &Deformation) -> SpectralField {
        let p = &self.params;
        let r2 = p.radius * p.radius;
        let n = phi.n();
        let area_sqrt = self.basis.area().sqrt();
        let mut out = SpectralField::zeros(&self.basis);
        for k in 0..self.basis.n_modes() {
            let l = self.basis.modes()[k].l;
            let lam = self.basis.eigenvalue(l);
            let uk = u.field().coeffs()[k];
            let mut lam_dot: f64 = (0..n)
                .map(|i| p.lambda[i] * phi.component(i).coeffs()[k])
                .sum();
            if k == 0 {
                let alpha_dot: f64 = p.lambda.iter().zip(&p.alpha).map(|(a, b)| a * b).sum();
                lam_dot -= alpha_dot * area_sqrt;
            }
            let first = -p.kappa * lam + 2.0 * p.kappa / r2;
            let second = lam * uk + p.sigma / p.kappa * uk - lam_dot;
            out.coeffs_mut()[k] = first * second;
        }
        out
    }

    /// Total energy `E_H + E_CH`.
    pub fn energy(
        &self,
        phi: &PhaseField,
        u: &Deformation,
        mode: PotentialMode,
    ) -> Result<EnergyBreakdown> {
        let p = &self.params;
        let r2 = p.radius * p.radius;
        let n = phi.n();

        // quadratic terms spectrally
        let mut e_h = 0.0;
        let mut grad_phi = 0.0;
        let mut interaction = 0.0;
        for k in 0..self.basis.n_modes() {
            let lam = self.basis.eigenvalue(self.basis.modes()[k].l);
            let uk = u.field().coeffs()[k];
            let phik: Vec<f64> = (0..n).map(|i| phi.component(i).coeffs()[k]).collect();
            let s: f64 = p.lambda.iter().zip(&phik).map(|(a, b)| a * b).sum();
            e_h += 0.5 * p.kappa * lam * lam * uk * uk
                + 0.5 * (p.sigma - 2.0 * p.kappa / r2) * lam * uk * uk
                - p.sigma / r2 * uk * uk
                + p.kappa * s * (-lam * uk)
                + 2.0 * p.kappa / r2 * uk * s
                + 0.5 * p.kappa * s * s;
            grad_phi += lam * phik.iter().map(|c| c * c).sum::<f64>();
            interaction += p.interaction.quadratic(&phik);
        }

        // pointwise entropy by quadrature
        let npts = self.grid.n_points();
        let mut ent = vec![0.0; npts];
        for i in 0..n {
            let vals = phi.grid_values(i);
            for (idx, &v) in vals.iter().enumerate() {
                let pv = match mode {
                    PotentialMode::Regularized => p.entropy.psi_h(v, p.h),
                    PotentialMode::Exact => {
                        if v <= 0.0 {
                            return Err(CoreError::OutOfDomain {
                                component: i,
                                index: idx,
                                value: v,
                            });
                        }
                        p.entropy.psi(v)
                    }
                };
                ent[idx] += pv;
            }
        }
        let psi_int = self.grid.integrate(&ent) - 0.5 * interaction;
        let e_ch = p.b * (0.5 * p.epsilon * grad_phi + psi_int / p.epsilon);
        Ok(EnergyBreakdown {
            helfrich: e_h,
            cahn_hilliard: e_ch,
            total: e_h + e_ch,
        })
    }

    /// Residual of the stationary system: the fluctuating part of `w`
    /// (exact entropy) and the deformation right-hand side, as a combined
    /// root-sum-square of L^2 norms.
    pub fn steady_residual(&self, phi: &PhaseField, u: &Deformation) -> Result<f64> {
        let cp = self.chemical_potential(phi, u, PotentialMode::Exact)?;
        let mut acc = 0.0;
        for wi in &cp.w {
            let fluct = wi.project_mean_free();
            acc += fluct.l2_norm_sq();
        }
        let ru = self.rhs_deformation_raw(phi, u);
        acc += ru.l2_norm_sq();
        Ok(acc.sqrt())
    }
}

/// Per-step energy-identity residuals
/// `r_n = E^{n+1} - E^n + dt (diss_u^{n+1} + diss_phi^{n+1})`
/// from recorded regularized energies and dissipation rates.
pub fn dissipation_residuals(
    energies: &[f64],
    diss_phi: &[f64],
    diss_u: &[f64],
    dt: f64,
) -> Vec<f64> {
    assert!(energies.len() >= 2, "need at least two recorded energies");
    assert_eq!(energies.len(), diss_phi.len() + 1);
    assert_eq!(diss_phi.len(), diss_u.len());
    (0..diss_phi.len())
        .map(|i| energies[i + 1] - energies[i] + dt * (diss_phi[i] + diss_u[i]))
        .collect()
}

/// Report from a twin-trajectory continuous-dependence experiment.
#[derive(Debug, Clone)]
pub struct ContdepReport {
    pub times: Vec<f64>,
    /// `D(t) = |dphi|_{-1,L}^2 + |du|^2` at the recorded times.
    pub d: Vec<f64>,
    pub amplification: f64,
}

/// Integrate two trajectories whose initial data differ by an admissible
/// perturbation of squared size `d0_phi + d0_u`, recording the deviation
/// functional along the way.
pub fn twin_run(
    integrator: &Integrator,
    base: &SimState,
    d0_phi: f64,
    d0_u: f64,
    perturb_seed: u64,
    n_steps: usize,
    record_every: usize,
) -> Result<ContdepReport> {
    use rand_chacha::rand_core::SeedableRng;
    let basis = integrator.basis();
    let n = base.phi.n();
    let mob = &integrator.params().mobility;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(perturb_seed);
    // tangent-valued, mean-free composition perturbation with the exact
    // requested dual-norm size
    let mut dphi: Vec<SpectralField> = (0..n).map(|_| SpectralField::zeros(basis)).collect();
    if d0_phi > 0.0 {
        for l in 1..=basis.lmax().min(6) {
            for m in -(l as isize)..=(l as isize) {
                let mut c: Vec<f64> = (0..n)
                    .map(|_| crate::fields::uniform_pm1(&mut rng))
                    .collect();
                crate::fields::project_tsigma(&mut c);
                for (i, d) in dphi.iter_mut().enumerate() {
                    d.set_coeff(l, m, c[i]);
                }
            }
        }
        let norm_sq = crate::fields::hminus1_norm_sq(&dphi, mob)?;
        let scale = (d0_phi / norm_sq).sqrt();
        for d in dphi.iter_mut() {
            *d = d.scaled(scale);
        }
    }
    let mut du = SpectralField::zeros(basis);
    if d0_u > 0.0 {
        for l in 2..=basis.lmax().min(6) {
            for m in -(l as isize)..=(l as isize) {
                du.set_coeff(l, m, crate::fields::uniform_pm1(&mut rng));
            }
        }
        let scale = (d0_u / du.l2_norm_sq()).sqrt();
        du = du.scaled(scale);
    }

    let perturbed_phi = PhaseField::from_components(
        (0..n)
            .map(|i| base.phi.component(i).add(&dphi[i]))
            .collect(),
        integrator.grid(),
    )?;
    let mut s1 = base.clone();
    let mut s2 = SimState {
        t: base.t,
        step: base.step,
        phi: perturbed_phi,
        u: Deformation::project(base.u.field().add(&du)),
    };

    let deviation = |a: &SimState, b: &SimState| -> Result<f64> {
        let diff: Vec<SpectralField> = (0..n)
            .map(|i| a.phi.component(i).sub(b.phi.component(i)))
            .collect();
        let dphi_sq = crate::fields::hminus1_norm_sq(&diff, mob)?;
        let du_sq = a.u.field().sub(b.u.field()).l2_norm_sq();
        Ok(dphi_sq + du_sq)
    };

    let d0 = deviation(&s1, &s2)?;
    let mut times = vec![s1.t];
    let mut d = vec![d0];
    for step in 1..=n_steps {
        let (n1, _) = integrator.step(&s1)?;
        let (n2, _) = integrator.step(&s2)?;
        s1 = n1;
        s2 = n2;
        if step % record_every == 0 || step == n_steps {
            times.push(s1.t);
            d.push(deviation(&s1, &s2)?);
        }
    }
    let amplification = if d0 > 0.0 { d[d.len() - 1] / d0 } else { 0.0 };
    Ok(ContdepReport {
        times,
        d,
        amplification,
    })
}
