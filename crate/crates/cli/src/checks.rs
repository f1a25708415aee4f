//! Verification suites behind the `check-*` and `selftest` subcommands.
//!
//! Every suite prints one machine-readable verdict line per criterion
//! (`PASS <name> | <detail>` or `FAIL <name> | <detail>`) and the process
//! exits nonzero if any criterion fails.

use std::fmt::Write as _;

use mcps_core::diagnostics::{degiorgi_decay, level_set_measures, separation_report};
use mcps_core::dynamics::{
    dissipation_residuals, twin_run, Integrator, PotentialMode, SimState,
};
use mcps_core::fields::{
    init_phase, projected_tsigma, Deformation, Mobility, ModelParams, PhaseField,
};
use mcps_core::geometry::GeometryKernel;
use mcps_core::potential::{multi_well_reg, EntropySpec, InteractionMatrix};
use mcps_core::sphere::{HarmonicBasis, QuadratureGrid, SpectralField};

use crate::config::RunConfig;
use crate::CliError;

pub struct CriterionResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

/// Print verdict lines; returns true when everything passed.
pub fn report(results: &[CriterionResult]) -> bool {
    let mut all = true;
    for r in results {
        let status = if r.pass { "PASS" } else { "FAIL" };
        println!("{status} {} | {}", r.name, r.detail);
        all &= r.pass;
    }
    all
}

/// Deterministic xorshift64 stream for the property suites.
struct Xor(u64);

impl Xor {
    fn next(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    fn pm1(&mut self) -> f64 {
        2.0 * self.next() - 1.0
    }
}

// ---------------------------------------------------------------------------
// shared long-run metrics (constraints, energy monotonicity, separation)
// ---------------------------------------------------------------------------

pub struct LongRunMetrics {
    pub dt: f64,
    pub times: Vec<f64>,
    /// Global minimum of the composition over grid and components per record.
    pub sep_min: Vec<f64>,
    pub energies: Vec<f64>,
    pub mass_drift_max: f64,
    pub sum_violation_max: f64,
    pub u_leak_max: f64,
    /// Largest single-step energy increase over the whole run.
    pub energy_step_increase_max: f64,
    pub breakdown_events: u64,
    pub final_state: SimState,
}

/// Integrate the configured run without file output, tracking the metrics
/// the conservation and separation criteria need.
pub fn long_run(config: &RunConfig, record_every: u64) -> Result<LongRunMetrics, CliError> {
    let params = config.to_model_params()?;
    let it = Integrator::new(params.clone(), config.discretization.lmax)?;
    let mut state = it.initial_state(
        config.init.amplitude,
        config.init.l_init.max(1),
        config.init.margin,
        config.init.seed,
    )?;
    let total = config.total_steps();
    let alpha = &params.alpha;

    let mut metrics = LongRunMetrics {
        dt: config.discretization.dt,
        times: vec![state.t],
        sep_min: vec![state.phi.min_value()],
        energies: vec![
            it.energy(&state.phi, &state.u, PotentialMode::Regularized)?
                .total,
        ],
        mass_drift_max: 0.0,
        sum_violation_max: state.phi.sum_violation(),
        u_leak_max: 0.0,
        energy_step_increase_max: f64::NEG_INFINITY,
        breakdown_events: 0,
        final_state: state.clone(),
    };
    let mut prev_energy = metrics.energies[0];
    while state.step < total {
        let (next, rec) = it.step(&state)?;
        state = next;
        if rec.breakdown {
            metrics.breakdown_events += 1;
        }
        let e = it
            .energy(&state.phi, &state.u, PotentialMode::Regularized)?
            .total;
        metrics.energy_step_increase_max = metrics.energy_step_increase_max.max(e - prev_energy);
        prev_energy = e;
        if state.step % record_every == 0 || state.step == total {
            metrics.times.push(state.t);
            metrics.sep_min.push(state.phi.min_value());
            metrics.energies.push(e);
            let drift = state
                .phi
                .means()
                .iter()
                .zip(alpha)
                .map(|(m, a)| (m - a).abs())
                .fold(0.0f64, f64::max);
            metrics.mass_drift_max = metrics.mass_drift_max.max(drift);
            metrics.sum_violation_max = metrics.sum_violation_max.max(state.phi.sum_violation());
            metrics.u_leak_max = metrics.u_leak_max.max(state.u.low_mode_leak());
        }
    }
    metrics.final_state = state;
    Ok(metrics)
}

/// Constraint conservation over a long run (mass, simplex, deformation leak).
pub fn criterion_constraints(m: &LongRunMetrics) -> CriterionResult {
    let pass = m.mass_drift_max < 1e-12 && m.sum_violation_max < 1e-11 && m.u_leak_max < 1e-12;
    CriterionResult::new(
        "constraint-conservation",
        pass,
        format!(
            "max |mass - alpha| = {:.3e}, max |sum phi - 1| = {:.3e}, u leak = {:.3e}",
            m.mass_drift_max, m.sum_violation_max, m.u_leak_max
        ),
    )
}

/// Energy column nonincreasing along the run.
pub fn criterion_energy_monotone(m: &LongRunMetrics) -> CriterionResult {
    let pass = m.energy_step_increase_max <= 1e-10;
    CriterionResult::new(
        "energy-monotone",
        pass,
        format!("max single-step increase {:.3e}", m.energy_step_increase_max),
    )
}

/// Empirical separation: positive floor after the transient and vanishing
/// level-set measures at half that floor by the end of the run.
pub fn criterion_separation(
    config: &RunConfig,
    m: &LongRunMetrics,
) -> Result<Vec<CriterionResult>, CliError> {
    let mut out = Vec::new();
    let window: Vec<(f64, f64)> = m
        .times
        .iter()
        .zip(&m.sep_min)
        .filter(|(t, _)| **t >= 0.1)
        .map(|(&t, &v)| (t, v))
        .collect();
    let floor = window.iter().fold(f64::INFINITY, |a, p| a.min(p.1));
    let all_positive = window.iter().all(|p| p.1 > 0.0);
    out.push(CriterionResult::new(
        "separation-positive-floor",
        all_positive && floor > 0.0 && !window.is_empty(),
        format!(
            "floor over t in [0.1, {:.2}] = {:.4e} ({} records)",
            m.times.last().copied().unwrap_or(0.0),
            floor,
            window.len()
        ),
    ));

    // z_{0,i} at delta = floor/2 on the final state
    let params = config.to_model_params()?;
    let it = Integrator::new(params, config.discretization.lmax)?;
    let delta = 0.5 * floor;
    let n = m.final_state.phi.n();
    let mut worst = 0.0f64;
    let mut ok = delta > 0.0;
    for i in 0..n {
        let z = level_set_measures(m.final_state.phi.grid_values(i), it.grid(), delta, n, 0)?;
        worst = worst.max(z.measures[0]);
        ok &= z.measures[0] == 0.0;
    }
    out.push(CriterionResult::new(
        "separation-level-sets-vanish",
        ok,
        format!("max_i z_0,i(T) = {worst:.3e} at delta = {delta:.4e}"),
    ));

    // pigeonhole sanity on the final state
    let rep = separation_report(&m.final_state.phi, m.final_state.t, delta);
    let nf = n as f64;
    out.push(CriterionResult::new(
        "separation-pigeonhole",
        rep.min_value <= 1.0 / nf + 1e-12 && rep.max_value >= 1.0 / nf - 1e-12,
        format!("min {:.4}, max {:.4}", rep.min_value, rep.max_value),
    ));
    Ok(out)
}

pub fn check_separation(config: &RunConfig) -> Result<Vec<CriterionResult>, CliError> {
    let m = long_run(config, config.output.diagnostics_every)?;
    criterion_separation(config, &m)
}

// ---------------------------------------------------------------------------
// check-energy
// ---------------------------------------------------------------------------

/// Energy-identity residual refinement: halving dt divides the worst
/// per-step residual by a factor in [3, 5].
pub fn criterion_residual_refinement(config: &RunConfig) -> Result<CriterionResult, CliError> {
    let mut base = config.to_model_params()?;
    base.stabilization = 50.0;
    let lmax = 8;
    let t_final = 0.02;
    let mut worst = Vec::new();
    for &dt in &[2e-4, 1e-4] {
        let mut p = base.clone();
        p.dt = dt;
        let it = Integrator::new(p, lmax)?;
        let mut s = it.initial_state(0.1, 3, 0.05, config.init.seed)?;
        let n_steps = (t_final / dt).round() as usize;
        let mut energies = vec![
            it.energy(&s.phi, &s.u, PotentialMode::Regularized)?.total,
        ];
        let (mut dp, mut du) = (Vec::new(), Vec::new());
        for _ in 0..n_steps {
            let (next, rec) = it.step(&s)?;
            s = next;
            energies.push(it.energy(&s.phi, &s.u, PotentialMode::Regularized)?.total);
            dp.push(rec.diss_phi);
            du.push(rec.diss_u);
        }
        worst.push(
            dissipation_residuals(&energies, &dp, &du, dt)
                .iter()
                .fold(0.0f64, |a, r| a.max(r.abs())),
        );
    }
    let ratio = worst[0] / worst[1];
    Ok(CriterionResult::new(
        "energy-residual-refinement",
        (3.0..=5.0).contains(&ratio),
        format!("max|r| {:.3e} -> {:.3e}, ratio {ratio:.2}", worst[0], worst[1]),
    ))
}

/// Discrete energy decay with the automatic stabilization `S = b/(eps h)`.
pub fn criterion_decay_auto(config: &RunConfig) -> Result<CriterionResult, CliError> {
    let mut p = config.to_model_params()?;
    p.stabilization = ModelParams::auto_stabilization(p.b, p.epsilon, p.h);
    let it = Integrator::new(p, config.discretization.lmax)?;
    let mut s = it.initial_state(
        config.init.amplitude,
        config.init.l_init.max(1),
        config.init.margin,
        config.init.seed,
    )?;
    let mut prev = it.energy(&s.phi, &s.u, PotentialMode::Regularized)?.total;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let (next, _) = it.step(&s)?;
        s = next;
        let e = it.energy(&s.phi, &s.u, PotentialMode::Regularized)?.total;
        worst = worst.max(e - prev);
        prev = e;
    }
    Ok(CriterionResult::new(
        "energy-decay-auto-stabilization",
        worst <= 1e-10,
        format!("max step increase {worst:.3e} with S = b/(eps h)"),
    ))
}

/// The homogeneous state is an exact fixed point of one step.
pub fn criterion_homogeneous_fixed_point(config: &RunConfig) -> Result<CriterionResult, CliError> {
    let params = config.to_model_params()?;
    let it = Integrator::new(params, 12.min(config.discretization.lmax))?;
    let mut s = it.homogeneous_state()?;
    let reference = s.clone();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (next, _) = it.step(&s)?;
        s = next;
        for i in 0..s.phi.n() {
            let d = s
                .phi
                .component(i)
                .coeffs()
                .iter()
                .zip(reference.phi.component(i).coeffs())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            worst = worst.max(d);
        }
        worst = worst.max(s.u.field().l2_norm());
    }
    Ok(CriterionResult::new(
        "homogeneous-fixed-point",
        worst < 1e-14,
        format!("max drift over 100 steps {worst:.3e}"),
    ))
}

/// Drive a relaxing configuration to a numerical steady state and evaluate
/// the stationary-system residual there.
///
/// The default interaction coarsens logarithmically and cannot reach the
/// 1e-9 increment gate within a desk-scale step budget, so this criterion
/// integrates a subcritical variant that relaxes exponentially through the
/// full nonlinear operator. The regularization is taken tiny because the
/// scheme's fixed points satisfy the *regularized* stationary system; the
/// exact-entropy residual carries an O(h) bias otherwise.
pub fn criterion_steady_state(config: &RunConfig) -> Result<CriterionResult, CliError> {
    let mut p = config.to_model_params()?;
    p.interaction =
        InteractionMatrix::mean_field(p.n_components(), 2.0).map_err(CliError::Core)?;
    p.h = 1e-10;
    p.entropy = EntropySpec::logarithmic(p.h).map_err(CliError::Core)?;
    p.stabilization = 150.0;
    p.dt = 1e-2;
    let it = Integrator::new(p.clone(), 10)?;
    let mut s = it.initial_state(0.25, 3, 0.02, config.init.seed)?;
    let mut increment = f64::INFINITY;
    let mut steps = 0u64;
    while steps < 10_000 && increment >= 1e-9 {
        let (next, _) = it.step(&s)?;
        let mut acc = 0.0;
        for i in 0..s.phi.n() {
            acc += next
                .phi
                .component(i)
                .sub(s.phi.component(i))
                .l2_norm_sq();
        }
        increment = acc.sqrt() / p.dt;
        s = next;
        steps += 1;
    }
    if increment >= 1e-9 {
        return Ok(CriterionResult::new(
            "steady-state-residual",
            false,
            format!("did not converge: |dphi/dt| = {increment:.3e} after {steps} steps"),
        ));
    }
    let residual = it.steady_residual(&s.phi, &s.u)?;
    Ok(CriterionResult::new(
        "steady-state-residual",
        residual < 1e-6,
        format!(
            "converged after {steps} steps (|dphi/dt| = {increment:.3e}), residual {residual:.3e}"
        ),
    ))
}

/// Deformation relaxation oracle: exact implicit-Euler factor per step and
/// the exponential limit as dt -> 0.
pub fn criterion_linear_decay(config: &RunConfig) -> Result<CriterionResult, CliError> {
    let mut p = config.to_model_params()?;
    p.lambda = vec![0.0; p.n_components()];
    if p.beta == 0.0 {
        p.beta = 1.0;
    }
    let rate = (24.0 * p.kappa / p.radius.powi(4) + 4.0 * p.sigma / p.radius.powi(2)) / p.beta;
    let amp = 0.3;

    // one step at the configured dt matches the closed-form factor to 1e-13
    let mut p1 = p.clone();
    p1.dt = config.discretization.dt;
    let it = Integrator::new(p1.clone(), 8)?;
    let mut s = it.homogeneous_state()?;
    let mut uf = SpectralField::zeros(it.basis());
    uf.set_coeff(2, 1, amp);
    s.u = Deformation::project(uf);
    let (s1, _) = it.step(&s)?;
    let factor_err =
        (s1.u.field().coeff(2, 1) - amp / (1.0 + p1.dt * rate)).abs();

    // dt -> 0 trajectory matches the exponential at T = 0.1 to 1e-3 relative
    let mut p2 = p.clone();
    p2.dt = 1e-5;
    let it = Integrator::new(p2.clone(), 8)?;
    let mut s = it.homogeneous_state()?;
    let mut uf = SpectralField::zeros(it.basis());
    uf.set_coeff(2, 1, amp);
    s.u = Deformation::project(uf);
    let t_final = 0.1;
    for _ in 0..(t_final / p2.dt).round() as usize {
        let (next, _) = it.step(&s)?;
        s = next;
    }
    let expect = amp * (-rate * t_final).exp();
    let rel = ((s.u.field().coeff(2, 1) - expect) / expect).abs();

    Ok(CriterionResult::new(
        "linear-decay-oracle",
        factor_err < 1e-13 && rel < 1e-3,
        format!("one-step factor error {factor_err:.3e}, trajectory error {rel:.3e} relative"),
    ))
}

pub fn check_energy(config: &RunConfig) -> Result<Vec<CriterionResult>, CliError> {
    let mut out = vec![
        criterion_residual_refinement(config)?,
        criterion_decay_auto(config)?,
        criterion_homogeneous_fixed_point(config)?,
        criterion_steady_state(config)?,
        criterion_linear_decay(config)?,
    ];
    let m = long_run(config, config.output.diagnostics_every)?;
    out.push(criterion_constraints(&m));
    out.push(criterion_energy_monotone(&m));
    Ok(out)
}

// ---------------------------------------------------------------------------
// check-geometry
// ---------------------------------------------------------------------------

/// Deterministic smooth test data for the geometric checks.
fn geometry_test_fields(
    kernel: &GeometryKernel,
    params: &ModelParams,
) -> (SpectralField, Vec<SpectralField>) {
    let basis = kernel.basis();
    // moderate profile amplitude keeps the quartic remainder subdominant at
    // the top of the rho window, so the cubic slope is cleanly measurable
    let mut u = SpectralField::zeros(basis);
    u.set_coeff(2, 1, 0.22);
    u.set_coeff(3, 0, 0.12);
    u.set_coeff(4, -3, -0.1);
    u.set_coeff(5, 2, 0.05);
    let mut phi: Vec<SpectralField> = params
        .alpha
        .iter()
        .map(|&a| SpectralField::constant(basis, a))
        .collect();
    let bumps: [(usize, isize, [f64; 3]); 3] = [
        (2, 1, [0.05, -0.02, -0.03]),
        (3, -2, [0.02, 0.01, -0.03]),
        (4, 0, [-0.02, 0.03, -0.01]),
    ];
    for (l, mm, c) in bumps {
        for i in 0..3 {
            phi[i].set_coeff(l, mm, c[i]);
        }
    }
    (u, phi)
}

pub fn check_geometry(config: &RunConfig) -> Result<Vec<CriterionResult>, CliError> {
    let params = config.to_model_params()?;
    let kernel = GeometryKernel::new(16, params.radius)?;
    let (u, phi) = geometry_test_fields(&kernel, &params);
    let mut out = Vec::new();

    // expansion slope over rho in [1e-3, 1e-1]
    let rhos: Vec<f64> = (0..7)
        .map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / 6.0))
        .collect();
    let taylor = kernel.taylor_check(&u, &phi, &params, 0.8, &rhos)?;
    out.push(CriterionResult::new(
        "taylor-expansion-slope",
        taylor.slope >= 2.9 && !taylor.shrunk,
        format!("slope {:.3} over {} rho values", taylor.slope, taylor.rhos.len()),
    ));

    // C1 against the closed form, via the rho = 0 Lagrangian
    let l0 = kernel.lagrangian(&u, 0.0, &phi, &params, 0.0)?;
    let c1_rel = ((l0 - taylor.c1) / taylor.c1).abs();
    out.push(CriterionResult::new(
        "constant-term",
        c1_rel < 1e-8,
        format!("relative error {c1_rel:.3e}"),
    ));

    // C2 by Richardson extrapolation of the centered rho-derivative
    let rho = 1e-3;
    let d = |r: f64| -> Result<f64, CliError> {
        let lp = kernel.lagrangian(&u, r, &phi, &params, 0.0)?;
        let lm = kernel.lagrangian(&u, -r, &phi, &params, 0.0)?;
        Ok((lp - lm) / (2.0 * r))
    };
    let c2_est = (4.0 * d(rho / 2.0)? - d(rho)?) / 3.0;
    let c2_rel = ((c2_est - taylor.c2) / taylor.c2).abs();
    out.push(CriterionResult::new(
        "linear-term",
        c2_rel < 1e-8,
        format!("relative error {c2_rel:.3e}"),
    ));

    // the seven variation formulas at finite-difference accuracy O(rho^2)
    let rep = kernel.variation_check(&u, &phi, &params, 1e-3)?;
    let rep_half = kernel.variation_check(&u, &phi, &params, 5e-4)?;
    let mut detail = String::new();
    let mut pass = true;
    for (a, b) in rep.entries.iter().zip(&rep_half.entries) {
        let ok = a.rel_err < 1e-4 && b.rel_err < 1e-4;
        pass &= ok;
        let _ = write!(detail, "{} {:.1e}/{:.1e} ", a.name, a.rel_err, b.rel_err);
    }
    out.push(CriterionResult::new(
        "variation-formulas",
        pass,
        detail.trim_end().to_string(),
    ));

    // Gauss-Bonnet on every generated surface
    let mut worst = 0.0f64;
    for &r in &taylor.rhos {
        let f = kernel.surface_functionals(&u, r, &phi, &params)?;
        worst = worst.max((f.gauss_integral - 4.0 * std::f64::consts::PI).abs());
    }
    out.push(CriterionResult::new(
        "gauss-bonnet",
        worst < 1e-6,
        format!("max |int K - 4 pi| = {worst:.3e}"),
    ));

    // Poincare chain on random K2 fields, equality at pure degree 2
    out.push(criterion_poincare(&params)?);
    Ok(out)
}

pub fn criterion_poincare(params: &ModelParams) -> Result<CriterionResult, CliError> {
    let basis = HarmonicBasis::new(12, params.radius)?;
    let r2 = params.radius * params.radius;
    let mut rng = Xor(0x9e3779b97f4a7c15);
    let mut ok = true;
    for _ in 0..1000 {
        let mut f = SpectralField::zeros(&basis);
        for (k, mode) in basis.modes().iter().enumerate() {
            if mode.l >= 2 {
                f.coeffs_mut()[k] = rng.pm1();
            }
        }
        let l2 = f.l2_norm_sq();
        let h1 = f.h1_seminorm_sq();
        let h2 = f.h2_seminorm_sq();
        ok &= l2 <= r2 / 6.0 * h1 * (1.0 + 1e-12);
        ok &= r2 / 6.0 * h1 <= r2 * r2 / 36.0 * h2 * (1.0 + 1e-12);
    }
    let mut f = SpectralField::zeros(&basis);
    f.set_coeff(2, 0, 0.8);
    f.set_coeff(2, -2, -0.5);
    let l2 = f.l2_norm_sq();
    let eq1 = (l2 - r2 / 6.0 * f.h1_seminorm_sq()).abs();
    let eq2 = (r2 / 6.0 * f.h1_seminorm_sq() - r2 * r2 / 36.0 * f.h2_seminorm_sq()).abs();
    let equality = eq1 < 1e-10 * l2 && eq2 < 1e-10 * l2;
    Ok(CriterionResult::new(
        "poincare-chain",
        ok && equality,
        format!("1000 random K2 fields; degree-2 equality gaps {eq1:.1e}, {eq2:.1e}"),
    ))
}

// ---------------------------------------------------------------------------
// check-contdep
// ---------------------------------------------------------------------------

pub fn check_contdep(config: &RunConfig) -> Result<Vec<CriterionResult>, CliError> {
    let params = config.to_model_params()?;
    let it = Integrator::new(params, config.discretization.lmax)?;
    let base = it.initial_state(
        config.init.amplitude,
        config.init.l_init.max(1),
        config.init.margin,
        config.init.seed,
    )?;
    let t_final = 0.5f64;
    let n_steps = (t_final / config.discretization.dt).round() as usize;
    let record = (n_steps / 50).max(1);

    let rep_a = twin_run(&it, &base, 1e-6, 1e-6, 5, n_steps, record)?;
    let rep_b = twin_run(&it, &base, 1e-8, 1e-8, 5, n_steps, record)?;
    let ratio = rep_a.amplification / rep_b.amplification;
    let mut out = vec![CriterionResult::new(
        "contdep-amplification-consistency",
        (0.5..=2.0).contains(&ratio) && rep_a.amplification.is_finite(),
        format!(
            "amplification {:.3e} vs {:.3e} (ratio {ratio:.2}) at T = {t_final}",
            rep_a.amplification, rep_b.amplification
        ),
    )];

    // Gronwall shape: doubling the window must not much more than double
    // the accumulated log growth
    let logs: Vec<f64> = rep_a.d.iter().map(|&d| d.ln()).collect();
    let growth_half = logs[logs.len() / 2] - logs[0];
    let growth_full = logs[logs.len() - 1] - logs[0];
    out.push(CriterionResult::new(
        "contdep-log-growth-shape",
        growth_full <= 3.2 * growth_half + 1.0,
        format!("log growth: half-window {growth_half:.2}, full {growth_full:.2}"),
    ));

    let rep_zero = twin_run(&it, &base, 0.0, 0.0, 5, 10, 2)?;
    out.push(CriterionResult::new(
        "contdep-zero-perturbation",
        rep_zero.d.iter().all(|&d| d == 0.0),
        "D(t) identically zero".into(),
    ));
    Ok(out)
}

// ---------------------------------------------------------------------------
// selftest
// ---------------------------------------------------------------------------

type Check = (&'static str, fn() -> Result<(), String>);

fn ok(cond: bool, msg: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

fn basis8() -> std::sync::Arc<HarmonicBasis> {
    HarmonicBasis::new(8, 1.0).unwrap()
}

fn default_integrator() -> Integrator {
    Integrator::new(ModelParams::default_three_component(), 8).unwrap()
}

fn selftest_table() -> Vec<Check> {
    vec![
        ("eigenvalue-zero-mode", || {
            ok(basis8().eigenvalue(0) == 0.0, "lambda_0 must vanish")
        }),
        ("eigenvalue-degree-one", || {
            let b = HarmonicBasis::new(8, 2.0).unwrap();
            ok((b.eigenvalue(1) - 0.5).abs() < 1e-15, "lambda_1 = 2/R^2")
        }),
        ("constant-field-single-coefficient", || {
            let b = basis8();
            let g = QuadratureGrid::for_basis(&b);
            let f = g.analyze(&vec![2.5; g.n_points()]).map_err(|e| e.to_string())?;
            ok(
                f.coeffs()[1..].iter().all(|c| c.abs() < 1e-12)
                    && (f.mean() - 2.5).abs() < 1e-13,
                "constant must load only (0,0)",
            )
        }),
        ("single-harmonic-orthogonality", || {
            let b = basis8();
            let g = QuadratureGrid::for_basis(&b);
            let mut f = SpectralField::zeros(&b);
            f.set_coeff(3, 2, 1.0);
            let back = g
                .analyze(&g.synthesize(&f).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let err: f64 = back
                .coeffs()
                .iter()
                .zip(f.coeffs())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            ok(err < 1e-12, "(3,2) harmonic must survive the round trip")
        }),
        ("laplacian-constant-and-degree-one", || {
            let b = basis8();
            let c = SpectralField::constant(&b, 3.0);
            let mut nu = SpectralField::zeros(&b);
            nu.set_coeff(1, 0, 1.0);
            ok(
                c.laplace_beltrami().l2_norm() < 1e-14
                    && (nu.laplace_beltrami().coeff(1, 0) + 2.0).abs() < 1e-14,
                "Delta 1 = 0 and Delta nu = -(2/R^2) nu",
            )
        }),
        ("quadrature-area-and-odd-mode", || {
            let b = HarmonicBasis::new(8, 1.7).unwrap();
            let g = QuadratureGrid::for_basis(&b);
            let area = g.integrate(&vec![1.0; g.n_points()]);
            let mut nu = SpectralField::zeros(&b);
            nu.set_coeff(1, 1, 1.0);
            let odd = g.integrate(&g.synthesize(&nu).map_err(|e| e.to_string())?);
            ok(
                (area - b.area()).abs() < 1e-13 * b.area() && odd.abs() < 1e-12,
                "area 4 pi R^2 and vanishing odd integral",
            )
        }),
        ("projections", || {
            let b = basis8();
            let mut nu = SpectralField::zeros(&b);
            nu.set_coeff(1, -1, 2.0);
            let mut y2 = SpectralField::zeros(&b);
            y2.set_coeff(2, 0, 1.5);
            let mix = SpectralField::constant(&b, 1.0).add(&y2);
            ok(
                nu.project_k2().l2_norm() == 0.0
                    && y2.project_k2().coeff(2, 0) == 1.5
                    && mix.project_mean_free().coeff(0, 0) == 0.0
                    && mix.project_mean_free().coeff(2, 0) == 1.5,
                "K2 and mean-free projections",
            )
        }),
        ("seminorms-of-constant", || {
            let b = basis8();
            let c = SpectralField::constant(&b, 2.0);
            ok(
                (c.l2_norm() - 2.0 * b.area().sqrt()).abs() < 1e-13
                    && c.h1_seminorm() == 0.0
                    && c.h2_seminorm() == 0.0,
                "constant-field norms",
            )
        }),
        ("entropy-at-one-and-inv-e", || {
            let e = EntropySpec::logarithmic(1e-4).map_err(|x| x.to_string())?;
            let inv_e = (-1.0f64).exp();
            ok(
                e.psi(1.0) == 0.0
                    && e.psi_prime(1.0).unwrap() == 1.0
                    && e.psi_double_prime(1.0).unwrap() == 1.0
                    && (e.psi(inv_e) + inv_e).abs() < 1e-15,
                "psi values at 1 and 1/e",
            )
        }),
        ("entropy-extension-coefficients", || {
            let e = EntropySpec::logarithmic(1e-4).map_err(|x| x.to_string())?;
            ok(e.ext == [-0.5, 2.0, -1.5], "cubic extension (-1/2, 2, -3/2)")
        }),
        ("resolvent-fixed-point", || {
            let e = EntropySpec::logarithmic(1e-4).map_err(|x| x.to_string())?;
            let h = 0.05;
            ok(
                (e.resolvent(1.0 + h, h) - 1.0).abs() < 1e-13,
                "J_h(1 + h) = 1",
            )
        }),
        ("entropy-sum-at-simplex-center", || {
            let e = EntropySpec::logarithmic(1e-4).map_err(|x| x.to_string())?;
            let n = 3.0f64;
            let total = 3.0 * e.psi(1.0 / n);
            ok((total + n.ln()).abs() < 1e-14, "N psi(1/N) = -ln N")
        }),
        ("tangent-projection", || {
            let p = projected_tsigma(&[1.0, 0.0]);
            let e3 = projected_tsigma(&[1.0, 1.0, 1.0]);
            ok(
                p == vec![0.5, -0.5] && e3.iter().all(|&x| x == 0.0),
                "P(1,0) = (1/2,-1/2) and P e = 0",
            )
        }),
        ("mobility-validation", || {
            let n = 3;
            let ones = vec![vec![1.0; n]; n];
            let zeros = vec![vec![0.0; n]; n];
            ok(
                Mobility::validate(ones).is_err()
                    && Mobility::validate(zeros).is_err()
                    && (Mobility::projector(n).l0() - 1.0).abs() < 1e-12,
                "ee^T and 0 rejected, projector l0 = 1",
            )
        }),
        ("initial-data-constraints", || {
            let b = basis8();
            let g = QuadratureGrid::for_basis(&b);
            let alpha = [0.4, 0.35, 0.25];
            let (phi0, _) = init_phase(&alpha, &b, &g, 0.0, 3, 0.05, 1).map_err(|e| e.to_string())?;
            let homog = (0..3).all(|i| (phi0.component(i).mean() - alpha[i]).abs() < 1e-14)
                && phi0.sum_violation() < 1e-13;
            let (pa, _) = init_phase(&alpha, &b, &g, 0.1, 3, 0.05, 42).map_err(|e| e.to_string())?;
            let (pb, _) = init_phase(&alpha, &b, &g, 0.1, 3, 0.05, 42).map_err(|e| e.to_string())?;
            let deterministic =
                (0..3).all(|i| pa.component(i).coeffs() == pb.component(i).coeffs());
            let constrained = (0..3).all(|i| (pa.component(i).mean() - alpha[i]).abs() < 1e-14)
                && pa.sum_violation() < 1e-13;
            ok(homog && deterministic && constrained, "initial data contract")
        }),
        ("homogeneous-potential-and-rhs", || {
            let it = default_integrator();
            let s = it.homogeneous_state().map_err(|e| e.to_string())?;
            let cp = it
                .chemical_potential(&s.phi, &s.u, PotentialMode::Exact)
                .map_err(|e| e.to_string())?;
            let w_flat = cp
                .w
                .iter()
                .all(|wi| wi.project_mean_free().l2_norm() < 1e-12);
            let ru = it.rhs_deformation_raw(&s.phi, &s.u).l2_norm() < 1e-12;
            let rf = it.rhs_deformation_factored(&s.phi, &s.u).l2_norm() < 1e-12;
            ok(w_flat && ru && rf, "homogeneous state is equilibrium")
        }),
        ("rhs-conservation-structure", || {
            let it = default_integrator();
            let b = it.basis().clone();
            let w0: Vec<SpectralField> =
                (0..3).map(|_| SpectralField::constant(&b, 0.7)).collect();
            let zero = it.rhs_phase(&w0).iter().all(|f| f.l2_norm() == 0.0);
            let mut rng = Xor(55);
            let mut wr: Vec<SpectralField> =
                (0..3).map(|_| SpectralField::zeros(&b)).collect();
            for k in 0..b.n_modes() {
                for f in wr.iter_mut() {
                    f.coeffs_mut()[k] = rng.pm1();
                }
            }
            let sums = it.rhs_phase(&wr);
            let conserved = (0..b.n_modes()).all(|k| {
                sums.iter().map(|f| f.coeffs()[k]).sum::<f64>().abs() < 1e-13
            });
            ok(zero && conserved, "constant w frozen; component sums vanish")
        }),
        ("factored-rhs-kills-degree-one", || {
            let it = default_integrator();
            let b = it.basis().clone();
            let mut comps: Vec<SpectralField> = it
                .params()
                .alpha
                .iter()
                .map(|&a| SpectralField::constant(&b, a))
                .collect();
            comps[0].set_coeff(1, 0, 0.05);
            comps[1].set_coeff(1, 0, -0.02);
            comps[2].set_coeff(1, 0, -0.03);
            let phi = PhaseField::from_components(comps, it.grid()).map_err(|e| e.to_string())?;
            let out = it.rhs_deformation_factored(&phi, &Deformation::zeros(&b));
            ok(out.coeff(1, 0).abs() < 1e-14, "degree-1 eigenspace annihilated")
        }),
        ("stepper-fixed-point-and-identity", || {
            let it = default_integrator();
            let s = it.homogeneous_state().map_err(|e| e.to_string())?;
            let (s1, rec) = it.step(&s).map_err(|e| e.to_string())?;
            let drift = (0..3)
                .map(|i| {
                    s1.phi
                        .component(i)
                        .coeffs()
                        .iter()
                        .zip(s.phi.component(i).coeffs())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max)
                })
                .fold(0.0f64, f64::max);
            let res = it.steady_residual(&s.phi, &s.u).map_err(|e| e.to_string())?;
            ok(
                drift < 1e-14 && rec.diss_phi.abs() < 1e-20 && res < 1e-12,
                "fixed point, zero dissipation, zero steady residual",
            )
        }),
        ("energy-closed-forms", || {
            let it = default_integrator();
            let p = it.params();
            let s = it.homogeneous_state().map_err(|e| e.to_string())?;
            let e = it
                .energy(&s.phi, &s.u, PotentialMode::Exact)
                .map_err(|e| e.to_string())?;
            let area = it.basis().area();
            let lam_dot: f64 = p.lambda.iter().zip(&p.alpha).map(|(a, b)| a * b).sum();
            let eh = 0.5 * p.kappa * lam_dot * lam_dot * area;
            let psi = mcps_core::potential::multi_well(&p.entropy, &p.interaction, &p.alpha)
                .map_err(|e| e.to_string())?;
            let ech = p.b / p.epsilon * area * psi;
            ok(
                (e.helfrich - eh).abs() < 1e-11 && (e.cahn_hilliard - ech).abs() < 1e-11,
                "homogeneous energies",
            )
        }),
        ("twin-zero-perturbation", || {
            let it = default_integrator();
            let base = it.initial_state(0.1, 3, 0.05, 3).map_err(|e| e.to_string())?;
            let rep = twin_run(&it, &base, 0.0, 0.0, 1, 5, 1).map_err(|e| e.to_string())?;
            ok(rep.d.iter().all(|&d| d == 0.0), "D(t) stays identically zero")
        }),
        ("round-sphere-geometry", || {
            let p = ModelParams::default_three_component();
            let kernel = GeometryKernel::new(8, 1.0).map_err(|e| e.to_string())?;
            let phi: Vec<SpectralField> = p
                .alpha
                .iter()
                .map(|&a| SpectralField::constant(kernel.basis(), a))
                .collect();
            let u = SpectralField::zeros(kernel.basis());
            let f = kernel
                .surface_functionals(&u, 0.0, &phi, &p)
                .map_err(|e| e.to_string())?;
            let pi = std::f64::consts::PI;
            ok(
                (f.willmore - 8.0 * pi).abs() < 1e-9
                    && (f.area - 4.0 * pi).abs() < 1e-9
                    && (f.volume - 4.0 * pi / 3.0).abs() < 1e-9,
                "W = 8 pi, A = 4 pi R^2, V = 4 pi R^3/3",
            )
        }),
        ("dilation-scale-invariance", || {
            let p = ModelParams::default_three_component();
            let kernel = GeometryKernel::new(8, 1.0).map_err(|e| e.to_string())?;
            let phi: Vec<SpectralField> = p
                .alpha
                .iter()
                .map(|&a| SpectralField::constant(kernel.basis(), a))
                .collect();
            let s = 0.2;
            let u = SpectralField::constant(kernel.basis(), 1.0);
            let f = kernel
                .surface_functionals(&u, s, &phi, &p)
                .map_err(|e| e.to_string())?;
            let pi = std::f64::consts::PI;
            let rs = 1.0 + s;
            ok(
                (f.willmore - 8.0 * pi).abs() < 1e-9
                    && (f.area - 4.0 * pi * rs * rs).abs() < 1e-9
                    && (f.volume - 4.0 * pi * rs.powi(3) / 3.0).abs() < 1e-9,
                "dilated-sphere functionals",
            )
        }),
        ("lagrangian-critical-values", || {
            let p = ModelParams::default_three_component();
            let kernel = GeometryKernel::new(8, 1.0).map_err(|e| e.to_string())?;
            let phi: Vec<SpectralField> = p
                .alpha
                .iter()
                .map(|&a| SpectralField::constant(kernel.basis(), a))
                .collect();
            let u = SpectralField::zeros(kernel.basis());
            let l0 = kernel
                .lagrangian(&u, 0.0, &phi, &p, 0.5)
                .map_err(|e| e.to_string())?;
            let mut pz = p.clone();
            pz.lambda = vec![0.0; 3];
            ok(
                (l0 - kernel.c1(&p)).abs() < 1e-9 && kernel.c2(&phi, &pz) == 0.0,
                "L(0) = C1; C2 = 0 at Lambda = 0",
            )
        }),
        ("taylor-critical-point", || {
            let p = ModelParams::default_three_component();
            let kernel = GeometryKernel::new(8, 1.0).map_err(|e| e.to_string())?;
            let phi: Vec<SpectralField> = p
                .alpha
                .iter()
                .map(|&a| SpectralField::constant(kernel.basis(), a))
                .collect();
            let u = SpectralField::zeros(kernel.basis());
            let rep = kernel
                .taylor_check(&u, &phi, &p, 0.3, &[1e-3, 1e-2, 1e-1])
                .map_err(|e| e.to_string())?;
            ok(
                rep.residuals.iter().all(|&r| r < 1e-9),
                "residual vanishes at the critical point",
            )
        }),
        ("separation-extrema-and-pigeonhole", || {
            let b = basis8();
            let g = QuadratureGrid::for_basis(&b);
            let alpha = [0.4, 0.35, 0.25];
            let (phi, _) = init_phase(&alpha, &b, &g, 0.0, 3, 0.05, 1).map_err(|e| e.to_string())?;
            let rep = separation_report(&phi, 0.0, 0.1);
            ok(
                (rep.min_value - 0.25).abs() < 1e-13
                    && (rep.max_value - 0.4).abs() < 1e-13
                    && rep.min_value <= 1.0 / 3.0 + 1e-12
                    && rep.max_value >= 1.0 / 3.0 - 1e-12,
                "extrema (0.25, 0.4) and the pigeonhole bound",
            )
        }),
        ("level-set-extreme-fields", || {
            let b = basis8();
            let g = QuadratureGrid::for_basis(&b);
            let delta = 0.1;
            let hi = level_set_measures(&vec![0.5; g.n_points()], &g, delta, 3, 5)
                .map_err(|e| e.to_string())?;
            let lo = level_set_measures(&vec![delta; g.n_points()], &g, delta, 3, 5)
                .map_err(|e| e.to_string())?;
            let area = b.area();
            ok(
                hi.measures.iter().all(|&z| z == 0.0)
                    && lo.measures.iter().all(|&z| (z - area).abs() < 1e-12 * area),
                "empty and full level sets",
            )
        }),
        ("recursive-decay-example", || {
            let rep = degiorgi_decay(0.5, 1.0, 2.0, 1.0, 50).map_err(|e| e.to_string())?;
            let exact = (0..=50).all(|n| {
                (rep.y[n] - 0.5 * 2f64.powi(-(n as i32))).abs() <= 1e-12 * rep.y[n].max(1e-300)
            });
            ok(
                (rep.theta - 0.5).abs() < 1e-15 && rep.bound_holds && exact,
                "theta = 1/2 and y_n = 2^{-n-1}",
            )
        }),
        ("sobolev-ratio-bounds", || {
            let b = basis8();
            let g = QuadratureGrid::for_basis(&b);
            let table = mcps_core::diagnostics::sobolev_probe(&b, &g, &[2.0, 8.0], 30, 5)
                .map_err(|e| e.to_string())?;
            ok(
                table[0].c_estimate <= 1.0 / 2f64.sqrt() + 1e-12
                    && table.iter().all(|r| r.c_estimate.is_finite()),
                "C(2) <= 1/sqrt(2), estimates finite",
            )
        }),
        ("amplitude-zero-run-constant", || {
            let it = default_integrator();
            let mut s = it.homogeneous_state().map_err(|e| e.to_string())?;
            let e0 = it
                .energy(&s.phi, &s.u, PotentialMode::Regularized)
                .map_err(|e| e.to_string())?
                .total;
            for _ in 0..20 {
                let (next, _) = it.step(&s).map_err(|e| e.to_string())?;
                s = next;
            }
            let e1 = it
                .energy(&s.phi, &s.u, PotentialMode::Regularized)
                .map_err(|e| e.to_string())?
                .total;
            ok((e1 - e0).abs() < 1e-12, "energy constant to 1e-12")
        }),
    ]
}

/// Yosida regularization property suite (approximation from below,
/// Lipschitz bound, derivative monotonicity, curvature floor, uniform
/// convergence on compacts), with 1e4 random samples where applicable.
pub fn criterion_yosida_suite() -> CriterionResult {
    let e = EntropySpec::logarithmic(1e-4).unwrap();
    let mut detail = String::new();
    let mut pass = true;

    // (i) psi_h <= psi, increasing as h decreases
    let mut ok_i = true;
    for &s in &[0.1, 0.5, 0.9] {
        let exact = e.psi(s);
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=6 {
            let h = 10f64.powi(-k);
            let v = e.psi_h(s, h);
            ok_i &= v <= exact + 1e-12 && v >= prev - 1e-12;
            prev = v;
        }
    }
    pass &= ok_i;
    let _ = write!(detail, "(i) {} ", if ok_i { "ok" } else { "FAIL" });

    // (ii) global Lipschitz with constant 1/h over 1e4 random pairs
    // (the absolute slack covers the resolvent Newton tolerance)
    let mut rng = Xor(77);
    let mut ok_ii = true;
    for &h in &[1e-1, 1e-3] {
        for _ in 0..10_000 {
            let s1 = 10.0 * rng.pm1();
            let s2 = 10.0 * rng.pm1();
            ok_ii &= (e.psi_h_prime(s1, h) - e.psi_h_prime(s2, h)).abs()
                <= (s1 - s2).abs() / h * (1.0 + 1e-12) + 1e-11;
        }
    }
    pass &= ok_ii;
    let _ = write!(detail, "(ii) {} ", if ok_ii { "ok" } else { "FAIL" });

    // (iii) |psi_h'| increases to |psi'| on (0, 1]
    let mut ok_iii = true;
    for j in 0..100 {
        let s = 0.01 + 0.99 * j as f64 / 99.0;
        let exact = e.psi_prime(s).unwrap().abs();
        let mut prev = -1.0;
        for k in 1..=6 {
            let h = 10f64.powi(-k);
            let v = e.psi_h_prime(s, h).abs();
            ok_iii &= v <= exact + 1e-10 && v >= prev - 1e-12;
            prev = v;
        }
    }
    pass &= ok_iii;
    let _ = write!(detail, "(iii) {} ", if ok_iii { "ok" } else { "FAIL" });

    // (iv) finite-difference curvature floor zeta/(1+zeta) = 1/2 on [-2, 2]
    let mut ok_iv = true;
    for &h in &[1.0, 1e-1, 1e-2, 1e-4] {
        for k in 0..2500 {
            let s = -2.0 + 4.0 * k as f64 / 2499.0;
            let d = 1e-6;
            let fd = (e.psi_h_prime(s + d, h) - e.psi_h_prime(s - d, h)) / (2.0 * d);
            ok_iv &= fd >= 0.5 - 1e-6;
        }
    }
    pass &= ok_iv;
    let _ = write!(detail, "(iv) {} ", if ok_iv { "ok" } else { "FAIL" });

    // (v) uniform convergence of psi_h' on [0.05, 1]
    let mut ok_v = true;
    let mut worst_prev = f64::INFINITY;
    for k in 1..=6 {
        let h = 10f64.powi(-k);
        let mut worst = 0.0f64;
        for j in 0..1000 {
            let s = 0.05 + 0.95 * j as f64 / 999.0;
            worst = worst.max((e.psi_h_prime(s, h) - e.psi_prime(s).unwrap()).abs());
        }
        ok_v &= worst <= worst_prev + 1e-12;
        worst_prev = worst;
    }
    ok_v &= worst_prev < 1e-3;
    pass &= ok_v;
    let _ = write!(detail, "(v) {} ", if ok_v { "ok" } else { "FAIL" });

    // resolvent nonexpansive over 1e4 random pairs
    let mut ok_j = true;
    for _ in 0..10_000 {
        let s1 = 8.0 * rng.pm1();
        let s2 = 8.0 * rng.pm1();
        let h = 1e-2;
        ok_j &= (e.resolvent(s1, h) - e.resolvent(s2, h)).abs()
            <= (s1 - s2).abs() * (1.0 + 1e-12);
    }
    pass &= ok_j;
    let _ = write!(detail, "J nonexpansive {}", if ok_j { "ok" } else { "FAIL" });

    CriterionResult::new("yosida-suite", pass, detail)
}

/// Recursive-decay property over 1e4 random parameter triples.
pub fn criterion_degiorgi_property() -> CriterionResult {
    let mut rng = Xor(0xABCDEF);
    let mut failures = 0u32;
    for _ in 0..10_000 {
        let c = 0.1 + 9.9 * rng.next();
        let b = 1.0 + 7.0 * rng.next().max(1e-3);
        let gamma = 0.1 + 2.9 * rng.next();
        match degiorgi_decay(0.0, c, b, gamma, 50) {
            Ok(rep0) => match degiorgi_decay(rep0.theta, c, b, gamma, 50) {
                Ok(rep) => {
                    if !(rep.bound_holds && rep.tends_to_zero) {
                        failures += 1;
                    }
                }
                Err(_) => failures += 1,
            },
            Err(_) => failures += 1,
        }
    }
    CriterionResult::new(
        "degiorgi-decay-property",
        failures == 0,
        format!("{failures} failures over 10000 random (C, b, gamma) draws"),
    )
}

/// Coercivity of the regularized multi-well density with the closed-form
/// constant, over 1e4 random points.
pub fn criterion_coercivity() -> CriterionResult {
    let e = EntropySpec::logarithmic(1e-4).unwrap();
    let a = InteractionMatrix::mean_field(3, 3.5).unwrap();
    let h0 = 2e-3;
    let h = 1e-3;
    let c = 1.0 / (4.0 * h0) - a.lambda_max() / 2.0;
    let mut k_per = 0.0f64;
    for j in 0..40_000 {
        let r = -20.0 + 40.0 * j as f64 / 39_999.0;
        k_per = k_per.max(r * r / (4.0 * h0) - e.psi_h(r, h));
    }
    let k = 3.0 * k_per + 1e-9;
    let mut rng = Xor(31);
    let mut worst_gap = f64::INFINITY;
    let mut pass = true;
    for _ in 0..10_000 {
        let v = [10.0 * rng.pm1(), 10.0 * rng.pm1(), 10.0 * rng.pm1()];
        let norm_sq: f64 = v.iter().map(|x| x * x).sum();
        let val = multi_well_reg(&e, &a, &v, h);
        let gap = val - (c * norm_sq - k);
        worst_gap = worst_gap.min(gap);
        pass &= gap >= -1e-9;
    }
    CriterionResult::new(
        "multiwell-coercivity",
        pass,
        format!("min slack over 10000 draws: {worst_gap:.3e}"),
    )
}

/// Transform round trip on random band-limited fields.
pub fn criterion_roundtrip() -> CriterionResult {
    let basis = HarmonicBasis::new(16, 0.9).unwrap();
    let grid = QuadratureGrid::for_basis(&basis);
    let mut rng = Xor(0x5150);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let mut f = SpectralField::zeros(&basis);
        for k in 0..basis.n_modes() {
            f.coeffs_mut()[k] = rng.pm1();
        }
        let back = grid.analyze(&grid.synthesize(&f).unwrap()).unwrap();
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            worst = worst.max((a - b).abs());
        }
    }
    CriterionResult::new(
        "transform-roundtrip",
        worst < 1e-12,
        format!("max coefficient deviation {worst:.3e}"),
    )
}

pub fn selftest() -> Vec<CriterionResult> {
    let mut out: Vec<CriterionResult> = selftest_table()
        .into_iter()
        .map(|(name, f)| match f() {
            Ok(()) => CriterionResult::new(name, true, "ok".into()),
            Err(msg) => CriterionResult::new(name, false, msg),
        })
        .collect();
    out.push(criterion_roundtrip());
    out.push(
        criterion_poincare(&ModelParams::default_three_component())
            .unwrap_or_else(|e| CriterionResult::new("poincare-chain", false, e.to_string())),
    );
    out.push(criterion_yosida_suite());
    out.push(criterion_degiorgi_property());
    out.push(criterion_coercivity());
    out
}

