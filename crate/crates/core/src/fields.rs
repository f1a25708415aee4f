//! Constrained state containers and the tangent-space machinery: the simplex
//! projection P, mobility validation, initial data, and the weighted inverse
//! Laplacian with its dual norm.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::potential::{EntropySpec, InteractionMatrix};
use crate::sphere::{HarmonicBasis, QuadratureGrid, SpectralField};

/// Orthogonal projection of R^N onto the zero-sum tangent space:
/// `P v = v - mean(v) e`.
pub fn project_tsigma(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

pub fn projected_tsigma(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    project_tsigma(&mut out);
    out
}

/// Apply P across the components of a vector field, coefficient by
/// coefficient (P acts on the component index only, so it commutes with the
/// harmonic transform).
pub fn project_tsigma_fields(fields: &mut [SpectralField]) {
    let n = fields.len();
    let n_modes = fields[0].coeffs().len();
    for k in 0..n_modes {
        let mean = fields.iter().map(|f| f.coeffs()[k]).sum::<f64>() / n as f64;
        for f in fields.iter_mut() {
            f.coeffs_mut()[k] -= mean;
        }
    }
}

/// Constant mobility matrix, validated positive definite on the tangent
/// space, with its certified coercivity constant.
#[derive(Debug, Clone)]
pub struct Mobility {
    matrix: DMatrix<f64>,
    l0: f64,
    /// Orthonormal basis of the zero-sum subspace, N x (N-1).
    tangent_basis: DMatrix<f64>,
    /// Inverse of the reduced matrix `B^T L B`.
    reduced_inv: DMatrix<f64>,
}

impl Mobility {
    /// Validate symmetry, zero row sums, and coercivity on the tangent space.
    pub fn validate(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 || rows.iter().any(|r| r.len() != n) {
            return Err(CoreError::MobilityInvalid(format!(
                "need a square matrix with N >= 2, got {n} rows"
            )));
        }
        for i in 0..n {
            for j in 0..n {
                if rows[i][j] != rows[j][i] {
                    return Err(CoreError::MobilityInvalid(format!(
                        "asymmetric at ({i}, {j}): {} vs {}",
                        rows[i][j], rows[j][i]
                    )));
                }
            }
        }
        for (i, row) in rows.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if s.abs() > 1e-12 {
                return Err(CoreError::MobilityInvalid(format!(
                    "row {i} sums to {s:e}, must be 0"
                )));
            }
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let b = helmert_basis(n);
        let reduced = b.transpose() * &matrix * &b;
        let eig = reduced.clone().symmetric_eigen();
        let l0 = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &v| a.min(v));
        if !(l0 > 1e-12) {
            return Err(CoreError::MobilityInvalid(format!(
                "not positive definite on the tangent space (l0 = {l0:e})"
            )));
        }
        let reduced_inv = reduced
            .try_inverse()
            .ok_or_else(|| CoreError::MobilityInvalid("reduced matrix not invertible".into()))?;
        Ok(Self {
            matrix,
            l0,
            tangent_basis: b,
            reduced_inv,
        })
    }

    /// The default mobility `I - ee^T/N`, the tangent projector itself.
    pub fn projector(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        delta - 1.0 / n as f64
                    })
                    .collect()
            })
            .collect();
        Self::validate(rows).expect("projector mobility is always admissible")
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Certified coercivity constant on the tangent space.
    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `L v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.matrix[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Solve `L f = g` restricted to the tangent space (g must be zero-sum).
    pub fn solve_tangent(&self, g: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut reduced_rhs = vec![0.0; n - 1];
        for k in 0..n - 1 {
            let mut acc = 0.0;
            for i in 0..n {
                acc += self.tangent_basis[(i, k)] * g[i];
            }
            reduced_rhs[k] = acc;
        }
        let mut y = vec![0.0; n - 1];
        for k in 0..n - 1 {
            let mut acc = 0.0;
            for j in 0..n - 1 {
                acc += self.reduced_inv[(k, j)] * reduced_rhs[j];
            }
            y[k] = acc;
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..n - 1 {
                acc += self.tangent_basis[(i, k)] * y[k];
            }
            out[i] = acc;
        }
        out
    }
}

/// Orthonormal basis of the zero-sum subspace (Helmert vectors).
fn helmert_basis(n: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(n, n - 1);
    for k in 1..n {
        let norm = (k as f64 * (k + 1) as f64).sqrt();
        for i in 0..k {
            b[(i, k - 1)] = 1.0 / norm;
        }
        b[(k, k - 1)] = -(k as f64) / norm;
    }
    b
}

/// All model parameters of the coupled system.
#[derive(Debug, Clone)]
pub struct ModelParams {
    /// Bending rigidity.
    pub kappa: f64,
    /// Surface tension.
    pub sigma: f64,
    /// Line-energy coefficient.
    pub b: f64,
    /// Interface width.
    pub epsilon: f64,
    /// Kinetic coefficient for the deformation (>= 0; 0 means quasi-static).
    pub beta: f64,
    /// Sphere radius.
    pub radius: f64,
    /// Spontaneous-curvature couplings, one per component.
    pub lambda: Vec<f64>,
    pub interaction: InteractionMatrix,
    /// Mean compositions, in (0,1)^N summing to 1.
    pub alpha: Vec<f64>,
    pub mobility: Mobility,
    pub entropy: EntropySpec,
    /// Yosida regularization parameter.
    pub h: f64,
    /// Stabilization coefficient S of the IMEX scheme.
    pub stabilization: f64,
    /// Time step.
    pub dt: f64,
}

impl ModelParams {
    pub fn n_components(&self) -> usize {
        self.alpha.len()
    }

    /// The automatic stabilization `S = b/(epsilon h)` matching the global
    /// Lipschitz constant of the regularized entropy gradient.
    pub fn auto_stabilization(b: f64, epsilon: f64, h: f64) -> f64 {
        b / (epsilon * h)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa", self.kappa),
            ("sigma", self.sigma),
            ("b", self.b),
            ("epsilon", self.epsilon),
            ("radius", self.radius),
            ("h", self.h),
            ("dt", self.dt),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CoreError::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if !(self.beta >= 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "beta",
                reason: format!("must be nonnegative, got {}", self.beta),
            });
        }
        if self.stabilization < 0.0 {
            return Err(CoreError::InvalidParameter {
                name: "stabilization",
                reason: "must be nonnegative".into(),
            });
        }
        let n = self.alpha.len();
        if n < 2 {
            return Err(CoreError::InvalidParameter {
                name: "alpha",
                reason: "need at least two components".into(),
            });
        }
        if self.lambda.len() != n || self.interaction.n() != n || self.mobility.n() != n {
            return Err(CoreError::ShapeMismatch(format!(
                "component count mismatch: alpha {n}, lambda {}, A {}, L {}",
                self.lambda.len(),
                self.interaction.n(),
                self.mobility.n()
            )));
        }
        if self.alpha.iter().any(|&a| a <= 0.0 || a >= 1.0) {
            return Err(CoreError::InvalidParameter {
                name: "alpha",
                reason: "entries must lie in (0,1)".into(),
            });
        }
        let s: f64 = self.alpha.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(CoreError::InvalidParameter {
                name: "alpha",
                reason: format!("must sum to 1, got {s}"),
            });
        }
        Ok(())
    }

    /// Desk-scale default: three components on the unit sphere with a
    /// spinodally unstable interaction.
    pub fn default_three_component() -> Self {
        let h = 1e-4;
        let b = 1.0;
        let epsilon = 0.1;
        Self {
            kappa: 0.5,
            sigma: 1.5,
            b,
            epsilon,
            beta: 1.0,
            radius: 1.0,
            lambda: vec![0.5, -0.25, -0.25],
            interaction: InteractionMatrix::mean_field(3, 3.5).unwrap(),
            alpha: vec![0.4, 0.35, 0.25],
            mobility: Mobility::projector(3),
            entropy: EntropySpec::logarithmic(h).unwrap(),
            h,
            // moderate stabilization matching the local Lipschitz constant of
            // the entropy gradient over the separated range; the check
            // commands also exercise the automatic b/(eps h) choice
            stabilization: 350.0,
            dt: 1e-3,
        }
    }
}

/// N-component composition field with the simplex and mass constraints.
#[derive(Debug, Clone)]
pub struct PhaseField {
    components: Vec<SpectralField>,
    /// Cached grid values, one vector per component.
    grid_values: Vec<Vec<f64>>,
}

impl PhaseField {
    pub fn from_components(components: Vec<SpectralField>, grid: &QuadratureGrid) -> Result<Self> {
        if components.is_empty() {
            return Err(CoreError::ShapeMismatch("no components".into()));
        }
        let grid_values = components
            .iter()
            .map(|f| grid.synthesize(f))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            components,
            grid_values,
        })
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &SpectralField {
        &self.components[i]
    }

    pub fn components(&self) -> &[SpectralField] {
        &self.components
    }

    pub fn grid_values(&self, i: usize) -> &[f64] {
        &self.grid_values[i]
    }

    pub fn means(&self) -> Vec<f64> {
        self.components.iter().map(|f| f.mean()).collect()
    }

    /// Max-norm of `sum_i phi_i - 1` over the grid.
    pub fn sum_violation(&self) -> f64 {
        let npts = self.grid_values[0].len();
        let mut worst = 0.0f64;
        for p in 0..npts {
            let s: f64 = self.grid_values.iter().map(|g| g[p]).sum();
            worst = worst.max((s - 1.0).abs());
        }
        worst
    }

    /// Smallest grid value over all components.
    pub fn min_value(&self) -> f64 {
        self.grid_values
            .iter()
            .flat_map(|g| g.iter())
            .fold(f64::INFINITY, |a, &v| a.min(v))
    }

    /// Largest grid value over all components.
    pub fn max_value(&self) -> f64 {
        self.grid_values
            .iter()
            .flat_map(|g| g.iter())
            .fold(f64::NEG_INFINITY, |a, &v| a.max(v))
    }
}

/// Normal deformation field, constrained to `K_2` (no degree-0/1 content).
#[derive(Debug, Clone)]
pub struct Deformation {
    field: SpectralField,
}

impl Deformation {
    /// Construct by projecting away any degree-0/1 content.
    pub fn project(field: SpectralField) -> Self {
        Self {
            field: field.project_k2(),
        }
    }

    pub fn zeros(basis: &Arc<HarmonicBasis>) -> Self {
        Self {
            field: SpectralField::zeros(basis),
        }
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }

    pub fn low_mode_leak(&self) -> f64 {
        self.field.low_mode_leak()
    }
}

/// Deterministic uniform in [-1, 1) from a counter-based stream cipher.
pub(crate) fn uniform_pm1(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

/// Build an initial composition `alpha + perturbation` whose perturbation is
/// a seeded random combination of degrees `1..=l_init` with zero-sum
/// componentwise coefficients.
///
/// The perturbation is normalized to the requested sup-norm amplitude and
/// then rescaled (never clipped) so the smallest grid value stays at or above
/// `margin`; the applied rescale factor is returned alongside the field.
pub fn init_phase(
    alpha: &[f64],
    basis: &Arc<HarmonicBasis>,
    grid: &QuadratureGrid,
    amplitude: f64,
    l_init: usize,
    margin: f64,
    seed: u64,
) -> Result<(PhaseField, f64)> {
    let n = alpha.len();
    if amplitude < 0.0 {
        return Err(CoreError::InvalidParameter {
            name: "amplitude",
            reason: "must be nonnegative".into(),
        });
    }
    let min_alpha = alpha.iter().cloned().fold(f64::INFINITY, f64::min);
    if margin <= 0.0 || margin >= min_alpha {
        return Err(CoreError::InvalidParameter {
            name: "margin",
            reason: format!("must lie in (0, min alpha = {min_alpha})"),
        });
    }
    if l_init < 1 || l_init > basis.lmax() {
        return Err(CoreError::InvalidParameter {
            name: "l_init",
            reason: format!("must lie in [1, lmax = {}]", basis.lmax()),
        });
    }

    let mut fields: Vec<SpectralField> = (0..n)
        .map(|i| SpectralField::constant(basis, alpha[i]))
        .collect();
    if amplitude == 0.0 {
        return Ok((PhaseField::from_components(fields, grid)?, 1.0));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delta: Vec<SpectralField> = (0..n).map(|_| SpectralField::zeros(basis)).collect();
    for l in 1..=l_init {
        for m in -(l as isize)..=(l as isize) {
            let mut c: Vec<f64> = (0..n).map(|_| uniform_pm1(&mut rng)).collect();
            project_tsigma(&mut c);
            for (i, d) in delta.iter_mut().enumerate() {
                d.set_coeff(l, m, c[i]);
            }
        }
    }
    // normalize the perturbation sup-norm to the requested amplitude
    let mut sup = 0.0f64;
    let delta_grids: Vec<Vec<f64>> = delta
        .iter()
        .map(|d| grid.synthesize(d))
        .collect::<Result<_>>()?;
    for g in &delta_grids {
        for &v in g {
            sup = sup.max(v.abs());
        }
    }
    if sup == 0.0 {
        return Ok((PhaseField::from_components(fields, grid)?, 1.0));
    }
    let norm_scale = amplitude / sup;

    // feasibility rescale: keep alpha_i + gamma * delta_i >= margin
    let mut gamma = 1.0f64;
    for (i, g) in delta_grids.iter().enumerate() {
        for &v in g {
            let d = v * norm_scale;
            if d < 0.0 {
                gamma = gamma.min((alpha[i] - margin) / (-d));
            }
        }
    }
    let applied = norm_scale * gamma;
    for (i, d) in delta.iter().enumerate() {
        fields[i].axpy(applied, d);
    }
    Ok((PhaseField::from_components(fields, grid)?, gamma))
}

/// Check that a vector field is admissible for the dual norm: mean-free and
/// tangent-valued (both up to 1e-10 relative).
fn check_admissible(g: &[SpectralField]) -> Result<()> {
    let scale = g
        .iter()
        .map(|f| f.l2_norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    for (i, f) in g.iter().enumerate() {
        if f.coeffs()[0].abs() > 1e-10 * scale {
            return Err(CoreError::ConstraintViolation(format!(
                "component {i} has nonzero mean (a00 = {:e})",
                f.coeffs()[0]
            )));
        }
    }
    let n_modes = g[0].coeffs().len();
    for k in 0..n_modes {
        let s: f64 = g.iter().map(|f| f.coeffs()[k]).sum();
        if s.abs() > 1e-10 * scale {
            return Err(CoreError::ConstraintViolation(format!(
                "mode {k} leaves the tangent space (component sum = {s:e})"
            )));
        }
    }
    Ok(())
}

/// Weighted inverse Laplacian: solve `lambda_l L f_hat = g_hat` per mode on
/// the tangent space. Returns the mean-free tangent-valued solution field.
pub fn weighted_inv_laplacian(g: &[SpectralField], mobility: &Mobility) -> Result<Vec<SpectralField>> {
    check_admissible(g)?;
    let n = g.len();
    let basis = g[0].basis().clone();
    let mut out: Vec<SpectralField> = (0..n).map(|_| SpectralField::zeros(&basis)).collect();
    for (k, mode) in basis.modes().iter().enumerate() {
        if mode.l == 0 {
            continue;
        }
        let lam = basis.eigenvalue(mode.l);
        let gv: Vec<f64> = g.iter().map(|f| f.coeffs()[k]).collect();
        let fv = mobility.solve_tangent(&gv);
        for (i, o) in out.iter_mut().enumerate() {
            o.coeffs_mut()[k] = fv[i] / lam;
        }
    }
    Ok(out)
}

/// Squared dual norm `|g|_{-1,L}^2 = <g, (-Delta_L)^{-1} g>`.
pub fn hminus1_norm_sq(g: &[SpectralField], mobility: &Mobility) -> Result<f64> {
    let f = weighted_inv_laplacian(g, mobility)?;
    let mut total = 0.0;
    for (gi, fi) in g.iter().zip(&f) {
        total += gi.l2_inner(fi);
    }
    Ok(total)
}
