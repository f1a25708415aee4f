//! Real spherical-harmonic analysis on the sphere of radius R.
//!
//! Fields are expanded in real harmonics that are orthonormal in `L^2(Gamma)`
//! (coefficients therefore carry units of field x length). The quadrature
//! grid pairs Gauss-Legendre colatitudes with equispaced longitudes, with all
//! point weights scaled so the total measure is the sphere area `4 pi R^2`.
//! Transforms are direct sums in a fixed order, so results are bitwise
//! reproducible run to run.

pub mod legendre;

use std::sync::Arc;

use crate::error::{CoreError, Result};
use legendre::{tri, tri_len};

/// One real harmonic mode. `m > 0` are cosine modes, `m < 0` sine modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mode {
    pub l: usize,
    pub m: isize,
}

/// Spherical-harmonic basis up to degree `lmax` on the sphere of radius R.
#[derive(Debug)]
pub struct HarmonicBasis {
    lmax: usize,
    radius: f64,
    /// `lambda_l = l(l+1)/R^2`, indexed by degree.
    eigenvalues: Vec<f64>,
    modes: Vec<Mode>,
}

impl HarmonicBasis {
    pub fn new(lmax: usize, radius: f64) -> Result<Arc<Self>> {
        if lmax < 2 {
            return Err(CoreError::InvalidParameter {
                name: "lmax",
                reason: format!("must be >= 2, got {lmax}"),
            });
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(CoreError::InvalidParameter {
                name: "radius",
                reason: format!("must be positive and finite, got {radius}"),
            });
        }
        let r2 = radius * radius;
        let eigenvalues = (0..=lmax).map(|l| (l * (l + 1)) as f64 / r2).collect();
        let mut modes = Vec::with_capacity((lmax + 1) * (lmax + 1));
        for l in 0..=lmax {
            for m in -(l as isize)..=(l as isize) {
                modes.push(Mode { l, m });
            }
        }
        Ok(Arc::new(Self {
            lmax,
            radius,
            eigenvalues,
            modes,
        }))
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Sphere area `4 pi R^2`.
    pub fn area(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.radius * self.radius
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Laplace-Beltrami eigenvalue `lambda_l = l(l+1)/R^2`.
    pub fn eigenvalue(&self, l: usize) -> f64 {
        self.eigenvalues[l]
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Flat index of mode (l, m): degree blocks in lexicographic (l, m) order.
    pub fn index(&self, l: usize, m: isize) -> usize {
        debug_assert!(l <= self.lmax && m.unsigned_abs() <= l);
        l * l + (m + l as isize) as usize
    }

    fn compatible(&self, other: &HarmonicBasis) -> bool {
        self.lmax == other.lmax && self.radius == other.radius
    }
}

/// Gauss-Legendre x equispaced-longitude quadrature paired with a basis.
///
/// Also caches the Legendre tables used by the transforms and by pointwise
/// derivative synthesis.
pub struct QuadratureGrid {
    basis: Arc<HarmonicBasis>,
    nlat: usize,
    nlon: usize,
    theta: Vec<f64>,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    /// Point weight per latitude ring: `gl_weight * (2 pi / nlon) * R^2`.
    ring_weight: Vec<f64>,
    /// `Q_lm(theta_i)` in triangular layout per latitude.
    plm: Vec<f64>,
    /// `dQ_lm/dtheta`.
    dplm: Vec<f64>,
    /// `d^2 Q_lm/dtheta^2`.
    d2plm: Vec<f64>,
    /// `cos(m phi_j)`, `sin(m phi_j)`, layout `[m][j]`.
    cosm: Vec<f64>,
    sinm: Vec<f64>,
}

impl QuadratureGrid {
    /// Standard oversampled grid: `nlat = 2(lmax+1)`, `nlon = 4(lmax+1)`.
    pub fn for_basis(basis: &Arc<HarmonicBasis>) -> Self {
        let n = basis.lmax() + 1;
        Self::with_dims(basis, 2 * n, 4 * n).expect("standard dims satisfy the oversampling rule")
    }

    /// Grid with custom dimensions, at least the standard oversampling.
    pub fn with_dims(basis: &Arc<HarmonicBasis>, nlat: usize, nlon: usize) -> Result<Self> {
        let n = basis.lmax() + 1;
        if nlat < 2 * n || nlon < 4 * n {
            return Err(CoreError::InvalidParameter {
                name: "grid dims",
                reason: format!(
                    "need nlat >= {} and nlon >= {}, got ({nlat}, {nlon})",
                    2 * n,
                    4 * n
                ),
            });
        }
        let lmax = basis.lmax();
        let (nodes, gl_w) = legendre::gauss_legendre(nlat);
        let r = basis.radius();
        let lon_w = 2.0 * std::f64::consts::PI / nlon as f64;

        let mut theta = Vec::with_capacity(nlat);
        let mut cos_theta = Vec::with_capacity(nlat);
        let mut sin_theta = Vec::with_capacity(nlat);
        let mut ring_weight = Vec::with_capacity(nlat);
        // colatitude decreasing in x => theta increasing from north pole
        for i in 0..nlat {
            let x = nodes[nlat - 1 - i];
            let w = gl_w[nlat - 1 - i];
            theta.push(x.acos());
            cos_theta.push(x);
            sin_theta.push((1.0 - x * x).sqrt());
            ring_weight.push(w * lon_w * r * r);
        }

        let t = tri_len(lmax);
        let mut plm = vec![0.0; nlat * t];
        let mut dplm = vec![0.0; nlat * t];
        let mut d2plm = vec![0.0; nlat * t];
        for i in 0..nlat {
            let row = &mut plm[i * t..(i + 1) * t];
            legendre::normalized_plm(lmax, cos_theta[i], sin_theta[i], row);
        }
        for i in 0..nlat {
            let (pr, dr) = (&plm[i * t..(i + 1) * t], &mut dplm[i * t..(i + 1) * t]);
            legendre::normalized_dplm(lmax, cos_theta[i], sin_theta[i], pr, dr);
        }
        for i in 0..nlat {
            let pr = &plm[i * t..(i + 1) * t];
            let dr = &dplm[i * t..(i + 1) * t];
            let d2 = &mut d2plm[i * t..(i + 1) * t];
            legendre::normalized_d2plm(lmax, cos_theta[i], sin_theta[i], pr, dr, d2);
        }

        let mut cosm = vec![0.0; (lmax + 1) * nlon];
        let mut sinm = vec![0.0; (lmax + 1) * nlon];
        for m in 0..=lmax {
            for j in 0..nlon {
                let phi = lon_w * j as f64;
                cosm[m * nlon + j] = (m as f64 * phi).cos();
                sinm[m * nlon + j] = (m as f64 * phi).sin();
            }
        }

        Ok(Self {
            basis: Arc::clone(basis),
            nlat,
            nlon,
            theta,
            cos_theta,
            sin_theta,
            ring_weight,
            plm,
            dplm,
            d2plm,
            cosm,
            sinm,
        })
    }

    pub fn basis(&self) -> &Arc<HarmonicBasis> {
        &self.basis
    }

    pub fn nlat(&self) -> usize {
        self.nlat
    }

    pub fn nlon(&self) -> usize {
        self.nlon
    }

    pub fn n_points(&self) -> usize {
        self.nlat * self.nlon
    }

    pub fn colatitude(&self, i: usize) -> f64 {
        self.theta[i]
    }

    pub fn longitude(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.nlon as f64
    }

    pub fn sin_theta(&self, i: usize) -> f64 {
        self.sin_theta[i]
    }

    pub fn cos_theta(&self, i: usize) -> f64 {
        self.cos_theta[i]
    }

    /// Quadrature weight of grid point `(i, j)`; weights sum to `4 pi R^2`.
    pub fn weight(&self, i: usize) -> f64 {
        self.ring_weight[i]
    }

    /// Surface integral of grid values over the round sphere.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.n_points(), "grid size mismatch");
        let mut total = 0.0;
        for i in 0..self.nlat {
            let mut ring = 0.0;
            for j in 0..self.nlon {
                ring += values[i * self.nlon + j];
            }
            total += self.ring_weight[i] * ring;
        }
        total
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_points() {
            return Err(CoreError::ShapeMismatch(format!(
                "grid has {} points, got {len} values",
                self.n_points()
            )));
        }
        Ok(())
    }

    /// Forward transform: grid values -> harmonic coefficients.
    pub fn analyze(&self, values: &[f64]) -> Result<SpectralField> {
        self.check_len(values.len())?;
        let lmax = self.basis.lmax();
        let nlon = self.nlon;
        let t = tri_len(lmax);
        // Longitude DFT per ring, direct summation in fixed order.
        let mut fc = vec![0.0; self.nlat * (lmax + 1)];
        let mut fs = vec![0.0; self.nlat * (lmax + 1)];
        for i in 0..self.nlat {
            let row = &values[i * nlon..(i + 1) * nlon];
            for m in 0..=lmax {
                let (mut ac, mut as_) = (0.0, 0.0);
                let (cm, sm) = (&self.cosm[m * nlon..], &self.sinm[m * nlon..]);
                for j in 0..nlon {
                    ac += row[j] * cm[j];
                    as_ += row[j] * sm[j];
                }
                fc[i * (lmax + 1) + m] = ac;
                fs[i * (lmax + 1) + m] = as_;
            }
        }
        // Legendre projection.
        let inv_r = 1.0 / self.basis.radius();
        let sqrt2 = std::f64::consts::SQRT_2;
        let mut coeffs = vec![0.0; self.basis.n_modes()];
        for l in 0..=lmax {
            for m in 0..=l {
                let (mut sc, mut ss) = (0.0, 0.0);
                for i in 0..self.nlat {
                    let q = self.plm[i * t + tri(l, m)] * self.ring_weight[i];
                    sc += q * fc[i * (lmax + 1) + m];
                    if m > 0 {
                        ss += q * fs[i * (lmax + 1) + m];
                    }
                }
                if m == 0 {
                    coeffs[self.basis.index(l, 0)] = sc * inv_r;
                } else {
                    coeffs[self.basis.index(l, m as isize)] = sqrt2 * sc * inv_r;
                    coeffs[self.basis.index(l, -(m as isize))] = sqrt2 * ss * inv_r;
                }
            }
        }
        Ok(SpectralField {
            basis: Arc::clone(&self.basis),
            coeffs,
        })
    }

    /// Inverse transform: harmonic coefficients -> grid values.
    pub fn synthesize(&self, field: &SpectralField) -> Result<Vec<f64>> {
        self.check_compat(field)?;
        let tables = [self.plm.as_slice()];
        let mut out = self.synth_tables(field, &tables);
        Ok(out.pop().unwrap())
    }

    /// Synthesis of the field together with its first parameter derivatives
    /// `(f, df/dtheta, df/dphi)` on the grid.
    pub fn synthesize_with_gradient(&self, field: &SpectralField) -> Result<[Vec<f64>; 3]> {
        self.check_compat(field)?;
        let v = self.synth_deriv(field, false);
        let mut it = v.into_iter();
        Ok([
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
        ])
    }

    /// Synthesis with first and second parameter derivatives:
    /// `(f, f_t, f_p, f_tt, f_tp, f_pp)` where `t = theta`, `p = phi`.
    pub fn synthesize_with_hessian(&self, field: &SpectralField) -> Result<[Vec<f64>; 6]> {
        self.check_compat(field)?;
        let v = self.synth_deriv(field, true);
        let mut it = v.into_iter();
        Ok([
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
        ])
    }

    fn check_compat(&self, field: &SpectralField) -> Result<()> {
        if !self.basis.compatible(&field.basis) {
            return Err(CoreError::ShapeMismatch(
                "field basis does not match grid basis".into(),
            ));
        }
        Ok(())
    }

    /// Shared synthesis core: one output array per latitude table supplied.
    fn synth_tables(&self, field: &SpectralField, tables: &[&[f64]]) -> Vec<Vec<f64>> {
        let lmax = self.basis.lmax();
        let nlon = self.nlon;
        let t = tri_len(lmax);
        let inv_r = 1.0 / self.basis.radius();
        let sqrt2 = std::f64::consts::SQRT_2;
        let mut outs = vec![vec![0.0; self.n_points()]; tables.len()];
        for (k, table) in tables.iter().enumerate() {
            let out = &mut outs[k];
            for i in 0..self.nlat {
                let trow = &table[i * t..(i + 1) * t];
                // ring accumulators per azimuthal order
                let mut ac = vec![0.0; lmax + 1];
                let mut as_ = vec![0.0; lmax + 1];
                for l in 0..=lmax {
                    ac[0] += field.coeffs[self.basis.index(l, 0)] * trow[tri(l, 0)];
                    for m in 1..=l {
                        let q = trow[tri(l, m)] * sqrt2;
                        ac[m] += field.coeffs[self.basis.index(l, m as isize)] * q;
                        as_[m] += field.coeffs[self.basis.index(l, -(m as isize))] * q;
                    }
                }
                let row = &mut out[i * nlon..(i + 1) * nlon];
                for j in 0..nlon {
                    let mut v = ac[0];
                    for m in 1..=lmax {
                        v += ac[m] * self.cosm[m * nlon + j] + as_[m] * self.sinm[m * nlon + j];
                    }
                    row[j] = v * inv_r;
                }
            }
        }
        outs
    }

    fn synth_deriv(&self, field: &SpectralField, second: bool) -> Vec<Vec<f64>> {
        let lmax = self.basis.lmax();
        let nlon = self.nlon;
        let t = tri_len(lmax);
        let inv_r = 1.0 / self.basis.radius();
        let sqrt2 = std::f64::consts::SQRT_2;
        let n_out = if second { 6 } else { 3 };
        let mut outs = vec![vec![0.0; self.n_points()]; n_out];
        for i in 0..self.nlat {
            let prow = &self.plm[i * t..(i + 1) * t];
            let drow = &self.dplm[i * t..(i + 1) * t];
            let d2row = &self.d2plm[i * t..(i + 1) * t];
            // accumulators: value, dtheta, d2theta per (cos, sin) order
            let mut vc = vec![0.0; lmax + 1];
            let mut vs = vec![0.0; lmax + 1];
            let mut dc = vec![0.0; lmax + 1];
            let mut ds = vec![0.0; lmax + 1];
            let mut d2c = vec![0.0; lmax + 1];
            let mut d2s = vec![0.0; lmax + 1];
            for l in 0..=lmax {
                let c0 = field.coeffs[self.basis.index(l, 0)];
                vc[0] += c0 * prow[tri(l, 0)];
                dc[0] += c0 * drow[tri(l, 0)];
                if second {
                    d2c[0] += c0 * d2row[tri(l, 0)];
                }
                for m in 1..=l {
                    let cc = field.coeffs[self.basis.index(l, m as isize)] * sqrt2;
                    let cs = field.coeffs[self.basis.index(l, -(m as isize))] * sqrt2;
                    vc[m] += cc * prow[tri(l, m)];
                    vs[m] += cs * prow[tri(l, m)];
                    dc[m] += cc * drow[tri(l, m)];
                    ds[m] += cs * drow[tri(l, m)];
                    if second {
                        d2c[m] += cc * d2row[tri(l, m)];
                        d2s[m] += cs * d2row[tri(l, m)];
                    }
                }
            }
            for j in 0..nlon {
                let (mut f, mut ft, mut fp) = (vc[0], dc[0], 0.0);
                let (mut ftt, mut ftp, mut fpp) = (d2c[0], 0.0, 0.0);
                for m in 1..=lmax {
                    let cm = self.cosm[m * nlon + j];
                    let sm = self.sinm[m * nlon + j];
                    let mf = m as f64;
                    f += vc[m] * cm + vs[m] * sm;
                    ft += dc[m] * cm + ds[m] * sm;
                    fp += mf * (vs[m] * cm - vc[m] * sm);
                    if second {
                        ftt += d2c[m] * cm + d2s[m] * sm;
                        ftp += mf * (ds[m] * cm - dc[m] * sm);
                        fpp += -mf * mf * (vc[m] * cm + vs[m] * sm);
                    }
                }
                let idx = i * nlon + j;
                outs[0][idx] = f * inv_r;
                outs[1][idx] = ft * inv_r;
                outs[2][idx] = fp * inv_r;
                if second {
                    outs[3][idx] = ftt * inv_r;
                    outs[4][idx] = ftp * inv_r;
                    outs[5][idx] = fpp * inv_r;
                }
            }
        }
        outs
    }
}

/// Scalar field on the sphere stored as real harmonic coefficients.
#[derive(Debug, Clone)]
pub struct SpectralField {
    basis: Arc<HarmonicBasis>,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(basis: &Arc<HarmonicBasis>) -> Self {
        Self {
            basis: Arc::clone(basis),
            coeffs: vec![0.0; basis.n_modes()],
        }
    }

    pub fn from_coeffs(basis: &Arc<HarmonicBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.n_modes() {
            return Err(CoreError::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                basis.n_modes(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CoreError::Numerical("non-finite coefficient".into()));
        }
        Ok(Self {
            basis: Arc::clone(basis),
            coeffs,
        })
    }

    /// The constant field `f == value`.
    pub fn constant(basis: &Arc<HarmonicBasis>, value: f64) -> Self {
        let mut f = Self::zeros(basis);
        f.coeffs[0] = value * basis.area().sqrt();
        f
    }

    pub fn basis(&self) -> &Arc<HarmonicBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, l: usize, m: isize) -> f64 {
        self.coeffs[self.basis.index(l, m)]
    }

    pub fn set_coeff(&mut self, l: usize, m: isize, v: f64) {
        let idx = self.basis.index(l, m);
        self.coeffs[idx] = v;
    }

    /// Mean value over the sphere: `a_00 / sqrt(|Gamma|)`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0] / self.basis.area().sqrt()
    }

    /// Apply the Laplace-Beltrami operator: mode (l, m) scales by `-lambda_l`.
    pub fn laplace_beltrami(&self) -> Self {
        let mut out = self.clone();
        for (k, mode) in self.basis.modes().iter().enumerate() {
            out.coeffs[k] = -self.basis.eigenvalue(mode.l) * self.coeffs[k];
        }
        out
    }

    /// Zero the degree-0 coefficient.
    pub fn project_mean_free(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = 0.0;
        out
    }

    /// Project onto `K_2 = span{1, nu_1, nu_2, nu_3}^perp`: zero all `l <= 1`.
    pub fn project_k2(&self) -> Self {
        let mut out = self.clone();
        for c in out.coeffs[0..4].iter_mut() {
            *c = 0.0;
        }
        out
    }

    /// Largest magnitude among the degree-0 and degree-1 coefficients.
    pub fn low_mode_leak(&self) -> f64 {
        self.coeffs[0..4].iter().fold(0.0f64, |a, c| a.max(c.abs()))
    }

    /// `int f^2` by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `int |grad f|^2 = sum lambda_l a^2`.
    pub fn h1_seminorm_sq(&self) -> f64 {
        self.basis
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(mode, c)| self.basis.eigenvalue(mode.l) * c * c)
            .sum()
    }

    pub fn h1_seminorm(&self) -> f64 {
        self.h1_seminorm_sq().sqrt()
    }

    /// `int (Delta f)^2 = sum lambda_l^2 a^2`.
    pub fn h2_seminorm_sq(&self) -> f64 {
        self.basis
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(mode, c)| {
                let lam = self.basis.eigenvalue(mode.l);
                lam * lam * c * c
            })
            .sum()
    }

    pub fn h2_seminorm(&self) -> f64 {
        self.h2_seminorm_sq().sqrt()
    }

    /// `int f g` by Parseval.
    pub fn l2_inner(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        for (c, xc) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *c += a * xc;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Re-express in a larger basis (same radius), zero-padding new modes.
    pub fn embed(&self, target: &Arc<HarmonicBasis>) -> Result<Self> {
        if target.radius() != self.basis.radius() || target.lmax() < self.basis.lmax() {
            return Err(CoreError::ShapeMismatch(
                "embed target must share the radius and have lmax at least as large".into(),
            ));
        }
        let mut out = Self::zeros(target);
        for (k, mode) in self.basis.modes().iter().enumerate() {
            let idx = target.index(mode.l, mode.m);
            out.coeffs[idx] = self.coeffs[k];
        }
        Ok(out)
    }
}
