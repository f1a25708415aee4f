//! The singular entropy, its cubic extension, the Yosida-regularized family,
//! and the multi-well free-energy density.
//!
//! The base entropy is logarithmic, `psi(s) = s ln s` on (0, 1], extended for
//! `s >= 1` by the cubic `A s^3 + B s^2 + D s` whose coefficients match value
//! and first two derivatives at 1. For the logarithmic base the extension's
//! second derivative turns negative past s = 4/3, so convexity does *not*
//! extend to all s > 0; simulated fields live in (0, 1) and never see that
//! region. The Yosida machinery below therefore regularizes `psi'` as the
//! maximal monotone operator with domain (0, 1] (log branch plus the vertical
//! ray at s = 1), which keeps the resolvent in (0, 1] and makes the family
//! globally convex with the documented Lipschitz and coercivity properties.

use nalgebra::DMatrix;

use crate::error::{CoreError, Result};

/// Logarithmic entropy specification with extension and regularization data.
#[derive(Debug, Clone)]
pub struct EntropySpec {
    /// Convexity constant: `psi''(s) >= zeta` on (0, 1]; 1 for `s ln s`.
    pub zeta: f64,
    /// Separation exponent from the entropy growth assumption (metadata only).
    pub iota: f64,
    /// Default regularization parameter used by the simulation.
    pub default_h: f64,
    /// Cubic extension coefficients (A, B, D) for `s >= 1`.
    pub ext: [f64; 3],
}

impl EntropySpec {
    /// The standard logarithmic entropy `s ln s` with its cubic extension.
    pub fn logarithmic(default_h: f64) -> Result<Self> {
        if !(default_h > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "h",
                reason: format!("regularization must be positive, got {default_h}"),
            });
        }
        // A = psi(1) - psi'(1) + psi''(1)/2, B = -3 psi + 3 psi' - psi'',
        // D = 3 psi - 2 psi' + psi''/2, with psi(1)=0, psi'(1)=1, psi''(1)=1.
        let (v, d1, d2) = (0.0, 1.0, 1.0);
        let a = v - d1 + 0.5 * d2;
        let b = -3.0 * v + 3.0 * d1 - d2;
        let d = 3.0 * v - 2.0 * d1 + 0.5 * d2;
        Ok(Self {
            zeta: 1.0,
            iota: 1.0,
            default_h,
            ext: [a, b, d],
        })
    }

    /// `psi(s)`; +infinity for s < 0, `0` at s = 0 by continuity.
    pub fn psi(&self, s: f64) -> f64 {
        if s < 0.0 {
            f64::INFINITY
        } else if s == 0.0 {
            0.0
        } else if s <= 1.0 {
            s * s.ln()
        } else {
            let [a, b, d] = self.ext;
            ((a * s + b) * s + d) * s
        }
    }

    /// `psi'(s)` for s > 0.
    pub fn psi_prime(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(CoreError::EntropyDomain(s));
        }
        Ok(if s <= 1.0 {
            s.ln() + 1.0
        } else {
            let [a, b, d] = self.ext;
            (3.0 * a * s + 2.0 * b) * s + d
        })
    }

    /// `psi''(s)` for s > 0.
    pub fn psi_double_prime(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(CoreError::EntropyDomain(s));
        }
        Ok(if s <= 1.0 {
            1.0 / s
        } else {
            let [a, b, _] = self.ext;
            6.0 * a * s + 2.0 * b
        })
    }

    /// Log of the resolvent, `ln J_h(s)`, exact even when `J_h(s)` underflows.
    ///
    /// On the log branch the defining equation `r + h psi'(r) = s` becomes
    /// `e^t + h(t + 1) = s` for `t = ln r`, which is smooth, convex and
    /// strictly increasing in t; a bracketed Newton iteration from the right
    /// endpoint converges for every s. For `s >= 1 + h` the maximal monotone
    /// graph saturates the resolvent at 1 (t = 0).
    pub fn resolvent_log(&self, s: f64, h: f64) -> f64 {
        assert!(h > 0.0 && s.is_finite(), "resolvent needs h > 0, finite s");
        if s >= 1.0 + h {
            return 0.0;
        }
        // bracket [t_lo, t_hi]: F(t_lo) <= 0 <= F(t_hi)
        let f = |t: f64| t.exp() + h * (t + 1.0) - s;
        let mut t_hi = 0.0f64;
        let mut t_lo = (s - 1.0) / h - 1.0;
        debug_assert!(f(t_lo) <= 0.0 && f(t_hi) >= 0.0);
        // Newton from the right endpoint; convex F makes this monotone.
        let mut t = t_hi;
        for _ in 0..200 {
            let et = t.exp();
            let val = et + h * (t + 1.0) - s;
            let step = val / (et + h);
            let mut t_new = t - step;
            if val > 0.0 {
                t_hi = t;
            } else {
                t_lo = t;
            }
            if !(t_new > t_lo && t_new < t_hi) {
                t_new = 0.5 * (t_lo + t_hi);
            }
            if (t_new - t).abs() <= 1e-15 * (1.0 + t.abs()) {
                return t_new;
            }
            t = t_new;
        }
        t
    }

    /// Resolvent `J_h(s) = (I + h T)^{-1} s`, the unique `r in (0, 1]`
    /// with `r + h psi'(r) = s` (saturating at 1 for `s >= 1 + h`).
    ///
    /// Monotone nondecreasing in s. Results that underflow the smallest
    /// positive normal round up to it so the range stays in (0, 1].
    pub fn resolvent(&self, s: f64, h: f64) -> f64 {
        let r = self.resolvent_log(s, h).exp();
        r.max(f64::MIN_POSITIVE)
    }

    /// Regularized entropy `psi_h(s) = (h/2)|T_h s|^2 + psi(J_h s)`.
    pub fn psi_h(&self, s: f64, h: f64) -> f64 {
        if s >= 1.0 + h {
            let d = s - 1.0;
            return d * d / (2.0 * h);
        }
        let t = self.resolvent_log(s, h);
        // T_h = psi'(J) = t + 1 by the resolvent equation, and
        // psi(J) = J ln J = t e^t; both stable for very negative t and
        // free of the (s - J)/h cancellation at small h
        let yosida = t + 1.0;
        0.5 * h * yosida * yosida + t * t.exp()
    }

    /// `psi_h'(s) = T_h(s)`, evaluated as `psi'(J_h(s)) = ln J_h(s) + 1`
    /// (identical to `(s - J_h s)/h` but exact for small h); globally
    /// Lipschitz with constant 1/h.
    pub fn psi_h_prime(&self, s: f64, h: f64) -> f64 {
        if s >= 1.0 + h {
            return (s - 1.0) / h;
        }
        self.resolvent_log(s, h) + 1.0
    }
}

/// Symmetric interaction matrix with a positive largest eigenvalue.
#[derive(Debug, Clone)]
pub struct InteractionMatrix {
    matrix: DMatrix<f64>,
    lambda_max: f64,
}

impl InteractionMatrix {
    /// Validate symmetry (exact) and the positive-eigenvalue requirement.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(CoreError::ShapeMismatch(
                "interaction matrix must be square".into(),
            ));
        }
        for i in 0..n {
            for j in 0..n {
                if rows[i][j] != rows[j][i] {
                    return Err(CoreError::InvalidParameter {
                        name: "A",
                        reason: format!("not symmetric at ({i}, {j})"),
                    });
                }
            }
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let lambda_max = matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        if !(lambda_max > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "A",
                reason: format!("largest eigenvalue must be positive, got {lambda_max}"),
            });
        }
        Ok(Self { matrix, lambda_max })
    }

    /// The spinodally unstable default `chi (I - e e^T)`: eigenvalue `+chi`
    /// on the zero-sum subspace (destabilizing there), `chi (1 - N)` along e.
    pub fn mean_field(n: usize, chi: f64) -> Result<Self> {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { 0.0 } else { -chi })
                    .collect()
            })
            .collect::<Vec<Vec<f64>>>();
        Self::new(rows)
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// `A v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        debug_assert_eq!(v.len(), n);
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

    /// `v . A v`.
    pub fn quadratic(&self, v: &[f64]) -> f64 {
        self.apply(v).iter().zip(v).map(|(av, vi)| av * vi).sum()
    }
}

/// Multi-well density `Psi(v) = sum psi(v_i) - v.Av/2` (exact entropy).
pub fn multi_well(entropy: &EntropySpec, interaction: &InteractionMatrix, v: &[f64]) -> Result<f64> {
    for (i, &vi) in v.iter().enumerate() {
        if vi <= 0.0 {
            return Err(CoreError::OutOfDomain {
                component: i,
                index: 0,
                value: vi,
            });
        }
    }
    let ent: f64 = v.iter().map(|&s| entropy.psi(s)).sum();
    Ok(ent - 0.5 * interaction.quadratic(v))
}

/// Regularized density `Psi_h(v) = sum psi_h(v_i) - v.Av/2`, defined on all
/// of R^N.
pub fn multi_well_reg(
    entropy: &EntropySpec,
    interaction: &InteractionMatrix,
    v: &[f64],
    h: f64,
) -> f64 {
    let ent: f64 = v.iter().map(|&s| entropy.psi_h(s, h)).sum();
    ent - 0.5 * interaction.quadratic(v)
}

/// Entropy gradient `(psi'(v_i))_i` (exact branch).
pub fn entropy_grad(entropy: &EntropySpec, v: &[f64]) -> Result<Vec<f64>> {
    v.iter()
        .enumerate()
        .map(|(i, &s)| {
            entropy.psi_prime(s).map_err(|_| CoreError::OutOfDomain {
                component: i,
                index: 0,
                value: s,
            })
        })
        .collect()
}

/// Regularized entropy gradient `(psi_h'(v_i))_i`.
pub fn entropy_grad_reg(entropy: &EntropySpec, v: &[f64], h: f64) -> Vec<f64> {
    v.iter().map(|&s| entropy.psi_h_prime(s, h)).collect()
}

/// Interaction part of the gradient, `-(A v)`.
pub fn interaction_grad(interaction: &InteractionMatrix, v: &[f64]) -> Vec<f64> {
    interaction.apply(v).into_iter().map(|x| -x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_entropy() -> EntropySpec {
        EntropySpec::logarithmic(1e-4).unwrap()
    }

    #[test]
    fn base_values_at_one() {
        let e = log_entropy();
        assert_eq!(e.psi(1.0), 0.0);
        assert_eq!(e.psi_prime(1.0).unwrap(), 1.0);
        assert_eq!(e.psi_double_prime(1.0).unwrap(), 1.0);
        let x = (-1.0f64).exp();
        assert!((e.psi(x) + x).abs() < 1e-15);
    }

    #[test]
    fn extension_coefficients_and_c2_matching() {
        let e = log_entropy();
        // A = -1/2, B = 2, D = -3/2 from the matching conditions
        assert_eq!(e.ext, [-0.5, 2.0, -1.5]);
        let eps = 1e-7;
        let below = |f: &dyn Fn(f64) -> f64| f(1.0 - eps);
        let above = |f: &dyn Fn(f64) -> f64| f(1.0 + eps);
        let v = |s: f64| e.psi(s);
        let d1 = |s: f64| e.psi_prime(s).unwrap();
        let d2 = |s: f64| e.psi_double_prime(s).unwrap();
        assert!((below(&v) - above(&v)).abs() < 1e-6);
        assert!((below(&d1) - above(&d1)).abs() < 1e-6);
        assert!((below(&d2) - above(&d2)).abs() < 1e-5);
        // exact continuity at the junction itself
        let [a, b, d] = e.ext;
        assert!((a + b + d - 0.0f64).abs() < 1e-15);
        assert!((3.0 * a + 2.0 * b + d - 1.0).abs() < 1e-15);
        assert!((6.0 * a + 2.0 * b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_blows_down_at_zero() {
        let e = log_entropy();
        let mut last = 0.0;
        for k in 2..=12 {
            let s = 10f64.powi(-k);
            let d = e.psi_prime(s).unwrap();
            assert!(d < last, "psi' must decrease without bound");
            last = d;
        }
        assert!(e.psi(-0.3).is_infinite());
        assert!(e.psi_prime(0.0).is_err());
        assert!(e.psi_prime(-1.0).is_err());
    }

    #[test]
    fn convexity_constant_on_unit_interval() {
        let e = log_entropy();
        for k in 0..200 {
            let s = 0.005 + 0.995 * k as f64 / 199.0;
            assert!(e.psi_double_prime(s).unwrap() >= e.zeta);
        }
    }

    /// Bisection oracle for the resolvent on the log branch, in t = ln r.
    fn resolvent_bisect(s: f64, h: f64) -> f64 {
        let f = |t: f64| t.exp() + h * (t + 1.0) - s;
        let (mut lo, mut hi) = ((s - 1.0) / h - 1.0, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn resolvent_fixed_point_and_limits() {
        let e = log_entropy();
        for &h in &[1e-1, 1e-2, 1e-3] {
            // s = 1 + h psi'(1) = 1 + h forces r = 1
            assert!((e.resolvent(1.0 + h, h) - 1.0).abs() < 1e-13);
        }
        // J_h(0.5) -> 0.5 monotonically as h -> 0, against the bisection oracle
        let mut prev = 0.0;
        for k in 1..=6 {
            let h = 10f64.powi(-k);
            let r = e.resolvent(0.5, h);
            let oracle = resolvent_bisect(0.5, h).exp();
            assert!((r - oracle).abs() < 1e-12, "h={h}: {r} vs {oracle}");
            assert!(r > prev && r < 0.5);
            prev = r;
        }
        assert!((0.5 - prev) < 1e-4);
    }

    #[test]
    fn resolvent_of_very_negative_argument_is_tiny_positive() {
        let e = log_entropy();
        let (s, h) = (-10.0, 0.01);
        let r = e.resolvent(s, h);
        assert!(r > 0.0 && r < 1.0 && r < 1e-6);
        // the log-space value solves the defining equation to high accuracy
        let t = e.resolvent_log(s, h);
        let oracle = resolvent_bisect(s, h);
        assert!((t - oracle).abs() < 1e-9 * oracle.abs());
        assert!((t.exp() + h * (t + 1.0) - s).abs() < 1e-12);
    }

    #[test]
    fn resolvent_is_nonexpansive_and_monotone() {
        let e = log_entropy();
        let mut state = 7u64;
        let mut rand = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 8.0 - 4.0
        };
        for &h in &[0.5, 1e-2, 1e-4] {
            for _ in 0..2000 {
                let (s1, s2) = (rand(), rand());
                let (r1, r2) = (e.resolvent(s1, h), e.resolvent(s2, h));
                assert!((r1 - r2).abs() <= (s1 - s2).abs() * (1.0 + 1e-12));
                if s1 < s2 {
                    assert!(r1 <= r2 * (1.0 + 1e-15));
                }
            }
        }
    }

    #[test]
    fn yosida_family_approximates_from_below() {
        let e = log_entropy();
        for &s in &[0.1, 0.5, 0.9] {
            let exact = e.psi(s);
            let mut prev = f64::NEG_INFINITY;
            for k in 1..=6 {
                let h = 10f64.powi(-k);
                let v = e.psi_h(s, h);
                assert!(v <= exact + 1e-12, "psi_h must stay below psi");
                assert!(v >= prev - 1e-12, "psi_h must increase as h decreases");
                prev = v;
            }
            assert!((prev - exact).abs() < 1e-3);
        }
    }

    #[test]
    fn yosida_derivative_is_lipschitz_with_inverse_h() {
        let e = log_entropy();
        let mut state = 13u64;
        let mut rand = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 10.0 - 5.0
        };
        for &h in &[1e-1, 1e-3] {
            for _ in 0..10_000 {
                let (s1, s2) = (rand(), rand());
                let d = (e.psi_h_prime(s1, h) - e.psi_h_prime(s2, h)).abs();
                // absolute slack covers the resolvent Newton tolerance
                assert!(d <= (s1 - s2).abs() / h * (1.0 + 1e-12) + 1e-11);
            }
        }
    }

    #[test]
    fn yosida_second_derivative_floor() {
        // finite-difference psi_h'' >= zeta/(1+zeta) = 1/2 on [-2, 2]
        let e = log_entropy();
        for &h in &[1.0, 0.5, 1e-1, 1e-2, 1e-4] {
            for k in 0..400 {
                let s = -2.0 + 4.0 * k as f64 / 399.0;
                let d = 1e-6;
                let fd = (e.psi_h_prime(s + d, h) - e.psi_h_prime(s - d, h)) / (2.0 * d);
                assert!(
                    fd >= e.zeta / (1.0 + e.zeta) - 1e-6,
                    "h={h}, s={s}: psi_h'' = {fd}"
                );
            }
        }
    }

    #[test]
    fn yosida_derivative_monotone_and_approaching_base() {
        let e = log_entropy();
        // |psi_h'| increases to |psi'| on (0,1] as h decreases
        for &s in &[0.05, 0.3, 0.7, 1.0] {
            let exact = e.psi_prime(s).unwrap();
            let mut prev_abs = -1.0;
            for k in 1..=6 {
                let h = 10f64.powi(-k);
                let v = e.psi_h_prime(s, h);
                assert!(v.abs() <= exact.abs() + 1e-10);
                assert!(v.abs() >= prev_abs - 1e-12);
                prev_abs = v.abs();
            }
        }
        // uniform convergence on the compact [0.05, 1]
        let mut worst_prev = f64::INFINITY;
        for k in 1..=6 {
            let h = 10f64.powi(-k);
            let mut worst = 0.0f64;
            for j in 0..400 {
                let s = 0.05 + 0.95 * j as f64 / 399.0;
                worst = worst.max((e.psi_h_prime(s, h) - e.psi_prime(s).unwrap()).abs());
            }
            assert!(worst <= worst_prev + 1e-12);
            worst_prev = worst;
        }
        assert!(worst_prev < 1e-3);
    }

    #[test]
    fn interaction_matrix_validation() {
        assert!(InteractionMatrix::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        // all-negative-definite rejected: -I has no positive eigenvalue
        assert!(InteractionMatrix::new(vec![vec![-1.0, 0.0], vec![0.0, -1.0]]).is_err());
        let a = InteractionMatrix::mean_field(3, 3.5).unwrap();
        assert_eq!(a.n(), 3);
        // chi (I - ee^T): eigenvalue chi on the zero-sum subspace
        assert!((a.lambda_max() - 3.5).abs() < 1e-12);
        let tangent = [1.0, -1.0, 0.0];
        let q = a.quadratic(&tangent);
        assert!((q - 3.5 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn multi_well_at_simplex_center() {
        let e = log_entropy();
        let a = InteractionMatrix::new(vec![
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let n = 4;
        let v = vec![1.0 / n as f64; n];
        // with the off-diagonal part zeroed on the evaluation point's support:
        // Psi = N psi(1/N) - v.Av/2 = -ln N - (2 * (1/16)) / 2
        let expect = -(n as f64).ln() - (2.0 / 16.0) / 2.0;
        assert!((multi_well(&e, &a, &v).unwrap() - expect).abs() < 1e-14);
        assert!(multi_well(&e, &a, &[0.2, -0.1, 0.5, 0.4]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let e = log_entropy();
        let a = InteractionMatrix::mean_field(3, 3.5).unwrap();
        let mut state = 21u64;
        let mut rand = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            0.1 + 0.8 * ((state >> 11) as f64 / (1u64 << 53) as f64)
        };
        for _ in 0..100 {
            let v = vec![rand(), rand(), rand()];
            let ge = entropy_grad(&e, &v).unwrap();
            let gi = interaction_grad(&a, &v);
            for i in 0..3 {
                let d = 1e-6;
                let mut vp = v.clone();
                let mut vm = v.clone();
                vp[i] += d;
                vm[i] -= d;
                let fd = (multi_well(&e, &a, &vp).unwrap() - multi_well(&e, &a, &vm).unwrap())
                    / (2.0 * d);
                let grad = ge[i] + gi[i];
                assert!(
                    (fd - grad).abs() <= 1e-7 * (1.0 + grad.abs()),
                    "component {i}: fd {fd} vs {grad}"
                );
            }
        }
    }

    #[test]
    fn regularized_density_is_coercive() {
        let e = log_entropy();
        let a = InteractionMatrix::mean_field(3, 3.5).unwrap();
        let h0 = 2e-3;
        let h = 1e-3;
        let c = 1.0 / (4.0 * h0) - a.lambda_max() / 2.0;
        assert!(c > 0.0);
        // measure K empirically: K/N per component over a wide fine grid
        let mut k_per = 0.0f64;
        for j in 0..40_000 {
            let r = -20.0 + 40.0 * j as f64 / 39_999.0;
            k_per = k_per.max(r * r / (4.0 * h0) - e.psi_h(r, h));
        }
        let k = 3.0 * k_per + 1e-9;
        let mut state = 5u64;
        let mut rand = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 20.0 - 10.0
        };
        for _ in 0..10_000 {
            let v = vec![rand(), rand(), rand()];
            let norm_sq: f64 = v.iter().map(|x| x * x).sum();
            let val = multi_well_reg(&e, &a, &v, h);
            assert!(
                val >= c * norm_sq - k - 1e-9,
                "coercivity failed at {v:?}: {val} < {}",
                c * norm_sq - k
            );
        }
    }
}
