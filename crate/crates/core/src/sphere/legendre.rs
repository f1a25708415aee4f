//! Normalized associated Legendre functions.
//!
//! `Q_lm(theta)` below is the orthonormal spherical-harmonic latitude factor:
//! the real harmonics `Y_l0 = Q_l0`, `Y_lm = sqrt(2) Q_lm cos(m phi)` and
//! `Y_l,-m = sqrt(2) Q_lm sin(m phi)` satisfy `int_{S^2} Y^2 = 1`.
//! The Condon-Shortley phase is omitted. Values are generated by the
//! three-term recurrence with the normalization folded into the
//! coefficients, which keeps every intermediate O(1) up to high degree.

/// Evaluate `Q_lm(theta)` for all `0 <= m <= l <= lmax` at one colatitude.
///
/// Output is written into `out` in triangular layout `idx = l(l+1)/2 + m`.
pub fn normalized_plm(lmax: usize, cos_t: f64, sin_t: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), tri_len(lmax));
    let inv_4pi = 1.0 / (4.0 * std::f64::consts::PI);
    out[0] = inv_4pi.sqrt();

    // Diagonal Q_mm and first off-diagonal Q_{m+1,m}.
    for m in 1..=lmax {
        let f = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
        out[tri(m, m)] = f * sin_t * out[tri(m - 1, m - 1)];
    }
    for m in 0..lmax {
        out[tri(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * cos_t * out[tri(m, m)];
    }
    // Upward recurrence in degree.
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            let a = alpha(l, m);
            let b = beta(l, m);
            out[tri(l, m)] = a * (cos_t * out[tri(l - 1, m)] - b * out[tri(l - 2, m)]);
        }
    }
}

/// Colatitude derivative `dQ_lm/dtheta` from precomputed values.
///
/// Uses `sin(theta) dQ_lm/dtheta = l cos(theta) Q_lm - c_lm Q_{l-1,m}` with
/// `c_lm = sqrt((2l+1)/(2l-1) (l^2-m^2))`. Nodes never sit at the poles.
pub fn normalized_dplm(lmax: usize, cos_t: f64, sin_t: f64, plm: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), tri_len(lmax));
    for m in 0..=lmax {
        for l in m..=lmax {
            let below = if l > m { plm[tri(l - 1, m)] } else { 0.0 };
            out[tri(l, m)] = (l as f64 * cos_t * plm[tri(l, m)] - c_coef(l, m) * below) / sin_t;
        }
    }
}

/// Second colatitude derivative `d^2 Q_lm/dtheta^2`.
///
/// Differentiating `sin(theta) Q'_lm = l cos(theta) Q_lm - c_lm Q_{l-1,m}`
/// gives `Q''_lm = (l cos Q' - l sin Q - c_lm Q'_{l-1,m} - cos Q'_lm)/sin`.
pub fn normalized_d2plm(
    lmax: usize,
    cos_t: f64,
    sin_t: f64,
    plm: &[f64],
    dplm: &[f64],
    out: &mut [f64],
) {
    debug_assert_eq!(out.len(), tri_len(lmax));
    for m in 0..=lmax {
        for l in m..=lmax {
            let dbelow = if l > m { dplm[tri(l - 1, m)] } else { 0.0 };
            let lf = l as f64;
            out[tri(l, m)] = (lf * cos_t * dplm[tri(l, m)] - lf * sin_t * plm[tri(l, m)]
                - c_coef(l, m) * dbelow
                - cos_t * dplm[tri(l, m)])
                / sin_t;
        }
    }
}

#[inline]
pub fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

#[inline]
pub fn tri_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

fn alpha(l: usize, m: usize) -> f64 {
    let l2 = (l * l) as f64;
    let m2 = (m * m) as f64;
    ((4.0 * l2 - 1.0) / (l2 - m2)).sqrt()
}

fn beta(l: usize, m: usize) -> f64 {
    let lm1 = (l - 1) * (l - 1);
    ((lm1 as f64 - (m * m) as f64) / (4.0 * lm1 as f64 - 1.0)).sqrt()
}

fn c_coef(l: usize, m: usize) -> f64 {
    if l == 0 {
        return 0.0;
    }
    let l2 = (l * l) as f64;
    let m2 = (m * m) as f64;
    ((2 * l + 1) as f64 / (2 * l - 1) as f64 * (l2 - m2)).sqrt()
}

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on `P_n` with the usual Chebyshev-like initial guess;
/// weights `2 / ((1 - x^2) P'_n(x)^2)`. Accurate to ~1e-15 for n <= 200.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pn(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p2, d2) = legendre_pn(n, x);
                x -= p2 / d2;
                dp = d2;
                break;
            }
        }
        // cos() of decreasing argument: nodes come out in ascending x order reversed
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and derivative by the standard recurrence.
fn legendre_pn(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
