//! Lag-polynomial helpers. A polynomial `[1, a1, a2, ...]` stands for
//! `1 + a1 B + a2 B^2 + ...`.

use nalgebra::DMatrix;

pub(crate) fn multiply(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `1 - c1 B - c2 B^2 ...` for AR coefficients, spaced every `stride` lags.
pub(crate) fn ar_polynomial(coefs: &[f64], stride: usize) -> Vec<f64> {
    let mut poly = vec![0.0; coefs.len() * stride + 1];
    poly[0] = 1.0;
    for (i, c) in coefs.iter().enumerate() {
        poly[(i + 1) * stride] = -c;
    }
    poly
}

/// `1 + c1 B + c2 B^2 ...` for MA coefficients, spaced every `stride` lags.
pub(crate) fn ma_polynomial(coefs: &[f64], stride: usize) -> Vec<f64> {
    let mut poly = vec![0.0; coefs.len() * stride + 1];
    poly[0] = 1.0;
    for (i, c) in coefs.iter().enumerate() {
        poly[(i + 1) * stride] = *c;
    }
    poly
}

/// `(1 - B)^d (1 - B^s)^D`.
pub(crate) fn differencing_polynomial(d: usize, seasonal_d: usize, s: usize) -> Vec<f64> {
    let mut poly = vec![1.0];
    for _ in 0..d {
        poly = multiply(&poly, &[1.0, -1.0]);
    }
    for _ in 0..seasonal_d {
        poly = multiply(&poly, &ar_polynomial(&[1.0], s));
    }
    poly
}

/// MA(∞) weights ψ_0..ψ_{n-1} of `ma(B) / ar(B)`, by long division.
pub fn psi_weights(ar: &[f64], ma: &[f64], n: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = ma.get(j).copied().unwrap_or(0.0);
        for k in 1..=j.min(ar.len().saturating_sub(1)) {
            v -= ar[k] * psi[j - k];
        }
        psi.push(v);
    }
    psi
}

/// Moduli of the roots of `poly`, via eigenvalues of the companion matrix of
/// its reciprocal. Roots at infinity (trailing zeros) are skipped.
pub(crate) fn root_moduli(poly: &[f64]) -> Vec<f64> {
    let degree = match poly.iter().rposition(|c| *c != 0.0) {
        Some(d) if d > 0 => d,
        _ => return Vec::new(),
    };
    // Inverse roots are eigenvalues of the companion matrix of z^d + a1 z^{d-1} + ... + a_d.
    let companion = DMatrix::from_fn(degree, degree, |i, j| {
        if i == 0 {
            -poly[j + 1] / poly[0]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .filter_map(|lambda| {
            let m = lambda.norm();
            (m > 0.0).then(|| 1.0 / m)
        })
        .collect()
}

/// Sum over roots of how far each sits inside the `margin` circle.
pub(crate) fn unit_root_violation(poly: &[f64], margin: f64) -> f64 {
    root_moduli(poly)
        .into_iter()
        .map(|r| {
            if r.is_finite() {
                (margin - r).max(0.0)
            } else {
                margin
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seasonal_product_has_cross_term() {
        let ar = multiply(&ar_polynomial(&[0.5], 1), &ar_polynomial(&[0.3], 4));
        assert_eq!(ar, vec![1.0, -0.5, 0.0, 0.0, -0.3, 0.15]);
    }

    #[test]
    fn psi_for_ma1() {
        let psi = psi_weights(&[1.0], &ma_polynomial(&[0.4], 1), 5);
        assert_eq!(psi, vec![1.0, 0.4, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn psi_for_ar1_and_random_walk() {
        let psi = psi_weights(&ar_polynomial(&[0.5], 1), &[1.0], 4);
        assert_eq!(psi, vec![1.0, 0.5, 0.25, 0.125]);
        let rw = psi_weights(&differencing_polynomial(1, 0, 1), &[1.0], 4);
        assert_eq!(rw, vec![1.0; 4]);
    }

    #[test]
    fn roots() {
        // 1 - 0.5B has its root at 2.
        let r = root_moduli(&ar_polynomial(&[0.5], 1));
        assert!((r[0] - 2.0).abs() < 1e-12);
        assert_eq!(unit_root_violation(&ar_polynomial(&[0.5], 1), 1.001), 0.0);
        assert!(unit_root_violation(&ar_polynomial(&[1.2], 1), 1.001) > 0.0);
        // (1 - 0.9B^4) has four roots of modulus 0.9^(-1/4).
        let r = root_moduli(&ar_polynomial(&[0.9], 4));
        assert_eq!(r.len(), 4);
        for m in r {
            assert!((m - 0.9f64.powf(-0.25)).abs() < 1e-9);
        }
        assert!(root_moduli(&[1.0]).is_empty());
    }
}
