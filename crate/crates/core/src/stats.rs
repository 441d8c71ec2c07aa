//! Small statistical building blocks shared by the models.

use nalgebra::{DMatrix, DVector};

use crate::error::{ForecastError, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population (divide-by-n) standard deviation.
pub fn population_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Linear-interpolation quantile over a sorted slice (the `(n-1)p` rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(xs: &[f64]) -> f64 {
    quantile_sorted(&sorted_copy(xs), 0.5)
}

/// Median absolute deviation scaled by 1.4826, a consistent estimate of the
/// standard deviation under normality.
pub fn mad_scale(xs: &[f64]) -> f64 {
    let m = median(xs);
    let deviations: Vec<f64> = xs.iter().map(|x| (x - m).abs()).collect();
    1.4826 * median(&deviations)
}

/// Inverse of the standard normal CDF (Wichura, algorithm AS 241).
///
/// Accurate to about 1e-16 over the open unit interval.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((r * 2_509.080_928_730_122_7 + 33_430.575_583_588_13) * r
                + 67_265.770_927_008_7)
                * r
                + 45_921.953_931_549_87)
                * r
                + 13_731.693_765_509_46)
                * r
                + 1_971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((r * 5_226.495_278_852_545 + 28_729.085_735_721_943) * r
                + 39_307.895_800_092_71)
                * r
                + 21_213.794_301_586_597)
                * r
                + 5_394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((r * 7.745_450_142_783_414e-4 + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((r * 1.050_750_071_644_416_9e-9 + 5.475_938_084_995_345e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_08)
                * r
                + 0.689_767_334_985_1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((r * 2.010_334_399_292_288_1e-7 + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((r * 2.044_263_103_389_939_7e-15 + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_8)
                * r
                + 0.599_832_206_555_888)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Two-sided interval multiplier for a confidence level in (0, 1).
pub fn z_for_confidence(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(ForecastError::arg(format!(
            "confidence {confidence} must lie in (0, 1)"
        )));
    }
    Ok(normal_quantile((1.0 + confidence) / 2.0))
}

/// Ordinary least squares solution with the pieces needed for inference.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Diagonal of (XᵀX)⁻¹.
    pub inverse_gram_diagonal: Vec<f64>,
    pub rss: f64,
}

impl OlsFit {
    /// Residual variance with `n - k` degrees of freedom.
    pub fn sigma2(&self) -> f64 {
        let dof = self.residuals.len() - self.coefficients.len();
        self.rss / dof as f64
    }

    pub fn standard_error(&self, j: usize) -> f64 {
        (self.sigma2() * self.inverse_gram_diagonal[j]).sqrt()
    }
}

/// Least squares on row-major design rows.
pub fn ols(rows: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if n == 0 || k == 0 || n != y.len() {
        return Err(ForecastError::arg("empty or mismatched regression inputs"));
    }
    if n <= k {
        return Err(ForecastError::Numerical(format!(
            "{n} observations cannot identify {k} coefficients"
        )));
    }
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let yv = DVector::from_column_slice(y);
    let gram = x.transpose() * &x;
    let diag_max = (0..k).map(|j| gram[(j, j)]).fold(0.0_f64, f64::max);
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| ForecastError::Numerical("singular regression matrix".into()))?;
    let l = chol.l();
    let pivot_min = (0..k)
        .map(|j| l[(j, j)] * l[(j, j)])
        .fold(f64::INFINITY, f64::min);
    if !(pivot_min > 1e-12 * diag_max.max(f64::MIN_POSITIVE)) {
        return Err(ForecastError::Numerical(
            "singular regression matrix".into(),
        ));
    }
    let beta = chol.solve(&(x.transpose() * &yv));
    let inverse = chol.inverse();
    let fitted = &x * &beta;
    let residuals: Vec<f64> = (0..n).map(|i| y[i] - fitted[i]).collect();
    let rss = residuals.iter().map(|r| r * r).sum();
    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        residuals,
        inverse_gram_diagonal: (0..k).map(|j| inverse[(j, j)]).collect(),
        rss,
    })
}
