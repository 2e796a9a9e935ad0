use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::EvalError;

/// z quantile for 95% limits of agreement.
pub const LOA_Z: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairedMeasurement {
    pub v_test_mps: f64,
    pub v_ref_mps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl PairedMeasurement {
    pub fn new(v_test_mps: f64, v_ref_mps: f64) -> Self {
        Self {
            v_test_mps,
            v_ref_mps,
            label: None,
        }
    }

    pub fn diff(&self) -> f64 {
        self.v_test_mps - self.v_ref_mps
    }

    /// The same pair with the two methods exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            v_test_mps: self.v_ref_mps,
            v_ref_mps: self.v_test_mps,
            label: self.label.clone(),
        }
    }

    fn check(&self) -> Result<(), EvalError> {
        for v in [self.v_test_mps, self.v_ref_mps] {
            if !(v.is_finite() && v > 0.0) {
                return Err(EvalError::InvalidSpeed(v));
            }
        }
        Ok(())
    }
}

/// `|measured - ref| / ref * 100`.
pub fn error_pct(v_measured: f64, v_ref: f64) -> Result<f64, EvalError> {
    if !(v_ref.is_finite() && v_ref > 0.0) {
        return Err(EvalError::InvalidReference(v_ref));
    }
    Ok(((v_measured - v_ref) / v_ref).abs() * 100.0)
}

pub fn mae(pairs: &[PairedMeasurement]) -> Result<f64, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut sum = 0.0;
    for p in pairs {
        p.check()?;
        sum += p.diff().abs();
    }
    Ok(sum / pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AgreementReport {
    pub n: usize,
    pub mae_mps: f64,
    pub mean_error_pct: f64,
    pub bias_mps: f64,
    pub sd_mps: f64,
    pub loa_low_mps: f64,
    pub loa_high_mps: f64,
}

/// One point of the difference-against-mean plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AgreementPoint {
    pub mean_mps: f64,
    pub diff_mps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlandAltman {
    pub report: AgreementReport,
    pub points: Vec<AgreementPoint>,
}

pub fn bland_altman(pairs: &[PairedMeasurement]) -> Result<BlandAltman, EvalError> {
    let n = pairs.len();
    if n < 2 {
        return Err(EvalError::InsufficientData { need: 2, got: n });
    }
    let mut err_pct = 0.0;
    for p in pairs {
        p.check()?;
        err_pct += error_pct(p.v_test_mps, p.v_ref_mps)?;
    }
    let diffs: Vec<f64> = pairs.iter().map(PairedMeasurement::diff).collect();
    let bias = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - bias).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let report = AgreementReport {
        n,
        mae_mps: mae(pairs)?,
        mean_error_pct: err_pct / n as f64,
        bias_mps: bias,
        sd_mps: sd,
        loa_low_mps: bias - LOA_Z * sd,
        loa_high_mps: bias + LOA_Z * sd,
    };
    let points = pairs
        .iter()
        .map(|p| AgreementPoint {
            mean_mps: (p.v_test_mps + p.v_ref_mps) / 2.0,
            diff_mps: p.diff(),
            label: p.label.clone(),
        })
        .collect();
    Ok(BlandAltman { report, points })
}

/// Ordinary least squares fit with the pieces needed for a confidence band
/// of the mean response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LinearFit {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Residual standard error, `sqrt(SSE / (n - 2))`.
    pub residual_se: f64,
    pub slope_se: f64,
    /// Two-sided 95% Student t quantile with `n - 2` degrees of freedom.
    pub t_crit: f64,
    pub x_mean: f64,
    pub sxx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BandPoint {
    pub x: f64,
    pub fit: f64,
    pub lower: f64,
    pub upper: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    /// Half-width of the 95% interval for the mean response at `x`.
    pub fn ci_half_width(&self, x: f64) -> f64 {
        let lever = 1.0 / self.n as f64 + (x - self.x_mean).powi(2) / self.sxx;
        self.t_crit * self.residual_se * lever.sqrt()
    }

    pub fn slope_ci(&self) -> (f64, f64) {
        let h = self.t_crit * self.slope_se;
        (self.slope - h, self.slope + h)
    }

    /// Band evaluated at `steps + 1` evenly spaced x values over `[lo, hi]`.
    pub fn band(&self, lo: f64, hi: f64, steps: usize) -> Vec<BandPoint> {
        let steps = steps.max(1);
        (0..=steps)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / steps as f64;
                let fit = self.predict(x);
                let h = self.ci_half_width(x);
                BandPoint {
                    x,
                    fit,
                    lower: fit - h,
                    upper: fit + h,
                }
            })
            .collect()
    }
}

pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit, EvalError> {
    let n = points.len();
    if n < 3 {
        return Err(EvalError::InsufficientData { need: 3, got: n });
    }
    if points.iter().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(EvalError::NonFinite);
    }
    let nf = n as f64;
    let x_mean = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - x_mean).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - x_mean) * (p.1 - y_mean)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - y_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(EvalError::SingularFit);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse: f64 = points
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let dof = nf - 2.0;
    let residual_se = (sse / dof).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|_| EvalError::SingularFit)?;
    Ok(LinearFit {
        n,
        slope,
        intercept,
        r_squared: if syy > 0.0 { 1.0 - sse / syy } else { 1.0 },
        residual_se,
        slope_se: residual_se / sxx.sqrt(),
        t_crit: t.inverse_cdf(0.975),
        x_mean,
        sxx,
    })
}
