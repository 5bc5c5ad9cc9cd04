//! Small statistics helpers: running means with standard errors and
//! least-squares line fits.

use num_complex::Complex64;
use serde::Serialize;

/// Mean and standard error of a real sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

pub fn mean_se(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate::default();
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Estimate { mean, se: 0.0, n };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Estimate {
        mean,
        se: (var / n as f64).sqrt(),
        n,
    }
}

/// Mean of a complex sample with the standard error of its modulus,
/// `√((Var Re + Var Im)/n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComplexEstimate {
    pub re: f64,
    pub im: f64,
    pub se_re: f64,
    pub se_im: f64,
    pub se: f64,
    pub n: usize,
}

impl ComplexEstimate {
    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

pub fn complex_mean_se(zs: &[Complex64]) -> ComplexEstimate {
    let re: Vec<f64> = zs.iter().map(|z| z.re).collect();
    let im: Vec<f64> = zs.iter().map(|z| z.im).collect();
    let (a, b) = (mean_se(&re), mean_se(&im));
    ComplexEstimate {
        re: a.mean,
        im: b.mean,
        se_re: a.se,
        se_im: b.se,
        se: (a.se * a.se + b.se * b.se).sqrt(),
        n: zs.len(),
    }
}

/// `y ≈ intercept + slope · x` by ordinary least squares.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        slope_se,
    })
}

/// Slope of `ln y` against `ln x`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}
