use statrs::distribution::{ContinuousCDF, StudentsT};

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, std_error: f64::NAN, samples: 0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Estimate { mean, std_error, samples: n }
    }

    /// `(E x^p)^{1/p}` from samples of `x >= 0`, with a delta-method standard error.
    pub fn moment_root(xs: &[f64], p: u32) -> Self {
        let powers: Vec<f64> = xs.iter().map(|x| x.powi(p as i32)).collect();
        let m = Estimate::from_samples(&powers);
        let root = m.mean.powf(1.0 / p as f64);
        let std_error = if root > 0.0 {
            m.std_error * root / (p as f64 * m.mean)
        } else {
            0.0
        };
        Estimate { mean: root, std_error, samples: m.samples }
    }
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl LinearFit {
    pub fn fit(x: &[f64], y: &[f64]) -> Option<Self> {
        let n = x.len();
        if n < 2 || n != y.len() {
            return None;
        }
        let nf = n as f64;
        let mx = x.iter().sum::<f64>() / nf;
        let my = y.iter().sum::<f64>() / nf;
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
        let slope_std_error = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { f64::NAN };
        Some(LinearFit { slope, intercept, slope_std_error, r_squared, points: n })
    }

    /// Two-sided confidence interval for the slope from the Student t law.
    pub fn slope_interval(&self, level: f64) -> Option<(f64, f64)> {
        if self.points <= 2 || !self.slope_std_error.is_finite() {
            return None;
        }
        let t = StudentsT::new(0.0, 1.0, (self.points - 2) as f64).ok()?;
        let q = t.inverse_cdf(0.5 + level / 2.0);
        Some((self.slope - q * self.slope_std_error, self.slope + q * self.slope_std_error))
    }
}
