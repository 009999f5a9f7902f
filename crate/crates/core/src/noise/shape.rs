use crate::error::{Error, Result};

/// Scalar profile `h` of the noise coefficients `g_k(s) = c_k h(s) e_k`.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseShape {
    /// `h(s) = (1 - s^2)^2`; `h'(+-1) = 0`.
    Quartic,
    /// Natural cubic spline through tabulated values on a uniform grid of `[-1, 1]`.
    Table(CubicSpline),
}

impl NoiseShape {
    pub fn table(values: Vec<f64>) -> Result<Self> {
        Ok(NoiseShape::Table(CubicSpline::uniform(values)?))
    }

    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        match self {
            NoiseShape::Quartic => {
                let w = 1.0 - s * s;
                w * w
            }
            NoiseShape::Table(t) => t.eval(s).0,
        }
    }

    #[inline]
    pub fn d1(&self, s: f64) -> f64 {
        match self {
            NoiseShape::Quartic => -4.0 * s * (1.0 - s * s),
            NoiseShape::Table(t) => t.eval(s).1,
        }
    }

    #[inline]
    pub fn d2(&self, s: f64) -> f64 {
        match self {
            NoiseShape::Quartic => 12.0 * s * s - 4.0,
            NoiseShape::Table(t) => t.eval(s).2,
        }
    }

    /// `(||h||, ||h'||, ||h''||)` in `L^inf(-1, 1)`.
    pub fn sup_norms(&self) -> [f64; 3] {
        match self {
            // h' peaks at s = 1/sqrt(3); h'' at s = +-1
            NoiseShape::Quartic => [1.0, 8.0 / (3.0 * 3.0f64.sqrt()), 8.0],
            NoiseShape::Table(t) => t.sup_norms(),
        }
    }

    /// `||h||_{W^{2,inf}(-1,1)} = max(||h||, ||h'||, ||h''||)`.
    pub fn w2inf_norm(&self) -> f64 {
        self.sup_norms().into_iter().fold(0.0, f64::max)
    }
}

/// Natural cubic spline on uniform nodes `x_i = -1 + 2 i / (n - 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline {
    values: Vec<f64>,
    second: Vec<f64>,
    h: f64,
}

impl CubicSpline {
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::param("a noise table needs at least two values"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("noise table contains non-finite values"));
        }
        let h = 2.0 / (n - 1) as f64;
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for M_{i-1} + 4 M_i + M_{i+1} = 6 (y_{i-1} - 2 y_i + y_{i+1}) / h^2
            let m = n - 2;
            let mut diag = vec![4.0; m];
            let mut rhs: Vec<f64> = (1..n - 1)
                .map(|i| 6.0 * (values[i - 1] - 2.0 * values[i] + values[i + 1]) / (h * h))
                .collect();
            for i in 1..m {
                let w = 1.0 / diag[i - 1];
                diag[i] -= w;
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = (rhs[i] - second[i + 2]) / diag[i];
            }
        }
        Ok(CubicSpline { values, second, h })
    }

    fn segment(&self, s: f64) -> (usize, f64) {
        let n = self.values.len();
        let pos = ((s + 1.0) / self.h).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        (i, s + 1.0 - i as f64 * self.h)
    }

    fn coefficients(&self, i: usize) -> (f64, f64, f64, f64) {
        let (h, y0, y1, m0, m1) = (self.h, self.values[i], self.values[i + 1], self.second[i], self.second[i + 1]);
        // S(t) = y0 + b t + m0/2 t^2 + (m1 - m0)/(6h) t^3
        let b = (y1 - y0) / h - h * (2.0 * m0 + m1) / 6.0;
        (y0, b, 0.5 * m0, (m1 - m0) / (6.0 * h))
    }

    /// Value, first and second derivative at `s` (clamped to `[-1, 1]`).
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        let (i, t) = self.segment(s);
        let (a, b, c, d) = self.coefficients(i);
        (
            a + t * (b + t * (c + t * d)),
            b + t * (2.0 * c + 3.0 * t * d),
            2.0 * c + 6.0 * t * d,
        )
    }

    /// Exact sup norms of the spline and its first two derivatives.
    pub fn sup_norms(&self) -> [f64; 3] {
        let mut out = [0.0f64; 3];
        for i in 0..self.values.len() - 1 {
            let (a, b, c, d) = self.coefficients(i);
            let mut candidates = vec![0.0, self.h];
            // S'(t) = b + 2c t + 3d t^2
            candidates.extend(quadratic_roots(3.0 * d, 2.0 * c, b));
            // S''(t) = 2c + 6d t
            if d != 0.0 {
                candidates.push(-c / (3.0 * d));
            }
            for t in candidates.into_iter().filter(|t| (0.0..=self.h).contains(t)) {
                let v = a + t * (b + t * (c + t * d));
                let d1 = b + t * (2.0 * c + 3.0 * t * d);
                let d2 = 2.0 * c + 6.0 * t * d;
                out[0] = out[0].max(v.abs());
                out[1] = out[1].max(d1.abs());
                out[2] = out[2].max(d2.abs());
            }
        }
        out
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    vec![(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
}
