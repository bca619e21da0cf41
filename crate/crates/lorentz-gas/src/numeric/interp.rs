//! Monotone piecewise-cubic interpolation (Fritsch–Carlson limiter).
//!
//! Used for cached tabulations of integrated kernel quantities and for
//! inverse-CDF tables; the limiter guarantees the interpolant preserves
//! monotonicity of the data, which keeps tabulated CDFs invertible.

/// Monotone cubic Hermite interpolant over strictly increasing knots.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// Builds the interpolant. `xs` must be strictly increasing and at least
    /// two points long.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2, "need at least two knots");
        assert!(
            xs.windows(2).all(|p| p[1] > p[0]),
            "knots must be strictly increasing"
        );
        let n = xs.len();
        let mut secants = vec![0.0; n - 1];
        for i in 0..n - 1 {
            secants[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        }
        let mut slopes = vec![0.0; n];
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            slopes[i] = if a * b <= 0.0 {
                0.0
            } else {
                // Weighted harmonic mean keeps the interpolant monotone.
                let w1 = 2.0 * (xs[i + 1] - xs[i]) + (xs[i] - xs[i - 1]);
                let w2 = (xs[i + 1] - xs[i]) + 2.0 * (xs[i] - xs[i - 1]);
                (w1 + w2) / (w1 / a + w2 / b)
            };
        }
        // Second-order one-sided end slopes with the Fritsch-Carlson clamp.
        let end_slope = |h0: f64, h1: f64, s0: f64, s1: f64| {
            let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
            if d * s0 <= 0.0 {
                0.0
            } else if s0 * s1 <= 0.0 && d.abs() > 3.0 * s0.abs() {
                3.0 * s0
            } else {
                d
            }
        };
        slopes[0] = if n == 2 {
            secants[0]
        } else {
            end_slope(xs[1] - xs[0], xs[2] - xs[1], secants[0], secants[1])
        };
        slopes[n - 1] = if n == 2 {
            secants[0]
        } else {
            end_slope(
                xs[n - 1] - xs[n - 2],
                xs[n - 2] - xs[n - 3],
                secants[n - 2],
                secants[n - 3],
            )
        };
        Self { xs, ys, slopes }
    }

    /// Evaluates the interpolant, clamping to the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }
}
