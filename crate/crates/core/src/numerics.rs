//! Grid calculus shared by the diagnostics and kernel extraction: second-order
//! finite differences and trapezoidal quadrature on uniform grids.

use std::ops::{Add, Mul, Sub};

/// Second-order derivative of uniformly sampled values: centred in the
/// interior, three-point one-sided at the ends. Needs at least 3 samples.
pub fn derivative<T>(values: &[T], h: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = values.len();
    assert!(n >= 3, "derivative needs at least 3 samples");
    let mut out = Vec::with_capacity(n);
    let inv2h = 0.5 / h;
    out.push((values[1] * 4.0 - values[0] * 3.0 - values[2]) * inv2h);
    for i in 1..n - 1 {
        out.push((values[i + 1] - values[i - 1]) * inv2h);
    }
    out.push((values[n - 3] + values[n - 1] * 3.0 - values[n - 2] * 4.0) * inv2h);
    out
}

/// Fourth-order derivative: Richardson combination of centred differences
/// at `h` and `2h` in the interior, five-point one-sided stencils at the two
/// points nearest each end. Needs at least 5 samples.
pub fn derivative4<T>(values: &[T], h: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = values.len();
    assert!(n >= 5, "fourth-order derivative needs at least 5 samples");
    let f = values;
    let w = 1.0 / (12.0 * h);
    let mut out = Vec::with_capacity(n);
    out.push((f[1] * 48.0 + f[3] * 16.0 - f[0] * 25.0 - f[2] * 36.0 - f[4] * 3.0) * w);
    out.push((f[2] * 18.0 + f[4] - f[0] * 3.0 - f[1] * 10.0 - f[3] * 6.0) * w);
    for i in 2..n - 2 {
        out.push(((f[i + 1] - f[i - 1]) * 8.0 - (f[i + 2] - f[i - 2])) * w);
    }
    out.push((f[n - 1] * 3.0 + f[n - 2] * 10.0 + f[n - 4] * 6.0 - f[n - 3] * 18.0 - f[n - 5]) * w);
    out.push((f[n - 1] * 25.0 + f[n - 3] * 36.0 + f[n - 5] * 3.0 - f[n - 2] * 48.0 - f[n - 4] * 16.0) * w);
    out
}

/// Finite-difference scheme for time derivatives of sampled trajectories.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Differencing {
    #[default]
    Central2,
    Richardson4,
}

impl Differencing {
    pub fn apply<T>(self, values: &[T], h: f64) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        match self {
            Differencing::Central2 => derivative(values, h),
            Differencing::Richardson4 => derivative4(values, h),
        }
    }

    pub fn min_samples(self) -> usize {
        match self {
            Differencing::Central2 => 3,
            Differencing::Richardson4 => 5,
        }
    }

    /// Running integral with matching order: trapezoid for `Central2`,
    /// trapezoid plus the Euler–Maclaurin end correction for `Richardson4`.
    pub fn integrate(self, values: &[f64], h: f64) -> Vec<f64> {
        let mut out = cumulative_trapezoid(values, h);
        if self == Differencing::Richardson4 && values.len() >= 5 {
            let d = derivative4(values, h);
            for (o, di) in out.iter_mut().zip(&d) {
                *o -= h * h / 12.0 * (di - d[0]);
            }
        }
        out
    }
}

impl std::str::FromStr for Differencing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "central2" => Ok(Differencing::Central2),
            "richardson4" => Ok(Differencing::Richardson4),
            other => Err(format!("unknown differencing `{other}` (expected central2 or richardson4)")),
        }
    }
}

impl std::fmt::Display for Differencing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Differencing::Central2 => "central2",
            Differencing::Richardson4 => "richardson4",
        })
    }
}

/// Running trapezoidal integral, `out[0] = 0`.
pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    cumulative_trapezoid(values, h).last().copied().unwrap_or(0.0)
}

/// Sum of positive forward differences.
pub fn positive_variation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum()
}

/// Index of `t` on the uniform grid `t0 + i·h`, if it lies on a node.
pub fn grid_index(t: f64, t0: f64, h: f64, len: usize) -> Option<usize> {
    let x = (t - t0) / h;
    let i = x.round();
    if i < 0.0 || (x - i).abs() > 1e-9 * x.abs().max(1.0) {
        return None;
    }
    let i = i as usize;
    (i < len).then_some(i)
}
