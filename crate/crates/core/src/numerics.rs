//! Small numerical helpers shared by the solvers.

use std::f64::consts::{PI, TAU};

/// Maps an angle to (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

/// Shifts `theta` by a multiple of 2π so that it lies within π of `reference`.
pub fn unwrap_near(theta: f64, reference: f64) -> f64 {
    reference + wrap_angle(theta - reference)
}

/// Ordinary least-squares fit `y = slope * x + intercept`.
///
/// Returns `None` for fewer than two points or a degenerate abscissa.
pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs[..n].iter().zip(&ys[..n]) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// One classical fourth-order Runge–Kutta step of an autonomous system.
pub fn rk4_step<const N: usize, F>(y: &[f64; N], dt: f64, mut rhs: F) -> [f64; N]
where
    F: FnMut(&[f64; N]) -> [f64; N],
{
    let axpy = |a: &[f64; N], s: f64, b: &[f64; N]| {
        let mut out = *a;
        for (o, bi) in out.iter_mut().zip(b) {
            *o += s * bi;
        }
        out
    };
    let k1 = rhs(y);
    let k2 = rhs(&axpy(y, 0.5 * dt, &k1));
    let k3 = rhs(&axpy(y, 0.5 * dt, &k2));
    let k4 = rhs(&axpy(y, dt, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn unwrap_follows_reference() {
        let t = unwrap_near(-PI + 0.1, PI - 0.1);
        assert!((t - (PI + 0.1)).abs() < 1e-14);
    }

    #[test]
    fn least_squares_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (s, c) = least_squares_line(&xs, &ys).unwrap();
        assert!((s - 2.5).abs() < 1e-14);
        assert!((c + 1.0).abs() < 1e-14);
        assert!(least_squares_line(&[1.0], &[2.0]).is_none());
        assert!(least_squares_line(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }

    #[test]
    fn rk4_exponential() {
        let mut y = [1.0];
        for _ in 0..100 {
            y = rk4_step(&y, 0.01, |v| [v[0]]);
        }
        assert!((y[0] - 1f64.exp()).abs() < 1e-9);
    }
}
