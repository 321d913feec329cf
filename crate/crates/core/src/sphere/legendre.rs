//! Gauss-Legendre nodes and orthonormal associated Legendre tables.

use std::f64::consts::PI;

/// Gauss-Legendre nodes `x_i` (descending, so colatitude ascends) and
/// weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_p(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_p(n, x);
        dp = if d != 0.0 { d } else { dp };
        xs.push(x);
        ws.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (xs, ws)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_p(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Position of `(l, m)`, `0 <= m <= l`, in a triangular table.
#[inline]
pub fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Latitude functions `y_lm(theta)` of orthonormal `Y_lm = y_lm e^{i m phi}`
/// (Condon-Shortley phase) and the derivatives needed by the vector basis.
#[derive(Clone, Debug)]
pub struct LatitudeRow {
    pub y: Vec<f64>,
    /// `d y / d theta`
    pub dy: Vec<f64>,
    pub d2y: Vec<f64>,
    /// `y / sin theta`
    pub ys: Vec<f64>,
    /// `d (y / sin theta) / d theta`
    pub dys: Vec<f64>,
}

impl LatitudeRow {
    pub fn new(l_max: usize, theta: f64) -> Self {
        let (x, s) = (theta.cos(), theta.sin());
        let cot = x / s;
        let size = tri(l_max + 1, 0);
        let mut y = vec![0.0; tri(l_max + 2, 0)];
        let mut pmm = 1.0 / (4.0 * PI).sqrt();
        for m in 0..=l_max + 1 {
            if m > 0 {
                pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
            }
            y[tri(m, m)] = pmm;
            if m + 1 <= l_max + 1 {
                y[tri(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * x * pmm;
            }
            for l in m + 2..=l_max + 1 {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
                y[tri(l, m)] = a * (x * y[tri(l - 1, m)] - b * y[tri(l - 2, m)]);
            }
        }
        let mut row = Self {
            y: vec![0.0; size],
            dy: vec![0.0; size],
            d2y: vec![0.0; size],
            ys: vec![0.0; size],
            dys: vec![0.0; size],
        };
        for l in 0..=l_max {
            let lam = (l * (l + 1)) as f64;
            for m in 0..=l {
                let t = tri(l, m);
                let mf = m as f64;
                let up = if m < l { y[tri(l, m + 1)] } else { 0.0 };
                let v = y[t];
                let dv = mf * cot * v + (((l - m) * (l + m + 1)) as f64).sqrt() * up;
                row.y[t] = v;
                row.dy[t] = dv;
                row.d2y[t] = -cot * dv + (mf * mf / (s * s) - lam) * v;
                row.ys[t] = v / s;
                row.dys[t] = (dv - cot * v) / s;
            }
        }
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for deg in 0..20 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {deg}");
        }
        assert!(x.windows(2).all(|p| p[0] > p[1]));
    }

    #[test]
    fn low_degree_closed_forms() {
        let th = 0.7;
        let r = LatitudeRow::new(3, th);
        let c = 1.0 / (4.0 * PI).sqrt();
        assert!((r.y[tri(0, 0)] - c).abs() < 1e-15);
        assert!((r.y[tri(1, 0)] - (3.0f64).sqrt() * c * th.cos()).abs() < 1e-15);
        // Y_11 = -sqrt(3/(8 pi)) sin(theta) e^{i phi}
        assert!((r.y[tri(1, 1)] + (3.0 / (8.0 * PI)).sqrt() * th.sin()).abs() < 1e-15);
        // Y_20 = sqrt(5/(16 pi)) (3 cos^2 - 1)
        let y20 = (5.0 / (16.0 * PI)).sqrt() * (3.0 * th.cos().powi(2) - 1.0);
        assert!((r.y[tri(2, 0)] - y20).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for &th in &[0.3, 1.1, 2.0, 2.9] {
            let r = LatitudeRow::new(12, th);
            let p = LatitudeRow::new(12, th + h);
            let q = LatitudeRow::new(12, th - h);
            for l in 0..=12 {
                for m in 0..=l {
                    let t = tri(l, m);
                    let fd = (p.y[t] - q.y[t]) / (2.0 * h);
                    assert!((fd - r.dy[t]).abs() < 1e-7 * (1.0 + fd.abs()), "dy l={l} m={m}");
                    let fd2 = (p.dy[t] - q.dy[t]) / (2.0 * h);
                    assert!((fd2 - r.d2y[t]).abs() < 1e-6 * (1.0 + fd2.abs()), "d2y l={l} m={m}");
                    let fds = (p.ys[t] - q.ys[t]) / (2.0 * h);
                    assert!((fds - r.dys[t]).abs() < 1e-6 * (1.0 + fds.abs()), "dys l={l} m={m}");
                }
            }
        }
    }

    #[test]
    fn orthonormal_in_latitude() {
        let l_max = 8;
        let (x, w) = gauss_legendre(l_max + 2);
        let rows: Vec<_> = x.iter().map(|x| LatitudeRow::new(l_max, x.acos())).collect();
        for m in 0..=l_max {
            for l1 in m..=l_max {
                for l2 in m..=l_max {
                    let q: f64 = rows
                        .iter()
                        .zip(&w)
                        .map(|(r, w)| w * r.y[tri(l1, m)] * r.y[tri(l2, m)])
                        .sum::<f64>()
                        * 2.0
                        * PI;
                    let exact = if l1 == l2 { 1.0 } else { 0.0 };
                    assert!((q - exact).abs() < 1e-13);
                }
            }
        }
    }
}
