//! Quadrature grid and vector spherical harmonic transforms on the unit sphere.
//!
//! Tangent fields are written in the orthonormal frame `(theta_hat, phi_hat)`.
//! The curl-type basis is `Phi_lm = r_hat x grad Y_lm` and the gradient-type
//! basis is `Psi_lm = grad Y_lm`; both have squared L^2 norm `l(l+1)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::legendre::{gauss_legendre, tri, LatitudeRow};
use crate::error::{Error, Result};
use crate::fft::fft_rows;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Index of `(l, m)` in a vector coefficient array, `l >= 1`.
#[inline]
pub fn vidx(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m - 1) as usize
}

/// Index of `(l, m)` in a scalar coefficient array, `l >= 0`.
#[inline]
pub fn sidx(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Gauss-Legendre in colatitude times uniform longitude.
#[derive(Clone, Debug)]
pub struct SphereBasis {
    l_max: usize,
    nlat: usize,
    nlon: usize,
    theta: Vec<f64>,
    weights: Vec<f64>,
    rows: Vec<LatitudeRow>,
}

/// Per-ring values of a basis function, without the `e^{i m phi}` factor.
struct BasisAt {
    phi: [Complex64; 2],
    psi: [Complex64; 2],
}

struct BasisGradAt {
    phi: [Complex64; 4],
    psi: [Complex64; 4],
}

impl SphereBasis {
    /// Basis with `2 L + 2` latitudes and `3 L + 2` longitudes, so products of
    /// three band-limited fields integrate exactly.
    pub fn new(l_max: usize) -> Result<Self> {
        Self::with_grid(l_max, 2 * l_max + 2, 3 * l_max + 2)
    }

    /// Basis on a custom grid; needs `nlat > l_max` and `nlon > 2 l_max`.
    pub fn with_grid(l_max: usize, nlat: usize, nlon: usize) -> Result<Self> {
        if l_max < 1 {
            return Err(Error::InvalidGrid("L_max must be at least 1".into()));
        }
        if nlat <= l_max || nlon <= 2 * l_max {
            return Err(Error::InvalidGrid(format!(
                "grid {nlat}x{nlon} too small for L_max = {l_max}"
            )));
        }
        let (x, weights) = gauss_legendre(nlat);
        let theta: Vec<f64> = x.iter().map(|x| x.acos()).collect();
        let rows = theta.iter().map(|&t| LatitudeRow::new(l_max, t)).collect();
        Ok(Self { l_max, nlat, nlon, theta, weights, rows })
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn nlat(&self) -> usize {
        self.nlat
    }

    pub fn nlon(&self) -> usize {
        self.nlon
    }

    pub fn grid_len(&self) -> usize {
        self.nlat * self.nlon
    }

    /// Number of vector coefficients per block, `(L+1)^2 - 1`.
    pub fn n_coeffs(&self) -> usize {
        (self.l_max + 1) * (self.l_max + 1) - 1
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.nlon as f64
    }

    /// `int f dA` over the sphere from grid values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let dphi = 2.0 * PI / self.nlon as f64;
        values
            .chunks(self.nlon)
            .zip(&self.weights)
            .map(|(ring, w)| w * dphi * ring.iter().sum::<f64>())
            .sum()
    }

    fn check_grid(&self, arrays: &[Vec<f64>], count: usize) -> Result<()> {
        if arrays.len() != count || arrays.iter().any(|a| a.len() != self.grid_len()) {
            return Err(Error::GridMismatch(format!(
                "expected {count} arrays of {} grid values",
                self.grid_len()
            )));
        }
        Ok(())
    }

    fn slot(&self, m: i64) -> usize {
        m.rem_euclid(self.nlon as i64) as usize
    }

    fn basis_at(&self, i: usize, l: usize, m: i64) -> BasisAt {
        let r = &self.rows[i];
        let t = tri(l, m.unsigned_abs() as usize);
        let sign = if m < 0 && m % 2 != 0 { -1.0 } else { 1.0 };
        let mf = m as f64;
        let (dy, ys) = (sign * r.dy[t], sign * r.ys[t]);
        BasisAt {
            phi: [-I * mf * ys, Complex64::new(dy, 0.0)],
            psi: [Complex64::new(dy, 0.0), I * mf * ys],
        }
    }

    /// Frame components `grad_j B^l` at index `j * 2 + l`.
    fn basis_grad_at(&self, i: usize, l: usize, m: i64) -> BasisGradAt {
        let r = &self.rows[i];
        let t = tri(l, m.unsigned_abs() as usize);
        let sign = if m < 0 && m % 2 != 0 { -1.0 } else { 1.0 };
        let mf = m as f64;
        let (dy, d2y, ys, dys) = (sign * r.dy[t], sign * r.d2y[t], sign * r.ys[t], sign * r.dys[t]);
        let (s, c) = (self.theta[i].sin(), self.theta[i].cos());
        let cot = c / s;
        BasisGradAt {
            phi: [
                -I * mf * dys,
                Complex64::new(d2y, 0.0),
                Complex64::new(mf * mf * ys / s - cot * dy, 0.0),
                I * mf * (dy / s - cot * ys),
            ],
            psi: [
                Complex64::new(d2y, 0.0),
                I * mf * dys,
                I * mf * (dy / s - cot * ys),
                Complex64::new(-mf * mf * ys / s + cot * dy, 0.0),
            ],
        }
    }

    fn rings_to_grid(&self, bufs: Vec<Vec<Complex64>>) -> Vec<Vec<f64>> {
        bufs.into_iter()
            .map(|mut b| {
                fft_rows(&mut b, self.nlon, true);
                b.into_iter().map(|c| c.re).collect()
            })
            .collect()
    }

    fn grid_to_rings(&self, arrays: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
        let scale = 2.0 * PI / self.nlon as f64;
        arrays
            .iter()
            .map(|a| {
                let mut b: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                fft_rows(&mut b, self.nlon, false);
                b.iter_mut().for_each(|c| *c *= scale);
                b
            })
            .collect()
    }

    /// Grid values `[u_theta, u_phi]` of `sum c Phi + d Psi`.
    pub fn synthesize(&self, curl: &[Complex64], grad: &[Complex64]) -> Vec<Vec<f64>> {
        let mut bufs = vec![vec![ZERO; self.grid_len()]; 2];
        for i in 0..self.nlat {
            for l in 1..=self.l_max {
                for m in -(l as i64)..=(l as i64) {
                    let k = vidx(l, m);
                    let (c, d) = (curl[k], grad[k]);
                    if c == ZERO && d == ZERO {
                        continue;
                    }
                    let b = self.basis_at(i, l, m);
                    let at = i * self.nlon + self.slot(m);
                    for q in 0..2 {
                        bufs[q][at] += c * b.phi[q] + d * b.psi[q];
                    }
                }
            }
        }
        self.rings_to_grid(bufs)
    }

    /// Covariant gradient `grad_j u^l` on the grid, component `j * 2 + l`.
    pub fn synthesize_gradient(&self, curl: &[Complex64], grad: &[Complex64]) -> Vec<Vec<f64>> {
        let mut bufs = vec![vec![ZERO; self.grid_len()]; 4];
        for i in 0..self.nlat {
            for l in 1..=self.l_max {
                for m in -(l as i64)..=(l as i64) {
                    let k = vidx(l, m);
                    let (c, d) = (curl[k], grad[k]);
                    if c == ZERO && d == ZERO {
                        continue;
                    }
                    let b = self.basis_grad_at(i, l, m);
                    let at = i * self.nlon + self.slot(m);
                    for q in 0..4 {
                        bufs[q][at] += c * b.phi[q] + d * b.psi[q];
                    }
                }
            }
        }
        self.rings_to_grid(bufs)
    }

    /// L^2 projection of grid values `[v_theta, v_phi]` onto the basis.
    pub fn analyze(&self, values: &[Vec<f64>]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        self.check_grid(values, 2)?;
        let rings = self.grid_to_rings(values);
        let mut curl = vec![ZERO; self.n_coeffs()];
        let mut grad = vec![ZERO; self.n_coeffs()];
        for i in 0..self.nlat {
            let w = self.weights[i];
            for l in 1..=self.l_max {
                for m in -(l as i64)..=(l as i64) {
                    let b = self.basis_at(i, l, m);
                    let at = i * self.nlon + self.slot(m);
                    let k = vidx(l, m);
                    for q in 0..2 {
                        let v = rings[q][at];
                        curl[k] += v * b.phi[q].conj() * w;
                        grad[k] += v * b.psi[q].conj() * w;
                    }
                }
            }
        }
        self.divide_by_eigenvalue(&mut curl, &mut grad);
        Ok((curl, grad))
    }

    /// Projection of `grad_j A^{jl}` onto the basis, computed in weak form
    /// `<div A, B> = -int A^{jl} grad_j B_l` so that no derivative of the grid
    /// data is needed. `a` holds `A^{jl}` at index `j * 2 + l`.
    pub fn project_divergence(&self, a: &[Vec<f64>]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        self.check_grid(a, 4)?;
        let rings = self.grid_to_rings(a);
        let mut curl = vec![ZERO; self.n_coeffs()];
        let mut grad = vec![ZERO; self.n_coeffs()];
        for i in 0..self.nlat {
            let w = self.weights[i];
            for l in 1..=self.l_max {
                for m in -(l as i64)..=(l as i64) {
                    let b = self.basis_grad_at(i, l, m);
                    let at = i * self.nlon + self.slot(m);
                    let k = vidx(l, m);
                    for q in 0..4 {
                        let v = rings[q][at];
                        curl[k] -= v * b.phi[q].conj() * w;
                        grad[k] -= v * b.psi[q].conj() * w;
                    }
                }
            }
        }
        self.divide_by_eigenvalue(&mut curl, &mut grad);
        Ok((curl, grad))
    }

    fn divide_by_eigenvalue(&self, curl: &mut [Complex64], grad: &mut [Complex64]) {
        for l in 1..=self.l_max {
            let lam = (l * (l + 1)) as f64;
            for m in -(l as i64)..=(l as i64) {
                curl[vidx(l, m)] /= lam;
                grad[vidx(l, m)] /= lam;
            }
        }
    }

    /// Scalar synthesis from coefficients indexed by [`sidx`].
    pub fn synthesize_scalar(&self, f: &[Complex64]) -> Vec<f64> {
        let mut buf = vec![ZERO; self.grid_len()];
        for i in 0..self.nlat {
            let r = &self.rows[i];
            for l in 0..=self.l_max {
                for m in -(l as i64)..=(l as i64) {
                    let sign = if m < 0 && m % 2 != 0 { -1.0 } else { 1.0 };
                    buf[i * self.nlon + self.slot(m)] +=
                        f[sidx(l, m)] * (sign * r.y[tri(l, m.unsigned_abs() as usize)]);
                }
            }
        }
        self.rings_to_grid(vec![buf]).pop().unwrap_or_default()
    }

    /// Scalar analysis up to degree `L_max`.
    pub fn analyze_scalar(&self, values: &[f64]) -> Result<Vec<Complex64>> {
        if values.len() != self.grid_len() {
            return Err(Error::GridMismatch("scalar grid length".into()));
        }
        let rings = self.grid_to_rings(&[values.to_vec()]);
        let mut f = vec![ZERO; (self.l_max + 1) * (self.l_max + 1)];
        for i in 0..self.nlat {
            let r = &self.rows[i];
            for l in 0..=self.l_max {
                for m in -(l as i64)..=(l as i64) {
                    let sign = if m < 0 && m % 2 != 0 { -1.0 } else { 1.0 };
                    f[sidx(l, m)] += rings[0][i * self.nlon + self.slot(m)]
                        * (self.weights[i] * sign * r.y[tri(l, m.unsigned_abs() as usize)]);
                }
            }
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, k: usize) -> Vec<Complex64> {
        let mut v = vec![ZERO; n];
        v[k] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn basis_norms_and_orthogonality() {
        let b = SphereBasis::new(5).unwrap();
        let n = b.n_coeffs();
        for l in 1..=5 {
            for m in -(l as i64)..=(l as i64) {
                // real and imaginary parts of Phi_lm as separate real fields
                let e = unit(n, vidx(l, m));
                let re = b.synthesize(&e, &vec![ZERO; n]);
                let (c, d) = b.analyze(&re).unwrap();
                // Re Phi_lm = (Phi_lm + (-1)^m Phi_{l,-m}) / 2
                let expect_m = if m % 2 == 0 { 0.5 } else { -0.5 };
                for (k, v) in c.iter().enumerate() {
                    let want = if k == vidx(l, m) && m == 0 {
                        1.0
                    } else if k == vidx(l, m) {
                        0.5
                    } else if k == vidx(l, -m) {
                        expect_m
                    } else {
                        0.0
                    };
                    assert!((v - want).norm() < 1e-13, "l={l} m={m} k={k}");
                }
                assert!(d.iter().all(|v| v.norm() < 1e-13));
                let sq: Vec<f64> = (0..b.grid_len()).map(|i| re[0][i].powi(2) + re[1][i].powi(2)).collect();
                let lam = (l * (l + 1)) as f64;
                let want = if m == 0 { lam } else { lam / 2.0 };
                assert!((b.integrate(&sq) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scalar_round_trip() {
        let b = SphereBasis::new(6).unwrap();
        let vals: Vec<f64> = (0..b.grid_len())
            .map(|q| {
                let (i, j) = (q / b.nlon(), q % b.nlon());
                let (t, p) = (b.theta()[i], b.phi(j));
                t.cos().powi(3) + t.sin() * t.sin() * (2.0 * p).cos() - 0.3 * t.sin() * p.sin()
            })
            .collect();
        let f = b.analyze_scalar(&vals).unwrap();
        let back = b.synthesize_scalar(&f);
        assert!(vals.iter().zip(&back).all(|(a, c)| (a - c).abs() < 1e-13));
    }

    #[test]
    fn grid_size_is_validated() {
        assert!(SphereBasis::with_grid(4, 4, 20).is_err());
        assert!(SphereBasis::with_grid(4, 6, 8).is_err());
        let b = SphereBasis::new(4).unwrap();
        assert!(matches!(b.analyze(&[vec![0.0; 3], vec![0.0; 3]]), Err(Error::GridMismatch(_))));
    }
}
