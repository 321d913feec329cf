use std::sync::Arc;

use num_complex::Complex64;

use super::basis::{vidx, SphereBasis};
use super::GridTensor;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Tangent vector field on the unit sphere in the curl/grad basis.
#[derive(Clone, Debug)]
pub struct SphereField {
    pub basis: Arc<SphereBasis>,
    /// Coefficients of `Phi_lm`, indexed by [`vidx`].
    pub curl: Vec<Complex64>,
    /// Coefficients of `Psi_lm = grad Y_lm`.
    pub grad: Vec<Complex64>,
}

impl PartialEq for SphereField {
    fn eq(&self, other: &Self) -> bool {
        self.basis.l_max() == other.basis.l_max() && self.curl == other.curl && self.grad == other.grad
    }
}

fn lambda(l: usize) -> f64 {
    (l * (l + 1)) as f64
}

impl SphereField {
    pub fn zeros(basis: Arc<SphereBasis>) -> Self {
        let n = basis.n_coeffs();
        Self { basis, curl: vec![ZERO; n], grad: vec![ZERO; n] }
    }

    pub fn from_coeffs(basis: Arc<SphereBasis>, curl: Vec<Complex64>, grad: Vec<Complex64>) -> Result<Self> {
        if curl.len() != basis.n_coeffs() || grad.len() != basis.n_coeffs() {
            return Err(Error::GridMismatch("coefficient count".into()));
        }
        Ok(Self { basis, curl, grad })
    }

    /// Real combination `Phi_lm + (-1)^m Phi_{l,-m}`; equals `Phi_l0` for `m = 0`.
    pub fn curl_mode(basis: Arc<SphereBasis>, l: usize, m: i64) -> Result<Self> {
        if l == 0 || l > basis.l_max() || m.unsigned_abs() as usize > l {
            return Err(Error::InvalidParameter(format!("mode ({l}, {m}) outside basis")));
        }
        let mut f = Self::zeros(basis);
        f.curl[vidx(l, m)] = Complex64::new(1.0, 0.0);
        if m != 0 {
            f.curl[vidx(l, -m)] = Complex64::new(if m % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
        }
        Ok(f)
    }

    pub fn from_grid(basis: Arc<SphereBasis>, values: &[Vec<f64>]) -> Result<Self> {
        let (curl, grad) = basis.analyze(values)?;
        Ok(Self { basis, curl, grad })
    }

    /// Grid values `[u_theta, u_phi]`.
    pub fn to_grid(&self) -> Vec<Vec<f64>> {
        self.basis.synthesize(&self.curl, &self.grad)
    }

    /// `grad_j u^l` in the orthonormal frame, Christoffel terms included.
    pub fn covariant_gradient(&self) -> GridTensor {
        GridTensor { rank: 2, comps: self.basis.synthesize_gradient(&self.curl, &self.grad) }
    }

    fn map_degree(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for l in 1..=self.basis.l_max() {
            let fac = f(lambda(l));
            for m in -(l as i64)..=(l as i64) {
                out.curl[vidx(l, m)] *= fac;
                out.grad[vidx(l, m)] *= fac;
            }
        }
        out
    }

    /// Hodge Laplacian: `-l(l+1)` on both blocks.
    pub fn hodge_laplacian(&self) -> Self {
        self.map_degree(|lam| -lam)
    }

    /// Exact heat multiplier `e^{-l(l+1) s}`.
    pub fn heat(&self, s: f64) -> Self {
        if s == 0.0 {
            return self.clone();
        }
        self.map_degree(|lam| (-lam * s).exp())
    }

    /// `int u . w dA` from the coefficients.
    pub fn inner(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for l in 1..=self.basis.l_max() {
            for m in -(l as i64)..=(l as i64) {
                let k = vidx(l, m);
                s += lambda(l)
                    * ((self.curl[k] * other.curl[k].conj()).re + (self.grad[k] * other.grad[k].conj()).re);
            }
        }
        s
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// Quadrature of `|u|^p`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let g = self.to_grid();
        let v: Vec<f64> = g[0].iter().zip(&g[1]).map(|(a, b)| (a * a + b * b).powf(p / 2.0)).collect();
        self.basis.integrate(&v).max(0.0).powf(1.0 / p)
    }

    pub fn grad_lp_norm(&self, p: f64) -> f64 {
        self.covariant_gradient().lp_norm(&self.basis, p)
    }

    /// `||div u||_{L^2}`; `div Psi_lm = -l(l+1) Y_lm` and `div Phi_lm = 0`.
    pub fn divergence_l2(&self) -> f64 {
        let mut s = 0.0;
        for l in 1..=self.basis.l_max() {
            for m in -(l as i64)..=(l as i64) {
                s += lambda(l).powi(2) * self.grad[vidx(l, m)].norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        let zip = |x: &[Complex64], y: &[Complex64]| x.iter().zip(y).map(|(p, q)| p + q * a).collect();
        Self { basis: self.basis.clone(), curl: zip(&self.curl, &other.curl), grad: zip(&self.grad, &other.grad) }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            basis: self.basis.clone(),
            curl: self.curl.iter().map(|c| c * a).collect(),
            grad: self.grad.iter().map(|c| c * a).collect(),
        }
    }

    /// Largest violation of `c_{l,-m} = (-1)^m conj(c_{l,m})`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for block in [&self.curl, &self.grad] {
            for l in 1..=self.basis.l_max() {
                for m in 0..=(l as i64) {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    let e = block[vidx(l, -m)] - block[vidx(l, m)].conj() * sign;
                    worst = worst.max(e.norm());
                }
            }
        }
        worst
    }

    /// Copies coefficients into a basis of different degree, truncating or zero-padding.
    pub fn rebase(&self, basis: Arc<SphereBasis>) -> Self {
        let mut out = Self::zeros(basis.clone());
        for l in 1..=self.basis.l_max().min(basis.l_max()) {
            for m in -(l as i64)..=(l as i64) {
                out.curl[vidx(l, m)] = self.curl[vidx(l, m)];
                out.grad[vidx(l, m)] = self.grad[vidx(l, m)];
            }
        }
        out
    }
}
