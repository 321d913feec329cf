//! Operations shared by the torus and sphere backends.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sphere::{apply_curvature, gradient_of_square, CurvatureSign, GridTensor, SphereField};
use crate::torus::{from_physical, outer_product, TorusField, TorusScalar, TorusTensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Torus,
    Sphere,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Torus => "torus",
            Backend::Sphere => "sphere",
        }
    }
}

/// A real vector field with an exact Hodge heat semigroup.
pub trait SpectralField: Clone + Send + Sync {
    fn backend(&self) -> Backend;

    fn is_flat(&self) -> bool {
        self.backend() == Backend::Torus
    }

    /// `e^{s Delta_H} u` for `s >= 0` (no sign check).
    fn heat(&self, s: f64) -> Self;
    /// `Delta_H u`.
    fn laplacian(&self) -> Self;
    fn inner(&self, other: &Self) -> f64;
    fn l2_norm(&self) -> f64;
    fn lp_norm(&self, p: f64) -> f64;
    /// `|| grad u ||_{L^p}` with the pointwise Frobenius norm.
    fn grad_lp_norm(&self, p: f64) -> f64;
    /// `|| grad^k u ||_{L^2}`.
    fn deriv_l2_norm(&self, order: usize) -> f64;
    fn divergence_l2(&self) -> f64;
    /// `|| div(e^{s Delta} u) - e^{s Delta}(div u) ||_{L^2}`, both sides computed separately.
    fn div_heat_commutator(&self, s: f64) -> f64;
    fn axpy(&self, a: f64, other: &Self) -> Self;
    fn scale(&self, a: f64) -> Self;
    fn zeros_like(&self) -> Self {
        self.scale(0.0)
    }
    /// Largest eigenvalue of `-Delta_H` representable on the discretization.
    fn max_eigenvalue(&self) -> f64;
    /// Eigenvalues of `-Delta_H` carried by the representation (with repetition dropped).
    fn eigenvalues(&self) -> Vec<f64>;

    /// `grad_j (u^j u^l)` restricted to the representable band (no Leray projection).
    fn transport(&self) -> Result<Self>;
    /// The source of the commutator equation evaluated at `U = self`, split into
    /// the flat term `2 grad_j(grad_k U^j grad^k U^l)`, the `R_-` term and the
    /// `R_+` term.
    fn rhs_parts(&self) -> Result<[Self; 3]>;
    /// `<N(U), V>` after integrating by parts, split the same way as
    /// [`rhs_parts`](Self::rhs_parts). Computed pointwise on the grid.
    fn rhs_pairing(&self, v: &Self) -> Result<[f64; 3]>;
    /// `int U^j U^l grad_j U_l`, which vanishes for divergence-free `U`.
    fn self_transport_pairing(&self) -> f64;
}

impl SpectralField for TorusField {
    fn backend(&self) -> Backend {
        Backend::Torus
    }

    fn heat(&self, s: f64) -> Self {
        TorusField::heat(self, s)
    }

    fn laplacian(&self) -> Self {
        self.hodge_laplacian_flat()
    }

    fn inner(&self, other: &Self) -> f64 {
        TorusField::inner(self, other)
    }

    fn l2_norm(&self) -> f64 {
        TorusField::l2_norm(self)
    }

    fn lp_norm(&self, p: f64) -> f64 {
        TorusField::lp_norm(self, p)
    }

    fn grad_lp_norm(&self, p: f64) -> f64 {
        self.gradient().lp_norm(p)
    }

    fn deriv_l2_norm(&self, order: usize) -> f64 {
        let g = self.grid;
        let s: f64 = (0..g.len())
            .map(|i| {
                let k2 = g.k2(i);
                let w = k2.powi(order as i32);
                w * self.comps.iter().map(|c| c[i].norm_sqr()).sum::<f64>()
            })
            .sum();
        (g.volume() * s).sqrt()
    }

    fn divergence_l2(&self) -> f64 {
        self.divergence().l2_norm()
    }

    fn div_heat_commutator(&self, s: f64) -> f64 {
        let a = TorusField::heat(self, s).divergence();
        let d = self.divergence();
        let g = self.grid;
        let b: Vec<_> = d.coeffs.iter().enumerate().map(|(i, c)| c * (-s * g.k2(i)).exp()).collect();
        let diff = TorusScalar {
            grid: g,
            coeffs: a.coeffs.iter().zip(&b).map(|(x, y)| x - y).collect(),
        };
        diff.l2_norm()
    }

    fn axpy(&self, a: f64, other: &Self) -> Self {
        TorusField::axpy(self, a, other)
    }

    fn scale(&self, a: f64) -> Self {
        TorusField::scale(self, a)
    }

    fn max_eigenvalue(&self) -> f64 {
        let c = self.grid.cutoff() as f64;
        self.grid.d() as f64 * c * c
    }

    fn eigenvalues(&self) -> Vec<f64> {
        let g = self.grid;
        let mut v: Vec<f64> = (0..g.len()).filter(|&i| g.in_band(i)).map(|i| g.k2(i)).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v.dedup();
        v
    }

    fn transport(&self) -> Result<Self> {
        Ok(outer_product(self, self)?.divergence_first())
    }

    fn rhs_parts(&self) -> Result<[Self; 3]> {
        self.check_bandwidth()?;
        let g = self.grid;
        let d = g.d();
        let grad = self.gradient().to_physical();
        let mut b = Vec::with_capacity(d * d);
        for j in 0..d {
            for l in 0..d {
                let v: Vec<f64> = (0..g.len())
                    .map(|i| (0..d).map(|k| grad[k * d + j][i] * grad[k * d + l][i]).sum())
                    .collect();
                b.push(from_physical(&g, &v));
            }
        }
        let mut t = TorusTensor { grid: g, comps: b };
        t.dealias();
        let flat = t.divergence_first().scale(2.0);
        let zero = TorusField::zeros(g);
        Ok([flat, zero.clone(), zero])
    }

    fn rhs_pairing(&self, v: &Self) -> Result<[f64; 3]> {
        self.grid_check(v)?;
        let g = self.grid;
        let d = g.d();
        let gu = self.gradient().to_physical();
        let gv = v.gradient().to_physical();
        let mut sum = 0.0;
        for i in 0..g.len() {
            for j in 0..d {
                for l in 0..d {
                    let bjl: f64 = (0..d).map(|k| gu[k * d + j][i] * gu[k * d + l][i]).sum();
                    sum += bjl * gv[j * d + l][i];
                }
            }
        }
        Ok([-2.0 * sum * g.cell_volume(), 0.0, 0.0])
    }

    fn self_transport_pairing(&self) -> f64 {
        let g = self.grid;
        let d = g.d();
        let u = self.to_physical();
        let gu = self.gradient().to_physical();
        let mut sum = 0.0;
        for i in 0..g.len() {
            for j in 0..d {
                for l in 0..d {
                    sum += u[j][i] * u[l][i] * gu[j * d + l][i];
                }
            }
        }
        sum * g.cell_volume()
    }
}

fn lambda(l: usize) -> f64 {
    (l * (l + 1)) as f64
}

impl SphereField {
    fn from_pair(&self, pair: (Vec<num_complex::Complex64>, Vec<num_complex::Complex64>)) -> Self {
        SphereField { basis: self.basis.clone(), curl: pair.0, grad: pair.1 }
    }

    /// Projected `grad_j A^{jl}` for a rank-2 grid tensor.
    pub fn project_divergence(&self, a: &GridTensor) -> Result<Self> {
        Ok(self.from_pair(self.basis.project_divergence(&a.comps)?))
    }
}

impl SpectralField for SphereField {
    fn backend(&self) -> Backend {
        Backend::Sphere
    }

    fn heat(&self, s: f64) -> Self {
        SphereField::heat(self, s)
    }

    fn laplacian(&self) -> Self {
        self.hodge_laplacian()
    }

    fn inner(&self, other: &Self) -> f64 {
        SphereField::inner(self, other)
    }

    fn l2_norm(&self) -> f64 {
        SphereField::l2_norm(self)
    }

    fn lp_norm(&self, p: f64) -> f64 {
        SphereField::lp_norm(self, p)
    }

    fn grad_lp_norm(&self, p: f64) -> f64 {
        SphereField::grad_lp_norm(self, p)
    }

    /// Exact for orders 0 and 1; higher orders use `||(-Delta_H)^{k/2} u||`.
    fn deriv_l2_norm(&self, order: usize) -> f64 {
        match order {
            0 => self.l2_norm(),
            1 => self.grad_lp_norm(2.0),
            _ => {
                let mut s = 0.0;
                for l in 1..=self.basis.l_max() {
                    for m in -(l as i64)..=(l as i64) {
                        let k = crate::sphere::vidx(l, m);
                        s += lambda(l).powi(order as i32 + 1)
                            * (self.curl[k].norm_sqr() + self.grad[k].norm_sqr());
                    }
                }
                s.sqrt()
            }
        }
    }

    fn divergence_l2(&self) -> f64 {
        SphereField::divergence_l2(self)
    }

    fn div_heat_commutator(&self, s: f64) -> f64 {
        let b = &self.basis;
        let lhs = SphereField::heat(self, s).covariant_gradient().trace().unwrap_or_default();
        let div = self.covariant_gradient().trace().unwrap_or_default();
        let Ok(mut f) = b.analyze_scalar(&div) else { return f64::NAN };
        for l in 0..=b.l_max() {
            for m in -(l as i64)..=(l as i64) {
                f[crate::sphere::sidx(l, m)] *= (-lambda(l) * s).exp();
            }
        }
        let rhs = b.synthesize_scalar(&f);
        let sq: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, c)| (a - c).powi(2)).collect();
        b.integrate(&sq).max(0.0).sqrt()
    }

    fn axpy(&self, a: f64, other: &Self) -> Self {
        SphereField::axpy(self, a, other)
    }

    fn scale(&self, a: f64) -> Self {
        SphereField::scale(self, a)
    }

    fn max_eigenvalue(&self) -> f64 {
        lambda(self.basis.l_max())
    }

    fn eigenvalues(&self) -> Vec<f64> {
        (1..=self.basis.l_max()).map(lambda).collect()
    }

    fn transport(&self) -> Result<Self> {
        let g = self.to_grid();
        self.project_divergence(&GridTensor::outer(&g, &g))
    }

    fn rhs_parts(&self) -> Result<[Self; 3]> {
        let u = self.to_grid();
        let grad = self.covariant_gradient();
        let n = self.basis.grid_len();
        let mut b = GridTensor::zeros(2, n);
        for j in 0..2 {
            for l in 0..2 {
                b.comps[j * 2 + l] = (0..n)
                    .map(|i| (0..2).map(|k| grad.comps[k * 2 + j][i] * grad.comps[k * 2 + l][i]).sum())
                    .collect();
            }
        }
        let flat = self.project_divergence(&b)?.scale(2.0);
        let s = gradient_of_square(&u, &grad);
        let minus_grid = apply_curvature(CurvatureSign::Minus, &s)?;
        let minus = SphereField::from_grid(self.basis.clone(), &minus_grid.comps)?;
        let plus_t = apply_curvature(CurvatureSign::Plus, &GridTensor::outer(&u, &u))?;
        let plus = self.project_divergence(&plus_t)?;
        Ok([flat, minus, plus])
    }

    fn rhs_pairing(&self, v: &Self) -> Result<[f64; 3]> {
        let n = self.basis.grid_len();
        let u = self.to_grid();
        let gu = self.covariant_gradient();
        let vv = v.to_grid();
        let gv = v.covariant_gradient();
        let (mut flat, mut minus, mut plus) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let s = gradient_of_square(&u, &gu);
        let rm = apply_curvature(CurvatureSign::Minus, &s)?;
        let rp = apply_curvature(CurvatureSign::Plus, &GridTensor::outer(&u, &u))?;
        for i in 0..n {
            for j in 0..2 {
                for l in 0..2 {
                    let bjl: f64 = (0..2).map(|k| gu.comps[k * 2 + j][i] * gu.comps[k * 2 + l][i]).sum();
                    flat[i] -= 2.0 * bjl * gv.comps[j * 2 + l][i];
                    // <div T, V> = -int T^{ml} grad_m V_l
                    plus[i] -= rp.comps[j * 2 + l][i] * gv.comps[j * 2 + l][i];
                }
                minus[i] += rm.comps[j][i] * vv[j][i];
            }
        }
        let b = &self.basis;
        Ok([b.integrate(&flat), b.integrate(&minus), b.integrate(&plus)])
    }

    fn self_transport_pairing(&self) -> f64 {
        let n = self.basis.grid_len();
        let u = self.to_grid();
        let gu = self.covariant_gradient();
        let v: Vec<f64> = (0..n)
            .map(|i| {
                let mut t = 0.0;
                for j in 0..2 {
                    for l in 0..2 {
                        t += u[j][i] * u[l][i] * gu.comps[j * 2 + l][i];
                    }
                }
                t
            })
            .collect();
        self.basis.integrate(&v)
    }
}
