//! Unit-sphere backend.

mod basis;
mod field;
pub mod legendre;

pub use basis::{sidx, vidx, SphereBasis};
pub use field::SphereField;

use crate::error::{Error, Result};

/// Real tensor field on the quadrature grid in the orthonormal frame
/// `(theta_hat, phi_hat)`. Component `(a, b, c)` of a rank-3 tensor lives at
/// `comps[(a * 2 + b) * 2 + c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridTensor {
    pub rank: usize,
    pub comps: Vec<Vec<f64>>,
}

impl GridTensor {
    pub fn zeros(rank: usize, len: usize) -> Self {
        Self { rank, comps: vec![vec![0.0; len]; 1 << rank] }
    }

    pub fn len(&self) -> usize {
        self.comps.first().map_or(0, |c| c.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pointwise squared Frobenius norm.
    pub fn norm_sq(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum()).collect()
    }

    pub fn lp_norm(&self, basis: &SphereBasis, p: f64) -> f64 {
        let v: Vec<f64> = self.norm_sq().into_iter().map(|x| x.powf(p / 2.0)).collect();
        basis.integrate(&v).max(0.0).powf(1.0 / p)
    }

    /// Trace of a rank-2 tensor.
    pub fn trace(&self) -> Result<Vec<f64>> {
        if self.rank != 2 {
            return Err(Error::RankMismatch(format!("trace of rank {}", self.rank)));
        }
        Ok(self.comps[0].iter().zip(&self.comps[3]).map(|(a, b)| a + b).collect())
    }

    /// Outer product `a^j b^l` of two vector grids.
    pub fn outer(a: &[Vec<f64>], b: &[Vec<f64>]) -> Self {
        let mut comps = Vec::with_capacity(4);
        for x in a.iter().take(2) {
            for y in b.iter().take(2) {
                comps.push(x.iter().zip(y).map(|(p, q)| p * q).collect());
            }
        }
        Self { rank: 2, comps }
    }
}

/// Sign of the curvature operator `R_{+-} = Riem +- g Ric`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CurvatureSign {
    Plus,
    Minus,
}

/// Closed-form contractions with `(R_{+-})^l_{mjk} = d^l_m g_jk - g_mk d^l_j +- g_mj d^l_k`
/// on the unit sphere.
///
/// * `Minus` takes a rank-3 tensor `S^{mjk}` and returns the vector
///   `S^{l j}_j - S^{m l}_m - S^m_m^l`.
/// * `Plus` takes a rank-2 tensor `S^{jk}` and returns `T^{ml} = (R_+)^l_{mjk} S^{jk}
///   = d^{ml} tr S - S^{lm} + S^{ml}`, to be differentiated in `m` by the caller.
pub fn apply_curvature(sign: CurvatureSign, t: &GridTensor) -> Result<GridTensor> {
    let n = t.len();
    match (sign, t.rank) {
        (CurvatureSign::Minus, 3) => {
            let s = |a: usize, b: usize, c: usize| &t.comps[(a * 2 + b) * 2 + c];
            let mut out = GridTensor::zeros(1, n);
            for l in 0..2 {
                for i in 0..n {
                    let mut v = 0.0;
                    for j in 0..2 {
                        v += s(l, j, j)[i] - s(j, l, j)[i] - s(j, j, l)[i];
                    }
                    out.comps[l][i] = v;
                }
            }
            Ok(out)
        }
        (CurvatureSign::Plus, 2) => {
            let s = |a: usize, b: usize| &t.comps[a * 2 + b];
            let mut out = GridTensor::zeros(2, n);
            for m in 0..2 {
                for l in 0..2 {
                    for i in 0..n {
                        let tr = if m == l { s(0, 0)[i] + s(1, 1)[i] } else { 0.0 };
                        out.comps[m * 2 + l][i] = tr - s(l, m)[i] + s(m, l)[i];
                    }
                }
            }
            Ok(out)
        }
        (sign, rank) => Err(Error::RankMismatch(format!(
            "{sign:?} contraction expects rank {}, got {rank}",
            if sign == CurvatureSign::Minus { 3 } else { 2 }
        ))),
    }
}

/// `grad_m (U^j U^k)` from grid values and the covariant gradient.
pub fn gradient_of_square(u: &[Vec<f64>], grad: &GridTensor) -> GridTensor {
    let n = u[0].len();
    let mut out = GridTensor::zeros(3, n);
    for m in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let (gj, gk) = (&grad.comps[m * 2 + j], &grad.comps[m * 2 + k]);
                out.comps[(m * 2 + j) * 2 + k] =
                    (0..n).map(|i| gj[i] * u[k][i] + u[j][i] * gk[i]).collect();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn random_field(basis: &Arc<SphereBasis>, seed: u64, with_grad: bool) -> SphereField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SphereField::zeros(basis.clone());
        for l in 1..=basis.l_max() {
            for m in 0..=(l as i64) {
                for (block, on) in [(&mut f.curl, true), (&mut f.grad, with_grad)] {
                    if !on {
                        continue;
                    }
                    let c = if m == 0 {
                        Complex64::new(rng.random_range(-1.0..1.0), 0.0)
                    } else {
                        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                    };
                    block[vidx(l, m)] = c;
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    block[vidx(l, -m)] = c.conj() * sign;
                }
            }
        }
        f
    }

    fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        a.iter().flatten().zip(b.iter().flatten()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn round_trips() {
        let basis = Arc::new(SphereBasis::new(10).unwrap());
        let phi21 = SphereField::curl_mode(basis.clone(), 2, 1).unwrap();
        let back = SphereField::from_grid(basis.clone(), &phi21.to_grid()).unwrap();
        assert!(back.axpy(-1.0, &phi21).l2_norm() < 1e-12);
        let zero = SphereField::from_grid(basis.clone(), &[vec![0.0; basis.grid_len()], vec![0.0; basis.grid_len()]]).unwrap();
        assert!(zero.curl.iter().chain(&zero.grad).all(|c| c.norm() == 0.0));
        for seed in 0..5 {
            let u = random_field(&basis, seed, true);
            let back = SphereField::from_grid(basis.clone(), &u.to_grid()).unwrap();
            assert!(back.axpy(-1.0, &u).l2_norm() < 1e-10 * u.l2_norm());
            assert!(u.reality_defect() < 1e-15);
        }
    }

    #[test]
    fn analysis_matches_direct_projection_quadrature() {
        let basis = Arc::new(SphereBasis::new(6).unwrap());
        let u = random_field(&basis, 42, true);
        let g = u.to_grid();
        let (nlat, nlon) = (basis.nlat(), basis.nlon());
        let (x, w) = legendre::gauss_legendre(nlat);
        for &(l, m) in &[(1usize, 0i64), (3, -2), (6, 5), (4, 4)] {
            let (mut c, mut d) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for i in 0..nlat {
                let th = x[i].acos();
                let row = legendre::LatitudeRow::new(6, th);
                let t = legendre::tri(l, m.unsigned_abs() as usize);
                let sign = if m < 0 && m % 2 != 0 { -1.0 } else { 1.0 };
                let (ys, dy) = (sign * row.ys[t], sign * row.dy[t]);
                for j in 0..nlon {
                    let ph = 2.0 * PI * j as f64 / nlon as f64;
                    let e = Complex64::from_polar(1.0, m as f64 * ph);
                    let phi = [Complex64::new(0.0, -(m as f64) * ys) * e, e * dy];
                    let psi = [e * dy, Complex64::new(0.0, m as f64 * ys) * e];
                    let v = [g[0][i * nlon + j], g[1][i * nlon + j]];
                    let wq = w[i] * 2.0 * PI / nlon as f64;
                    for q in 0..2 {
                        c += phi[q].conj() * v[q] * wq;
                        d += psi[q].conj() * v[q] * wq;
                    }
                }
            }
            let lam = (l * (l + 1)) as f64;
            assert!((c / lam - u.curl[vidx(l, m)]).norm() < 1e-12);
            assert!((d / lam - u.grad[vidx(l, m)]).norm() < 1e-12);
        }
    }

    /// `<Delta_H u, u>` from the Weitzenboeck side: `-int |grad u|^2 - int Ric(u, u)`.
    fn weitzenbock_quadratic_form(u: &SphereField) -> f64 {
        let grad = u.covariant_gradient();
        let g = u.to_grid();
        let ric: Vec<f64> = g[0].iter().zip(&g[1]).map(|(a, b)| a * a + b * b).collect();
        -u.basis.integrate(&grad.norm_sq()) - u.basis.integrate(&ric)
    }

    #[test]
    fn hodge_laplacian_examples() {
        let basis = Arc::new(SphereBasis::new(8).unwrap());
        for (l, m, eig) in [(1usize, 0i64, -2.0), (3, 2, -12.0)] {
            let u = SphereField::curl_mode(basis.clone(), l, m).unwrap();
            let lap = u.hodge_laplacian();
            assert!(lap.axpy(-eig, &u).l2_norm() < 1e-14);
            let oracle = weitzenbock_quadratic_form(&u) / u.inner(&u);
            assert!((oracle - eig).abs() < 1e-10 * eig.abs());
        }
        let z = SphereField::zeros(basis);
        assert_eq!(z.hodge_laplacian(), z);
    }

    #[test]
    fn hodge_laplacian_agrees_with_weitzenbock_on_every_basis_field() {
        let l_max = 12;
        let basis = Arc::new(SphereBasis::new(l_max).unwrap());
        for l in 1..=l_max {
            for m in 0..=(l as i64) {
                for grad_type in [false, true] {
                    for imag in [false, true] {
                        if imag && m == 0 {
                            continue;
                        }
                        let mut u = SphereField::zeros(basis.clone());
                        let block = if grad_type { &mut u.grad } else { &mut u.curl };
                        let c = if imag { Complex64::new(0.0, 1.0) } else { Complex64::new(1.0, 0.0) };
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        block[vidx(l, m)] += c;
                        if m != 0 {
                            block[vidx(l, -m)] += c.conj() * sign;
                        }
                        let diag = u.hodge_laplacian().inner(&u);
                        let oracle = weitzenbock_quadratic_form(&u);
                        assert!(
                            (diag - oracle).abs() < 1e-8 * diag.abs(),
                            "l={l} m={m} grad={grad_type}: {diag} vs {oracle}"
                        );
                    }
                }
            }
        }
    }

    fn riem_pm(sign: CurvatureSign, l: usize, m: usize, j: usize, k: usize) -> f64 {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let s = if sign == CurvatureSign::Plus { 1.0 } else { -1.0 };
        d(l, m) * d(j, k) - d(m, k) * d(l, j) + s * d(m, j) * d(l, k)
    }

    fn brute_minus(s: &GridTensor) -> GridTensor {
        let mut out = GridTensor::zeros(1, s.len());
        for i in 0..s.len() {
            for l in 0..2 {
                for m in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            out.comps[l][i] +=
                                riem_pm(CurvatureSign::Minus, l, m, j, k) * s.comps[(m * 2 + j) * 2 + k][i];
                        }
                    }
                }
            }
        }
        out
    }

    fn brute_plus(s: &GridTensor) -> GridTensor {
        let mut out = GridTensor::zeros(2, s.len());
        for i in 0..s.len() {
            for l in 0..2 {
                for m in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            out.comps[m * 2 + l][i] +=
                                riem_pm(CurvatureSign::Plus, l, m, j, k) * s.comps[j * 2 + k][i];
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn curvature_contractions_match_index_loop() {
        let basis = Arc::new(SphereBasis::new(8).unwrap());
        let zero = GridTensor::zeros(3, basis.grid_len());
        let out = apply_curvature(CurvatureSign::Minus, &zero).unwrap();
        assert!(out.comps.iter().flatten().all(|&x| x == 0.0));

        let phi10 = SphereField::curl_mode(basis.clone(), 1, 0).unwrap();
        let s = gradient_of_square(&phi10.to_grid(), &phi10.covariant_gradient());
        let a = apply_curvature(CurvatureSign::Minus, &s).unwrap();
        assert!(max_abs_diff(&a.comps, &brute_minus(&s).comps) < 1e-9);

        let phi20 = SphereField::curl_mode(basis.clone(), 2, 0).unwrap();
        let g = phi20.to_grid();
        let uu = GridTensor::outer(&g, &g);
        let b = apply_curvature(CurvatureSign::Plus, &uu).unwrap();
        assert!(max_abs_diff(&b.comps, &brute_plus(&uu).comps) < 1e-9);

        for seed in 0..20 {
            let u = random_field(&basis, 100 + seed, seed % 3 == 0);
            let g = u.to_grid();
            let s = gradient_of_square(&g, &u.covariant_gradient());
            let a = apply_curvature(CurvatureSign::Minus, &s).unwrap();
            assert!(max_abs_diff(&a.comps, &brute_minus(&s).comps) < 1e-9);
            let uu = GridTensor::outer(&g, &g);
            let b = apply_curvature(CurvatureSign::Plus, &uu).unwrap();
            assert!(max_abs_diff(&b.comps, &brute_plus(&uu).comps) < 1e-9);
        }
        assert!(matches!(apply_curvature(CurvatureSign::Plus, &s), Err(Error::RankMismatch(_))));
        assert!(matches!(apply_curvature(CurvatureSign::Minus, &uu), Err(Error::RankMismatch(_))));
    }

    #[test]
    fn covariant_gradient_integrates_by_parts() {
        // exact quadrature for triple products of degree-6 fields
        let basis = Arc::new(SphereBasis::with_grid(6, 12, 20).unwrap());
        assert!(SphereField::zeros(basis.clone()).covariant_gradient().comps.iter().flatten().all(|&x| x == 0.0));
        for seed in 0..5 {
            let u = random_field(&basis, seed, true);
            let w = random_field(&basis, seed + 50, true);
            let v = random_field(&basis, seed + 99, true);
            let (gu, gw) = (u.covariant_gradient(), w.covariant_gradient());
            let (uu, ww, vv) = (u.to_grid(), w.to_grid(), v.to_grid());
            let div_v = v.covariant_gradient().trace().unwrap();
            let n = basis.grid_len();
            // int v^j grad_j(u.w) + div(v) (u.w) = 0
            let integrand: Vec<f64> = (0..n)
                .map(|i| {
                    let mut t = 0.0;
                    for j in 0..2 {
                        let mut dj = 0.0;
                        for l in 0..2 {
                            dj += gu.comps[j * 2 + l][i] * ww[l][i] + uu[l][i] * gw.comps[j * 2 + l][i];
                        }
                        t += vv[j][i] * dj;
                    }
                    t + div_v[i] * (uu[0][i] * ww[0][i] + uu[1][i] * ww[1][i])
                })
                .collect();
            let scale = u.l2_norm() * w.l2_norm() * v.l2_norm();
            assert!(basis.integrate(&integrand).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn curl_fields_are_divergence_free() {
        let basis = Arc::new(SphereBasis::new(8).unwrap());
        for l in 1..=8 {
            for m in 0..=(l as i64) {
                let u = SphereField::curl_mode(basis.clone(), l, m).unwrap();
                let div = u.covariant_gradient().trace().unwrap();
                assert!(div.iter().all(|d| d.abs() < 1e-10), "l={l} m={m}");
                assert_eq!(u.divergence_l2(), 0.0);
                assert_eq!(u.hodge_laplacian().divergence_l2(), 0.0);
            }
        }
        let u = random_field(&basis, 3, true);
        let div = u.covariant_gradient().trace().unwrap();
        let sq: Vec<f64> = div.iter().map(|d| d * d).collect();
        assert!((basis.integrate(&sq).sqrt() - u.divergence_l2()).abs() < 1e-10 * u.divergence_l2());
    }

    #[test]
    fn lp_norm_examples() {
        let basis = Arc::new(SphereBasis::new(6).unwrap());
        let fine = Arc::new(SphereBasis::new(12).unwrap());
        assert_eq!(SphereField::zeros(basis.clone()).lp_norm(3.0), 0.0);
        let phi10 = SphereField::curl_mode(basis.clone(), 1, 0).unwrap();
        assert!((phi10.lp_norm(2.0).powi(2) - 2.0).abs() < 1e-13);
        let oracle = phi10.rebase(fine).lp_norm(2.0);
        assert!((phi10.lp_norm(2.0) - oracle).abs() < 1e-13);
        let u = random_field(&basis, 8, false);
        for p in [1.0, 2.0, 3.0, 4.5] {
            assert!((u.scale(-2.5).lp_norm(p) - 2.5 * u.lp_norm(p)).abs() < 1e-12 * u.lp_norm(p));
        }
        assert!((u.lp_norm(2.0) - u.l2_norm()).abs() < 1e-12 * u.l2_norm());
    }

    #[test]
    fn hodge_laplacian_is_self_adjoint() {
        let basis = Arc::new(SphereBasis::new(10).unwrap());
        for seed in 0..10 {
            let u = random_field(&basis, seed, true);
            let w = random_field(&basis, seed + 1000, true);
            let a = u.hodge_laplacian().inner(&w);
            let b = u.inner(&w.hodge_laplacian());
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
            // same pairing by grid quadrature
            let (lu, ww) = (u.hodge_laplacian().to_grid(), w.to_grid());
            let q: Vec<f64> = (0..basis.grid_len()).map(|i| lu[0][i] * ww[0][i] + lu[1][i] * ww[1][i]).collect();
            assert!((basis.integrate(&q) - a).abs() < 1e-10 * a.abs().max(1.0));
        }
    }
}
