//! The smoothing operator `S[s] = e^{s Delta_H}` and its verification suites.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{log_log_fit, middle_decade};
use crate::schedule::HeatSchedule;
use crate::spectral::SpectralField;
use crate::sphere::{sidx, SphereBasis, SphereField};
use crate::torus::{from_physical, to_physical, TorusField};

/// `e^{s Delta_H} u`; exact spectral multiplier on both backends.
pub fn apply_heat<F: SpectralField>(u: &F, s: f64) -> Result<F> {
    if s < 0.0 || s.is_nan() {
        return Err(Error::NegativeHeatTime(s));
    }
    Ok(u.heat(s))
}

/// `|| U(s1 + s2) - e^{s1 Delta}(e^{s2 Delta} u) || / ||u||`.
pub fn semigroup_residual<F: SpectralField>(u: &F, s1: f64, s2: f64) -> Result<f64> {
    if s1 <= 0.0 || s2 <= 0.0 {
        return Err(Error::InvalidParameter(format!("heat times must be positive, got {s1}, {s2}")));
    }
    let norm = u.l2_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let once = u.heat(s1 + s2);
    let twice = u.heat(s2).heat(s1);
    Ok(once.axpy(-1.0, &twice).l2_norm() / norm)
}

/// `||U(s)||_{L^2} / ||u||_{L^2}`.
pub fn contraction_check<F: SpectralField>(u: &F, s: f64) -> Result<f64> {
    let norm = u.l2_norm();
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(apply_heat(u, s)?.l2_norm() / norm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceInvariance {
    /// `||div U(s)|| / ||u||`.
    pub divergence: f64,
    /// `||div e^{s Delta} u - e^{s Delta} div u|| / ||u||`.
    pub commutation: f64,
}

pub fn divergence_invariance_residual<F: SpectralField>(u: &F, s: f64) -> Result<DivergenceInvariance> {
    let h = apply_heat(u, s)?;
    let norm = u.l2_norm();
    if norm == 0.0 {
        return Ok(DivergenceInvariance { divergence: 0.0, commutation: 0.0 });
    }
    Ok(DivergenceInvariance {
        divergence: h.divergence_l2() / norm,
        commutation: u.div_heat_commutator(s) / norm,
    })
}

/// `||U(s) - u||_{L^2}` along the schedule.
pub fn strong_continuity<F: SpectralField>(u: &F, schedule: &HeatSchedule) -> Vec<f64> {
    schedule.values.iter().map(|&s| u.heat(s).axpy(-1.0, u).l2_norm()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatRecord {
    pub field: String,
    pub s: f64,
    pub values: Vec<f64>,
}

/// Tabulated per-`s` diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatReport {
    pub check: String,
    pub backend: String,
    pub columns: Vec<String>,
    pub records: Vec<HeatRecord>,
    pub constants: BTreeMap<String, f64>,
}

impl HeatReport {
    /// Largest value of a column over all records.
    pub fn column_max(&self, name: &str) -> Option<f64> {
        let c = self.columns.iter().position(|n| n == name)?;
        self.records.iter().map(|r| r.values[c]).reduce(f64::max)
    }
}

/// `||grad^L U(s)|| / ||u||` over the schedule together with the operator
/// norm `sup_lambda lambda^{L/2} e^{-s lambda}` of the discretization.
pub fn smoothing_bound_report<F: SpectralField>(
    u: &F,
    field: &str,
    schedule: &HeatSchedule,
    order: usize,
) -> Result<HeatReport> {
    if order > 4 {
        return Err(Error::InvalidParameter(format!("derivative order {order} > 4")));
    }
    let norm = u.l2_norm();
    let eig = u.eigenvalues();
    let half = order as f64 / 2.0;
    let mut records = Vec::with_capacity(schedule.len());
    let mut fitted_c = 0.0f64;
    let mut sup = Vec::with_capacity(schedule.len());
    for &s in &schedule.values {
        let ratio = if norm == 0.0 { 0.0 } else { u.heat(s).deriv_l2_norm(order) / norm };
        let op = eig.iter().map(|&l| l.powf(half) * (-s * l).exp()).fold(0.0, f64::max);
        fitted_c = fitted_c.max(ratio * s.powf(half));
        sup.push(op);
        records.push(HeatRecord { field: field.into(), s, values: vec![ratio, op] });
    }
    if records.iter().any(|r| !r.values[0].is_finite()) {
        return Err(Error::InvalidParameter("non-finite smoothing ratio".into()));
    }
    let mut constants = BTreeMap::new();
    constants.insert("fitted_c".into(), fitted_c);
    if order > 0 {
        let idx = middle_decade(&schedule.values);
        if let Some(fit) = log_log_fit(&schedule.values, &sup, &idx) {
            constants.insert("sup_slope".into(), fit.slope);
        }
    }
    Ok(HeatReport {
        check: format!("smoothing_bound_L{order}"),
        backend: u.backend().name().into(),
        columns: vec!["ratio".into(), "sup_over_fields".into()],
        records,
        constants,
    })
}

/// Short-time L^p ratios `||U||_p/||u||_p`, `||grad U||_p/(||grad u||_p + ||u||_p)`
/// and `s^{1/2} ||grad U||_p / ||u||_p` (columns `heat_lp`, `grad_lp`, `scaled_grad`) for each field over the schedule.
pub fn lp_heat_estimates_report<F: SpectralField>(
    fields: &[(String, F)],
    p: f64,
    schedule: &HeatSchedule,
) -> Result<HeatReport> {
    if fields.is_empty() {
        return Err(Error::EmptySet);
    }
    if p < 1.0 {
        return Err(Error::InvalidParameter(format!("p = {p} < 1")));
    }
    let mut records = Vec::new();
    let mut maxima = [0.0f64; 3];
    for (name, u) in fields {
        let up = u.lp_norm(p);
        let gp = u.grad_lp_norm(p);
        if up == 0.0 {
            return Err(Error::ZeroField);
        }
        for &s in &schedule.values {
            let h = u.heat(s);
            let g = h.grad_lp_norm(p);
            let v = [h.lp_norm(p) / up, g / (gp + up), s.sqrt() * g / up];
            for (m, x) in maxima.iter_mut().zip(&v) {
                *m = m.max(*x);
            }
            records.push(HeatRecord { field: name.clone(), s, values: v.to_vec() });
        }
    }
    let mut constants = BTreeMap::new();
    for (k, name) in ["heat_lp_max", "grad_lp_max", "scaled_grad_max"].iter().enumerate() {
        constants.insert((*name).into(), maxima[k]);
    }
    Ok(HeatReport {
        check: format!("lp_heat_estimates_p{p}"),
        backend: fields[0].1.backend().name().into(),
        columns: vec!["heat_lp".into(), "grad_lp".into(), "scaled_grad".into()],
        records,
        constants,
    })
}

/// Pointwise identities along the heat flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BochnerIdentity {
    /// `d_s|U|^2 - Delta|U|^2 + 2|grad U|^2 + 2 Ric(U, U) = 0`
    Energy,
    /// `d_s|grad U|^2 - Delta|grad U|^2 + 2|grad grad U|^2 = curvature terms`
    Gradient,
    /// `d_s Psi - Delta Psi + 2 s |grad grad U|^2 = curvature terms`,
    /// `Psi = s|grad U|^2 + |U|^2 / 2`
    Psi,
}

/// Backends on which the Bochner residuals are implemented.
pub trait Bochner {
    /// Grid L^2 norm of the residual divided by the largest term, with
    /// `d_s` taken by a centred difference of step `ds`.
    fn bochner_residual(&self, s: f64, which: BochnerIdentity, ds: f64) -> Result<f64>;
}

fn check_step(s: f64, ds: f64) -> Result<()> {
    if !(ds > 0.0) || ds > s / 10.0 {
        return Err(Error::StepTooLarge { step: ds, s });
    }
    Ok(())
}

fn normalized_residual(terms: &[Vec<f64>], norm: impl Fn(&[f64]) -> f64) -> f64 {
    let n = terms[0].len();
    let res: Vec<f64> = (0..n).map(|i| terms.iter().map(|t| t[i]).sum()).collect();
    let scale = terms.iter().map(|t| norm(t)).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        norm(&res) / scale
    }
}

/// Torus helpers on physical grids without dealiasing (the squared
/// quantities stay below `N/2` for the fields used here).
fn torus_sq(values: &[Vec<f64>]) -> Vec<f64> {
    (0..values[0].len()).map(|i| values.iter().map(|c| c[i] * c[i]).sum()).collect()
}

fn torus_lap(u: &TorusField, f: &[f64]) -> Vec<f64> {
    let g = u.grid;
    let c: Vec<_> = from_physical(&g, f).into_iter().enumerate().map(|(i, c)| c * -g.k2(i)).collect();
    to_physical(&g, &c)
}

/// All second derivatives `d_a d_b U^l`.
fn torus_hessian(u: &TorusField) -> Vec<Vec<f64>> {
    let g = u.grid;
    let d = g.d();
    let grad = u.gradient();
    let mut out = Vec::with_capacity(d * d * d);
    for a in 0..d {
        let row = TorusField { grid: g, comps: (0..d).map(|l| grad.comps[a * d + l].clone()).collect() };
        out.extend(row.gradient().to_physical());
    }
    out
}

impl Bochner for TorusField {
    fn bochner_residual(&self, s: f64, which: BochnerIdentity, ds: f64) -> Result<f64> {
        check_step(s, ds)?;
        let g = self.grid;
        let norm = |f: &[f64]| (f.iter().map(|x| x * x).sum::<f64>() * g.cell_volume()).sqrt();
        let at = |t: f64| self.heat(t);
        let sq_u = |t: f64| torus_sq(&at(t).to_physical());
        let sq_g = |t: f64| torus_sq(&at(t).gradient().to_physical());
        let centred = |f: &dyn Fn(f64) -> Vec<f64>| -> Vec<f64> {
            let (p, m) = (f(s + ds), f(s - ds));
            p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * ds)).collect()
        };
        let u = at(s);
        let terms = match which {
            BochnerIdentity::Energy => {
                let f = sq_u(s);
                let lap: Vec<f64> = torus_lap(self, &f).iter().map(|x| -x).collect();
                let grad: Vec<f64> = sq_g(s).iter().map(|x| 2.0 * x).collect();
                vec![centred(&sq_u), lap, grad]
            }
            BochnerIdentity::Gradient => {
                let f = sq_g(s);
                let lap: Vec<f64> = torus_lap(self, &f).iter().map(|x| -x).collect();
                let hess: Vec<f64> = torus_sq(&torus_hessian(&u)).iter().map(|x| 2.0 * x).collect();
                vec![centred(&sq_g), lap, hess]
            }
            BochnerIdentity::Psi => {
                let psi = |t: f64| -> Vec<f64> {
                    let (a, b) = (sq_g(t), sq_u(t));
                    a.iter().zip(&b).map(|(x, y)| t * x + 0.5 * y).collect()
                };
                let lap: Vec<f64> = torus_lap(self, &psi(s)).iter().map(|x| -x).collect();
                let hess: Vec<f64> = torus_sq(&torus_hessian(&u)).iter().map(|x| 2.0 * s * x).collect();
                vec![centred(&psi), lap, hess]
            }
        };
        Ok(normalized_residual(&terms, norm))
    }
}

impl Bochner for SphereField {
    fn bochner_residual(&self, s: f64, which: BochnerIdentity, ds: f64) -> Result<f64> {
        if which != BochnerIdentity::Energy {
            return Err(Error::BackendUnsupported("sphere"));
        }
        check_step(s, ds)?;
        // |U|^2 has degree 2L; a basis of degree 2L resolves its Laplacian exactly.
        let big = Arc::new(SphereBasis::new(2 * self.basis.l_max())?);
        let norm = |f: &[f64]| {
            let sq: Vec<f64> = f.iter().map(|x| x * x).collect();
            big.integrate(&sq).max(0.0).sqrt()
        };
        let sq_u = |t: f64| {
            let g = self.heat(t).rebase(big.clone()).to_grid();
            g[0].iter().zip(&g[1]).map(|(a, b)| a * a + b * b).collect::<Vec<f64>>()
        };
        let (p, m) = (sq_u(s + ds), sq_u(s - ds));
        let dsf: Vec<f64> = p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * ds)).collect();
        let f = sq_u(s);
        let mut fl = big.analyze_scalar(&f)?;
        for l in 0..=big.l_max() {
            for mm in -(l as i64)..=(l as i64) {
                fl[sidx(l, mm)] *= (l * (l + 1)) as f64;
            }
        }
        // -Delta f
        let lap = big.synthesize_scalar(&fl);
        let u = self.heat(s).rebase(big.clone());
        let grad: Vec<f64> = u.covariant_gradient().norm_sq().iter().map(|x| 2.0 * x).collect();
        let ric: Vec<f64> = f.iter().map(|x| 2.0 * x).collect();
        Ok(normalized_residual(&[dsf, lap, grad, ric], norm))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::TorusGrid;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sin_x1_e2(n: usize) -> TorusField {
        TorusField::from_fn(TorusGrid::new(2, n).unwrap(), |x| vec![0.0, x[0].sin()])
    }

    fn random_dfree(n: usize, seed: u64, kmax: i64) -> TorusField {
        let g = TorusGrid::new(2, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = TorusField::zeros(g);
        for c in &mut f.comps {
            for i in 0..g.len() {
                if g.mode(i).iter().all(|k| k.abs() <= kmax) {
                    c[i] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                }
            }
        }
        TorusField::from_physical(g, &f.to_physical()).leray_project()
    }

    /// Classical RK4 for `dU/ds = Delta_H U`, used only as an oracle.
    fn rk4_heat<F: SpectralField>(u: &F, s: f64, ds: f64) -> F {
        let steps = (s / ds).round() as usize;
        let h = s / steps as f64;
        let mut x = u.clone();
        for _ in 0..steps {
            let k1 = x.laplacian();
            let k2 = x.axpy(h / 2.0, &k1).laplacian();
            let k3 = x.axpy(h / 2.0, &k2).laplacian();
            let k4 = x.axpy(h, &k3).laplacian();
            x = x.axpy(h / 6.0, &k1).axpy(h / 3.0, &k2).axpy(h / 3.0, &k3).axpy(h / 6.0, &k4);
        }
        x
    }

    #[test]
    fn apply_heat_examples() {
        let u = sin_x1_e2(16);
        assert_eq!(apply_heat(&u, 0.0).unwrap(), u);
        assert!(matches!(apply_heat(&u, -1e-3), Err(Error::NegativeHeatTime(_))));
        let h = apply_heat(&u, 0.5).unwrap();
        let oracle = rk4_heat(&u, 0.5, 1e-4);
        assert!(h.axpy(-1.0, &oracle).l2_norm() < 1e-10 * u.l2_norm());
        assert!((h.l2_norm() / u.l2_norm() - 0.60653).abs() < 1e-5);

        let b = Arc::new(SphereBasis::new(6).unwrap());
        let phi = SphereField::curl_mode(b, 1, 0).unwrap();
        let h = apply_heat(&phi, 0.25).unwrap();
        let oracle = rk4_heat(&phi, 0.25, 1e-4);
        assert!(h.axpy(-1.0, &oracle).l2_norm() < 1e-10);
        assert!(h.axpy(-(-0.5f64).exp(), &phi).l2_norm() < 1e-14);
    }

    #[test]
    fn semigroup_examples() {
        let u = random_dfree(32, 1, 10);
        assert!(semigroup_residual(&u, 0.1, 0.1).unwrap() < 1e-12);
        assert_eq!(semigroup_residual(&TorusField::zeros(u.grid), 0.1, 0.2).unwrap(), 0.0);
        assert!(semigroup_residual(&u, 0.0, 0.1).is_err());
    }

    #[test]
    fn contraction_examples() {
        let g = TorusGrid::new(2, 16).unwrap();
        let c = TorusField::from_fn(g, |_| vec![1.0, 0.5]);
        assert!((contraction_check(&c, 0.7).unwrap() - 1.0).abs() < 1e-15);
        assert!((contraction_check(&sin_x1_e2(16), 1.0).unwrap() - 0.36788).abs() < 1e-5);
        assert!(contraction_check(&random_dfree(16, 4, 5), 0.1).unwrap() < 1.0);
        assert!(matches!(contraction_check(&TorusField::zeros(g), 0.1), Err(Error::ZeroField)));
    }

    #[test]
    fn divergence_invariance_examples() {
        let u = random_dfree(32, 9, 10);
        let r = divergence_invariance_residual(&u, 0.3).unwrap();
        assert!(r.divergence < 1e-12 && r.commutation < 1e-12);
        let b = Arc::new(SphereBasis::new(8).unwrap());
        let phi = SphereField::curl_mode(b, 3, 1).unwrap();
        assert_eq!(divergence_invariance_residual(&phi, 0.7).unwrap().divergence, 0.0);
        let g = TorusGrid::new(2, 16).unwrap();
        let grad_mode = TorusField::from_fn(g, |x| vec![x[0].sin(), 0.0]);
        let r = divergence_invariance_residual(&grad_mode, 0.3).unwrap();
        assert!(r.commutation < 1e-12);
        assert!(r.divergence > 0.1);
    }

    #[test]
    fn sphere_commutation_with_gradient_part() {
        let b = Arc::new(SphereBasis::new(6).unwrap());
        let mut u = SphereField::curl_mode(b.clone(), 2, 1).unwrap();
        u.grad[crate::sphere::vidx(3, 0)] = Complex64::new(0.7, 0.0);
        u.grad[crate::sphere::vidx(1, 1)] = Complex64::new(0.2, 0.1);
        u.grad[crate::sphere::vidx(1, -1)] = Complex64::new(-0.2, 0.1);
        let r = divergence_invariance_residual(&u, 0.2).unwrap();
        assert!(r.commutation < 1e-12, "{}", r.commutation);
        assert!(r.divergence > 0.0);
    }

    #[test]
    fn strong_continuity_is_monotone() {
        let u = random_dfree(32, 5, 10);
        let c = strong_continuity(&u, &HeatSchedule::standard());
        assert!(c.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn smoothing_bound_examples() {
        let sched = HeatSchedule::standard();
        let g = TorusGrid::new(2, 32).unwrap();
        let z = smoothing_bound_report(&TorusField::zeros(g), "zero", &sched, 2).unwrap();
        assert!(z.records.iter().all(|r| r.values[0] == 0.0));
        let k = [3.0, 4.0];
        let u = TorusField::from_fn(g, |x| {
            let c = (k[0] * x[0] + k[1] * x[1]).cos();
            vec![-0.8 * c, 0.6 * c]
        });
        let r = smoothing_bound_report(&u, "mode", &sched, 1).unwrap();
        for rec in &r.records {
            let want = 5.0 * (-rec.s * 25.0).exp();
            assert!((rec.values[0] - want).abs() < 1e-12 * want.max(1e-300));
        }
        let rnd = random_dfree(64, 2, 21);
        let r = smoothing_bound_report(&rnd, "random", &sched, 1).unwrap();
        let slope = r.constants["sup_slope"];
        assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
        assert!(r.constants["fitted_c"].is_finite());
        assert!(smoothing_bound_report(&rnd, "random", &sched, 5).is_err());
    }

    #[test]
    fn single_mode_scaled_gradient_bound() {
        let sched = HeatSchedule::standard();
        let g = TorusGrid::new(2, 64).unwrap();
        let u = TorusField::from_fn(g, |x| vec![0.0, (8.0 * x[0]).sin()]);
        let r = lp_heat_estimates_report(&[("mode".to_string(), u)], 2.0, &sched).unwrap();
        assert!(r.column_max("heat_lp").unwrap() <= 1.0 + 1e-12);
        let peak = r.constants["scaled_grad_max"];
        let exact = (2.0 * std::f64::consts::E).powf(-0.5);
        assert!(peak <= exact + 1e-12 && peak > 0.98 * exact, "{peak} vs {exact}");
    }

    #[test]
    fn bochner_examples() {
        let u = sin_x1_e2(16);
        assert_eq!(TorusField::zeros(u.grid).bochner_residual(0.1, BochnerIdentity::Energy, 1e-4).unwrap(), 0.0);
        assert!(u.bochner_residual(0.1, BochnerIdentity::Energy, 1e-4).unwrap() < 1e-6);
        assert!(matches!(
            u.bochner_residual(0.1, BochnerIdentity::Energy, 0.05),
            Err(Error::StepTooLarge { .. })
        ));
        let b = Arc::new(SphereBasis::new(4).unwrap());
        let phi = SphereField::curl_mode(b, 2, 0).unwrap();
        assert!(phi.bochner_residual(0.1, BochnerIdentity::Energy, 1e-4).unwrap() < 1e-5);
        assert!(phi.bochner_residual(0.1, BochnerIdentity::Gradient, 1e-4).is_err());
    }

    #[test]
    fn bochner_residuals_are_second_order() {
        let u = random_dfree(32, 77, 3);
        for which in [BochnerIdentity::Energy, BochnerIdentity::Gradient, BochnerIdentity::Psi] {
            let r1 = u.bochner_residual(0.1, which, 0.01).unwrap();
            let r2 = u.bochner_residual(0.1, which, 0.005).unwrap();
            let order = (r1 / r2).log2();
            assert!(order > 1.9, "{which:?}: {r1} {r2}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn semigroup_and_contraction(seed in 0u64..10_000, s1 in 1e-4f64..1.0, s2 in 1e-4f64..1.0) {
            let u = random_dfree(16, seed, 5);
            prop_assert!(semigroup_residual(&u, s1, s2).unwrap() < 1e-12);
            prop_assert!(contraction_check(&u, s1).unwrap() <= 1.0 + 1e-12);
        }
    }
}
