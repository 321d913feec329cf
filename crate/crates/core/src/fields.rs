//! Divergence-free test fields with known regularity.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{vidx, SphereBasis, SphereField};
use crate::torus::{from_physical, to_physical, TorusField, TorusGrid};

/// Either backend's field; what generators and files carry around.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyField {
    Torus(TorusField),
    Sphere(SphereField),
}

/// Arrangement of the lacunary shells on the torus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LacunaryGeometry {
    /// `sum_j 2^{-alpha j} cos(2^j x_1 + phi_j) e_2`.
    #[default]
    Shear,
    /// Gaussian random streamfunction on each annulus `2^{j-1} <= |k| < 2^j`,
    /// unit coefficient energy per shell, times `2^{-alpha j}`.
    Shells,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    SingleMode { n: usize, k: Vec<i64> },
    Lacunary {
        n: usize,
        alpha: f64,
        shells: u32,
        seed: u64,
        #[serde(default)]
        geometry: LacunaryGeometry,
    },
    RandomSlope { n: usize, gamma: f64, seed: u64 },
    TaylorGreen { n: usize },
    SphereMode { l_max: usize, l: usize, m: i64 },
    SphereLacunary { l_max: usize, alpha: f64, shells: u32, seed: u64 },
    SphereRandom { l_max: usize, decay: f64, seed: u64 },
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<AnyField> {
        Ok(match self {
            Self::SingleMode { n, k } => AnyField::Torus(single_mode(TorusGrid::new(k.len(), *n)?, k)?),
            Self::Lacunary { n, alpha, shells, seed, geometry } => {
                let g = TorusGrid::new(2, *n)?;
                AnyField::Torus(match geometry {
                    LacunaryGeometry::Shear => lacunary(g, *alpha, *shells, *seed)?,
                    LacunaryGeometry::Shells => lacunary_shells(g, *alpha, *shells, *seed)?,
                })
            }
            Self::RandomSlope { n, gamma, seed } => AnyField::Torus(random_slope(TorusGrid::new(2, *n)?, *gamma, *seed)?),
            Self::TaylorGreen { n } => AnyField::Torus(taylor_green(TorusGrid::new(2, *n)?)),
            Self::SphereMode { l_max, l, m } => {
                AnyField::Sphere(sphere_mode(Arc::new(SphereBasis::new(*l_max)?), *l, *m)?)
            }
            Self::SphereLacunary { l_max, alpha, shells, seed } => {
                AnyField::Sphere(sphere_lacunary(Arc::new(SphereBasis::new(*l_max)?), *alpha, *shells, *seed)?)
            }
            Self::SphereRandom { l_max, decay, seed } => {
                AnyField::Sphere(sphere_random(Arc::new(SphereBasis::new(*l_max)?), *decay, *seed)?)
            }
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} not in (0, 1)")));
    }
    Ok(())
}

fn check_shells(shells: u32) -> Result<()> {
    if shells == 0 || shells > 30 {
        return Err(Error::InvalidParameter(format!("shell count {shells} not in 1..=30")));
    }
    Ok(())
}

/// `cos(k . x) e` with `e` a unit vector perpendicular to `k`.
pub fn single_mode(grid: TorusGrid, k: &[i64]) -> Result<TorusField> {
    let d = grid.d();
    if k.len() != d || k.iter().all(|&x| x == 0) {
        return Err(Error::InvalidParameter(format!("wavevector {k:?} for d = {d}")));
    }
    let c = grid.cutoff() as i64;
    if let Some(&bad) = k.iter().find(|x| x.abs() > c) {
        return Err(Error::BandwidthExceeded { cutoff: grid.cutoff(), amplitude: bad.abs() as f64 });
    }
    let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
    let mut e = if d == 2 {
        vec![-kf[1], kf[0]]
    } else {
        // Cross product with the axis least aligned with k.
        let a = (0..3).min_by(|&i, &j| kf[i].abs().total_cmp(&kf[j].abs())).unwrap_or(0);
        let mut ax = [0.0; 3];
        ax[a] = 1.0;
        vec![kf[1] * ax[2] - kf[2] * ax[1], kf[2] * ax[0] - kf[0] * ax[2], kf[0] * ax[1] - kf[1] * ax[0]]
    };
    let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
    e.iter_mut().for_each(|x| *x /= norm);
    let mut u = TorusField::zeros(grid);
    let neg: Vec<i64> = k.iter().map(|x| -x).collect();
    for (j, ej) in e.iter().enumerate() {
        u.comps[j][grid.index_of(k)] += Complex64::new(0.5 * ej, 0.0);
        u.comps[j][grid.index_of(&neg)] += Complex64::new(0.5 * ej, 0.0);
    }
    Ok(u)
}

/// Shear lacunary field `sum_{j=1}^J 2^{-alpha j} cos(2^j x_1 + phi_j) e_2`.
pub fn lacunary(grid: TorusGrid, alpha: f64, shells: u32, seed: u64) -> Result<TorusField> {
    check_alpha(alpha)?;
    check_shells(shells)?;
    let top = 1usize << shells;
    if top > grid.cutoff() {
        return Err(Error::BandwidthExceeded { cutoff: grid.cutoff(), amplitude: top as f64 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = TorusField::zeros(grid);
    let mut k = vec![0i64; grid.d()];
    for j in 1..=shells {
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let a = 2f64.powf(-alpha * j as f64) / 2.0;
        k[0] = 1 << j;
        u.comps[1][grid.index_of(&k)] += Complex64::from_polar(a, phase);
        k[0] = -(1 << j);
        u.comps[1][grid.index_of(&k)] += Complex64::from_polar(a, -phase);
    }
    Ok(u)
}

/// Real-valued projection of arbitrary coefficients.
fn realify(grid: &TorusGrid, c: &[Complex64]) -> Vec<Complex64> {
    from_physical(grid, &to_physical(grid, c))
}

/// Random-shell lacunary field on `T^2`.
pub fn lacunary_shells(grid: TorusGrid, alpha: f64, shells: u32, seed: u64) -> Result<TorusField> {
    check_alpha(alpha)?;
    check_shells(shells)?;
    if grid.d() != 2 {
        return Err(Error::InvalidParameter("shell lacunary fields are two-dimensional".into()));
    }
    let top = 1usize << shells;
    if top > grid.cutoff() + 1 {
        return Err(Error::BandwidthExceeded { cutoff: grid.cutoff(), amplitude: top as f64 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = TorusField::zeros(grid);
    for j in 1..=shells {
        let (lo, hi) = ((1u64 << (j - 1)) as f64, (1u64 << j) as f64);
        let mut psi = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (idx, c) in psi.iter_mut().enumerate() {
            let gr: f64 = rng.sample(StandardNormal);
            let gi: f64 = rng.sample(StandardNormal);
            let km = grid.k2(idx).sqrt();
            if km >= lo && km < hi && grid.in_band(idx) {
                *c = Complex64::new(gr, gi);
            }
        }
        let psi = realify(&grid, &psi);
        let mut shell = TorusField::zeros(grid);
        for (idx, p) in psi.iter().enumerate() {
            let k = grid.mode(idx);
            let i = Complex64::i();
            shell.comps[0][idx] = i * k[1] as f64 * p;
            shell.comps[1][idx] = -i * k[0] as f64 * p;
        }
        let energy: f64 = shell.comps.iter().flatten().map(|c| c.norm_sqr()).sum();
        if energy > 0.0 {
            u = u.axpy(2f64.powf(-alpha * j as f64) / energy.sqrt(), &shell);
        }
    }
    Ok(u)
}

/// Leray-projected Gaussian field with `|u_hat(k)| ~ |k|^{-gamma}` on the
/// dealiased band.
pub fn random_slope(grid: TorusGrid, gamma: f64, seed: u64) -> Result<TorusField> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = TorusField::zeros(grid);
    for c in &mut u.comps {
        for (idx, v) in c.iter_mut().enumerate() {
            let gr: f64 = rng.sample(StandardNormal);
            let gi: f64 = rng.sample(StandardNormal);
            let k2 = grid.k2(idx);
            if k2 > 0.0 && grid.in_band(idx) {
                *v = Complex64::new(gr, gi) * k2.powf(-gamma / 2.0);
            }
        }
    }
    for c in &mut u.comps {
        *c = realify(&grid, c);
    }
    let mut u = u.leray_project();
    u.dealias();
    Ok(u)
}

/// Steady cellular flow with streamfunction `cos x_1 cos x_2`.
pub fn taylor_green(grid: TorusGrid) -> TorusField {
    TorusField::from_fn(grid, |x| vec![-(x[0].cos() * x[1].sin()), x[0].sin() * x[1].cos()])
}

pub fn sphere_mode(basis: Arc<SphereBasis>, l: usize, m: i64) -> Result<SphereField> {
    SphereField::curl_mode(basis, l, m)
}

/// `sum_j 2^{-alpha j} Phi_{2^j, m_j} / ||Phi||` with seeded orders `m_j`.
pub fn sphere_lacunary(basis: Arc<SphereBasis>, alpha: f64, shells: u32, seed: u64) -> Result<SphereField> {
    check_alpha(alpha)?;
    check_shells(shells)?;
    let top = 1usize << shells;
    if top > basis.l_max() {
        return Err(Error::BandwidthExceeded { cutoff: basis.l_max(), amplitude: top as f64 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = SphereField::zeros(basis.clone());
    for j in 1..=shells {
        let l = 1usize << j;
        let m = rng.random_range(-(l as i64)..=(l as i64));
        let mode = SphereField::curl_mode(basis.clone(), l, m)?;
        u = u.axpy(2f64.powf(-alpha * j as f64) / mode.l2_norm(), &mode);
    }
    Ok(u)
}

/// Divergence-free random field with curl coefficients `~ l^{-decay}`.
pub fn sphere_random(basis: Arc<SphereBasis>, decay: f64, seed: u64) -> Result<SphereField> {
    if !decay.is_finite() {
        return Err(Error::InvalidParameter("decay must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = SphereField::zeros(basis.clone());
    for l in 1..=basis.l_max() {
        let amp = (l as f64).powf(-decay) / ((l * (l + 1)) as f64).sqrt();
        for m in 0..=(l as i64) {
            let gr: f64 = rng.sample(StandardNormal);
            let gi: f64 = rng.sample(StandardNormal);
            let c = if m == 0 { Complex64::new(gr, 0.0) } else { Complex64::new(gr, gi) } * amp;
            u.curl[vidx(l, m)] = c;
            if m != 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                u.curl[vidx(l, -m)] = c.conj() * sign;
            }
        }
    }
    Ok(u)
}
