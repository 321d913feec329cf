//! Pseudo-spectral incompressible Euler on the 2-torus (velocity form, RK4)
//! and the energy diagnostics run on its trajectories.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::random_slope;
use crate::spectral::SpectralField;
use crate::torus::{outer_product, TorusField, TorusGrid, TorusScalar};

/// `-P grad_j (v^j v^l)`.
pub fn nonlinearity(v: &TorusField) -> Result<TorusField> {
    Ok(outer_product(v, v)?.divergence_first().leray_project().scale(-1.0))
}

pub fn max_speed(v: &TorusField) -> f64 {
    let phys = v.to_physical();
    (0..v.grid.len())
        .map(|i| phys.iter().map(|c| c[i] * c[i]).sum::<f64>())
        .fold(0.0, f64::max)
        .sqrt()
}

/// `max|v| dt N / 2 pi`.
pub fn cfl_number(v: &TorusField, dt: f64) -> f64 {
    max_speed(v) * dt * v.grid.n() as f64 / (2.0 * PI)
}

pub const CFL_LIMIT: f64 = 0.5;

/// One RK4 step; the result is re-projected and dealiased.
pub fn euler_step(v: &TorusField, dt: f64) -> Result<TorusField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step {dt} must be positive")));
    }
    if v.grid.d() != 2 {
        return Err(Error::InvalidGrid("the Euler solver runs on the 2-torus".into()));
    }
    let cfl = cfl_number(v, dt);
    if cfl > CFL_LIMIT {
        return Err(Error::CflViolation(cfl));
    }
    let k1 = nonlinearity(v)?;
    let k2 = nonlinearity(&v.axpy(0.5 * dt, &k1))?;
    let k3 = nonlinearity(&v.axpy(0.5 * dt, &k2))?;
    let k4 = nonlinearity(&v.axpy(dt, &k3))?;
    let incr = k1.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4);
    let mut out = v.axpy(dt / 6.0, &incr).leray_project();
    out.dealias();
    Ok(out)
}

/// Solves `Delta p = -grad_j grad_l (v^j v^l)` with zero mean.
pub fn pressure(v: &TorusField) -> Result<TorusScalar> {
    let w = outer_product(v, v)?;
    let g = v.grid;
    let mut p = TorusScalar::zeros(g);
    for idx in 1..g.len() {
        let k = g.mode(idx);
        let k2 = g.k2(idx);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..2 {
            for l in 0..2 {
                acc += w.get(j, l)[idx] * (k[j] * k[l]) as f64;
            }
        }
        p.coeffs[idx] = -acc / k2;
    }
    Ok(p)
}

/// Smooth divergence-free start: a `|k|^{-2}` Gaussian field, heat-smoothed
/// at `s = 1/64` and scaled to unit RMS speed.
pub fn random_initial(grid: TorusGrid, seed: u64) -> Result<TorusField> {
    let u = random_slope(grid, 2.0, seed)?.heat(1.0 / 64.0);
    let rms = u.l2_norm() / grid.volume().sqrt();
    Ok(u.scale(1.0 / rms))
}

#[derive(Clone, Debug)]
pub struct EulerTrajectory {
    pub n: usize,
    pub dt: f64,
    /// Steps between snapshots.
    pub stride: usize,
    pub times: Vec<f64>,
    pub velocities: Vec<TorusField>,
    pub pressures: Vec<TorusScalar>,
    pub energies: Vec<f64>,
    pub dealias: bool,
    /// False when a CFL violation cut the run short.
    pub valid: bool,
    pub failure: Option<String>,
}

impl EulerTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Spacing of the snapshot times.
    pub fn snapshot_spacing(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn energy_drift(&self) -> f64 {
        match (self.energies.first(), self.energies.last()) {
            (Some(&e0), Some(&e1)) if e0 > 0.0 => (e1 - e0).abs() / e0,
            _ => 0.0,
        }
    }

    pub fn max_divergence(&self) -> f64 {
        self.velocities
            .iter()
            .map(|v| v.divergence().l2_norm() / v.l2_norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

fn energy(v: &TorusField) -> f64 {
    0.5 * v.inner(v)
}

pub fn run(initial: &TorusField, t_final: f64, dt: f64, stride: usize) -> Result<EulerTrajectory> {
    if !(dt > 0.0) || !(t_final >= 0.0) || stride == 0 {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0, T >= 0 and stride >= 1 (dt = {dt}, T = {t_final}, stride = {stride})"
        )));
    }
    initial.check_bandwidth()?;
    let steps = (t_final / dt).round() as usize;
    if ((steps as f64) * dt - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::InvalidParameter(format!("T = {t_final} is not a multiple of dt = {dt}")));
    }
    let mut traj = EulerTrajectory {
        n: initial.grid.n(),
        dt,
        stride,
        times: vec![0.0],
        velocities: vec![initial.clone()],
        pressures: vec![pressure(initial)?],
        energies: vec![energy(initial)],
        dealias: true,
        valid: true,
        failure: None,
    };
    let mut v = initial.clone();
    for step in 1..=steps {
        v = match euler_step(&v, dt) {
            Ok(next) => next,
            Err(e @ Error::CflViolation(_)) => {
                traj.valid = false;
                traj.failure = Some(format!("step {step}: {e}"));
                return Ok(traj);
            }
            Err(e) => return Err(e),
        };
        if step % stride == 0 {
            traj.times.push(step as f64 * dt);
            traj.pressures.push(pressure(&v)?);
            traj.energies.push(energy(&v));
            traj.velocities.push(v.clone());
        }
    }
    Ok(traj)
}

/// `eta(t) = (1 - x^2)^power` on `[t0, t1]`, `x` the rescaled time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeBump {
    pub t0: f64,
    pub t1: f64,
    pub power: i32,
}

impl TimeBump {
    /// Bump on the middle 80% of `[0, t_final]`.
    pub fn inside(t_final: f64) -> Self {
        Self { t0: 0.1 * t_final, t1: 0.9 * t_final, power: 4 }
    }

    fn x(&self, t: f64) -> f64 {
        (2.0 * t - self.t0 - self.t1) / (self.t1 - self.t0)
    }

    pub fn value(&self, t: f64) -> f64 {
        let x = self.x(t);
        if x.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - x * x).powi(self.power)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let x = self.x(t);
        if x.abs() >= 1.0 {
            return 0.0;
        }
        let p = self.power as f64;
        p * (1.0 - x * x).powi(self.power - 1) * (-2.0 * x) * 2.0 / (self.t1 - self.t0)
    }

    fn check(&self, traj: &EulerTrajectory) -> Result<()> {
        let end = traj.times.last().copied().unwrap_or(0.0);
        if !(self.t0 > 0.0 && self.t1 > self.t0 && self.t1 < end) || self.power < 3 {
            return Err(Error::InvalidParameter(format!(
                "time bump {self:?} must be C^2 and sit strictly inside [0, {end}]"
            )));
        }
        Ok(())
    }
}

/// Trapezoid weights on the snapshot times.
fn trapezoid(traj: &EulerTrajectory) -> Vec<f64> {
    let h = traj.snapshot_spacing();
    let n = traj.len();
    (0..n).map(|i| if i == 0 || i + 1 == n { 0.5 * h } else { h }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub s: f64,
    /// `-int eta' |S v|^2 / 2`.
    pub lhs: f64,
    /// `int eta int (v^j v^l grad_j S^2 v_l - S v^j S v^l grad_j S v_l)`.
    pub rhs: f64,
    pub difference: f64,
    pub relative: f64,
    /// `int int p grad^l (eta S^2 v_l)`.
    pub pressure_term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentityReport {
    pub bump: TimeBump,
    pub rows: Vec<IdentityRow>,
    pub max_relative: f64,
    pub max_pressure: f64,
}

fn scalar_inner(a: &TorusScalar, b: &TorusScalar) -> f64 {
    a.grid.volume() * a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x * y.conj()).re).sum::<f64>()
}

/// Both sides of the smoothed energy identity per heat time. The LHS comes from
/// the coefficient energies of `S[s] v`, the RHS from grid products, so the two
/// agree only up to time quadrature and integrator error.
pub fn smoothed_energy_identity_report(
    traj: &EulerTrajectory,
    s_values: &[f64],
    eta: TimeBump,
) -> Result<EnergyIdentityReport> {
    eta.check(traj)?;
    if traj.velocities.is_empty() {
        return Err(Error::EmptySet);
    }
    let weights = trapezoid(traj);
    let g = traj.velocities[0].grid;
    let vphys: Vec<Vec<Vec<f64>>> = traj.velocities.iter().map(|v| v.to_physical()).collect();
    // The constant shift integrates to zero against eta' and keeps the
    // quadrature error relative to the variation of the energy.
    let centre = (0..traj.len())
        .min_by(|&a, &b| {
            let mid = 0.5 * (eta.t0 + eta.t1);
            (traj.times[a] - mid).abs().total_cmp(&(traj.times[b] - mid).abs())
        })
        .unwrap_or(0);
    let mut rows = Vec::with_capacity(s_values.len());
    for &s in s_values {
        if !(s >= 0.0) {
            return Err(Error::NegativeHeatTime(s));
        }
        let e_ref = energy(&traj.velocities[centre].heat(s));
        let (mut lhs, mut rhs, mut pressure_term) = (0.0, 0.0, 0.0);
        for (i, v) in traj.velocities.iter().enumerate() {
            let (t, w) = (traj.times[i], weights[i]);
            let (a, da) = (eta.value(t), eta.derivative(t));
            if a == 0.0 && da == 0.0 {
                continue;
            }
            let sv = v.heat(s);
            let s2v = sv.heat(s);
            lhs -= w * da * (energy(&sv) - e_ref);
            let grad = s2v.gradient().to_physical();
            let vp = &vphys[i];
            let mut cubic = 0.0;
            for q in 0..g.len() {
                for j in 0..2 {
                    for l in 0..2 {
                        cubic += vp[j][q] * vp[l][q] * grad[j * 2 + l][q];
                    }
                }
            }
            cubic *= g.cell_volume();
            rhs += w * a * (cubic - sv.self_transport_pairing());
            pressure_term += w * a * scalar_inner(&traj.pressures[i], &s2v.divergence());
        }
        let difference = lhs - rhs;
        let relative = if lhs != 0.0 { difference.abs() / lhs.abs() } else { difference.abs() };
        rows.push(IdentityRow { s, lhs, rhs, difference, relative, pressure_term });
    }
    let max_relative = rows.iter().map(|r| r.relative).fold(0.0, f64::max);
    let max_pressure = rows.iter().map(|r| r.pressure_term.abs()).fold(0.0, f64::max);
    Ok(EnergyIdentityReport { bump: eta, rows, max_relative, max_pressure })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Cos,
    Sin,
}

/// Spatial part `trig(k . x) e_comp` of a test form `eta(t) trig(k . x) e_comp`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestForm {
    pub k: [i64; 2],
    pub trig: Trig,
    pub comp: usize,
}

impl TestForm {
    pub fn field(&self, grid: TorusGrid) -> TorusField {
        let f = *self;
        TorusField::from_fn(grid, move |x| {
            let ph = f.k[0] as f64 * x[0] + f.k[1] as f64 * x[1];
            let val = match f.trig {
                Trig::Cos => ph.cos(),
                Trig::Sin => ph.sin(),
            };
            let mut out = vec![0.0; 2];
            out[f.comp] = val;
            out
        })
    }
}

/// Both trig parts and both components of every `k` with `0 < |k|_inf <= kmax`,
/// one of each `+-k` pair.
pub fn low_mode_test_forms(kmax: i64) -> Vec<TestForm> {
    let mut out = Vec::new();
    for k0 in 0..=kmax {
        for k1 in -kmax..=kmax {
            if (k0 == 0 && k1 <= 0) || k1.abs() > kmax {
                continue;
            }
            for trig in [Trig::Cos, Trig::Sin] {
                for comp in 0..2 {
                    out.push(TestForm { k: [k0, k1], trig, comp });
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakFormResidual {
    /// `max |int int v . d_t w + v^j v^l grad_j w_l + p div w|` over the family,
    /// divided by the largest single-term magnitude.
    pub residual: f64,
    pub absolute: f64,
    pub scale: f64,
    pub worst: Option<TestForm>,
}

pub fn weak_form_residual(traj: &EulerTrajectory, forms: &[TestForm], eta: TimeBump) -> Result<WeakFormResidual> {
    eta.check(traj)?;
    let Some(v0) = traj.velocities.first() else {
        return Err(Error::EmptySet);
    };
    let g = v0.grid;
    let weights = trapezoid(traj);
    let fields: Vec<TorusField> = forms.iter().map(|f| f.field(g)).collect();
    let divs: Vec<TorusScalar> = fields.iter().map(|w| w.divergence()).collect();
    let mut sums = vec![[0.0f64; 3]; forms.len()];
    for (i, v) in traj.velocities.iter().enumerate() {
        let (t, w) = (traj.times[i], weights[i]);
        let (a, da) = (eta.value(t), eta.derivative(t));
        if a == 0.0 && da == 0.0 {
            continue;
        }
        // int v^j v^l grad_j w_l = -<grad_j (v^j v^l), w_l>, exact on the low modes.
        let tr = outer_product(v, v)?.divergence_first();
        for (acc, (f, d)) in sums.iter_mut().zip(fields.iter().zip(&divs)) {
            acc[0] += w * da * v.inner(f);
            acc[1] -= w * a * tr.inner(f);
            acc[2] += w * a * scalar_inner(&traj.pressures[i], d);
        }
    }
    let scale = sums.iter().flat_map(|t| t.iter().map(|x| x.abs())).fold(0.0, f64::max);
    let (mut absolute, mut worst) = (0.0, None);
    for (t, f) in sums.iter().zip(forms) {
        let r = (t[0] + t[1] + t[2]).abs();
        if r > absolute || worst.is_none() {
            absolute = r;
            worst = Some(*f);
        }
    }
    let residual = if scale > 0.0 { absolute / scale } else { absolute };
    Ok(WeakFormResidual { residual, absolute, scale, worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::taylor_green;
    use proptest::prelude::*;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(2, n).unwrap()
    }

    #[test]
    fn rest_state() {
        let z = TorusField::zeros(grid(16));
        assert_eq!(euler_step(&z, 0.1).unwrap(), z);
        let t = run(&z, 0.5, 0.1, 1).unwrap();
        assert!(t.valid);
        assert_eq!(t.len(), 6);
        assert!(t.velocities.iter().all(|v| v.l2_norm() == 0.0));
        let bump = TimeBump::inside(0.5);
        assert_eq!(weak_form_residual(&t, &low_mode_test_forms(1), bump).unwrap().residual, 0.0);
    }

    #[test]
    fn taylor_green_steady() {
        let g = grid(32);
        let v = taylor_green(g);
        assert!(nonlinearity(&v).unwrap().l2_norm() < 1e-12);
        let v1 = euler_step(&v, 0.01).unwrap();
        assert!(v1.axpy(-1.0, &v).l2_norm() < 1e-12);
        let t = run(&v, 1.0, 0.01, 10).unwrap();
        assert!(t.velocities.last().unwrap().axpy(-1.0, &v).l2_norm() < 1e-8);
        // p = -(cos 2x_1 + cos 2x_2) / 4 for this flow.
        let p = pressure(&v).unwrap();
        let exact = TorusScalar::from_fn(g, |x| -((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) / 4.0);
        let diff: f64 = p.coeffs.iter().zip(&exact.coeffs).map(|(a, b)| (a - b).norm()).sum();
        assert!(diff < 1e-12, "{diff}");
        let bump = TimeBump::inside(1.0);
        let rep = smoothed_energy_identity_report(&t, &[0.01, 0.1], bump).unwrap();
        for r in &rep.rows {
            assert!(r.lhs.abs() < 1e-8 && r.rhs.abs() < 1e-8, "{r:?}");
        }
        let wf = weak_form_residual(&t, &low_mode_test_forms(2), bump).unwrap();
        assert!(wf.residual < 1e-8, "{wf:?}");
    }

    #[test]
    fn pressure_oracle() {
        // Independent route: repeated scalar gradients of the product components.
        let g = grid(32);
        let v = random_initial(g, 3).unwrap();
        let p = pressure(&v).unwrap();
        let w = outer_product(&v, &v).unwrap();
        let mut total = TorusScalar::zeros(g);
        for j in 0..2 {
            for l in 0..2 {
                let wjl = TorusScalar { grid: g, coeffs: w.get(j, l).to_vec() };
                let dj = TorusScalar { grid: g, coeffs: wjl.gradient().comps[j].clone() };
                let djl = dj.gradient();
                total.coeffs.iter_mut().zip(&djl.comps[l]).for_each(|(a, b)| *a += b);
            }
        }
        let lap = p.laplacian();
        let err: f64 = lap.coeffs.iter().zip(&total.coeffs).map(|(a, b)| (a + b).norm()).sum();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn step_checks() {
        let g = grid(16);
        let v = taylor_green(g).scale(100.0);
        assert!(matches!(euler_step(&v, 0.1), Err(Error::CflViolation(_))));
        let t = run(&v, 1.0, 0.1, 1).unwrap();
        assert!(!t.valid && t.len() == 1 && t.failure.is_some());
        assert!(run(&v, 1.0, 0.0, 1).is_err());
        assert!(run(&v, 1.0, 0.3, 1).is_err());
    }

    #[test]
    fn random_run_small() {
        let g = grid(32);
        let v = random_initial(g, 1).unwrap();
        let e0 = energy(&v);
        let v1 = euler_step(&v, 1e-3).unwrap();
        assert!((energy(&v1) - e0).abs() / e0 < 1e-12);
        let t = run(&v, 0.5, 2e-3, 5).unwrap();
        assert!(t.energy_drift() < 1e-8, "{}", t.energy_drift());
        assert!(t.max_divergence() < 1e-10);
        let bump = TimeBump::inside(0.5);
        let rep = smoothed_energy_identity_report(&t, &[0.05, 0.2], bump).unwrap();
        for r in &rep.rows {
            assert!(r.relative < 1e-3, "{r:?}");
        }
        assert!(rep.max_pressure < 1e-10);
        let wf = weak_form_residual(&t, &low_mode_test_forms(2), bump).unwrap();
        assert!(wf.residual < 1e-5, "{wf:?}");
    }

    #[test]
    fn bump_derivative() {
        let b = TimeBump { t0: 0.2, t1: 1.4, power: 4 };
        for t in [0.3, 0.7, 0.8, 1.3] {
            let h = 1e-6;
            let fd = (b.value(t + h) - b.value(t - h)) / (2.0 * h);
            assert!((fd - b.derivative(t)).abs() < 1e-6);
        }
        assert_eq!(b.value(0.1), 0.0);
        assert_eq!(low_mode_test_forms(1).len(), 16);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn step_preserves_divergence_and_energy(seed in 0u64..1000) {
            let v = random_initial(grid(16), seed).unwrap();
            let v1 = euler_step(&v, 1e-3).unwrap();
            prop_assert!(v1.divergence().l2_norm() < 1e-12);
            prop_assert!((energy(&v1) - energy(&v)).abs() < 1e-12 * energy(&v));
        }
    }
}
