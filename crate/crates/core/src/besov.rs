//! Heat-flow Besov norms, the `c(N)` vanishing test, and the
//! Littlewood-Paley comparison on the torus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{last_decade, log_log_fit, middle_decade, LinearFit};
use crate::schedule::HeatSchedule;
use crate::spectral::SpectralField;
use crate::fields::{lacunary, single_mode};
use crate::torus::{TorusField, TorusGrid};

/// Summability of the heat-time integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BesovMode {
    Finite(f64),
    Infinity,
    /// Same value as `Infinity`, plus the vanishing flag.
    CN,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovSpec {
    pub alpha: f64,
    pub p: f64,
    pub mode: BesovMode,
}

impl BesovSpec {
    pub fn new(alpha: f64, p: f64, mode: BesovMode) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} not in (0, 1)")));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p = {p} must be finite and >= 1")));
        }
        if let BesovMode::Finite(r) = mode {
            if !(r >= 1.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("r = {r} must be finite and >= 1")));
            }
        }
        Ok(Self { alpha, p, mode })
    }
}

/// Samples of `s^{(1-alpha)/2} ||grad e^{s Delta} u||_p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UCurve {
    pub alpha: f64,
    pub p: f64,
    pub s: Vec<f64>,
    pub values: Vec<f64>,
}

impl UCurve {
    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn u_curve<F: SpectralField>(u: &F, alpha: f64, p: f64, schedule: &HeatSchedule) -> UCurve {
    let values = schedule
        .values
        .iter()
        .map(|&s| s.powf((1.0 - alpha) / 2.0) * u.heat(s).grad_lp_norm(p))
        .collect();
    UCurve { alpha, p, s: schedule.values.clone(), values }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovNorm {
    pub lp_part: f64,
    pub heat_part: f64,
    pub total: f64,
    pub curve: UCurve,
    /// Set in `CN` mode.
    pub vanishing: Option<bool>,
}

fn check_density(schedule: &HeatSchedule) -> Result<()> {
    let per_decade = schedule.points_per_decade();
    if schedule.len() < 2 || per_decade < 8.0 - 1e-9 {
        return Err(Error::ScheduleTooCoarse { per_decade });
    }
    Ok(())
}

/// `(int f^r ds/s)^{1/r}` by the trapezoid rule in `log s`.
fn lr_dsds(s: &[f64], f: &[f64], r: f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..s.len() {
        let h = (s[i - 1] / s[i]).ln().abs();
        acc += 0.5 * h * (f[i - 1].powf(r) + f[i].powf(r));
    }
    acc.powf(1.0 / r)
}

pub fn heat_besov_norm<F: SpectralField>(u: &F, spec: &BesovSpec, schedule: &HeatSchedule) -> Result<BesovNorm> {
    check_density(schedule)?;
    let curve = u_curve(u, spec.alpha, spec.p, schedule);
    let lp_part = u.lp_norm(spec.p);
    let (heat_part, vanishing) = match spec.mode {
        BesovMode::Finite(r) => (lr_dsds(&curve.s, &curve.values, r), None),
        BesovMode::Infinity => (curve.max(), None),
        BesovMode::CN => (curve.max(), Some(cn_from_curve(curve.clone()).vanishing)),
    };
    Ok(BesovNorm { lp_part, heat_part, total: lp_part + heat_part, curve, vanishing })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnDiagnostic {
    pub curve: UCurve,
    pub value_at_min: f64,
    /// Last decade decreases monotonically towards `s_min` and ends below `0.2 max`.
    pub monotone_rule: bool,
    /// Log-log slope over the last decade (positive means decay as `s -> 0`).
    pub last_decade_fit: Option<LinearFit>,
    pub vanishing: bool,
}

/// Vanishing if the monotone rule holds, or if the last-decade log-log slope
/// is positive by more than three standard errors.
pub fn cn_diagnostic<F: SpectralField>(u: &F, alpha: f64, p: f64, schedule: &HeatSchedule) -> CnDiagnostic {
    cn_from_curve(u_curve(u, alpha, p, schedule))
}

fn cn_from_curve(curve: UCurve) -> CnDiagnostic {
    let value_at_min = curve.values.last().copied().unwrap_or(0.0);
    let max = curve.max();
    if max == 0.0 {
        return CnDiagnostic { curve, value_at_min, monotone_rule: true, last_decade_fit: None, vanishing: true };
    }
    let idx = last_decade(&curve.s);
    let tail: Vec<f64> = idx.iter().map(|&i| curve.values[i]).collect();
    // Samples are ordered by decreasing s.
    let monotone = tail.windows(2).all(|w| w[1] < w[0]);
    let monotone_rule = monotone && value_at_min < 0.2 * max;
    let last_decade_fit = log_log_fit(&curve.s, &curve.values, &idx);
    let trend = last_decade_fit
        .as_ref()
        .map(|f| f.slope > 3.0 * f.slope_stderr)
        .unwrap_or(false);
    CnDiagnostic { curve, value_at_min, monotone_rule, last_decade_fit, vanishing: monotone_rule || trend }
}

fn smoothstep5(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// Radial cutoff: 1 on `[0, 1/2]`, 0 on `[1, inf)`, quintic in `log2 rho` between.
pub fn lp_cutoff(rho: f64) -> f64 {
    if rho <= 0.5 {
        1.0
    } else if rho >= 1.0 {
        0.0
    } else {
        1.0 - smoothstep5(rho.log2() + 1.0)
    }
}

/// Multiplier of the shell `Delta_k` at frequency magnitude `xi`, `k >= -1`.
pub fn lp_multiplier(k: i32, xi: f64) -> f64 {
    if k < 0 {
        lp_cutoff(xi)
    } else {
        let scale = 2f64.powi(k);
        lp_cutoff(xi / (2.0 * scale)) - lp_cutoff(xi / scale)
    }
}

/// Highest shell needed so that the shells partition every frequency on the grid.
pub fn lp_top_shell(u: &TorusField) -> i32 {
    let g = u.grid;
    let xi_max = (g.d() as f64).sqrt() * (g.n() / 2) as f64;
    xi_max.log2().ceil() as i32
}

pub fn lp_shell(u: &TorusField, k: i32) -> TorusField {
    u.map_multiplier(|k2| lp_multiplier(k, k2.sqrt()))
}

/// `||Delta_{-1} u||_p + || 2^{alpha k} ||Delta_k u||_p ||_{l^r(k >= 0)}`.
pub fn lp_besov_norm(u: &TorusField, spec: &BesovSpec) -> f64 {
    let low = lp_shell(u, -1).lp_norm(spec.p);
    let terms: Vec<f64> = (0..=lp_top_shell(u))
        .map(|k| 2f64.powf(spec.alpha * k as f64) * lp_shell(u, k).lp_norm(spec.p))
        .collect();
    let high = match spec.mode {
        BesovMode::Finite(r) => terms.iter().map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r),
        BesovMode::Infinity | BesovMode::CN => terms.iter().cloned().fold(0.0, f64::max),
    };
    low + high
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub field: String,
    pub heat_norm: f64,
    pub lp_norm: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub spec: BesovSpec,
    pub rows: Vec<EquivalenceRow>,
    /// Smallest `C` with every ratio in `[1/C, C]`.
    pub constant: f64,
    /// `max ratio / min ratio`.
    pub band: f64,
}

/// Width of the ratio band accepted across the field set.
pub const EQUIVALENCE_BAND: f64 = 4.0;

impl EquivalenceReport {
    pub fn within_band(&self) -> bool {
        self.band <= EQUIVALENCE_BAND
    }
}

pub fn equivalence_report(
    fields: &[(String, TorusField)],
    spec: &BesovSpec,
    schedule: &HeatSchedule,
) -> Result<EquivalenceReport> {
    if fields.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut rows = Vec::with_capacity(fields.len());
    for (name, u) in fields {
        let heat_norm = heat_besov_norm(u, spec, schedule)?.total;
        let lp_norm = lp_besov_norm(u, spec);
        if lp_norm == 0.0 {
            return Err(Error::ZeroField);
        }
        rows.push(EquivalenceRow { field: name.clone(), heat_norm, lp_norm, ratio: heat_norm / lp_norm });
    }
    let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(EquivalenceReport { spec: *spec, rows, constant: hi.max(1.0 / lo), band: hi / lo })
}

/// Single modes along an axis and a diagonal, plus one lacunary field, all
/// within the dealiased band of `grid` (2-torus).
pub fn standard_field_set(grid: TorusGrid) -> Result<Vec<(String, TorusField)>> {
    const MODES: [[i64; 2]; 10] = [[1, 0], [2, 0], [4, 0], [8, 0], [16, 0], [32, 0], [3, 4], [6, 8], [12, 16], [24, 32]];
    let cutoff = grid.cutoff() as i64;
    let mut out = Vec::new();
    for k in MODES.iter().filter(|k| k[0] <= cutoff && k[1] <= cutoff) {
        out.push((format!("single_mode_{}_{}", k[0], k[1]), single_mode(grid, k)?));
    }
    let shells = (cutoff as f64).log2().floor().min(6.0) as u32;
    out.push(("lacunary".into(), lacunary(grid, 0.5, shells, 1)?));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub s: f64,
    /// `s^{1/2} 2^k`.
    pub y: f64,
    /// Left side over the bracketed right side of the shell-to-heat estimate.
    pub ratio_heat: f64,
    /// Same for the heat-to-shell estimate.
    pub ratio_shell: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub k: i32,
    pub alpha: f64,
    pub p: f64,
    pub rows: Vec<KernelRow>,
    /// Smallest admissible constants over the grid.
    pub c_heat: f64,
    pub c_shell: f64,
}

fn safe_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Smallest constants in
/// `2^{ak} s ||Delta_k d_s e^{s Delta} u||_p <= C min{y^a, y^{a-1}} s^{(1-a)/2} ||grad e^{s Delta / 2} u||_p`
/// and
/// `s^{(1-a)/2} ||grad e^{s Delta} Delta_k u||_p <= C min{y^{1-a}, y^{-a}} 2^{ak} ||Delta_k u||_p`,
/// `y = s^{1/2} 2^k`, over the given heat times.
pub fn kernel_bounds_check(u: &TorusField, k: i32, s_grid: &[f64], alpha: f64, p: f64) -> KernelReport {
    let shell = lp_shell(u, k);
    let shell_norm = shell.lp_norm(p);
    let two_ak = 2f64.powf(alpha * k as f64);
    let mut rows = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let y = s.sqrt() * 2f64.powi(k);
        let heat = u.heat(s);
        let lhs1 = two_ak * s * lp_shell(&heat.laplacian(), k).lp_norm(p);
        let rhs1 = y.powf(alpha).min(y.powf(alpha - 1.0))
            * s.powf((1.0 - alpha) / 2.0)
            * u.heat(s / 2.0).grad_lp_norm(p);
        let lhs2 = s.powf((1.0 - alpha) / 2.0) * shell.heat(s).grad_lp_norm(p);
        let rhs2 = y.powf(1.0 - alpha).min(y.powf(-alpha)) * two_ak * shell_norm;
        rows.push(KernelRow { s, y, ratio_heat: safe_ratio(lhs1, rhs1), ratio_shell: safe_ratio(lhs2, rhs2) });
    }
    let c_heat = rows.iter().map(|r| r.ratio_heat).fold(0.0, f64::max);
    let c_shell = rows.iter().map(|r| r.ratio_shell).fold(0.0, f64::max);
    KernelReport { k, alpha, p, rows, c_heat, c_shell }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityFit {
    pub alpha_hat: f64,
    pub fit: LinearFit,
    pub s_range: (f64, f64),
    /// `alpha_hat >= 0.95`: the curve is in the smooth regime and the
    /// estimate only bounds the exponent from below.
    pub smooth_saturated: bool,
}

/// Threshold for [`RegularityFit::smooth_saturated`].
pub const SMOOTH_SATURATION: f64 = 0.95;

/// `alpha_hat = 1 + 2 * slope` of `log ||grad U(s)||_p` against `log s` over
/// the middle decade of the schedule.
pub fn regularity_fit<F: SpectralField>(u: &F, p: f64, schedule: &HeatSchedule) -> Result<RegularityFit> {
    let decades = schedule.decades();
    if decades < 1.0 - 1e-9 {
        return Err(Error::CurveTooFlat { decades });
    }
    let g: Vec<f64> = schedule.values.iter().map(|&s| u.heat(s).grad_lp_norm(p)).collect();
    let idx = middle_decade(&schedule.values);
    let fit = log_log_fit(&schedule.values, &g, &idx).ok_or(Error::ZeroField)?;
    let alpha_hat = 1.0 + 2.0 * fit.slope;
    let s_range = (schedule.values[*idx.last().unwrap_or(&0)], schedule.values[idx[0]]);
    Ok(RegularityFit { alpha_hat, fit, s_range, smooth_saturated: alpha_hat >= SMOOTH_SATURATION })
}

/// Schedule for [`regularity_fit`] on a lacunary field with `shells` shells:
/// `s` from `2^{-2J}/2` up a little over one decade, ratio `2^{-1/4}`.
pub fn lacunary_regularity_schedule(shells: u32) -> Result<HeatSchedule> {
    let s_min = 0.5 * 4f64.powi(-(shells as i32));
    HeatSchedule::new(s_min, s_min * 2f64.powf(3.5), 2f64.powf(-0.25))
}

/// Bessel-potential norm `||(1 - Delta)^{alpha/2} u||_p`.
pub fn sobolev_norm(u: &TorusField, alpha: f64, p: f64) -> f64 {
    u.map_multiplier(|k2| (1.0 + k2).powf(alpha / 2.0)).lp_norm(p)
}

/// Shared constant `max heat_part / sobolev_norm` over the field set.
pub fn sobolev_constant(
    fields: &[(String, TorusField)],
    alpha: f64,
    p: f64,
    schedule: &HeatSchedule,
) -> Result<f64> {
    if fields.is_empty() {
        return Err(Error::EmptySet);
    }
    let spec = BesovSpec::new(alpha, p, BesovMode::Infinity)?;
    let mut c = 0.0f64;
    for (_, u) in fields {
        let heat = heat_besov_norm(u, &spec, schedule)?.heat_part;
        c = c.max(safe_ratio(heat, sobolev_norm(u, alpha, p)));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{lacunary, random_slope, single_mode};
    use crate::torus::TorusGrid;
    use proptest::prelude::*;
    use std::f64::consts::{E, PI};

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(2, n).unwrap()
    }

    /// `||cos||_{L^3(T^2)}`: the mean of `|cos|^3` is `4 / (3 pi)`.
    fn cos_l3() -> f64 {
        (4.0 * PI * PI * 4.0 / (3.0 * PI)).cbrt()
    }

    fn analytic_heat_part(alpha: f64, k: f64) -> f64 {
        let a = (1.0 - alpha) / 2.0;
        (a / E).powf(a) * k.powf(alpha) * cos_l3()
    }

    fn deep_schedule() -> HeatSchedule {
        HeatSchedule::new(2f64.powi(-16), 1.0, 2f64.powf(-0.25)).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(BesovSpec::new(1.0, 3.0, BesovMode::Infinity).is_err());
        assert!(BesovSpec::new(0.5, 0.5, BesovMode::Infinity).is_err());
        assert!(BesovSpec::new(0.5, 3.0, BesovMode::Finite(0.5)).is_err());
        assert!(BesovSpec::new(0.5, 3.0, BesovMode::CN).is_ok());
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let spec = BesovSpec::new(0.5, 3.0, BesovMode::Infinity).unwrap();
        let z = TorusField::zeros(grid(32));
        assert_eq!(heat_besov_norm(&z, &spec, &HeatSchedule::standard()).unwrap().total, 0.0);
        assert_eq!(lp_besov_norm(&z, &spec), 0.0);
    }

    #[test]
    fn coarse_schedule_is_rejected() {
        let spec = BesovSpec::new(0.5, 3.0, BesovMode::Infinity).unwrap();
        let coarse = HeatSchedule::new(2f64.powi(-12), 1.0, 2f64.powf(-0.5)).unwrap();
        let u = single_mode(grid(32), &[1, 0]).unwrap();
        assert!(matches!(heat_besov_norm(&u, &spec, &coarse), Err(Error::ScheduleTooCoarse { .. })));
    }

    #[test]
    fn single_mode_matches_calculus_and_scales() {
        let sched = deep_schedule();
        let alpha = 1.0 / 3.0;
        let spec = BesovSpec::new(alpha, 3.0, BesovMode::Infinity).unwrap();
        let mut prev = None;
        for j in 3..=6 {
            let k = 1i64 << j;
            let u = single_mode(grid(512), &[k, 0]).unwrap();
            let h = heat_besov_norm(&u, &spec, &sched).unwrap().heat_part;
            let want = analytic_heat_part(alpha, k as f64);
            assert!((h / want - 1.0).abs() < 0.05, "j = {j}: {h} vs {want}");
            if let Some(p) = prev {
                let r: f64 = h / p;
                assert!((r / 2f64.powf(alpha) - 1.0).abs() < 0.05, "ratio {r}");
            }
            prev = Some(h);
        }
    }

    #[test]
    fn cn_flags() {
        let sched = HeatSchedule::standard();
        let smooth = single_mode(grid(64), &[1, 2]).unwrap();
        assert!(cn_diagnostic(&smooth, 1.0 / 3.0, 3.0, &sched).vanishing);
        let lowest = single_mode(grid(64), &[1, 0]).unwrap();
        let d = cn_diagnostic(&lowest, 1.0 / 3.0, 3.0, &sched);
        assert!(d.vanishing && d.monotone_rule);
        // In L^2 the shells do not interfere, so the curve does not depend on the phases.
        for alpha in [0.4, 0.6] {
            for seed in [0, 7] {
                let u = lacunary(grid(256), alpha, 6, seed).unwrap();
                assert!(!cn_diagnostic(&u, alpha, 2.0, &sched).vanishing, "alpha {alpha}");
                assert!(cn_diagnostic(&u, alpha - 0.1, 2.0, &sched).vanishing, "alpha {alpha} - 0.1");
            }
        }
        let spec = BesovSpec::new(0.5, 3.0, BesovMode::CN).unwrap();
        assert_eq!(heat_besov_norm(&smooth, &spec, &sched).unwrap().vanishing, Some(true));
    }

    #[test]
    fn shells_partition_unity() {
        let u = TorusField::zeros(grid(64));
        let top = lp_top_shell(&u);
        for kx in -32i64..=32 {
            for ky in -32i64..=32 {
                let xi = ((kx * kx + ky * ky) as f64).sqrt();
                let s: f64 = (-1..=top).map(|k| lp_multiplier(k, xi)).sum();
                assert!((s - 1.0).abs() < 1e-14, "{kx} {ky}: {s}");
            }
        }
        assert_eq!(lp_cutoff(0.5), 1.0);
        assert_eq!(lp_cutoff(1.0), 0.0);
        assert!((lp_cutoff(2f64.powf(-0.5)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lp_norm_examples() {
        let spec = BesovSpec::new(0.5, 3.0, BesovMode::Infinity).unwrap();
        let g = grid(64);
        let c = TorusField::from_fn(g, |_| vec![0.3, -0.4]);
        assert!((lp_besov_norm(&c, &spec) - c.lp_norm(3.0)).abs() < 1e-13);
        let u = single_mode(g, &[8, 0]).unwrap();
        assert!((lp_besov_norm(&u, &spec) - 2f64.powf(1.5) * u.lp_norm(3.0)).abs() < 1e-12);
        // |xi| = 5 splits between shells 2 and 3 with the multiplier weights.
        let v = single_mode(g, &[3, 4]).unwrap();
        let want = (2f64.powf(1.0) * lp_multiplier(2, 5.0)).max(2f64.powf(1.5) * lp_multiplier(3, 5.0)) * v.lp_norm(3.0);
        assert!((lp_besov_norm(&v, &spec) - want).abs() < 1e-12);
    }

    #[test]
    fn equivalence_examples() {
        let spec = BesovSpec::new(1.0 / 3.0, 3.0, BesovMode::Infinity).unwrap();
        let sched = HeatSchedule::standard();
        assert!(matches!(equivalence_report(&[], &spec, &sched), Err(Error::EmptySet)));
        let mut fields = standard_field_set(grid(256)).unwrap();
        assert_eq!(fields.len(), 11);
        let lacunary_field = fields.pop().unwrap();
        let modes = equivalence_report(&fields, &spec, &sched).unwrap();
        assert!(modes.within_band(), "band {}", modes.band);
        fields.push(lacunary_field);
        let all = equivalence_report(&fields, &spec, &sched).unwrap();
        let lac = all.rows.last().unwrap();
        assert!(lac.heat_norm.is_finite() && lac.lp_norm.is_finite());
        assert!(all.within_band(), "band {}", all.band);
    }

    #[test]
    fn kernel_constants() {
        let u = single_mode(grid(256), &[32, 0]).unwrap();
        let coarse: Vec<f64> = (1..=32).map(|i| i as f64 * 2f64.powi(-10)).collect();
        let fine: Vec<f64> = (2..=64).map(|i| i as f64 * 2f64.powi(-11)).collect();
        let a = kernel_bounds_check(&u, 5, &coarse, 1.0 / 3.0, 3.0);
        let b = kernel_bounds_check(&u, 5, &fine, 1.0 / 3.0, 3.0);
        assert!(a.c_heat <= 8.0 && a.c_shell <= 8.0);
        assert!((a.c_heat / b.c_heat - 1.0).abs() < 0.1);
        assert!((a.c_shell / b.c_shell - 1.0).abs() < 0.1);
        assert!((a.c_heat - 2.0 / E).abs() < 1e-10, "{}", a.c_heat);
        assert!((a.c_shell - 1.0 / E).abs() < 1e-10, "{}", a.c_shell);
        // y = 1: both branches coincide.
        let at_one = kernel_bounds_check(&u, 5, &[2f64.powi(-10)], 1.0 / 3.0, 3.0);
        let r = &at_one.rows[0];
        assert!((r.y - 1.0).abs() < 1e-15);
        assert!((r.ratio_heat - (-0.5f64).exp()).abs() < 1e-10);
        let z = kernel_bounds_check(&TorusField::zeros(grid(64)), 3, &coarse, 0.5, 3.0);
        assert_eq!((z.c_heat, z.c_shell), (0.0, 0.0));
    }

    #[test]
    fn regularity_examples() {
        for alpha in [1.0 / 3.0, 0.5] {
            let u = lacunary(grid(256), alpha, 6, 0).unwrap();
            let f = regularity_fit(&u, 2.0, &lacunary_regularity_schedule(6).unwrap()).unwrap();
            assert!((f.alpha_hat - alpha).abs() < 0.05, "{alpha}: {}", f.alpha_hat);
            assert!(!f.smooth_saturated);
        }
        let smooth = single_mode(grid(64), &[1, 0]).unwrap();
        let f = regularity_fit(&smooth, 2.0, &HeatSchedule::standard()).unwrap();
        assert!(f.smooth_saturated, "{}", f.alpha_hat);
        let short = HeatSchedule::new(1e-3, 5e-3, 2f64.powf(-0.25)).unwrap();
        assert!(matches!(regularity_fit(&smooth, 2.0, &short), Err(Error::CurveTooFlat { .. })));
    }

    #[test]
    fn sobolev_constant_is_shared() {
        let g = grid(128);
        let fields: Vec<(String, TorusField)> = vec![
            ("m1".into(), single_mode(g, &[1, 0]).unwrap()),
            ("m8".into(), single_mode(g, &[8, 0]).unwrap()),
            ("m32".into(), single_mode(g, &[24, 32]).unwrap()),
            ("lac".into(), lacunary(g, 0.5, 5, 2).unwrap()),
            ("rnd".into(), random_slope(g, 2.0, 3).unwrap()),
        ];
        for p in [2.0, 4.0] {
            let c = sobolev_constant(&fields, 1.0 / 3.0, p, &HeatSchedule::standard()).unwrap();
            assert!(c > 0.0 && c < 1.0, "p = {p}: {c}");
        }
    }

    #[test]
    fn monotone_in_r() {
        let g = grid(128);
        let sched = HeatSchedule::standard();
        for u in [single_mode(g, &[3, 1]).unwrap(), lacunary(g, 0.5, 5, 4).unwrap(), random_slope(g, 1.5, 8).unwrap()] {
            let norm = |m| heat_besov_norm(&u, &BesovSpec::new(0.4, 3.0, m).unwrap(), &sched).unwrap().total;
            let vals = [norm(BesovMode::Finite(1.0)), norm(BesovMode::Finite(2.0)), norm(BesovMode::Finite(4.0)), norm(BesovMode::Infinity)];
            assert!(vals.windows(2).all(|w| w[0] >= w[1] - 1e-9), "{vals:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn homogeneous(seed in 0u64..1000, c in -5.0f64..5.0) {
            let u = random_slope(grid(32), 1.5, seed).unwrap();
            let spec = BesovSpec::new(0.4, 3.0, BesovMode::Finite(2.0)).unwrap();
            let sched = HeatSchedule::standard();
            let a = heat_besov_norm(&u.scale(c), &spec, &sched).unwrap().total;
            let b = heat_besov_norm(&u, &spec, &sched).unwrap().total;
            prop_assert!((a - c.abs() * b).abs() <= 1e-12 * b);
            let la = lp_besov_norm(&u.scale(c), &spec);
            let lb = lp_besov_norm(&u, &spec);
            prop_assert!((la - c.abs() * lb).abs() <= 1e-12 * lb);
        }
    }
}
