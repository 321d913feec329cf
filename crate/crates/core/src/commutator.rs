//! The commutator `W(s) = e^{s Delta} div(u (x) u) - div(U (x) U)`, its
//! parabolic source, Duhamel reconstruction and the energy flux.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{log_log_fit, middle_decade, LinearFit};
use crate::schedule::HeatSchedule;
use crate::spectral::{Backend, SpectralField};

fn check_time(s: f64) -> Result<()> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("heat time {s} must be positive")));
    }
    Ok(())
}

/// `e^{s Delta} grad_j(u^j u^l) - grad_j(U^j U^l)`, `U = e^{s Delta} u`.
pub fn commutator_direct<F: SpectralField>(u: &F, s: f64) -> Result<F> {
    check_time(s)?;
    let first = u.transport()?.heat(s);
    Ok(first.axpy(-1.0, &u.heat(s).transport()?))
}

/// Source `N(s) = (d_s - Delta_H) W` at `U = e^{s Delta} u`, split into the
/// flat term and the two curvature terms.
pub fn rhs_n<F: SpectralField>(u: &F, s: f64) -> Result<[F; 3]> {
    u.heat(s).rhs_parts()
}

pub fn rhs_total<F: SpectralField>(parts: &[F; 3]) -> F {
    parts[0].axpy(1.0, &parts[1]).axpy(1.0, &parts[2])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceResidual {
    pub s: f64,
    pub ds: f64,
    /// `||(d_s - Delta) W - N|| / ||N||`, `d_s` by a centred difference.
    pub residual: f64,
    pub source_norm: f64,
}

pub fn source_residual<F: SpectralField>(u: &F, s: f64, ds: f64) -> Result<SourceResidual> {
    check_time(s)?;
    if !(ds > 0.0 && ds < s) {
        return Err(Error::StepTooLarge { step: ds, s });
    }
    let tu = u.transport()?;
    let w = |t: f64| -> Result<F> { Ok(tu.heat(t).axpy(-1.0, &u.heat(t).transport()?)) };
    let dw = w(s + ds)?.axpy(-1.0, &w(s - ds)?).scale(0.5 / ds);
    let lhs = dw.axpy(-1.0, &w(s)?.laplacian());
    let n = rhs_total(&rhs_n(u, s)?);
    let source_norm = n.l2_norm();
    let diff = lhs.axpy(-1.0, &n).l2_norm();
    let residual = if source_norm == 0.0 { diff } else { diff / source_norm };
    Ok(SourceResidual { s, ds, residual, source_norm })
}

/// Midpoint rule in `tau` on the substitution `s' = s tau^{grading}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradedQuadrature {
    pub nodes: usize,
    pub grading: f64,
}

impl GradedQuadrature {
    pub fn new(nodes: usize) -> Self {
        Self { nodes, grading: 3.0 }
    }

    /// `(s', weight)` pairs for `int_0^s f(s') ds'`.
    pub fn points(&self, s: f64) -> Vec<(f64, f64)> {
        let n = self.nodes as f64;
        let q = self.grading;
        (0..self.nodes)
            .map(|i| {
                let tau = (i as f64 + 0.5) / n;
                (s * tau.powf(q), s * q * tau.powf(q - 1.0) / n)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct CommutatorDecomposition<F> {
    pub s: f64,
    pub w_direct: F,
    pub w1: F,
    pub w2: F,
    pub w3: F,
    pub quadrature: GradedQuadrature,
    /// `||W_direct - (W1 + W2 + W3)|| / ||W_direct||`.
    pub residual: f64,
    /// Same with half the nodes.
    pub coarse_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionNorms {
    pub s: f64,
    pub nodes: usize,
    pub grading: f64,
    pub w_direct: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub residual: f64,
    pub coarse_residual: f64,
}

impl<F: SpectralField> CommutatorDecomposition<F> {
    pub fn norms(&self) -> DecompositionNorms {
        DecompositionNorms {
            s: self.s,
            nodes: self.quadrature.nodes,
            grading: self.quadrature.grading,
            w_direct: self.w_direct.l2_norm(),
            w1: self.w1.l2_norm(),
            w2: self.w2.l2_norm(),
            w3: self.w3.l2_norm(),
            residual: self.residual,
            coarse_residual: self.coarse_residual,
        }
    }
}

fn duhamel_parts<F: SpectralField>(u: &F, s: f64, quad: &GradedQuadrature) -> Result<[F; 3]> {
    let z = u.zeros_like();
    let mut acc = [z.clone(), z.clone(), z];
    for (sp, w) in quad.points(s) {
        let parts = rhs_n(u, sp)?;
        for (a, p) in acc.iter_mut().zip(&parts) {
            *a = a.axpy(w, &p.heat(s - sp));
        }
    }
    Ok(acc)
}

fn relative(diff: f64, norm: f64) -> f64 {
    if norm == 0.0 {
        diff
    } else {
        diff / norm
    }
}

/// `W_i = int_0^s e^{(s - s') Delta} N_i(s') ds'` on the graded mesh,
/// checked against [`commutator_direct`] and against half the nodes.
pub fn duhamel_reconstruct<F: SpectralField>(
    u: &F,
    s: f64,
    quad: GradedQuadrature,
) -> Result<CommutatorDecomposition<F>> {
    check_time(s)?;
    if quad.nodes < 2 || !(quad.grading >= 1.0) {
        return Err(Error::InvalidParameter(format!("quadrature {quad:?}")));
    }
    let w_direct = commutator_direct(u, s)?;
    let norm = w_direct.l2_norm();
    let residual_of = |p: &[F; 3]| relative(w_direct.axpy(-1.0, &rhs_total(p)).l2_norm(), norm);
    let [w1, w2, w3] = duhamel_parts(u, s, &quad)?;
    let coarse = duhamel_parts(u, s, &GradedQuadrature { nodes: quad.nodes / 2, ..quad })?;
    let fine = [w1, w2, w3];
    let residual = residual_of(&fine);
    let coarse_residual = residual_of(&coarse);
    if residual > coarse_residual && residual > 1e-12 {
        return Err(Error::QuadratureDiverged { coarse: coarse_residual, fine: residual });
    }
    let [w1, w2, w3] = fine;
    Ok(CommutatorDecomposition { s, w_direct, w1, w2, w3, quadrature: quad, residual, coarse_residual })
}

/// `int W(s) . U(s)`, which equals `-int u^j u^l grad_j U_l(2s)` for divergence-free `u`.
pub fn flux<F: SpectralField>(u: &F, s: f64) -> Result<f64> {
    Ok(commutator_direct(u, s)?.inner(&u.heat(s)))
}

/// The same flux from `int_0^s <N(s'), U(2s - s')> ds'` with the source
/// integrated by parts, split into the flat and the two curvature terms.
pub fn flux_by_parts<F: SpectralField>(u: &F, s: f64, quad: &GradedQuadrature) -> Result<[f64; 3]> {
    check_time(s)?;
    let mut acc = [0.0; 3];
    for (sp, w) in quad.points(s) {
        let pair = u.heat(sp).rhs_pairing(&u.heat(2.0 * s - sp))?;
        for (a, p) in acc.iter_mut().zip(pair) {
            *a += w * p;
        }
    }
    Ok(acc)
}

/// `int U^j U^l grad_j U_l`; zero for divergence-free `U`.
pub fn self_transport_flux<F: SpectralField>(u: &F, s: f64) -> f64 {
    u.heat(s).self_transport_pairing()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxRecord {
    pub s: f64,
    /// RMS over the ensemble of `int W(s) . U(s)`.
    pub flux: f64,
    pub w1_norm: f64,
    pub w2_norm: f64,
    pub w3_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub backend: Backend,
    pub alpha: f64,
    pub ensemble: usize,
    pub records: Vec<FluxRecord>,
    pub fit: LinearFit,
    /// Fitted exponent of `|F(s)|`.
    pub exponent: f64,
    pub fit_range: (f64, f64),
    /// Fitted exponents of the RMS `||W_i||`, where nonzero.
    pub term_exponents: [Option<f64>; 3],
    /// `(3 alpha - 1) / 2`.
    pub predicted: f64,
}

impl FluxReport {
    /// Exponent at least the prediction minus 0.1; for `alpha <= 1/3` at least -0.05.
    pub fn passes(&self) -> bool {
        if self.alpha > 1.0 / 3.0 + 1e-12 {
            self.exponent >= self.predicted - 0.1
        } else {
            self.exponent >= -0.05
        }
    }
}

/// Flux and commutator norms over the schedule, RMS over the ensemble, with
/// a log-log fit over the middle decade. `W_2 = W_3 = 0` on flat backends, where
/// `W_1 = W`; curved backends reconstruct the split with `quad`.
pub fn flux_decay_fit<F: SpectralField>(
    ensemble: &[F],
    schedule: &HeatSchedule,
    alpha: f64,
    quad: GradedQuadrature,
) -> Result<FluxReport> {
    let first = ensemble.first().ok_or(Error::EmptySet)?;
    let idx = middle_decade(&schedule.values);
    if schedule.decades() < 1.0 - 1e-9 || idx.len() < 4 {
        return Err(Error::FitRangeTooSmall(format!(
            "{} points over {:.2} decades",
            idx.len(),
            schedule.decades()
        )));
    }
    let m = ensemble.len() as f64;
    let mut sums = vec![[0.0f64; 4]; schedule.len()];
    for u in ensemble {
        let tu = u.transport()?;
        for (acc, &s) in sums.iter_mut().zip(&schedule.values) {
            let big_u = u.heat(s);
            let w = tu.heat(s).axpy(-1.0, &big_u.transport()?);
            let f = w.inner(&big_u);
            let norms = if u.is_flat() {
                [w.l2_norm(), 0.0, 0.0]
            } else {
                let [a, b, c] = duhamel_parts(u, s, &quad)?;
                [a.l2_norm(), b.l2_norm(), c.l2_norm()]
            };
            acc[0] += f * f;
            for i in 0..3 {
                acc[i + 1] += norms[i] * norms[i];
            }
        }
    }
    let records: Vec<FluxRecord> = schedule
        .values
        .iter()
        .zip(&sums)
        .map(|(&s, a)| FluxRecord {
            s,
            flux: (a[0] / m).sqrt(),
            w1_norm: (a[1] / m).sqrt(),
            w2_norm: (a[2] / m).sqrt(),
            w3_norm: (a[3] / m).sqrt(),
        })
        .collect();
    let column = |f: fn(&FluxRecord) -> f64| -> Vec<f64> { records.iter().map(f).collect() };
    let fluxes = column(|r| r.flux);
    let fit = log_log_fit(&schedule.values, &fluxes, &idx).ok_or(Error::ZeroField)?;
    let term = |v: Vec<f64>| log_log_fit(&schedule.values, &v, &idx).map(|f| f.slope);
    let term_exponents = [term(column(|r| r.w1_norm)), term(column(|r| r.w2_norm)), term(column(|r| r.w3_norm))];
    let fit_range = (schedule.values[*idx.last().unwrap_or(&0)], schedule.values[idx[0]]);
    Ok(FluxReport {
        backend: first.backend(),
        alpha,
        ensemble: ensemble.len(),
        exponent: fit.slope,
        fit,
        records,
        fit_range,
        term_exponents,
        predicted: (3.0 * alpha - 1.0) / 2.0,
    })
}
