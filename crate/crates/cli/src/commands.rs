//! One function per subcommand; each returns the report to emit.

use std::sync::Arc;

use heatflow_core::besov::{cn_diagnostic, equivalence_report, heat_besov_norm, lp_besov_norm, standard_field_set, BesovSpec};
use heatflow_core::commutator::{
    duhamel_reconstruct, flux, flux_by_parts, flux_decay_fit, source_residual, GradedQuadrature,
};
use heatflow_core::euler::{
    low_mode_test_forms, max_speed, random_initial, run, smoothed_energy_identity_report, weak_form_residual,
};
use heatflow_core::fields::{lacunary, lacunary_shells, sphere_lacunary, taylor_green, LacunaryGeometry};
use heatflow_core::heat::{
    contraction_check, divergence_invariance_residual, lp_heat_estimates_report, semigroup_residual,
    smoothing_bound_report, strong_continuity,
};
use heatflow_core::io::{load_field, load_trajectory, save_field, save_trajectory};
use heatflow_core::report::{flux_table, Table};
use heatflow_core::{
    AnyField, Backend, Bochner, BochnerIdentity, Check, HeatSchedule, Report, SpectralField, SphereBasis,
    TimeBump, TorusField, TorusGrid,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{kind_name, CliError, CliResult, FluxGenerator, RunConfig};
use crate::suites::run_suite;

pub fn input_field(cfg: &RunConfig) -> CliResult<AnyField> {
    match &cfg.field {
        Some(path) => load_field(path).map_err(|e| match e {
            heatflow_core::Error::Io(source) => CliError::Io { path: path.display().to_string(), source },
            e => e.into(),
        }),
        None => Ok(cfg.generator.generate()?),
    }
}

#[derive(Serialize)]
struct FieldSummary {
    backend: Backend,
    l2_norm: f64,
    divergence_l2: f64,
    max_eigenvalue: f64,
}

fn summary<F: SpectralField>(u: &F) -> FieldSummary {
    FieldSummary {
        backend: u.backend(),
        l2_norm: u.l2_norm(),
        divergence_l2: u.divergence_l2(),
        max_eigenvalue: u.max_eigenvalue(),
    }
}

fn field_summary(f: &AnyField) -> FieldSummary {
    match f {
        AnyField::Torus(u) => summary(u),
        AnyField::Sphere(u) => summary(u),
    }
}

pub fn gen(cfg: &RunConfig, out: Option<&std::path::Path>) -> CliResult<Report> {
    let field = cfg.generator.generate()?;
    if let Some(path) = out {
        save_field(path, &field)?;
    }
    let mut r = Report::new("gen", cfg)?;
    r.insert("kind", &kind_name(&cfg.generator))?;
    r.insert("field", &field_summary(&field))?;
    r.insert("out", &out)?;
    Ok(r)
}

fn smooth_generic<F: SpectralField + Bochner>(u: &F, cfg: &RunConfig, r: &mut Report) -> CliResult<F> {
    let sc = &cfg.smooth;
    let sched = cfg.schedule.build()?;
    let tol = &cfg.verify.tolerances;
    let b = u.backend();
    let (mut div, mut semi, mut contr) = (0.0f64, 0.0f64, 0.0f64);
    for &s in &sched.values {
        let d = divergence_invariance_residual(u, s)?;
        div = div.max(d.divergence).max(d.commutation);
        semi = semi.max(semigroup_residual(u, s, sc.s)?);
        if u.l2_norm() > 0.0 {
            contr = contr.max(contraction_check(u, s)? - 1.0);
        }
    }
    r.checks.push(Check::at_most("divergence_invariance", div, tol.divergence).backend(b));
    r.checks.push(Check::at_most("semigroup", semi, tol.semigroup).backend(b));
    r.checks.push(Check::at_most("contraction_excess", contr, tol.contraction).backend(b));
    let mut bounds = Vec::new();
    for order in 0..=sc.max_order {
        bounds.push(smoothing_bound_report(u, "input", &sched, order)?);
    }
    r.insert("smoothing_bounds", &bounds)?;
    if u.l2_norm() > 0.0 {
        r.insert("lp_estimates", &lp_heat_estimates_report(&[("input".to_string(), u.clone())], sc.p, &sched)?)?;
    }
    r.insert("strong_continuity", &strong_continuity(u, &sched))?;
    let ds = sc.bochner_ds.min(sc.s / 10.0);
    let bochner = u.bochner_residual(sc.s, BochnerIdentity::Energy, ds)?;
    r.insert("bochner_energy", &serde_json::json!({ "s": sc.s, "ds": ds, "residual": bochner }))?;
    Ok(u.heat(sc.s))
}

pub fn smooth(cfg: &RunConfig) -> CliResult<Report> {
    let field = input_field(cfg)?;
    let mut r = Report::new("smooth", cfg)?;
    r.insert("field", &field_summary(&field))?;
    let smoothed = match &field {
        AnyField::Torus(u) => AnyField::Torus(smooth_generic(u, cfg, &mut r)?),
        AnyField::Sphere(u) => AnyField::Sphere(smooth_generic(u, cfg, &mut r)?),
    };
    if let Some(path) = &cfg.smooth.out {
        save_field(path, &smoothed)?;
    }
    Ok(r)
}

fn besov_spec(cfg: &RunConfig) -> CliResult<BesovSpec> {
    Ok(BesovSpec::new(cfg.besov.alpha, cfg.besov.p, cfg.besov.mode)?)
}

pub fn besov(cfg: &RunConfig) -> CliResult<Report> {
    let spec = besov_spec(cfg)?;
    let sched = cfg.schedule.build()?;
    let field = input_field(cfg)?;
    let mut r = Report::new("besov", cfg)?;
    let (norm, cn) = match &field {
        AnyField::Torus(u) => {
            r.insert("littlewood_paley_norm", &lp_besov_norm(u, &spec))?;
            (heat_besov_norm(u, &spec, &sched)?, cn_diagnostic(u, spec.alpha, spec.p, &sched))
        }
        AnyField::Sphere(u) => (heat_besov_norm(u, &spec, &sched)?, cn_diagnostic(u, spec.alpha, spec.p, &sched)),
    };
    let mut t = Table::new("u_curve", &["s", "u"]);
    t.rows = norm.curve.s.iter().zip(&norm.curve.values).map(|(s, v)| vec![*s, *v]).collect();
    r.tables.push(t);
    r.insert("norm", &norm)?;
    r.insert("flags", &serde_json::json!({
        "vanishing": cn.vanishing,
        "monotone_rule": cn.monotone_rule,
        "last_decade_fit": cn.last_decade_fit,
    }))?;
    Ok(r)
}

pub fn besov_equiv(cfg: &RunConfig) -> CliResult<Report> {
    let spec = besov_spec(cfg)?;
    let sched = cfg.schedule.build()?;
    let g = TorusGrid::new(2, cfg.besov.equiv_n)?;
    let rep = equivalence_report(&standard_field_set(g)?, &spec, &sched)?;
    let mut r = Report::new("besov-equiv", cfg)?;
    let mut t = Table::labelled("equivalence", "field", &["heat_norm", "lp_norm", "ratio"]);
    for row in &rep.rows {
        t.push_labelled(row.field.clone(), vec![row.heat_norm, row.lp_norm, row.ratio])?;
    }
    r.tables.push(t);
    r.checks.push(Check::at_most("equivalence_band", rep.band, cfg.verify.tolerances.equivalence_band).backend(Backend::Torus));
    r.insert("constant", &rep.constant)?;
    Ok(r)
}

fn commutator_generic<F: SpectralField>(u: &F, cfg: &RunConfig, r: &mut Report) -> CliResult<()> {
    let c = &cfg.commutator;
    let quad = GradedQuadrature::new(c.quad_nodes);
    let d = duhamel_reconstruct(u, c.s, quad)?;
    r.insert("decomposition", &d.norms())?;
    r.insert("source_identity", &source_residual(u, c.s, c.ds)?)?;
    r.insert("flux", &flux(u, c.s)?)?;
    r.insert("flux_by_parts", &flux_by_parts(u, c.s, &quad)?)?;
    r.insert("self_transport", &u.heat(c.s).self_transport_pairing())?;
    Ok(())
}

pub fn commutator(cfg: &RunConfig) -> CliResult<Report> {
    let field = input_field(cfg)?;
    let mut r = Report::new("commutator", cfg)?;
    match &field {
        AnyField::Torus(u) => commutator_generic(u, cfg, &mut r)?,
        AnyField::Sphere(u) => commutator_generic(u, cfg, &mut r)?,
    }
    Ok(r)
}

pub fn flux_decay(cfg: &RunConfig) -> CliResult<Report> {
    let f = &cfg.flux;
    let sched = cfg.schedule.build()?;
    let quad = GradedQuadrature::new(f.quad_nodes);
    let seeds: Vec<u64> = (f.seed..f.seed + f.ensemble as u64).collect();
    let rep = match f.generator {
        FluxGenerator::Lacunary => {
            let g = TorusGrid::new(2, f.n)?;
            let ensemble = seeds
                .par_iter()
                .map(|&seed| match f.geometry {
                    LacunaryGeometry::Shells => lacunary_shells(g, f.alpha, f.shells, seed),
                    LacunaryGeometry::Shear => lacunary(g, f.alpha, f.shells, seed),
                })
                .collect::<Result<Vec<TorusField>, _>>()?;
            flux_decay_fit(&ensemble, &sched, f.alpha, quad)?
        }
        FluxGenerator::SphereLacunary => {
            let basis = Arc::new(SphereBasis::new(f.l_max)?);
            let ensemble = seeds
                .iter()
                .map(|&seed| sphere_lacunary(basis.clone(), f.alpha, f.shells, seed))
                .collect::<Result<Vec<_>, _>>()?;
            flux_decay_fit(&ensemble, &sched, f.alpha, quad)?
        }
    };
    let mut r = Report::new("flux-decay", cfg)?;
    let threshold = if f.alpha > 1.0 / 3.0 + 1e-12 { rep.predicted - 0.1 } else { -0.05 };
    r.checks.push(Check::at_least("flux_exponent", rep.exponent, threshold).backend(rep.backend));
    r.tables.push(flux_table(&rep));
    r.insert("fit", &serde_json::json!({
        "exponent": rep.exponent,
        "predicted": rep.predicted,
        "fit": rep.fit,
        "fit_range": rep.fit_range,
        "term_exponents": rep.term_exponents,
        "ensemble": rep.ensemble,
    }))?;
    Ok(r)
}

pub fn initial_velocity(init: &str, n: usize) -> CliResult<TorusField> {
    let g = TorusGrid::new(2, n)?;
    match init.split_once(':') {
        None if init == "taylor-green" || init == "taylor_green" => Ok(taylor_green(g)),
        Some(("random", seed)) => {
            let seed = seed.parse().map_err(|_| CliError::Usage(format!("bad seed in `{init}`")))?;
            Ok(random_initial(g, seed)?)
        }
        _ => Err(CliError::Usage(format!("init `{init}`: expected taylor-green or random:<seed>"))),
    }
}

pub fn euler_run(cfg: &RunConfig) -> CliResult<Report> {
    let e = &cfg.euler;
    let v = initial_velocity(&e.init, e.n)?;
    let traj = run(&v, e.t_final, e.dt, e.stride)?;
    if let Some(path) = &e.out {
        save_trajectory(path, &traj)?;
    }
    let mut r = Report::new("euler-run", cfg)?;
    r.checks.push(Check::at_least("run_completed", traj.valid as u8 as f64, 1.0));
    r.checks.push(Check::at_most("energy_drift", traj.energy_drift(), cfg.verify.tolerances.energy_drift));
    r.checks.push(Check::at_most("divergence", traj.max_divergence(), 1e-10));
    let mut t = Table::new("energy", &["t", "energy"]);
    t.rows = traj.times.iter().zip(&traj.energies).map(|(a, b)| vec![*a, *b]).collect();
    r.tables.push(t);
    r.insert("initial_max_speed", &max_speed(&v))?;
    r.insert("snapshots", &traj.len())?;
    r.insert("failure", &traj.failure)?;
    Ok(r)
}

pub fn euler_verify(cfg: &RunConfig, path: &std::path::Path, schedule: &HeatSchedule) -> CliResult<Report> {
    let traj = load_trajectory(path).map_err(|e| match e {
        heatflow_core::Error::Io(source) => CliError::Io { path: path.display().to_string(), source },
        e => e.into(),
    })?;
    let end = traj.times.last().copied().unwrap_or(0.0);
    let bump = TimeBump { power: cfg.euler.bump_power, ..TimeBump::inside(end) };
    let rep = smoothed_energy_identity_report(&traj, &schedule.values, bump)?;
    let weak = weak_form_residual(&traj, &low_mode_test_forms(cfg.euler.test_kmax), bump)?;
    let tol = &cfg.verify.tolerances;
    let mut r = Report::new("euler-verify", cfg)?;
    for row in &rep.rows {
        r.checks.push(Check::at_most("energy_identity_rel_error", row.relative, tol.identity).at_s(row.s));
    }
    r.checks.push(Check::at_most("pressure_term", rep.max_pressure, tol.pressure));
    r.checks.push(Check::at_most("weak_form_residual", weak.residual, tol.weak_form));
    let mut t = Table::new("energy_identity", &["s", "lhs", "rhs", "relative", "pressure_term"]);
    t.rows = rep.rows.iter().map(|x| vec![x.s, x.lhs, x.rhs, x.relative, x.pressure_term]).collect();
    r.tables.push(t);
    r.insert("identity", &rep)?;
    r.insert("weak_form", &weak)?;
    r.insert("trajectory", &serde_json::json!({
        "path": path, "n": traj.n, "dt": traj.dt, "stride": traj.stride, "snapshots": traj.len(), "valid": traj.valid,
    }))?;
    Ok(r)
}

pub fn verify(cfg: &RunConfig) -> CliResult<Report> {
    let sched = cfg.schedule.build()?;
    let results: Vec<CliResult<Vec<Check>>> =
        cfg.verify.suites.par_iter().map(|&s| run_suite(s, &cfg.verify, &sched)).collect();
    let mut r = Report::new("verify", cfg)?;
    for (suite, res) in cfg.verify.suites.iter().zip(results) {
        for mut c in res? {
            c.check = format!("{}/{}", serde_json::to_value(suite).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(), c.check);
            r.checks.push(c);
        }
    }
    Ok(r)
}
