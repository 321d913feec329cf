//! Run configuration: JSON file, then command-line overrides.

use std::path::{Path, PathBuf};

use heatflow_core::besov::BesovMode;
use heatflow_core::fields::LacunaryGeometry;
use heatflow_core::{GeneratorSpec, HeatSchedule, ReportFormat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("ConfigParseError in {path}: line {line}, column {column}: {message}")]
    ConfigParse { path: String, line: usize, column: usize, message: String },
    #[error(transparent)]
    Core(#[from] heatflow_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub s_min: f64,
    pub s_max: f64,
    pub ratio: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        let s = HeatSchedule::standard();
        Self { s_min: s.s_min, s_max: s.s_max, ratio: s.ratio }
    }
}

impl ScheduleConfig {
    /// `standard` or `s_min,s_max,ratio`.
    pub fn parse(text: &str) -> CliResult<Self> {
        if text == "standard" {
            return Ok(Self::default());
        }
        let v = parse_floats(text)?;
        match v[..] {
            [s_min, s_max, ratio] => Ok(Self { s_min, s_max, ratio }),
            _ => Err(CliError::Usage(format!("schedule `{text}`: expected `standard` or `s_min,s_max,ratio`"))),
        }
    }

    pub fn build(&self) -> CliResult<HeatSchedule> {
        Ok(HeatSchedule::new(self.s_min, self.s_max, self.ratio)?)
    }
}

pub fn parse_floats(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("`{t}` is not a number"))))
        .collect()
}

/// `alpha,p,r` with `r` a number, `inf` or `cN`.
pub fn parse_besov_spec(text: &str) -> CliResult<(f64, f64, BesovMode)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || CliError::Usage(format!("besov spec `{text}`: expected `alpha,p,r` with r a number, inf or cN"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let alpha = parts[0].parse().map_err(|_| bad())?;
    let p = parts[1].parse().map_err(|_| bad())?;
    let mode = match parts[2] {
        "inf" | "infinity" => BesovMode::Infinity,
        "cN" | "cn" | "c_n" => BesovMode::CN,
        r => BesovMode::Finite(r.parse().map_err(|_| bad())?),
    };
    Ok((alpha, p, mode))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothConfig {
    /// Heat time of the exported field and of the single-time checks.
    pub s: f64,
    pub p: f64,
    pub max_order: usize,
    /// Upper bound on the Bochner difference step; capped at `s / 10`.
    pub bochner_ds: f64,
    pub out: Option<PathBuf>,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        Self { s: 0.1, p: 3.0, max_order: 2, bochner_ds: 0.01, out: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BesovConfig {
    pub alpha: f64,
    pub p: f64,
    pub mode: BesovMode,
    /// Grid of the field set used by `besov-equiv`.
    pub equiv_n: usize,
}

impl Default for BesovConfig {
    fn default() -> Self {
        Self { alpha: 1.0 / 3.0, p: 3.0, mode: BesovMode::Infinity, equiv_n: 256 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommutatorConfig {
    pub s: f64,
    pub quad_nodes: usize,
    /// Centred-difference step of the source identity.
    pub ds: f64,
}

impl Default for CommutatorConfig {
    fn default() -> Self {
        Self { s: 0.1, quad_nodes: 64, ds: 1e-5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxGenerator {
    Lacunary,
    SphereLacunary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluxConfig {
    pub generator: FluxGenerator,
    pub alpha: f64,
    /// Torus resolution.
    pub n: usize,
    /// Sphere bandwidth.
    pub l_max: usize,
    pub shells: u32,
    pub geometry: LacunaryGeometry,
    pub ensemble: usize,
    /// Seeds run from here upward.
    pub seed: u64,
    pub quad_nodes: usize,
}

impl Default for FluxConfig {
    fn default() -> Self {
        Self {
            generator: FluxGenerator::Lacunary,
            alpha: 0.5,
            n: 256,
            l_max: 32,
            shells: 6,
            geometry: LacunaryGeometry::Shells,
            ensemble: 16,
            seed: 0,
            quad_nodes: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EulerConfig {
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub stride: usize,
    /// `taylor-green` or `random:<seed>`.
    pub init: String,
    pub out: Option<PathBuf>,
    /// Exponent of the time bump `(1 - x^2)^power`.
    pub bump_power: i32,
    /// Largest Fourier index of the weak-form test family.
    pub test_kmax: i64,
}

impl Default for EulerConfig {
    fn default() -> Self {
        Self {
            n: 128,
            dt: 1e-3,
            t_final: 2.0,
            stride: 10,
            init: "random:7".into(),
            out: None,
            bump_power: 4,
            test_kmax: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Heat,
    Besov,
    Commutator,
    Euler,
}

pub const ALL_SUITES: [Suite; 4] = [Suite::Heat, Suite::Besov, Suite::Commutator, Suite::Euler];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub divergence: f64,
    pub semigroup: f64,
    pub contraction: f64,
    pub bochner_order: f64,
    pub scaled_grad_single_mode: f64,
    pub besov_single_mode: f64,
    pub mode_doubling: f64,
    pub equivalence_band: f64,
    pub source_torus: f64,
    pub source_sphere: f64,
    pub duhamel: f64,
    pub flux_ibp: f64,
    pub energy_drift: f64,
    pub identity: f64,
    pub pressure: f64,
    pub weak_form: f64,
    pub weak_form_order: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            divergence: 1e-12,
            semigroup: 1e-12,
            contraction: 1e-12,
            bochner_order: 1.9,
            scaled_grad_single_mode: 0.02,
            besov_single_mode: 0.05,
            mode_doubling: 0.05,
            equivalence_band: 4.0,
            source_torus: 1e-6,
            source_sphere: 1e-4,
            duhamel: 1e-4,
            flux_ibp: 1e-3,
            energy_drift: 1e-6,
            identity: 1e-3,
            pressure: 1e-10,
            weak_form: 1e-5,
            weak_form_order: 2.0,
        }
    }
}

/// Desk-scale sizes for `verify`; the full-size runs live in the acceptance suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub suites: Vec<Suite>,
    pub torus_n: usize,
    pub sphere_l_max: usize,
    /// Random fields per backend.
    pub fields: usize,
    pub euler_n: usize,
    pub euler_t: f64,
    pub euler_dt: f64,
    pub tolerances: Tolerances,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            suites: ALL_SUITES.to_vec(),
            torus_n: 32,
            sphere_l_max: 8,
            fields: 4,
            euler_n: 32,
            euler_t: 0.5,
            euler_dt: 2e-3,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Field used when no `field` file is given.
    pub generator: GeneratorSpec,
    pub field: Option<PathBuf>,
    pub schedule: ScheduleConfig,
    /// Report format; each subcommand has its own default when unset.
    pub format: Option<ReportFormat>,
    /// Report path; stdout when unset.
    pub report: Option<PathBuf>,
    pub smooth: SmoothConfig,
    pub besov: BesovConfig,
    pub commutator: CommutatorConfig,
    pub flux: FluxConfig,
    pub euler: EulerConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorSpec::Lacunary {
                n: 64,
                alpha: 0.5,
                shells: 4,
                seed: 7,
                geometry: LacunaryGeometry::Shear,
            },
            field: None,
            schedule: ScheduleConfig::default(),
            format: None,
            report: None,
            smooth: SmoothConfig::default(),
            besov: BesovConfig::default(),
            commutator: CommutatorConfig::default(),
            flux: FluxConfig::default(),
            euler: EulerConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, path: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::ConfigParse {
            path: path.into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// Name of the generator kind as it appears in configs and on the command line.
pub fn kind_name(spec: &GeneratorSpec) -> &'static str {
    match spec {
        GeneratorSpec::SingleMode { .. } => "single_mode",
        GeneratorSpec::Lacunary { .. } => "lacunary",
        GeneratorSpec::RandomSlope { .. } => "random_slope",
        GeneratorSpec::TaylorGreen { .. } => "taylor_green",
        GeneratorSpec::SphereMode { .. } => "sphere_mode",
        GeneratorSpec::SphereLacunary { .. } => "sphere_lacunary",
        GeneratorSpec::SphereRandom { .. } => "sphere_random",
    }
}

pub fn default_generator(kind: &str) -> CliResult<GeneratorSpec> {
    Ok(match kind.replace('-', "_").as_str() {
        "single_mode" => GeneratorSpec::SingleMode { n: 64, k: vec![1, 0] },
        "lacunary" => GeneratorSpec::Lacunary { n: 64, alpha: 0.5, shells: 4, seed: 0, geometry: LacunaryGeometry::Shear },
        "random_slope" => GeneratorSpec::RandomSlope { n: 64, gamma: 2.0, seed: 0 },
        "taylor_green" => GeneratorSpec::TaylorGreen { n: 64 },
        "sphere_mode" => GeneratorSpec::SphereMode { l_max: 16, l: 1, m: 0 },
        "sphere_lacunary" => GeneratorSpec::SphereLacunary { l_max: 32, alpha: 0.5, shells: 4, seed: 0 },
        "sphere_random" => GeneratorSpec::SphereRandom { l_max: 16, decay: 1.5, seed: 0 },
        other => return Err(CliError::Usage(format!("unknown generator kind `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(RunConfig::parse(&text, "x").unwrap(), c);
        assert_eq!(RunConfig::parse("{}", "x").unwrap(), c);
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = RunConfig::parse("{\n  \"smooth\": {\n    \"q\": 1\n  }\n}", "cfg.json").unwrap_err();
        match err {
            CliError::ConfigParse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("unknown field `q`"), "{message}");
            }
            e => panic!("{e}"),
        }
        assert!(matches!(RunConfig::parse("{\"euler\": {\"n\": \"x\"}}", "c"), Err(CliError::ConfigParse { line: 1, .. })));
    }

    #[test]
    fn schedule_and_spec_strings() {
        assert_eq!(ScheduleConfig::parse("standard").unwrap(), ScheduleConfig::default());
        let s = ScheduleConfig::parse("0.01,1,0.5").unwrap();
        assert_eq!(s.build().unwrap().values.len(), 7);
        assert!(ScheduleConfig::parse("1,2").is_err());
        assert_eq!(parse_besov_spec("0.5,3,inf").unwrap(), (0.5, 3.0, BesovMode::Infinity));
        assert_eq!(parse_besov_spec("0.5,3,2").unwrap(), (0.5, 3.0, BesovMode::Finite(2.0)));
        assert_eq!(parse_besov_spec("0.5,3,cN").unwrap().2, BesovMode::CN);
        assert!(parse_besov_spec("0.5,3").is_err());
    }

    #[test]
    fn generator_kinds() {
        for kind in ["single_mode", "lacunary", "random_slope", "taylor-green", "sphere_mode", "sphere_lacunary", "sphere_random"] {
            let g = default_generator(kind).unwrap();
            assert_eq!(kind_name(&g), kind.replace('-', "_"));
            g.generate().unwrap();
        }
        assert!(default_generator("nope").is_err());
    }
}
