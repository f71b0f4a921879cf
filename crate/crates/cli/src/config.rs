//! JSON experiment configuration.
//!
//! Every section is optional at parse time; a subcommand asks for the
//! sections it needs and reports the missing one by path.

use std::path::{Path, PathBuf};

use plate_lab::carleman::{Manufactured, Poly2, Side, WeightFunction};
use plate_lab::carleman::flow::FlowSpec;
use plate_lab::carleman::inequality::DEFAULT_H_VALUES;
use plate_lab::spectral::ScanSpec;
use plate_lab::{assemble_hinged, assemble_generator, build_mesh, Grid2D, GeneratorMatrix, Mesh1D};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshConfig>,
    #[serde(default)]
    pub damping: DampingConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
    #[serde(default)]
    pub resolvent: ResolventConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carleman: Option<CarlemanConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(rename = "L", default = "one")]
    pub length: f64,
    pub x0: f64,
    pub c1: f64,
    pub c2: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

fn one() -> f64 {
    1.0
}

/// End condition at `x = L`: feedback with coefficients `a`, `b`, or the
/// hinged reference configuration when `hinged` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingConfig {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub hinged: bool,
}

impl Default for DampingConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            hinged: false,
        }
    }
}

impl DampingConfig {
    pub fn is_damped(&self) -> bool {
        !self.hinged && (self.a > 0.0 || self.b > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Time step; defaults to `h^2 / (4 max(c1, c2))`.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(rename = "T", default = "one")]
    pub horizon: f64,
    #[serde(default = "default_k")]
    pub k: u32,
    /// Write every `csv_stride`-th sample to the trajectory CSV.
    #[serde(default = "default_stride")]
    pub csv_stride: usize,
}

fn default_k() -> u32 {
    1
}

fn default_stride() -> usize {
    1
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: None,
            horizon: 1.0,
            k: 1,
            csv_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Extra runs with `a = b = value`, reporting the spectral abscissa.
    #[serde(default)]
    pub damping_sweep: Vec<f64>,
    #[serde(default)]
    pub c3: Option<f64>,
}

/// Random resolvent problems for the factorized and trace checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_re_range")]
    pub re_range: [f64; 2],
    #[serde(default = "default_im_max")]
    pub im_max: f64,
    /// Sine modes in the random data fields.
    #[serde(default = "default_modes")]
    pub modes: usize,
}

fn default_samples() -> usize {
    20
}

fn default_re_range() -> [f64; 2] {
    [1.0, 50.0]
}

fn default_im_max() -> f64 {
    1e-2
}

fn default_modes() -> usize {
    10
}

impl Default for ResolventConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            re_range: default_re_range(),
            im_max: default_im_max(),
            modes: default_modes(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Certified,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub bounds: [[f64; 2]; 2],
    pub n: [usize; 2],
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            bounds: [[0.0, 1.0], [0.0, 1.0]],
            n: [128, 128],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarlemanConfig {
    pub psi: Poly2,
    pub lambda_c: f64,
    #[serde(default)]
    pub region: GridConfig,
    #[serde(default = "default_n_xi")]
    pub n_xi: usize,
    #[serde(default = "default_gamma")]
    pub gamma: Side,
    #[serde(default = "default_h_values")]
    pub h_values: Vec<f64>,
    #[serde(default = "default_field")]
    pub field: Manufactured,
    #[serde(default = "default_expect")]
    pub expect: Expectation,
    #[serde(default = "default_lambda_sweep")]
    pub lambda_sweep: Vec<f64>,
    #[serde(default = "default_bracket_samples")]
    pub bracket_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowSpec>,
}

fn default_n_xi() -> usize {
    16
}

fn default_gamma() -> Side {
    Side::Left
}

fn default_h_values() -> Vec<f64> {
    DEFAULT_H_VALUES.to_vec()
}

fn default_field() -> Manufactured {
    Manufactured::GaussianBump {
        center: [0.5, 0.5],
        width: 0.1,
    }
}

fn default_expect() -> Expectation {
    Expectation::Certified
}

fn default_lambda_sweep() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}

fn default_bracket_samples() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Parses a configuration, reporting the JSON path of the offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        CliError::Config {
            path: field_path(&path, &message),
            message,
        }
    })
}

/// Appends the missing field's name to the path of its parent.
fn field_path(path: &str, message: &str) -> String {
    let missing = message
        .strip_prefix("missing field `")
        .and_then(|rest| rest.split('`').next());
    match (path, missing) {
        (".", Some(field)) => field.to_string(),
        (p, Some(field)) => format!("{p}.{field}"),
        (p, None) => p.to_string(),
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
        path: "--config".into(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config(&text)
}

fn invalid(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn mesh(&self) -> Result<Mesh1D, CliError> {
        let m = self.mesh.ok_or_else(|| invalid("mesh", "section required by this subcommand"))?;
        build_mesh(m.length, m.x0, m.c1, m.c2, m.n).map_err(|e| match e {
            plate_lab::Error::Validation { name, reason } => invalid(&format!("mesh.{name}"), reason),
            other => invalid("mesh.x0", other.to_string()),
        })
    }

    pub fn generator(&self) -> Result<GeneratorMatrix, CliError> {
        let mesh = self.mesh()?;
        let d = self.damping;
        if d.hinged {
            return Ok(assemble_hinged(&mesh));
        }
        for (name, v) in [("damping.a", d.a), ("damping.b", d.b)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be nonnegative, got {v}")));
            }
        }
        if d.is_damped() && d.a.min(d.b) <= 0.0 {
            return Err(invalid(
                "damping",
                format!("damped runs need a >= c0 and b >= c0 with c0 = min(a, b) > 0, got a = {}, b = {}", d.a, d.b),
            ));
        }
        assemble_generator(&mesh, d.a, d.b).map_err(|e| invalid("damping", e.to_string()))
    }

    /// Time step and horizon after defaults and validation.
    pub fn time_grid(&self, mesh: &Mesh1D) -> Result<(f64, f64), CliError> {
        let e = self.evolution;
        let dt = e.dt.unwrap_or(mesh.h * mesh.h / (4.0 * mesh.c1.max(mesh.c2)));
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("evolution.dt", format!("must be positive, got {dt}")));
        }
        if !(e.horizon.is_finite() && e.horizon >= dt) {
            return Err(invalid("evolution.T", format!("must be at least dt = {dt}, got {}", e.horizon)));
        }
        if e.k == 0 {
            return Err(invalid("evolution.k", "must be a positive integer"));
        }
        if e.csv_stride == 0 {
            return Err(invalid("evolution.csv_stride", "must be positive"));
        }
        Ok((dt, e.horizon))
    }

    pub fn scan_spec(&self) -> Result<ScanSpec, CliError> {
        let spec = self.scan.ok_or_else(|| invalid("scan", "section required by this subcommand"))?;
        spec.validate().map_err(|e| match e {
            plate_lab::Error::Validation { name, reason } => invalid(name, reason),
            other => invalid("scan", other.to_string()),
        })?;
        Ok(spec)
    }

    pub fn resolvent(&self) -> Result<ResolventConfig, CliError> {
        let r = self.resolvent;
        if r.samples == 0 {
            return Err(invalid("resolvent.samples", "must be positive"));
        }
        let [lo, hi] = r.re_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
            return Err(invalid("resolvent.re_range", format!("need 0 < lo <= hi, got {:?}", r.re_range)));
        }
        if !(r.im_max.is_finite() && r.im_max >= 0.0) {
            return Err(invalid("resolvent.im_max", "must be nonnegative"));
        }
        if r.modes == 0 {
            return Err(invalid("resolvent.modes", "must be positive"));
        }
        Ok(r)
    }

    pub fn carleman(&self) -> Result<&CarlemanConfig, CliError> {
        self.carleman
            .as_ref()
            .ok_or_else(|| invalid("carleman", "section required by this subcommand"))
    }
}

impl CarlemanConfig {
    pub fn weight(&self) -> Result<WeightFunction, CliError> {
        WeightFunction::new(self.psi, self.lambda_c).map_err(|e| invalid("carleman.lambda_c", e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid2D, CliError> {
        Grid2D::new(self.region.bounds, self.region.n[0], self.region.n[1])
            .map_err(|e| invalid("carleman.region", e.to_string()))
    }

    pub fn check_sweep(&self) -> Result<(), CliError> {
        if self.lambda_sweep.len() < 2 || self.lambda_sweep.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(invalid("carleman.lambda_sweep", "need at least two positive values"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"mesh": {"x0": 0.5, "c1": 1, "c2": 2, "N": 21}}"#;

    #[test]
    fn defaults_fill_optional_sections() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.mesh.unwrap().length, 1.0);
        assert_eq!(c.damping, DampingConfig::default());
        assert_eq!(c.resolvent.samples, 20);
        assert!(c.generator().is_ok());
    }

    #[test]
    fn missing_field_reports_full_path() {
        let err = parse_config(r#"{"mesh": {"x0": 0.5, "c1": 1, "c2": 2}}"#).unwrap_err();
        match err {
            CliError::Config { path, .. } => assert_eq!(path, "mesh.N"),
            other => panic!("{other:?}"),
        }
        let err = parse_config(r#"{"carleman": {"psi": []}}"#).unwrap_err();
        assert!(matches!(err, CliError::Config { ref path, .. } if path == "carleman.lambda_c"));
    }

    #[test]
    fn unknown_and_mistyped_fields_are_rejected() {
        let err = parse_config(r#"{"mesh": {"x0": 0.5, "c1": 1, "c2": 2, "N": 21, "M": 3}}"#).unwrap_err();
        assert!(matches!(err, CliError::Config { ref path, .. } if path == "mesh.M"));
        let err = parse_config(r#"{"mesh": {"x0": 0.5, "c1": 1, "c2": 2, "N": -1}}"#).unwrap_err();
        assert!(matches!(err, CliError::Config { ref path, .. } if path == "mesh.N"));
    }

    #[test]
    fn damped_runs_need_both_coefficients() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.damping = DampingConfig { a: 1.0, b: 0.0, hinged: false };
        assert!(matches!(c.generator(), Err(CliError::Config { ref path, .. }) if path == "damping"));
        c.damping = DampingConfig { a: 0.0, b: 0.0, hinged: false };
        assert!(c.generator().is_ok());
    }

    #[test]
    fn misaligned_interface_names_nearest_node() {
        let c = parse_config(r#"{"mesh": {"x0": 0.3, "c1": 1, "c2": 1, "N": 10}}"#).unwrap();
        let err = c.mesh().unwrap_err().to_string();
        assert!(err.contains("mesh.x0") && err.contains("nearest admissible"), "{err}");
    }
}
