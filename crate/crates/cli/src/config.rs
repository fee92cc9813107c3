//! Run configuration: an optional TOML file merged under command-line flags.

use std::path::{Path, PathBuf};

use esfem_core::assembly::Method;
use esfem_core::bvp::{BoundaryCondition, BvpSpec, Field};
use esfem_core::mesh::Mode;
use serde::Deserialize;

use crate::CliError;

/// Keys accepted in the config file. Every key mirrors a flag of the same name.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub mesh: Option<PathBuf>,
    pub mode: Option<String>,
    pub divisions: Option<Vec<usize>>,
    pub extent_min: Option<Vec<f64>>,
    pub extent_max: Option<Vec<f64>>,
    pub perturb: Option<f64>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub method: Option<String>,
    pub tol: Option<f64>,
    pub max_iterations: Option<usize>,
    pub out: Option<PathBuf>,
    pub spec: Option<String>,
    pub timings: Option<bool>,
    pub bvp: Option<InlineBvp>,
}

/// A boundary value problem written out in the config file. Coefficients are
/// constants; each condition reads `a ∂V/∂n + γ V = q` on its tag.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineBvp {
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub source: f64,
    #[serde(default)]
    pub conditions: Vec<InlineCondition>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineCondition {
    pub tag: i32,
    pub a: f64,
    pub gamma: f64,
    pub q: f64,
}

impl InlineBvp {
    pub fn to_spec(&self, mode: Mode) -> BvpSpec {
        let mut spec = BvpSpec::laplace(mode);
        spec.alpha = Field::Constant(self.alpha);
        spec.beta = Field::Constant(self.beta);
        spec.source = Field::Constant(self.source);
        for c in &self.conditions {
            spec = spec.with_condition(BoundaryCondition::robin(c.tag, c.a, c.gamma, Field::Constant(c.q)));
        }
        spec
    }
}

pub fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        let category = if e.kind() == std::io::ErrorKind::NotFound { "file-not-found" } else { "io-error" };
        CliError::new(category, format!("{}: {e}", path.display()))
    })?;
    parse(&text, path)
}

pub fn parse(text: &str, path: &Path) -> Result<FileConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1);
        CliError::new("config-error", format!("{}:{line}: {}", path.display(), e.message()))
    })
}

pub fn parse_mode(s: &str) -> Result<Mode, CliError> {
    s.parse().map_err(CliError::from)
}

/// `fem`, `esfem` or `both`.
pub fn parse_methods(s: &str) -> Result<Vec<Method>, CliError> {
    if s.eq_ignore_ascii_case("both") {
        return Ok(vec![Method::Fem, Method::EsFem]);
    }
    Ok(vec![s.parse::<Method>()?])
}

pub fn point(values: &[f64], what: &str) -> Result<[f64; 3], CliError> {
    if values.is_empty() || values.len() > 3 {
        return Err(CliError::new("invalid-argument", format!("{what} needs 1 to 3 coordinates")));
    }
    let mut p = [0.0; 3];
    p[..values.len()].copy_from_slice(values);
    Ok(p)
}
