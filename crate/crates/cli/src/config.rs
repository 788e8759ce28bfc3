//! Run configuration: a JSON document with every unknown key rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use spinorbit_core::dispersion::TabulatedSymbol;
use spinorbit_core::oracle::DiscretizationConfig;
use spinorbit_core::potential::TabulatedPotential;
use spinorbit_core::variational::AssemblyConfig;
use spinorbit_core::{Coupling, Potential, SearchConfig, Vec2};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{file}:{line}:{column}: at `{field}`: {message}")]
    Parse { file: String, line: usize, column: usize, field: String, message: String },
    #[error("at `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Dispersion,
    Extrema,
    Certify,
    Bounds,
    Solve,
    Full,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingSpec {
    Zero,
    Rashba { alpha: f64 },
    Dresselhaus { alpha: f64 },
    Mixed { alpha_r: f64, alpha_d: f64 },
    /// CSV with columns px,py,re_a,im_a on a uniform grid
    Tabulated { path: PathBuf },
}

/// A well, optionally translated to `center` and multiplied by `scale`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Gaussian {
        depth: f64,
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "one")]
        scale: f64,
    },
    Circular {
        depth: f64,
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "one")]
        scale: f64,
    },
    /// CSV with columns x,y,v on a uniform grid
    Tabulated {
        path: PathBuf,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "one")]
        scale: f64,
    },
}

impl PotentialSpec {
    fn modifiers(&self) -> ([f64; 2], f64) {
        match *self {
            PotentialSpec::Zero => ([0.0; 2], 1.0),
            PotentialSpec::Gaussian { center, scale, .. }
            | PotentialSpec::Circular { center, scale, .. }
            | PotentialSpec::Tabulated { center, scale, .. } => (center, scale),
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableSpec {
    pub px: (f64, f64, usize),
    pub py: (f64, f64, usize),
}

impl Default for TableSpec {
    fn default() -> Self {
        TableSpec { px: (-2.0, 2.0, 41), py: (-2.0, 2.0, 41) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnchorSpec {
    /// largest number of points of S to try
    pub n_max: usize,
    /// rotation of equally spaced anchors on a circle
    pub phase: f64,
}

impl Default for AnchorSpec {
    fn default() -> Self {
        AnchorSpec { n_max: 4, phase: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSpec {
    /// strictly descending exponents in (0, 2]
    pub a_grid: Vec<f64>,
    pub cond_max: f64,
    pub sep_min_factor: f64,
    pub tail_tol: f64,
}

impl Default for BoundsSpec {
    fn default() -> Self {
        let d = AssemblyConfig::default();
        BoundsSpec {
            a_grid: vec![1.0, 0.5, 0.25, 0.125],
            cond_max: d.cond_max,
            sep_min_factor: d.sep_min_factor,
            tail_tol: d.tail_tol,
        }
    }
}

impl BoundsSpec {
    pub fn assembly(&self) -> AssemblyConfig {
        AssemblyConfig { cond_max: self.cond_max, sep_min_factor: self.sep_min_factor, tail_tol: self.tail_tol }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSpec {
    pub tol: f64,
}

impl Default for ValidationSpec {
    fn default() -> Self {
        ValidationSpec { tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub report: String,
    pub dispersion_csv: String,
    pub extrema_csv: String,
    pub certificate_csv: String,
    pub matrices_csv: String,
    pub bounds_csv: String,
    pub eigenvalues_csv: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            report: "report.json".into(),
            dispersion_csv: "dispersion.csv".into(),
            extrema_csv: "extrema.csv".into(),
            certificate_csv: "certificate.csv".into(),
            matrices_csv: "matrices.csv".into(),
            bounds_csv: "bounds.csv".into(),
            eigenvalues_csv: "eigenvalues.csv".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "natural")]
    pub units: String,
    #[serde(default = "full")]
    pub task: Task,
    pub coupling: CouplingSpec,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub dispersion_table: TableSpec,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub anchors: AnchorSpec,
    #[serde(default)]
    pub bounds: BoundsSpec,
    #[serde(default)]
    pub oracle: DiscretizationConfig,
    #[serde(default)]
    pub validation: ValidationSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn natural() -> String {
    "natural".into()
}

fn full() -> Task {
    Task::Full
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let cfg = Self::from_str(&text, &path.display().to_string())?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")))
    }

    pub fn from_str(text: &str, file: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            let text = inner.to_string();
            let message = match text.rfind(" at line ") {
                Some(i) => text[..i].to_string(),
                None => text,
            };
            ConfigError::Parse {
                file: file.into(),
                line: inner.line(),
                column: inner.column(),
                field,
                message,
            }
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Makes data paths relative to the config file's directory.
    fn resolve_paths(mut self, base: &Path) -> Result<Self, ConfigError> {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let CouplingSpec::Tabulated { path } = &mut self.coupling {
            fix(path);
            std::fs::metadata(&*path).map_err(|e| invalid("coupling.path", e))?;
        }
        if let PotentialSpec::Tabulated { path, .. } = &mut self.potential {
            fix(path);
            std::fs::metadata(&*path).map_err(|e| invalid("potential.path", e))?;
        }
        Ok(self)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if self.units != "natural" {
            return Err(invalid("units", format!("only \"natural\" is supported, got {:?}", self.units)));
        }
        let finite = |field: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(invalid(field, format!("must be finite, got {x}")))
            }
        };
        match &self.coupling {
            CouplingSpec::Rashba { alpha } | CouplingSpec::Dresselhaus { alpha } => finite("coupling.alpha", *alpha)?,
            CouplingSpec::Mixed { alpha_r, alpha_d } => {
                finite("coupling.alpha_r", *alpha_r)?;
                finite("coupling.alpha_d", *alpha_d)?;
            }
            _ => {}
        }
        match &self.potential {
            PotentialSpec::Gaussian { depth, radius, .. } | PotentialSpec::Circular { depth, radius, .. } => {
                finite("potential.depth", *depth)?;
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(invalid("potential.radius", format!("must be positive, got {radius}")));
                }
            }
            _ => {}
        }
        let (center, scale) = self.potential.modifiers();
        finite("potential.scale", scale)?;
        finite("potential.center", center[0])?;
        finite("potential.center", center[1])?;
        for (name, (lo, hi, n)) in [("dispersion_table.px", self.dispersion_table.px), ("dispersion_table.py", self.dispersion_table.py)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) || n == 0 || (n == 1 && lo != hi) {
                return Err(invalid(name, "expected [lo, hi, n] with lo <= hi and n >= 1"));
            }
        }
        if self.anchors.n_max == 0 {
            return Err(invalid("anchors.n_max", "must be at least 1"));
        }
        let g = &self.bounds.a_grid;
        if g.is_empty() || g.iter().any(|&a| !(a > 0.0 && a <= 2.0)) || g.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("bounds.a_grid", "must be non-empty, strictly descending, within (0, 2]"));
        }
        if !(self.bounds.cond_max > 1.0) {
            return Err(invalid("bounds.cond_max", "must exceed 1"));
        }
        if !(self.validation.tol >= 0.0) {
            return Err(invalid("validation.tol", "must be non-negative"));
        }
        if self.search.n_angle < 8 || self.search.n_radius < 8 {
            return Err(invalid("search", "n_angle and n_radius must be at least 8"));
        }
        self.oracle.validate().map_err(|e| invalid("oracle", e))?;
        Ok(())
    }

    pub fn coupling(&self) -> Result<Coupling, ConfigError> {
        Ok(match &self.coupling {
            CouplingSpec::Zero => Coupling::Zero,
            CouplingSpec::Rashba { alpha } => Coupling::Rashba { alpha: *alpha },
            CouplingSpec::Dresselhaus { alpha } => Coupling::Dresselhaus { alpha: *alpha },
            CouplingSpec::Mixed { alpha_r, alpha_d } => Coupling::Mixed { alpha_r: *alpha_r, alpha_d: *alpha_d },
            CouplingSpec::Tabulated { path } => Coupling::Custom(Arc::new(
                TabulatedSymbol::from_csv(path).map_err(|e| invalid("coupling.path", e))?,
            )),
        })
    }

    pub fn potential(&self) -> Result<Potential, ConfigError> {
        let base = match &self.potential {
            PotentialSpec::Zero => Potential::Zero,
            PotentialSpec::Gaussian { depth, radius, .. } => Potential::Gaussian { depth: *depth, radius: *radius },
            PotentialSpec::Circular { depth, radius, .. } => Potential::Circular { depth: *depth, radius: *radius },
            PotentialSpec::Tabulated { path, .. } => Potential::Tabulated(Arc::new(
                TabulatedPotential::from_csv(path).map_err(|e| invalid("potential.path", e))?,
            )),
        };
        let ([cx, cy], scale) = self.potential.modifiers();
        let v = if scale != 1.0 { base.scaled(scale) } else { base };
        Ok(if cx != 0.0 || cy != 0.0 { v.shifted(Vec2::new(cx, cy)) } else { v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "coupling": {"kind": "rashba", "alpha": 1.0},
        "potential": {"kind": "gaussian", "depth": 0.5, "radius": 1.0}
    }"#;

    #[test]
    fn defaults_are_filled_in() {
        let cfg = RunConfig::from_str(MINIMAL, "inline").unwrap();
        assert_eq!(cfg.task, Task::Full);
        assert_eq!(cfg.units, "natural");
        assert_eq!(cfg.oracle.n, 512);
        assert_eq!(cfg.bounds.a_grid, vec![1.0, 0.5, 0.25, 0.125]);
        assert_eq!(cfg.potential.modifiers(), ([0.0; 2], 1.0));
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_location() {
        let text = r#"{
            "coupling": {"kind": "rashba", "alpha": 1.0},
            "potential": {"kind": "gaussian", "depth": 0.5, "radius": 1.0, "width": 2},
            "task": "extrema"
        }"#;
        match RunConfig::from_str(text, "c.json") {
            Err(ConfigError::Parse { line, field, message, .. }) => {
                assert_eq!(line, 3);
                assert!(field.starts_with("potential"), "{field}");
                assert!(message.contains("width"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nested_unknown_keys_are_rejected() {
        let text = r#"{
            "coupling": {"kind": "zero"},
            "potential": {"kind": "zero"},
            "oracle": {"n": 128, "size": 3}
        }"#;
        assert!(matches!(RunConfig::from_str(text, "c.json"), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn non_positive_radius_is_rejected() {
        let text = r#"{"coupling": {"kind": "zero"}, "potential": {"kind": "circular", "depth": 1, "radius": 0}}"#;
        assert!(matches!(RunConfig::from_str(text, "c.json"), Err(ConfigError::Invalid { .. })));
    }

    #[test]
    fn small_grids_are_rejected() {
        let text = r#"{"coupling": {"kind": "zero"}, "potential": {"kind": "zero"}, "oracle": {"n": 32}}"#;
        assert!(matches!(RunConfig::from_str(text, "c.json"), Err(ConfigError::Invalid { .. })));
    }

    #[test]
    fn potential_modifiers_apply() {
        let text = r#"{"coupling": {"kind": "zero"},
            "potential": {"kind": "gaussian", "depth": 1, "radius": 1, "center": [1, 0], "scale": 2}}"#;
        let v = RunConfig::from_str(text, "c.json").unwrap().potential().unwrap();
        assert!((v.eval(Vec2::new(1.0, 0.0)).unwrap() + 2.0).abs() < 1e-15);
    }
}
