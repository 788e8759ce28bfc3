//! dispersion → extrema → certify → bounds → solve → validate, stopping at the configured task.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use spinorbit_core::certify::{self, CountPrediction};
use spinorbit_core::dispersion::{dispersion_table, find_kappa_and_s, quadratic_constant, DispersionSample};
use spinorbit_core::linalg::CMat;
use spinorbit_core::oracle::{self, OracleSpectrum, Validation};
use spinorbit_core::variational::{assemble_matrices, sweep_exponent, Sweep, TrialFamily};
use spinorbit_core::{DefinitenessCertificate, ExtremumSet, Vec2, Verdict};

use crate::config::{ConfigError, RunConfig, Task};
use crate::json::{self, format_f64};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] spinorbit_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("serializing the report: {0}")]
    Json(#[from] serde_json::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFICATION: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Serialize)]
pub struct DispersionSummary {
    pub path: String,
    pub rows: usize,
    pub min_lambda_minus: f64,
}

#[derive(Debug, Serialize)]
pub struct CertifySection {
    pub prediction_count: usize,
    pub method: String,
    pub evidence: Option<f64>,
    pub certificate: DefinitenessCertificate,
}

#[derive(Debug, Serialize)]
pub struct SpectralReport {
    pub version: String,
    pub task: Task,
    pub config: RunConfig,
    pub coupling: String,
    pub potential: String,
    pub dispersion: Option<DispersionSummary>,
    pub extrema: Option<ExtremumSet>,
    pub certify: Option<CertifySection>,
    pub bounds: Option<Sweep>,
    pub oracle: Option<OracleSpectrum>,
    pub validation: Option<Validation>,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
    pub exit_code: i32,
}

struct Out {
    dir: PathBuf,
    written: Vec<String>,
}

impl Out {
    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, RunError> {
    csv::Writer::from_path(path).map_err(|source| RunError::Csv { path: path.display().to_string(), source })
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), RunError> {
    let err = |source| RunError::Csv { path: path.display().to_string(), source };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.flush().map_err(|source| RunError::Io { path: path.display().to_string(), source })
}

/// CSV with columns px,py,lambda_minus,lambda_plus.
pub fn emit_dispersion_table(samples: &[DispersionSample], path: &Path) -> Result<(), RunError> {
    write_rows(
        path,
        &["px", "py", "lambda_minus", "lambda_plus"],
        samples.iter().map(|s| {
            vec![format_f64(s.p.x), format_f64(s.p.y), format_f64(s.lambda_minus), format_f64(s.lambda_plus)]
        }),
    )
}

fn matrix_rows(name: &str, m: &CMat) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            rows.push(vec![
                name.to_string(),
                i.to_string(),
                j.to_string(),
                format_f64(m[(i, j)].re),
                format_f64(m[(i, j)].im),
            ]);
        }
    }
    rows
}

fn points_rows(points: &[Vec2]) -> Vec<Vec<String>> {
    points.iter().map(|p| vec![format_f64(p.x), format_f64(p.y)]).collect()
}

/// Runs the pipeline, writes every artifact and returns the report with its exit code.
pub fn run(cfg: &RunConfig) -> Result<SpectralReport, RunError> {
    let out_dir = cfg.output.dir.as_path();
    fs::create_dir_all(out_dir).map_err(|source| RunError::Io { path: out_dir.display().to_string(), source })?;
    let coupling = cfg.coupling()?;
    let potential = cfg.potential()?;
    let names = &cfg.output;
    let mut out = Out { dir: out_dir.to_path_buf(), written: Vec::new() };
    let mut report = SpectralReport {
        version: env!("CARGO_PKG_VERSION").into(),
        task: cfg.task,
        config: cfg.clone(),
        coupling: coupling.name(),
        potential: potential.name(),
        dispersion: None,
        extrema: None,
        certify: None,
        bounds: None,
        oracle: None,
        validation: None,
        warnings: Vec::new(),
        outputs: Vec::new(),
        exit_code: EXIT_OK,
    };
    let task = cfg.task;

    let samples = dispersion_table(&coupling, cfg.dispersion_table.px, cfg.dispersion_table.py)?;
    let path = out.path(&names.dispersion_csv);
    emit_dispersion_table(&samples, &path)?;
    report.dispersion = Some(DispersionSummary {
        path: names.dispersion_csv.clone(),
        rows: samples.len(),
        min_lambda_minus: samples.iter().map(|s| s.lambda_minus).fold(f64::INFINITY, f64::min),
    });
    if task == Task::Dispersion {
        return finish(report, out, cfg);
    }

    let mut ext = find_kappa_and_s(&coupling, &cfg.search)?;
    match quadratic_constant(&coupling, &ext) {
        Ok(q) => ext.curvature = Some(q),
        Err(e) => report.warnings.push(format!("quadratic constant: {e}")),
    }
    info!("κ = {}, {} points of S", ext.kappa, ext.points.len());
    let path = out.path(&names.extrema_csv);
    write_rows(&path, &["px", "py"], points_rows(&ext.points))?;
    report.extrema = Some(ext.clone());
    if task == Task::Extrema {
        return finish(report, out, cfg);
    }

    let n_max = cfg.anchors.n_max;
    let prediction: CountPrediction = certify::predicted_count(&ext, &potential, n_max)?;
    let cap = ext.capacity(n_max);
    let anchors = match &prediction.certificate {
        Some(c) => c.anchors.clone(),
        None => ext.anchors(cap, cfg.anchors.phase),
    };
    let certificate = match &prediction.certificate {
        Some(c) => c.clone(),
        None => certify::certify(&potential, &anchors)?,
    };
    let path = out.path(&names.certificate_csv);
    write_rows(&path, &["matrix", "m", "n", "re", "im"], matrix_rows("C", &certificate.matrix))?;
    let certified = certificate.verdict == Verdict::NegativeDefinite;
    if !certified {
        warn!("no negative-definite certificate: {:?}", certificate.verdict);
        report.exit_code = EXIT_CERTIFICATION;
    }
    report.certify = Some(CertifySection {
        prediction_count: prediction.count,
        method: prediction.method,
        evidence: prediction.evidence,
        certificate,
    });
    if task == Task::Certify {
        return finish(report, out, cfg);
    }

    let assembly = cfg.bounds.assembly();
    let mut certified_count = 0;
    match sweep_exponent(&coupling, &ext, &potential, &anchors, &cfg.bounds.a_grid, &assembly) {
        Ok(sweep) => {
            let best = &sweep.best;
            certified_count = best.certified_count;
            let path = out.path(&names.bounds_csv);
            write_rows(
                &path,
                &["n", "mu", "nu", "margin", "certified"],
                (0..best.mu.len()).map(|i| {
                    vec![
                        (i + 1).to_string(),
                        format_f64(best.mu[i]),
                        format_f64(best.nu[i]),
                        format_f64(best.margins[i]),
                        (i < best.certified_count).to_string(),
                    ]
                }),
            )?;
            let family = TrialFamily::new(&coupling, &ext, best.a_used, &anchors, &assembly)?;
            let m = assemble_matrices(&coupling, &ext, &potential, &family, &assembly)?;
            let mut rows = matrix_rows("K", &m.k);
            rows.extend(matrix_rows("W", &m.w));
            rows.extend(matrix_rows("G", &m.g));
            let path = out.path(&names.matrices_csv);
            write_rows(&path, &["matrix", "m", "n", "re", "im"], rows)?;
            report.bounds = Some(sweep);
        }
        Err(e) => report.warnings.push(format!("bounds: {e}")),
    }
    if task == Task::Bounds {
        return finish(report, out, cfg);
    }

    let mut ocfg = cfg.oracle.clone();
    if ocfg.wanted.is_none() {
        ocfg.wanted = Some(certified_count + 4);
    }
    let spectrum = oracle::solve(&coupling, &potential, ext.kappa, &ocfg)?;
    let path = out.path(&names.eigenvalues_csv);
    write_rows(
        &path,
        &["n", "energy", "gap", "residual", "drift"],
        spectrum.eigenvalues.iter().enumerate().map(|(i, e)| {
            vec![
                (i + 1).to_string(),
                format_f64(*e),
                format_f64(e - spectrum.kappa_h),
                format_f64(spectrum.residuals[i]),
                spectrum.drift.get(i).map_or_else(String::new, |d| format_f64(*d)),
            ]
        }),
    )?;
    if !spectrum.complete {
        report.warnings.push(format!(
            "all {} computed eigenvalues lie below the threshold; the count is a lower bound",
            spectrum.computed.len()
        ));
    }
    if spectrum.converged_under_refinement == Some(false) {
        report.warnings.push("count or values moved under grid refinement beyond drift_tol".into());
    }
    if task == Task::Solve {
        report.oracle = Some(spectrum);
        return finish(report, out, cfg);
    }

    if let Some(sweep) = &report.bounds {
        let v = oracle::validate_bounds(&spectrum, &sweep.best, cfg.validation.tol);
        if !v.pass {
            report.exit_code = EXIT_VALIDATION;
        }
        report.validation = Some(v);
    } else {
        report.warnings.push("no variational report to validate".into());
    }
    report.oracle = Some(spectrum);
    finish(report, out, cfg)
}

fn finish(mut report: SpectralReport, mut out: Out, cfg: &RunConfig) -> Result<SpectralReport, RunError> {
    let path = out.path(&cfg.output.report);
    report.outputs = out.written.clone();
    let text = json::to_string(&report)?;
    fs::write(&path, text).map_err(|source| RunError::Io { path: path.display().to_string(), source })?;
    Ok(report)
}
