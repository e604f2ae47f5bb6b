//! End-to-end run: load, preprocess, multi-pass correlation, validation,
//! derived fields, and output files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::colormap::{render_colormap, ColorScale};
use crate::config::PipelineConfig;
use crate::correlate::{multipass, Method};
use crate::csv_io::{export_scalars, export_vectors};
use crate::derive::derive_quantity;
use crate::error::{PivError, Result};
use crate::field::{GrayImage, NodeStatus, ScalarField, VectorField};
use crate::image_io::{load_image_with, write_bytes};
use crate::postprocess::{validate_pipeline, PostprocessReport};

/// Pipeline stage, used to tag failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Load,
    Grid,
    Preprocess,
    Correlate,
    Postprocess,
    Derive,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Grid => "grid",
            Stage::Preprocess => "preprocess",
            Stage::Correlate => "correlate",
            Stage::Postprocess => "postprocess",
            Stage::Derive => "derive",
            Stage::Write => "write",
        };
        f.write_str(s)
    }
}

#[derive(Debug)]
pub struct PipelineError {
    pub stage: Stage,
    pub source: PivError,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.source)
    }
}

impl std::error::Error for PipelineError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

/// Runtime knobs that are not part of the experiment description.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads for correlation and filtering; 0 picks the default.
    pub threads: usize,
    /// Forces every pass onto one correlation backend.
    pub method: Option<Method>,
}

/// Machine-readable summary written as `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub nx: usize,
    pub ny: usize,
    pub nodes: usize,
    pub measured: usize,
    pub interpolated: usize,
    pub outliers_remaining: usize,
    pub postprocess: PostprocessReport,
    pub mean_u: f64,
    pub mean_v: f64,
    pub timings_ms: BTreeMap<Stage, f64>,
    pub outputs: Vec<PathBuf>,
}

/// Everything produced by a run, before anything is written.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub field: VectorField,
    pub scalars: Vec<ScalarField>,
    pub postprocess: PostprocessReport,
    pub timings_ms: BTreeMap<Stage, f64>,
}

fn timed<T>(timings: &mut BTreeMap<Stage, f64>, stage: Stage, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *timings.entry(stage).or_default() += start.elapsed().as_secs_f64() * 1e3;
    out
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PivError::Parameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs preprocessing, correlation, validation and derivation on frames
/// already in memory.
pub fn analyze_frames(
    cfg: &PipelineConfig,
    a: &GrayImage,
    b: &GrayImage,
    opts: &RunOptions,
) -> std::result::Result<Analysis, PipelineError> {
    cfg.validate().at(Stage::Config)?;
    let mut passes = cfg.passes.clone();
    if let Some(m) = opts.method {
        passes.iter_mut().for_each(|p| p.method = m);
    }
    let mut timings = BTreeMap::new();
    timed(&mut timings, Stage::Grid, || {
        if a.width() != b.width() || a.height() != b.height() {
            return Err(PivError::Dimension(format!(
                "frames differ in size: {}x{} vs {}x{}",
                a.width(),
                a.height(),
                b.width(),
                b.height()
            )));
        }
        passes
            .iter()
            .try_for_each(|p| p.grid(a.width(), a.height()).map(|_| ()))
    })
    .at(Stage::Grid)?;

    with_pool(opts.threads, || {
        let (pa, pb) = timed(&mut timings, Stage::Preprocess, || {
            Ok::<_, PivError>((cfg.preprocess.apply(a)?, cfg.preprocess.apply(b)?))
        })
        .at(Stage::Preprocess)?;
        let raw = timed(&mut timings, Stage::Correlate, || {
            multipass(&pa, &pb, &passes, &cfg.postprocess)
        })
        .at(Stage::Correlate)?;
        let (field, report) = timed(&mut timings, Stage::Postprocess, || {
            validate_pipeline(&raw, &cfg.postprocess)
        })
        .at(Stage::Postprocess)?;
        let cal = cfg.derive.calibration();
        let scalars = timed(&mut timings, Stage::Derive, || {
            cfg.derive
                .fields
                .iter()
                .map(|&q| derive_quantity(&field, q, &cal))
                .collect::<Result<Vec<_>>>()
        })
        .at(Stage::Derive)?;
        Ok(Analysis {
            field,
            scalars,
            postprocess: report,
            timings_ms: timings,
        })
    })
    .at(Stage::Config)?
}

fn partial_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Writes vectors, scalar CSVs, colormaps and `report.json` into
/// `out_dir`. Files are written with a `.partial` suffix and renamed once
/// every output exists.
pub fn write_outputs(
    cfg: &PipelineConfig,
    analysis: &Analysis,
    out_dir: &Path,
) -> std::result::Result<RunReport, PipelineError> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir)
        .map_err(|e| PivError::io(out_dir, e))
        .at(Stage::Write)?;
    let mut outputs = Vec::new();
    let mut stage_file = |name: String, write: &dyn Fn(&Path) -> Result<()>| {
        let final_path = out_dir.join(name);
        let tmp = partial_path(&final_path);
        write(&tmp)?;
        outputs.push(final_path);
        Ok::<_, PivError>(())
    };
    let field = &analysis.field;
    stage_file("vectors.csv".into(), &|p| export_vectors(field, p)).at(Stage::Write)?;
    for s in &analysis.scalars {
        let name = s.quantity.as_str();
        stage_file(format!("{name}.csv"), &|p| export_scalars(s, p)).at(Stage::Write)?;
        if cfg.output.colormaps {
            let scale = ColorScale::for_field(s);
            stage_file(format!("{name}.ppm"), &|p| {
                render_colormap(s, &scale, p, cfg.output.colormap_cell)
            })
            .at(Stage::Write)?;
        }
    }
    let n = field.len() as f64;
    let mut timings = analysis.timings_ms.clone();
    let mut report = RunReport {
        nx: field.grid.nx,
        ny: field.grid.ny,
        nodes: field.len(),
        measured: field.count(NodeStatus::Measured),
        interpolated: field.count(NodeStatus::Interpolated),
        outliers_remaining: field.count(NodeStatus::Outlier),
        postprocess: analysis.postprocess.clone(),
        mean_u: field.u.iter().sum::<f64>() / n,
        mean_v: field.v.iter().sum::<f64>() / n,
        timings_ms: BTreeMap::new(),
        outputs: Vec::new(),
    };
    let report_path = out_dir.join("report.json");
    outputs.push(report_path.clone());
    for path in &outputs[..outputs.len() - 1] {
        std::fs::rename(partial_path(path), path)
            .map_err(|e| PivError::io(path, e))
            .at(Stage::Write)?;
    }
    timings.insert(Stage::Write, start.elapsed().as_secs_f64() * 1e3);
    report.timings_ms = timings;
    report.outputs = outputs;
    let json = serde_json::to_vec_pretty(&report).expect("report serializes");
    let tmp = partial_path(&report_path);
    write_bytes(&tmp, &json).at(Stage::Write)?;
    std::fs::rename(&tmp, &report_path)
        .map_err(|e| PivError::io(&report_path, e))
        .at(Stage::Write)?;
    Ok(report)
}

/// Full run from a config: reads both frames, analyzes, writes outputs.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    opts: &RunOptions,
) -> std::result::Result<RunReport, PipelineError> {
    cfg.validate().at(Stage::Config)?;
    let start = Instant::now();
    let a = load_image_with(&cfg.input.frame_a, cfg.input.convert_color).at(Stage::Load)?;
    let b = load_image_with(&cfg.input.frame_b, cfg.input.convert_color).at(Stage::Load)?;
    let load_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut analysis = analyze_frames(cfg, &a, &b, opts)?;
    analysis.timings_ms.insert(Stage::Load, load_ms);
    write_outputs(cfg, &analysis, &cfg.output.dir)
}
