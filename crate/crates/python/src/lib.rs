//! Python bindings: images, vector fields, synthetic pairs and the
//! analysis pipeline.

use std::collections::HashMap;

use piv_core::config::PipelineConfig;
use piv_core::csv_io::{vectors_from_csv, vectors_to_csv};
use piv_core::derive::{derive_quantity, Calibration};
use piv_core::image_io::{load_image, save_pgm, BitDepth};
use piv_core::pipeline::{analyze_frames, RunOptions};
use piv_core::postprocess::{validate_pipeline, PostprocessConfig};
use piv_core::synth::{gen_pair, FlowSpec, SynthParams};
use piv_core::{NodeStatus, PivError, Quantity};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: PivError) -> PyErr {
    match e.exit_code() {
        2 => PyIOError::new_err(e.to_string()),
        3 => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Grayscale image with intensities in [0, 1], stored row-major.
#[pyclass(name = "GrayImage", module = "pivtk", skip_from_py_object)]
#[derive(Clone)]
struct PyGrayImage {
    inner: piv_core::GrayImage,
}

#[pymethods]
impl PyGrayImage {
    #[new]
    fn new(width: usize, height: usize, data: Vec<f64>) -> PyResult<Self> {
        let inner = piv_core::GrayImage::new(width, height, data).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: load_image(path).map_err(py_err)?,
        })
    }

    #[pyo3(signature = (path, bits = 8))]
    fn save_pgm(&self, path: &str, bits: u8) -> PyResult<()> {
        let depth = match bits {
            8 => BitDepth::Eight,
            16 => BitDepth::Sixteen,
            _ => return Err(PyValueError::new_err("bits must be 8 or 16")),
        };
        save_pgm(&self.inner, path, depth).map_err(py_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn get(&self, col: usize, row: usize) -> PyResult<f64> {
        if col >= self.inner.width() || row >= self.inner.height() {
            return Err(PyValueError::new_err("pixel out of range"));
        }
        Ok(self.inner.get(col, row))
    }

    fn __repr__(&self) -> String {
        format!("GrayImage({}x{})", self.inner.width(), self.inner.height())
    }
}

/// Displacement field on a regular grid of interrogation windows.
#[pyclass(name = "VectorField", module = "pivtk", skip_from_py_object)]
#[derive(Clone)]
struct PyVectorField {
    inner: piv_core::VectorField,
}

#[pymethods]
impl PyVectorField {
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: vectors_from_csv(text).map_err(py_err)?,
        })
    }

    fn to_csv(&self) -> PyResult<String> {
        vectors_to_csv(&self.inner).map_err(py_err)
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.grid.nx
    }

    #[getter]
    fn ny(&self) -> usize {
        self.inner.grid.ny
    }

    #[getter]
    fn window(&self) -> usize {
        self.inner.grid.window
    }

    #[getter]
    fn step(&self) -> usize {
        self.inner.grid.step
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.inner.u.clone()
    }

    #[getter]
    fn v(&self) -> Vec<f64> {
        self.inner.v.clone()
    }

    #[getter]
    fn status(&self) -> Vec<&'static str> {
        self.inner.status.iter().map(|s| s.as_str()).collect()
    }

    /// Node centers in pixel coordinates, row-major.
    fn centers(&self) -> Vec<(f64, f64)> {
        self.inner.grid.centers()
    }

    fn count(&self, status: &str) -> PyResult<usize> {
        let s = NodeStatus::parse(status)
            .ok_or_else(|| PyValueError::new_err(format!("unknown status {status:?}")))?;
        Ok(self.inner.count(s))
    }

    /// Outlier detection, hole filling and optional smoothing with default settings.
    fn validated(&self) -> PyResult<Self> {
        let (inner, _) =
            validate_pipeline(&self.inner, &PostprocessConfig::default()).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[pyo3(signature = (quantity, units_per_pixel = 1.0, frame_interval = 1.0))]
    fn derive(
        &self,
        quantity: &str,
        units_per_pixel: f64,
        frame_interval: f64,
    ) -> PyResult<Vec<f64>> {
        let q = parse_quantity(quantity)?;
        let cal = Calibration {
            units_per_pixel,
            frame_interval,
        };
        cal.validate().map_err(py_err)?;
        Ok(derive_quantity(&self.inner, q, &cal)
            .map_err(py_err)?
            .values)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "VectorField({}x{} nodes, window {}, step {})",
            self.inner.grid.nx, self.inner.grid.ny, self.inner.grid.window, self.inner.grid.step
        )
    }
}

fn parse_quantity(s: &str) -> PyResult<Quantity> {
    Quantity::parse(s).ok_or_else(|| PyValueError::new_err(format!("unknown quantity {s:?}")))
}

fn parse_flow(kind: &str, params: &HashMap<String, f64>) -> PyResult<FlowSpec> {
    let get = |k: &str| {
        params
            .get(k)
            .copied()
            .ok_or_else(|| PyValueError::new_err(format!("flow {kind:?} needs parameter {k:?}")))
    };
    Ok(match kind {
        "uniform" => FlowSpec::Uniform {
            u: get("u")?,
            v: get("v")?,
        },
        "rigid_rotation" => FlowSpec::RigidRotation {
            cx: get("cx")?,
            cy: get("cy")?,
            omega: get("omega")?,
        },
        "rankine" => FlowSpec::Rankine {
            cx: get("cx")?,
            cy: get("cy")?,
            gamma: get("gamma")?,
            core_radius: get("core_radius")?,
        },
        "shear" => FlowSpec::Shear { rate: get("rate")? },
        _ => return Err(PyValueError::new_err(format!("unknown flow {kind:?}"))),
    })
}

/// Renders a synthetic pair. Returns `(frame_a, frame_b, truth)` where
/// `truth` samples the flow on a `window`/`step` grid.
#[pyfunction]
#[pyo3(signature = (flow, params, width = 256, height = 256, density = 0.03, seed = 0, noise = 0.0, window = 32, step = 16))]
#[allow(clippy::too_many_arguments)]
fn synth_pair(
    flow: &str,
    params: HashMap<String, f64>,
    width: usize,
    height: usize,
    density: f64,
    seed: u64,
    noise: f64,
    window: usize,
    step: usize,
) -> PyResult<(PyGrayImage, PyGrayImage, PyVectorField)> {
    let flow = parse_flow(flow, &params)?;
    let mut p = SynthParams::with_density(width, height, density, seed);
    p.noise_sigma = noise;
    let pair = gen_pair(&flow, &p).map_err(py_err)?;
    let grid = piv_core::make_grid(width, height, window, step).map_err(py_err)?;
    let truth = pair.ground_truth(grid);
    Ok((
        PyGrayImage {
            inner: pair.frame_a,
        },
        PyGrayImage {
            inner: pair.frame_b,
        },
        PyVectorField { inner: truth },
    ))
}

/// Runs the full pipeline on two frames. `config` is optional TOML text;
/// its `[input]` section may be omitted. Returns the final field and a
/// dict of derived scalar fields.
#[pyfunction]
#[pyo3(signature = (frame_a, frame_b, config = None, threads = 0))]
fn analyze(
    py: Python<'_>,
    frame_a: &PyGrayImage,
    frame_b: &PyGrayImage,
    config: Option<&str>,
    threads: usize,
) -> PyResult<(PyVectorField, HashMap<String, Vec<f64>>)> {
    let cfg = match config {
        None => PipelineConfig::for_frames("a", "b"),
        Some(text) => {
            let text = if text.contains("[input]") {
                text.to_string()
            } else {
                format!("[input]\nframe_a = \"a\"\nframe_b = \"b\"\n{text}")
            };
            PipelineConfig::from_toml_str(&text).map_err(py_err)?
        }
    };
    let opts = RunOptions {
        threads,
        method: None,
    };
    let (a, b) = (&frame_a.inner, &frame_b.inner);
    let run = py
        .detach(|| analyze_frames(&cfg, a, b, &opts))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let scalars = run
        .scalars
        .into_iter()
        .map(|s| (s.quantity.as_str().to_string(), s.values))
        .collect();
    Ok((PyVectorField { inner: run.field }, scalars))
}

#[pymodule]
fn pivtk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrayImage>()?;
    m.add_class::<PyVectorField>()?;
    m.add_function(wrap_pyfunction!(synth_pair, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    Ok(())
}
