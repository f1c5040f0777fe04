//! Python bindings for gvp-core.

use std::path::PathBuf;

use gvp_core::analytics::{self, CoverageSample, EventParams, LocalClock, ProfileKind};
use gvp_core::evaluation;
use gvp_core::simulate::{expected_metrics, generate, with_operating_point, ScenarioConfig};
use gvp_core::{detector, geometry, Error, ErrorClass, GroundTruthBox};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type MatchTriples = (Vec<(usize, usize, f64)>, Vec<usize>, Vec<usize>);
type BinRow = (i64, String, usize, Option<f64>);
type EventRow = (String, i64, i64, f64, f64);

fn to_py(e: Error) -> PyErr {
    match e.class() {
        ErrorClass::Validation => PyValueError::new_err(e.to_string()),
        ErrorClass::Adapter => PyRuntimeError::new_err(e.to_string()),
        ErrorClass::Io => PyOSError::new_err(e.to_string()),
    }
}

/// Pixel box with top-left corner (x, y).
#[pyclass(name = "BBox", module = "gvp", frozen, eq, skip_from_py_object)]
#[derive(Clone, Copy, PartialEq)]
pub struct PyBBox(geometry::BBox);

#[pymethods]
impl PyBBox {
    #[new]
    fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self(geometry::BBox::new(x, y, w, h))
    }

    #[getter]
    fn x(&self) -> f64 {
        self.0.x
    }

    #[getter]
    fn y(&self) -> f64 {
        self.0.y
    }

    #[getter]
    fn w(&self) -> f64 {
        self.0.w
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h
    }

    fn area(&self) -> f64 {
        self.0.area()
    }

    fn __repr__(&self) -> String {
        format!("BBox(x={}, y={}, w={}, h={})", self.0.x, self.0.y, self.0.w, self.0.h)
    }
}

#[pyclass(name = "Detection", module = "gvp", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PyDetection(geometry::Detection);

#[pymethods]
impl PyDetection {
    #[new]
    #[pyo3(signature = (bbox, confidence, class_id = 0))]
    fn new(bbox: &PyBBox, confidence: f64, class_id: u32) -> Self {
        Self(geometry::Detection::new(bbox.0, confidence, class_id))
    }

    #[getter]
    fn bbox(&self) -> PyBBox {
        PyBBox(self.0.bbox)
    }

    #[getter]
    fn confidence(&self) -> f64 {
        self.0.confidence
    }

    #[getter]
    fn class_id(&self) -> u32 {
        self.0.class_id
    }

    fn __repr__(&self) -> String {
        let b = self.0.bbox;
        format!(
            "Detection(BBox(x={}, y={}, w={}, h={}), confidence={}, class_id={})",
            b.x, b.y, b.w, b.h, self.0.confidence, self.0.class_id
        )
    }
}

#[pyclass(name = "RoiPolygon", module = "gvp", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyRoi(geometry::RoiPolygon);

#[pymethods]
impl PyRoi {
    #[new]
    fn new(vertices: Vec<(f64, f64)>, frame_w: f64, frame_h: f64) -> PyResult<Self> {
        geometry::RoiPolygon::new(vertices, frame_w, frame_h).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn rect(bbox: &PyBBox, frame_w: f64, frame_h: f64) -> PyResult<Self> {
        geometry::RoiPolygon::rect(bbox.0, frame_w, frame_h).map(Self).map_err(to_py)
    }

    #[getter]
    fn vertices(&self) -> Vec<(f64, f64)> {
        self.0.vertices().to_vec()
    }

    fn area(&self) -> f64 {
        self.0.area()
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        self.0.contains(x, y)
    }
}

fn boxes(items: &[PyRef<'_, PyBBox>]) -> Vec<geometry::BBox> {
    items.iter().map(|b| b.0).collect()
}

fn detections(items: &[PyRef<'_, PyDetection>]) -> Vec<geometry::Detection> {
    items.iter().map(|d| d.0).collect()
}

fn series(timestamps: Vec<i64>, coverage: Vec<f64>) -> PyResult<Vec<CoverageSample>> {
    if timestamps.len() != coverage.len() {
        return Err(PyValueError::new_err("timestamps and coverage differ in length"));
    }
    Ok(timestamps
        .into_iter()
        .zip(coverage)
        .map(|(timestamp, coverage)| CoverageSample {
            timestamp,
            coverage,
            waste_count: 0,
        })
        .collect())
}

#[pyfunction]
fn iou(a: &PyBBox, b: &PyBBox) -> f64 {
    geometry::iou(&a.0, &b.0)
}

#[pyfunction]
fn clip_box(bbox: &PyBBox, frame_w: f64, frame_h: f64) -> PyBBox {
    PyBBox(geometry::clip_box(&bbox.0, frame_w, frame_h))
}

#[pyfunction]
fn union_area(items: Vec<PyRef<'_, PyBBox>>) -> f64 {
    geometry::union_area(&boxes(&items))
}

#[pyfunction]
#[pyo3(signature = (items, roi, grid_scale = 1))]
fn coverage_fraction(items: Vec<PyRef<'_, PyBBox>>, roi: &PyRoi, grid_scale: u32) -> PyResult<f64> {
    geometry::coverage_fraction(&boxes(&items), &roi.0, grid_scale).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (items, iou_threshold = 0.5))]
fn nms(items: Vec<PyRef<'_, PyDetection>>, iou_threshold: f64) -> Vec<PyDetection> {
    detector::nms(&detections(&items), iou_threshold).into_iter().map(PyDetection).collect()
}

/// Returns (detection, ground_truth, iou) triples plus the unmatched indices on each side.
#[pyfunction]
#[pyo3(signature = (dets, gts, iou_threshold = 0.5))]
fn match_greedy(
    dets: Vec<PyRef<'_, PyDetection>>,
    gts: Vec<PyRef<'_, PyBBox>>,
    iou_threshold: f64,
) -> MatchTriples {
    let gts: Vec<GroundTruthBox> = gts.iter().map(|b| GroundTruthBox::new(b.0, 0)).collect();
    let m = evaluation::match_greedy(&detections(&dets), &gts, iou_threshold);
    (
        m.matches.iter().map(|x| (x.detection, x.ground_truth, x.iou)).collect(),
        m.unmatched_detections,
        m.unmatched_ground_truths,
    )
}

#[pyfunction]
fn precision_recall_f1(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    evaluation::precision_recall_f1(tp, fp, fn_)
}

/// 101-point interpolated AP from (confidence, is_true_positive) pairs.
#[pyfunction]
fn average_precision(scored: Vec<(f64, bool)>, total_gt: usize) -> f64 {
    evaluation::average_precision(&scored, total_gt)
}

/// Bins as (index, key, count, mean) with mean None for empty bins.
#[pyfunction]
#[pyo3(signature = (timestamps, coverage, kind = "hourly", tz_offset_minutes = analytics::DEFAULT_TZ_OFFSET_MINUTES))]
fn profile(
    timestamps: Vec<i64>,
    coverage: Vec<f64>,
    kind: &str,
    tz_offset_minutes: i32,
) -> PyResult<Vec<BinRow>> {
    let kind: ProfileKind = kind.parse().map_err(to_py)?;
    let p = analytics::profile(&series(timestamps, coverage)?, kind, LocalClock::new(tz_offset_minutes)).map_err(to_py)?;
    Ok(p.bins.into_iter().map(|b| (b.index, b.key, b.count, b.mean)).collect())
}

/// Events as (kind, start_ts, end_ts, before, after) with default thresholds.
#[pyfunction]
fn detect_events(timestamps: Vec<i64>, coverage: Vec<f64>) -> PyResult<Vec<EventRow>> {
    let found = analytics::detect_events(&series(timestamps, coverage)?, &EventParams::default());
    Ok(found
        .into_iter()
        .map(|e| {
            let kind = match e.kind {
                analytics::EventKind::Dump => "dump",
                analytics::EventKind::Pile => "pile",
                analytics::EventKind::Clear => "clear",
            };
            (kind.to_string(), e.start_ts, e.end_ts, e.coverage_before, e.coverage_after)
        })
        .collect())
}

/// Frame records from a JSONL detections file as (frame_id, timestamp, detections).
#[pyfunction]
fn load_detections(path: PathBuf) -> PyResult<Vec<(String, i64, Vec<PyDetection>)>> {
    let stream = detector::load_detections(&path).map_err(to_py)?;
    Ok(stream
        .into_records()
        .into_iter()
        .map(|r| (r.frame_id, r.timestamp, r.detections.into_iter().map(PyDetection).collect()))
        .collect())
}

/// Generate a scenario and return its headline numbers and coverage series.
#[pyfunction]
#[pyo3(signature = (days = 7, seed = 42, precision = None, recall = None))]
fn simulate<'py>(
    py: Python<'py>,
    days: u32,
    seed: u64,
    precision: Option<f64>,
    recall: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = ScenarioConfig {
        days,
        seed,
        ..Default::default()
    };
    match (precision, recall) {
        (Some(p), Some(r)) => cfg = with_operating_point(cfg, p, r).map_err(to_py)?,
        (None, None) => {}
        _ => return Err(PyValueError::new_err("precision and recall go together")),
    }
    cfg.validate().map_err(to_py)?;
    let (exp_p, exp_r) = expected_metrics(&cfg).map_err(to_py)?;
    let out = py.detach(|| generate(&cfg)).map_err(to_py)?;

    let d = PyDict::new(py);
    d.set_item("frames", out.coverage.len())?;
    d.set_item("ground_truth_boxes", out.total_gt_boxes())?;
    d.set_item("clear_events", out.clear_events())?;
    d.set_item("expected_precision", exp_p)?;
    d.set_item("expected_recall", exp_r)?;
    d.set_item("timestamps", out.coverage.iter().map(|s| s.timestamp).collect::<Vec<_>>())?;
    d.set_item("coverage", out.coverage.iter().map(|s| s.coverage).collect::<Vec<_>>())?;
    Ok(d)
}

#[pymodule]
fn gvp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBBox>()?;
    m.add_class::<PyDetection>()?;
    m.add_class::<PyRoi>()?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(clip_box, m)?)?;
    m.add_function(wrap_pyfunction!(union_area, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(nms, m)?)?;
    m.add_function(wrap_pyfunction!(match_greedy, m)?)?;
    m.add_function(wrap_pyfunction!(precision_recall_f1, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(profile, m)?)?;
    m.add_function(wrap_pyfunction!(detect_events, m)?)?;
    m.add_function(wrap_pyfunction!(load_detections, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
