//! Python bindings: configurations, single runs, V sweeps and a few of the
//! per-slot building blocks.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sgcell_core::energy::{load_nre_trace, synthetic_diurnal_trace, NreTrace};
use sgcell_core::model::{ConfigDocument, SystemConfig};
use sgcell_core::simulator::{self, RunMetrics, RunReport};
use sgcell_core::{beamform, scenarios, scheduler};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A validated system configuration.
#[pyclass(name = "Config", module = "sgcell", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: SystemConfig,
}

impl PyConfig {
    fn from_doc(doc: ConfigDocument) -> PyResult<Self> {
        Ok(Self { inner: doc.validate().map_err(value_err)? })
    }
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Self::from_doc(ConfigDocument::from_json(text).map_err(value_err)?)
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Ok(Self { inner: sgcell_core::load_config(path).map_err(value_err)? })
    }

    /// Two ScBSs with two UEs each, starting at 10:00 on the bundled day.
    #[staticmethod]
    #[pyo3(signature = (num_frames, control_v=1.0))]
    fn two_cell(num_frames: usize, control_v: f64) -> PyResult<Self> {
        let mut doc = scenarios::two_cell(num_frames, control_v);
        doc.trace_start_s = Some(36_000.0);
        Self::from_doc(doc)
    }

    /// One ScBS, one UE, one antenna.
    #[staticmethod]
    #[pyo3(signature = (num_frames, control_v=1.0, distance_m=100.0))]
    fn single_link(num_frames: usize, control_v: f64, distance_m: f64) -> PyResult<Self> {
        let mut doc = scenarios::single_link(num_frames, control_v, distance_m);
        doc.trace_start_s = Some(36_000.0);
        Self::from_doc(doc)
    }

    fn with_control_v(&self, v: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_control_v(v).map_err(value_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner.to_document()).map_err(runtime_err)
    }

    #[getter]
    fn num_scbs(&self) -> usize {
        self.inner.num_scbs
    }

    #[getter]
    fn num_ues(&self) -> usize {
        self.inner.num_ues()
    }

    #[getter]
    fn num_frames(&self) -> usize {
        self.inner.num_frames
    }

    #[getter]
    fn slots_per_frame(&self) -> usize {
        self.inner.slots_per_frame
    }

    #[getter]
    fn control_v(&self) -> f64 {
        self.inner.control_v
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(num_scbs={}, num_ues={}, num_frames={}, control_v={})",
            self.inner.num_scbs,
            self.inner.num_ues(),
            self.inner.num_frames,
            self.inner.control_v
        )
    }
}

fn trace_from(path: Option<&str>) -> PyResult<NreTrace> {
    match path {
        Some(p) => load_nre_trace(p).map_err(value_err),
        None => Ok(synthetic_diurnal_trace()),
    }
}

fn metrics_dict<'py>(py: Python<'py>, m: &RunMetrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("control_v", m.control_v)?;
    d.set_item("seed", m.seed)?;
    d.set_item("avg_expenditure_per_frame", m.avg_expenditure_per_frame)?;
    d.set_item("annualized_expenditure", m.annualized_expenditure)?;
    d.set_item("avg_delay_slots", m.avg_delay_slots)?;
    d.set_item("backlog_trace", m.backlog_trace.clone())?;
    d.set_item("empirical_avg_rate", m.empirical_avg_rate.clone())?;
    d.set_item("stability_flag", m.stability_flag.clone())?;
    d.set_item("stability_ok", m.stability_ok())?;
    d.set_item("drift_slack_min", m.drift_slack_min)?;
    d.set_item("max_power_residual_mw", m.max_power_residual_mw)?;
    d.set_item("rate_limit_violations", m.rate_limit_violations)?;
    d.set_item("max_duality_gap", m.max_duality_gap)?;
    d.set_item("asleep_fraction", m.asleep_fraction.clone())?;
    d.set_item("infeasible_slots", m.infeasible_slots)?;
    d.set_item("multimodal_slots", m.multimodal_slots)?;
    d.set_item("excluded_evaluations", m.excluded_evaluations)?;
    d.set_item("warm_up_frames", m.warm_up_frames)?;
    Ok(d)
}

fn report_dict<'py>(py: Python<'py>, r: &RunReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("metrics", metrics_dict(py, &r.metrics)?)?;
    d.set_item("frame_expenditure", r.frames.iter().map(|f| f.expenditure).collect::<Vec<_>>())?;
    d.set_item("frame_harvest", r.frames.iter().map(|f| f.harvest.clone()).collect::<Vec<_>>())?;
    d.set_item("schedule", r.frames.iter().map(|f| f.schedule.indicator.clone()).collect::<Vec<_>>())?;
    d.set_item("phi", r.slots.iter().map(|s| s.phi).collect::<Vec<_>>())?;
    d.set_item("rates", r.slots.iter().map(|s| s.rates.clone()).collect::<Vec<_>>())?;
    d.set_item("q_access", r.slots.iter().map(|s| s.q_access.clone()).collect::<Vec<_>>())?;
    d.set_item("q_proc", r.slots.iter().map(|s| s.q_proc.clone()).collect::<Vec<_>>())?;
    d.set_item("grid_exchange", r.slots.iter().map(|s| s.grid_exchange).collect::<Vec<_>>())?;
    d.set_item("scbs_power", r.slots.iter().map(|s| s.scbs_power.clone()).collect::<Vec<_>>())?;
    Ok(d)
}

/// Simulate one configuration; returns metrics plus per-frame and per-slot traces.
#[pyfunction]
#[pyo3(signature = (config, trace_path=None))]
fn run<'py>(py: Python<'py>, config: &PyConfig, trace_path: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
    let trace = trace_from(trace_path)?;
    let cfg = config.inner.clone();
    let report = py.detach(|| simulator::run(&cfg, &trace)).map_err(runtime_err)?;
    report_dict(py, &report)
}

/// Simulate every V concurrently; returns one metrics dict per V, in order.
#[pyfunction]
#[pyo3(signature = (config, v_values, trace_path=None, jobs=0))]
fn sweep<'py>(
    py: Python<'py>,
    config: &PyConfig,
    v_values: Vec<f64>,
    trace_path: Option<&str>,
    jobs: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let trace = trace_from(trace_path)?;
    let cfg = config.inner.clone();
    let metrics = py
        .detach(|| simulator::sweep_v(&cfg, &v_values, &trace, jobs))
        .map_err(runtime_err)?;
    metrics.iter().map(|m| metrics_dict(py, m)).collect()
}

/// Frame scheduling rule for one UE.
#[pyfunction]
fn schedule_indicator(q_access: f64, q_proc: f64) -> bool {
    scheduler::schedule_indicator(q_access, q_proc)
}

/// SINR target `exp(ψφ) − 1`.
#[pyfunction]
fn sinr_target(psi: f64, phi: f64) -> f64 {
    beamform::sinr_target(psi, phi).gamma
}

/// Achievable rate in nats per slot for a given SINR.
#[pyfunction]
fn rate(sinr: f64) -> f64 {
    beamform::rate(sinr)
}

#[pymodule]
fn sgcell(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_indicator, m)?)?;
    m.add_function(wrap_pyfunction!(sinr_target, m)?)?;
    m.add_function(wrap_pyfunction!(rate, m)?)?;
    Ok(())
}
