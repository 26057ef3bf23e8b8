//! Python bindings. Functions return floats, `None` where an asymptotic
//! formula is out of its regime, and plain dicts for multi-field reports.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dephcap::checks::{self, CheckResult, CheckStatus};
use dephcap::error::Error;
use dephcap::{bounds, dephasing, phase_encoding, special_math, thermal_loss};

create_exception!(dephcap, NumericalError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::UndefinedRatio(_) => PyValueError::new_err(e.to_string()),
        other => NumericalError::new_err(other.to_string()),
    }
}

/// Thermal-loss channel with transmissivity `kappa` and noise `n_b`.
#[pyclass(name = "ThermalLossChannel", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyChannel(thermal_loss::ThermalLossChannel);

#[pymethods]
impl PyChannel {
    #[new]
    fn new(kappa: f64, n_b: f64) -> PyResult<Self> {
        thermal_loss::ThermalLossChannel::new(kappa, n_b).map(PyChannel).map_err(to_py)
    }

    #[staticmethod]
    fn identity() -> Self {
        PyChannel(thermal_loss::ThermalLossChannel::identity())
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.0.kappa()
    }

    #[getter]
    fn n_b(&self) -> f64 {
        self.0.n_b()
    }

    fn ea_capacity(&self, energy: f64) -> PyResult<f64> {
        thermal_loss::ea_capacity(&self.0, energy).map_err(to_py)
    }

    fn hsw_capacity(&self, energy: f64) -> PyResult<f64> {
        thermal_loss::hsw_capacity(&self.0, energy).map_err(to_py)
    }

    fn advantage_ratio(&self, energy: f64) -> PyResult<f64> {
        thermal_loss::advantage_ratio(&self.0, energy).map_err(to_py)
    }

    /// `E'`, `D`, `A+` and `A-` of the EA capacity formula.
    fn loss_symbols<'py>(&self, py: Python<'py>, energy: f64) -> PyResult<Bound<'py, PyDict>> {
        let s = thermal_loss::loss_symbols(&self.0, energy).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("e_prime", s.e_prime)?;
        d.set_item("d", s.d)?;
        d.set_item("a_plus", s.a_plus)?;
        d.set_item("a_minus", s.a_minus)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("ThermalLossChannel(kappa={}, n_b={})", self.0.kappa(), self.0.n_b())
    }
}

#[pyfunction]
fn thermal_entropy(n: f64) -> PyResult<f64> {
    special_math::thermal_entropy_g(n).map_err(to_py)
}

#[pyfunction]
fn ea_capacity_pure_dephasing(m: u64, energy: f64) -> PyResult<f64> {
    dephasing::ea_capacity_pure_dephasing(m, energy).map_err(to_py)
}

#[pyfunction]
fn hsw_capacity_pure_dephasing(m: u64, energy: f64) -> PyResult<f64> {
    dephasing::hsw_capacity_pure_dephasing(m, energy).map_err(to_py)
}

/// Optimal input of the pure dephasing channel on `m` modes.
#[pyfunction]
fn solve_dephasing<'py>(py: Python<'py>, m: u64, energy: f64) -> PyResult<Bound<'py, PyDict>> {
    let s = dephasing::solve(m, energy).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("m", s.m)?;
    d.set_item("energy", s.energy)?;
    d.set_item("lambda1", s.lambda1)?;
    d.set_item("capacity", s.capacity)?;
    d.set_item("per_mode", s.per_mode())?;
    d.set_item("ratio", s.ratio_to_hsw())?;
    d.set_item("mean_check", s.mean_check)?;
    d.set_item("probs", s.dist.probs().to_vec())?;
    d.set_item("tail_bound", s.dist.tail_bound())?;
    Ok(d)
}

#[pyfunction]
fn ea_upper_bound(channel: &PyChannel, energy: f64) -> PyResult<f64> {
    bounds::ea_upper_bound(&channel.0, energy).map_err(to_py)
}

#[pyfunction]
fn ea_lower_bound(m: u64, channel: &PyChannel, energy: f64) -> PyResult<f64> {
    bounds::ea_lower_bound(m, &channel.0, energy).map_err(to_py)
}

#[pyfunction]
fn ea_lower_bound_asym(m: u64, channel: &PyChannel, energy: f64) -> PyResult<Option<f64>> {
    Ok(bounds::ea_lower_bound_asym(m, &channel.0, energy).map_err(to_py)?.value())
}

#[pyfunction]
fn entropy_total_exact(m: u64, energy: f64) -> PyResult<f64> {
    bounds::entropy_total_exact(m, energy).map_err(to_py)
}

#[pyfunction]
fn entropy_total_asym(m: u64, energy: f64) -> PyResult<Option<f64>> {
    Ok(bounds::entropy_total_asym(m, energy).map_err(to_py)?.value())
}

#[pyfunction]
fn bounds_report<'py>(py: Python<'py>, m: u64, channel: &PyChannel, energy: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = bounds::bounds_report(m, &channel.0, energy).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("m", r.m)?;
    d.set_item("upper", r.upper)?;
    d.set_item("lower_exact", r.lower_exact)?;
    d.set_item("lower_asym", r.lower_asym)?;
    d.set_item("entropy_exact", r.entropy_exact)?;
    d.set_item("entropy_asym", r.entropy_asym)?;
    d.set_item("baseline", r.baseline)?;
    d.set_item("upper_ratio", r.upper_ratio)?;
    d.set_item("lower_ratio", r.lower_ratio)?;
    d.set_item("lower_asym_ratio", r.lower_asym_ratio)?;
    Ok(d)
}

/// Holevo information of phase encoding on a squeezed-vacuum pair.
#[pyfunction]
fn holevo_phase_encoding(energy: f64, channel: &PyChannel) -> PyResult<f64> {
    phase_encoding::holevo_phase_encoding(energy, &channel.0).map_err(to_py)
}

/// Per-mode lower bound when `m` modes share one random phase.
#[pyfunction]
fn holevo_lower_bound<'py>(py: Python<'py>, m: u64, channel: &PyChannel, energy: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = phase_encoding::holevo_lb_with_dephasing(m, energy, &channel.0).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("m", r.m)?;
    d.set_item("chi_single", r.chi_single)?;
    d.set_item("per_mode", r.per_mode)?;
    d.set_item("per_mode_asym", r.per_mode_asym)?;
    Ok(d)
}

fn check_dict<'py>(py: Python<'py>, r: &CheckResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("name", r.name)?;
    d.set_item("value", r.value)?;
    d.set_item("reference", r.reference)?;
    d.set_item("delta", r.delta)?;
    d.set_item("tolerance", r.tolerance)?;
    let status = match r.status {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "fail",
        CheckStatus::Skipped => "skipped",
    };
    d.set_item("status", status)?;
    d.set_item("note", r.note.clone())?;
    Ok(d)
}

/// Runs the Fock-space oracle checks, all of them or only `names`.
#[pyfunction]
#[pyo3(signature = (names = None))]
fn verify<'py>(py: Python<'py>, names: Option<Vec<String>>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let results: Vec<CheckResult> = match names {
        None => checks::run_all(),
        Some(names) => names
            .iter()
            .map(|n| {
                checks::find(n)
                    .map(|c| c.run())
                    .ok_or_else(|| PyValueError::new_err(format!("unknown check '{n}'")))
            })
            .collect::<PyResult<_>>()?,
    };
    results.iter().map(|r| check_dict(py, r)).collect()
}

#[pymodule]
#[pyo3(name = "dephcap")]
fn dephcap_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<PyChannel>()?;
    m.add_function(wrap_pyfunction!(thermal_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(ea_capacity_pure_dephasing, m)?)?;
    m.add_function(wrap_pyfunction!(hsw_capacity_pure_dephasing, m)?)?;
    m.add_function(wrap_pyfunction!(solve_dephasing, m)?)?;
    m.add_function(wrap_pyfunction!(ea_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(ea_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(ea_lower_bound_asym, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_total_exact, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_total_asym, m)?)?;
    m.add_function(wrap_pyfunction!(bounds_report, m)?)?;
    m.add_function(wrap_pyfunction!(holevo_phase_encoding, m)?)?;
    m.add_function(wrap_pyfunction!(holevo_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
