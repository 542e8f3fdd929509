//! Python bindings for the twinrelay library.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use twinrelay::bsc::{BinaryLinearCode, BscExperiment, BscParams};
use twinrelay::minangle::{concentration_experiment, min_angle_error_rate, MinAngleConfig};
use twinrelay::multihop::{self, MultihopMode};
use twinrelay::rates::{self, GridSpec, RateCurve};
use twinrelay::sim::{run_trials, TrialPlan};
use twinrelay::twoway::{self, BroadcastMode, SessionExperiment};

fn err(e: twinrelay::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

fn default_workers(workers: Option<usize>) -> usize {
    workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn broadcast_mode(name: &str) -> PyResult<BroadcastMode> {
    match name {
        "direct" => Ok(BroadcastMode::DirectLatticeRelay),
        "index-ideal" => Ok(BroadcastMode::IndexForwardIdeal),
        other => Err(PyValueError::new_err(format!(
            "unknown broadcast mode {other:?}"
        ))),
    }
}

#[pyfunction]
fn rate_upper(snr: f64) -> PyResult<f64> {
    rates::rate_upper(snr).map_err(err)
}

#[pyfunction]
fn rate_lattice(snr: f64) -> PyResult<f64> {
    rates::rate_lattice(snr).map_err(err)
}

#[pyfunction]
fn rate_joint_decoding(snr: f64) -> PyResult<f64> {
    rates::rate_joint_decoding(snr).map_err(err)
}

#[pyfunction]
fn rate_anc(snr: f64) -> PyResult<f64> {
    rates::rate_anc(snr).map_err(err)
}

#[pyfunction]
fn rate_pure_nc(snr: f64) -> PyResult<f64> {
    rates::rate_pure_nc(snr).map_err(err)
}

/// Returns `(rate, beta)` of the time-sharing envelope at linear `snr`.
#[pyfunction]
fn envelope(snr: f64) -> PyResult<(f64, f64)> {
    rates::envelope(snr).map_err(err)
}

/// SNR window in dB where time sharing beats both pure schemes.
#[pyfunction]
fn crossover_window() -> PyResult<(f64, f64)> {
    rates::crossover_window().map_err(err)
}

#[pyfunction]
fn db_to_linear(db: f64) -> f64 {
    rates::db_to_linear(db)
}

#[pyfunction]
fn linear_to_db(snr: f64) -> f64 {
    rates::linear_to_db(snr)
}

/// Rate table as CSV text.
#[pyfunction]
fn rate_curve_csv(snr_min: f64, snr_max: f64, step: f64) -> PyResult<String> {
    let grid = GridSpec::new(snr_min, snr_max, step).map_err(err)?;
    Ok(RateCurve::evaluate(grid).map_err(err)?.to_csv())
}

#[pyfunction]
fn binary_entropy(p: f64) -> f64 {
    twinrelay::bsc::binary_entropy(p)
}

#[pyclass(name = "ChannelParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChannelParams {
    inner: twoway::ChannelParams,
}

#[pymethods]
impl PyChannelParams {
    #[new]
    fn new(power: f64, noise_var: f64) -> PyResult<Self> {
        Ok(PyChannelParams {
            inner: twoway::ChannelParams::new(power, noise_var).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (snr_db, power = 1.0))]
    fn from_snr_db(snr_db: f64, power: f64) -> PyResult<Self> {
        Ok(PyChannelParams {
            inner: twoway::ChannelParams::from_snr_db(snr_db, power).map_err(err)?,
        })
    }

    #[getter]
    fn power(&self) -> f64 {
        self.inner.power()
    }

    #[getter]
    fn noise_var(&self) -> f64 {
        self.inner.noise_var()
    }

    #[getter]
    fn snr(&self) -> f64 {
        self.inner.snr()
    }

    #[getter]
    fn snr_db(&self) -> f64 {
        self.inner.snr_db()
    }

    #[getter]
    fn alpha_opt(&self) -> f64 {
        self.inner.alpha_opt()
    }

    #[getter]
    fn sigma2_eq(&self) -> f64 {
        self.inner.sigma2_eq()
    }

    fn __repr__(&self) -> String {
        format!(
            "ChannelParams(power={}, noise_var={})",
            self.inner.power(),
            self.inner.noise_var()
        )
    }
}

/// Construction-A nested lattice pair from a systematic `[n, k]` code over
/// Z_q, or from an explicit generator matrix.
#[pyclass(name = "NestedLatticePair", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLatticePair {
    inner: twinrelay::NestedLatticePair,
}

#[pymethods]
impl PyLatticePair {
    #[new]
    #[pyo3(signature = (q, k, n, power = 1.0, generator = None))]
    fn new(
        q: u32,
        k: usize,
        n: usize,
        power: f64,
        generator: Option<Vec<Vec<u32>>>,
    ) -> PyResult<Self> {
        let code = match generator {
            Some(g) => twinrelay::LinearCode::new(q, n, g),
            None => twinrelay::LinearCode::systematic(q, k, n),
        }
        .map_err(err)?;
        Ok(PyLatticePair {
            inner: twinrelay::NestedLatticePair::new(code, power).map_err(err)?,
        })
    }

    #[getter]
    fn size(&self) -> u64 {
        self.inner.size()
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn modulus(&self) -> u32 {
        self.inner.modulus()
    }

    /// Coordinates of codeword `index` in the fundamental cell.
    fn encode(&self, index: u64) -> PyResult<Vec<f64>> {
        Ok(self.inner.encode(index).map_err(err)?.coords)
    }

    /// Index of `(t_a + t_b) mod coarse lattice`.
    fn sum_index(&self, a: u64, b: u64) -> PyResult<u64> {
        let ta = self.inner.encode(a).map_err(err)?;
        let tb = self.inner.encode(b).map_err(err)?;
        let s = self.inner.modulo_sum(&ta, &tb).map_err(err)?;
        s.index
            .ok_or_else(|| PyValueError::new_err("sum is not a codeword"))
    }

    fn __repr__(&self) -> String {
        format!(
            "NestedLatticePair(q={}, n={}, size={}, rate={:.4})",
            self.inner.modulus(),
            self.inner.dim(),
            self.inner.size(),
            self.inner.rate()
        )
    }
}

/// One full exchange; returns the transcript as a dict.
#[pyfunction]
#[pyo3(signature = (u_a, u_b, params, pair, mode = "direct", seed = 0))]
fn run_session<'py>(
    py: Python<'py>,
    u_a: u64,
    u_b: u64,
    params: &PyChannelParams,
    pair: &PyLatticePair,
    mode: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let t = twoway::run_session(
        u_a,
        u_b,
        &params.inner,
        &pair.inner,
        broadcast_mode(mode)?,
        seed,
    )
    .map_err(err)?;
    to_py(py, &t)
}

#[pyfunction]
#[pyo3(signature = (pair, params, trials, seed = 1, mode = "direct", workers = None))]
fn simulate_lattice<'py>(
    py: Python<'py>,
    pair: &PyLatticePair,
    params: &PyChannelParams,
    trials: u64,
    seed: u64,
    mode: &str,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let exp = SessionExperiment {
        pair: pair.inner.clone(),
        params: params.inner,
        mode: broadcast_mode(mode)?,
    };
    let plan = TrialPlan::fixed(trials, seed, default_workers(workers));
    let r = py.detach(|| run_trials(&exp, &plan)).map_err(err)?;
    to_py(py, &r)
}

/// XOR relay over BSCs with the [7,4] Hamming code or a random `(k, n)` code.
#[pyfunction]
#[pyo3(signature = (p, trials, seed = 1, code = None, workers = None))]
fn simulate_bsc<'py>(
    py: Python<'py>,
    p: f64,
    trials: u64,
    seed: u64,
    code: Option<(usize, usize)>,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let code = match code {
        None => BinaryLinearCode::hamming74(),
        Some((k, n)) => {
            BinaryLinearCode::random(k, n, &mut twinrelay::SimRng::derived(seed, &[0xc0de]))
                .map_err(err)?
        }
    };
    let exp = BscExperiment {
        code,
        params: BscParams::new(p).map_err(err)?,
    };
    let plan = TrialPlan::fixed(trials, seed, default_workers(workers));
    let r = py.detach(|| run_trials(&exp, &plan)).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (dim, power, snr_db, trials, seed = 1, delta = None, workers = None))]
fn min_angle<'py>(
    py: Python<'py>,
    dim: usize,
    power: f64,
    snr_db: f64,
    trials: u64,
    seed: u64,
    delta: Option<f64>,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = MinAngleConfig::new(dim, power, power / rates::db_to_linear(snr_db));
    if let Some(d) = delta {
        cfg.delta = d;
    }
    let plan = TrialPlan::fixed(trials, seed, default_workers(workers));
    let r = py
        .detach(|| min_angle_error_rate(&cfg, &plan))
        .map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (n, power, delta, samples, seed = 1, workers = None))]
fn concentration<'py>(
    py: Python<'py>,
    n: usize,
    power: f64,
    delta: f64,
    samples: u64,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let w = default_workers(workers);
    let r = py
        .detach(|| concentration_experiment(n, power, delta, samples, seed, w))
        .map_err(err)?;
    to_py(py, &r)
}

/// Slot-by-slot schedule of a line of `relays` relays.
#[pyclass(name = "HopSchedule", frozen)]
struct PyHopSchedule {
    inner: multihop::HopSchedule,
}

#[pymethods]
impl PyHopSchedule {
    #[new]
    fn new(relays: usize, packets: usize) -> PyResult<Self> {
        Ok(PyHopSchedule {
            inner: multihop::build_schedule(relays, packets).map_err(err)?,
        })
    }

    #[getter]
    fn relays(&self) -> usize {
        self.inner.relays
    }

    #[getter]
    fn slots(&self) -> usize {
        self.inner.slots.len()
    }

    /// Cell strings for the first `slots` slots, one row per slot.
    fn table(&self, slots: usize) -> Vec<Vec<String>> {
        self.inner.table(slots)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn throughput<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &multihop::throughput(&self.inner))
    }

    /// Mismatching cells against the three-relay reference table.
    fn table1_mismatches(&self) -> Vec<(usize, usize, String, String)> {
        multihop::table1_mismatches(&self.inner)
    }

    /// Executes the schedule: `symbolic`, `numeric-noiseless` or `numeric-awgn`.
    #[pyo3(signature = (mode, pair = None, params = None, seed = 1))]
    fn run<'py>(
        &self,
        py: Python<'py>,
        mode: &str,
        pair: Option<&PyLatticePair>,
        params: Option<&PyChannelParams>,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mode = match mode {
            "symbolic" => MultihopMode::Symbolic,
            "numeric-noiseless" => MultihopMode::NumericNoiseless,
            "numeric-awgn" => MultihopMode::NumericAwgn,
            other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
        };
        let params = match (params, mode) {
            (Some(p), _) => p.inner,
            (None, MultihopMode::NumericAwgn) => {
                return Err(PyValueError::new_err("numeric-awgn needs params"))
            }
            (None, _) => twoway::ChannelParams::noiseless(1.0).map_err(err)?,
        };
        let r = multihop::run_multihop(&self.inner, mode, pair.map(|p| &p.inner), &params, seed)
            .map_err(err)?;
        to_py(py, &r)
    }
}

#[pymodule]
#[pyo3(name = "twinrelay")]
fn twinrelay_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyChannelParams>()?;
    m.add_class::<PyLatticePair>()?;
    m.add_class::<PyHopSchedule>()?;
    m.add_function(wrap_pyfunction!(rate_upper, m)?)?;
    m.add_function(wrap_pyfunction!(rate_lattice, m)?)?;
    m.add_function(wrap_pyfunction!(rate_joint_decoding, m)?)?;
    m.add_function(wrap_pyfunction!(rate_anc, m)?)?;
    m.add_function(wrap_pyfunction!(rate_pure_nc, m)?)?;
    m.add_function(wrap_pyfunction!(envelope, m)?)?;
    m.add_function(wrap_pyfunction!(crossover_window, m)?)?;
    m.add_function(wrap_pyfunction!(db_to_linear, m)?)?;
    m.add_function(wrap_pyfunction!(linear_to_db, m)?)?;
    m.add_function(wrap_pyfunction!(rate_curve_csv, m)?)?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(run_session, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_lattice, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_bsc, m)?)?;
    m.add_function(wrap_pyfunction!(min_angle, m)?)?;
    m.add_function(wrap_pyfunction!(concentration, m)?)?;
    Ok(())
}
