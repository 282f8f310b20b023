//! Python bindings for the `abfnet` forecasting library.
//!
//! Each Rust type is wrapped in a thin pyclass holding the value; sequences
//! cross the boundary as Python lists of floats.

use abfnet::{
    abfnn::checkpoint, DifferenceSeries, Error, MonthlySeries, Network, NormalizationParams,
    PowerSpectrum, ResidualSpectrum, SpectrumComparison, TrainConfig, TrainMode, TrainReport,
    WindowedDataset,
};
use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for abfnet::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[pyclass(name = "MonthlySeries", module = "abfnet_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyMonthlySeries {
    inner: MonthlySeries,
}

#[pymethods]
impl PyMonthlySeries {
    #[new]
    #[pyo3(signature = (start_year, start_month, values, name = "series"))]
    fn new(start_year: i32, start_month: u32, values: Vec<f64>, name: &str) -> PyResult<Self> {
        let inner = MonthlySeries::new(start_year, start_month, values, name).py()?;
        Ok(Self { inner })
    }

    /// Parses CSV text with a `year,month,rainfall_mm` header.
    #[staticmethod]
    #[pyo3(signature = (text, name = "series"))]
    fn from_csv(text: &str, name: &str) -> PyResult<Self> {
        let inner = MonthlySeries::from_csv_reader(text.as_bytes(), name).py()?;
        Ok(Self { inner })
    }

    #[getter]
    fn start_year(&self) -> i32 {
        self.inner.start_year()
    }

    #[getter]
    fn start_month(&self) -> u32 {
        self.inner.start_month()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// `(year, month)` of the value at `index`.
    fn month_at(&self, index: usize) -> PyResult<(i32, u32)> {
        if index >= self.inner.len() {
            return Err(PyIndexError::new_err(index));
        }
        Ok(self.inner.month_at(index))
    }

    fn index_of(&self, year: i32, month: u32) -> Option<usize> {
        self.inner.index_of(year, month)
    }

    fn slice(&self, start: usize, end: usize) -> PyResult<Self> {
        let inner = self.inner.slice(start..end).py()?;
        Ok(Self { inner })
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        self.inner.write_csv(path).py()
    }

    fn __repr__(&self) -> String {
        let (y, m) = self.inner.month_at(0);
        format!(
            "MonthlySeries(name={:?}, start={y}-{m:02}, months={})",
            self.inner.name(),
            self.inner.len()
        )
    }
}

#[pyclass(name = "NormalizationParams", module = "abfnet_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyNormalizationParams {
    inner: NormalizationParams,
}

#[pymethods]
impl PyNormalizationParams {
    #[new]
    #[pyo3(signature = (lo, hi, out_lo = 0.05, out_hi = 0.95))]
    fn new(lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> PyResult<Self> {
        let inner = NormalizationParams::new(lo, hi, out_lo, out_hi).py()?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (values, out_lo = 0.05, out_hi = 0.95))]
    fn fit(values: Vec<f64>, out_lo: f64, out_hi: f64) -> PyResult<Self> {
        let inner = NormalizationParams::fit(&values, out_lo, out_hi).py()?;
        Ok(Self { inner })
    }

    #[getter]
    fn lo(&self) -> f64 {
        self.inner.lo
    }

    #[getter]
    fn hi(&self) -> f64 {
        self.inner.hi
    }

    #[getter]
    fn out_lo(&self) -> f64 {
        self.inner.out_lo
    }

    #[getter]
    fn out_hi(&self) -> f64 {
        self.inner.out_hi
    }

    fn normalize(&self, v: f64) -> f64 {
        self.inner.normalize(v)
    }

    fn denormalize(&self, u: f64) -> f64 {
        self.inner.denormalize(u)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "NormalizationParams(lo={}, hi={}, out_lo={}, out_hi={})",
            p.lo, p.hi, p.out_lo, p.out_hi
        )
    }
}

#[pyclass(name = "WindowedDataset", module = "abfnet_py", skip_from_py_object)]
pub struct PyWindowedDataset {
    inner: WindowedDataset,
}

#[pymethods]
impl PyWindowedDataset {
    #[getter]
    fn inputs(&self) -> Vec<Vec<f64>> {
        self.inner.inputs().iter().map(|w| w.to_vec()).collect()
    }

    #[getter]
    fn targets(&self) -> Vec<f64> {
        self.inner.targets().to_vec()
    }

    /// Series index of each pattern's target month.
    #[getter]
    fn target_index(&self) -> Vec<usize> {
        self.inner.target_index().to_vec()
    }

    /// Patterns whose target index lies in `start..end`.
    fn select_targets(&self, start: usize, end: usize) -> Self {
        Self {
            inner: self.inner.select_targets(start..end),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "Network", module = "abfnet_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyNetwork {
    inner: Network,
}

impl PyNetwork {
    fn layer(&self, index: usize) -> PyResult<&abfnet::Layer> {
        self.inner
            .layers()
            .get(index)
            .ok_or_else(|| PyIndexError::new_err(index))
    }
}

#[pymethods]
impl PyNetwork {
    /// Randomly initialized network with the given layer sizes.
    #[new]
    #[pyo3(signature = (topology, seed = 0))]
    fn new(topology: Vec<usize>, seed: u64) -> PyResult<Self> {
        let inner = Network::init(&topology, seed).py()?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_checkpoint(text: &str) -> PyResult<Self> {
        let inner = checkpoint::from_text(text).py()?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = checkpoint::load(path).py()?;
        Ok(Self { inner })
    }

    fn to_checkpoint(&self) -> String {
        checkpoint::to_text(&self.inner)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        checkpoint::save(&self.inner, path).py()
    }

    #[getter]
    fn topology(&self) -> Vec<usize> {
        self.inner.topology()
    }

    fn predict(&self, input: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.predict(&input).py()
    }

    /// Activations of every layer, input first.
    fn forward(&self, input: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let trace = self.inner.forward(&input).py()?;
        let mut out = vec![trace.input.clone()];
        out.extend(trace.activations);
        Ok(out)
    }

    /// Weight matrix of layer `index` as rows of incoming weights per node.
    fn weights(&self, index: usize) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.layer(index)?.weights.clone())
    }

    fn biases(&self, index: usize) -> PyResult<Vec<f64>> {
        Ok(self.layer(index)?.biases.clone())
    }

    /// Basis shape parameter of each node in layer `index`.
    fn shape_params(&self, index: usize) -> PyResult<Vec<f64>> {
        Ok(self.layer(index)?.params.iter().map(|p| p.get()).collect())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Network(topology={:?})", self.inner.topology())
    }
}

#[pyclass(name = "TrainConfig", module = "abfnet_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyTrainConfig {
    inner: TrainConfig,
}

#[pymethods]
impl PyTrainConfig {
    #[new]
    #[pyo3(signature = (
        beta = 0.25,
        max_epochs = 5000,
        target_rmse = 0.085,
        patience = 200,
        mode = "batch",
        seed = 0,
        freeze_biases = false,
    ))]
    fn new(
        beta: f64,
        max_epochs: usize,
        target_rmse: f64,
        patience: usize,
        mode: &str,
        seed: u64,
        freeze_biases: bool,
    ) -> PyResult<Self> {
        let mode: TrainMode = mode.parse().py()?;
        let inner = TrainConfig {
            beta,
            max_epochs,
            target_rmse,
            patience,
            mode,
            seed,
            freeze_biases,
        };
        inner.validate().py()?;
        Ok(Self { inner })
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn max_epochs(&self) -> usize {
        self.inner.max_epochs
    }

    #[getter]
    fn target_rmse(&self) -> f64 {
        self.inner.target_rmse
    }

    #[getter]
    fn patience(&self) -> usize {
        self.inner.patience
    }

    #[getter]
    fn mode(&self) -> String {
        self.inner.mode.to_string()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn freeze_biases(&self) -> bool {
        self.inner.freeze_biases
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "TrainReport", module = "abfnet_py", skip_from_py_object)]
pub struct PyTrainReport {
    inner: TrainReport,
}

#[pymethods]
impl PyTrainReport {
    #[getter]
    fn rmse_per_epoch(&self) -> Vec<f64> {
        self.inner.rmse_per_epoch.clone()
    }

    #[getter]
    fn epochs_run(&self) -> usize {
        self.inner.epochs_run
    }

    /// `target-reached`, `patience` or `max-epochs`.
    #[getter]
    fn stop_reason(&self) -> String {
        self.inner.stop_reason.to_string()
    }

    #[getter]
    fn final_train_rmse(&self) -> f64 {
        self.inner.final_train_rmse
    }

    #[getter]
    fn final_test_rmse(&self) -> Option<f64> {
        self.inner.final_test_rmse
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn summary(&self) -> String {
        self.inner.summary()
    }
}

#[pyclass(name = "PowerSpectrum", module = "abfnet_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyPowerSpectrum {
    inner: PowerSpectrum,
}

#[pymethods]
impl PyPowerSpectrum {
    /// Bin frequencies in cycles per year.
    #[getter]
    fn freqs(&self) -> Vec<f64> {
        self.inner.freqs.clone()
    }

    #[getter]
    fn power(&self) -> Vec<f64> {
        self.inner.power.clone()
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.inner.n_samples
    }

    #[getter]
    fn fs(&self) -> f64 {
        self.inner.fs
    }

    fn total_power(&self) -> f64 {
        self.inner.total_power()
    }

    fn peak_bin(&self) -> Option<usize> {
        self.inner.peak_bin()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.power.len()
    }
}

#[pyclass(name = "ResidualSpectrum", module = "abfnet_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyResidualSpectrum {
    inner: ResidualSpectrum,
}

#[pymethods]
impl PyResidualSpectrum {
    #[getter]
    fn freqs(&self) -> Vec<f64> {
        self.inner.freqs.clone()
    }

    #[getter]
    fn delta_power(&self) -> Vec<f64> {
        self.inner.delta_power.clone()
    }

    #[getter]
    fn enclosed_power_fraction(&self) -> f64 {
        self.inner.enclosed_power_fraction
    }

    fn peak_freq(&self) -> f64 {
        self.inner.peak_freq()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
}

#[pyclass(name = "DifferenceSeries", module = "abfnet_py", skip_from_py_object)]
pub struct PyDifferenceSeries {
    inner: DifferenceSeries,
}

#[pymethods]
impl PyDifferenceSeries {
    #[getter]
    fn start_year(&self) -> i32 {
        self.inner.start_year
    }

    #[getter]
    fn start_month(&self) -> u32 {
        self.inner.start_month
    }

    #[getter]
    fn deltas(&self) -> Vec<f64> {
        self.inner.deltas.clone()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.deltas.len()
    }
}

#[pyclass(name = "SpectrumComparison", module = "abfnet_py", skip_from_py_object)]
pub struct PySpectrumComparison {
    inner: SpectrumComparison,
}

#[pymethods]
impl PySpectrumComparison {
    /// Residual of the predicted test spectrum against the actual one.
    #[getter]
    fn model(&self) -> PyResidualSpectrum {
        PyResidualSpectrum {
            inner: self.inner.model.clone(),
        }
    }

    /// Residual of the actual test spectrum against the training spectrum.
    #[getter]
    fn drift(&self) -> PyResidualSpectrum {
        PyResidualSpectrum {
            inner: self.inner.drift.clone(),
        }
    }

    #[getter]
    fn window_len(&self) -> usize {
        self.inner.window_len
    }

    fn model_beats_drift(&self) -> bool {
        self.inner.model_beats_drift()
    }
}

#[pyfunction]
#[pyo3(signature = (x, a = 1.0))]
fn activate(x: f64, a: f64) -> f64 {
    abfnet::activate(x, a)
}

/// Derivative of the node output with respect to its net input, from the
/// output value `o`.
#[pyfunction]
fn activate_deriv(o: f64, a: f64) -> f64 {
    abfnet::activate_deriv(o, a)
}

#[pyfunction]
fn basis_param_deriv(o: f64, a: f64) -> f64 {
    abfnet::basis_param_deriv(o, a)
}

#[pyfunction]
fn loss(outputs: Vec<f64>, targets: Vec<f64>) -> PyResult<f64> {
    abfnet::loss(&outputs, &targets).py()
}

#[pyfunction]
#[pyo3(signature = (years = 87, seed = 1, noise_level = 0.1))]
fn synthesize_rainfall(years: usize, seed: u64, noise_level: f64) -> PyResult<PyMonthlySeries> {
    let inner = abfnet::synthesize_rainfall(years, seed, noise_level).py()?;
    Ok(PyMonthlySeries { inner })
}

#[pyfunction]
fn load_csv(path: &str) -> PyResult<PyMonthlySeries> {
    let inner = abfnet::load_csv(path).py()?;
    Ok(PyMonthlySeries { inner })
}

#[pyfunction]
#[pyo3(signature = (series, out_lo = 0.05, out_hi = 0.95))]
fn fit_normalization(
    series: &PyMonthlySeries,
    out_lo: f64,
    out_hi: f64,
) -> PyResult<PyNormalizationParams> {
    let inner = abfnet::fit_normalization(&series.inner, out_lo, out_hi).py()?;
    Ok(PyNormalizationParams { inner })
}

#[pyfunction]
fn build_windows(
    series: &PyMonthlySeries,
    params: &PyNormalizationParams,
) -> PyResult<PyWindowedDataset> {
    let inner = abfnet::build_windows(&series.inner, &params.inner).py()?;
    Ok(PyWindowedDataset { inner })
}

/// Trains a copy of `network`; returns the trained network and its report.
#[pyfunction]
#[pyo3(signature = (network, data, config = None))]
fn train(
    py: Python<'_>,
    network: &PyNetwork,
    data: &PyWindowedDataset,
    config: Option<&PyTrainConfig>,
) -> PyResult<(PyNetwork, PyTrainReport)> {
    let cfg = config.map(|c| c.inner.clone()).unwrap_or_default();
    let (net, data) = (&network.inner, &data.inner);
    let (inner, report) = py.detach(|| abfnet::train(net, data, &cfg)).py()?;
    Ok((PyNetwork { inner }, PyTrainReport { inner: report }))
}

#[pyfunction]
fn evaluate(network: &PyNetwork, data: &PyWindowedDataset) -> PyResult<f64> {
    abfnet::evaluate(&network.inner, &data.inner).py()
}

#[pyfunction]
fn predict_series(
    network: &PyNetwork,
    series: &PyMonthlySeries,
    params: &PyNormalizationParams,
) -> PyResult<PyMonthlySeries> {
    let inner = abfnet::predict_series(&network.inner, &series.inner, &params.inner).py()?;
    Ok(PyMonthlySeries { inner })
}

#[pyfunction]
#[pyo3(signature = (values, fs = abfnet::MONTHLY_FS))]
fn periodogram(values: Vec<f64>, fs: f64) -> PyResult<PyPowerSpectrum> {
    let inner = abfnet::periodogram(&values, fs).py()?;
    Ok(PyPowerSpectrum { inner })
}

#[pyfunction]
fn residual_fps(
    predicted: &PyPowerSpectrum,
    actual: &PyPowerSpectrum,
) -> PyResult<PyResidualSpectrum> {
    let inner = abfnet::residual_fps(&predicted.inner, &actual.inner).py()?;
    Ok(PyResidualSpectrum { inner })
}

#[pyfunction]
fn difference_series(
    predicted: &PyMonthlySeries,
    actual: &PyMonthlySeries,
) -> PyResult<PyDifferenceSeries> {
    let inner = abfnet::difference_series(&predicted.inner, &actual.inner).py()?;
    Ok(PyDifferenceSeries { inner })
}

#[pyfunction]
#[pyo3(signature = (train_actual, test_actual, test_predicted, fs = abfnet::MONTHLY_FS))]
fn spectrum_compare_report(
    train_actual: Vec<f64>,
    test_actual: Vec<f64>,
    test_predicted: Vec<f64>,
    fs: f64,
) -> PyResult<PySpectrumComparison> {
    let inner =
        abfnet::spectrum_compare_report(&train_actual, &test_actual, &test_predicted, fs).py()?;
    Ok(PySpectrumComparison { inner })
}

#[pymodule]
fn abfnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMonthlySeries>()?;
    m.add_class::<PyNormalizationParams>()?;
    m.add_class::<PyWindowedDataset>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyTrainConfig>()?;
    m.add_class::<PyTrainReport>()?;
    m.add_class::<PyPowerSpectrum>()?;
    m.add_class::<PyResidualSpectrum>()?;
    m.add_class::<PyDifferenceSeries>()?;
    m.add_class::<PySpectrumComparison>()?;
    m.add("WINDOW_LEN", abfnet::WINDOW_LEN)?;
    m.add("MONTHLY_FS", abfnet::MONTHLY_FS)?;
    m.add_function(wrap_pyfunction!(activate, m)?)?;
    m.add_function(wrap_pyfunction!(activate_deriv, m)?)?;
    m.add_function(wrap_pyfunction!(basis_param_deriv, m)?)?;
    m.add_function(wrap_pyfunction!(loss, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_rainfall, m)?)?;
    m.add_function(wrap_pyfunction!(load_csv, m)?)?;
    m.add_function(wrap_pyfunction!(fit_normalization, m)?)?;
    m.add_function(wrap_pyfunction!(build_windows, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(predict_series, m)?)?;
    m.add_function(wrap_pyfunction!(periodogram, m)?)?;
    m.add_function(wrap_pyfunction!(residual_fps, m)?)?;
    m.add_function(wrap_pyfunction!(difference_series, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum_compare_report, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pyo3::types::PyDict;

    #[test]
    fn module_round_trip_from_python() {
        Python::initialize();
        Python::attach(|py| {
            let module = pyo3::wrap_pymodule!(abfnet_py)(py);
            let locals = PyDict::new(py);
            locals.set_item("m", module).unwrap();
            py.run(
                c"
s = m.synthesize_rainfall(10, 3, 0.0)
assert len(s) == 120 and s.month_at(0) == (1893, 1)
p = m.fit_normalization(s)
d = m.build_windows(s, p)
assert len(d) == 71 and d.target_index[0] == 49
net = m.Network([12, 4, 1], seed=2)
before = m.evaluate(net, d)
trained, report = m.train(net, d, m.TrainConfig(max_epochs=20))
assert report.epochs_run == len(report.rmse_per_epoch) <= 20
assert m.evaluate(trained, d) <= before
assert m.Network.from_checkpoint(trained.to_checkpoint()) == trained
spectrum = m.periodogram(s.values)
assert abs(spectrum.freqs[spectrum.peak_bin()] - 1.0) < 1e-12
try:
    m.MonthlySeries(1900, 13, [1.0])
    raise AssertionError('accepted month 13')
except ValueError:
    pass
",
                None,
                Some(&locals),
            )
            .unwrap();
        });
    }

    #[test]
    fn errors_map_to_python_exceptions() {
        Python::initialize();
        Python::attach(|py| {
            let io = to_py(abfnet::load_csv("/nonexistent/x.csv").unwrap_err());
            assert!(io.is_instance_of::<PyIOError>(py));
            let bad = to_py(Error::EmptyDataset);
            assert!(bad.is_instance_of::<PyValueError>(py));
        });
    }
}
