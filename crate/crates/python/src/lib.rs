//! Python bindings: image sets, experiment configs, experiment runs and
//! saved single-network or ensemble models.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use ffcnn::cli::{
    run_experiment, run_experiment_on, DatasetKind, ExperimentConfig, MetricsRecord, CONFIG_KEYS,
};
use ffcnn::dataio::{
    balanced_split_indices, load_cifar10, load_idx_pair, load_raw_container, write_raw_container,
    ColorTag, Fraction, ImageSet, SplitSpec,
};
use ffcnn::ensemble::{load_ensemble, predict_ensemble, EnsembleModel};
use ffcnn::ssl::{predict, read_model, SslFfcnnModel};
use ffcnn::FfError;
use ndarray::{Array2, Array4};
use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(pyffcnn, FfcnnError, PyValueError);

fn to_py(e: FfError) -> PyErr {
    let mut root = &e;
    while let FfError::Stage { source, .. } = root {
        root = source;
    }
    match root {
        FfError::Io(_) => PyOSError::new_err(e.to_string()),
        _ => FfcnnError::new_err(e.to_string()),
    }
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.outer_iter().map(|r| r.to_vec()).collect()
}

/// Images stored N×H×W×C with optional integer labels.
#[pyclass(name = "ImageSet", module = "pyffcnn")]
struct PyImageSet {
    inner: ImageSet,
}

#[pymethods]
impl PyImageSet {
    /// `pixels` is a flat row-major list matching `shape = (n, h, w, c)`.
    #[new]
    #[pyo3(signature = (pixels, shape, labels=None, num_classes=10, color="gray"))]
    fn new(
        pixels: Vec<f32>,
        shape: (usize, usize, usize, usize),
        labels: Option<Vec<usize>>,
        num_classes: usize,
        color: &str,
    ) -> PyResult<Self> {
        let px = Array4::from_shape_vec(shape, pixels)
            .map_err(|e| FfcnnError::new_err(format!("pixels do not fit {shape:?}: {e}")))?;
        let tag = ColorTag::parse(color).map_err(to_py)?;
        let classes = if labels.is_some() { num_classes } else { 0 };
        let inner = ImageSet::new(px, labels, classes, tag).map_err(to_py)?;
        Ok(PyImageSet { inner })
    }

    #[staticmethod]
    fn load_idx(images: PathBuf, labels: PathBuf) -> PyResult<Self> {
        let inner = load_idx_pair(images, labels).map_err(to_py)?;
        Ok(PyImageSet { inner })
    }

    #[staticmethod]
    fn load_cifar10(batches: Vec<PathBuf>) -> PyResult<Self> {
        let inner = load_cifar10(&batches).map_err(to_py)?;
        Ok(PyImageSet { inner })
    }

    /// Reads a raw `.ffc` container.
    #[staticmethod]
    fn load_ffc(path: PathBuf) -> PyResult<Self> {
        let inner = load_raw_container(path).map_err(to_py)?;
        Ok(PyImageSet { inner })
    }

    fn save_ffc(&self, path: PathBuf) -> PyResult<()> {
        write_raw_container(&self.inner, path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn shape(&self) -> (usize, usize, usize, usize) {
        (self.inner.len(), self.inner.height(), self.inner.width(), self.inner.channels())
    }

    #[getter]
    fn color(&self) -> String {
        self.inner.tag().name()
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    #[getter]
    fn labels(&self) -> Option<Vec<usize>> {
        self.inner.labels().map(<[usize]>::to_vec)
    }

    /// Flat row-major pixel values.
    fn pixels(&self) -> Vec<f32> {
        self.inner.pixels().iter().copied().collect()
    }

    fn subset(&self, indices: Vec<usize>) -> PyResult<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.inner.len()) {
            return Err(FfcnnError::new_err(format!("index {bad} outside {} images", self.inner.len())));
        }
        Ok(PyImageSet {
            inner: self.inner.select(&indices),
        })
    }

    /// Class-balanced `(labeled, unlabeled)` index lists keeping `1/den`
    /// of each class labeled.
    fn split(&self, den: u32, seed: u64) -> PyResult<(Vec<usize>, Vec<usize>)> {
        let labels = self.inner.require_labels().map_err(to_py)?;
        let fraction = Fraction::new(1, den).map_err(to_py)?;
        balanced_split_indices(labels, self.inner.num_classes(), &SplitSpec::new(fraction, seed)).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let (n, h, w, c) = self.shape();
        format!("ImageSet(n={n}, {h}x{w}x{c}, color={})", self.color())
    }
}

/// Experiment settings as string key/value pairs.
#[pyclass(name = "Config", module = "pyffcnn")]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (dataset="mnist", **overrides))]
    fn new(dataset: &str, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let kind: DatasetKind = dataset.parse().map_err(to_py)?;
        let mut inner = ExperimentConfig::defaults(kind);
        if let Some(kw) = overrides {
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                inner.set(&key, &v.str()?.to_string()).map_err(to_py)?;
            }
        }
        Ok(PyConfig { inner })
    }

    /// Parses `key = value` lines.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = ExperimentConfig::parse(text).map_err(to_py)?;
        Ok(PyConfig { inner })
    }

    #[staticmethod]
    fn keys() -> Vec<&'static str> {
        CONFIG_KEYS.to_vec()
    }

    fn get(&self, key: &str) -> PyResult<String> {
        self.inner
            .get(key)
            .ok_or_else(|| FfcnnError::new_err(format!("unknown key {key:?}")))
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(to_py)
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    fn __str__(&self) -> String {
        self.inner.to_kv_string()
    }
}

fn record_dict<'py>(py: Python<'py>, r: &MetricsRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("dataset", &r.dataset)?;
    d.set_item("fraction", &r.fraction)?;
    d.set_item("seed", r.seed)?;
    d.set_item("unlabeled_mode", &r.unlabeled_mode)?;
    d.set_item("arch", &r.arch)?;
    d.set_item("ensemble_types", &r.ensemble_types)?;
    d.set_item("alpha", r.alpha)?;
    d.set_item("keep_fraction", r.keep_fraction)?;
    d.set_item("stage_widths", &r.stage_widths)?;
    d.set_item("labeled_count", r.labeled_count)?;
    d.set_item("unlabeled_count", r.unlabeled_count)?;
    d.set_item("selected_unlabeled", &r.selected_unlabeled)?;
    d.set_item("members", &r.members)?;
    d.set_item("member_accuracies", r.member_accuracy_values())?;
    d.set_item("accuracy", r.accuracy)?;
    d.set_item("ensemble_accuracy", r.ensemble_accuracy)?;
    d.set_item("seconds", r.seconds)?;
    Ok(d)
}

/// Runs one experiment and returns its metrics as a dict. Without
/// `train`/`test` the sets named by the config are loaded from disk.
#[pyfunction]
#[pyo3(signature = (config, train=None, test=None))]
fn run<'py>(
    py: Python<'py>,
    config: &PyConfig,
    train: Option<&PyImageSet>,
    test: Option<&PyImageSet>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = &config.inner;
    let record = match (train, test) {
        (Some(tr), Some(te)) => py.detach(|| run_experiment_on(cfg, &tr.inner, &te.inner)),
        (None, None) => py.detach(|| run_experiment(cfg)),
        _ => return Err(FfcnnError::new_err("pass both train and test, or neither")),
    }
    .map_err(to_py)?;
    record_dict(py, &record)
}

/// A saved single SSL network.
#[pyclass(name = "Model", module = "pyffcnn")]
struct PyModel {
    inner: SslFfcnnModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let file = File::open(&path).map_err(|e| to_py(e.into()))?;
        let inner = read_model(&mut BufReader::new(file)).map_err(to_py)?;
        Ok(PyModel { inner })
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    /// Widths of the FC cascade, input first.
    #[getter]
    fn stage_dims(&self) -> Vec<usize> {
        self.inner.classifier.stage_dims()
    }

    /// `(labels, decision rows)`.
    fn predict(&self, py: Python<'_>, images: &PyImageSet) -> PyResult<(Vec<usize>, Vec<Vec<f64>>)> {
        let (labels, dec) = py.detach(|| predict(&self.inner, &images.inner)).map_err(to_py)?;
        Ok((labels, rows(&dec)))
    }
}

/// A saved ensemble, loaded from its manifest.
#[pyclass(name = "Ensemble", module = "pyffcnn")]
struct PyEnsemble {
    inner: EnsembleModel,
}

#[pymethods]
impl PyEnsemble {
    #[staticmethod]
    fn load(manifest: PathBuf) -> PyResult<Self> {
        let inner = load_ensemble(manifest).map_err(to_py)?;
        Ok(PyEnsemble { inner })
    }

    /// Member specs in fusion order.
    #[getter]
    fn members(&self) -> Vec<String> {
        self.inner.members.iter().map(|m| m.config.to_string()).collect()
    }

    /// `(fused labels, per-member labels)`.
    fn predict(&self, py: Python<'_>, images: &PyImageSet) -> PyResult<(Vec<usize>, Vec<Vec<usize>>)> {
        let p = py.detach(|| predict_ensemble(&self.inner, &images.inner)).map_err(to_py)?;
        Ok((p.labels, p.member_labels))
    }
}

#[pymodule]
pub fn pyffcnn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FfcnnError", m.py().get_type::<FfcnnError>())?;
    m.add_class::<PyImageSet>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
