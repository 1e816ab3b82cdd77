//! Python bindings. Records and reports cross the boundary as plain Python
//! objects (dicts and lists) built from their JSON form.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use showprofile::graphkit::{self, Partition, SocialGraph};
use showprofile::ingest::{self, DatasetPaths, ParseOptions, SyntheticSpec};
use showprofile::model::validate_dataset;
use showprofile::profile::content::{classify_sentiment as classify, content_profile, SentimentLexicons};
use showprofile::profile::propagation::{propagation_profile, PropagationOptions, WindowSpec};
use showprofile::profile::social::social_profile;
use showprofile::profile::user::{participation_index as pi, user_profile, RegionCount};
use showprofile::report::{self, PipelineConfig};
use showprofile::retrieval::{self, ShowCorpus};
use showprofile::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn undirected(edges: Vec<(String, String, f64)>, nodes: Vec<String>) -> PyResult<SocialGraph> {
    let mut g = SocialGraph::undirected(nodes);
    for (a, b, _) in &edges {
        g.add_node(a.clone());
        g.add_node(b.clone());
    }
    for (a, b, w) in edges {
        g.add_edge(&a, &b, w).map_err(err)?;
    }
    Ok(g)
}

/// A loaded or generated dataset.
#[pyclass(module = "showprofile_py", frozen)]
struct Dataset {
    inner: showprofile::Dataset,
}

#[pymethods]
impl Dataset {
    /// Reads the four JSONL files from `path`.
    #[staticmethod]
    #[pyo3(signature = (path, lenient = false))]
    fn load(path: &str, lenient: bool) -> PyResult<Self> {
        let out = ingest::parse_dataset_with(&DatasetPaths::in_dir(path), ParseOptions { lenient }).map_err(err)?;
        Ok(Dataset { inner: out.dataset })
    }

    /// Generates a synthetic dataset. Returns `(dataset, ground_truth)`.
    #[staticmethod]
    #[pyo3(signature = (seed = 0, users = 200, shows = 10, microblogs = 2000, clusters = 3))]
    fn generate<'py>(
        py: Python<'py>,
        seed: u64,
        users: usize,
        shows: usize,
        microblogs: usize,
        clusters: usize,
    ) -> PyResult<(Self, Bound<'py, PyAny>)> {
        let spec = SyntheticSpec::new(seed, users, shows, microblogs, clusters);
        let (d, truth) = ingest::generate_synthetic(&spec).map_err(err)?;
        Ok((Dataset { inner: d }, to_py(py, &truth)?))
    }

    /// Writes the four JSONL files into `path`.
    fn write(&self, path: &str) -> PyResult<()> {
        ingest::write_dataset(&self.inner, path).map_err(err)?;
        Ok(())
    }

    fn counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &ingest::dataset_summary(&self.inner))
    }

    fn show_ids(&self) -> Vec<String> {
        self.inner.shows().iter().map(|s| s.show_id.clone()).collect()
    }

    /// Validation violations as `{"rule", "locator"}` dicts.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &validate_dataset(&self.inner).violations)
    }

    /// Corpora for every show, or for one show.
    #[pyo3(signature = (show_id = None))]
    fn retrieve(&self, show_id: Option<&str>) -> PyResult<Vec<Corpus>> {
        let corpora = match show_id {
            Some(id) => {
                let show = self
                    .inner
                    .show(id)
                    .ok_or_else(|| PyValueError::new_err(format!("unknown show `{id}`")))?;
                vec![retrieval::retrieve_show_corpus(show, &self.inner).map_err(err)?]
            }
            None => retrieval::retrieve_all(&self.inner).map_err(err)?,
        };
        Ok(corpora.into_iter().map(|inner| Corpus { inner }).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.microblogs().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(microblogs={}, users={}, follows={}, shows={})",
            self.inner.microblogs().len(),
            self.inner.users().len(),
            self.inner.follows().len(),
            self.inner.shows().len()
        )
    }
}

/// Microblogs attributed to one show.
#[pyclass(module = "showprofile_py", frozen)]
#[derive(Clone)]
struct Corpus {
    inner: ShowCorpus,
}

#[pymethods]
impl Corpus {
    #[getter]
    fn show_id(&self) -> String {
        self.inner.show_id.clone()
    }

    #[getter]
    fn members(&self) -> Vec<String> {
        self.inner.members.iter().cloned().collect()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, id: &str) -> bool {
        self.inner.members.contains(id)
    }

    fn __repr__(&self) -> String {
        format!("Corpus(show_id={:?}, size={})", self.inner.show_id, self.inner.len())
    }
}

fn corpora_of(corpora: Vec<PyRef<'_, Corpus>>) -> Vec<ShowCorpus> {
    corpora.iter().map(|c| c.inner.clone()).collect()
}

/// Participation index rows from `{region: user_count}`.
#[pyfunction]
fn participation_index<'py>(py: Python<'py>, counts: Vec<(String, u64)>) -> PyResult<Bound<'py, PyAny>> {
    let counts: Vec<RegionCount> = counts.into_iter().map(|(region, un)| RegionCount { region, un }).collect();
    to_py(py, &pi(&counts).map_err(err)?)
}

#[pyfunction]
fn classify_sentiment(text: &str) -> &'static str {
    classify(text, &SentimentLexicons::builtin()).as_str()
}

/// Modularity of `partition` (node to community) on an undirected graph.
#[pyfunction]
fn modularity(edges: Vec<(String, String, f64)>, partition: Vec<(String, usize)>) -> PyResult<f64> {
    let g = undirected(edges, partition.iter().map(|(n, _)| n.clone()).collect())?;
    graphkit::modularity(&g, &Partition::from_assignment(partition)).map_err(err)
}

/// Louvain communities; returns `({node: community}, Q)`.
#[pyfunction]
#[pyo3(signature = (edges, seed = 0))]
fn louvain(edges: Vec<(String, String, f64)>, seed: u64) -> PyResult<(Vec<(String, usize)>, f64)> {
    let g = undirected(edges, vec![])?;
    let (p, q) = graphkit::louvain_communities(&g, seed).map_err(err)?;
    Ok((p.assignment().iter().map(|(k, v)| (k.clone(), *v)).collect(), q))
}

/// Local clustering coefficients, average clustering and average path length.
#[pyfunction]
#[pyo3(signature = (edges, nodes = vec![]))]
fn graph_stats<'py>(py: Python<'py>, edges: Vec<(String, String, f64)>, nodes: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
    let g = undirected(edges, nodes)?;
    let value = serde_json::json!({
        "local_clustering": graphkit::local_clustering_coefficients(&g).map_err(err)?,
        "average_clustering": graphkit::average_clustering_coefficient(&g).map_err(err)?,
        "average_path_length": graphkit::average_path_length(&g).ok(),
    });
    to_py(py, &value)
}

/// Fits `y = a * x**b + c`; returns a dict with a, b, c and r_squared.
#[pyfunction]
fn fit_shifted_power<'py>(py: Python<'py>, points: Vec<(f64, f64)>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &graphkit::fit_shifted_power(&points).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (dataset, corpora, k = 3, seed = 0))]
fn profile_user<'py>(
    py: Python<'py>,
    dataset: &Dataset,
    corpora: Vec<PyRef<'py, Corpus>>,
    k: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &user_profile(&corpora_of(corpora), &dataset.inner, k, seed))
}

#[pyfunction]
#[pyo3(signature = (dataset, corpora, threshold = 1, seed = 0))]
fn profile_content<'py>(
    py: Python<'py>,
    dataset: &Dataset,
    corpora: Vec<PyRef<'py, Corpus>>,
    threshold: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let d = &dataset.inner;
    let lex = SentimentLexicons::builtin();
    to_py(py, &content_profile(d.shows(), &corpora_of(corpora), d, &lex, threshold, seed))
}

#[pyfunction]
fn profile_social<'py>(py: Python<'py>, dataset: &Dataset, corpora: Vec<PyRef<'py, Corpus>>) -> PyResult<Bound<'py, PyAny>> {
    let d = &dataset.inner;
    to_py(py, &social_profile(d.shows(), &corpora_of(corpora), d).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (dataset, corpora, window = 86_400, strict = false, windows_from = None, windows_count = 0, focus = None))]
#[allow(clippy::too_many_arguments)]
fn profile_propagation<'py>(
    py: Python<'py>,
    dataset: &Dataset,
    corpora: Vec<PyRef<'py, Corpus>>,
    window: i64,
    strict: bool,
    windows_from: Option<i64>,
    windows_count: usize,
    focus: Option<String>,
) -> PyResult<Bound<'py, PyAny>> {
    let d = &dataset.inner;
    let spec = windows_from.map(|from| WindowSpec {
        from,
        count: windows_count,
        focus,
    });
    let opts = PropagationOptions { window, strict };
    to_py(py, &propagation_profile(d.shows(), &corpora_of(corpora), d, opts, spec.as_ref()).map_err(err)?)
}

/// Runs the whole pipeline. `config` is an optional config file path;
/// `overrides` are applied on top as key/value pairs.
#[pyfunction]
#[pyo3(signature = (config = None, overrides = vec![]))]
fn run_pipeline<'py>(py: Python<'py>, config: Option<&str>, overrides: Vec<(String, String)>) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = match config {
        Some(p) => PipelineConfig::from_file(std::path::Path::new(p)).map_err(err)?,
        None => PipelineConfig::default(),
    };
    for (k, v) in &overrides {
        cfg.set(k, v).map_err(err)?;
    }
    let report = py.detach(|| report::run_pipeline(&cfg)).map_err(err)?;
    to_py(py, &report)
}

/// Writes one plot CSV (or all of them for `"all"`) from a report file.
#[pyfunction]
fn export(report_path: &str, selector: &str, out: &str) -> PyResult<Vec<String>> {
    let r = report::ProfileReport::read(std::path::Path::new(report_path)).map_err(err)?;
    let out = std::path::Path::new(out);
    let files = if selector == "all" {
        report::export_all(&r, out).map_err(err)?
    } else {
        vec![report::export_plot_data(&r, selector, out).map_err(err)?]
    };
    Ok(files.iter().map(|p| p.display().to_string()).collect())
}

#[pymodule]
fn showprofile_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Corpus>()?;
    m.add_function(wrap_pyfunction!(participation_index, m)?)?;
    m.add_function(wrap_pyfunction!(classify_sentiment, m)?)?;
    m.add_function(wrap_pyfunction!(modularity, m)?)?;
    m.add_function(wrap_pyfunction!(louvain, m)?)?;
    m.add_function(wrap_pyfunction!(graph_stats, m)?)?;
    m.add_function(wrap_pyfunction!(fit_shifted_power, m)?)?;
    m.add_function(wrap_pyfunction!(profile_user, m)?)?;
    m.add_function(wrap_pyfunction!(profile_content, m)?)?;
    m.add_function(wrap_pyfunction!(profile_social, m)?)?;
    m.add_function(wrap_pyfunction!(profile_propagation, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(export, m)?)?;
    Ok(())
}
