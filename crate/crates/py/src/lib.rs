//! Python bindings: datasets, the similarity and rank statistics, and the
//! experiment runner. Build the importable module with
//! `cargo build --release -p idiorec-py --features extension-module`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use idiorec_core::dataset::{
    generate_synthetic_seeded, load_votes, write_votes, MovieId, Score, UserId, UserProfile,
    VoteFormat,
};
use idiorec_core::error::Error as CoreError;
use idiorec_core::eval::{summarize, wilcoxon_ranks, PredictionRecord};
use idiorec_core::harness::{run_experiment, Algo, ExperimentConfig};
use idiorec_core::similarity::{pearson_amended, SimilarityParams};

fn to_py_err(err: CoreError) -> PyErr {
    match err {
        CoreError::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn profile_from_dict(id: u32, votes: BTreeMap<u32, f64>) -> PyResult<UserProfile> {
    let pairs = votes
        .into_iter()
        .map(|(movie, value)| {
            Score::from_normalized(value)
                .map(|score| (MovieId(movie), score))
                .map_err(to_py_err)
        })
        .collect::<PyResult<Vec<_>>>()?;
    UserProfile::with_votes(UserId(id), pairs).map_err(to_py_err)
}

/// An immutable vote dataset.
#[pyclass(frozen)]
struct Dataset {
    inner: idiorec_core::Dataset,
}

#[pymethods]
impl Dataset {
    /// Clustered synthetic dataset, deterministic per seed.
    #[staticmethod]
    #[pyo3(signature = (users, movies, clusters, sparsity, noise, seed))]
    fn synthetic(
        users: usize,
        movies: usize,
        clusters: usize,
        sparsity: f64,
        noise: f64,
        seed: u64,
    ) -> PyResult<Dataset> {
        let inner = generate_synthetic_seeded(users, movies, clusters, sparsity, noise, seed)
            .map_err(to_py_err)?;
        Ok(Dataset { inner })
    }

    /// Load a votes file (`user_id,movie_id,score` lines).
    #[staticmethod]
    #[pyo3(signature = (path, format = "normalized"))]
    fn load(path: &str, format: &str) -> PyResult<Dataset> {
        let format = VoteFormat::parse(format).map_err(to_py_err)?;
        let file = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        let inner = load_votes(BufReader::new(file), format).map_err(to_py_err)?;
        Ok(Dataset { inner })
    }

    #[pyo3(signature = (path, format = "normalized"))]
    fn save(&self, path: &str, format: &str) -> PyResult<()> {
        let format = VoteFormat::parse(format).map_err(to_py_err)?;
        let file = File::create(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        write_votes(&self.inner, BufWriter::new(file), format).map_err(to_py_err)
    }

    #[getter]
    fn num_users(&self) -> usize {
        self.inner.num_users()
    }

    #[getter]
    fn num_movies(&self) -> usize {
        self.inner.movie_ids().len()
    }

    #[getter]
    fn num_votes(&self) -> usize {
        self.inner.num_votes()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(users={}, movies={}, votes={})",
            self.inner.num_users(),
            self.inner.movie_ids().len(),
            self.inner.num_votes()
        )
    }
}

/// Amended Pearson correlation between two vote dicts (movie_id -> score).
#[pyfunction]
#[pyo3(signature = (u, v, overlap_penalty = 100, no_overlap_default = 0.0, zero_variance_default = 0.0))]
fn pearson(
    u: BTreeMap<u32, f64>,
    v: BTreeMap<u32, f64>,
    overlap_penalty: u32,
    no_overlap_default: f64,
    zero_variance_default: f64,
) -> PyResult<f64> {
    let params = SimilarityParams {
        overlap_penalty,
        no_overlap_default,
        zero_variance_default,
    };
    let u = profile_from_dict(1, u)?;
    let v = profile_from_dict(2, v)?;
    pearson_amended(&u, &v, &params).map_err(to_py_err)
}

/// Kendall's tau over (movie_id, actual, predicted) triples.
#[pyfunction]
fn kendall_tau(pairs: Vec<(u32, f64, f64)>) -> PyResult<f64> {
    let pairs: Vec<(MovieId, f64, f64)> = pairs
        .into_iter()
        .map(|(m, a, p)| (MovieId(m), a, p))
        .collect();
    idiorec_core::eval::kendall_tau(&pairs).map_err(to_py_err)
}

/// Wilcoxon signed-rank test over (a, b) pairs. Returns a dict with
/// n_effective, w_plus, w_minus and p (None when n < 6).
#[pyfunction]
fn wilcoxon<'py>(py: Python<'py>, pairs: Vec<(f64, f64)>) -> PyResult<Bound<'py, PyDict>> {
    let result = wilcoxon_ranks(&pairs).map_err(to_py_err)?;
    let p = if result.n_effective >= 6 {
        Some(idiorec_core::eval::wilcoxon_p(result.n_effective, result.w_plus).map_err(to_py_err)?)
    } else {
        None
    };
    let dict = PyDict::new(py);
    dict.set_item("n_effective", result.n_effective)?;
    dict.set_item("w_plus", result.w_plus)?;
    dict.set_item("w_minus", result.w_minus)?;
    dict.set_item("p", p)?;
    Ok(dict)
}

/// Two-sided p for a signed-rank sum via the continuity-corrected normal
/// approximation.
#[pyfunction]
fn wilcoxon_p(n_effective: usize, w: f64) -> PyResult<f64> {
    idiorec_core::eval::wilcoxon_p(n_effective, w).map_err(to_py_err)
}

fn record_to_dict<'py>(py: Python<'py>, r: &PredictionRecord) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    dict.set_item("test_user", r.test_user_id.0)?;
    dict.set_item("movie", r.movie_id.0)?;
    dict.set_item("actual", r.actual)?;
    dict.set_item("predicted", r.predicted)?;
    dict.set_item("fallback", r.fallback)?;
    dict.set_item("neighbors", r.neighborhood_size)?;
    dict.set_item("reviewers", r.reviewers_seen)?;
    dict.set_item("recs", r.n_recommendations)?;
    dict.set_item("overlap", r.overlap_count)?;
    dict.set_item("tau", r.tau)?;
    dict.set_item("mean_corr", r.characteristics.mean_abs_corr_to_test)?;
    dict.set_item("inter_corr", r.characteristics.mean_inter_neighbor_abs_corr)?;
    Ok(dict)
}

/// Run the reserved-vote experiment; returns {"records": [...], "summary": {...}}.
#[pyfunction]
#[pyo3(signature = (
    dataset, algo, seed,
    stim = None, supp = None, death = 0.1, pool = 100,
    test_users = 100, max_reviewers = 15000, sp_k = 100,
    overlap_penalty = 100, default_vote = None
))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    dataset: &Dataset,
    algo: &str,
    seed: u64,
    stim: Option<f64>,
    supp: Option<f64>,
    death: f64,
    pool: usize,
    test_users: usize,
    max_reviewers: usize,
    sp_k: usize,
    overlap_penalty: u32,
    default_vote: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let algo = Algo::parse(algo).map_err(to_py_err)?;
    if matches!(algo, Algo::Ais | Algo::MatchedSp) && (stim.is_none() || supp.is_none()) {
        return Err(PyValueError::new_err(format!(
            "stim and supp are required for algo '{algo}'"
        )));
    }
    let mut cfg = ExperimentConfig::new(algo, seed);
    cfg.ais.stimulation = stim.unwrap_or(0.0);
    cfg.ais.suppression = supp.unwrap_or(0.0);
    cfg.ais.death_rate = death;
    cfg.ais.pool_size = pool;
    cfg.n_test_users = test_users;
    cfg.max_reviewers = max_reviewers;
    cfg.sp_k = sp_k;
    cfg.sim.overlap_penalty = overlap_penalty;
    cfg.pred.default_vote = default_vote
        .map(|v| Score::from_normalized(v).map_err(to_py_err))
        .transpose()?;
    let records = py
        .detach(|| run_experiment(&dataset.inner, &cfg))
        .map_err(to_py_err)?;
    let summary = summarize(&records).map_err(to_py_err)?;

    let rows = PyList::empty(py);
    for r in &records {
        rows.append(record_to_dict(py, r)?)?;
    }
    let summary_dict = PyDict::new(py);
    summary_dict.set_item("n_records", summary.n_records)?;
    summary_dict.set_item("n_fallback", summary.n_fallback)?;
    summary_dict.set_item("mae", summary.mae)?;
    summary_dict.set_item("mae_std", summary.mae_std)?;
    summary_dict.set_item("tau_mean", summary.tau_mean)?;
    summary_dict.set_item("tau_count", summary.tau_count)?;
    summary_dict.set_item("recs_mean", summary.recommendations_mean)?;
    summary_dict.set_item("overlap_mean", summary.overlap_mean)?;
    summary_dict.set_item("neighbors_mean", summary.neighbors_mean)?;
    summary_dict.set_item("reviewers_mean", summary.reviewers_mean)?;

    let out = PyDict::new(py);
    out.set_item("records", rows)?;
    out.set_item("summary", summary_dict)?;
    Ok(out)
}

#[pymodule]
fn idiorec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon_p, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
