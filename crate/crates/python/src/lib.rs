//! Python bindings: the `ergo_markov` extension module.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ergo_core::coupling::{coupling_bound_curve, operator_v_spectral, simple_coupling_tail, vaserstein_batch};
use ergo_core::deviations::{ld_tail_exact, legendre, CgfEvaluator, LdTailOptions, LegendreOptions};
use ergo_core::ergodicity::{
    contraction_report, convergence_envelope, invariant_measure, md_coefficient, InvariantMethod,
};
use ergo_core::limits::{
    asymptotic_variance, finite_n_variance, lln_clt_experiment, ExperimentMode, DEFAULT_VARIANCE_TOLERANCE,
};
use ergo_core::mc::sample_path;
use ergo_core::poisson::{
    dynkin_verify, solve_dirichlet_potential, solve_whole, solve_whole_potential, BoundaryProblem,
    MonteCarloOptions, PoissonSolution, SolveMethod,
};
use ergo_core::{Distribution, ErgoError, Observable, SeedSpec, StochasticChain};

create_exception!(ergo_markov, ErgoException, PyException);

fn err(e: ErgoError) -> PyErr {
    ErgoException::new_err(e.to_string())
}

fn obs(v: Vec<f64>) -> PyResult<Observable> {
    Observable::new(v).map_err(err)
}

fn law(v: Vec<f64>) -> PyResult<Distribution> {
    Distribution::new(v).map_err(err)
}

/// A finite Markov chain given by its transition matrix.
#[pyclass(name = "Chain", module = "ergo_markov")]
struct PyChain {
    inner: StochasticChain,
}

#[pymethods]
impl PyChain {
    #[new]
    #[pyo3(signature = (rows, labels=None))]
    fn new(rows: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> PyResult<Self> {
        let labels = labels.unwrap_or_else(|| (0..rows.len()).map(|i| i.to_string()).collect());
        Ok(PyChain { inner: StochasticChain::new(&rows, labels).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Chain({:?})", self.inner.rows())
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<f64>> {
        self.inner.rows()
    }

    #[pyo3(signature = (n0=1))]
    fn kappa(&self, n0: usize) -> PyResult<f64> {
        md_coefficient(&self.inner, n0).map_err(err)
    }

    fn kappa0(&self) -> f64 {
        self.inner.min_entry()
    }

    fn pairwise_kappa(&self) -> PyResult<Vec<Vec<f64>>> {
        let r = contraction_report(&self.inner, 1).map_err(err)?;
        Ok(r.pairwise.row_iter().map(|row| row.iter().copied().collect()).collect())
    }

    /// Returns `(weights, defect, warning)`; `method` is `"linear"` or `"cesaro"`.
    #[pyo3(signature = (method="linear"))]
    fn invariant(&self, method: &str) -> PyResult<(Vec<f64>, f64, Option<String>)> {
        let m = match method {
            "linear" => InvariantMethod::LinearSolve,
            "cesaro" => InvariantMethod::Cesaro,
            other => return Err(ErgoException::new_err(format!("unknown method {other}"))),
        };
        let r = invariant_measure(&self.inner, m).map_err(err)?;
        Ok((r.measure.weights().to_vec(), r.defect, r.warning.map(|w| w.to_string())))
    }

    fn envelope<'py>(&self, py: Python<'py>, n_max: usize) -> PyResult<Bound<'py, PyDict>> {
        let e = convergence_envelope(&self.inner, n_max).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("kappa", e.kappa)?;
        d.set_item("worst_tv", e.worst_tv.clone())?;
        d.set_item("bound", e.bound.clone())?;
        d.set_item("vacuous", e.vacuous)?;
        d.set_item("holds", e.holds())?;
        Ok(d)
    }

    /// Spectral radius of the coupling operator `V`.
    fn operator_radius(&self) -> f64 {
        operator_v_spectral(&self.inner).radius
    }

    fn coupling_bound(&self, mu1: Vec<f64>, mu2: Vec<f64>, n_max: usize) -> PyResult<Vec<f64>> {
        coupling_bound_curve(&self.inner, &law(mu1)?, &law(mu2)?, n_max).map_err(err)
    }

    fn simple_coupling_tail(&self, x1: usize, x2: usize, n_max: usize) -> PyResult<Vec<f64>> {
        Ok(simple_coupling_tail(&self.inner, x1, x2, n_max).map_err(err)?.tail)
    }

    #[pyo3(signature = (mu1, mu2, horizon, paths, seed=0))]
    fn vaserstein<'py>(
        &self,
        py: Python<'py>,
        mu1: Vec<f64>,
        mu2: Vec<f64>,
        horizon: usize,
        paths: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let s = vaserstein_batch(&self.inner, &law(mu1)?, &law(mu2)?, horizon, paths, SeedSpec::new(seed, 0))
            .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("decoupled", s.decoupled.clone())?;
        d.set_item("violations", s.violations)?;
        Ok(d)
    }

    fn asymptotic_variance(&self, f: Vec<f64>) -> PyResult<f64> {
        Ok(asymptotic_variance(&self.inner, &obs(f)?, DEFAULT_VARIANCE_TOLERANCE).map_err(err)?.sigma2)
    }

    fn finite_n_variance(&self, f: Vec<f64>, n: usize) -> PyResult<f64> {
        finite_n_variance(&self.inner, &obs(f)?, n).map_err(err)
    }

    /// Samples of the scaled sum; `mode` is `"mean"` or `"clt"`.
    #[pyo3(signature = (f, n, replicas, mode="clt", init=None, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn experiment<'py>(
        &self,
        py: Python<'py>,
        f: Vec<f64>,
        n: usize,
        replicas: usize,
        mode: &str,
        init: Option<Vec<f64>>,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mode = match mode {
            "mean" => ExperimentMode::Mean,
            "clt" => ExperimentMode::Clt,
            other => return Err(ErgoException::new_err(format!("unknown mode {other}"))),
        };
        let init = match init {
            Some(w) => law(w)?,
            None => Distribution::point(self.inner.len(), 0),
        };
        let r = lln_clt_experiment(&self.inner, &obs(f)?, n, replicas, mode, &init, SeedSpec::new(seed, 0))
            .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("samples", r.samples.clone())?;
        d.set_item("statistic", r.statistic)?;
        d.set_item("stationary_mean", r.stationary_mean)?;
        d.set_item("sigma2", r.sigma2)?;
        Ok(d)
    }

    /// `H(beta) = ln r(diag(e^{beta f}) P)`.
    fn log_moment(&self, f: Vec<f64>, beta: f64) -> PyResult<f64> {
        Ok(CgfEvaluator::new(&self.inner, &obs(f)?).map_err(err)?.h(beta))
    }

    /// Returns `(L(alpha), L~(alpha))`.
    fn rate(&self, f: Vec<f64>, alpha: f64) -> PyResult<(f64, f64)> {
        let eval = CgfEvaluator::new(&self.inner, &obs(f)?).map_err(err)?;
        let v = legendre(&eval, alpha, &LegendreOptions::default()).map_err(err)?;
        Ok((v.l, v.l_tilde))
    }

    fn ld_tail<'py>(
        &self,
        py: Python<'py>,
        f: Vec<f64>,
        epsilon: f64,
        n: usize,
        start: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let t = ld_tail_exact(&self.inner, &obs(f)?, epsilon, n, start, &LdTailOptions::default()).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("probability", t.probability)?;
        d.set_item("log_tail_rate", t.log_tail_rate)?;
        d.set_item("l", t.l)?;
        d.set_item("l_tilde", t.l_tilde)?;
        d.set_item("bound", t.bound)?;
        d.set_item("finite_n_slack", t.finite_n_slack)?;
        d.set_item("holds", t.holds())?;
        Ok(d)
    }

    #[pyo3(signature = (f, potential=None))]
    fn solve_whole<'py>(
        &self,
        py: Python<'py>,
        f: Vec<f64>,
        potential: Option<Vec<f64>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let f = obs(f)?;
        let s = match potential {
            Some(c) => solve_whole_potential(&self.inner, &obs(c)?, &f),
            None => solve_whole(&self.inner, &f),
        }
        .map_err(err)?;
        solution_dict(py, &s)
    }

    /// `method` is `"linear"`, `"series"` or `"mc"`.
    #[pyo3(signature = (f, boundary, boundary_data=None, potential=None, method="linear", paths=10000, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn solve_dirichlet<'py>(
        &self,
        py: Python<'py>,
        f: Vec<f64>,
        boundary: Vec<usize>,
        boundary_data: Option<Vec<f64>>,
        potential: Option<Vec<f64>>,
        method: &str,
        paths: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let n = self.inner.len();
        let g = match boundary_data {
            Some(g) => obs(g)?,
            None => Observable::zeros(n),
        };
        let c = potential.map(obs).transpose()?;
        let method = match method {
            "linear" => SolveMethod::Linear,
            "series" => SolveMethod::Series,
            "mc" => SolveMethod::MonteCarlo(MonteCarloOptions { paths, seed: SeedSpec::new(seed, 0) }),
            other => return Err(ErgoException::new_err(format!("unknown method {other}"))),
        };
        let problem = BoundaryProblem::new(&self.inner, &boundary, obs(f)?, g, c).map_err(err)?;
        let s = solve_dirichlet_potential(&problem, method).map_err(err)?;
        solution_dict(py, &s)
    }

    #[pyo3(signature = (h, x, n, potential=None))]
    fn dynkin_defect(&self, h: Vec<f64>, x: usize, n: usize, potential: Option<Vec<f64>>) -> PyResult<f64> {
        let c = potential.map(obs).transpose()?;
        dynkin_verify(&self.inner, &obs(h)?, x, n, c.as_ref()).map_err(err)
    }

    #[pyo3(signature = (init, n, seed=0, stream=0))]
    fn sample_path(&self, init: Vec<f64>, n: usize, seed: u64, stream: u64) -> PyResult<Vec<usize>> {
        sample_path(&self.inner, &law(init)?, n, SeedSpec::new(seed, stream)).map_err(err)
    }
}

fn solution_dict<'py>(py: Python<'py>, s: &PoissonSolution) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("u", s.values.values().to_vec())?;
    d.set_item("residual", s.residual)?;
    d.set_item("method", s.method.name())?;
    d.set_item("std_errors", s.std_errors.clone())?;
    d.set_item("spectral_radius", s.wellposedness.spectral_radius)?;
    d.set_item("warnings", s.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>())?;
    Ok(d)
}

/// `sum_i |p_i - q_i|`.
#[pyfunction]
fn total_variation(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    ergo_core::total_variation(&law(p)?, &law(q)?).map_err(err)
}

/// `sum_i min(p_i, q_i)`.
#[pyfunction]
fn overlap(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    ergo_core::coupling::overlap(&law(p)?, &law(q)?).map_err(err)
}

#[pymodule]
fn ergo_markov(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChain>()?;
    m.add_function(wrap_pyfunction!(total_variation, m)?)?;
    m.add_function(wrap_pyfunction!(overlap, m)?)?;
    m.add("ErgoError", m.py().get_type::<ErgoException>())?;
    Ok(())
}
