use std::collections::HashMap;
use std::sync::Arc;

use dtrecon::boolfn::BooleanFunction;
use dtrecon::bruteforce::fourier_scores;
use dtrecon::learner::{learn as learn_tree, DistanceEstimator};
use dtrecon::{
    exact_distance as distance, exact_opt as opt, tolerant_test as run_test, Constant, Constants, CorruptedOracle,
    DecisionTree, Dictator, Majority, Mode, NoiseRate, Parity, Point, Reconstructor, Sign, TruthTable,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn err(e: dtrecon::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn point(n: usize, x: &[i32]) -> PyResult<Point> {
    if x.len() != n {
        return Err(PyValueError::new_err(format!("expected {n} coordinates, got {}", x.len())));
    }
    if let Some(v) = x.iter().find(|&&v| v != 1 && v != -1) {
        return Err(PyValueError::new_err(format!("coordinate {v} is not +1 or -1")));
    }
    Ok(Point::from_signs(&x.iter().map(|&v| Sign::from_i32(v)).collect::<Vec<_>>()))
}

fn constants(overrides: Option<HashMap<String, f64>>) -> PyResult<Constants> {
    let mut c = Constants::default();
    for (name, value) in overrides.unwrap_or_default() {
        c.set(&name, value).map_err(err)?;
    }
    Ok(c)
}

/// A decision tree in the `(xI L ±1 ...)` text format.
#[pyclass(name = "Tree", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTree {
    inner: DecisionTree,
}

#[pymethods]
impl PyTree {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyTree {
            inner: DecisionTree::parse(text).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.dimension()
    }

    fn size(&self) -> usize {
        self.inner.size()
    }

    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn evaluate(&self, x: Vec<i32>) -> PyResult<i32> {
        Ok(self.inner.evaluate(&point(self.inner.dimension(), &x)?).value())
    }

    fn with_dimension(&self, n: usize) -> PyResult<Self> {
        Ok(PyTree {
            inner: self.inner.clone().with_dimension(n).map_err(err)?,
        })
    }

    fn as_function(&self) -> PyFunction {
        PyFunction {
            inner: Arc::new(self.inner.clone()),
        }
    }

    fn serialize(&self) -> String {
        self.inner.serialize()
    }

    fn __repr__(&self) -> String {
        format!("Tree('{}')", self.inner.serialize())
    }
}

/// A query oracle `{-1,+1}^n -> {-1,+1}`.
#[pyclass(name = "Function", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFunction {
    inner: Arc<dyn BooleanFunction>,
}

#[pymethods]
impl PyFunction {
    #[staticmethod]
    fn constant(n: usize, value: i32) -> PyResult<Self> {
        Ok(PyFunction {
            inner: Arc::new(Constant::new(n, Sign::from_i32(value)).map_err(err)?),
        })
    }

    #[staticmethod]
    fn dictator(n: usize, var: usize) -> PyResult<Self> {
        Ok(PyFunction {
            inner: Arc::new(Dictator::new(n, var).map_err(err)?),
        })
    }

    #[staticmethod]
    fn parity(n: usize, vars: Vec<usize>) -> PyResult<Self> {
        Ok(PyFunction {
            inner: Arc::new(Parity::new(n, vars).map_err(err)?),
        })
    }

    #[staticmethod]
    fn majority(n: usize, vars: Vec<usize>) -> PyResult<Self> {
        Ok(PyFunction {
            inner: Arc::new(Majority::new(n, vars).map_err(err)?),
        })
    }

    #[staticmethod]
    fn random_table(n: usize, seed: u64) -> PyResult<Self> {
        let t = TruthTable::random(n, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(err)?;
        Ok(PyFunction { inner: Arc::new(t) })
    }

    /// This function with a `rho` fraction of points flipped.
    fn corrupted(&self, rho: f64, seed: u64) -> PyResult<Self> {
        Ok(PyFunction {
            inner: Arc::new(CorruptedOracle::new(self.inner.clone(), rho, seed).map_err(err)?),
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn __call__(&self, x: Vec<i32>) -> PyResult<i32> {
        Ok(self.inner.eval(&point(self.inner.n(), &x)?).value())
    }
}

#[pyclass(name = "Reconstructor", frozen)]
struct PyReconstructor {
    inner: Reconstructor<Arc<dyn BooleanFunction>>,
}

#[pymethods]
impl PyReconstructor {
    #[new]
    #[pyo3(signature = (f, s, eps, delta, seed=0, local=true, constants=None))]
    fn new(
        f: &PyFunction,
        s: usize,
        eps: f64,
        delta: f64,
        seed: u64,
        local: bool,
        constants: Option<HashMap<String, f64>>,
    ) -> PyResult<Self> {
        let mode = if local { Mode::Local } else { Mode::Plain };
        let c = self::constants(constants)?;
        Ok(PyReconstructor {
            inner: Reconstructor::new(f.inner.clone(), s, eps, delta, c, seed, mode).map_err(err)?,
        })
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.params().depth()
    }

    fn params(&self) -> String {
        self.inner.params().to_string()
    }

    fn answer(&self, py: Python<'_>, x: Vec<i32>) -> PyResult<i32> {
        let z = point(self.inner.params().n, &x)?;
        let s = py.detach(|| self.inner.answer(&z)).map_err(err)?;
        Ok(s.value())
    }

    fn materialize(&self) -> PyTree {
        PyTree {
            inner: self.inner.materialize(),
        }
    }

    /// `(total queries, max queries for one answer)`.
    fn query_stats(&self) -> (u64, u64) {
        let s = self.inner.query_stats();
        (s.total, s.max_per_answer)
    }
}

#[pyfunction]
fn random_tree(n: usize, s: usize, seed: u64) -> PyResult<PyTree> {
    let t = dtrecon::random_tree_instance(n, s, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(err)?;
    Ok(PyTree { inner: t })
}

#[pyfunction]
#[pyo3(signature = (f, p, tau, delta, seed=0))]
fn estimate_scores(f: &PyFunction, p: f64, tau: f64, delta: f64, seed: u64) -> PyResult<Vec<f64>> {
    let rate = NoiseRate::new(p).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = dtrecon::estimate_scores(&f.inner, rate, tau, delta, &mut rng).map_err(err)?;
    Ok(v.into_inner())
}

/// Exact scores by Fourier expansion, `n <= 16`.
#[pyfunction]
fn exact_scores(f: &PyFunction, p: f64) -> PyResult<Vec<f64>> {
    let rate = NoiseRate::new(p).map_err(err)?;
    if f.inner.n() > dtrecon::bruteforce::TOPDOWN_MAX_N {
        return Err(PyValueError::new_err("exact scores need n <= 16"));
    }
    Ok(fourier_scores(&TruthTable::from_function(&f.inner).map_err(err)?, rate))
}

#[pyfunction]
fn exact_distance(f: &PyFunction, g: &PyFunction) -> PyResult<f64> {
    distance(&f.inner, &g.inner).map_err(err)
}

/// `(opt_s(f), a witness tree)`, `n <= 12`.
#[pyfunction]
fn exact_opt(f: &PyFunction, s: usize) -> PyResult<(f64, PyTree)> {
    let (d, t) = opt(&TruthTable::from_function(&f.inner).map_err(err)?, s).map_err(err)?;
    Ok((d, PyTree { inner: t }))
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (f, s, eps, delta, kappa=4.0, seed=0, constants=None))]
fn tolerant_test<'py>(
    py: Python<'py>,
    f: &PyFunction,
    s: usize,
    eps: f64,
    delta: f64,
    kappa: f64,
    seed: u64,
    constants: Option<HashMap<String, f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let c = self::constants(constants)?;
    let out = py
        .detach(|| run_test(&f.inner, s, eps, delta, kappa, c, seed))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("verdict", out.verdict.as_str())?;
    d.set_item("mismatch", out.mismatch)?;
    d.set_item("samples", out.samples)?;
    d.set_item("threshold", out.threshold)?;
    d.set_item("depth", out.depth)?;
    d.set_item("queries", out.queries)?;
    Ok(d)
}

/// Proper learning with exact distance estimates, `n <= 12`.
#[pyfunction]
fn learn(f: &PyFunction, s: usize, eps: f64) -> PyResult<PyTree> {
    let r = learn_tree(&f.inner, s, eps, &DistanceEstimator::Exact).map_err(err)?;
    Ok(PyTree { inner: r.tree })
}

#[pymodule]
fn dtrecon_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTree>()?;
    m.add_class::<PyFunction>()?;
    m.add_class::<PyReconstructor>()?;
    m.add_function(wrap_pyfunction!(random_tree, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_scores, m)?)?;
    m.add_function(wrap_pyfunction!(exact_scores, m)?)?;
    m.add_function(wrap_pyfunction!(exact_distance, m)?)?;
    m.add_function(wrap_pyfunction!(exact_opt, m)?)?;
    m.add_function(wrap_pyfunction!(tolerant_test, m)?)?;
    m.add_function(wrap_pyfunction!(learn, m)?)?;
    Ok(())
}
