//! Python bindings: a `Model` class wrapping the cluster-expansion engine,
//! with sampling, marginals, observables, correlations, and the dense-oracle
//! cross-checks exposed as methods.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use clustergibbs::expansion::{BetaPolicy, ClusterExpansion, LocalOperator};
use clustergibbs::model::{DegreeMode, HamiltonianSpec};
use clustergibbs::oracle;
use clustergibbs::pauli::{parse_pauli, ProjectorProduct};
use clustergibbs::sampler::{self, Basis, Schedule};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_basis(name: &str) -> PyResult<Basis> {
    match name {
        "Z" | "z" => Ok(Basis::Z),
        "X" | "x" => Ok(Basis::X),
        "Y" | "y" => Ok(Basis::Y),
        other => Err(value_err(format!("unknown basis \"{other}\""))),
    }
}

/// `given` entries are (qubit, basis, outcome with outcome in {0, 1}).
fn parse_given(given: Vec<(u32, String, u8)>) -> PyResult<ProjectorProduct> {
    let mut e = ProjectorProduct::empty();
    for (qubit, basis, outcome) in given {
        let axis = parse_basis(&basis)?.axis();
        let sign = match outcome {
            0 => 1.0,
            1 => -1.0,
            other => return Err(value_err(format!("outcome must be 0 or 1, got {other}"))),
        };
        e.insert(qubit, [sign * axis[0], sign * axis[1], sign * axis[2]])
            .map_err(value_err)?;
    }
    Ok(e)
}

fn parse_observable(terms: Vec<(String, f64)>) -> PyResult<LocalOperator> {
    let mut weighted = Vec::with_capacity(terms.len());
    for (text, coeff) in terms {
        let pauli = parse_pauli(&text).map_err(value_err)?;
        weighted.push((coeff, pauli));
    }
    LocalOperator::from_terms(weighted).map_err(value_err)
}

fn policy(warn: bool) -> BetaPolicy {
    if warn {
        BetaPolicy::Warn
    } else {
        BetaPolicy::Error
    }
}

/// A k-local Hamiltonian with its cluster-expansion engine.
#[pyclass]
struct Model {
    exp: ClusterExpansion,
}

#[pymethods]
impl Model {
    /// Load a model from a JSON file.
    #[staticmethod]
    #[pyo3(signature = (path, strict=true))]
    fn load(path: &str, strict: bool) -> PyResult<Model> {
        let report = HamiltonianSpec::load(path, strict).map_err(value_err)?;
        let mode = if strict {
            DegreeMode::Strict
        } else {
            DegreeMode::Empirical
        };
        Ok(Model {
            exp: ClusterExpansion::new(report.spec, mode),
        })
    }

    /// Build a model from JSON text.
    #[staticmethod]
    #[pyo3(signature = (text, strict=true))]
    fn from_json(text: &str, strict: bool) -> PyResult<Model> {
        let report = HamiltonianSpec::load_str(text, strict).map_err(value_err)?;
        let mode = if strict {
            DegreeMode::Strict
        } else {
            DegreeMode::Empirical
        };
        Ok(Model {
            exp: ClusterExpansion::new(report.spec, mode),
        })
    }

    #[getter]
    fn num_qubits(&self) -> u32 {
        self.exp.spec().num_qubits()
    }

    #[getter]
    fn num_terms(&self) -> usize {
        self.exp.spec().num_terms()
    }

    #[getter]
    fn locality(&self) -> usize {
        self.exp.constants().locality
    }

    #[getter]
    fn overlap_degree(&self) -> usize {
        self.exp.constants().overlap_degree
    }

    #[getter]
    fn beta_star(&self) -> f64 {
        self.exp.constants().beta_star
    }

    /// Order-m series coefficient of the conditional marginal on qubit j.
    #[pyo3(signature = (j, m, basis="Z", given=vec![]))]
    fn gamma(&self, j: u32, m: usize, basis: &str, given: Vec<(u32, String, u8)>) -> PyResult<f64> {
        let e = parse_given(given)?;
        let axis = parse_basis(basis)?.axis();
        self.exp.gamma(j, &e, axis, m).map_err(value_err)
    }

    /// Conditional marginal of outcome 0 on qubit j, with its tail bound.
    #[pyo3(signature = (j, beta, order, basis="Z", given=vec![], warn=false))]
    fn marginal(
        &self,
        py: Python<'_>,
        j: u32,
        beta: f64,
        order: usize,
        basis: &str,
        given: Vec<(u32, String, u8)>,
        warn: bool,
    ) -> PyResult<Py<PyDict>> {
        let e = parse_given(given)?;
        let axis = parse_basis(basis)?.axis();
        let est = self
            .exp
            .marginal(&e, j, axis, beta, order, policy(warn))
            .map_err(value_err)?;
        let out = PyDict::new(py);
        out.set_item("p0", est.p_prime)?;
        out.set_item("tail", est.tail)?;
        out.set_item("order", est.order)?;
        out.set_item("gammas", est.gammas)?;
        out.set_item("clamped", est.clamped)?;
        out.set_item("beta_ok", est.beta_ok)?;
        Ok(out.into())
    }

    /// Smallest truncation order with tail at most N^-alpha.
    fn choose_order(&self, beta: f64, alpha: f64) -> PyResult<usize> {
        self.exp
            .choose_order(beta, self.exp.spec().num_qubits(), alpha)
            .map_err(value_err)
    }

    /// Draw outcome strings; returns a list of per-sample dicts.
    #[pyo3(signature = (beta, order, count=1, seed=0, schedule=None, warn=false, jobs=1))]
    #[allow(clippy::too_many_arguments)]
    fn sample(
        &self,
        py: Python<'_>,
        beta: f64,
        order: usize,
        count: u64,
        seed: u64,
        schedule: Option<&str>,
        warn: bool,
        jobs: usize,
    ) -> PyResult<Py<PyList>> {
        let schedule = match schedule {
            Some(text) => Schedule::load_str(text).map_err(value_err)?,
            None => Schedule::static_z(self.exp.spec().num_qubits()),
        };
        let records = sampler::sample_many(
            &self.exp,
            beta,
            &schedule,
            order,
            policy(warn),
            seed,
            count,
            jobs.max(1),
        )
        .map_err(value_err)?;
        let out = PyList::empty(py);
        for record in &records {
            let item = PyDict::new(py);
            item.set_item("bits", &record.bits)?;
            item.set_item("seed", record.seed)?;
            item.set_item("index", record.index)?;
            item.set_item("order", record.order)?;
            let steps = PyList::empty(py);
            for step in &record.steps {
                let s = PyDict::new(py);
                s.set_item("qubit", step.qubit)?;
                s.set_item("p0", step.p0)?;
                s.set_item("tail", step.tail)?;
                steps.append(s)?;
            }
            item.set_item("steps", steps)?;
            out.append(item)?;
        }
        Ok(out.into())
    }

    /// The sampler-induced distribution over all 2^N outcome strings.
    #[pyo3(signature = (beta, order, schedule=None, warn=false))]
    fn explicit_distribution(
        &self,
        py: Python<'_>,
        beta: f64,
        order: usize,
        schedule: Option<&str>,
        warn: bool,
    ) -> PyResult<Py<PyDict>> {
        let schedule = match schedule {
            Some(text) => Schedule::load_str(text).map_err(value_err)?,
            None => Schedule::static_z(self.exp.spec().num_qubits()),
        };
        let branches =
            sampler::explicit_distribution(&self.exp, beta, &schedule, order, policy(warn))
                .map_err(value_err)?;
        let out = PyDict::new(py);
        for branch in &branches {
            out.set_item(&branch.bits, branch.prob)?;
        }
        Ok(out.into())
    }

    /// Truncated thermal expectation of a Pauli-sum observable
    /// [(pauli_text, coeff), ...].
    #[pyo3(signature = (observable, beta, order, given=vec![], warn=false))]
    fn expectation(
        &self,
        py: Python<'_>,
        observable: Vec<(String, f64)>,
        beta: f64,
        order: usize,
        given: Vec<(u32, String, u8)>,
        warn: bool,
    ) -> PyResult<Py<PyDict>> {
        let a = parse_observable(observable)?;
        let e = parse_given(given)?;
        let est = self
            .exp
            .observable_expectation(&a, &e, beta, order, policy(warn))
            .map_err(value_err)?;
        let out = PyDict::new(py);
        out.set_item("value", est.value)?;
        out.set_item("tail", est.tail)?;
        out.set_item("order", est.order)?;
        Ok(out.into())
    }

    /// Truncated connected correlation between axis insertions on two qubits.
    #[pyo3(signature = (i, j, beta, order, op_i="Z", op_j="Z", given=vec![], warn=false))]
    #[allow(clippy::too_many_arguments)]
    fn correlation(
        &self,
        py: Python<'_>,
        i: u32,
        j: u32,
        beta: f64,
        order: usize,
        op_i: &str,
        op_j: &str,
        given: Vec<(u32, String, u8)>,
        warn: bool,
    ) -> PyResult<Py<PyDict>> {
        let e = parse_given(given)?;
        let oi = LocalOperator::from_axis(i, parse_basis(op_i)?.axis());
        let oj = LocalOperator::from_axis(j, parse_basis(op_j)?.axis());
        let est = self
            .exp
            .correlation(&e, i, j, &oi, &oj, beta, order, policy(warn))
            .map_err(value_err)?;
        let out = PyDict::new(py);
        out.set_item("value", est.value)?;
        out.set_item("tail", est.tail)?;
        out.set_item("order", est.order)?;
        Ok(out.into())
    }

    /// Dense-oracle conditional marginal (at most 12 qubits).
    #[pyo3(signature = (j, beta, basis="Z", given=vec![]))]
    fn exact_marginal(
        &self,
        j: u32,
        beta: f64,
        basis: &str,
        given: Vec<(u32, String, u8)>,
    ) -> PyResult<f64> {
        let state = oracle::dense_gibbs(self.exp.spec(), beta).map_err(value_err)?;
        let e = parse_given(given)?;
        let axis = parse_basis(basis)?.axis();
        oracle::exact_marginal(&state, &e, j, axis).map_err(value_err)
    }

    /// Dense-oracle outcome distribution (at most 12 qubits).
    #[pyo3(signature = (beta, schedule=None))]
    fn exact_distribution(
        &self,
        py: Python<'_>,
        beta: f64,
        schedule: Option<&str>,
    ) -> PyResult<Py<PyDict>> {
        let schedule = match schedule {
            Some(text) => Schedule::load_str(text).map_err(value_err)?,
            None => Schedule::static_z(self.exp.spec().num_qubits()),
        };
        let state = oracle::dense_gibbs(self.exp.spec(), beta).map_err(value_err)?;
        let dist = oracle::exact_distribution(&state, &schedule).map_err(value_err)?;
        let out = PyDict::new(py);
        for (bits, p) in &dist {
            out.set_item(bits, p)?;
        }
        Ok(out.into())
    }

    /// Dense-oracle maximal connected correlation and its maximizing axes.
    #[pyo3(signature = (i, j, beta, given=vec![]))]
    fn exact_correlation(
        &self,
        py: Python<'_>,
        i: u32,
        j: u32,
        beta: f64,
        given: Vec<(u32, String, u8)>,
    ) -> PyResult<Py<PyDict>> {
        let state = oracle::dense_gibbs(self.exp.spec(), beta).map_err(value_err)?;
        let e = parse_given(given)?;
        let cor = oracle::exact_correlation(&state, &e, i, j).map_err(value_err)?;
        let out = PyDict::new(py);
        out.set_item("value", cor.value)?;
        out.set_item("op_i", cor.op_i.to_vec())?;
        out.set_item("op_j", cor.op_j.to_vec())?;
        Ok(out.into())
    }
}

/// L1 distance between two distributions given as dicts bits -> probability.
#[pyfunction]
fn total_variation(p: std::collections::BTreeMap<String, f64>, q: std::collections::BTreeMap<String, f64>) -> f64 {
    oracle::exact_tv(&p, &q)
}

#[pymodule]
fn clustergibbs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(total_variation, m)?)?;
    Ok(())
}
