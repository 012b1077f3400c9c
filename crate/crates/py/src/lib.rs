//! Python bindings: feature structures, the spec, the networks, step-wise
//! repair sessions, the session service and corpus evaluation.

use std::str::FromStr;

use ilrepair::dialogue::{paraphrase, Glosses};
use ilrepair::engine::{
    evaluate_corpus, run_session, train_from_gold, OracleAnswerer, ScriptedAnswerer, Session, SessionService,
    SessionView,
};
use ilrepair::fstruct::{FeaturePath, FeatureStructure};
use ilrepair::hypgen::{Policy, RepairConfig};
use ilrepair::ilspec::{InterlinguaSpec, TypeName};
use ilrepair::minet::{units, NetworkRole, Networks, DEFAULT_LAMBDA};
use ilrepair::record::{read_corpus, read_record, ParserOutput};
use ilrepair::{demo, read_fs};
use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "FeatureStructure", module = "ilrepair_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyFs {
    inner: FeatureStructure,
}

#[pymethods]
impl PyFs {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyFs {
            inner: read_fs(text).map_err(value_err)?,
        })
    }

    /// Text of the value at a path like `when.day` or `items[1].hour`.
    fn get(&self, path: &str) -> PyResult<Option<String>> {
        let path = FeaturePath::from_str(path).map_err(value_err)?;
        Ok(self.inner.get_path(&path).map(|v| v.to_string()))
    }

    fn flatten(&self) -> Vec<(String, String)> {
        self.inner
            .flatten()
            .into_iter()
            .map(|(p, a)| (p.to_string(), a.to_string()))
            .collect()
    }

    #[getter]
    fn frame(&self) -> Option<String> {
        self.inner.frame().map(|s| s.to_string())
    }

    #[getter]
    fn sentence_type(&self) -> Option<String> {
        self.inner.sentence_type().map(|s| s.to_string())
    }

    fn equiv(&self, other: PyRef<'_, PyFs>) -> bool {
        self.inner.equiv(&other.inner)
    }

    fn __eq__(&self, other: PyRef<'_, PyFs>) -> bool {
        self.inner == other.inner
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("FeatureStructure({:?})", self.inner.to_string())
    }
}

#[pyclass(name = "Spec", module = "ilrepair_py", frozen)]
pub struct PySpec {
    inner: InterlinguaSpec,
}

fn type_name(text: &str) -> PyResult<TypeName> {
    TypeName::parse(text).ok_or_else(|| PyValueError::new_err(format!("not a type name: {text}")))
}

#[pymethods]
impl PySpec {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PySpec {
            inner: InterlinguaSpec::load(text).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn demo() -> Self {
        PySpec { inner: demo::spec() }
    }

    #[getter]
    fn root(&self) -> String {
        self.inner.root().to_string()
    }

    #[getter]
    fn sentence_types(&self) -> Vec<String> {
        self.inner.sentence_types().iter().map(|s| s.to_string()).collect()
    }

    fn leaves(&self) -> Vec<String> {
        self.inner.leaves().map(|l| l.name.to_string()).collect()
    }

    fn leaf_type_of(&self, fs: PyRef<'_, PyFs>) -> Option<String> {
        self.inner.leaf_type_of(&fs.inner).map(|t| t.to_string())
    }

    fn conforms(&self, fs: PyRef<'_, PyFs>, type_: &str) -> PyResult<bool> {
        self.inner.conforms(&fs.inner, &type_name(type_)?).map_err(value_err)
    }

    fn subsumes(&self, general: &str, specific: &str) -> PyResult<bool> {
        self.inner
            .subsumes(&type_name(general)?, &type_name(specific)?)
            .map_err(value_err)
    }

    /// `(path, allowed type)` for every empty declared slot.
    fn open_slots(&self, fs: PyRef<'_, PyFs>) -> Vec<(String, String)> {
        self.inner
            .open_slots(&fs.inner)
            .into_iter()
            .map(|s| (s.path.to_string(), s.allowed.to_string()))
            .collect()
    }
}

#[pyclass(name = "Glosses", module = "ilrepair_py", frozen)]
pub struct PyGlosses {
    inner: Glosses,
}

#[pymethods]
impl PyGlosses {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyGlosses {
            inner: Glosses::parse(text).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn demo() -> Self {
        PyGlosses { inner: demo::glosses() }
    }

    fn paraphrase(&self, fs: PyRef<'_, PyFs>) -> String {
        paraphrase(&fs.inner, &self.inner)
    }
}

#[pyclass(name = "Networks", module = "ilrepair_py")]
pub struct PyNetworks {
    inner: Networks,
}

fn role(name: &str) -> PyResult<NetworkRole> {
    NetworkRole::from_name(name).ok_or_else(|| {
        let names: Vec<&str> = NetworkRole::ALL.iter().map(|r| r.name()).collect();
        PyKeyError::new_err(format!("unknown network `{name}`; expected one of {names:?}"))
    })
}

#[pymethods]
impl PyNetworks {
    #[staticmethod]
    #[pyo3(signature = (spec, lambda_=DEFAULT_LAMBDA))]
    fn untrained(spec: PyRef<'_, PySpec>, lambda_: f64) -> Self {
        PyNetworks {
            inner: Networks::for_spec(&spec.inner, lambda_),
        }
    }

    /// Networks trained on the generated demo training corpus.
    #[staticmethod]
    fn demo(spec: PyRef<'_, PySpec>) -> Self {
        PyNetworks {
            inner: demo::trained_networks(&spec.inner),
        }
    }

    #[staticmethod]
    fn load(text: &str) -> PyResult<Self> {
        Ok(PyNetworks {
            inner: Networks::load(text).map_err(value_err)?,
        })
    }

    fn save(&self) -> String {
        self.inner.save()
    }

    /// Ranked `(output, score)` pairs from one network.
    #[pyo3(signature = (network, inputs, mask=None))]
    fn predict(&self, network: &str, inputs: Vec<String>, mask: Option<Vec<String>>) -> PyResult<Vec<(String, f64)>> {
        let mask = mask.map(|m| m.into_iter().collect());
        Ok(self
            .inner
            .get(role(network)?)
            .predict(&units(inputs), mask.as_ref())
            .into_iter()
            .map(|p| (p.output, p.score))
            .collect())
    }

    fn train(&mut self, network: &str, inputs: Vec<String>, output: &str) -> PyResult<()> {
        self.inner.train(role(network)?, &units(inputs), output);
        Ok(())
    }

    /// Offline training from the gold side of a corpus; returns the number
    /// of training events.
    fn train_from_gold(&mut self, spec: PyRef<'_, PySpec>, corpus: &str) -> PyResult<usize> {
        let records = read_corpus(corpus).map_err(value_err)?;
        Ok(train_from_gold(&records, &spec.inner, &mut self.inner))
    }

    fn __eq__(&self, other: PyRef<'_, PyNetworks>) -> bool {
        self.inner == other.inner
    }
}

fn config(policy: &str, max_questions: usize, enable_combine: bool) -> PyResult<RepairConfig> {
    Ok(RepairConfig {
        policy: Policy::from_str(policy).map_err(value_err)?,
        max_questions,
        enable_combine,
        ..RepairConfig::default()
    })
}

/// One repair dialogue. Answers reinforce the networks it was created with.
#[pyclass(name = "Session", module = "ilrepair_py")]
pub struct PySession {
    session: Session,
    spec: Py<PySpec>,
    nets: Py<PyNetworks>,
    glosses: Py<PyGlosses>,
    gold: Option<FeatureStructure>,
    before: FeatureStructure,
}

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (record, spec, networks, glosses, policy="meta", max_questions=10, enable_combine=false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        py: Python<'_>,
        record: &str,
        spec: Py<PySpec>,
        networks: Py<PyNetworks>,
        glosses: Py<PyGlosses>,
        policy: &str,
        max_questions: usize,
        enable_combine: bool,
    ) -> PyResult<Self> {
        let rec = read_record(record).map_err(value_err)?;
        let config = config(policy, max_questions, enable_combine)?;
        let session = Session::new(&rec.output, &spec.get().inner, &networks.borrow(py).inner, config);
        Ok(PySession {
            before: session.drm.current.clone(),
            session,
            spec,
            nets: networks,
            glosses,
            gold: rec.gold,
        })
    }

    /// `(seq, text, hypothesis)` of the outstanding question, or `None`
    /// when the session is over.
    fn question(&mut self, py: Python<'_>) -> Option<(usize, String, String)> {
        let nets = self.nets.borrow(py);
        self.session
            .next_question(&self.spec.get().inner, &nets.inner, &self.glosses.get().inner)
            .map(|q| (q.seq, q.text.clone(), q.hypothesis.to_string()))
    }

    /// Answers from the record's gold structure, if it had one.
    fn oracle_answer(&mut self, py: Python<'_>) -> PyResult<bool> {
        self.question(py);
        let gold = self
            .gold
            .as_ref()
            .ok_or_else(|| PyRuntimeError::new_err("the record has no gold structure"))?;
        let q = self
            .session
            .outstanding()
            .ok_or_else(|| PyRuntimeError::new_err("no question is waiting for an answer"))?;
        Ok(ilrepair::engine::oracle_answer(gold, &q.hypothesis, &self.session.drm, &self.spec.get().inner))
    }

    fn answer(&mut self, py: Python<'_>, yes: bool) -> PyResult<()> {
        let mut nets = self.nets.borrow_mut(py);
        self.session
            .answer(yes, &self.spec.get().inner, &mut nets.inner)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn stop(&mut self) {
        self.session.stop();
    }

    #[getter]
    fn finished(&self) -> bool {
        self.session.is_finished()
    }

    /// The analysis as it stands, without the end-of-session restoration.
    #[getter]
    fn current(&self) -> PyFs {
        PyFs {
            inner: self.session.drm.current.clone(),
        }
    }

    fn result(&self) -> PyFs {
        PyFs {
            inner: self.session.result(&self.spec.get().inner),
        }
    }

    /// `(question, hypothesis, answer)` for every question asked so far.
    #[getter]
    fn transcript(&self) -> Vec<(String, String, bool)> {
        self.session
            .drm
            .transcript
            .iter()
            .map(|e| (e.question.clone(), e.hypothesis.to_string(), e.answer))
            .collect()
    }

    /// `(before, after)` flattened F1 against the gold structure.
    fn accuracy(&self) -> Option<(f64, f64)> {
        let gold = self.gold.as_ref()?;
        let after = self.session.result(&self.spec.get().inner);
        Some((
            ilrepair::engine::accuracy(&self.before, gold),
            ilrepair::engine::accuracy(&after, gold),
        ))
    }
}

/// Runs a whole session. `answers` scripts the replies (later questions get
/// no); without it the record's gold structure answers.
#[pyfunction]
#[pyo3(signature = (record, spec, networks, glosses, answers=None, policy="meta", max_questions=10, enable_combine=false))]
#[allow(clippy::too_many_arguments)]
fn repair<'py>(
    py: Python<'py>,
    record: &str,
    spec: PyRef<'_, PySpec>,
    mut networks: PyRefMut<'_, PyNetworks>,
    glosses: PyRef<'_, PyGlosses>,
    answers: Option<Vec<bool>>,
    policy: &str,
    max_questions: usize,
    enable_combine: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let rec = read_record(record).map_err(value_err)?;
    let config = config(policy, max_questions, enable_combine)?;
    let po: &ParserOutput = &rec.output;
    let res = match (&answers, &rec.gold) {
        (Some(a), _) => {
            let mut script = ScriptedAnswerer::new(a.iter().copied(), false);
            run_session(po, &spec.inner, &mut networks.inner, &glosses.inner, &mut script, &config, rec.gold.as_ref())
        }
        (None, Some(gold)) => {
            let mut oracle = OracleAnswerer { gold, spec: &spec.inner };
            run_session(po, &spec.inner, &mut networks.inner, &glosses.inner, &mut oracle, &config, Some(gold))
        }
        (None, None) => return Err(PyValueError::new_err("no answers given and the record has no gold structure")),
    };
    let out = PyDict::new(py);
    out.set_item("result", PyFs { inner: res.final_ilt.clone() })?;
    out.set_item("paraphrase", paraphrase(&res.final_ilt, &glosses.inner))?;
    out.set_item("questions_used", res.questions_used)?;
    out.set_item("questions_to_converge", res.questions_to_converge)?;
    out.set_item("accuracy_before", res.accuracy_before)?;
    out.set_item("accuracy_after", res.accuracy_after)?;
    let transcript: Vec<(String, String, bool)> = res
        .transcript
        .iter()
        .map(|e| (e.question.clone(), e.hypothesis.to_string(), e.answer))
        .collect();
    out.set_item("transcript", transcript)?;
    Ok(out)
}

/// Oracle evaluation; returns the table as tab-separated text.
#[pyfunction]
#[pyo3(signature = (corpus, spec, networks, glosses, budgets=vec![0, 5, 10, 25], policies=None, persistent=false))]
fn evaluate(
    corpus: &str,
    spec: PyRef<'_, PySpec>,
    networks: PyRef<'_, PyNetworks>,
    glosses: PyRef<'_, PyGlosses>,
    budgets: Vec<usize>,
    policies: Option<Vec<String>>,
    persistent: bool,
) -> PyResult<String> {
    let records = read_corpus(corpus).map_err(value_err)?;
    let policies = match policies {
        Some(names) => names
            .iter()
            .map(|n| Policy::from_str(n).map_err(value_err))
            .collect::<PyResult<Vec<_>>>()?,
        None => Policy::all(),
    };
    let report = evaluate_corpus(
        &records,
        &spec.inner,
        &networks.inner,
        &glosses.inner,
        &budgets,
        &policies,
        &RepairConfig::default(),
        persistent,
    )
    .map_err(value_err)?;
    Ok(report.to_tsv())
}

#[pyfunction]
#[pyo3(signature = (spec, count=60, seed=1996))]
fn synthetic_corpus(spec: PyRef<'_, PySpec>, count: usize, seed: u64) -> String {
    demo::synthetic_text(&spec.inner, count, seed)
}

/// The session service behind the HTTP API; views come back as dicts.
#[pyclass(name = "SessionService", module = "ilrepair_py", frozen)]
pub struct PyService {
    inner: SessionService,
}

fn view_to_py<'py>(py: Python<'py>, view: SessionView) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(&view).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn service_err(e: ilrepair::engine::ServiceError) -> PyErr {
    match e {
        ilrepair::engine::ServiceError::UnknownSession(_) => PyKeyError::new_err(e.to_string()),
        ilrepair::engine::ServiceError::BadRecord(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pymethods]
impl PyService {
    #[new]
    #[pyo3(signature = (spec, networks, glosses, max_questions=10))]
    fn new(spec: PyRef<'_, PySpec>, networks: PyRef<'_, PyNetworks>, glosses: PyRef<'_, PyGlosses>, max_questions: usize) -> Self {
        let config = RepairConfig {
            max_questions,
            ..RepairConfig::default()
        };
        PyService {
            inner: SessionService::new(spec.inner.clone(), networks.inner.clone(), glosses.inner.clone(), config),
        }
    }

    fn create<'py>(&self, py: Python<'py>, record: &str) -> PyResult<Bound<'py, PyAny>> {
        view_to_py(py, self.inner.create(record).map_err(service_err)?)
    }

    fn question<'py>(&self, py: Python<'py>, id: u64) -> PyResult<Bound<'py, PyAny>> {
        view_to_py(py, self.inner.question(id).map_err(service_err)?)
    }

    #[pyo3(signature = (id, yes, seq=None))]
    fn answer<'py>(&self, py: Python<'py>, id: u64, yes: bool, seq: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
        view_to_py(py, self.inner.answer(id, yes, seq).map_err(service_err)?)
    }

    fn stop<'py>(&self, py: Python<'py>, id: u64) -> PyResult<Bound<'py, PyAny>> {
        view_to_py(py, self.inner.stop(id).map_err(service_err)?)
    }

    fn result<'py>(&self, py: Python<'py>, id: u64) -> PyResult<Bound<'py, PyAny>> {
        view_to_py(py, self.inner.result(id).map_err(service_err)?)
    }

    /// A copy of the shared networks with all reinforcement so far.
    fn networks(&self) -> PyNetworks {
        PyNetworks {
            inner: self.inner.networks(),
        }
    }
}

#[pymodule]
fn ilrepair_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFs>()?;
    m.add_class::<PySpec>()?;
    m.add_class::<PyGlosses>()?;
    m.add_class::<PyNetworks>()?;
    m.add_class::<PySession>()?;
    m.add_class::<PyService>()?;
    m.add_function(wrap_pyfunction!(repair, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_corpus, m)?)?;
    m.add("FIGURE_RECORD", demo::FIGURE)?;
    m.add("SYNTHETIC_CORPUS", demo::SYNTHETIC)?;
    m.add("DEMO_SPEC", demo::SPEC)?;
    Ok(())
}
