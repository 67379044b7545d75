//! Python bindings: the controller, closed-loop sessions, the requirement
//! catalog, the checker and trace monitors.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use lockctl_core::checker::{self, verify, ExploreMode, StateGraph};
use lockctl_core::config::Config;
use lockctl_core::domain::Action;
use lockctl_core::monitor::{catalog, CheckKind, ReportLine, TraceMonitor};
use lockctl_core::sim::{monitor_for, Fault, Scenario};
use lockctl_core::trace::{parse_trace, TraceEvent};
use lockctl_core::{Alphabet, ControllerState, Mutation};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn resolve(config: &str) -> PyResult<Config> {
    Config::resolve(config).map_err(value_err)
}

fn build_controller(config: &Config, mutation: Option<&str>) -> PyResult<lockctl_core::Controller> {
    Ok(match mutation {
        Some(m) => lockctl_core::Controller::with_mutation(&config.plant, m.parse::<Mutation>().map_err(value_err)?),
        None => lockctl_core::Controller::new(&config.plant),
    })
}

fn event_tuple(e: &TraceEvent) -> (u64, &'static str, String) {
    (e.seq, e.kind.as_str(), e.action.to_string())
}

fn report_dict<'py>(py: Python<'py>, line: &ReportLine) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("id", line.id)?;
    d.set_item("verdict", line.verdict.to_string())?;
    d.set_item("witness", line.witness)?;
    d.set_item("binding", line.binding.clone())?;
    Ok(d)
}

fn params_dict<'py>(py: Python<'py>, entries: Vec<(String, String)>) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (k, v) in entries {
        d.set_item(k, v)?;
    }
    Ok(d)
}

/// The requirement catalog as a list of dicts.
#[pyfunction]
fn requirements(py: Python<'_>) -> PyResult<Bound<'_, PyList>> {
    let list = PyList::empty(py);
    for r in catalog() {
        let d = PyDict::new(py);
        d.set_item("id", r.id)?;
        d.set_item("title", r.title)?;
        d.set_item("category", r.category.as_str())?;
        d.set_item("kind", r.kind.as_str())?;
        list.append(d)?;
    }
    Ok(list)
}

/// Requirement ids picked by a selection such as `all-safety,commandreq3`.
#[pyfunction]
fn select(spec: &str) -> PyResult<Vec<&'static str>> {
    Ok(catalog::select(spec).map_err(value_err)?.iter().map(|r| r.id).collect())
}

/// Canonical text of an action.
#[pyfunction]
fn parse_action(text: &str) -> PyResult<String> {
    Ok(text.parse::<Action>().map_err(value_err)?.to_string())
}

/// Upper bound on the stable states of a configuration.
#[pyfunction]
#[pyo3(signature = (config = "full"))]
fn state_bound(config: &str) -> PyResult<u128> {
    Ok(checker::state_bound(&resolve(config)?.plant))
}

fn explore_graph(config: &Config, mutation: Option<&str>, depth: Option<u32>) -> PyResult<StateGraph> {
    let mode = depth.map_or(ExploreMode::Exhaustive, ExploreMode::Bounded);
    StateGraph::explore(&build_controller(config, mutation)?, mode, &config.limits, false)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Graph statistics, exhaustive unless `depth` is given.
#[pyfunction]
#[pyo3(signature = (config = "reduced", depth = None, mutation = None))]
fn explore<'py>(
    py: Python<'py>,
    config: &str,
    depth: Option<u32>,
    mutation: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = resolve(config)?;
    let g = py.detach(|| explore_graph(&config, mutation, depth))?;
    let s = g.stats();
    let d = PyDict::new(py);
    d.set_item("states", s.states())?;
    d.set_item("stable", s.stable_states)?;
    d.set_item("awaiting", s.awaiting_states)?;
    d.set_item("emitting", s.emitting_states)?;
    d.set_item("edges", s.edges)?;
    d.set_item("depth", s.depth)?;
    d.set_item("exhaustive", g.is_exhaustive())?;
    Ok(d)
}

/// Exhaustive verdicts; violated ones carry the counterexample actions.
#[pyfunction]
#[pyo3(signature = (config = "reduced", requirements = "all", mutation = None))]
fn check<'py>(
    py: Python<'py>,
    config: &str,
    requirements: &str,
    mutation: Option<&str>,
) -> PyResult<Bound<'py, PyList>> {
    let config = resolve(config)?;
    let reqs = catalog::select(requirements).map_err(value_err)?;
    let verdicts = py.detach(|| -> PyResult<Vec<_>> {
        let g = explore_graph(&config, mutation, None)?;
        reqs.iter()
            .map(|r| verify(&g, r).map_err(|e| PyRuntimeError::new_err(e.to_string())))
            .collect()
    })?;
    let list = PyList::empty(py);
    for v in verdicts {
        let d = report_dict(py, &v.report_line())?;
        d.set_item("holds", v.holds)?;
        let path: Option<Vec<String>> = v.path.map(|p| p.iter().map(Action::to_string).collect());
        d.set_item("path", path)?;
        list.append(d)?;
    }
    Ok(list)
}

/// Runs trace monitors over trace text.
#[pyfunction]
#[pyo3(signature = (trace, requirements = "all", config = "full"))]
fn monitor<'py>(py: Python<'py>, trace: &str, requirements: &str, config: &str) -> PyResult<Bound<'py, PyList>> {
    let config = resolve(config)?;
    let events = parse_trace(trace).map_err(value_err)?;
    let reqs: Vec<_> = catalog::select(requirements)
        .map_err(value_err)?
        .into_iter()
        .filter(|r| r.kind != CheckKind::GraphLiveness)
        .collect();
    let mut m = TraceMonitor::new(&reqs, &Alphabet::new(&config.plant)).map_err(value_err)?;
    for e in &events {
        m.observe(&e.action, e.seq);
    }
    let list = PyList::empty(py);
    for line in &m.report(true).0 {
        list.append(report_dict(py, line)?)?;
    }
    Ok(list)
}

/// Replays scenario text and returns the trace text.
#[pyfunction]
#[pyo3(signature = (scenario, config = "full", ticks = None))]
fn replay(scenario: &str, config: &str, ticks: Option<u64>) -> PyResult<String> {
    let config = resolve(config)?;
    let sc: Scenario = scenario.parse().map_err(value_err)?;
    let trace =
        lockctl_core::sim::replay(lockctl_core::Controller::new(&config.plant), &sc, ticks).map_err(value_err)?;
    Ok(trace.iter().map(|e| format!("{e}\n")).collect())
}

/// The controller as a step-by-step transition system.
#[pyclass]
struct Controller {
    inner: lockctl_core::Controller,
    state: ControllerState,
}

#[pymethods]
impl Controller {
    #[new]
    #[pyo3(signature = (config = "full", mutation = None))]
    fn new(config: &str, mutation: Option<&str>) -> PyResult<Self> {
        let inner = build_controller(&resolve(config)?, mutation)?;
        let state = inner.initial_state();
        Ok(Controller { inner, state })
    }

    fn reset(&mut self) {
        self.state = self.inner.initial_state();
    }

    /// Takes one transition; raises ValueError if it is not enabled.
    fn step(&mut self, action: &str) -> PyResult<()> {
        let a: Action = action.parse().map_err(value_err)?;
        self.state = self.inner.step(&self.state, &a).map_err(value_err)?;
        Ok(())
    }

    fn enabled(&self) -> Vec<String> {
        self.inner.enabled(&self.state).iter().map(Action::to_string).collect()
    }

    fn stable_inputs(&self) -> Vec<String> {
        self.inner.stable_inputs().iter().map(Action::to_string).collect()
    }

    #[getter]
    fn is_stable(&self) -> bool {
        self.state.is_stable()
    }

    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        params_dict(py, self.state.params.entries(self.inner.config()))
    }
}

/// The controller driving the simulated plant, with monitors attached.
#[pyclass(unsendable)]
struct Session {
    inner: lockctl_core::sim::Session,
}

#[pymethods]
impl Session {
    #[new]
    #[pyo3(signature = (config = "full", seed = 0, requirements = "all", operator_rate = 0.0, mutation = None))]
    fn new(config: &str, seed: u64, requirements: &str, operator_rate: f64, mutation: Option<&str>) -> PyResult<Self> {
        let config = resolve(config)?;
        let reqs = catalog::select(requirements).map_err(value_err)?;
        let mut inner =
            lockctl_core::sim::Session::with_controller(build_controller(&config, mutation)?, config.faults, seed)
                .map_err(value_err)?;
        inner.attach_monitor(monitor_for(&config.plant, &reqs).map_err(value_err)?);
        if !(0.0..=1.0).contains(&operator_rate) {
            return Err(PyValueError::new_err("operator_rate must be within [0, 1]"));
        }
        inner.set_operator_rate(operator_rate);
        Ok(Session { inner })
    }

    /// Issues a console command; returns its trace events.
    fn command(&mut self, action: &str) -> PyResult<Vec<(u64, &'static str, String)>> {
        let a: Action = action.parse().map_err(value_err)?;
        Ok(self
            .inner
            .command(a)
            .map_err(value_err)?
            .iter()
            .map(event_tuple)
            .collect())
    }

    /// Injects (`on=True`) or repairs a fault such as `sensor_fail@barrier`.
    #[pyo3(signature = (fault, on = true))]
    fn fault(&mut self, fault: &str, on: bool) -> PyResult<()> {
        let f: Fault = fault.parse().map_err(value_err)?;
        self.inner.fault(f, on).map_err(value_err)
    }

    /// Advances `n` ticks; returns the trace events.
    #[pyo3(signature = (n = 1))]
    fn tick(&mut self, py: Python<'_>, n: u64) -> PyResult<Vec<(u64, &'static str, String)>> {
        let mut out = Vec::new();
        for _ in 0..n {
            out.extend(self.inner.tick().map_err(value_err)?.iter().map(event_tuple));
            if n > 1000 {
                py.check_signals()?;
            }
        }
        Ok(out)
    }

    #[getter]
    fn tick_count(&self) -> u64 {
        self.inner.tick_count()
    }

    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        params_dict(py, self.inner.params().entries(self.inner.config()))
    }

    /// Device positions, shown light aspects, water differences and faults.
    fn plant<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.plant().summary();
        let d = PyDict::new(py);
        d.set_item("tick", s.tick)?;
        let devices = PyDict::new(py);
        for dev in &s.devices {
            devices.set_item(&dev.target, (dev.position, format!("{:?}", dev.motion).to_lowercase()))?;
        }
        d.set_item("devices", devices)?;
        d.set_item("lights", params_dict(py, s.lights)?)?;
        let water = PyDict::new(py);
        for (k, v) in s.water {
            water.set_item(k, v)?;
        }
        d.set_item("water", water)?;
        d.set_item("faults", s.faults)?;
        Ok(d)
    }

    /// Monitor verdicts so far.
    #[pyo3(signature = (at_end = false))]
    fn report<'py>(&self, py: Python<'py>, at_end: bool) -> PyResult<Bound<'py, PyList>> {
        let list = PyList::empty(py);
        if let Some(r) = self.inner.report(at_end) {
            for line in &r.0 {
                list.append(report_dict(py, line)?)?;
            }
        }
        Ok(list)
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.stats();
        let d = PyDict::new(py);
        for (k, v) in [
            ("ticks", s.ticks),
            ("events", s.events),
            ("inputs", s.inputs),
            ("reads", s.reads),
            ("outputs", s.outputs),
            ("commands", s.commands),
            ("fault_toggles", s.fault_toggles),
            ("interlock_breaches", s.interlock_breaches),
        ] {
            d.set_item(k, v)?;
        }
        Ok(d)
    }
}

#[pymodule]
fn lockctl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Controller>()?;
    m.add_class::<Session>()?;
    m.add_function(wrap_pyfunction!(requirements, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    m.add_function(wrap_pyfunction!(parse_action, m)?)?;
    m.add_function(wrap_pyfunction!(state_bound, m)?)?;
    m.add_function(wrap_pyfunction!(explore, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(monitor, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    Ok(())
}
