//! Python bindings: assembler, simulator, benchmarks and sweeps.
//!
//! Configurations and result rows cross the boundary as JSON-compatible
//! dicts; images are byte strings in the `VXS1` format.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use vexsim::asm;
use vexsim::bench::{self, BenchName, BenchSpec};
use vexsim::config::SimConfig;
use vexsim::cpu;
use vexsim::image;
use vexsim::isa::{self, Reg};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Serializes `value` and hands it to Python's `json.loads`.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn config_from(py: Python<'_>, config: Option<&Bound<'_, PyAny>>) -> PyResult<SimConfig> {
    let Some(obj) = config else {
        return Ok(SimConfig::default());
    };
    let text: String = if let Ok(s) = obj.extract::<String>() {
        s
    } else {
        py.import("json")?.call_method1("dumps", (obj,))?.extract()?
    };
    SimConfig::from_json(&text).map_err(value_err)
}

fn reg(index: u32) -> PyResult<Reg> {
    Reg::new(index).map_err(value_err)
}

/// An assembled program image.
#[pyclass(name = "Image", module = "pyvexsim", skip_from_py_object)]
#[derive(Clone)]
struct PyImage {
    inner: image::Image,
}

#[pymethods]
impl PyImage {
    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        image::Image::from_bytes(data).map(|inner| PyImage { inner }).map_err(value_err)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }

    #[getter]
    fn base(&self) -> u32 {
        self.inner.base
    }

    #[getter]
    fn entry(&self) -> u32 {
        self.inner.entry
    }

    #[getter]
    fn symbols<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (k, v) in &self.inner.symbols {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    fn symbol(&self, name: &str) -> Option<u32> {
        self.inner.symbol(name)
    }

    fn listing(&self) -> String {
        asm::link_and_dump(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.bytes.len()
    }
}

/// Assembles source text; raises ValueError with the line number on error.
#[pyfunction]
fn assemble(src: &str) -> PyResult<PyImage> {
    asm::assemble(src).map(|inner| PyImage { inner }).map_err(value_err)
}

/// Disassembles one instruction word.
#[pyfunction]
fn disassemble(word: u32) -> String {
    asm::listing_text(word, &isa::BuiltinCustoms)
}

/// The cycle-level simulator.
#[pyclass(name = "Simulator", module = "pyvexsim", unsendable)]
struct PySimulator {
    inner: cpu::Simulator,
}

#[pymethods]
impl PySimulator {
    /// `config` is a dict or a JSON string; omitted fields take defaults.
    #[new]
    #[pyo3(signature = (config=None))]
    fn new(py: Python<'_>, config: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let config = config_from(py, config)?;
        cpu::Simulator::new(&config).map(|inner| PySimulator { inner }).map_err(value_err)
    }

    fn load_image(&mut self, image: &PyImage) -> PyResult<()> {
        self.inner.load_image(&image.inner).map_err(value_err)
    }

    /// Runs to exit; returns the execution statistics as a dict.
    #[pyo3(signature = (max_cycles=None))]
    fn run<'py>(&mut self, py: Python<'py>, max_cycles: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
        let stats = self.inner.run(max_cycles).map_err(runtime_err)?;
        to_py(py, &stats)
    }

    /// Executes one instruction; returns (retired, cycles consumed).
    fn step(&mut self) -> PyResult<(bool, u64)> {
        let r = self.inner.step();
        match r.trap {
            Some(t) => Err(runtime_err(t)),
            None => Ok((r.retired, r.cycles_consumed)),
        }
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.stats())
    }

    fn reg(&self, index: u32) -> PyResult<u32> {
        Ok(self.inner.state().reg(reg(index)?))
    }

    fn set_reg(&mut self, index: u32, value: u32) -> PyResult<()> {
        self.inner.set_reg(reg(index)?, value);
        Ok(())
    }

    #[getter]
    fn pc(&self) -> u32 {
        self.inner.state().pc
    }

    #[getter]
    fn cycle(&self) -> u64 {
        self.inner.state().cycle
    }

    #[getter]
    fn halted(&self) -> bool {
        self.inner.state().halted
    }

    #[getter]
    fn exit_code(&self) -> Option<i32> {
        self.inner.state().exit_code
    }

    fn read_words(&self, addr: u32, count: usize) -> PyResult<Vec<u32>> {
        self.inner.read_words(addr, count).map_err(value_err)
    }

    fn read_memory<'py>(&self, py: Python<'py>, addr: u32, len: usize) -> PyResult<Bound<'py, PyBytes>> {
        let data = self.inner.read_memory(addr, len).map_err(value_err)?;
        Ok(PyBytes::new(py, &data))
    }

    fn write_memory(&mut self, addr: u32, data: &[u8]) -> PyResult<()> {
        self.inner.write_memory(addr, data).map_err(value_err)
    }

    /// Bytes written through the write host call.
    fn output<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.output())
    }
}

/// Names of the bundled benchmarks.
#[pyfunction]
fn bench_names() -> Vec<&'static str> {
    BenchName::ALL.iter().map(|b| b.as_str()).collect()
}

/// Runs one bundled benchmark; returns its metrics row as a dict.
#[pyfunction]
#[pyo3(signature = (name, data_bytes, seed=1, config=None))]
fn run_bench<'py>(
    py: Python<'py>,
    name: &str,
    data_bytes: u64,
    seed: u64,
    config: Option<&Bound<'_, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = BenchSpec { name: name.parse().map_err(value_err)?, data_bytes, seed, config: config_from(py, config)? };
    let result = py.detach(|| bench::run_bench(&spec)).map_err(runtime_err)?;
    to_py(py, &result.row)
}

/// Runs a sweep grid (dict or JSON string); returns a list of row dicts.
#[pyfunction]
fn sweep<'py>(py: Python<'py>, grid: &Bound<'_, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let text: String = match grid.extract::<String>() {
        Ok(s) => s,
        Err(_) => py.import("json")?.call_method1("dumps", (grid,))?.extract()?,
    };
    let grid = bench::Grid::from_json(&text).map_err(value_err)?;
    let rows = py.detach(|| bench::sweep(&grid));
    to_py(py, &rows)
}

/// The default configuration as a dict.
#[pyfunction]
fn default_config<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &SimConfig::default())
}

#[pymodule]
fn pyvexsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PySimulator>()?;
    m.add_function(wrap_pyfunction!(assemble, m)?)?;
    m.add_function(wrap_pyfunction!(disassemble, m)?)?;
    m.add_function(wrap_pyfunction!(bench_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_runs_a_program_from_python() {
        Python::attach(|py| {
            let m = PyModule::new(py, "pyvexsim").unwrap();
            pyvexsim(&m).unwrap();
            let code = c"img = m.assemble('li a0, 7\\nli a7, 93\\necall')\n\
sim = m.Simulator({'vlen_bits': 128})\n\
sim.load_image(img)\n\
stats = sim.run()\n\
assert sim.exit_code == 7, sim.exit_code\n\
assert stats['instructions'] == 3\n\
row = m.run_bench('psum_simd', 1024)\n\
assert row['validated'], row\n";
            let locals = PyDict::new(py);
            locals.set_item("m", &m).unwrap();
            py.run(code, None, Some(&locals)).unwrap();
        });
    }

    #[test]
    fn bad_config_is_a_value_error() {
        Python::attach(|py| {
            let cfg = "{\"vlen_bits\": 100}".into_pyobject(py).unwrap();
            let err = PySimulator::new(py, Some(cfg.as_any())).err().unwrap();
            assert!(err.is_instance_of::<PyValueError>(py));
        });
    }
}
