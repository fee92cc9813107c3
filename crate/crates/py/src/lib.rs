//! Python bindings: meshes, solves, the cube benchmark study and the
//! verification suite.

use std::path::PathBuf;

use esfem_core::analysis::{self, BoxStudyConfig};
use esfem_core::bvp::{affine_patch, box_benchmark, BvpSpec};
use esfem_core::mesh::io::{import_mesh, read_json, write_json, MeshFormat};
use esfem_core::mesh::{self as m, Extents, Mode};
use esfem_core::solver::{SolveMethod, SolveOptions};
use esfem_core::{Affine, Error, Method};
use pyo3::exceptions::{PyFileNotFoundError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    let text = format!("[{}] {e}", e.category());
    match e.category() {
        "file-not-found" => PyFileNotFoundError::new_err(text),
        "singular-system" | "solver-not-converged" | "io-error" => PyRuntimeError::new_err(text),
        _ => PyValueError::new_err(text),
    }
}

fn parse_mode(s: &str) -> PyResult<Mode> {
    s.parse().map_err(to_py)
}

fn parse_method(s: &str) -> PyResult<Method> {
    s.parse().map_err(to_py)
}

fn point(v: Option<Vec<f64>>, default: [f64; 3]) -> PyResult<[f64; 3]> {
    match v {
        None => Ok(default),
        Some(v) if (1..=3).contains(&v.len()) => {
            let mut p = [0.0; 3];
            p[..v.len()].copy_from_slice(&v);
            Ok(p)
        }
        Some(_) => Err(PyValueError::new_err("extents need 1 to 3 coordinates")),
    }
}

/// A simplicial mesh: triangles (2D modes) or tetrahedra.
#[pyclass(name = "Mesh", module = "esfem", frozen)]
struct PyMesh {
    inner: m::Mesh,
}

#[pymethods]
impl PyMesh {
    /// Structured mesh of a rectangle or box.
    #[staticmethod]
    #[pyo3(signature = (mode, divisions, extent_min=None, extent_max=None))]
    fn generate(mode: &str, divisions: Vec<usize>, extent_min: Option<Vec<f64>>, extent_max: Option<Vec<f64>>) -> PyResult<Self> {
        let mode = parse_mode(mode)?;
        let top = if mode.dimension() == 2 { [1.0, 1.0, 0.0] } else { [1.0; 3] };
        let extents = Extents::new(point(extent_min, [0.0; 3])?, point(extent_max, top)?);
        let inner = m::generate_structured_mesh(mode, &divisions, &extents).map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    /// Reads a native `.json` mesh or a Gmsh 2 ASCII `.msh` file.
    #[staticmethod]
    #[pyo3(signature = (path, mode=None))]
    fn load(path: PathBuf, mode: Option<&str>) -> PyResult<Self> {
        let inner = match MeshFormat::from_path(&path) {
            Some(MeshFormat::Json) => read_json(&path),
            Some(MeshFormat::Msh) => {
                let mode = mode.map(parse_mode).transpose()?.unwrap_or(Mode::Cartesian3D);
                import_mesh(&path, MeshFormat::Msh, mode)
            }
            None => return Err(PyValueError::new_err("expected a .json or .msh file")),
        }
        .map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        write_json(&self.inner, &path).map_err(to_py)
    }

    /// Copy with interior nodes displaced; deterministic for a seed.
    fn perturb(&self, magnitude: f64, seed: u64) -> PyResult<Self> {
        let inner = m::perturb_interior_nodes(&self.inner, magnitude, seed).map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    fn quality(&self) -> Quality {
        let q = m::quality(&self.inner);
        Quality {
            mean_edge_length: q.mean_edge_length,
            max_ratio: q.max_ratio(),
            fraction_above_two: q.fraction_above(2.0),
            histogram: q.histogram.clone(),
            bin_edges: m::RATIO_BIN_EDGES.to_vec(),
            ratios: q.per_element_ratio,
        }
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode().name()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn element_count(&self) -> usize {
        self.inner.element_count()
    }

    #[getter]
    fn nodes(&self) -> Vec<[f64; 3]> {
        self.inner.nodes().to_vec()
    }

    #[getter]
    fn elements(&self) -> Vec<Vec<usize>> {
        self.inner.elements().map(<[usize]>::to_vec).collect()
    }

    #[getter]
    fn boundary_tags(&self) -> Vec<i32> {
        self.inner.boundary_tags()
    }

    fn total_measure(&self) -> f64 {
        self.inner.total_measure()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(mode='{}', nodes={}, elements={})",
            self.inner.mode().name(),
            self.inner.node_count(),
            self.inner.element_count()
        )
    }
}

#[pyclass(module = "esfem", frozen, get_all)]
struct Quality {
    mean_edge_length: f64,
    max_ratio: f64,
    fraction_above_two: f64,
    histogram: Vec<usize>,
    bin_edges: Vec<f64>,
    ratios: Vec<f64>,
}

#[pyclass(module = "esfem", frozen, get_all)]
struct Solution {
    potential: Vec<f64>,
    iterations: usize,
    relative_residual: f64,
    wall_time: f64,
}

#[pyclass(module = "esfem", frozen, get_all)]
struct ErrorRow {
    mesh_descriptor: String,
    method: String,
    h: f64,
    rmse: f64,
    max_abs_error: f64,
    iterations: usize,
}

#[pyclass(module = "esfem", frozen, get_all)]
struct CheckResult {
    name: String,
    passed: bool,
    measured: f64,
    threshold: f64,
    detail: String,
}

fn builtin_spec(name: &str, mesh: &m::Mesh, field: Affine) -> PyResult<BvpSpec> {
    match name {
        "box" => Ok(box_benchmark()),
        "patch-affine" => Ok(affine_patch(mesh, field)),
        other => Err(PyValueError::new_err(format!("unknown spec `{other}` (expected box or patch-affine)"))),
    }
}

/// Solves a built-in problem. `patch-affine` imposes `constant + gradient·x`
/// on the whole boundary.
#[pyfunction]
#[pyo3(signature = (mesh, spec="box", method="esfem", tol=1e-10, dense=false, constant=1.0, gradient=None))]
fn solve(
    py: Python<'_>,
    mesh: &PyMesh,
    spec: &str,
    method: &str,
    tol: f64,
    dense: bool,
    constant: f64,
    gradient: Option<Vec<f64>>,
) -> PyResult<Solution> {
    let method = parse_method(method)?;
    let field = Affine { constant, gradient: point(gradient, [0.0; 3])? };
    let spec = builtin_spec(spec, &mesh.inner, field)?;
    let options = SolveOptions {
        method: if dense { SolveMethod::DenseCholesky } else { SolveMethod::ConjugateGradient },
        tolerance: tol,
        ..SolveOptions::default()
    };
    let inner = &mesh.inner;
    let report = py
        .detach(|| analysis::solve_problem(inner, &spec, method, &options))
        .map_err(to_py)?;
    Ok(Solution {
        potential: report.solution,
        iterations: report.iterations,
        relative_residual: report.final_relative_residual,
        wall_time: report.wall_time,
    })
}

/// Exact potential of the cube benchmark.
#[pyfunction]
fn box_reference(x: f64, y: f64, z: f64) -> f64 {
    analysis::box_reference(&[x, y, z])
}

#[pyfunction]
fn rmse(numerical: Vec<f64>, reference: Vec<f64>) -> PyResult<f64> {
    analysis::rmse(&numerical, &reference).map_err(to_py)
}

/// Largest nodal error when the affine field is imposed on the boundary.
#[pyfunction]
#[pyo3(signature = (mesh, method, constant, gradient))]
fn patch_test(mesh: &PyMesh, method: &str, constant: f64, gradient: Vec<f64>) -> PyResult<f64> {
    let field = Affine { constant, gradient: point(Some(gradient), [0.0; 3])? };
    analysis::patch_test(&mesh.inner, parse_method(method)?, field).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (divisions=vec![4, 8, 16], perturbation=0.2, seeds=vec![7], methods=vec!["fem".to_string(), "esfem".to_string()], tol=1e-10))]
fn run_box_study(
    py: Python<'_>,
    divisions: Vec<usize>,
    perturbation: f64,
    seeds: Vec<u64>,
    methods: Vec<String>,
    tol: f64,
) -> PyResult<Vec<ErrorRow>> {
    let config = BoxStudyConfig {
        divisions,
        perturbation,
        seeds,
        methods: methods.iter().map(|s| parse_method(s)).collect::<PyResult<_>>()?,
        solver: SolveOptions { tolerance: tol, ..SolveOptions::default() },
    };
    let study = py.detach(|| analysis::run_box_study(&config)).map_err(to_py)?;
    Ok(study
        .reports
        .into_iter()
        .map(|r| ErrorRow {
            mesh_descriptor: r.mesh_descriptor,
            method: r.method.name().to_string(),
            h: r.h,
            rmse: r.rmse,
            max_abs_error: r.max_abs_error,
            iterations: r.iterations,
        })
        .collect())
}

/// Runs the patch tests and invariant checks.
#[pyfunction]
fn verify(py: Python<'_>) -> PyResult<Vec<CheckResult>> {
    let checks = py.detach(esfem_core::verification::run_verification).map_err(to_py)?;
    Ok(checks
        .into_iter()
        .map(|c| CheckResult {
            name: c.name,
            passed: c.passed,
            measured: c.measured,
            threshold: c.threshold,
            detail: c.detail,
        })
        .collect())
}

#[pymodule]
fn esfem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<Quality>()?;
    m.add_class::<Solution>()?;
    m.add_class::<ErrorRow>()?;
    m.add_class::<CheckResult>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(box_reference, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(patch_test, m)?)?;
    m.add_function(wrap_pyfunction!(run_box_study, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
