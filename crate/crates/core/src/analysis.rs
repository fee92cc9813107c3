//! Reference solutions, error metrics and the cube benchmark study.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

use crate::assembly::{build_system, Method};
use crate::bvp::{affine_patch, box_benchmark, Affine, BvpSpec};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mesh::{generate_structured_mesh, perturb_interior_nodes, quality, Extents, Mesh, Mode, QualityReport};
use crate::solver::{solve, SolveMethod, SolveOptions, SolveReport, DENSE_LIMIT};

/// Potential inside the unit cube whose top face is held at
/// `10 sin(πx) sin(πy)` and whose other faces are grounded.
pub fn box_reference(x: &Point) -> f64 {
    let s = PI * SQRT_2;
    10.0 * (PI * x[0]).sin() * (PI * x[1]).sin() * (x[2] * s).sinh() / s.sinh()
}

/// Normalized nodal error `sqrt(Σ (V_s − V_ref)² / Σ V_ref²)`.
pub fn rmse(numerical: &[f64], reference: &[f64]) -> Result<f64> {
    if numerical.len() != reference.len() {
        return Err(Error::InvalidArgument(format!(
            "{} numerical values for {} reference values",
            numerical.len(),
            reference.len()
        )));
    }
    let num: f64 = numerical.iter().zip(reference).map(|(s, r)| (s - r) * (s - r)).sum();
    let den: f64 = reference.iter().map(|r| r * r).sum();
    if den == 0.0 {
        return Err(Error::InvalidArgument("reference potential is identically zero".into()));
    }
    Ok((num / den).sqrt())
}

pub fn max_abs_error(numerical: &[f64], reference: &[f64]) -> f64 {
    numerical.iter().zip(reference).map(|(s, r)| (s - r).abs()).fold(0.0, f64::max)
}

/// Validates, assembles (with boundary conditions) and solves.
pub fn solve_problem(mesh: &Mesh, spec: &BvpSpec, method: Method, options: &SolveOptions) -> Result<SolveReport> {
    let checked = spec.validate(mesh)?;
    let system = build_system(mesh, &checked, method)?;
    solve(&system, options)
}

/// Imposes the affine field on the whole boundary, solves the Laplace problem
/// and returns the largest nodal deviation from the field.
///
/// In cylindrical mode the field may vary only along z; a radial gradient is
/// not a solution of the axisymmetric Laplace equation.
pub fn patch_test(mesh: &Mesh, method: Method, field: Affine) -> Result<f64> {
    if mesh.mode() == Mode::Cylindrical2D && field.gradient[0] != 0.0 {
        return Err(Error::InvalidArgument(
            "cylindrical patch fields must not depend on r".into(),
        ));
    }
    if mesh.mode().dimension() == 2 && field.gradient[2] != 0.0 {
        return Err(Error::InvalidArgument("2D patch fields have no third component".into()));
    }
    let options = if mesh.node_count() <= DENSE_LIMIT {
        SolveOptions {
            method: SolveMethod::DenseCholesky,
            ..SolveOptions::default()
        }
    } else {
        SolveOptions {
            tolerance: 1e-14,
            ..SolveOptions::default()
        }
    };
    let report = solve_problem(mesh, &affine_patch(mesh, field), method, &options)?;
    let exact: Vec<f64> = mesh.nodes().iter().map(|x| field.eval(x)).collect();
    Ok(max_abs_error(&report.solution, &exact))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub mesh_descriptor: String,
    pub method: Method,
    /// Mean edge length.
    pub h: f64,
    pub rmse: f64,
    pub max_abs_error: f64,
    pub iterations: usize,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxStudyConfig {
    /// Cells per cube edge, each ≥ 2.
    pub divisions: Vec<usize>,
    /// Perturbation magnitude; 0 disables the perturbed meshes.
    pub perturbation: f64,
    /// One perturbed mesh per seed and division.
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub solver: SolveOptions,
}

impl Default for BoxStudyConfig {
    fn default() -> Self {
        BoxStudyConfig {
            divisions: vec![4, 8, 16],
            perturbation: 0.2,
            seeds: vec![7],
            methods: vec![Method::Fem, Method::EsFem],
            solver: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyMesh {
    pub descriptor: String,
    pub divisions: usize,
    pub perturbation: Option<(f64, u64)>,
    pub quality: QualityReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxStudy {
    pub meshes: Vec<StudyMesh>,
    /// Ordered by division, then regular before perturbed (by seed), then method.
    pub reports: Vec<ErrorReport>,
}

pub fn regular_descriptor(divisions: usize) -> String {
    format!("regular-n{divisions}")
}

pub fn perturbed_descriptor(divisions: usize, magnitude: f64, seed: u64) -> String {
    format!("perturbed-n{divisions}-m{magnitude}-s{seed}")
}

/// Solves the cube benchmark on structured and perturbed meshes with each
/// method and compares the nodal potentials to [`box_reference`].
pub fn run_box_study(config: &BoxStudyConfig) -> Result<BoxStudy> {
    if config.divisions.is_empty() || config.divisions.iter().any(|&d| d < 2) {
        return Err(Error::InvalidArgument("box study divisions must each be at least 2".into()));
    }
    if config.methods.is_empty() {
        return Err(Error::InvalidArgument("no methods selected".into()));
    }
    let spec = box_benchmark();
    let mut meshes = Vec::new();
    let mut reports = Vec::new();
    for &n in &config.divisions {
        let regular = generate_structured_mesh(Mode::Cartesian3D, &[n], &Extents::unit())?;
        let mut variants = vec![(regular_descriptor(n), None, regular.clone())];
        if config.perturbation > 0.0 {
            for &seed in &config.seeds {
                let mesh = perturb_interior_nodes(&regular, config.perturbation, seed)?;
                variants.push((
                    perturbed_descriptor(n, config.perturbation, seed),
                    Some((config.perturbation, seed)),
                    mesh,
                ));
            }
        }
        for (descriptor, perturbation, mesh) in variants {
            let q = quality(&mesh);
            let reference: Vec<f64> = mesh.nodes().iter().map(box_reference).collect();
            for &method in &config.methods {
                let report = solve_problem(&mesh, &spec, method, &config.solver)?;
                reports.push(ErrorReport {
                    mesh_descriptor: descriptor.clone(),
                    method,
                    h: q.mean_edge_length,
                    rmse: rmse(&report.solution, &reference)?,
                    max_abs_error: max_abs_error(&report.solution, &reference),
                    iterations: report.iterations,
                    wall_time: report.wall_time,
                });
            }
            meshes.push(StudyMesh {
                descriptor,
                divisions: n,
                perturbation,
                quality: q,
            });
        }
    }
    Ok(BoxStudy { meshes, reports })
}

pub const ERRORS_CSV_HEADER: &str = "mesh_descriptor,method,h,rmse,max_abs_error,iterations,wall_time";

impl BoxStudy {
    pub fn report(&self, descriptor: &str, method: Method) -> Option<&ErrorReport> {
        self.reports
            .iter()
            .find(|r| r.mesh_descriptor == descriptor && r.method == method)
    }

    pub fn mesh(&self, descriptor: &str) -> Option<&StudyMesh> {
        self.meshes.iter().find(|m| m.descriptor == descriptor)
    }

    /// Error table. `wall_time` is left empty unless `with_timings`, so that
    /// repeated runs produce identical bytes.
    pub fn errors_csv(&self, with_timings: bool) -> String {
        let mut s = String::from(ERRORS_CSV_HEADER);
        s.push('\n');
        for r in &self.reports {
            let time = if with_timings { format!("{:?}", r.wall_time) } else { String::new() };
            let _ = writeln!(
                s,
                "{},{},{:?},{:?},{:?},{},{}",
                r.mesh_descriptor,
                r.method.name(),
                r.h,
                r.rmse,
                r.max_abs_error,
                r.iterations,
                time
            );
        }
        s
    }

    /// Ratio histogram per mesh: `mesh_descriptor,bin_lower,bin_upper,count,fraction`.
    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("mesh_descriptor,bin_lower,bin_upper,count,fraction\n");
        for m in &self.meshes {
            let total = m.quality.per_element_ratio.len() as f64;
            for (i, &count) in m.quality.histogram.iter().enumerate() {
                let (lo, hi) = QualityReport::bin_bounds(i);
                let hi = if hi.is_finite() { format!("{hi:?}") } else { "inf".to_string() };
                let _ = writeln!(s, "{},{lo:?},{hi},{count},{:?}", m.descriptor, count as f64 / total);
            }
        }
        s
    }

    /// One line per mesh: `mesh_descriptor,elements,h,fraction_ratio_gt_2,max_ratio`.
    pub fn mesh_summary_csv(&self) -> String {
        let mut s = String::from("mesh_descriptor,elements,h,fraction_ratio_gt_2,max_ratio\n");
        for m in &self.meshes {
            let _ = writeln!(
                s,
                "{},{},{:?},{:?},{:?}",
                m.descriptor,
                m.quality.per_element_ratio.len(),
                m.quality.mean_edge_length,
                m.quality.fraction_above(2.0),
                m.quality.max_ratio()
            );
        }
        s
    }
}

/// Least-squares slope of `log(rmse)` against `log(1/h)`, i.e. the observed order.
pub fn convergence_order(h: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|h| -h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -sxy / sxx
}
