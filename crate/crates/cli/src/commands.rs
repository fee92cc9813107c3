use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use esfem_core::analysis::{
    box_reference, max_abs_error, rmse, run_box_study, solve_problem, BoxStudyConfig, ERRORS_CSV_HEADER,
};
use esfem_core::assembly::Method;
use esfem_core::bvp::{affine_patch, box_benchmark, Affine, BvpSpec};
use esfem_core::mesh::io::{export_vtk, import_mesh, read_json, write_json, MeshFormat};
use esfem_core::mesh::{generate_structured_mesh, perturb_interior_nodes, quality, Extents, Mesh, Mode, QualityReport};
use esfem_core::solver::{SolveOptions, DEFAULT_TOLERANCE};
use esfem_core::verification::run_verification;
use esfem_core::Point;

use crate::config::{self, FileConfig};
use crate::{CliError, RunArgs};

type Result<T> = std::result::Result<T, CliError>;

const DEFAULT_SEED: u64 = 7;

/// Flag values with config-file fallback.
struct Settings<'a> {
    args: &'a RunArgs,
    file: &'a FileConfig,
}

impl<'a> Settings<'a> {
    fn new(args: &'a RunArgs, file: &'a FileConfig) -> Self {
        Settings { args, file }
    }

    fn explicit_mode(&self) -> Result<Option<Mode>> {
        self.args.mode.as_ref().or(self.file.mode.as_ref()).map(|s| config::parse_mode(s)).transpose()
    }

    fn mode(&self) -> Result<Mode> {
        Ok(self.explicit_mode()?.unwrap_or(Mode::Cartesian3D))
    }

    fn divisions(&self, default: &[usize]) -> Vec<usize> {
        self.args.divisions.clone().or_else(|| self.file.divisions.clone()).unwrap_or_else(|| default.to_vec())
    }

    fn extents(&self, mode: Mode) -> Result<Extents> {
        let min = match self.args.extent_min.as_ref().or(self.file.extent_min.as_ref()) {
            Some(v) => config::point(v, "extent-min")?,
            None => [0.0; 3],
        };
        let max = match self.args.extent_max.as_ref().or(self.file.extent_max.as_ref()) {
            Some(v) => config::point(v, "extent-max")?,
            None if mode.dimension() == 2 => [1.0, 1.0, 0.0],
            None => [1.0; 3],
        };
        Ok(Extents::new(min, max))
    }

    fn perturb(&self, default: f64) -> f64 {
        self.args.perturb.or(self.file.perturb).unwrap_or(default)
    }

    fn seed(&self) -> u64 {
        self.args.seed.or(self.file.seed).unwrap_or(DEFAULT_SEED)
    }

    /// `--seed` replaces the file's seed list.
    fn seeds(&self) -> Vec<u64> {
        match (self.args.seed, &self.file.seeds, self.file.seed) {
            (Some(s), _, _) => vec![s],
            (None, Some(list), _) => list.clone(),
            (None, None, Some(s)) => vec![s],
            _ => vec![DEFAULT_SEED],
        }
    }

    fn methods(&self) -> Result<Vec<Method>> {
        config::parse_methods(self.args.method.as_deref().or(self.file.method.as_deref()).unwrap_or("both"))
    }

    fn solver(&self) -> SolveOptions {
        let mut options = SolveOptions {
            tolerance: self.args.tol.or(self.file.tol).unwrap_or(DEFAULT_TOLERANCE),
            ..SolveOptions::default()
        };
        if let Some(n) = self.file.max_iterations {
            options.max_iterations = n;
        }
        options
    }

    fn out(&self, default: &str) -> PathBuf {
        self.args.out.clone().or_else(|| self.file.out.clone()).unwrap_or_else(|| PathBuf::from(default))
    }

    fn mesh_path(&self) -> Option<&Path> {
        self.args.mesh.as_deref().or(self.file.mesh.as_deref())
    }

    fn spec_name(&self) -> Option<&str> {
        self.args.spec.as_deref().or(self.file.spec.as_deref())
    }

    fn timings(&self) -> bool {
        self.args.timings || self.file.timings.unwrap_or(false)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::new("io-error", format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| io_error(path, e))
}

fn load_mesh(path: &Path, mode: Option<Mode>) -> Result<Mesh> {
    match MeshFormat::from_path(path) {
        Some(MeshFormat::Json) => {
            let mesh = read_json(path)?;
            if let Some(m) = mode {
                if m != mesh.mode() {
                    return Err(CliError::new(
                        "invalid-argument",
                        format!("{} is a {} mesh, not {}", path.display(), mesh.mode().name(), m.name()),
                    ));
                }
            }
            Ok(mesh)
        }
        Some(MeshFormat::Msh) => Ok(import_mesh(path, MeshFormat::Msh, mode.unwrap_or(Mode::Cartesian3D))?),
        None => Err(CliError::new(
            "invalid-argument",
            format!("{}: expected a .json or .msh mesh", path.display()),
        )),
    }
}

fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => write_json(mesh, path)?,
        Some("vtk") => export_vtk(mesh, &[], path)?,
        _ => {
            return Err(CliError::new(
                "invalid-argument",
                format!("{}: meshes are written as .json or .vtk", path.display()),
            ))
        }
    }
    Ok(())
}

fn joined(divisions: &[usize]) -> String {
    divisions.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

/// The mesh from `--mesh`, or a structured one, perturbed when asked.
fn obtain_mesh(s: &Settings, default_divisions: &[usize]) -> Result<(Mesh, String)> {
    let (mesh, base) = match s.mesh_path() {
        Some(path) => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh").to_string();
            (load_mesh(path, s.explicit_mode()?)?, stem)
        }
        None => {
            let mode = s.mode()?;
            let divisions = s.divisions(default_divisions);
            let mesh = generate_structured_mesh(mode, &divisions, &s.extents(mode)?)?;
            (mesh, format!("n{}", joined(&divisions)))
        }
    };
    let m = s.perturb(0.0);
    if m > 0.0 {
        let seed = s.seed();
        Ok((perturb_interior_nodes(&mesh, m, seed)?, format!("perturbed-{base}-m{m}-s{seed}")))
    } else if s.mesh_path().is_some() {
        Ok((mesh, base))
    } else {
        Ok((mesh, format!("regular-{base}")))
    }
}

fn describe(mesh: &Mesh) -> String {
    format!(
        "{} mesh, {} nodes, {} elements, {} boundary facets",
        mesh.mode().name(),
        mesh.node_count(),
        mesh.element_count(),
        mesh.boundary_facets().len()
    )
}

pub fn mesh_generate(args: &RunArgs, file: &FileConfig) -> Result<()> {
    let s = Settings::new(args, file);
    let (mesh, _) = obtain_mesh(&s, &[8])?;
    let out = s.out("mesh.json");
    write_mesh(&mesh, &out)?;
    println!("wrote {}: {}", out.display(), describe(&mesh));
    Ok(())
}

pub fn mesh_perturb(args: &RunArgs, file: &FileConfig) -> Result<()> {
    let s = Settings::new(args, file);
    let path = s
        .mesh_path()
        .ok_or_else(|| CliError::new("invalid-argument", "mesh perturb needs --mesh"))?;
    let mesh = load_mesh(path, s.explicit_mode()?)?;
    let perturbed = perturb_interior_nodes(&mesh, s.perturb(0.2), s.seed())?;
    let out = s.out("perturbed.json");
    write_mesh(&perturbed, &out)?;
    println!("wrote {}: {}", out.display(), describe(&perturbed));
    Ok(())
}

fn histogram_csv(q: &QualityReport) -> String {
    let mut out = String::from("bin_lower,bin_upper,count,fraction\n");
    let total = q.per_element_ratio.len() as f64;
    for (i, &count) in q.histogram.iter().enumerate() {
        let (lo, hi) = QualityReport::bin_bounds(i);
        let hi = if hi.is_finite() { format!("{hi:?}") } else { "inf".into() };
        let _ = writeln!(out, "{lo:?},{hi},{count},{:?}", count as f64 / total);
    }
    out
}

pub fn mesh_quality(args: &RunArgs, file: &FileConfig) -> Result<()> {
    let s = Settings::new(args, file);
    let (mesh, descriptor) = obtain_mesh(&s, &[8])?;
    let q = quality(&mesh);
    println!("{descriptor}: {}", describe(&mesh));
    println!(
        "mean edge length {:.6}, max ratio {:.4}, fraction with ratio > 2: {:.4}",
        q.mean_edge_length,
        q.max_ratio(),
        q.fraction_above(2.0)
    );
    let csv = histogram_csv(&q);
    print!("{csv}");
    if let Some(out) = args.out.as_ref().or(file.out.as_ref()) {
        write_file(out, &csv)?;
    }
    Ok(())
}

pub fn mesh_convert(args: &RunArgs, file: &FileConfig) -> Result<()> {
    let s = Settings::new(args, file);
    let path = s
        .mesh_path()
        .ok_or_else(|| CliError::new("invalid-argument", "mesh convert needs --mesh"))?;
    let mesh = load_mesh(path, s.explicit_mode()?)?;
    let out = args
        .out
        .clone()
        .or_else(|| file.out.clone())
        .ok_or_else(|| CliError::new("invalid-argument", "mesh convert needs --out"))?;
    write_mesh(&mesh, &out)?;
    println!("wrote {}: {}", out.display(), describe(&mesh));
    Ok(())
}

/// Default affine field of the `patch-affine` problem for each mode.
pub fn patch_field(mode: Mode) -> Affine {
    match mode {
        Mode::Cylindrical2D => Affine { constant: 3.0, gradient: [0.0, 2.0, 0.0] },
        Mode::Planar2D => Affine { constant: 1.0, gradient: [2.0, -1.0, 0.0] },
        Mode::Cartesian3D => Affine { constant: 1.0, gradient: [2.0, 3.0, -1.0] },
    }
}

type Reference = Box<dyn Fn(&Point) -> f64>;

fn problem(s: &Settings, mesh: &Mesh) -> Result<(String, BvpSpec, Option<Reference>)> {
    let default = if s.file.bvp.is_some() {
        "inline"
    } else if mesh.mode() == Mode::Cartesian3D {
        "box"
    } else {
        "patch-affine"
    };
    let name = s.spec_name().unwrap_or(default);
    match name {
        "box" => Ok((name.into(), box_benchmark(), Some(Box::new(box_reference)))),
        "patch-affine" => {
            let field = patch_field(mesh.mode());
            Ok((name.into(), affine_patch(mesh, field), Some(Box::new(move |x: &Point| field.eval(x)))))
        }
        "inline" => match &s.file.bvp {
            Some(bvp) => Ok((name.into(), bvp.to_spec(mesh.mode()), None)),
            None => Err(CliError::new("invalid-spec", "spec `inline` needs a [bvp] table in the config file")),
        },
        other => Err(CliError::new(
            "invalid-spec",
            format!("unknown spec `{other}` (expected box, patch-affine or inline)"),
        )),
    }
}

fn float_or_empty(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:?}"))
}

pub fn solve(args: &RunArgs, file: &FileConfig) -> Result<()> {
    let s = Settings::new(args, file);
    let (mesh, descriptor) = obtain_mesh(&s, &[8])?;
    let (spec_name, spec, reference) = problem(&s, &mesh)?;
    let methods = s.methods()?;
    let options = s.solver();
    let out = s.out("esfem-out");
    create_dir(&out)?;

    let h = quality(&mesh).mean_edge_length;
    let exact: Option<Vec<f64>> = reference.as_ref().map(|f| mesh.nodes().iter().map(f).collect());
    let mut csv = format!("{ERRORS_CSV_HEADER}\n");
    let mut log = format!("mesh {descriptor}: {}\nspec {spec_name}, tolerance {:e}\n", describe(&mesh), options.tolerance);
    let mut fields: Vec<(String, Vec<f64>)> = Vec::new();
    for method in methods {
        let report = solve_problem(&mesh, &spec, method, &options)?;
        let (e_rms, e_max) = match &exact {
            Some(r) => (Some(rmse(&report.solution, r)?), Some(max_abs_error(&report.solution, r))),
            None => (None, None),
        };
        let time = if s.timings() { format!("{:?}", report.wall_time) } else { String::new() };
        let _ = writeln!(
            csv,
            "{descriptor},{},{h:?},{},{},{},{time}",
            method.name(),
            float_or_empty(e_rms),
            float_or_empty(e_max),
            report.iterations
        );
        let _ = writeln!(
            log,
            "{}: {} iterations, relative residual {:e}, {:.3}s{}",
            method.name(),
            report.iterations,
            report.final_relative_residual,
            report.wall_time,
            e_rms.map_or_else(String::new, |e| format!(", rmse {e:e}"))
        );
        fields.push((format!("potential_{}", method.name().to_ascii_lowercase()), report.solution));
    }
    if let Some(r) = exact {
        fields.push(("reference".into(), r));
    }
    let named: Vec<(&str, &[f64])> = fields.iter().map(|(n, v)| (n.as_str(), v.as_slice())).collect();
    export_vtk(&mesh, &named, &out.join("solution.vtk"))?;
    write_file(&out.join("errors.csv"), &csv)?;
    write_file(&out.join("solve.log"), &log)?;
    print!("{log}");
    println!("wrote {}", out.display());
    Ok(())
}

pub fn box_study(args: &RunArgs, file: &FileConfig) -> Result<()> {
    let s = Settings::new(args, file);
    if s.mesh_path().is_some() {
        return Err(CliError::new("invalid-argument", "box-study generates its own meshes; drop --mesh"));
    }
    if let Some(mode) = s.explicit_mode()? {
        if mode != Mode::Cartesian3D {
            return Err(CliError::new("invalid-argument", "box-study runs in cartesian3d mode only"));
        }
    }
    if let Some(name) = s.spec_name() {
        if name != "box" {
            return Err(CliError::new("invalid-spec", format!("box-study solves the box problem, not `{name}`")));
        }
    }
    let config = BoxStudyConfig {
        divisions: s.divisions(&[4, 8, 16]),
        perturbation: s.perturb(0.2),
        seeds: s.seeds(),
        methods: s.methods()?,
        solver: s.solver(),
    };
    let study = run_box_study(&config)?;
    let out = s.out("box-study");
    create_dir(&out)?;
    let errors = study.errors_csv(s.timings());
    write_file(&out.join("errors.csv"), &errors)?;
    write_file(&out.join("quality_histogram.csv"), &study.histogram_csv())?;
    write_file(&out.join("mesh_summary.csv"), &study.mesh_summary_csv())?;
    let mut log = String::new();
    for r in &study.reports {
        let _ = writeln!(
            log,
            "{} {}: rmse {:e}, {} iterations, {:.3}s",
            r.mesh_descriptor,
            r.method.name(),
            r.rmse,
            r.iterations,
            r.wall_time
        );
    }
    write_file(&out.join("box_study.log"), &log)?;
    print!("{errors}");
    println!("wrote {}", out.display());
    Ok(())
}

pub fn verify() -> Result<()> {
    let checks = run_verification()?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        println!("{}", c.summary());
    }
    if failed > 0 {
        return Err(CliError::new("verification-failed", format!("{failed} of {} checks failed", checks.len())));
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}
