//! Self-checks shared by the `verify` command and the test suites.
//!
//! Every check reports the measured quantity next to its threshold so a
//! failure says by how much it missed.

use std::f64::consts::PI;

use crate::analysis::{patch_test, run_box_study, BoxStudyConfig};
use crate::assembly::{assemble, Method};
use crate::bvp::{Affine, BvpSpec};
use crate::error::Result;
use crate::mesh::{extract_edges, generate_structured_mesh, perturb_interior_nodes, quality, Extents, Mesh, Mode};
use crate::smoothing::oracle::smoothed_gradient_boundary_oracle;
use crate::smoothing::{build_smoothing_domains, Weighting};
use crate::solver::{solve, SolveMethod, SolveOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `measured <= threshold`.
    pub fn at_most(name: &str, measured: f64, threshold: f64, detail: String) -> Check {
        Check {
            name: name.to_string(),
            passed: measured <= threshold,
            measured,
            threshold,
            detail,
        }
    }

    pub fn summary(&self) -> String {
        format!(
            "{} {}: {:.3e} (limit {:.1e}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold,
            self.detail
        )
    }
}

fn cube(n: &[usize]) -> Result<Mesh> {
    generate_structured_mesh(Mode::Cartesian3D, n, &Extents::unit())
}

/// Regular and perturbed meshes in all three modes, 21 in total.
pub fn corpus() -> Result<Vec<(String, Mesh)>> {
    let slab = Extents::new([0.0, 0.0, 0.0], [2.0, 1.0, 0.5]);
    let unit2 = Extents::new([0.0, 0.0, 0.0], [1.0, 1.0, 0.0]);
    let annulus = Extents::new([0.5, -1.0, 0.0], [2.0, 1.0, 0.0]);
    let mut out = Vec::new();
    for n in 1..=4 {
        out.push((format!("cube-n{n}"), cube(&[n])?));
    }
    for &(n, m, seed) in &[(3, 0.2, 1), (4, 0.2, 7), (4, 0.4, 11), (5, 0.3, 2), (6, 0.25, 5)] {
        out.push((format!("cube-n{n}-m{m}-s{seed}"), perturb_interior_nodes(&cube(&[n])?, m, seed)?));
    }
    let s = generate_structured_mesh(Mode::Cartesian3D, &[4, 3, 2], &slab)?;
    out.push(("slab-4x3x2-m0.3-s9".into(), perturb_interior_nodes(&s, 0.3, 9)?));
    out.push(("slab-4x3x2".into(), s));

    for n in [2, 4, 8] {
        out.push((format!("cyl-n{n}"), generate_structured_mesh(Mode::Cylindrical2D, &[n], &unit2)?));
    }
    for &(n, m, seed) in &[(4, 0.2, 1), (8, 0.35, 4), (16, 0.2, 3)] {
        let base = generate_structured_mesh(Mode::Cylindrical2D, &[n], &unit2)?;
        out.push((format!("cyl-n{n}-m{m}-s{seed}"), perturb_interior_nodes(&base, m, seed)?));
    }
    let a = generate_structured_mesh(Mode::Cylindrical2D, &[6, 8], &annulus)?;
    out.push(("annulus-6x8-m0.3-s6".into(), perturb_interior_nodes(&a, 0.3, 6)?));
    out.push(("annulus-6x8".into(), a));

    out.push(("planar-n3".into(), generate_structured_mesh(Mode::Planar2D, &[3], &unit2)?));
    let p = generate_structured_mesh(Mode::Planar2D, &[6], &unit2)?;
    out.push(("planar-n6-m0.3-s8".into(), perturb_interior_nodes(&p, 0.3, 8)?));
    Ok(out)
}

fn relative_gap(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let scale = a.iter().flatten().fold(0.0, |m: f64, x| m.max(x.abs()));
    let diff = a
        .iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()));
    diff / scale
}

/// Smoothed gradients from the element average against the boundary integral,
/// both plain and (in cylindrical mode) radius weighted.
pub fn oracle_equivalence(meshes: &[(String, Mesh)]) -> Result<Check> {
    let mut worst = (0.0, String::new());
    let mut domains_checked = 0;
    for (name, mesh) in meshes {
        let set = build_smoothing_domains(mesh, &extract_edges(mesh), None)?;
        let radius: Vec<f64> = set.element_gradients().iter().map(|g| 2.0 * PI * g.centroid_radius()).collect();
        for k in 0..set.len() {
            let domain = set.domain(k);
            let direct = set.smoothed_gradient(mesh, k, Weighting::Measure)?;
            let oracle = smoothed_gradient_boundary_oracle(mesh, domain, None)?;
            let mut gap = relative_gap(&direct.gradients, &oracle.gradients);
            if mesh.mode() == Mode::Cylindrical2D {
                let direct = set.smoothed_gradient(mesh, k, Weighting::Stiffness)?;
                let oracle = smoothed_gradient_boundary_oracle(mesh, domain, Some(&radius))?;
                gap = gap.max(relative_gap(&direct.gradients, &oracle.gradients));
            }
            if gap > worst.0 {
                worst = (gap, format!("{name} edge {k}"));
            }
            domains_checked += 1;
        }
    }
    Ok(Check::at_most(
        "oracle-equivalence",
        worst.0,
        1e-12,
        format!("{} meshes, {domains_checked} domains, worst at {}", meshes.len(), worst.1),
    ))
}

/// Domain measures sum to the mesh measure, and each element is shared by
/// as many domains as it has edges.
pub fn partition_of_unity(meshes: &[(String, Mesh)]) -> Result<Vec<Check>> {
    let mut worst = (0.0, String::new());
    let mut incidence_errors = 0;
    for (name, mesh) in meshes {
        let set = build_smoothing_domains(mesh, &extract_edges(mesh), None)?;
        let total = mesh.total_measure();
        let gap = (set.total_measure() - total).abs() / total;
        if gap > worst.0 {
            worst = (gap, name.clone());
        }
        let shares: usize = set.domains().iter().map(|d| d.contributions.len()).sum();
        if shares != mesh.mode().edges_per_element() * mesh.element_count() {
            incidence_errors += 1;
        }
    }
    Ok(vec![
        Check::at_most(
            "partition-of-unity",
            worst.0,
            1e-12,
            format!("{} meshes, worst {}", meshes.len(), worst.1),
        ),
        Check::at_most(
            "edge-incidence",
            incidence_errors as f64,
            0.0,
            "meshes where Σ|domain elements| differs from edges per element × elements".into(),
        ),
    ])
}

/// Affine fields on perturbed meshes, relative to the largest nodal value.
pub fn patch_tests() -> Result<Check> {
    let unit2 = Extents::new([0.0, 0.0, 0.0], [1.0, 1.0, 0.0]);
    let offset = Extents::new([0.5, -1.0, 0.0], [2.0, 1.0, 0.0]);
    let cases = [
        (
            "cube-n5",
            perturb_interior_nodes(&cube(&[5])?, 0.3, 21)?,
            Affine { constant: 0.7, gradient: [1.0, -2.0, 3.0] },
        ),
        (
            "cube-4x3x6",
            perturb_interior_nodes(&cube(&[4, 3, 6])?, 0.4, 22)?,
            Affine { constant: -1.0, gradient: [0.25, 0.5, -0.75] },
        ),
        (
            "cyl-n8",
            perturb_interior_nodes(&generate_structured_mesh(Mode::Cylindrical2D, &[8], &unit2)?, 0.3, 23)?,
            Affine { constant: 2.0, gradient: [0.0, -3.0, 0.0] },
        ),
        (
            "cyl-offset-6x10",
            perturb_interior_nodes(&generate_structured_mesh(Mode::Cylindrical2D, &[6, 10], &offset)?, 0.35, 24)?,
            Affine { constant: 0.0, gradient: [0.0, 1.5, 0.0] },
        ),
        (
            "planar-n8",
            perturb_interior_nodes(&generate_structured_mesh(Mode::Planar2D, &[8], &unit2)?, 0.3, 25)?,
            Affine { constant: 1.0, gradient: [2.0, -1.0, 0.0] },
        ),
    ];
    let mut worst = (0.0, String::new());
    for (name, mesh, field) in &cases {
        let scale = mesh.nodes().iter().map(|x| field.eval(x).abs()).fold(0.0, f64::max);
        for method in [Method::Fem, Method::EsFem] {
            let err = patch_test(mesh, method, *field)? / scale;
            if err > worst.0 {
                worst = (err, format!("{name} {}", method.name()));
            }
        }
    }
    Ok(Check::at_most(
        "patch-test",
        worst.0,
        1e-10,
        format!("{} perturbed meshes x 2 methods, worst {}", cases.len(), worst.1),
    ))
}

/// Pre-constraint stiffness rows sum to zero, the matrix is symmetric and
/// has no negative eigenvalue.
pub fn stiffness_properties(meshes: &[(String, Mesh)]) -> Result<Vec<Check>> {
    let mut null = (0.0, String::new());
    let mut asym = (0.0, String::new());
    let mut negative = (0.0, String::new());
    for (name, mesh) in meshes {
        let bvp = BvpSpec::laplace(mesh.mode()).validate(mesh)?;
        for method in [Method::Fem, Method::EsFem] {
            let k = assemble(mesh, &bvp, method)?.matrix;
            let kmax = k.max_abs();
            let ones = vec![1.0; k.dim()];
            let row_sum = k.mul_vec(&ones).iter().fold(0.0, |m: f64, x| m.max(x.abs())) / kmax;
            let skew = k.triplets().fold(0.0, |m: f64, (i, j, v)| m.max((v - k.get(j, i)).abs())) / kmax;
            let tag = format!("{name} {}", method.name());
            if row_sum > null.0 {
                null = (row_sum, tag.clone());
            }
            if skew > asym.0 {
                asym = (skew, tag.clone());
            }
            if k.dim() <= 400 {
                let eig = k.to_dense().symmetric_eigenvalues();
                let low = -eig.min() / kmax;
                if low > negative.0 {
                    negative = (low, tag);
                }
            }
        }
    }
    Ok(vec![
        Check::at_most("nullspace", null.0, 1e-12, format!("max |K·1| / max |K|, worst {}", null.1)),
        Check::at_most("symmetry", asym.0, 1e-14, format!("worst {}", asym.1)),
        Check::at_most(
            "positive-semidefinite",
            negative.0,
            1e-12,
            format!("-λ_min / max |K| on meshes up to 400 nodes, worst {}", negative.1),
        ),
    ])
}

/// Perturbing a structured mesh raises the share of elements with ratio > 2.
pub fn quality_ordering() -> Result<Check> {
    let mut deficit: f64 = f64::NEG_INFINITY;
    let mut detail = String::new();
    for n in [4, 8, 16] {
        let regular = cube(&[n])?;
        let perturbed = perturb_interior_nodes(&regular, 0.2, 7)?;
        let (r, p) = (quality(&regular).fraction_above(2.0), quality(&perturbed).fraction_above(2.0));
        deficit = deficit.max(r - p);
        detail.push_str(&format!("n{n}: {r:.3} -> {p:.3}; "));
    }
    Ok(Check {
        name: "quality-ordering".into(),
        passed: deficit < 0.0,
        measured: deficit,
        threshold: 0.0,
        detail: format!("regular minus perturbed fraction of ratio > 2 must be negative; {}", detail.trim_end()),
    })
}

/// Conjugate gradient against dense Cholesky on the benchmark systems.
pub fn solver_cross_check() -> Result<Check> {
    let mut worst = (0.0, String::new());
    for (name, mesh) in [
        ("cube-n8", cube(&[8])?),
        ("cube-n6-m0.2-s7", perturb_interior_nodes(&cube(&[6])?, 0.2, 7)?),
    ] {
        let bvp = crate::bvp::box_benchmark().validate(&mesh)?;
        for method in [Method::Fem, Method::EsFem] {
            let system = crate::assembly::build_system(&mesh, &bvp, method)?;
            let cg = solve(&system, &SolveOptions::default())?;
            let dense = solve(
                &system,
                &SolveOptions {
                    method: SolveMethod::DenseCholesky,
                    ..SolveOptions::default()
                },
            )?;
            let diff: f64 = cg.solution.iter().zip(&dense.solution).map(|(a, b)| (a - b).powi(2)).sum();
            let norm: f64 = dense.solution.iter().map(|x| x * x).sum();
            let gap = (diff / norm).sqrt();
            if gap > worst.0 {
                worst = (gap, format!("{name} {}", method.name()));
            }
        }
    }
    Ok(Check::at_most("solver-cross-check", worst.0, 1e-8, format!("worst {}", worst.1)))
}

/// Two identical small studies must give identical tables.
pub fn determinism() -> Result<Check> {
    let config = BoxStudyConfig {
        divisions: vec![3, 4],
        ..BoxStudyConfig::default()
    };
    let a = run_box_study(&config)?;
    let b = run_box_study(&config)?;
    let same = a.errors_csv(false) == b.errors_csv(false)
        && a.histogram_csv() == b.histogram_csv()
        && a.mesh_summary_csv() == b.mesh_summary_csv();
    Ok(Check::at_most(
        "determinism",
        if same { 0.0 } else { 1.0 },
        0.0,
        "repeated box study tables compared byte for byte".into(),
    ))
}

/// The full suite run by `esfem verify`.
pub fn run_verification() -> Result<Vec<Check>> {
    let meshes = corpus()?;
    let mut checks = vec![oracle_equivalence(&meshes)?];
    checks.extend(partition_of_unity(&meshes)?);
    checks.push(patch_tests()?);
    checks.extend(stiffness_properties(&meshes)?);
    checks.push(quality_ordering()?);
    checks.push(solver_cross_check()?);
    checks.push(determinism()?);
    Ok(checks)
}
