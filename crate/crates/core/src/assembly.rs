//! Global system `K φ = b` for the classical and the edge-smoothed method.
//!
//! Both methods share the reaction (consistent mass) term, the load vector and
//! boundary-condition handling; they differ only in the stiffness. In
//! cylindrical mode every volume integral carries the weight `2π r̄_e`, the
//! circumference at the element centroid.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::bvp::{BoundaryKind, CheckedBvp};
use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::mesh::{extract_edges, Mesh, Mode};
use crate::shapefn::{all_element_gradients, GradientCoefficients};
use crate::smoothing::{build_smoothing_domains, SmoothingDomainSet, Weighting};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Fem,
    EsFem,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fem => "FEM",
            Method::EsFem => "ESFEM",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fem" => Ok(Method::Fem),
            "esfem" | "es-fem" => Ok(Method::EsFem),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}` (expected fem or esfem)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Constrained node -> prescribed value; empty until boundary conditions are applied.
    pub dirichlet: BTreeMap<usize, f64>,
}

impl SparseSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Coordinate text dump: one `row col value` line per stored entry.
    pub fn matrix_triplets_text(&self) -> String {
        let mut s = String::new();
        for (i, j, v) in self.matrix.triplets() {
            let _ = writeln!(s, "{i} {j} {v:?}");
        }
        s
    }

    pub fn rhs_text(&self) -> String {
        let mut s = String::new();
        for v in &self.rhs {
            let _ = writeln!(s, "{v:?}");
        }
        s
    }

    pub fn dump(&self, matrix_path: &Path, rhs_path: &Path) -> Result<()> {
        std::fs::write(matrix_path, self.matrix_triplets_text())
            .map_err(|e| Error::io(format!("writing {}", matrix_path.display()), e))?;
        std::fs::write(rhs_path, self.rhs_text()).map_err(|e| Error::io(format!("writing {}", rhs_path.display()), e))
    }
}

fn radial_weight(mode: Mode, g: &GradientCoefficients) -> f64 {
    match mode {
        Mode::Cylindrical2D => 2.0 * PI * g.centroid_radius(),
        _ => 1.0,
    }
}

fn check_bvp(mesh: &Mesh, bvp: &CheckedBvp) -> Result<()> {
    if bvp.mesh_fingerprint != mesh.fingerprint() {
        return Err(Error::InvalidSpec("boundary-value problem was validated against a different mesh".into()));
    }
    Ok(())
}

/// Consistent reaction mass and one-point load, identical for both methods.
fn add_reaction_and_load(
    mesh: &Mesh,
    geometry: &[GradientCoefficients],
    bvp: &CheckedBvp,
    matrix: &mut CsrMatrix,
    rhs: &mut [f64],
) {
    let npe = mesh.mode().nodes_per_element();
    // ∫ N_i N_j = measure (1 + δ_ij) / ((d+1)(d+2))
    let mass_denominator = (npe * (npe + 1)) as f64;
    for (e, g) in geometry.iter().enumerate() {
        let el = mesh.element(e);
        let w = radial_weight(mesh.mode(), g) * g.measure();
        let beta = bvp.beta[e];
        if beta != 0.0 {
            for (a, &i) in el.iter().enumerate() {
                for (b, &j) in el.iter().enumerate() {
                    let factor = if a == b { 2.0 } else { 1.0 };
                    matrix.add(i, j, beta * w * factor / mass_denominator);
                }
            }
        }
        let f = bvp.source[e];
        if f != 0.0 {
            for &i in el {
                rhs[i] += f * w / npe as f64;
            }
        }
    }
}

/// Element-by-element stiffness `K^e_ij = ρ_e α_e S_e ∇N_i·∇N_j`, where
/// `ρ_e = 2π r̄_e` in cylindrical mode and 1 otherwise. Boundary conditions
/// are not applied.
pub fn assemble_fem(mesh: &Mesh, bvp: &CheckedBvp) -> Result<SparseSystem> {
    check_bvp(mesh, bvp)?;
    let geometry = all_element_gradients(mesh)?;
    let mut matrix = CsrMatrix::from_cliques(mesh.node_count(), mesh.elements());
    let mut rhs = vec![0.0; mesh.node_count()];
    for (e, g) in geometry.iter().enumerate() {
        let el = mesh.element(e);
        let w = radial_weight(mesh.mode(), g) * bvp.alpha[e] * g.measure();
        for (a, &i) in el.iter().enumerate() {
            for (b, &j) in el.iter().enumerate() {
                matrix.add(i, j, w * geom::dot(g.gradient(a), g.gradient(b)));
            }
        }
    }
    add_reaction_and_load(mesh, &geometry, bvp, &mut matrix, &mut rhs);
    Ok(SparseSystem {
        matrix,
        rhs,
        dirichlet: BTreeMap::new(),
    })
}

/// Domain-by-domain smoothed stiffness `K̄_k = W_k B̃ᵀB̃`, with `W_k` the
/// summed stiffness weights of the domain and `B̃` the stiffness-weighted
/// smoothed gradients. For uniform α this is `ᾱ S_k B̄ᵀB̄` in 3D and
/// `2π r̄_k ᾱ S_k B̃ᵀB̃` in cylindrical mode. Boundary conditions are not applied.
pub fn assemble_esfem(mesh: &Mesh, domains: &SmoothingDomainSet, bvp: &CheckedBvp) -> Result<SparseSystem> {
    check_bvp(mesh, bvp)?;
    if !domains.matches(mesh) {
        return Err(Error::StaleDomains);
    }
    let mut matrix = CsrMatrix::from_cliques(
        mesh.node_count(),
        domains.domains().iter().map(|d| d.support_nodes.as_slice()),
    );
    let mut rhs = vec![0.0; mesh.node_count()];
    for (k, domain) in domains.domains().iter().enumerate() {
        let b = domains.smoothed_gradient(mesh, k, Weighting::Stiffness)?;
        let w = domain.stiffness_weight();
        for (a, &i) in b.nodes.iter().enumerate() {
            for (c, &j) in b.nodes.iter().enumerate() {
                matrix.add(i, j, w * geom::dot(&b.gradients[a], &b.gradients[c]));
            }
        }
    }
    add_reaction_and_load(mesh, domains.element_gradients(), bvp, &mut matrix, &mut rhs);
    Ok(SparseSystem {
        matrix,
        rhs,
        dirichlet: BTreeMap::new(),
    })
}

/// Assembles with `method` (building edges and smoothing domains as needed)
/// but does not apply boundary conditions.
pub fn assemble(mesh: &Mesh, bvp: &CheckedBvp, method: Method) -> Result<SparseSystem> {
    match method {
        Method::Fem => assemble_fem(mesh, bvp),
        Method::EsFem => {
            let edges = extract_edges(mesh);
            let domains = build_smoothing_domains(mesh, &edges, Some(&bvp.alpha))?;
            assemble_esfem(mesh, &domains, bvp)
        }
    }
}

/// Assembly followed by boundary conditions: the system handed to the solver.
pub fn build_system(mesh: &Mesh, bvp: &CheckedBvp, method: Method) -> Result<SparseSystem> {
    apply_boundary_conditions(assemble(mesh, bvp, method)?, mesh, bvp)
}

const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// Quadrature points on a boundary facet as (point, weight, shape values).
fn facet_quadrature(mesh: &Mesh, nodes: &[usize]) -> Vec<(Point, f64, Vec<f64>)> {
    let p: Vec<Point> = nodes.iter().map(|&n| *mesh.node(n)).collect();
    let radial = |x: &Point| match mesh.mode() {
        Mode::Cylindrical2D => 2.0 * PI * x[0],
        _ => 1.0,
    };
    if p.len() == 2 {
        let length = geom::distance(&p[0], &p[1]);
        GAUSS2
            .iter()
            .map(|&t| {
                let x = geom::add(&geom::scale(&p[0], 1.0 - t), &geom::scale(&p[1], t));
                let w = 0.5 * length * radial(&x);
                (x, w, vec![1.0 - t, t])
            })
            .collect()
    } else {
        let area = 0.5 * geom::norm(&geom::cross(&geom::sub(&p[1], &p[0]), &geom::sub(&p[2], &p[0])));
        // edge-midpoint rule, exact to degree 2
        (0..3)
            .map(|i| {
                let j = (i + 1) % 3;
                let x = geom::scale(&geom::add(&p[i], &p[j]), 0.5);
                let mut n = vec![0.0; 3];
                n[i] = 0.5;
                n[j] = 0.5;
                (x, area / 3.0, n)
            })
            .collect()
    }
}

/// Applies the boundary conditions of `bvp`.
///
/// Neumann and Robin facets add `(α_e/a) ∮ q N_i` to `b` and, for Robin,
/// `(α_e γ/a) ∮ N_i N_j` to `K` (α_e of the owning element; 2πr weighting in
/// cylindrical mode). Dirichlet nodes are eliminated symmetrically: known
/// columns move to the right-hand side, and constrained rows and columns are
/// replaced by the identity. A system with no Dirichlet node, no Robin facet
/// and no reaction term has the constants in its nullspace and is rejected.
pub fn apply_boundary_conditions(mut system: SparseSystem, mesh: &Mesh, bvp: &CheckedBvp) -> Result<SparseSystem> {
    check_bvp(mesh, bvp)?;
    let owners = mesh.boundary_facet_owners();
    let mut has_robin = false;
    let mut dirichlet: BTreeMap<usize, f64> = BTreeMap::new();

    for bc in &bvp.conditions {
        let kind = bc.kind().expect("validated");
        for (facet, &owner) in mesh.boundary_facets().iter().zip(&owners) {
            if facet.tag != bc.tag {
                continue;
            }
            match kind {
                BoundaryKind::Dirichlet => {
                    for &n in &facet.nodes {
                        let value = bc.dirichlet_value(mesh.node(n));
                        match dirichlet.get(&n) {
                            None => {
                                dirichlet.insert(n, value);
                            }
                            Some(&first) => {
                                if (first - value).abs() > 1e-10 * first.abs().max(value.abs()).max(1.0) {
                                    return Err(Error::ConflictingDirichlet { node: n, first, second: value });
                                }
                            }
                        }
                    }
                }
                BoundaryKind::Neumann | BoundaryKind::Robin => {
                    let scale = bvp.alpha[owner] / bc.a;
                    for (x, w, shape) in facet_quadrature(mesh, &facet.nodes) {
                        let q = bc.q.at(&x).expect("validated");
                        for (a, &i) in facet.nodes.iter().enumerate() {
                            system.rhs[i] += scale * q * shape[a] * w;
                            if kind == BoundaryKind::Robin {
                                for (b, &j) in facet.nodes.iter().enumerate() {
                                    system.matrix.add(i, j, scale * bc.gamma * shape[a] * shape[b] * w);
                                }
                            }
                        }
                    }
                    has_robin |= kind == BoundaryKind::Robin;
                }
            }
        }
    }

    if dirichlet.is_empty() && !has_robin && !bvp.has_reaction() {
        return Err(Error::Singular(
            "no Dirichlet, Robin or reaction term: constant potentials are in the nullspace".into(),
        ));
    }

    let n = system.dim();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for (&node, &value) in &dirichlet {
        fixed[node] = Some(value);
    }
    for i in 0..n {
        let (cols, vals) = system.matrix.row_mut(i);
        match fixed[i] {
            Some(value) => {
                for (c, v) in cols.iter().zip(vals.iter_mut()) {
                    *v = if *c == i { 1.0 } else { 0.0 };
                }
                system.rhs[i] = value;
            }
            None => {
                for (c, v) in cols.iter().zip(vals.iter_mut()) {
                    if let Some(g) = fixed[*c] {
                        system.rhs[i] -= *v * g;
                        *v = 0.0;
                    }
                }
            }
        }
    }
    system.dirichlet = dirichlet;
    Ok(system)
}
