//! Edge-based smoothing domains and smoothed shape-function gradients.
//!
//! Every mesh edge `k` owns a smoothing domain assembled from one piece of
//! each element incident to it. In 2D the piece is the triangle spanned by the
//! edge and the element centroid (one third of the element). In 3D it is the
//! union of the two sub-tetrahedra spanned by the edge, the element centroid
//! and the centroid of one of the two element faces containing the edge (one
//! sixth of the element). The domains tile the mesh without overlap.
//!
//! The smoothed gradient of shape function `N_j` over domain `k` is the
//! average of the element-constant gradient over the domain:
//!
//! ```text
//! B̄_j = (1/S_k) Σ_e s_e ∇N_j|_e,   s_e = S_e/3 (2D) or S_e/6 (3D)
//! ```
//!
//! [`oracle`] recomputes the same quantity as a boundary integral
//! `(1/S_k) ∮ N_j n dΓ` over the explicit domain boundary.

pub mod oracle;

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{EdgeTopology, Mesh, Mode};
use crate::shapefn::{all_element_gradients, GradientCoefficients};

/// One element's share of a smoothing domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contribution {
    pub element: usize,
    /// Measure of the element piece: `S_e/3` (2D) or `S_e/6` (3D).
    pub measure: f64,
    /// Piece measure times `α_e` and, in cylindrical mode, `2π r̄_e`.
    /// These weights define the stiffness of the domain.
    pub stiffness_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothingDomain {
    pub edge: usize,
    pub endpoints: [usize; 2],
    /// `S_k`, the sum of the contribution measures.
    pub measure: f64,
    pub contributions: Vec<Contribution>,
    /// Union of the vertices of the incident elements, ascending.
    pub support_nodes: Vec<usize>,
    /// Measure-weighted mean of the element centroid radii (cylindrical mode; 0 otherwise).
    pub weighted_radius: f64,
    /// Measure-weighted mean of the element material coefficient.
    pub weighted_material: f64,
}

impl SmoothingDomain {
    /// `Σ stiffness_weight`; equals `2π r̄_k ᾱ_k S_k` (cylindrical) or
    /// `ᾱ_k S_k` (otherwise) whenever α is uniform over the domain.
    pub fn stiffness_weight(&self) -> f64 {
        self.contributions.iter().map(|c| c.stiffness_weight).sum()
    }
}

/// How element gradients are averaged over a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// Plain average over the domain measure.
    Measure,
    /// Average weighted by [`Contribution::stiffness_weight`].
    Stiffness,
}

/// Smoothed gradients `B̄_j` of the shape functions of the support nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothedGradientMatrix {
    pub edge: usize,
    pub nodes: Vec<usize>,
    pub gradients: Vec<[f64; 3]>,
}

impl SmoothedGradientMatrix {
    /// `Σ_j V(x_j) B̄_j` for nodal values indexed by global node.
    pub fn apply(&self, values: &[f64]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (&n, b) in self.nodes.iter().zip(&self.gradients) {
            for d in 0..3 {
                g[d] += values[n] * b[d];
            }
        }
        g
    }

    pub fn max_abs(&self) -> f64 {
        self.gradients.iter().flatten().fold(0.0, |m: f64, x| m.max(x.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct SmoothingDomainSet {
    mode: Mode,
    domains: Vec<SmoothingDomain>,
    element_gradients: Vec<GradientCoefficients>,
    mesh_fingerprint: u64,
}

impl SmoothingDomainSet {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn domains(&self) -> &[SmoothingDomain] {
        &self.domains
    }

    pub fn domain(&self, k: usize) -> &SmoothingDomain {
        &self.domains[k]
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    pub fn element_gradients(&self) -> &[GradientCoefficients] {
        &self.element_gradients
    }

    pub fn total_measure(&self) -> f64 {
        self.domains.iter().map(|d| d.measure).sum()
    }

    /// True when the set was built from a mesh with this exact geometry.
    pub fn matches(&self, mesh: &Mesh) -> bool {
        self.mesh_fingerprint == mesh.fingerprint()
    }

    pub fn smoothed_gradient(&self, mesh: &Mesh, k: usize, weighting: Weighting) -> Result<SmoothedGradientMatrix> {
        smoothed_gradient_matrix(mesh, &self.domains[k], &self.element_gradients, weighting)
    }

    /// JSON dump of the domains for inspection.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            mode: Mode,
            domains: &'a [SmoothingDomain],
        }
        serde_json::to_string(&Dump {
            mode: self.mode,
            domains: &self.domains,
        })
        .expect("domains serialize")
    }
}

/// Builds one smoothing domain per edge. `alpha` gives the per-element
/// material coefficient (1 everywhere when `None`).
pub fn build_smoothing_domains(
    mesh: &Mesh,
    edges: &EdgeTopology,
    alpha: Option<&[f64]>,
) -> Result<SmoothingDomainSet> {
    let mode = mesh.mode();
    let ne = mesh.element_count();
    if let Some(a) = alpha {
        if a.len() != ne {
            return Err(Error::InvalidArgument(format!(
                "{} material values for {ne} elements",
                a.len()
            )));
        }
    }
    check_topology(mesh, edges)?;
    let element_gradients = all_element_gradients(mesh)?;
    let share = match mode.dimension() {
        2 => 1.0 / 3.0,
        _ => 1.0 / 6.0,
    };

    let mut domains = Vec::with_capacity(edges.edge_count());
    for k in 0..edges.edge_count() {
        let mut contributions = Vec::with_capacity(edges.incident_elements(k).len());
        let mut support_nodes = Vec::new();
        let mut measure = 0.0;
        let mut radius_moment = 0.0;
        let mut material_moment = 0.0;
        for &e in edges.incident_elements(k) {
            let g = &element_gradients[e];
            let piece = g.measure() * share;
            let a = alpha.map_or(1.0, |a| a[e]);
            let radial = match mode {
                Mode::Cylindrical2D => 2.0 * PI * g.centroid_radius(),
                _ => 1.0,
            };
            contributions.push(Contribution {
                element: e,
                measure: piece,
                stiffness_weight: a * radial * piece,
            });
            measure += piece;
            radius_moment += g.centroid_radius() * piece;
            material_moment += a * piece;
            support_nodes.extend_from_slice(mesh.element(e));
        }
        support_nodes.sort_unstable();
        support_nodes.dedup();
        domains.push(SmoothingDomain {
            edge: k,
            endpoints: edges.edge(k),
            measure,
            contributions,
            support_nodes,
            weighted_radius: if mode == Mode::Cylindrical2D { radius_moment / measure } else { 0.0 },
            weighted_material: material_moment / measure,
        });
    }

    Ok(SmoothingDomainSet {
        mode,
        domains,
        element_gradients,
        mesh_fingerprint: mesh.fingerprint(),
    })
}

fn check_topology(mesh: &Mesh, edges: &EdgeTopology) -> Result<()> {
    let mut incidences = 0;
    for k in 0..edges.edge_count() {
        let [a, b] = edges.edge(k);
        for &e in edges.incident_elements(k) {
            if e >= mesh.element_count() {
                return Err(Error::InvalidArgument(format!("edge {k} lists missing element {e}")));
            }
            let el = mesh.element(e);
            if !el.contains(&a) || !el.contains(&b) {
                return Err(Error::InvalidArgument(format!("edge {k} is not an edge of element {e}")));
            }
            incidences += 1;
        }
    }
    if incidences != mesh.element_count() * mesh.mode().edges_per_element() {
        return Err(Error::InvalidArgument("edge topology does not belong to this mesh".into()));
    }
    Ok(())
}

/// Averages the element gradients of the domain's contributors. Nodes of an
/// incident element that are not vertices of another incident element get no
/// contribution from the latter.
pub fn smoothed_gradient_matrix(
    mesh: &Mesh,
    domain: &SmoothingDomain,
    element_gradients: &[GradientCoefficients],
    weighting: Weighting,
) -> Result<SmoothedGradientMatrix> {
    let nodes = domain.support_nodes.clone();
    let mut gradients = vec![[0.0; 3]; nodes.len()];
    let mut total = 0.0;
    for c in &domain.contributions {
        let g = element_gradients.get(c.element).ok_or_else(|| {
            Error::InvalidArgument(format!("no gradient data for element {}", c.element))
        })?;
        let w = match weighting {
            Weighting::Measure => c.measure,
            Weighting::Stiffness => c.stiffness_weight,
        };
        total += w;
        for (local, &n) in mesh.element(c.element).iter().enumerate() {
            let pos = nodes.binary_search(&n).map_err(|_| {
                Error::InvalidArgument(format!("node {n} missing from support of edge {}", domain.edge))
            })?;
            let grad = g.gradient(local);
            for d in 0..3 {
                gradients[pos][d] += w * grad[d];
            }
        }
    }
    for g in &mut gradients {
        for x in g.iter_mut() {
            *x /= total;
        }
    }
    Ok(SmoothedGradientMatrix {
        edge: domain.edge,
        nodes,
        gradients,
    })
}
