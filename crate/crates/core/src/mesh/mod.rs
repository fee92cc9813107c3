//! Simplicial meshes: triangles in the (r, z) half-plane or tetrahedra in 3D.

mod generate;
pub mod io;
mod perturb;
mod quality;
mod topology;

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Point};

pub use generate::{generate_structured_mesh, Extents};
pub use perturb::perturb_interior_nodes;
pub use quality::{quality, QualityReport, RATIO_BIN_EDGES};
pub use topology::{extract_edges, EdgeTopology};

/// Coordinate system and element family of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Axisymmetric problem on triangles in the (r, z) plane, measure 2πr dr dz.
    Cylindrical2D,
    /// Plane problem on triangles, measure dx dy.
    Planar2D,
    /// Tetrahedra in (x, y, z).
    Cartesian3D,
}

impl Mode {
    pub fn dimension(self) -> usize {
        match self {
            Mode::Cylindrical2D | Mode::Planar2D => 2,
            Mode::Cartesian3D => 3,
        }
    }

    pub fn nodes_per_element(self) -> usize {
        self.dimension() + 1
    }

    pub fn nodes_per_facet(self) -> usize {
        self.dimension()
    }

    pub fn edges_per_element(self) -> usize {
        match self.dimension() {
            2 => 3,
            _ => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Cylindrical2D => "cylindrical2d",
            Mode::Planar2D => "planar2d",
            Mode::Cartesian3D => "cartesian3d",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cylindrical2d" | "cylindrical" | "2d" | "axisymmetric" => Ok(Mode::Cylindrical2D),
            "planar2d" | "planar" => Ok(Mode::Planar2D),
            "cartesian3d" | "cartesian" | "3d" => Ok(Mode::Cartesian3D),
            other => Err(Error::InvalidArgument(format!("unknown mesh mode `{other}`"))),
        }
    }
}

/// A boundary facet (segment in 2D, triangle in 3D) with its boundary tag.
///
/// Tag 0 is reserved for boundary facets that were not tagged explicitly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryFacet {
    pub nodes: Vec<usize>,
    pub tag: i32,
}

pub const UNTAGGED: i32 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    mode: Mode,
    nodes: Vec<Point>,
    cells: Vec<usize>,
    boundary_facets: Vec<BoundaryFacet>,
    on_boundary: Vec<bool>,
}

impl Mesh {
    /// Builds a mesh, reorienting elements to positive measure and completing
    /// the boundary facet list: every facet owned by exactly one element that
    /// is not listed in `boundary_facets` is appended with tag [`UNTAGGED`].
    ///
    /// In 2D modes the third coordinate of every node must be zero.
    pub fn new(
        mode: Mode,
        nodes: Vec<Point>,
        elements: Vec<Vec<usize>>,
        boundary_facets: Vec<BoundaryFacet>,
    ) -> Result<Mesh> {
        let npe = mode.nodes_per_element();
        let mut cells = Vec::with_capacity(elements.len() * npe);
        for (e, element) in elements.iter().enumerate() {
            if element.len() != npe {
                return Err(Error::InvalidMesh(format!(
                    "element {e} has {} nodes, expected {npe}",
                    element.len()
                )));
            }
            cells.extend_from_slice(element);
        }
        Self::from_flat(mode, nodes, cells, boundary_facets)
    }

    pub(crate) fn from_flat(
        mode: Mode,
        nodes: Vec<Point>,
        mut cells: Vec<usize>,
        boundary_facets: Vec<BoundaryFacet>,
    ) -> Result<Mesh> {
        let npe = mode.nodes_per_element();
        if !cells.len().is_multiple_of(npe) {
            return Err(Error::InvalidMesh("connectivity length is not a multiple of the element arity".into()));
        }
        check_nodes(mode, &nodes)?;
        check_connectivity(&nodes, &cells, npe)?;

        for (e, element) in cells.chunks_mut(npe).enumerate() {
            let measure = signed_measure(mode, &nodes, element);
            if measure < 0.0 {
                element.swap(0, 1);
            }
            check_nondegenerate(e, measure.abs(), &nodes, element)?;
        }

        let owners = facet_owners(mode, &cells);
        let mut seen = BTreeMap::new();
        for (i, facet) in boundary_facets.iter().enumerate() {
            let key = facet_key(&facet.nodes, mode)?;
            match owners.get(&key) {
                Some(&(1, _)) => {}
                Some(_) => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary facet {i} {:?} is shared by two elements",
                        facet.nodes
                    )))
                }
                None => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary facet {i} {:?} is not a facet of any element",
                        facet.nodes
                    )))
                }
            }
            if seen.insert(key, i).is_some() {
                return Err(Error::InvalidMesh(format!("boundary facet {:?} listed twice", facet.nodes)));
            }
        }

        let mut facets = boundary_facets;
        for (key, &(count, _)) in &owners {
            if count == 1 && !seen.contains_key(key) {
                facets.push(BoundaryFacet {
                    nodes: key.clone(),
                    tag: UNTAGGED,
                });
            }
        }

        let mut on_boundary = vec![false; nodes.len()];
        for f in &facets {
            for &n in &f.nodes {
                on_boundary[n] = true;
            }
        }

        let mesh = Mesh {
            mode,
            nodes,
            cells,
            boundary_facets: facets,
            on_boundary,
        };
        Ok(mesh)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Point {
        &self.nodes[i]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.cells.len() / self.mode.nodes_per_element()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let npe = self.mode.nodes_per_element();
        &self.cells[e * npe..(e + 1) * npe]
    }

    pub fn elements(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.cells.chunks(self.mode.nodes_per_element())
    }

    pub fn element_points(&self, e: usize) -> Vec<Point> {
        self.element(e).iter().map(|&n| self.nodes[n]).collect()
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.boundary_facets
    }

    /// Distinct boundary tags present, in ascending order.
    pub fn boundary_tags(&self) -> Vec<i32> {
        let mut tags: Vec<i32> = self.boundary_facets.iter().map(|f| f.tag).collect();
        tags.sort_unstable();
        tags.dedup();
        tags
    }

    pub fn is_boundary_node(&self, i: usize) -> bool {
        self.on_boundary[i]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.on_boundary
    }

    /// Signed area (2D, in-plane) or volume of element `e`.
    pub fn element_measure(&self, e: usize) -> f64 {
        signed_measure(self.mode, &self.nodes, self.element(e))
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.element_count()).map(|e| self.element_measure(e)).sum()
    }

    /// Re-checks every structural invariant without modifying the mesh.
    pub fn validate(&self) -> Result<()> {
        check_nodes(self.mode, &self.nodes)?;
        let npe = self.mode.nodes_per_element();
        check_connectivity(&self.nodes, &self.cells, npe)?;
        for (e, element) in self.elements().enumerate() {
            let measure = signed_measure(self.mode, &self.nodes, element);
            if measure <= 0.0 {
                return Err(Error::InvalidMesh(format!("element {e} is not positively oriented")));
            }
            check_nondegenerate(e, measure, &self.nodes, element)?;
        }
        let owners = facet_owners(self.mode, &self.cells);
        let mut listed = 0;
        for f in &self.boundary_facets {
            let key = facet_key(&f.nodes, self.mode)?;
            if !matches!(owners.get(&key), Some(&(1, _))) {
                return Err(Error::InvalidMesh(format!("facet {:?} is not a boundary facet", f.nodes)));
            }
            listed += 1;
        }
        let boundary = owners.values().filter(|(c, _)| *c == 1).count();
        if listed != boundary {
            return Err(Error::InvalidMesh(format!(
                "{listed} boundary facets listed, mesh has {boundary}"
            )));
        }
        Ok(())
    }

    /// Hash of mode, coordinates (bitwise) and connectivity; used to detect
    /// derived data built from another mesh.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.mode.hash(&mut h);
        for p in &self.nodes {
            for c in p {
                c.to_bits().hash(&mut h);
            }
        }
        self.cells.hash(&mut h);
        h.finish()
    }

    /// Copy of this mesh with new node coordinates; connectivity and tags are kept.
    pub(crate) fn with_nodes(&self, nodes: Vec<Point>) -> Result<Mesh> {
        let mesh = Mesh {
            nodes,
            ..self.clone()
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Element index owning each boundary facet, parallel to [`Mesh::boundary_facets`].
    pub fn boundary_facet_owners(&self) -> Vec<usize> {
        let owners = facet_owners(self.mode, &self.cells);
        self.boundary_facets
            .iter()
            .map(|f| {
                let key = facet_key(&f.nodes, self.mode).expect("validated facet");
                owners[&key].1
            })
            .collect()
    }
}

pub(crate) fn signed_measure(mode: Mode, nodes: &[Point], element: &[usize]) -> f64 {
    match mode.dimension() {
        2 => geom::signed_area(&nodes[element[0]], &nodes[element[1]], &nodes[element[2]]),
        _ => geom::signed_volume(
            &nodes[element[0]],
            &nodes[element[1]],
            &nodes[element[2]],
            &nodes[element[3]],
        ),
    }
}

fn check_nodes(mode: Mode, nodes: &[Point]) -> Result<()> {
    for (i, p) in nodes.iter().enumerate() {
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMesh(format!("node {i} has a non-finite coordinate")));
        }
        if mode.dimension() == 2 && p[2] != 0.0 {
            return Err(Error::InvalidMesh(format!("node {i} of a 2D mesh has a non-zero third coordinate")));
        }
        if mode == Mode::Cylindrical2D && p[0] < 0.0 {
            return Err(Error::InvalidMesh(format!("node {i} has negative radius {}", p[0])));
        }
    }
    Ok(())
}

fn check_connectivity(nodes: &[Point], cells: &[usize], npe: usize) -> Result<()> {
    for (e, element) in cells.chunks(npe).enumerate() {
        for (a, &n) in element.iter().enumerate() {
            if n >= nodes.len() {
                return Err(Error::InvalidMesh(format!("element {e} references missing node {n}")));
            }
            if element[..a].contains(&n) {
                return Err(Error::InvalidMesh(format!("element {e} repeats node {n}")));
            }
        }
    }
    Ok(())
}

fn check_nondegenerate(e: usize, measure: f64, nodes: &[Point], element: &[usize]) -> Result<()> {
    let mut longest: f64 = 0.0;
    for (a, &i) in element.iter().enumerate() {
        for &j in &element[a + 1..] {
            longest = longest.max(geom::distance(&nodes[i], &nodes[j]));
        }
    }
    let dim = (element.len() - 1) as i32;
    if measure <= 1e-14 * longest.powi(dim) {
        return Err(Error::DegenerateElement { element: e, measure });
    }
    Ok(())
}

fn facet_key(nodes: &[usize], mode: Mode) -> Result<Vec<usize>> {
    if nodes.len() != mode.nodes_per_facet() {
        return Err(Error::InvalidMesh(format!(
            "boundary facet {nodes:?} has {} nodes, expected {}",
            nodes.len(),
            mode.nodes_per_facet()
        )));
    }
    let mut key = nodes.to_vec();
    key.sort_unstable();
    Ok(key)
}

/// Sorted facet key -> (number of owning elements, first owner).
fn facet_owners(mode: Mode, cells: &[usize]) -> BTreeMap<Vec<usize>, (usize, usize)> {
    let npe = mode.nodes_per_element();
    let mut owners: BTreeMap<Vec<usize>, (usize, usize)> = BTreeMap::new();
    for (e, element) in cells.chunks(npe).enumerate() {
        for skip in 0..npe {
            let mut key: Vec<usize> = element
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &n)| n)
                .collect();
            key.sort_unstable();
            owners.entry(key).and_modify(|o| o.0 += 1).or_insert((1, e));
        }
    }
    owners
}
