use super::{BoundaryFacet, Mesh, Mode};
use crate::error::{Error, Result};
use crate::geom::Point;

/// Axis-aligned bounding box. In 2D modes only the first two axes are used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extents {
    pub min: Point,
    pub max: Point,
}

impl Extents {
    pub fn new(min: Point, max: Point) -> Self {
        Extents { min, max }
    }

    pub fn unit() -> Self {
        Extents {
            min: [0.0; 3],
            max: [1.0; 3],
        }
    }
}

/// Structured simplicial mesh of a rectangle (2 right triangles per cell) or
/// box (6 Kuhn tetrahedra per cell, all sharing the cell's main diagonal).
///
/// `divisions` holds one count per axis, or a single count used for every axis.
/// Boundary tags: 2D `1 = r/x min, 2 = r/x max, 3 = z/y min, 4 = z/y max`;
/// 3D `1 = x min, 2 = x max, 3 = y min, 4 = y max, 5 = z min, 6 = z max`.
pub fn generate_structured_mesh(mode: Mode, divisions: &[usize], extents: &Extents) -> Result<Mesh> {
    let dim = mode.dimension();
    let div: Vec<usize> = match divisions.len() {
        1 => vec![divisions[0]; dim],
        n if n == dim => divisions.to_vec(),
        n => {
            return Err(Error::InvalidArgument(format!(
                "expected 1 or {dim} division counts, got {n}"
            )))
        }
    };
    if div.contains(&0) {
        return Err(Error::InvalidArgument("divisions must be at least 1".into()));
    }
    for axis in 0..dim {
        let (lo, hi) = (extents.min[axis], extents.max[axis]);
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "degenerate extents on axis {axis}: [{lo}, {hi}]"
            )));
        }
    }
    if dim == 2 {
        structured_2d(mode, div[0], div[1], extents)
    } else {
        structured_3d([div[0], div[1], div[2]], extents)
    }
}

fn coordinate(extents: &Extents, axis: usize, i: usize, n: usize) -> f64 {
    if i == n {
        // land exactly on the upper face
        extents.max[axis]
    } else {
        extents.min[axis] + (extents.max[axis] - extents.min[axis]) * (i as f64 / n as f64)
    }
}

fn structured_2d(mode: Mode, nr: usize, nz: usize, extents: &Extents) -> Result<Mesh> {
    let id = |i: usize, j: usize| j * (nr + 1) + i;
    let mut nodes = Vec::with_capacity((nr + 1) * (nz + 1));
    for j in 0..=nz {
        for i in 0..=nr {
            nodes.push([coordinate(extents, 0, i, nr), coordinate(extents, 1, j, nz), 0.0]);
        }
    }
    let mut cells = Vec::with_capacity(6 * nr * nz);
    for j in 0..nz {
        for i in 0..nr {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.extend_from_slice(&[a, b, c, a, c, d]);
        }
    }
    let mut facets = Vec::with_capacity(2 * (nr + nz));
    for j in 0..nz {
        facets.push(BoundaryFacet { nodes: vec![id(0, j), id(0, j + 1)], tag: 1 });
        facets.push(BoundaryFacet { nodes: vec![id(nr, j), id(nr, j + 1)], tag: 2 });
    }
    for i in 0..nr {
        facets.push(BoundaryFacet { nodes: vec![id(i, 0), id(i + 1, 0)], tag: 3 });
        facets.push(BoundaryFacet { nodes: vec![id(i, nz), id(i + 1, nz)], tag: 4 });
    }
    Mesh::from_flat(mode, nodes, cells, facets)
}

/// Vertex paths from corner (0,0,0) to (1,1,1), one per axis permutation.
const KUHN_PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn structured_3d(n: [usize; 3], extents: &Extents) -> Result<Mesh> {
    let id = |g: [usize; 3]| (g[2] * (n[1] + 1) + g[1]) * (n[0] + 1) + g[0];
    let mut nodes = Vec::with_capacity((n[0] + 1) * (n[1] + 1) * (n[2] + 1));
    let mut grid = Vec::with_capacity(nodes.capacity());
    for k in 0..=n[2] {
        for j in 0..=n[1] {
            for i in 0..=n[0] {
                nodes.push([
                    coordinate(extents, 0, i, n[0]),
                    coordinate(extents, 1, j, n[1]),
                    coordinate(extents, 2, k, n[2]),
                ]);
                grid.push([i, j, k]);
            }
        }
    }
    let mut cells = Vec::with_capacity(24 * n[0] * n[1] * n[2]);
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                for perm in KUHN_PERMUTATIONS {
                    let mut g = [i, j, k];
                    cells.push(id(g));
                    for axis in perm {
                        g[axis] += 1;
                        cells.push(id(g));
                    }
                }
            }
        }
    }

    // Tag the boundary facets found by the untagged build by the box face they lie on.
    let untagged = Mesh::from_flat(Mode::Cartesian3D, nodes.clone(), cells.clone(), Vec::new())?;
    let facets = untagged
        .boundary_facets()
        .iter()
        .map(|f| {
            let tag = (0..3)
                .find_map(|axis| {
                    if f.nodes.iter().all(|&v| grid[v][axis] == 0) {
                        Some(2 * axis as i32 + 1)
                    } else if f.nodes.iter().all(|&v| grid[v][axis] == n[axis]) {
                        Some(2 * axis as i32 + 2)
                    } else {
                        None
                    }
                })
                .expect("boundary facet of a structured box lies on a face");
            BoundaryFacet { nodes: f.nodes.clone(), tag }
        })
        .collect();
    Mesh::from_flat(Mode::Cartesian3D, nodes, cells, facets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cube_is_six_tets() {
        let mesh = generate_structured_mesh(Mode::Cartesian3D, &[1], &Extents::unit()).unwrap();
        assert_eq!(mesh.node_count(), 8);
        assert_eq!(mesh.element_count(), 6);
        assert!((0..8).all(|i| mesh.is_boundary_node(i)));
        assert_eq!(mesh.boundary_facets().len(), 12);
        assert_eq!(mesh.boundary_tags(), vec![1, 2, 3, 4, 5, 6]);
        assert!((mesh.total_measure() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn small_rectangle_counts() {
        let mesh = generate_structured_mesh(Mode::Cylindrical2D, &[2, 2], &Extents::unit()).unwrap();
        assert_eq!(mesh.node_count(), 9);
        assert_eq!(mesh.element_count(), 8);
        assert_eq!(mesh.boundary_tags(), vec![1, 2, 3, 4]);
        assert!(!mesh.is_boundary_node(4));
        assert_eq!(mesh.boundary_flags().iter().filter(|&&b| b).count(), 8);
    }

    #[test]
    fn cube_n4_counts() {
        let mesh = generate_structured_mesh(Mode::Cartesian3D, &[4], &Extents::unit()).unwrap();
        assert_eq!(mesh.node_count(), 125);
        assert_eq!(mesh.element_count(), 384);
        // every box face: 4x4 squares, 2 triangles each
        assert_eq!(mesh.boundary_facets().len(), 6 * 32);
        assert!(mesh.boundary_facets().iter().all(|f| f.tag != crate::mesh::UNTAGGED));
        mesh.validate().unwrap();
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(generate_structured_mesh(Mode::Cartesian3D, &[0], &Extents::unit()).is_err());
        let flat = Extents::new([0.0; 3], [1.0, 0.0, 1.0]);
        assert!(generate_structured_mesh(Mode::Cartesian3D, &[2], &flat).is_err());
        assert!(generate_structured_mesh(Mode::Planar2D, &[2, 2, 2], &Extents::unit()).is_err());
    }
}
