//! Seeded random displacement of interior nodes.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `SeedableRng::seed_from_u64`, whose seed expansion is fixed by `rand_core`.
//! Interior nodes are visited in index order. Each draws a direction uniform on
//! the unit circle/sphere (rejection sampling from the enclosing square/cube)
//! followed by a length uniform in `[0, magnitude * L)`, where `L` is the mean
//! length of the node's incident edges in the unperturbed mesh. A draw that
//! would invert or flatten an incident element is redrawn, up to
//! `MAX_REDRAWS` times; after that the last draw is halved until valid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{extract_edges, signed_measure, Mesh, Mode};
use crate::error::{Error, Result};
use crate::geom::{self, Point};

const MAX_REDRAWS: usize = 16;
const MAX_HALVINGS: usize = 40;

/// Displaces every non-boundary node by a random vector of length at most
/// `magnitude` times its mean incident edge length. Pure in `(mesh, magnitude, seed)`.
pub fn perturb_interior_nodes(mesh: &Mesh, magnitude: f64, seed: u64) -> Result<Mesh> {
    if !(0.0..0.5).contains(&magnitude) {
        return Err(Error::InvalidArgument(format!(
            "perturbation magnitude must lie in [0, 0.5), got {magnitude}"
        )));
    }
    let n = mesh.node_count();
    let topo = extract_edges(mesh);
    let mut length_sum = vec![0.0; n];
    let mut degree = vec![0usize; n];
    for &[a, b] in topo.edges() {
        let l = geom::distance(mesh.node(a), mesh.node(b));
        length_sum[a] += l;
        length_sum[b] += l;
        degree[a] += 1;
        degree[b] += 1;
    }
    let mut node_elements: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, element) in mesh.elements().enumerate() {
        for &v in element {
            node_elements[v].push(e);
        }
    }

    let mode = mesh.mode();
    let dim = mode.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = mesh.nodes().to_vec();

    for v in 0..n {
        if mesh.is_boundary_node(v) || degree[v] == 0 {
            continue;
        }
        let reach = magnitude * length_sum[v] / degree[v] as f64;
        let origin = nodes[v];
        let mut accepted = false;
        let mut last = [0.0; 3];
        for _ in 0..MAX_REDRAWS {
            let dir = random_direction(&mut rng, dim);
            let length = reach * rng.random::<f64>();
            last = geom::scale(&dir, length);
            nodes[v] = geom::add(&origin, &last);
            if admissible(mesh, &nodes, &node_elements[v], v) {
                accepted = true;
                break;
            }
        }
        if !accepted {
            for _ in 0..MAX_HALVINGS {
                last = geom::scale(&last, 0.5);
                nodes[v] = geom::add(&origin, &last);
                if admissible(mesh, &nodes, &node_elements[v], v) {
                    accepted = true;
                    break;
                }
            }
        }
        if !accepted {
            nodes[v] = origin;
            if !admissible(mesh, &nodes, &node_elements[v], v) {
                return Err(Error::Inversion { node: v });
            }
        }
    }
    mesh.with_nodes(nodes)
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Point {
    loop {
        let mut v = [0.0; 3];
        for c in v.iter_mut().take(dim) {
            *c = rng.random_range(-1.0..1.0);
        }
        let r2 = geom::dot(&v, &v);
        if r2 > 1e-12 && r2 <= 1.0 {
            return geom::scale(&v, 1.0 / r2.sqrt());
        }
    }
}

fn admissible(mesh: &Mesh, nodes: &[Point], elements: &[usize], v: usize) -> bool {
    if mesh.mode() == Mode::Cylindrical2D && nodes[v][0] < 0.0 {
        return false;
    }
    let dim = mesh.mode().dimension() as i32;
    elements.iter().all(|&e| {
        let element = mesh.element(e);
        let measure = signed_measure(mesh.mode(), nodes, element);
        let mut longest: f64 = 0.0;
        for (a, &i) in element.iter().enumerate() {
            for &j in &element[a + 1..] {
                longest = longest.max(geom::distance(&nodes[i], &nodes[j]));
            }
        }
        measure > 1e-10 * longest.powi(dim)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured_mesh, Extents};

    fn cube(n: usize) -> Mesh {
        generate_structured_mesh(Mode::Cartesian3D, &[n], &Extents::unit()).unwrap()
    }

    #[test]
    fn zero_magnitude_is_identity() {
        let mesh = cube(3);
        assert_eq!(perturb_interior_nodes(&mesh, 0.0, 99).unwrap(), mesh);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let mesh = cube(3);
        let a = perturb_interior_nodes(&mesh, 0.3, 11).unwrap();
        let b = perturb_interior_nodes(&mesh, 0.3, 11).unwrap();
        let c = perturb_interior_nodes(&mesh, 0.3, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn boundary_fixed_and_elements_positive() {
        let mesh = cube(4);
        let moved = perturb_interior_nodes(&mesh, 0.2, 7).unwrap();
        for v in 0..mesh.node_count() {
            if mesh.is_boundary_node(v) {
                assert_eq!(mesh.node(v), moved.node(v));
            }
        }
        let min_volume = (0..moved.element_count())
            .map(|e| moved.element_measure(e))
            .fold(f64::INFINITY, f64::min);
        assert!(min_volume > 0.0);
        assert_ne!(moved, mesh);
        moved.validate().unwrap();
    }

    #[test]
    fn displacement_bounded_by_reach() {
        let mesh = generate_structured_mesh(Mode::Cylindrical2D, &[6], &Extents::unit()).unwrap();
        let moved = perturb_interior_nodes(&mesh, 0.25, 3).unwrap();
        // all incident edges have length 1/6 or sqrt(2)/6
        let bound = 0.25 * 2f64.sqrt() / 6.0;
        for v in 0..mesh.node_count() {
            assert!(geom::distance(mesh.node(v), moved.node(v)) <= bound + 1e-15);
        }
    }

    #[test]
    fn rejects_large_magnitude() {
        assert!(perturb_interior_nodes(&cube(2), 0.5, 1).is_err());
        assert!(perturb_interior_nodes(&cube(2), -0.1, 1).is_err());
    }
}
