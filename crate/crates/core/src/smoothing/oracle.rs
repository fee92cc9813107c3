//! Boundary-integral evaluation of smoothed gradients.
//!
//! Builds the explicit boundary of each smoothing domain from element
//! centroids (and face centroids in 3D), then evaluates
//! `B̄_j = (1/S_k) Σ_f N_j(x_f) n_f |f|` with one-point midpoint quadrature per
//! straight boundary facet, which is exact for linear `N_j`. The domain
//! measure itself comes from the same boundary, `S_k = (1/d) ∮ x·n dΓ`.
//! Shape-function values are barycentric coordinates from measure ratios, so
//! nothing here depends on [`crate::shapefn`].

use std::collections::BTreeMap;

use super::{SmoothedGradientMatrix, SmoothingDomain};
use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::mesh::Mesh;

/// Symbolic boundary vertex; equal keys denote the same point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Vertex {
    Node(usize),
    FaceCentroid([usize; 3]),
    ElementCentroid(usize),
}

#[derive(Debug, Clone)]
struct Facet {
    /// Outward-oriented: a directed segment (2D) or counter-clockwise triangle seen from outside (3D).
    vertices: Vec<Vertex>,
    owner: usize,
}

fn position(mesh: &Mesh, v: Vertex) -> Point {
    match v {
        Vertex::Node(n) => *mesh.node(n),
        Vertex::FaceCentroid(f) => geom::centroid(&[*mesh.node(f[0]), *mesh.node(f[1]), *mesh.node(f[2])]),
        Vertex::ElementCentroid(e) => geom::centroid(&mesh.element_points(e)),
    }
}

/// Boundary of the piece of element `e` that belongs to the domain of edge `(a, b)`.
fn piece_facets(mesh: &Mesh, e: usize, a: usize, b: usize) -> Vec<Facet> {
    let el = mesh.element(e);
    let centroid = Vertex::ElementCentroid(e);
    let mut facets = Vec::new();
    if el.len() == 3 {
        let mut tri = [Vertex::Node(a), Vertex::Node(b), centroid];
        let p: Vec<Point> = tri.iter().map(|&v| position(mesh, v)).collect();
        if geom::signed_area(&p[0], &p[1], &p[2]) < 0.0 {
            tri.swap(0, 1);
        }
        for i in 0..3 {
            facets.push(Facet {
                vertices: vec![tri[i], tri[(i + 1) % 3]],
                owner: e,
            });
        }
    } else {
        for &c in el.iter().filter(|&&n| n != a && n != b) {
            let mut face = [a, b, c];
            face.sort_unstable();
            let mut tet = [Vertex::Node(a), Vertex::Node(b), Vertex::FaceCentroid(face), centroid];
            let p: Vec<Point> = tet.iter().map(|&v| position(mesh, v)).collect();
            if geom::signed_volume(&p[0], &p[1], &p[2], &p[3]) < 0.0 {
                tet.swap(0, 1);
            }
            let [v0, v1, v2, v3] = tet;
            for tri in [[v1, v2, v3], [v0, v3, v2], [v0, v1, v3], [v0, v2, v1]] {
                facets.push(Facet {
                    vertices: tri.to_vec(),
                    owner: e,
                });
            }
        }
    }
    facets
}

/// Drops facets that occur twice (interfaces between pieces, which appear
/// once in each orientation) and checks that what remains is closed.
fn merge_boundary(domain: &SmoothingDomain, facets: Vec<Facet>) -> Result<Vec<Facet>> {
    let mut by_key: BTreeMap<Vec<Vertex>, Vec<usize>> = BTreeMap::new();
    for (i, f) in facets.iter().enumerate() {
        let mut key = f.vertices.clone();
        key.sort_unstable();
        by_key.entry(key).or_default().push(i);
    }
    let mut keep = vec![false; facets.len()];
    for ids in by_key.values() {
        match ids.len() {
            1 => keep[ids[0]] = true,
            2 => {}
            _ => return Err(Error::OpenDomainBoundary { edge: domain.edge }),
        }
    }
    let merged: Vec<Facet> = facets
        .into_iter()
        .zip(keep)
        .filter_map(|(f, k)| k.then_some(f))
        .collect();
    check_closed(domain, &merged)?;
    Ok(merged)
}

/// Every directed boundary edge must be matched by its reverse.
fn check_closed(domain: &SmoothingDomain, facets: &[Facet]) -> Result<()> {
    let mut balance: BTreeMap<(Vertex, Vertex), i32> = BTreeMap::new();
    for f in facets {
        let n = f.vertices.len();
        let loops = if n == 2 { 1 } else { n };
        for i in 0..loops {
            let (u, v) = (f.vertices[i], f.vertices[(i + 1) % n]);
            if n == 2 {
                // a segment contributes one outgoing and one incoming end
                *balance.entry((u, u)).or_default() += 1;
                *balance.entry((v, v)).or_default() -= 1;
            } else if u < v {
                *balance.entry((u, v)).or_default() += 1;
            } else {
                *balance.entry((v, u)).or_default() -= 1;
            }
        }
    }
    if facets.is_empty() || balance.values().any(|&c| c != 0) {
        return Err(Error::OpenDomainBoundary { edge: domain.edge });
    }
    Ok(())
}

/// Midpoint and outward vector area (normal times length/area) of a facet.
fn facet_geometry(mesh: &Mesh, f: &Facet) -> (Point, Point) {
    let p: Vec<Point> = f.vertices.iter().map(|&v| position(mesh, v)).collect();
    if p.len() == 2 {
        let t = geom::sub(&p[1], &p[0]);
        (geom::centroid(&p), [t[1], -t[0], 0.0])
    } else {
        let n = geom::cross(&geom::sub(&p[1], &p[0]), &geom::sub(&p[2], &p[0]));
        (geom::centroid(&p), geom::scale(&n, 0.5))
    }
}

/// Barycentric coordinate of global node `node` at `x` inside element `e`
/// (zero if `node` is not a vertex of `e`).
fn shape_value(mesh: &Mesh, e: usize, node: usize, x: &Point) -> f64 {
    let el = mesh.element(e);
    let Some(i) = el.iter().position(|&n| n == node) else {
        return 0.0;
    };
    let mut p = mesh.element_points(e);
    let whole = measure_of(&p);
    p[i] = *x;
    measure_of(&p) / whole
}

fn measure_of(p: &[Point]) -> f64 {
    if p.len() == 3 {
        geom::signed_area(&p[0], &p[1], &p[2])
    } else {
        geom::signed_volume(&p[0], &p[1], &p[2], &p[3])
    }
}

/// Result of integrating over a closed set of facets.
struct Moments {
    measure: f64,
    gradient_sums: Vec<[f64; 3]>,
}

fn integrate(mesh: &Mesh, facets: &[Facet], nodes: &[usize]) -> Moments {
    let dim = mesh.mode().dimension() as f64;
    let mut measure = 0.0;
    let mut gradient_sums = vec![[0.0; 3]; nodes.len()];
    for f in facets {
        let (mid, area) = facet_geometry(mesh, f);
        measure += geom::dot(&mid, &area) / dim;
        for (j, &n) in nodes.iter().enumerate() {
            let value = shape_value(mesh, f.owner, n, &mid);
            for d in 0..3 {
                gradient_sums[j][d] += value * area[d];
            }
        }
    }
    Moments { measure, gradient_sums }
}

/// Explicit boundary of the domain and its outward vector areas, for inspection.
pub fn domain_boundary(mesh: &Mesh, domain: &SmoothingDomain) -> Result<Vec<(Point, Point)>> {
    let facets = merged_facets(mesh, domain)?;
    Ok(facets.iter().map(|f| facet_geometry(mesh, f)).collect())
}

fn merged_facets(mesh: &Mesh, domain: &SmoothingDomain) -> Result<Vec<Facet>> {
    let [a, b] = domain.endpoints;
    let mut facets = Vec::new();
    for c in &domain.contributions {
        facets.extend(piece_facets(mesh, c.element, a, b));
    }
    merge_boundary(domain, facets)
}

/// Sum of outward vector areas over the domain boundary; zero for a closed boundary.
pub fn closure_residual(mesh: &Mesh, domain: &SmoothingDomain) -> Result<[f64; 3]> {
    let mut total = [0.0; 3];
    for (_, area) in domain_boundary(mesh, domain)? {
        total = geom::add(&total, &area);
    }
    Ok(total)
}

/// Domain measure from the boundary alone.
pub fn boundary_measure(mesh: &Mesh, domain: &SmoothingDomain) -> Result<f64> {
    let facets = merged_facets(mesh, domain)?;
    Ok(integrate(mesh, &facets, &[]).measure)
}

/// Smoothed gradients as a boundary integral over the merged domain boundary.
///
/// With `density = Some(rho)`, each element piece is integrated over its own
/// boundary and weighted by `rho[e]` times its boundary-computed measure:
/// `B̃_j = Σ_e rho_e ∮_{∂P_e} N_j n dΓ / Σ_e rho_e |P_e|`.
pub fn smoothed_gradient_boundary_oracle(
    mesh: &Mesh,
    domain: &SmoothingDomain,
    density: Option<&[f64]>,
) -> Result<SmoothedGradientMatrix> {
    let nodes = domain.support_nodes.clone();
    let gradients = match density {
        None => {
            let facets = merged_facets(mesh, domain)?;
            let m = integrate(mesh, &facets, &nodes);
            m.gradient_sums
                .into_iter()
                .map(|g| geom::scale(&g, 1.0 / m.measure))
                .collect()
        }
        Some(rho) => {
            let [a, b] = domain.endpoints;
            let mut weighted = vec![[0.0; 3]; nodes.len()];
            let mut total = 0.0;
            for c in &domain.contributions {
                let facets = piece_facets(mesh, c.element, a, b);
                let facets = merge_boundary(domain, facets)?;
                let m = integrate(mesh, &facets, &nodes);
                let w = rho[c.element];
                total += w * m.measure;
                for (acc, g) in weighted.iter_mut().zip(&m.gradient_sums) {
                    for d in 0..3 {
                        acc[d] += w * g[d];
                    }
                }
            }
            weighted.into_iter().map(|g| geom::scale(&g, 1.0 / total)).collect()
        }
    };
    Ok(SmoothedGradientMatrix {
        edge: domain.edge,
        nodes,
        gradients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{extract_edges, Mode};
    use crate::smoothing::{build_smoothing_domains, Weighting};

    #[test]
    fn interior_2d_domain_has_four_segments() {
        let nodes = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        let mesh = Mesh::new(Mode::Planar2D, nodes, vec![vec![0, 1, 2], vec![0, 2, 3]], vec![]).unwrap();
        let edges = extract_edges(&mesh);
        let set = build_smoothing_domains(&mesh, &edges, None).unwrap();
        let diag = set.domain(edges.find(0, 2).unwrap());
        assert_eq!(domain_boundary(&mesh, diag).unwrap().len(), 4);
        let side = set.domain(edges.find(0, 1).unwrap());
        assert_eq!(domain_boundary(&mesh, side).unwrap().len(), 3);
        assert!((boundary_measure(&mesh, diag).unwrap() - 1.0 / 3.0).abs() < 1e-15);

        let oracle = smoothed_gradient_boundary_oracle(&mesh, diag, None).unwrap();
        let direct = set.smoothed_gradient(&mesh, diag.edge, Weighting::Measure).unwrap();
        for (o, d) in oracle.gradients.iter().zip(&direct.gradients) {
            assert!((0..3).all(|i| (o[i] - d[i]).abs() < 1e-14));
        }
    }

    #[test]
    fn tet_pieces_are_sixths() {
        let nodes = vec![[0.1, 0.0, 0.2], [1.3, 0.1, 0.0], [0.2, 0.9, 0.1], [0.4, 0.3, 1.7]];
        let mesh = Mesh::new(Mode::Cartesian3D, nodes, vec![vec![0, 1, 2, 3]], vec![]).unwrap();
        let edges = extract_edges(&mesh);
        let set = build_smoothing_domains(&mesh, &edges, None).unwrap();
        for d in set.domains() {
            let s = boundary_measure(&mesh, d).unwrap();
            assert!((s - d.measure).abs() < 1e-15 * d.measure.max(1.0), "{s} vs {}", d.measure);
            // 2 outer face triangles + 4 internal ones
            assert_eq!(domain_boundary(&mesh, d).unwrap().len(), 6);
            let r = closure_residual(&mesh, d).unwrap();
            assert!(geom::norm(&r) < 1e-15);
        }
    }
}
