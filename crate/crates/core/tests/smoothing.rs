use esfem_core::mesh::{extract_edges, generate_structured_mesh, perturb_interior_nodes, BoundaryFacet, Mesh};
use esfem_core::smoothing::oracle::{boundary_measure, closure_residual, smoothed_gradient_boundary_oracle};
use esfem_core::smoothing::Weighting;
use esfem_core::{build_smoothing_domains, Extents, Mode};
use proptest::prelude::*;

fn cube(n: usize, m: f64, seed: u64) -> Mesh {
    let base = generate_structured_mesh(Mode::Cartesian3D, &[n], &Extents::unit()).unwrap();
    perturb_interior_nodes(&base, m, seed).unwrap()
}

/// Same geometry with nodes numbered in reverse.
fn relabel(mesh: &Mesh) -> Mesh {
    let n = mesh.node_count();
    let map = |i: usize| n - 1 - i;
    let nodes = (0..n).map(|i| *mesh.node(map(i))).collect();
    let elements = mesh.elements().map(|e| e.iter().map(|&i| map(i)).collect()).collect();
    let facets = mesh
        .boundary_facets()
        .iter()
        .map(|f| BoundaryFacet { nodes: f.nodes.iter().map(|&i| map(i)).collect(), tag: f.tag })
        .collect();
    Mesh::new(mesh.mode(), nodes, elements, facets).unwrap()
}

#[test]
fn domains_do_not_depend_on_numbering() {
    let mesh = cube(3, 0.3, 4);
    let other = relabel(&mesh);
    let n = mesh.node_count();
    let a = build_smoothing_domains(&mesh, &extract_edges(&mesh), None).unwrap();
    let b = build_smoothing_domains(&other, &extract_edges(&other), None).unwrap();
    assert_eq!(a.len(), b.len());
    let mut by_edge = std::collections::BTreeMap::new();
    for d in b.domains() {
        let mut key = [n - 1 - d.endpoints[0], n - 1 - d.endpoints[1]];
        key.sort_unstable();
        by_edge.insert(key, d.measure);
    }
    for d in a.domains() {
        let other = by_edge[&d.endpoints];
        assert!((d.measure - other).abs() <= 1e-15 * d.measure.max(1.0));
    }
}

#[test]
fn interior_domains_are_closed() {
    let mesh = cube(3, 0.25, 8);
    let set = build_smoothing_domains(&mesh, &extract_edges(&mesh), None).unwrap();
    for d in set.domains() {
        if d.endpoints.iter().all(|&v| !mesh.is_boundary_node(v)) {
            let r = closure_residual(&mesh, d).unwrap();
            assert!(r.iter().all(|x| x.abs() < 1e-14), "{r:?}");
        }
        let m = boundary_measure(&mesh, d).unwrap();
        assert!((m - d.measure).abs() < 1e-13 * d.measure);
    }
}

#[test]
fn smoothed_gradients_reproduce_linear_fields() {
    let mesh = cube(3, 0.35, 12);
    let set = build_smoothing_domains(&mesh, &extract_edges(&mesh), None).unwrap();
    let g = [1.0, -3.0, 0.5];
    let v: Vec<f64> = mesh.nodes().iter().map(|x| 2.0 + g[0] * x[0] + g[1] * x[1] + g[2] * x[2]).collect();
    for k in 0..set.len() {
        let b = set.smoothed_gradient(&mesh, k, Weighting::Measure).unwrap();
        let got = b.apply(&v);
        for d in 0..3 {
            assert!((got[d] - g[d]).abs() < 1e-12);
        }
        let sums: Vec<f64> = (0..3).map(|d| b.gradients.iter().map(|r| r[d]).sum()).collect();
        assert!(sums.iter().all(|s| s.abs() < 1e-12 * b.max_abs()));
    }
}

#[test]
fn cylindrical_weights_use_element_radius() {
    let base = generate_structured_mesh(Mode::Cylindrical2D, &[4], &Extents::new([1.0, 0.0, 0.0], [2.0, 1.0, 0.0])).unwrap();
    let mesh = perturb_interior_nodes(&base, 0.2, 3).unwrap();
    let set = build_smoothing_domains(&mesh, &extract_edges(&mesh), None).unwrap();
    for d in set.domains() {
        for c in &d.contributions {
            let r = set.element_gradients()[c.element].centroid_radius();
            assert!((c.stiffness_weight - 2.0 * std::f64::consts::PI * r * c.measure).abs() < 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn partition_and_oracle_hold_on_random_meshes(seed in 0u64..10_000, m in 0.0f64..0.45, three_d in any::<bool>()) {
        let mesh = if three_d {
            cube(3, m, seed)
        } else {
            let base = generate_structured_mesh(Mode::Cylindrical2D, &[5, 4], &Extents::new([0.0, -1.0, 0.0], [1.0, 1.0, 0.0])).unwrap();
            perturb_interior_nodes(&base, m, seed).unwrap()
        };
        let set = build_smoothing_domains(&mesh, &extract_edges(&mesh), None).unwrap();
        prop_assert!((set.total_measure() - mesh.total_measure()).abs() < 1e-12 * mesh.total_measure());
        for k in 0..set.len() {
            let direct = set.smoothed_gradient(&mesh, k, Weighting::Measure).unwrap();
            let oracle = smoothed_gradient_boundary_oracle(&mesh, set.domain(k), None).unwrap();
            let scale = direct.max_abs();
            for (a, b) in direct.gradients.iter().zip(&oracle.gradients) {
                for d in 0..3 {
                    prop_assert!((a[d] - b[d]).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}
