use std::collections::BTreeSet;

use esfem_core::analysis::{patch_test, solve_problem};
use esfem_core::assembly::{assemble, build_system};
use esfem_core::bvp::box_benchmark;
use esfem_core::mesh::{extract_edges, generate_structured_mesh, perturb_interior_nodes};
use esfem_core::smoothing::oracle::smoothed_gradient_boundary_oracle;
use esfem_core::solver::SolveOptions;
use esfem_core::{build_smoothing_domains, Affine, BoundaryCondition, BvpSpec, Extents, Field, Method, Mode};
use proptest::prelude::*;

#[test]
fn edge_count_matches_brute_force() {
    let mesh = generate_structured_mesh(Mode::Cartesian3D, &[4], &Extents::unit()).unwrap();
    let mut pairs = BTreeSet::new();
    for el in mesh.elements() {
        for a in 0..4 {
            for b in a + 1..4 {
                pairs.insert((el[a].min(el[b]), el[a].max(el[b])));
            }
        }
    }
    let edges = extract_edges(&mesh);
    assert_eq!(edges.edge_count(), pairs.len());
    let listed: BTreeSet<(usize, usize)> = edges.edges().iter().map(|e| (e[0], e[1])).collect();
    assert_eq!(listed, pairs);
}

#[test]
fn smoothed_stiffness_from_the_boundary_integral() {
    let mesh = generate_structured_mesh(Mode::Planar2D, &[1], &Extents::unit()).unwrap();
    let bvp = BvpSpec::laplace(Mode::Planar2D).validate(&mesh).unwrap();
    let k = assemble(&mesh, &bvp, Method::EsFem).unwrap().matrix.to_dense();
    let set = build_smoothing_domains(&mesh, &extract_edges(&mesh), None).unwrap();
    let mut oracle = nalgebra::DMatrix::zeros(4, 4);
    for d in set.domains() {
        let b = smoothed_gradient_boundary_oracle(&mesh, d, None).unwrap();
        for (i, gi) in b.nodes.iter().zip(&b.gradients) {
            for (j, gj) in b.nodes.iter().zip(&b.gradients) {
                oracle[(*i, *j)] += d.measure * (gi[0] * gj[0] + gi[1] * gj[1]);
            }
        }
    }
    assert!((k - oracle).amax() < 1e-12);
}

#[test]
fn zero_data_gives_zero_potential() {
    let mesh = generate_structured_mesh(Mode::Cartesian3D, &[4], &Extents::unit()).unwrap();
    let mut spec = BvpSpec::laplace(Mode::Cartesian3D);
    for tag in 1..=6 {
        spec = spec.with_condition(BoundaryCondition::dirichlet(tag, Field::Constant(0.0)));
    }
    for method in [Method::Fem, Method::EsFem] {
        let report = solve_problem(&mesh, &spec, method, &SolveOptions::default()).unwrap();
        assert!(report.solution.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn affine_fields_on_perturbed_meshes() {
    let cube = generate_structured_mesh(Mode::Cartesian3D, &[4], &Extents::unit()).unwrap();
    let cube = perturb_interior_nodes(&cube, 0.3, 17).unwrap();
    let rect = generate_structured_mesh(Mode::Cylindrical2D, &[6, 8], &Extents::new([0.0, 0.0, 0.0], [1.0, 2.0, 0.0])).unwrap();
    let rect = perturb_interior_nodes(&rect, 0.3, 18).unwrap();
    let constant = Affine { constant: 5.0, gradient: [0.0; 3] };
    let linear = Affine { constant: 1.0, gradient: [2.0, 3.0, -1.0] };
    let axial = Affine { constant: 3.0, gradient: [0.0, 2.0, 0.0] };
    for method in [Method::Fem, Method::EsFem] {
        assert!(patch_test(&cube, method, constant).unwrap() <= 1e-12);
        assert!(patch_test(&cube, method, linear).unwrap() <= 1e-10);
        assert!(patch_test(&rect, method, axial).unwrap() <= 1e-10);
    }
}

#[test]
fn assembly_is_deterministic() {
    let mesh = generate_structured_mesh(Mode::Cartesian3D, &[5], &Extents::unit()).unwrap();
    let mesh = perturb_interior_nodes(&mesh, 0.2, 5).unwrap();
    let bvp = box_benchmark().validate(&mesh).unwrap();
    for method in [Method::Fem, Method::EsFem] {
        let a = build_system(&mesh, &bvp, method).unwrap();
        let b = build_system(&mesh, &bvp, method).unwrap();
        assert_eq!(a.matrix_triplets_text(), b.matrix_triplets_text());
        assert_eq!(a.rhs_text(), b.rhs_text());
    }
}

#[test]
fn smoothing_softens_the_energy() {
    // on the same mesh the smoothed stiffness never exceeds the element one
    let mesh = generate_structured_mesh(Mode::Cartesian3D, &[3], &Extents::unit()).unwrap();
    let mesh = perturb_interior_nodes(&mesh, 0.3, 2).unwrap();
    let bvp = BvpSpec::laplace(Mode::Cartesian3D).validate(&mesh).unwrap();
    let fem = assemble(&mesh, &bvp, Method::Fem).unwrap().matrix;
    let es = assemble(&mesh, &bvp, Method::EsFem).unwrap().matrix;
    for s in 0..5 {
        let v: Vec<f64> = mesh.nodes().iter().map(|x| ((s + 1) as f64 * (x[0] + 2.0 * x[1] - x[2])).sin()).collect();
        let energy = |k: &esfem_core::sparse::CsrMatrix| k.mul_vec(&v).iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        assert!(energy(&es) <= energy(&fem) * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stiffness_rows_sum_to_zero(seed in 0u64..10_000, m in 0.0f64..0.45) {
        let mesh = generate_structured_mesh(Mode::Cartesian3D, &[3], &Extents::unit()).unwrap();
        let mesh = perturb_interior_nodes(&mesh, m, seed).unwrap();
        let bvp = BvpSpec::laplace(Mode::Cartesian3D).validate(&mesh).unwrap();
        for method in [Method::Fem, Method::EsFem] {
            let k = assemble(&mesh, &bvp, method).unwrap().matrix;
            let ones = vec![1.0; k.dim()];
            let worst = k.mul_vec(&ones).iter().fold(0.0f64, |a, x| a.max(x.abs()));
            prop_assert!(worst <= 1e-12 * k.max_abs());
        }
    }
}
