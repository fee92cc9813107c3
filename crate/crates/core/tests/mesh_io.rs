use std::path::Path;

use esfem_core::analysis::patch_test;
use esfem_core::mesh::io::{
    export_vtk, import_mesh, mesh_from_json, mesh_to_json, read_json, write_json, MeshFormat,
};
use esfem_core::mesh::{generate_structured_mesh, perturb_interior_nodes};
use esfem_core::{Affine, Error, Extents, Method, Mode};

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

#[test]
fn imports_tagged_square() {
    let mesh = import_mesh(&fixture("square.msh"), MeshFormat::Msh, Mode::Cylindrical2D).unwrap();
    assert_eq!(mesh.node_count(), 5);
    assert_eq!(mesh.element_count(), 4);
    assert_eq!(mesh.boundary_tags(), vec![1, 2]);
    assert_eq!(mesh.boundary_facets().iter().filter(|f| f.tag == 1).count(), 1);
    assert!((mesh.total_measure() - 1.0).abs() < 1e-15);
    let field = Affine { constant: 0.5, gradient: [0.0, -2.0, 0.0] };
    for method in [Method::Fem, Method::EsFem] {
        assert!(patch_test(&mesh, method, field).unwrap() < 1e-13);
    }
}

#[test]
fn missing_file_is_reported() {
    let err = import_mesh(Path::new("/nonexistent/mesh.msh"), MeshFormat::Msh, Mode::Cartesian3D).unwrap_err();
    assert_eq!(err.category(), "file-not-found");
}

#[test]
fn format_from_extension() {
    assert_eq!(MeshFormat::from_path(Path::new("a/b.msh")), Some(MeshFormat::Msh));
    assert_eq!(MeshFormat::from_path(Path::new("b.json")), Some(MeshFormat::Json));
    assert_eq!(MeshFormat::from_path(Path::new("b.vtk")), None);
}

#[test]
fn json_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let base = generate_structured_mesh(Mode::Cartesian3D, &[3], &Extents::unit()).unwrap();
    let mesh = perturb_interior_nodes(&base, 0.3, 99).unwrap();
    let path = dir.path().join("mesh.json");
    write_json(&mesh, &path).unwrap();
    let back = read_json(&path).unwrap();
    assert_eq!(back, mesh);
    assert_eq!(back.fingerprint(), mesh.fingerprint());
    assert_eq!(mesh_to_json(&back), std::fs::read_to_string(&path).unwrap());
}

#[test]
fn json_rejects_wrong_format_name() {
    let mesh = generate_structured_mesh(Mode::Planar2D, &[1], &Extents::unit()).unwrap();
    let text = mesh_to_json(&mesh).replace("esfem-mesh", "other");
    assert!(mesh_from_json(&text).is_err());
}

#[test]
fn vtk_export_writes_fields() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = generate_structured_mesh(Mode::Cartesian3D, &[2], &Extents::unit()).unwrap();
    let v: Vec<f64> = mesh.nodes().iter().map(|x| x[2]).collect();
    let path = dir.path().join("out.vtk");
    export_vtk(&mesh, &[("potential", &v)], &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# vtk DataFile Version"));
    assert!(text.contains(&format!("POINTS {} double", mesh.node_count())));
    assert!(text.contains(&format!("CELL_TYPES {}", mesh.element_count())));
    assert!(text.contains("SCALARS potential double 1"));
    let short = vec![0.0; 3];
    assert!(matches!(
        export_vtk(&mesh, &[("bad", &short)], &path),
        Err(Error::InvalidArgument(_))
    ));
}
