//! Mesh file formats.
//!
//! * Gmsh MSH 2.2 ASCII (import): `$Nodes` and `$Elements` sections. Cells are
//!   triangles (type 2) in 2D modes and tetrahedra (type 4) in 3D; boundary
//!   facets are lines (type 1) in 2D and triangles in 3D, tagged with their
//!   first (physical) tag. Points (type 15) and, in 3D, lines are ignored.
//!   In 2D modes the file's x and y are read as r and z.
//! * Native JSON (import/export), see [`MeshDocument`].
//! * VTK legacy ASCII unstructured grid with scalar point data (export).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BoundaryFacet, Mesh, Mode, UNTAGGED};
use crate::error::{Error, Result};

pub const JSON_FORMAT_NAME: &str = "esfem-mesh";
pub const JSON_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Msh,
    Json,
}

impl MeshFormat {
    /// Guess from the file extension (`.msh` or `.json`).
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "msh" => Some(MeshFormat::Msh),
            "json" => Some(MeshFormat::Json),
            _ => None,
        }
    }
}

/// On-disk JSON layout of a mesh.
///
/// ```json
/// {"format":"esfem-mesh","version":1,"mode":"cartesian3d",
///  "nodes":[[x,y,z],...],"elements":[[n0,n1,n2,n3],...],
///  "boundary_facets":[{"nodes":[a,b,c],"tag":1},...]}
/// ```
///
/// Node indices are zero-based. 2D meshes store `[r, z, 0]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshDocument {
    pub format: String,
    pub version: u32,
    pub mode: Mode,
    pub nodes: Vec<[f64; 3]>,
    pub elements: Vec<Vec<usize>>,
    pub boundary_facets: Vec<BoundaryFacet>,
}

impl From<&Mesh> for MeshDocument {
    fn from(mesh: &Mesh) -> Self {
        MeshDocument {
            format: JSON_FORMAT_NAME.to_string(),
            version: JSON_FORMAT_VERSION,
            mode: mesh.mode(),
            nodes: mesh.nodes().to_vec(),
            elements: mesh.elements().map(|e| e.to_vec()).collect(),
            boundary_facets: mesh.boundary_facets().to_vec(),
        }
    }
}

impl TryFrom<MeshDocument> for Mesh {
    type Error = Error;

    fn try_from(doc: MeshDocument) -> Result<Mesh> {
        if doc.format != JSON_FORMAT_NAME {
            return Err(Error::InvalidArgument(format!("not an {JSON_FORMAT_NAME} document: format `{}`", doc.format)));
        }
        if doc.version != JSON_FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported mesh document version {}", doc.version)));
        }
        Mesh::new(doc.mode, doc.nodes, doc.elements, doc.boundary_facets)
    }
}

pub fn mesh_to_json(mesh: &Mesh) -> String {
    let mut s = serde_json::to_string(&MeshDocument::from(mesh)).expect("mesh serializes");
    s.push('\n');
    s
}

pub fn mesh_from_json(text: &str) -> Result<Mesh> {
    let doc: MeshDocument = serde_json::from_str(text)?;
    Mesh::try_from(doc)
}

pub fn write_json(mesh: &Mesh, path: &Path) -> Result<()> {
    fs::write(path, mesh_to_json(mesh)).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_json(path: &Path) -> Result<Mesh> {
    mesh_from_json(&read_text(path)?)
}

/// Options for MSH import.
#[derive(Debug, Clone)]
pub struct MshOptions {
    pub mode: Mode,
    /// Physical tag -> boundary tag. Unlisted physical tags map to themselves.
    pub tag_map: BTreeMap<i64, i32>,
}

impl MshOptions {
    pub fn new(mode: Mode) -> Self {
        MshOptions {
            mode,
            tag_map: BTreeMap::new(),
        }
    }
}

pub fn read_msh(path: &Path, options: &MshOptions) -> Result<Mesh> {
    parse_msh(&read_text(path)?, path, options)
}

/// Reads a mesh in either supported format. `mode` is required for MSH files,
/// which do not record it; JSON files carry their own mode.
pub fn import_mesh(path: &Path, format: MeshFormat, mode: Mode) -> Result<Mesh> {
    match format {
        MeshFormat::Msh => read_msh(path, &MshOptions::new(mode)),
        MeshFormat::Json => read_json(path),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

struct Lines<'a> {
    path: PathBuf,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        loop {
            match self.inner.next() {
                Some((i, text)) => {
                    self.line = i + 1;
                    let t = text.trim();
                    if !t.is_empty() {
                        return Ok(t);
                    }
                }
                None => return Err(self.error("unexpected end of file")),
            }
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line,
            message: message.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, field: &str, what: &str) -> Result<T> {
        field
            .parse()
            .map_err(|_| self.error(format!("cannot parse {what} from `{field}`")))
    }
}

pub fn parse_msh(text: &str, path: &Path, options: &MshOptions) -> Result<Mesh> {
    let mode = options.mode;
    let dim = mode.dimension();
    let (cell_type, facet_type) = if dim == 2 { (2, 1) } else { (4, 2) };
    let mut lines = Lines {
        path: path.to_path_buf(),
        inner: text.lines().enumerate(),
        line: 0,
    };

    let mut ids: BTreeMap<i64, usize> = BTreeMap::new();
    let mut coords: Vec<[f64; 3]> = Vec::new();
    let mut cells: Vec<Vec<i64>> = Vec::new();
    let mut facets: Vec<(Vec<i64>, i32)> = Vec::new();
    let mut seen_nodes = false;
    let mut seen_elements = false;

    while let Some((i, raw)) = lines.inner.next() {
        lines.line = i + 1;
        match raw.trim() {
            "$MeshFormat" => {
                let header = lines.next_line()?;
                let version = header.split_whitespace().next().unwrap_or("");
                if !version.starts_with("2.") {
                    return Err(lines.error(format!("unsupported MSH version {version}, expected 2.x")));
                }
                if header.split_whitespace().nth(1) != Some("0") {
                    return Err(lines.error("binary MSH files are not supported"));
                }
                expect_end(&mut lines, "$EndMeshFormat")?;
            }
            "$Nodes" => {
                let line = lines.next_line()?;
                let count: usize = lines.parse(line, "node count")?;
                for _ in 0..count {
                    let l = lines.next_line()?;
                    let f: Vec<&str> = l.split_whitespace().collect();
                    if f.len() != 4 {
                        return Err(lines.error(format!("node line has {} fields, expected 4", f.len())));
                    }
                    let id: i64 = lines.parse(f[0], "node id")?;
                    let x: f64 = lines.parse(f[1], "x coordinate")?;
                    let y: f64 = lines.parse(f[2], "y coordinate")?;
                    let z: f64 = lines.parse(f[3], "z coordinate")?;
                    let p = if dim == 2 { [x, y, 0.0] } else { [x, y, z] };
                    if ids.insert(id, coords.len()).is_some() {
                        return Err(lines.error(format!("duplicate node id {id}")));
                    }
                    coords.push(p);
                }
                expect_end(&mut lines, "$EndNodes")?;
                seen_nodes = true;
            }
            "$Elements" => {
                let line = lines.next_line()?;
                let count: usize = lines.parse(line, "element count")?;
                for _ in 0..count {
                    let l = lines.next_line()?;
                    let f: Vec<i64> = l
                        .split_whitespace()
                        .map(|s| lines.parse(s, "element field"))
                        .collect::<Result<_>>()?;
                    if f.len() < 3 {
                        return Err(lines.error("element line is too short"));
                    }
                    let element_type = f[1];
                    let ntags = usize::try_from(f[2]).map_err(|_| lines.error("negative tag count"))?;
                    let arity = match element_type {
                        15 => 1,
                        1 => 2,
                        2 => 3,
                        4 => 4,
                        other => {
                            return Err(Error::UnsupportedElement {
                                path: lines.path.clone(),
                                line: lines.line,
                                element_type: other,
                            })
                        }
                    };
                    if f.len() != 3 + ntags + arity {
                        return Err(lines.error(format!(
                            "element of type {element_type} with {ntags} tags should have {} fields, found {}",
                            3 + ntags + arity,
                            f.len()
                        )));
                    }
                    let conn = f[3 + ntags..].to_vec();
                    if element_type == cell_type {
                        cells.push(conn);
                    } else if element_type == facet_type {
                        let tag = if ntags == 0 {
                            UNTAGGED
                        } else {
                            let physical = f[3];
                            match options.tag_map.get(&physical) {
                                Some(&t) => t,
                                None => i32::try_from(physical)
                                    .map_err(|_| lines.error(format!("tag {physical} out of range")))?,
                            }
                        };
                        facets.push((conn, tag));
                    } else if element_type == 2 || element_type == 4 {
                        return Err(lines.error(format!(
                            "element type {element_type} does not match a {} mesh",
                            mode.name()
                        )));
                    }
                }
                expect_end(&mut lines, "$EndElements")?;
                seen_elements = true;
            }
            "" => {}
            section if section.starts_with('$') && !section.starts_with("$End") => {
                // skip unknown section
                let end = format!("$End{}", &section[1..]);
                loop {
                    if lines.next_line()? == end {
                        break;
                    }
                }
            }
            other => return Err(lines.error(format!("unexpected content `{other}`"))),
        }
    }
    if !seen_nodes || !seen_elements {
        return Err(lines.error("missing $Nodes or $Elements section"));
    }
    if cells.is_empty() {
        return Err(lines.error(format!("no {} elements found", if dim == 2 { "triangle" } else { "tetrahedron" })));
    }

    // Keep only nodes used by cells, renumbered in file order.
    let mut used = vec![false; coords.len()];
    let resolve = |id: i64| -> Result<usize> {
        ids.get(&id).copied().ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("element references undefined node {id}"),
        })
    };
    let mut cell_idx = Vec::with_capacity(cells.len());
    for c in &cells {
        let conn: Vec<usize> = c.iter().map(|&id| resolve(id)).collect::<Result<_>>()?;
        for &n in &conn {
            used[n] = true;
        }
        cell_idx.push(conn);
    }
    let mut renumber = vec![usize::MAX; coords.len()];
    let mut nodes = Vec::new();
    for (i, p) in coords.iter().enumerate() {
        if used[i] {
            renumber[i] = nodes.len();
            nodes.push(*p);
        }
    }
    let elements = cell_idx
        .into_iter()
        .map(|c| c.into_iter().map(|n| renumber[n]).collect())
        .collect();
    let mut boundary = Vec::with_capacity(facets.len());
    for (conn, tag) in facets {
        let mut nodes_of = Vec::with_capacity(conn.len());
        for id in conn {
            let n = renumber[resolve(id)?];
            if n == usize::MAX {
                return Err(Error::InvalidMesh(format!("boundary facet uses node {id} which belongs to no element")));
            }
            nodes_of.push(n);
        }
        boundary.push(BoundaryFacet { nodes: nodes_of, tag });
    }
    Mesh::new(mode, nodes, elements, boundary)
}

fn expect_end(lines: &mut Lines<'_>, end: &str) -> Result<()> {
    let l = lines.next_line()?;
    if l != end {
        return Err(lines.error(format!("expected {end}, found `{l}`")));
    }
    Ok(())
}

/// Renders a VTK legacy ASCII unstructured grid with the given scalar point fields.
pub fn vtk_string(mesh: &Mesh, fields: &[(&str, &[f64])]) -> Result<String> {
    for (name, values) in fields {
        if values.len() != mesh.node_count() {
            return Err(Error::InvalidArgument(format!(
                "field `{name}` has {} values for {} nodes",
                values.len(),
                mesh.node_count()
            )));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("invalid VTK field name `{name}`")));
        }
    }
    let npe = mesh.mode().nodes_per_element();
    let cell_type = if npe == 3 { 5 } else { 10 };
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "esfem {} mesh", mesh.mode().name());
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.node_count());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    let ne = mesh.element_count();
    let _ = writeln!(s, "CELLS {} {}", ne, ne * (npe + 1));
    for element in mesh.elements() {
        s.push_str(&npe.to_string());
        for n in element {
            let _ = write!(s, " {n}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(s, "{cell_type}");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.node_count());
        for (name, values) in fields {
            let _ = writeln!(s, "SCALARS {name} double 1");
            s.push_str("LOOKUP_TABLE default\n");
            for v in values.iter() {
                let _ = writeln!(s, "{v:?}");
            }
        }
    }
    Ok(s)
}

pub fn export_vtk(mesh: &Mesh, fields: &[(&str, &[f64])], path: &Path) -> Result<()> {
    let s = vtk_string(mesh, fields)?;
    fs::write(path, s).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
