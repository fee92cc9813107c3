use super::Mesh;

/// Unique mesh edges with the elements incident to each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeTopology {
    edges: Vec<[usize; 2]>,
    incident: Vec<Vec<usize>>,
    element_edges: Vec<usize>,
    edges_per_element: usize,
}

impl EdgeTopology {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted endpoint pairs in lexicographic order.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge(&self, k: usize) -> [usize; 2] {
        self.edges[k]
    }

    /// Elements containing edge `k`, ascending.
    pub fn incident_elements(&self, k: usize) -> &[usize] {
        &self.incident[k]
    }

    /// Edge indices of element `e` (3 for a triangle, 6 for a tetrahedron).
    pub fn element_edges(&self, e: usize) -> &[usize] {
        &self.element_edges[e * self.edges_per_element..(e + 1) * self.edges_per_element]
    }

    /// Index of the edge joining `a` and `b`, if any.
    pub fn find(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { [a, b] } else { [b, a] };
        self.edges.binary_search(&key).ok()
    }
}

/// Lists every unique vertex pair of every element. Edges are ordered
/// lexicographically by their sorted endpoints, so the result does not
/// depend on element order beyond the element indices in incidence lists.
pub fn extract_edges(mesh: &Mesh) -> EdgeTopology {
    let epe = mesh.mode().edges_per_element();
    let mut pairs: Vec<([usize; 2], usize)> = Vec::with_capacity(mesh.element_count() * epe);
    for (e, element) in mesh.elements().enumerate() {
        for a in 0..element.len() {
            for b in a + 1..element.len() {
                let (i, j) = (element[a], element[b]);
                pairs.push((if i < j { [i, j] } else { [j, i] }, e));
            }
        }
    }
    pairs.sort_unstable();

    let mut edges: Vec<[usize; 2]> = Vec::new();
    let mut incident: Vec<Vec<usize>> = Vec::new();
    for (pair, e) in pairs {
        if edges.last() != Some(&pair) {
            edges.push(pair);
            incident.push(Vec::new());
        }
        incident.last_mut().unwrap().push(e);
    }

    let mut element_edges = Vec::with_capacity(mesh.element_count() * epe);
    for element in mesh.elements() {
        for a in 0..element.len() {
            for b in a + 1..element.len() {
                let (i, j) = (element[a], element[b]);
                let key = if i < j { [i, j] } else { [j, i] };
                element_edges.push(edges.binary_search(&key).expect("edge was collected"));
            }
        }
    }

    EdgeTopology {
        edges,
        incident,
        element_edges,
        edges_per_element: epe,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mode;

    #[test]
    fn single_triangle() {
        let nodes = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let mesh = Mesh::new(Mode::Planar2D, nodes, vec![vec![0, 1, 2]], vec![]).unwrap();
        let topo = extract_edges(&mesh);
        assert_eq!(topo.edges(), &[[0, 1], [0, 2], [1, 2]]);
        assert!((0..3).all(|k| topo.incident_elements(k) == [0]));
    }

    #[test]
    fn single_tet() {
        let nodes = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mesh = Mesh::new(Mode::Cartesian3D, nodes, vec![vec![0, 1, 2, 3]], vec![]).unwrap();
        let topo = extract_edges(&mesh);
        assert_eq!(topo.edge_count(), 6);
        assert!((0..6).all(|k| topo.incident_elements(k) == [0]));
        assert_eq!(topo.find(3, 1), Some(topo.edges().iter().position(|e| *e == [1, 3]).unwrap()));
    }

    #[test]
    fn two_tets_sharing_a_face() {
        let nodes = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
        ];
        let mesh = Mesh::new(
            Mode::Cartesian3D,
            nodes,
            vec![vec![0, 1, 2, 3], vec![1, 2, 3, 4]],
            vec![],
        )
        .unwrap();
        let topo = extract_edges(&mesh);
        assert_eq!(topo.edge_count(), 9);
        for pair in [[1, 2], [1, 3], [2, 3]] {
            let k = topo.find(pair[0], pair[1]).unwrap();
            assert_eq!(topo.incident_elements(k), &[0, 1]);
        }
        let shared = (0..9).filter(|&k| topo.incident_elements(k).len() == 2).count();
        assert_eq!(shared, 3);
    }
}
