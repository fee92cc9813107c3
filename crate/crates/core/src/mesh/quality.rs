use serde::Serialize;

use super::{extract_edges, Mesh};
use crate::geom;

/// Lower edges of the ratio histogram bins; the last bin is open-ended.
pub const RATIO_BIN_EDGES: [f64; 7] = [1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0];

/// Element shape statistics: longest over shortest edge per element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub per_element_ratio: Vec<f64>,
    /// Element counts per bin of [`RATIO_BIN_EDGES`].
    pub histogram: Vec<usize>,
    /// Mean length over all unique edges.
    pub mean_edge_length: f64,
}

impl QualityReport {
    /// Share of elements whose ratio strictly exceeds `threshold`.
    pub fn fraction_above(&self, threshold: f64) -> f64 {
        let n = self.per_element_ratio.iter().filter(|&&r| r > threshold).count();
        n as f64 / self.per_element_ratio.len() as f64
    }

    pub fn max_ratio(&self) -> f64 {
        self.per_element_ratio.iter().copied().fold(1.0, f64::max)
    }

    /// `(lower, upper)` bounds of bin `i`; the last upper bound is infinite.
    pub fn bin_bounds(i: usize) -> (f64, f64) {
        let lo = RATIO_BIN_EDGES[i];
        let hi = RATIO_BIN_EDGES.get(i + 1).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }
}

pub fn quality(mesh: &Mesh) -> QualityReport {
    let mut per_element_ratio = Vec::with_capacity(mesh.element_count());
    let mut histogram = vec![0usize; RATIO_BIN_EDGES.len()];
    for element in mesh.elements() {
        let mut longest: f64 = 0.0;
        let mut shortest = f64::INFINITY;
        for (a, &i) in element.iter().enumerate() {
            for &j in &element[a + 1..] {
                let l = geom::distance(mesh.node(i), mesh.node(j));
                longest = longest.max(l);
                shortest = shortest.min(l);
            }
        }
        let ratio = longest / shortest;
        let bin = RATIO_BIN_EDGES.iter().rposition(|&lo| ratio >= lo).unwrap_or(0);
        histogram[bin] += 1;
        per_element_ratio.push(ratio);
    }

    let topo = extract_edges(mesh);
    let total: f64 = topo
        .edges()
        .iter()
        .map(|&[a, b]| geom::distance(mesh.node(a), mesh.node(b)))
        .sum();

    QualityReport {
        per_element_ratio,
        histogram,
        mean_edge_length: total / topo.edge_count() as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mode;

    fn triangle(p: [[f64; 2]; 3]) -> Mesh {
        let nodes = p.iter().map(|q| [q[0], q[1], 0.0]).collect();
        Mesh::new(Mode::Planar2D, nodes, vec![vec![0, 1, 2]], vec![]).unwrap()
    }

    #[test]
    fn equilateral_ratio_is_one() {
        let q = quality(&triangle([[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]));
        assert!((q.per_element_ratio[0] - 1.0).abs() < 1e-15);
        assert_eq!(q.histogram[0], 1);
        assert!((q.mean_edge_length - 1.0).abs() < 1e-15);
    }

    #[test]
    fn right_triangle_ratio_is_sqrt2() {
        let q = quality(&triangle([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]));
        assert_eq!(q.per_element_ratio[0], 2f64.sqrt());
        assert_eq!(q.histogram.iter().sum::<usize>(), 1);
        assert_eq!(q.fraction_above(2.0), 0.0);
    }
}
