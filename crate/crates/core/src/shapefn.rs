//! Linear simplex shape functions: constant gradients, measure and centroid.
//!
//! Triangles live in the (r, z) plane (first two coordinates). The axisymmetric
//! 1/r term is not part of the gradient; it enters through the 2πr measure
//! weighting applied during assembly.

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCoefficients {
    grads: [[f64; 3]; 4],
    count: usize,
    measure: f64,
    centroid: Point,
}

impl GradientCoefficients {
    /// `∇N_i` per vertex; in 2D the components are `(b_i, c_i, 0)`.
    pub fn gradients(&self) -> &[[f64; 3]] {
        &self.grads[..self.count]
    }

    pub fn gradient(&self, i: usize) -> &[f64; 3] {
        &self.grads[..self.count][i]
    }

    /// Area (2D, in-plane) or volume; always positive.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn centroid(&self) -> &Point {
        &self.centroid
    }

    /// Mean radius of the vertices, `(r1 + r2 + r3) / 3` for a triangle.
    pub fn centroid_radius(&self) -> f64 {
        self.centroid[0]
    }
}

pub fn triangle_gradients(v: &[Point; 3]) -> Result<GradientCoefficients> {
    let area = geom::signed_area(&v[0], &v[1], &v[2]);
    let scale = longest_edge(v);
    if !(area.abs() > 1e-14 * scale * scale) {
        return Err(Error::DegenerateElement { element: usize::MAX, measure: area });
    }
    let two_a = 2.0 * area;
    let mut grads = [[0.0; 3]; 4];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        grads[i] = [(v[j][1] - v[k][1]) / two_a, (v[k][0] - v[j][0]) / two_a, 0.0];
    }
    Ok(GradientCoefficients {
        grads,
        count: 3,
        measure: area.abs(),
        centroid: geom::centroid(v),
    })
}

pub fn tet_gradients(v: &[Point; 4]) -> Result<GradientCoefficients> {
    let e1 = geom::sub(&v[1], &v[0]);
    let e2 = geom::sub(&v[2], &v[0]);
    let e3 = geom::sub(&v[3], &v[0]);
    let det = geom::dot(&e1, &geom::cross(&e2, &e3));
    let scale = longest_edge(v);
    if !(det.abs() > 6e-14 * scale.powi(3)) {
        return Err(Error::DegenerateElement { element: usize::MAX, measure: det / 6.0 });
    }
    let g1 = geom::scale(&geom::cross(&e2, &e3), 1.0 / det);
    let g2 = geom::scale(&geom::cross(&e3, &e1), 1.0 / det);
    let g3 = geom::scale(&geom::cross(&e1, &e2), 1.0 / det);
    let g0 = [-(g1[0] + g2[0] + g3[0]), -(g1[1] + g2[1] + g3[1]), -(g1[2] + g2[2] + g3[2])];
    Ok(GradientCoefficients {
        grads: [g0, g1, g2, g3],
        count: 4,
        measure: det.abs() / 6.0,
        centroid: geom::centroid(v),
    })
}

fn longest_edge(v: &[Point]) -> f64 {
    let mut l: f64 = 0.0;
    for a in 0..v.len() {
        for b in a + 1..v.len() {
            l = l.max(geom::distance(&v[a], &v[b]));
        }
    }
    l
}

pub fn element_gradients(mesh: &Mesh, e: usize) -> Result<GradientCoefficients> {
    let el = mesh.element(e);
    let p = |i: usize| *mesh.node(el[i]);
    let result = if el.len() == 3 {
        triangle_gradients(&[p(0), p(1), p(2)])
    } else {
        tet_gradients(&[p(0), p(1), p(2), p(3)])
    };
    result.map_err(|err| match err {
        Error::DegenerateElement { measure, .. } => Error::DegenerateElement { element: e, measure },
        other => other,
    })
}

/// Gradient data for every element, in element order.
pub fn all_element_gradients(mesh: &Mesh) -> Result<Vec<GradientCoefficients>> {
    (0..mesh.element_count()).map(|e| element_gradients(mesh, e)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Barycentric coordinate of vertex `i` at `x`, from measure ratios.
    fn barycentric(v: &[Point], i: usize, x: &Point) -> f64 {
        let mut w = v.to_vec();
        w[i] = *x;
        if v.len() == 3 {
            geom::signed_area(&w[0], &w[1], &w[2]) / geom::signed_area(&v[0], &v[1], &v[2])
        } else {
            geom::signed_volume(&w[0], &w[1], &w[2], &w[3]) / geom::signed_volume(&v[0], &v[1], &v[2], &v[3])
        }
    }

    /// Central finite differences of the barycentric interpolant at the centroid.
    fn fd_gradient(v: &[Point], i: usize, dim: usize) -> [f64; 3] {
        let c = geom::centroid(v);
        let h = 1e-5 * longest_edge(v);
        let mut g = [0.0; 3];
        for (d, gd) in g.iter_mut().enumerate().take(dim) {
            let mut plus = c;
            let mut minus = c;
            plus[d] += h;
            minus[d] -= h;
            *gd = (barycentric(v, i, &plus) - barycentric(v, i, &minus)) / (2.0 * h);
        }
        g
    }

    #[test]
    fn reference_triangle() {
        let g = triangle_gradients(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(g.gradients(), &[[-1.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert_eq!(g.measure(), 0.5);
        assert!((g.centroid_radius() - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn triangle_against_finite_differences() {
        let v = [[1.0, 1.0, 0.0], [3.0, 1.0, 0.0], [1.0, 4.0, 0.0]];
        let g = triangle_gradients(&v).unwrap();
        assert_eq!(g.measure(), 3.0);
        for i in 0..3 {
            let fd = fd_gradient(&v, i, 2);
            for d in 0..2 {
                assert!((g.gradient(i)[d] - fd[d]).abs() < 1e-9, "{i} {d}");
            }
        }
        // frozen from the finite-difference oracle
        assert!((g.gradient(0)[0] + 0.5).abs() < 1e-15);
        assert!((g.gradient(0)[1] + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn reference_tet() {
        let g = tet_gradients(&[[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(
            g.gradients(),
            &[[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        );
        assert!((g.measure() - 1.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn degenerate_elements_rejected() {
        assert!(triangle_gradients(&[[0.0; 3], [1.0, 1.0, 0.0], [2.0, 2.0, 0.0]]).is_err());
        assert!(tet_gradients(&[[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]).is_err());
    }

    fn point3() -> impl Strategy<Value = Point> {
        prop::array::uniform3(-1.0f64..1.0)
    }

    proptest! {
        #[test]
        fn tet_matches_finite_differences(v in prop::array::uniform4(point3())) {
            let vol = geom::signed_volume(&v[0], &v[1], &v[2], &v[3]).abs();
            prop_assume!(vol > 0.02);
            let g = tet_gradients(&v).unwrap();
            for i in 0..4 {
                let fd = fd_gradient(&v, i, 3);
                let scale = g.gradients().iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
                for d in 0..3 {
                    prop_assert!((g.gradient(i)[d] - fd[d]).abs() <= 1e-8 * scale);
                }
            }
        }

        #[test]
        fn partition_of_unity_and_linear_reproduction(
            v in prop::array::uniform4(point3()),
            a in -3.0f64..3.0,
            grad in point3(),
        ) {
            let vol = geom::signed_volume(&v[0], &v[1], &v[2], &v[3]).abs();
            prop_assume!(vol > 0.02);
            let g = tet_gradients(&v).unwrap();
            let mut sum = [0.0; 3];
            let mut reproduced = [0.0; 3];
            for i in 0..4 {
                let value = a + geom::dot(&grad, &v[i]);
                for d in 0..3 {
                    sum[d] += g.gradient(i)[d];
                    reproduced[d] += value * g.gradient(i)[d];
                }
            }
            let scale = g.gradients().iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
            for d in 0..3 {
                prop_assert!(sum[d].abs() <= 1e-13 * scale);
                prop_assert!((reproduced[d] - grad[d]).abs() <= 1e-12 * (1.0 + a.abs()) * scale);
            }
            // permuting vertices does not change the reproduced gradient
            let p = [v[2], v[0], v[3], v[1]];
            let gp = tet_gradients(&p).unwrap();
            let mut rp = [0.0; 3];
            for i in 0..4 {
                let value = a + geom::dot(&grad, &p[i]);
                for d in 0..3 {
                    rp[d] += value * gp.gradient(i)[d];
                }
            }
            for d in 0..3 {
                prop_assert!((rp[d] - reproduced[d]).abs() <= 1e-12 * (1.0 + a.abs()) * scale);
            }
        }

        #[test]
        fn triangle_partition_of_unity(v in prop::array::uniform3(prop::array::uniform2(-1.0f64..1.0))) {
            let p = v.map(|q| [q[0], q[1], 0.0]);
            prop_assume!(geom::signed_area(&p[0], &p[1], &p[2]).abs() > 0.02);
            let g = triangle_gradients(&p).unwrap();
            let scale = g.gradients().iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
            for d in 0..2 {
                let s: f64 = g.gradients().iter().map(|x| x[d]).sum();
                prop_assert!(s.abs() <= 1e-13 * scale);
            }
        }
    }
}
