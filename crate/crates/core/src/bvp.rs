//! Boundary-value problem data.
//!
//! The operator is `-∇·(α ∇V) + β V = f` in every mode. In cylindrical mode the
//! divergence is the axisymmetric one, `(1/r) ∂r(r α ∂r V) + ∂z(α ∂z V)`.
//! Boundary conditions follow `a ∂V/∂n + γ V = q` per boundary tag.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mesh::{Mesh, Mode};
use crate::shapefn::all_element_gradients;

pub type PositionFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// A scalar given as a constant, one value per element, or a function of position.
#[derive(Clone)]
pub enum Field {
    Constant(f64),
    PerElement(Vec<f64>),
    Function(PositionFn),
}

impl Field {
    pub fn function(f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Field {
        Field::Function(Arc::new(f))
    }

    /// Value at a point; `None` for per-element data.
    pub fn at(&self, x: &Point) -> Option<f64> {
        match self {
            Field::Constant(c) => Some(*c),
            Field::Function(f) => Some(f(x)),
            Field::PerElement(_) => None,
        }
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Constant(c) => write!(f, "Constant({c})"),
            Field::PerElement(v) => write!(f, "PerElement(len {})", v.len()),
            Field::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Field::Constant(a), Field::Constant(b)) => a.to_bits() == b.to_bits(),
            (Field::PerElement(a), Field::PerElement(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (Field::Function(a), Field::Function(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Robin,
}

/// `a ∂V/∂n + γ V = q` on every facet carrying `tag`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    pub tag: i32,
    pub a: f64,
    pub gamma: f64,
    pub q: Field,
}

impl BoundaryCondition {
    /// `V = value` (stored as `a = 0, γ = 1, q = value`).
    pub fn dirichlet(tag: i32, value: Field) -> Self {
        BoundaryCondition { tag, a: 0.0, gamma: 1.0, q: value }
    }

    /// `∂V/∂n = flux` (stored as `a = 1, γ = 0, q = flux`).
    pub fn neumann(tag: i32, flux: Field) -> Self {
        BoundaryCondition { tag, a: 1.0, gamma: 0.0, q: flux }
    }

    pub fn robin(tag: i32, a: f64, gamma: f64, q: Field) -> Self {
        BoundaryCondition { tag, a, gamma, q }
    }

    pub fn kind(&self) -> Option<BoundaryKind> {
        match (self.a != 0.0, self.gamma != 0.0) {
            (false, true) => Some(BoundaryKind::Dirichlet),
            (true, false) => Some(BoundaryKind::Neumann),
            (true, true) => Some(BoundaryKind::Robin),
            (false, false) => None,
        }
    }

    /// Prescribed potential of a Dirichlet condition at `x`, `q/γ`.
    pub fn dirichlet_value(&self, x: &Point) -> f64 {
        self.q.at(x).expect("validated boundary datum") / self.gamma
    }
}

/// Affine potential `V(x) = constant + gradient · x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub constant: f64,
    pub gradient: [f64; 3],
}

impl Affine {
    pub fn eval(&self, x: &Point) -> f64 {
        self.constant + self.gradient[0] * x[0] + self.gradient[1] * x[1] + self.gradient[2] * x[2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvpSpec {
    pub mode: Mode,
    /// Isotropic material coefficient, > 0.
    pub alpha: Field,
    /// Reaction coefficient, ≥ 0.
    pub beta: Field,
    pub source: Field,
    pub boundary_conditions: Vec<BoundaryCondition>,
}

impl BvpSpec {
    /// `-∇·∇V = 0` with no boundary conditions yet.
    pub fn laplace(mode: Mode) -> Self {
        BvpSpec {
            mode,
            alpha: Field::Constant(1.0),
            beta: Field::Constant(0.0),
            source: Field::Constant(0.0),
            boundary_conditions: Vec::new(),
        }
    }

    pub fn with_condition(mut self, bc: BoundaryCondition) -> Self {
        self.boundary_conditions.push(bc);
        self
    }

    /// Checks the spec against `mesh` and resolves per-element coefficients
    /// (functions are sampled at element centroids). Untagged boundary facets
    /// and tags without a condition are natural (homogeneous Neumann).
    pub fn validate(&self, mesh: &Mesh) -> Result<CheckedBvp> {
        if self.mode != mesh.mode() {
            return Err(Error::InvalidSpec(format!(
                "spec is for {} but the mesh is {}",
                self.mode.name(),
                mesh.mode().name()
            )));
        }
        let geometry = all_element_gradients(mesh)?;
        let centroids: Vec<Point> = geometry.iter().map(|g| *g.centroid()).collect();
        let alpha = resolve("alpha", &self.alpha, &centroids)?;
        let beta = resolve("beta", &self.beta, &centroids)?;
        let source = resolve("source", &self.source, &centroids)?;
        if let Some(e) = alpha.iter().position(|&a| !(a > 0.0)) {
            return Err(Error::InvalidSpec(format!("alpha must be positive, element {e} has {}", alpha[e])));
        }
        if let Some(e) = beta.iter().position(|&b| !(b >= 0.0)) {
            return Err(Error::InvalidSpec(format!("beta must be non-negative, element {e} has {}", beta[e])));
        }

        let tags = mesh.boundary_tags();
        let mut conditions = self.boundary_conditions.clone();
        conditions.sort_by_key(|bc| bc.tag);
        for pair in conditions.windows(2) {
            if pair[0].tag == pair[1].tag {
                return Err(Error::InvalidSpec(format!("tag {} has two boundary conditions", pair[0].tag)));
            }
        }
        for bc in &conditions {
            if !tags.contains(&bc.tag) {
                return Err(Error::InvalidSpec(format!("boundary tag {} does not exist in the mesh", bc.tag)));
            }
            if bc.kind().is_none() {
                return Err(Error::InvalidSpec(format!(
                    "tag {}: a = 0 and gamma = 0 describe no boundary condition",
                    bc.tag
                )));
            }
            if !(bc.a.is_finite() && bc.gamma.is_finite()) {
                return Err(Error::InvalidSpec(format!("tag {}: non-finite coefficients", bc.tag)));
            }
            if matches!(bc.q, Field::PerElement(_)) {
                return Err(Error::InvalidSpec(format!(
                    "tag {}: boundary data must be a constant or a function of position",
                    bc.tag
                )));
            }
        }

        Ok(CheckedBvp {
            mode: self.mode,
            alpha,
            beta,
            source,
            conditions,
            mesh_fingerprint: mesh.fingerprint(),
        })
    }
}

fn resolve(name: &str, field: &Field, centroids: &[Point]) -> Result<Vec<f64>> {
    let values: Vec<f64> = match field {
        Field::Constant(c) => vec![*c; centroids.len()],
        Field::PerElement(v) => {
            if v.len() != centroids.len() {
                return Err(Error::InvalidSpec(format!(
                    "{name} has {} values for {} elements",
                    v.len(),
                    centroids.len()
                )));
            }
            v.clone()
        }
        Field::Function(f) => centroids.iter().map(|c| f(c)).collect(),
    };
    if let Some(e) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec(format!("{name} is not finite on element {e}")));
    }
    Ok(values)
}

/// A spec validated against one mesh, with per-element coefficients resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedBvp {
    pub mode: Mode,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub source: Vec<f64>,
    /// Sorted by tag.
    pub conditions: Vec<BoundaryCondition>,
    pub(crate) mesh_fingerprint: u64,
}

impl CheckedBvp {
    pub fn condition(&self, tag: i32) -> Option<&BoundaryCondition> {
        self.conditions
            .binary_search_by_key(&tag, |bc| bc.tag)
            .ok()
            .map(|i| &self.conditions[i])
    }

    pub fn has_reaction(&self) -> bool {
        self.beta.iter().any(|&b| b != 0.0)
    }

    /// The resolved data as a spec again (per-element coefficients).
    pub fn to_spec(&self) -> BvpSpec {
        BvpSpec {
            mode: self.mode,
            alpha: Field::PerElement(self.alpha.clone()),
            beta: Field::PerElement(self.beta.clone()),
            source: Field::PerElement(self.source.clone()),
            boundary_conditions: self.conditions.clone(),
        }
    }
}

/// Top-face potential of the cube benchmark, `10 sin(πx) sin(πy)`.
pub fn box_top_potential(x: &Point) -> f64 {
    10.0 * (PI * x[0]).sin() * (PI * x[1]).sin()
}

/// Unit-cube benchmark: Laplace equation, top face (tag 6) held at
/// `10 sin(πx) sin(πy)`, the other five faces at 0.
pub fn box_benchmark() -> BvpSpec {
    let mut spec = BvpSpec::laplace(Mode::Cartesian3D);
    for tag in 1..=5 {
        spec = spec.with_condition(BoundaryCondition::dirichlet(tag, Field::Constant(0.0)));
    }
    spec.with_condition(BoundaryCondition::dirichlet(6, Field::function(box_top_potential)))
}

/// Laplace problem with the affine field imposed on every boundary tag of `mesh`.
pub fn affine_patch(mesh: &Mesh, field: Affine) -> BvpSpec {
    let mut spec = BvpSpec::laplace(mesh.mode());
    for tag in mesh.boundary_tags() {
        spec = spec.with_condition(BoundaryCondition::dirichlet(tag, Field::function(move |x| field.eval(x))));
    }
    spec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured_mesh, Extents};

    fn cube() -> Mesh {
        generate_structured_mesh(Mode::Cartesian3D, &[2], &Extents::unit()).unwrap()
    }

    #[test]
    fn all_dirichlet_is_valid() {
        let mut spec = BvpSpec::laplace(Mode::Cartesian3D);
        for tag in 1..=6 {
            spec = spec.with_condition(BoundaryCondition::dirichlet(tag, Field::Constant(0.0)));
        }
        let checked = spec.validate(&cube()).unwrap();
        assert_eq!(checked.conditions.len(), 6);
        assert!(checked.conditions.iter().all(|bc| bc.kind() == Some(BoundaryKind::Dirichlet)));
    }

    #[test]
    fn no_condition_type_rejected() {
        let spec = BvpSpec::laplace(Mode::Cartesian3D).with_condition(BoundaryCondition::robin(
            1,
            0.0,
            0.0,
            Field::Constant(1.0),
        ));
        assert!(matches!(spec.validate(&cube()), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn kinds_follow_coefficients() {
        assert_eq!(BoundaryCondition::dirichlet(1, Field::Constant(2.0)).kind(), Some(BoundaryKind::Dirichlet));
        assert_eq!(BoundaryCondition::neumann(1, Field::Constant(2.0)).kind(), Some(BoundaryKind::Neumann));
        assert_eq!(BoundaryCondition::robin(1, 2.0, 3.0, Field::Constant(0.0)).kind(), Some(BoundaryKind::Robin));
        let bc = BoundaryCondition::robin(1, 0.0, 4.0, Field::Constant(2.0));
        assert_eq!(bc.dirichlet_value(&[0.0; 3]), 0.5);
    }

    #[test]
    fn box_benchmark_is_valid() {
        let mesh = cube();
        let checked = box_benchmark().validate(&mesh).unwrap();
        let top = checked.condition(6).unwrap();
        assert_eq!(top.dirichlet_value(&[0.5, 0.5, 1.0]), 10.0);
        for tag in 1..=5 {
            assert_eq!(checked.condition(tag).unwrap().dirichlet_value(&[0.3, 0.2, 0.1]), 0.0);
        }
    }

    #[test]
    fn rejects_unknown_tag_and_bad_alpha() {
        let mesh = cube();
        let spec = BvpSpec::laplace(Mode::Cartesian3D).with_condition(BoundaryCondition::dirichlet(9, Field::Constant(0.0)));
        assert!(spec.validate(&mesh).is_err());
        let mut spec = BvpSpec::laplace(Mode::Cartesian3D);
        spec.alpha = Field::Constant(0.0);
        assert!(spec.validate(&mesh).is_err());
        let mut spec = BvpSpec::laplace(Mode::Cartesian3D);
        spec.alpha = Field::PerElement(vec![1.0; 3]);
        assert!(spec.validate(&mesh).is_err());
        assert!(BvpSpec::laplace(Mode::Cylindrical2D).validate(&mesh).is_err());
    }

    #[test]
    fn revalidation_is_identical() {
        let mesh = cube();
        let mut spec = box_benchmark();
        spec.alpha = Field::function(|x| 1.0 + x[0]);
        spec.source = Field::Constant(2.0);
        let first = spec.validate(&mesh).unwrap();
        let second = first.to_spec().validate(&mesh).unwrap();
        assert_eq!(first, second);
    }
}
