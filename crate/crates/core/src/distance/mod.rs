//! Distance to the domain boundary, nearest-point sets and superdifferential
//! fans.
//!
//! Two backends sit behind [`DistanceField`]: exact projection onto polygon
//! edges for the euclidean metric, and lattice geodesics for every other
//! metric. Both are immutable after construction and safe to query from many
//! threads.

pub mod exact;
pub mod lattice;

use serde::Serialize;

use crate::convexmin::{MinNormSolver, SimplexSolution};
use crate::geom::{metric_angle, Mat2, Point, Vec2};
use crate::scene::Scene;
use crate::Result;

pub use exact::ExactField;
pub use lattice::Lattice;

/// Threshold on `1 - s*` below which a point counts as singular.
pub const EPS_SING: f64 = 1e-3;
/// Generators closer than this angle (in the local metric) are merged.
pub const THETA_DEDUP: f64 = 1e-3;
/// Relative projection tolerance of the exact backend.
pub const TAU_PROJ_EXACT: f64 = 1e-6;
/// Eikonal saturation tolerance for generators.
pub const TOL_EIK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Exact,
    Lattice,
}

/// A boundary point achieving the distance within tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Projection {
    pub point: Point,
    pub distance: f64,
    /// Boundary edges realizing this projection (exact backend only).
    pub features: Vec<usize>,
    /// Unit-speed initial velocity of the minimizing path from the base point
    /// toward the boundary, negated: the direction in which distance grows.
    #[serde(skip)]
    pub(crate) ascent: Vec2,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionSet {
    pub base: Point,
    pub delta: f64,
    pub projections: Vec<Projection>,
    pub backend: BackendKind,
}

/// Generators of the superdifferential at a point together with the
/// minimal-norm selection.
#[derive(Clone, Debug, Serialize)]
pub struct SuperdiffFan {
    pub base: Point,
    pub delta: f64,
    pub generators: Vec<Vec2>,
    pub coefficients: Vec<f64>,
    pub min_norm_covector: Vec2,
    pub min_norm_velocity: Vec2,
    pub speed_sq: f64,
    pub singular: bool,
    /// Generator count and the speed test disagree.
    pub ambiguous: bool,
    #[serde(skip)]
    pub(crate) features: Vec<Vec<usize>>,
}

impl SuperdiffFan {
    fn from_projections(set: &ProjectionSet, a: &Mat2) -> Result<Self> {
        let generators: Vec<Vec2> = set.projections.iter().map(|p| a * p.ascent).collect();
        let solver = MinNormSolver::with_max_generators(generators.len().max(1));
        let SimplexSolution {
            coefficients,
            covector,
            velocity,
            speed_sq,
        } = solver.solve(&generators, a)?;
        let singular = speed_sq < 1.0 - EPS_SING;
        Ok(Self {
            base: set.base,
            delta: set.delta,
            ambiguous: (generators.len() >= 2) != singular,
            generators,
            coefficients,
            min_norm_covector: covector,
            min_norm_velocity: velocity,
            speed_sq,
            singular,
            features: set.projections.iter().map(|p| p.features.clone()).collect(),
        })
    }

    /// Indices of generators carrying weight in the selection.
    pub fn active(&self) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 1e-12)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Merges `ascent` into an existing projection when their angle in `a` falls
/// below `theta`; returns true if merged.
pub(crate) fn merge_projection(projections: &mut Vec<Projection>, candidate: Projection, a: &Mat2, theta: f64) -> bool {
    for p in projections.iter_mut() {
        if metric_angle(a, &p.ascent, &candidate.ascent) < theta {
            for f in candidate.features {
                if !p.features.contains(&f) {
                    p.features.push(f);
                }
            }
            return true;
        }
    }
    projections.push(candidate);
    false
}

pub enum DistanceField {
    Exact(ExactField),
    Lattice(Box<Lattice>),
}

impl DistanceField {
    /// Picks the exact backend for euclidean scenes and the lattice backend at
    /// the scene's `grid_h` otherwise.
    pub fn new(scene: &Scene) -> Self {
        if scene.metric().is_euclidean() {
            DistanceField::Exact(ExactField::new(scene.clone()))
        } else {
            DistanceField::Lattice(Box::new(Lattice::build(scene, scene.grid_h())))
        }
    }

    pub fn lattice(scene: &Scene, h: f64) -> Self {
        DistanceField::Lattice(Box::new(Lattice::build(scene, h)))
    }

    pub fn scene(&self) -> &Scene {
        match self {
            DistanceField::Exact(e) => e.scene(),
            DistanceField::Lattice(l) => l.scene(),
        }
    }

    pub fn backend(&self) -> BackendKind {
        match self {
            DistanceField::Exact(_) => BackendKind::Exact,
            DistanceField::Lattice(_) => BackendKind::Lattice,
        }
    }

    /// Numerical resolution of the backend: zero for exact projection.
    pub fn resolution(&self) -> f64 {
        match self {
            DistanceField::Exact(_) => 0.0,
            DistanceField::Lattice(l) => l.spacing(),
        }
    }

    pub fn metric_at(&self, x: &Point) -> Mat2 {
        self.scene().metric().eval(x)
    }

    pub fn distance(&self, x: &Point) -> Result<f64> {
        match self {
            DistanceField::Exact(e) => e.distance(x),
            DistanceField::Lattice(l) => l.distance(x),
        }
    }

    pub fn project(&self, x: &Point) -> Result<ProjectionSet> {
        match self {
            DistanceField::Exact(e) => e.project(x),
            DistanceField::Lattice(l) => l.project(x),
        }
    }

    pub fn superdifferential(&self, x: &Point) -> Result<SuperdiffFan> {
        let set = self.project(x)?;
        SuperdiffFan::from_projections(&set, &self.metric_at(x))
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.scene().contains(x)
    }
}

/// One-shot projection; builds a distance field for the scene.
pub fn project(scene: &Scene, x: &Point) -> Result<ProjectionSet> {
    DistanceField::new(scene).project(x)
}

/// One-shot superdifferential; builds a distance field for the scene.
pub fn superdifferential(scene: &Scene, x: &Point) -> Result<SuperdiffFan> {
    DistanceField::new(scene).superdifferential(x)
}
