use crate::geom::{closest_on_segment, Mat2, Point};
use crate::scene::Scene;
use crate::{Error, Result};

use super::{merge_projection, BackendKind, Projection, ProjectionSet, SuperdiffFan, TAU_PROJ_EXACT, THETA_DEDUP};

/// Exact euclidean distance to the polygon, by per-edge projection.
#[derive(Clone, Debug)]
pub struct ExactField {
    scene: Scene,
    tau: f64,
    theta: f64,
}

impl ExactField {
    pub fn new(scene: Scene) -> Self {
        Self {
            scene,
            tau: TAU_PROJ_EXACT,
            theta: THETA_DEDUP,
        }
    }

    pub fn with_tolerances(scene: Scene, tau: f64, theta: f64) -> Self {
        Self { scene, tau, theta }
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Closest point and distance on edge `i`.
    #[inline]
    pub fn edge_projection(&self, x: &Point, i: usize) -> (Point, f64) {
        let (a, b) = self.scene.boundary().edge(i);
        let y = closest_on_segment(x, &a, &b);
        (y, (x - y).norm())
    }

    /// Distance to the nearest of the given edges, with its closest point.
    pub fn feature_distance(&self, x: &Point, features: &[usize]) -> (Point, f64) {
        features
            .iter()
            .map(|&i| self.edge_projection(x, i))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty feature list")
    }

    fn raw_distance(&self, x: &Point) -> f64 {
        let poly = self.scene.boundary();
        let mut best = f64::INFINITY;
        for (a, b) in poly.edges() {
            best = best.min((x - closest_on_segment(x, &a, &b)).norm_squared());
        }
        best.sqrt()
    }

    fn check_inside(&self, x: &Point) -> Result<f64> {
        if !x.x.is_finite() || !x.y.is_finite() || !self.scene.boundary().contains(x) {
            return Err(Error::OutsideDomain(x.x, x.y));
        }
        let d = self.raw_distance(x);
        if d <= 0.0 {
            return Err(Error::OutsideDomain(x.x, x.y));
        }
        Ok(d)
    }

    pub fn distance(&self, x: &Point) -> Result<f64> {
        self.check_inside(x)
    }

    pub fn project(&self, x: &Point) -> Result<ProjectionSet> {
        let delta = self.check_inside(x)?;
        let limit = delta * (1.0 + self.tau);
        let mut hits: Vec<(usize, Point, f64)> = (0..self.scene.boundary().len())
            .map(|i| {
                let (y, d) = self.edge_projection(x, i);
                (i, y, d)
            })
            .filter(|h| h.2 <= limit)
            .collect();
        hits.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
        let id = Mat2::identity();
        let mut projections = Vec::with_capacity(hits.len());
        for (i, y, d) in hits {
            let cand = Projection {
                point: y,
                distance: d,
                features: vec![i],
                ascent: (x - y) / d,
            };
            merge_projection(&mut projections, cand, &id, self.theta);
        }
        Ok(ProjectionSet {
            base: *x,
            delta,
            projections,
            backend: BackendKind::Exact,
        })
    }

    pub fn superdifferential(&self, x: &Point) -> Result<SuperdiffFan> {
        SuperdiffFan::from_projections(&self.project(x)?, &Mat2::identity())
    }
}
