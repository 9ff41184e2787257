//! The singular set as a point cloud, and the deformation `H(x, t) = g_x(tT)`
//! of the domain onto it.

use rayon::prelude::*;
use serde::Serialize;

use crate::distance::DistanceField;
use crate::flow::{integrate, is_singular};
use crate::geom::{pt, Point};
use crate::mintime::halton_interior;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SkeletonPoint {
    pub x: Point,
    pub speed_sq: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SkeletonCloud {
    pub points: Vec<SkeletonPoint>,
    pub resolution: usize,
    /// Grid spacing along x and y.
    pub spacing: (f64, f64),
    /// Grid nodes whose fan was ambiguous; not part of the cloud.
    pub ambiguous: usize,
}

impl SkeletonCloud {
    pub fn positions(&self) -> Vec<Point> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn cell(&self) -> f64 {
        self.spacing.0.max(self.spacing.1)
    }
}

/// Flags the singular nodes of a `resolution x resolution` grid spanning the
/// bounding box, corners included.
pub fn extract_skeleton(field: &DistanceField, resolution: usize) -> Result<SkeletonCloud> {
    if resolution < 16 {
        return Err(Error::InvalidArgument(format!(
            "skeleton resolution must be at least 16, got {resolution}"
        )));
    }
    let (lo, hi) = field.scene().boundary().bbox();
    let hx = (hi.x - lo.x) / (resolution - 1) as f64;
    let hy = (hi.y - lo.y) / (resolution - 1) as f64;
    let scan: Vec<(Option<SkeletonPoint>, bool)> = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let x = pt(lo.x + (k % resolution) as f64 * hx, lo.y + (k / resolution) as f64 * hy);
            match field.superdifferential(&x) {
                Ok(fan) if fan.singular => (
                    Some(SkeletonPoint {
                        x,
                        speed_sq: fan.speed_sq,
                        delta: fan.delta,
                    }),
                    false,
                ),
                Ok(fan) => (None, fan.ambiguous),
                Err(_) => (None, false),
            }
        })
        .collect();
    Ok(SkeletonCloud {
        ambiguous: scan.iter().filter(|s| s.1).count(),
        points: scan.into_iter().filter_map(|s| s.0).collect(),
        resolution,
        spacing: (hx, hy),
    })
}

/// `T = 2 diam`.
pub fn horizon(field: &DistanceField) -> f64 {
    2.0 * field.scene().diameter()
}

/// `H(x, t) = g_x(t T)` with `T = 2 diam`; `H(x, 0) = x` exactly.
pub fn homotopy_map(field: &DistanceField, x: &Point, t: f64, dt: f64) -> Result<Point> {
    homotopy_map_with_horizon(field, x, t, dt, horizon(field))
}

pub fn homotopy_map_with_horizon(field: &DistanceField, x: &Point, t: f64, dt: f64, big_t: f64) -> Result<Point> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "homotopy parameter must be in [0, 1], got {t}"
        )));
    }
    if !field.contains(x) {
        return Err(Error::OutsideDomain(x.x, x.y));
    }
    if t == 0.0 {
        return Ok(*x);
    }
    Ok(integrate(field, x, t * big_t, dt)?.end().x)
}

#[derive(Clone, Debug, Serialize)]
pub struct RetractionReport {
    pub samples: usize,
    pub skeleton_samples: usize,
    pub horizon: f64,
    pub diameter: f64,
    /// `H(x, 0) = x` held bit for bit on every sample.
    pub identity_exact: bool,
    /// Interior samples with `H(x, 1)` singular.
    pub fraction_endpoint_singular: f64,
    /// Skeleton samples with `H(y, t)` singular at every tested `t`.
    pub fraction_skeleton_invariant: f64,
    /// `max |H_dt(x, 1) - H_{dt/2}(x, 1)|` over interior samples.
    pub max_endpoint_drift: f64,
    /// Longest time an interior sample stayed regular.
    pub max_regular_time: f64,
}

pub const RETRACTION_TIMES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Checks that `H` fixes the domain at `t = 0`, lands in the singular set at
/// `t = 1`, and keeps the singular set inside itself, on `n_samples` Halton
/// points and as many skeleton points from a grid scan at `skeleton_res`.
pub fn check_retraction(
    field: &DistanceField,
    n_samples: usize,
    dt: f64,
    skeleton_res: usize,
) -> Result<RetractionReport> {
    let diameter = field.scene().diameter();
    let big_t = 2.0 * diameter;
    if n_samples == 0 {
        return Ok(RetractionReport {
            samples: 0,
            skeleton_samples: 0,
            horizon: big_t,
            diameter,
            identity_exact: true,
            fraction_endpoint_singular: 1.0,
            fraction_skeleton_invariant: 1.0,
            max_endpoint_drift: 0.0,
            max_regular_time: 0.0,
        });
    }
    let interior = halton_interior(field.scene(), n_samples);
    let cloud = extract_skeleton(field, skeleton_res)?;
    let skeleton: Vec<Point> = if cloud.points.is_empty() {
        Vec::new()
    } else {
        (0..n_samples)
            .map(|k| cloud.points[k * cloud.points.len() / n_samples].x)
            .collect()
    };

    let interior_results: Vec<(bool, bool, f64, f64)> = interior
        .par_iter()
        .map(|x| -> Result<_> {
            let identity = homotopy_map_with_horizon(field, x, 0.0, dt, big_t)? == *x;
            let tr = integrate(field, x, big_t, dt)?;
            let fine = integrate(field, x, big_t, 0.5 * dt)?;
            let end = tr.end().x;
            let singular = is_singular(field, &end)?.singular;
            let regular_time = tr.first_singular_time().unwrap_or(f64::INFINITY);
            Ok((identity, singular, (end - fine.end().x).norm(), regular_time))
        })
        .collect::<Result<_>>()?;

    let skeleton_results: Vec<bool> = skeleton
        .par_iter()
        .map(|y| -> Result<bool> {
            let tr = integrate(field, y, big_t, dt)?;
            for t in RETRACTION_TIMES {
                let p = if t == 0.0 { *y } else { tr.position_at(t * big_t) };
                if !is_singular(field, &p)?.singular {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect::<Result<_>>()?;

    let frac = |hits: usize, n: usize| if n == 0 { 1.0 } else { hits as f64 / n as f64 };
    Ok(RetractionReport {
        samples: interior.len(),
        skeleton_samples: skeleton.len(),
        horizon: big_t,
        diameter,
        identity_exact: interior_results.iter().all(|r| r.0),
        fraction_endpoint_singular: frac(interior_results.iter().filter(|r| r.1).count(), interior.len()),
        fraction_skeleton_invariant: frac(skeleton_results.iter().filter(|&&b| b).count(), skeleton.len()),
        max_endpoint_drift: interior_results.iter().map(|r| r.2).fold(0.0, f64::max),
        max_regular_time: interior_results.iter().map(|r| r.3).fold(0.0, f64::max),
    })
}

/// Symmetric Hausdorff distance between two point sets (infinite if exactly
/// one is empty).
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let one_way = |p: &[Point], q: &[Point]| {
        p.par_iter()
            .map(|x| q.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
            .reduce(|| 0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn square_skeleton_is_the_diagonals() {
        let field = DistanceField::new(&shapes::square_scene());
        let cloud = extract_skeleton(&field, 33).unwrap();
        assert!(!cloud.points.is_empty());
        for p in &cloud.points {
            assert!((p.x.x.abs() - p.x.y.abs()).abs() < 1e-12, "{:?}", p.x);
            assert!(p.speed_sq < 1.0 - crate::distance::EPS_SING);
        }
    }

    #[test]
    fn homotopy_endpoints() {
        let field = DistanceField::new(&shapes::square_scene());
        let x = pt(0.5, 0.1);
        assert_eq!(homotopy_map(&field, &x, 0.0, 1e-3).unwrap(), x);
        assert!(homotopy_map(&field, &x, 1.0, 1e-3).unwrap().coords.norm() < 1e-3);
        for t in [0.01, 0.05, 0.1] {
            let y = homotopy_map(&field, &pt(0.4, 0.4), t, 1e-3).unwrap();
            assert!((y.x - y.y).abs() < 1e-9);
        }
        assert!(homotopy_map(&field, &x, 1.5, 1e-3).is_err());
    }

    #[test]
    fn empty_retraction_is_vacuous() {
        let field = DistanceField::new(&shapes::square_scene());
        let r = check_retraction(&field, 0, 1e-2, 33).unwrap();
        assert_eq!(r.samples, 0);
        assert_eq!(r.fraction_endpoint_singular, 1.0);
        assert_eq!(r.fraction_skeleton_invariant, 1.0);
    }

    #[test]
    fn small_square_retraction() {
        let field = DistanceField::new(&shapes::square_scene());
        let r = check_retraction(&field, 20, 1e-2, 33).unwrap();
        assert!(r.identity_exact);
        assert_eq!(r.fraction_endpoint_singular, 1.0);
        assert_eq!(r.fraction_skeleton_invariant, 1.0);
        assert!(r.max_regular_time <= r.diameter);
    }

    #[test]
    fn hausdorff_basics() {
        let a = [pt(0.0, 0.0), pt(1.0, 0.0)];
        let b = [pt(0.0, 0.5)];
        assert!((hausdorff(&a, &b) - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!(hausdorff(&[], &[]), 0.0);
    }
}
