//! Generalized characteristics `x' = A^{-1}(x) p*(x)` of the distance
//! function, with `p*` the minimal-norm element of the superdifferential, and
//! the quantitative checks that go with them.

use rayon::prelude::*;
use serde::Serialize;

use crate::distance::{BackendKind, DistanceField, ExactField, SuperdiffFan, EPS_SING, THETA_DEDUP, TOL_EIK};
use crate::geom::{Point, Vec2};
use crate::{Error, Result};

/// Stationarity threshold on `s*`.
pub const EPS_HALT: f64 = 1e-6;
/// Steps are capped at `C_CFL * delta`.
pub const C_CFL: f64 = 0.1;
/// Slack on the logistic speed bound.
pub const TOL_BOUND: f64 = 1e-6;
/// Projection band used for the fans that drive the exact integrator. Wider
/// bands admit near-tie edges whose generators do not govern the growth of
/// `delta`.
pub const TAU_FLOW: f64 = 1e-12;
/// Largest admissible base step.
pub const DT_MAX: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: Point,
    pub v: Vec2,
    pub delta: f64,
    pub speed_sq: f64,
    pub singular: bool,
    pub ambiguous: bool,
}

impl Sample {
    fn from_fan(t: f64, fan: &SuperdiffFan) -> Self {
        Self {
            t,
            x: fan.base,
            v: fan.min_norm_velocity,
            delta: fan.delta,
            speed_sq: fan.speed_sq,
            singular: fan.singular,
            ambiguous: fan.ambiguous,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StepPolicy {
    pub dt: f64,
    pub c_cfl: f64,
    pub backend: BackendKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub t_max: f64,
    pub policy: StepPolicy,
    /// Stopped at a critical point and continued as a constant arc.
    pub halted: bool,
}

impl Trajectory {
    pub fn start(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn end(&self) -> &Sample {
        self.samples.last().expect("trajectories are never empty")
    }

    /// Position at time `t`, linear between samples and constant past the end.
    pub fn position_at(&self, t: f64) -> Point {
        let s = &self.samples;
        let k = s.partition_point(|p| p.t <= t);
        if k == 0 {
            return s[0].x;
        }
        if k == s.len() {
            return s[k - 1].x;
        }
        let (a, b) = (&s[k - 1], &s[k]);
        let w = (t - a.t) / (b.t - a.t);
        a.x + (b.x - a.x) * w
    }

    /// Sample in force at time `t` (the last one with `t_k <= t`).
    pub fn sample_at(&self, t: f64) -> &Sample {
        let k = self.samples.partition_point(|p| p.t <= t);
        &self.samples[k.saturating_sub(1)]
    }

    pub fn first_singular(&self) -> Option<usize> {
        self.samples.iter().position(|s| s.singular)
    }

    pub fn first_singular_time(&self) -> Option<f64> {
        self.first_singular().map(|k| self.samples[k].t)
    }

    /// Index of the first regular sample after a singular one.
    pub fn singular_exit(&self) -> Option<usize> {
        let k = self.first_singular()?;
        self.samples[k..].iter().position(|s| !s.singular).map(|j| j + k)
    }

    /// The trajectory from its first singular sample on, with time shifted to
    /// start at zero.
    pub fn singular_tail(&self) -> Option<Trajectory> {
        let k = self.first_singular()?;
        let t0 = self.samples[k].t;
        Some(Trajectory {
            samples: self.samples[k..].iter().map(|s| Sample { t: s.t - t0, ..*s }).collect(),
            t_max: self.t_max - t0,
            policy: self.policy.clone(),
            halted: self.halted,
        })
    }

    /// Largest `delta` decrease between consecutive samples (zero if
    /// nondecreasing).
    pub fn max_delta_drop(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[0].delta - w[1].delta)
            .fold(0.0, f64::max)
    }

    /// `max_k |(delta_{k+1} - delta_k) / (t_{k+1} - t_k) - s_k|`.
    pub fn derivative_defect(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| ((w[1].delta - w[0].delta) / (w[1].t - w[0].t) - w[0].speed_sq).abs())
            .fold(0.0, f64::max)
    }

    /// Largest increase of `speed_sq` between consecutive samples. The exact
    /// selection only jumps downward, so this should stay of order `dt`.
    pub fn max_speed_rise(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[1].speed_sq - w[0].speed_sq)
            .fold(0.0, f64::max)
    }

    pub fn ambiguous_count(&self) -> usize {
        self.samples.iter().filter(|s| s.ambiguous).count()
    }
}

/// Three-way singularity verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Singularity {
    Regular,
    Singular,
    /// Generator count and speed test disagree.
    Ambiguous,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SingularTest {
    pub status: Singularity,
    pub singular: bool,
    pub speed_sq: f64,
}

pub fn is_singular(field: &DistanceField, x: &Point) -> Result<SingularTest> {
    let fan = field.superdifferential(x)?;
    let status = match (fan.ambiguous, fan.singular) {
        (true, _) => Singularity::Ambiguous,
        (false, true) => Singularity::Singular,
        (false, false) => Singularity::Regular,
    };
    Ok(SingularTest {
        status,
        singular: fan.singular,
        speed_sq: fan.speed_sq,
    })
}

/// Integrates from `x0` up to `t_max` with base step `dt`.
///
/// Each step is `min(dt, C_CFL * delta)`. On the exact backend the step is
/// shortened to land on the first boundary-feature switch along the way, and
/// points on a two-sheet ridge are pulled back onto it after each step.
pub fn integrate(field: &DistanceField, x0: &Point, t_max: f64, dt: f64) -> Result<Trajectory> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    if !(dt > 0.0) || dt > DT_MAX {
        return Err(Error::InvalidArgument(format!("dt must be in (0, {DT_MAX}], got {dt}")));
    }
    let policy = StepPolicy {
        dt,
        c_cfl: C_CFL,
        backend: field.backend(),
    };
    let tight = match field {
        DistanceField::Exact(e) => Some(ExactField::with_tolerances(e.scene().clone(), TAU_FLOW, THETA_DEDUP)),
        DistanceField::Lattice(_) => None,
    };
    let fan_at = |x: &Point| match &tight {
        Some(e) => e.superdifferential(x),
        None => field.superdifferential(x),
    };
    let mut fan = fan_at(x0)?;
    let mut t = 0.0;
    let mut samples = vec![Sample::from_fan(0.0, &fan)];
    let mut halted = false;
    let mut stalls = 0;
    loop {
        if fan.speed_sq < EPS_HALT {
            if t < t_max {
                samples.push(Sample {
                    t: t_max,
                    ..Sample::from_fan(t_max, &fan)
                });
            }
            halted = true;
            break;
        }
        let remaining = t_max - t;
        if remaining <= 0.0 {
            break;
        }
        let step = dt.min(C_CFL * fan.delta).min(remaining);
        let (taken, x1) = match &tight {
            Some(e) => exact_step(e, &fan, step, stalls >= 8),
            None => (step, fan.base + fan.min_norm_velocity * step),
        };
        if !field.contains(&x1) {
            return Err(Error::StepExitsDomain(fan.base.x, fan.base.y));
        }
        fan = fan_at(&x1).map_err(|_| Error::StepExitsDomain(fan.base.x, fan.base.y))?;
        if taken < 1e-6 * dt && taken < remaining {
            // a feature switch right at the current point: refresh in place
            stalls += 1;
            *samples.last_mut().expect("non-empty") = Sample::from_fan(t, &fan);
            continue;
        }
        stalls = 0;
        t = if taken == remaining { t_max } else { t + taken };
        samples.push(Sample::from_fan(t, &fan));
    }
    Ok(Trajectory {
        samples,
        t_max,
        policy,
        halted,
    })
}

fn active_groups(fan: &SuperdiffFan) -> Vec<&[usize]> {
    fan.active().into_iter().map(|i| fan.features[i].as_slice()).collect()
}

/// Newton projection onto `{d1 = d2}` for a two-sheet ridge.
fn ridge_project(e: &ExactField, groups: &[&[usize]], mut x: Point) -> Point {
    if groups.len() != 2 {
        return x;
    }
    for _ in 0..3 {
        let (y1, d1) = e.feature_distance(&x, groups[0]);
        let (y2, d2) = e.feature_distance(&x, groups[1]);
        let g = (x - y1) / d1 - (x - y2) / d2;
        let gg = g.norm_squared();
        if gg < 1e-16 || d1 == d2 {
            break;
        }
        x -= g * ((d1 - d2) / gg);
    }
    x
}

/// How far the fan's sheets sit above the nearest edge outside the fan;
/// positive once an outside edge has taken over.
fn sheet_gap(e: &ExactField, fan_edges: &[bool], x: &Point) -> f64 {
    let mut inside = f64::INFINITY;
    let mut outside = f64::INFINITY;
    for (i, &in_fan) in fan_edges.iter().enumerate() {
        let d = e.edge_projection(x, i).1;
        if in_fan {
            inside = inside.min(d);
        } else {
            outside = outside.min(d);
        }
    }
    inside - outside
}

fn exact_step(e: &ExactField, fan: &SuperdiffFan, step: f64, force: bool) -> (f64, Point) {
    let groups = active_groups(fan);
    let mut fan_edges = vec![false; e.scene().boundary().len()];
    for &i in fan.features.iter().flatten() {
        fan_edges[i] = true;
    }
    let x = fan.base;
    let v = fan.min_norm_velocity;
    let pos = |h: f64| ridge_project(e, &groups, x + v * h);
    let x1 = pos(step);
    let tol = 1e-14 * fan.delta;
    if force || sheet_gap(e, &fan_edges, &x1) <= tol {
        return (step, x1);
    }
    let (mut lo, mut hi) = (0.0, step);
    let resolve = 10.0 * f64::EPSILON * fan.delta;
    while v.norm() * (hi - lo) > resolve {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sheet_gap(e, &fan_edges, &pos(mid)) <= tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (hi, pos(hi))
}

/// Integrates many seeds in parallel; results keep seed order.
pub fn integrate_batch(field: &DistanceField, seeds: &[Point], t_max: f64, dt: f64) -> Vec<Result<Trajectory>> {
    seeds.par_iter().map(|x| integrate(field, x, t_max, dt)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `alpha(t) = int 2 / delta`.
    Euclidean,
    /// `beta(t) = int 2 a / tanh(a delta)` with curvature bound `a`.
    Riemannian,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub s0: f64,
    pub measured: Vec<f64>,
    pub bound: Vec<f64>,
    pub integral: Vec<f64>,
    pub min_margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Logistic bound `s0 e^a / (s0 e^a + 1 - s0)`.
pub fn logistic_bound(s0: f64, a: f64) -> f64 {
    if s0 <= 0.0 {
        return 0.0;
    }
    // divide through by e^a to stay finite for large a
    s0 / (s0 + (1.0 - s0) * (-a).exp())
}

/// Checks the logistic speed bound along a trajectory that starts singular.
pub fn verify_speed_bound(traj: &Trajectory, field: &DistanceField) -> Result<BoundReport> {
    let s0 = traj.start().speed_sq;
    if s0 >= 1.0 - EPS_SING {
        return Err(Error::NotSingularStart(s0));
    }
    let scene = field.scene();
    let (kind, integrand): (BoundKind, Box<dyn Fn(f64) -> f64>) = if scene.metric().is_euclidean() {
        (BoundKind::Euclidean, Box::new(|d: f64| 2.0 / d))
    } else {
        let a = scene.curvature_bound().ok_or(Error::MissingCurvatureBound)?;
        (BoundKind::Riemannian, Box::new(move |d: f64| 2.0 * a / (a * d).tanh()))
    };
    let mut integral = Vec::with_capacity(traj.samples.len());
    let mut acc = 0.0;
    integral.push(0.0);
    for w in traj.samples.windows(2) {
        acc += 0.5 * (w[1].t - w[0].t) * (integrand(w[0].delta) + integrand(w[1].delta));
        integral.push(acc);
    }
    let measured: Vec<f64> = traj.samples.iter().map(|s| s.speed_sq).collect();
    let bound: Vec<f64> = integral.iter().map(|&a| logistic_bound(s0, a)).collect();
    let min_margin = bound
        .iter()
        .zip(&measured)
        .map(|(b, s)| b - s)
        .fold(f64::INFINITY, f64::min);
    Ok(BoundReport {
        kind,
        s0,
        measured,
        bound,
        integral,
        min_margin,
        tolerance: TOL_BOUND,
        pass: min_margin >= -TOL_BOUND,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SemiconcavityReport {
    pub pairs: usize,
    pub skipped: usize,
    pub max_violation: f64,
}

/// `<d(x) p - d(y) q, x - y> - |x - y|^2` maximized over generators, for
/// every pair whose segment stays inside the domain.
pub fn check_semiconcavity_pairs(field: &DistanceField, pairs: &[(Point, Point)]) -> Result<SemiconcavityReport> {
    if !field.scene().metric().is_euclidean() {
        return Err(Error::WrongMetric("a euclidean scene"));
    }
    let poly = field.scene().boundary();
    let results: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|(x, y)| -> Result<Option<f64>> {
            if x != y && poly.segment_crosses_boundary(x, y) {
                return Ok(None);
            }
            let fx = field.superdifferential(x)?;
            let fy = field.superdifferential(y)?;
            let d = x - y;
            let mut worst = f64::NEG_INFINITY;
            for p in &fx.generators {
                for q in &fy.generators {
                    worst = worst.max((p * fx.delta - q * fy.delta).dot(&d) - d.norm_squared());
                }
            }
            Ok(Some(worst))
        })
        .collect::<Result<_>>()?;
    let checked: Vec<f64> = results.iter().flatten().copied().collect();
    Ok(SemiconcavityReport {
        pairs: checked.len(),
        skipped: results.len() - checked.len(),
        max_violation: checked.iter().copied().fold(0.0, f64::max),
    })
}

/// Unit-generator saturation `|<A^{-1} p, p> - 1|`, maximized over fans.
pub fn eikonal_defect(field: &DistanceField, points: &[Point]) -> Result<f64> {
    let defects: Vec<f64> = points
        .par_iter()
        .map(|x| -> Result<f64> {
            let fan = field.superdifferential(x)?;
            let a_inv = field.metric_at(x).try_inverse().ok_or(Error::NonSpdMatrix)?;
            Ok(fan
                .generators
                .iter()
                .map(|p| ((a_inv * p).dot(p) - 1.0).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(defects.into_iter().fold(0.0, f64::max))
}

/// Whether every generator saturates the eikonal constraint within `TOL_EIK`.
pub fn is_eikonal(defect: f64) -> bool {
    defect <= TOL_EIK
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuityReport {
    pub radius: f64,
    pub perturbations: usize,
    /// `sup_t |g_x(t) - g_y(t)| / |x - y|` over all perturbed seeds.
    pub max_ratio: f64,
}

/// Integrates from `x` and from `n_pert` seeds on the circle of `radius`
/// around it, and reports the worst separation ratio.
pub fn check_continuous_dependence(
    field: &DistanceField,
    x: &Point,
    radius: f64,
    t_max: f64,
    dt: f64,
    n_pert: usize,
) -> Result<ContinuityReport> {
    if radius == 0.0 || n_pert == 0 {
        return Ok(ContinuityReport {
            radius,
            perturbations: 0,
            max_ratio: 0.0,
        });
    }
    let base = integrate(field, x, t_max, dt)?;
    let seeds: Vec<Point> = (0..n_pert)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n_pert as f64;
            x + Vec2::new(th.cos(), th.sin()) * radius
        })
        .collect();
    let ratios: Vec<f64> = seeds
        .par_iter()
        .map(|y| -> Result<f64> {
            let other = integrate(field, y, t_max, dt)?;
            let gap0 = (y - x).norm();
            let times = base.samples.iter().chain(&other.samples).map(|s| s.t);
            Ok(times
                .map(|t| (base.position_at(t) - other.position_at(t)).norm() / gap0)
                .fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(ContinuityReport {
        radius,
        perturbations: n_pert,
        max_ratio: ratios.into_iter().fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::pt;
    use crate::shapes;

    #[test]
    fn square_diagonal_closed_form() {
        let field = DistanceField::new(&shapes::square_scene());
        let tr = integrate(&field, &pt(0.3, 0.3), 1.0, 1e-3).unwrap();
        for s in &tr.samples {
            if s.t <= 0.6 - 1e-9 {
                let e = 0.3 - s.t / 2.0;
                assert!((s.x - pt(e, e)).norm() < 1e-9, "{s:?}");
                assert!((s.speed_sq - 0.5).abs() < 1e-12);
            }
        }
        assert!(tr.halted);
        assert!(tr.end().x.coords.norm() < 1e-9);
        assert_eq!(tr.end().t, 1.0);
    }

    #[test]
    fn square_two_phase() {
        let field = DistanceField::new(&shapes::square_scene());
        let tr = integrate(&field, &pt(0.5, 0.1), 5.0, 1e-4).unwrap();
        assert!((tr.position_at(0.2) - pt(0.3, 0.1)).norm() < 1e-3);
        assert!((tr.position_at(0.4) - pt(0.1, 0.1)).norm() < 1e-3);
        assert!((tr.position_at(0.5) - pt(0.05, 0.05)).norm() < 1e-3);
        assert!(tr.end().x.coords.norm() < 1e-3);
        assert!((tr.first_singular_time().unwrap() - 0.4).abs() < 1e-3);
        assert!(tr.singular_exit().is_none());
        for w in tr.samples.windows(2) {
            assert!(w[1].delta > w[0].delta || tr.halted && w[1].t == tr.t_max);
        }
    }

    #[test]
    fn disk_radial() {
        let field = DistanceField::new(&shapes::disk_scene());
        let tr = integrate(&field, &pt(0.5, 0.0), 1.0, 1e-3).unwrap();
        for t in [0.1, 0.25, 0.45] {
            assert!((tr.position_at(t) - pt(0.5 - t, 0.0)).norm() < 1e-3);
        }
        assert!(tr.halted);
        assert!(tr.end().x.coords.norm() < 1e-3);
    }

    #[test]
    fn singularity_verdicts() {
        let field = DistanceField::new(&shapes::square_scene());
        let r = is_singular(&field, &pt(0.5, 0.0)).unwrap();
        assert_eq!(r.status, Singularity::Regular);
        assert_eq!(r.speed_sq, 1.0);
        let r = is_singular(&field, &pt(0.3, 0.3)).unwrap();
        assert_eq!(r.status, Singularity::Singular);
        assert!((r.speed_sq - 0.5).abs() < 1e-15);
    }

    #[test]
    fn logistic_bound_limits() {
        assert_eq!(logistic_bound(0.0, 5.0), 0.0);
        assert!((logistic_bound(0.5, 0.0) - 0.5).abs() < 1e-15);
        assert!(logistic_bound(0.5, 800.0) <= 1.0);
    }

    #[test]
    fn center_start_bound_is_zero() {
        let field = DistanceField::new(&shapes::square_scene());
        let tr = integrate(&field, &pt(0.0, 0.0), 2.0, 1e-3).unwrap();
        assert_eq!(tr.samples.len(), 2);
        let rep = verify_speed_bound(&tr, &field).unwrap();
        assert!(rep.pass);
        assert!(rep.bound.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn regular_start_is_rejected() {
        let field = DistanceField::new(&shapes::square_scene());
        let tr = integrate(&field, &pt(0.5, 0.0), 1.0, 1e-3).unwrap();
        assert!(matches!(
            verify_speed_bound(&tr, &field),
            Err(Error::NotSingularStart(_))
        ));
    }

    #[test]
    fn bad_steps_are_rejected() {
        let field = DistanceField::new(&shapes::square_scene());
        assert!(integrate(&field, &pt(0.1, 0.0), 1.0, 0.0).is_err());
        assert!(integrate(&field, &pt(0.1, 0.0), -1.0, 1e-3).is_err());
        assert!(integrate(&field, &pt(3.0, 0.0), 1.0, 1e-3).is_err());
    }
}
