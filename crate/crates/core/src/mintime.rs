//! Minimum exit time for `y' = F(y) a`, `|a| <= 1`, read as a riemannian
//! distance under `G = (F^T)^{-1} F^{-1}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{DistanceField, Lattice};
use crate::geom::{halton, pt, Mat2, Point, Vec2};
use crate::scene::{MetricField, Scene};
use crate::{Error, Result};

/// Control matrix field `F(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum FSpec {
    ConstantMatrix {
        m: [[f64; 2]; 2],
    },
    /// `F = c(x) Id` with `c(x) = sum coeffs[i][j] x^i y^j`.
    IsotropicPoly {
        coeffs: Vec<Vec<f64>>,
    },
}

impl FSpec {
    pub fn constant(m: Mat2) -> Self {
        FSpec::ConstantMatrix {
            m: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
        }
    }

    pub fn control(&self, x: &Point) -> Mat2 {
        match self {
            FSpec::ConstantMatrix { m } => Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1]),
            FSpec::IsotropicPoly { coeffs } => {
                let mut c = 0.0;
                let mut xi = 1.0;
                for row in coeffs {
                    let mut yj = 1.0;
                    for &a in row {
                        c += a * xi * yj;
                        yj *= x.y;
                    }
                    xi *= x.x;
                }
                Mat2::identity() * c
            }
        }
    }

    /// `G(x)`; fails where `F(x)` is singular, or where an isotropic speed is
    /// not positive.
    pub fn metric(&self, x: &Point) -> Result<Mat2> {
        let f = self.control(x);
        if let FSpec::IsotropicPoly { .. } = self {
            if !(f[(0, 0)] > 0.0) {
                return Err(Error::SingularControl(x.x, x.y));
            }
        }
        metric_of_matrix(&f).map_err(|_| Error::SingularControl(x.x, x.y))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FSpec::ConstantMatrix { m } => {
                if m.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidScene("control matrix has non-finite entries".into()));
                }
                metric_of_matrix(&self.control(&Point::origin())).map(|_| ())
            }
            FSpec::IsotropicPoly { coeffs } => {
                if coeffs.iter().all(|r| r.is_empty()) {
                    return Err(Error::InvalidScene(
                        "isotropic_poly needs at least one coefficient".into(),
                    ));
                }
                if coeffs.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidScene("isotropic_poly has non-finite coefficients".into()));
                }
                Ok(())
            }
        }
    }
}

/// `(F^T)^{-1} F^{-1}` for an invertible `F`.
pub fn metric_of_matrix(f: &Mat2) -> Result<Mat2> {
    let det = f.determinant();
    if !det.is_finite() || det.abs() <= 1e-300 {
        return Err(Error::InvalidArgument("control matrix is singular".into()));
    }
    let inv = f
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("control matrix is singular".into()))?;
    let g = inv.transpose() * inv;
    Ok((g + g.transpose()) * 0.5)
}

pub fn metric_from_control(f: &FSpec) -> Result<MetricField> {
    f.validate()?;
    Ok(MetricField::ControlField(f.clone()))
}

/// `H(x, p) = <F F^T p, p>`.
pub fn hamiltonian(f: &FSpec, x: &Point, p: &Vec2) -> f64 {
    let m = f.control(x);
    (m * m.transpose() * p).dot(p)
}

/// `D_p H(x, p) = 2 F F^T p`.
pub fn hamiltonian_gradient(f: &FSpec, x: &Point, p: &Vec2) -> Vec2 {
    let m = f.control(x);
    m * m.transpose() * p * 2.0
}

fn control_spec(scene: &Scene) -> Result<Option<&FSpec>> {
    match scene.metric() {
        MetricField::ControlField(f) => Ok(Some(f)),
        MetricField::GridSampled(_) => Ok(None),
        _ => Err(Error::WrongMetric("a control_field or grid_sampled scene")),
    }
}

/// Minimum exit time from `x`: the lattice distance to the boundary under `G`.
pub fn min_time(field: &DistanceField, x: &Point) -> Result<f64> {
    control_spec(field.scene())?;
    field.distance(x)
}

#[derive(Clone, Debug, Serialize)]
pub struct HjbReport {
    pub grid_h: f64,
    pub fd_step: f64,
    pub checked: usize,
    pub excluded: usize,
    pub max_residual: f64,
    /// `max_residual / grid_h`.
    pub constant: f64,
}

/// Central-difference residual of `H(x, DT) = 1` on a `res x res` grid over
/// the bounding box. Nodes within two cells of a singular node, or whose
/// stencil leaves the domain, are excluded.
pub fn hjb_residual(field: &DistanceField, res: usize) -> Result<HjbReport> {
    let scene = field.scene();
    let spec = control_spec(scene)?;
    if res < 5 {
        return Err(Error::InvalidArgument(format!(
            "hjb grid resolution must be at least 5, got {res}"
        )));
    }
    let (lo, hi) = scene.boundary().bbox();
    let step = ((hi.x - lo.x) / (res - 1) as f64).max((hi.y - lo.y) / (res - 1) as f64);
    let nx = ((hi.x - lo.x) / step).round() as usize + 1;
    let ny = ((hi.y - lo.y) / step).round() as usize + 1;
    let node = |i: usize, j: usize| pt(lo.x + i as f64 * step, lo.y + j as f64 * step);

    // (value, singular) per node; None outside
    let data: Vec<Option<(f64, bool)>> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let x = node(k % nx, k / nx);
            let fan = field.superdifferential(&x).ok()?;
            Some((fan.delta, fan.singular || fan.ambiguous))
        })
        .collect();

    let at = |i: i64, j: i64| -> Option<(f64, bool)> {
        if i < 0 || j < 0 || i >= nx as i64 || j >= ny as i64 {
            None
        } else {
            data[j as usize * nx + i as usize]
        }
    };

    let results: Vec<Option<f64>> = (0..nx * ny)
        .into_par_iter()
        .filter(|&k| data[k].is_some())
        .map(|k| {
            let (i, j) = ((k % nx) as i64, (k / nx) as i64);
            for dj in -2..=2 {
                for di in -2..=2 {
                    match at(i + di, j + dj) {
                        Some((_, false)) => {}
                        _ => return None,
                    }
                }
            }
            let v = |di: i64, dj: i64| at(i + di, j + dj).expect("checked").0;
            let grad = Vec2::new((v(1, 0) - v(-1, 0)) / (2.0 * step), (v(0, 1) - v(0, -1)) / (2.0 * step));
            let x = node(i as usize, j as usize);
            let h = match spec {
                Some(f) => hamiltonian(f, &x, &grad),
                None => {
                    let g = scene.metric().eval(&x);
                    let g_inv = g.try_inverse().expect("SPD metric");
                    (g_inv * grad).dot(&grad)
                }
            };
            Some((h - 1.0).abs())
        })
        .collect();

    let checked = results.iter().flatten().count();
    let max_residual = results.iter().flatten().copied().fold(0.0, f64::max);
    let grid_h = field.resolution().max(f64::MIN_POSITIVE);
    Ok(HjbReport {
        grid_h,
        fd_step: step,
        checked,
        excluded: results.len() - checked,
        max_residual,
        constant: max_residual / grid_h,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CoshReport {
    pub alpha: f64,
    pub k: f64,
    pub triples: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Semiconcavity of `v = cosh(alpha d)` along lattice geodesics:
/// `(1-t) v(g0) + t v(g1) - v(gt) <= t(1-t) K d(g0,g1)^2 / 2` with
/// `K = alpha^2 max v`, checked for `roots x targets x ts` triples drawn from
/// Halton points. Violations up to `c_grid * grid_h` are tolerated.
pub fn check_cosh_semiconcavity(
    scene: &Scene,
    roots: usize,
    targets: usize,
    ts: &[f64],
    c_grid: f64,
) -> Result<CoshReport> {
    let alpha = scene.curvature_bound().ok_or(Error::MissingCurvatureBound)?;
    let h = scene.grid_h();
    let lattice = Lattice::build(scene, h);
    let d_max = (0..lattice.dims().0 * lattice.dims().1)
        .filter(|&k| lattice.node_inside(k))
        .map(|k| lattice.node_value(k))
        .fold(0.0, f64::max);
    let k_const = alpha * alpha * (alpha * d_max).cosh();
    let points = halton_interior(scene, roots + roots * targets);
    let v = |x: &Point| lattice.distance(x).map(|d| (alpha * d).cosh());

    let worst: Vec<(usize, f64)> = (0..roots)
        .into_par_iter()
        .map(|r| -> Result<(usize, f64)> {
            let root = points[r];
            let tree = lattice.geodesic_tree(&root)?;
            let v0 = v(&root)?;
            let mut count = 0;
            let mut worst = f64::NEG_INFINITY;
            for y in &points[roots + r * targets..roots + (r + 1) * targets] {
                let Some(path) = tree.path_to(y) else { continue };
                let v1 = v(y)?;
                for &t in ts {
                    let vt = v(&path.at(t))?;
                    let lhs = (1.0 - t) * v0 + t * v1 - vt;
                    let rhs = t * (1.0 - t) * k_const * path.length * path.length / 2.0;
                    worst = worst.max(lhs - rhs);
                    count += 1;
                }
            }
            Ok((count, worst))
        })
        .collect::<Result<_>>()?;
    let triples = worst.iter().map(|w| w.0).sum();
    let max_violation = worst.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let tolerance = c_grid * h;
    Ok(CoshReport {
        alpha,
        k: k_const,
        triples,
        max_violation,
        tolerance,
        pass: max_violation <= tolerance,
    })
}

/// First `n` Halton points (bases 2, 3) of the bounding box that fall inside
/// the domain.
pub fn halton_interior(scene: &Scene, n: usize) -> Vec<Point> {
    let (lo, hi) = scene.boundary().bbox();
    let mut out = Vec::with_capacity(n);
    let mut k = 1u64;
    while out.len() < n {
        let p = pt(lo.x + halton(k, 2) * (hi.x - lo.x), lo.y + halton(k, 3) * (hi.y - lo.y));
        if scene.contains(&p) {
            out.push(p);
        }
        k += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn diagonal_control() {
        let g = metric_of_matrix(&(Mat2::identity() * 2.0)).unwrap();
        assert!((g - Mat2::identity() * 0.25).norm() < 1e-15);
    }

    #[test]
    fn shear_control() {
        let f = Mat2::new(1.0, 0.0, 1.0, 1.0);
        let g = metric_of_matrix(&f).unwrap();
        assert!((g - Mat2::new(2.0, -1.0, -1.0, 1.0)).norm() < 1e-14);
        let f_inv = f.try_inverse().unwrap();
        for k in 1..20u64 {
            let v = Vec2::new(halton(k, 2) * 4.0 - 2.0, halton(k, 3) * 4.0 - 2.0);
            assert!(((g * v).dot(&v) - (f_inv * v).norm_squared()).abs() < 1e-12);
        }
    }

    #[test]
    fn isotropic_control() {
        let f = FSpec::IsotropicPoly {
            coeffs: vec![vec![1.0], vec![0.0], vec![1.0]],
        };
        let x = pt(0.7, -0.2);
        let g = f.metric(&x).unwrap();
        let c: f64 = 1.0 + 0.49;
        assert!((g - Mat2::identity() / (c * c)).norm() < 1e-15);
    }

    #[test]
    fn singular_control_rejected() {
        let f = FSpec::constant(Mat2::new(1.0, 2.0, 2.0, 4.0));
        assert!(f.validate().is_err());
        assert!(matches!(f.metric(&pt(0.0, 0.0)), Err(Error::SingularControl(..))));
    }

    #[test]
    fn fspec_json_shape() {
        let f: FSpec = serde_json::from_str(r#"{"variant":"constant_matrix","m":[[2,0],[0,2]]}"#).unwrap();
        assert_eq!(f, FSpec::constant(Mat2::identity() * 2.0));
        let g: FSpec = serde_json::from_str(r#"{"variant":"isotropic_poly","coeffs":[[1,0],[2]]}"#).unwrap();
        assert!(matches!(g, FSpec::IsotropicPoly { .. }));
    }

    #[test]
    fn min_time_requires_control_scene() {
        let field = DistanceField::new(&shapes::square_scene());
        assert!(matches!(min_time(&field, &pt(0.3, 0.3)), Err(Error::WrongMetric(_))));
    }

    #[test]
    fn unit_control_is_euclidean_time() {
        let scene = Scene::new(
            shapes::square(1.0),
            MetricField::ControlField(FSpec::constant(Mat2::identity())),
            None,
            Some(0.05),
        )
        .unwrap();
        let field = DistanceField::new(&scene);
        assert!((min_time(&field, &pt(0.3, 0.3)).unwrap() - 0.7).abs() < 3.0 * 0.05);
    }
}
