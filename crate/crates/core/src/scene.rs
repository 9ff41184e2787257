//! Problem instances: a polygonal domain, a metric field on it, and the
//! optional curvature lower bound used by the riemannian speed estimate.
//!
//! Scenes are immutable after construction. Files are validated and rejected
//! on any violation; nothing is repaired.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geom::{is_spd, pt, sym_eigenvalues, Mat2, Point, Polygon};
use crate::mintime::FSpec;
use crate::{Error, Result};

pub const DEFAULT_GRID_H: f64 = 0.01;

/// Bilinearly interpolated lattice of SPD matrices.
///
/// Samples are stored row-major with x varying fastest: entry `(i, j)` sits at
/// `origin + (i*h, j*h)` and index `j*nx + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledMetric {
    pub origin: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a22: Vec<f64>,
}

impl SampledMetric {
    fn check_shape(&self) -> Result<()> {
        let n = self.nx * self.ny;
        if self.nx < 2 || self.ny < 2 || !(self.h > 0.0) {
            return Err(Error::InvalidScene(
                "grid_sampled metric needs nx, ny >= 2 and h > 0".into(),
            ));
        }
        if self.a11.len() != n || self.a12.len() != n || self.a22.len() != n {
            return Err(Error::InvalidScene(format!(
                "grid_sampled metric expects {n} samples per entry"
            )));
        }
        Ok(())
    }

    fn sample(&self, i: usize, j: usize) -> Mat2 {
        let k = j * self.nx + i;
        Mat2::new(self.a11[k], self.a12[k], self.a12[k], self.a22[k])
    }

    /// Bilinear interpolation of the entries, clamped to the sampled box.
    pub fn eval(&self, x: &Point) -> Mat2 {
        let fx = ((x.x - self.origin[0]) / self.h).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((x.y - self.origin[1]) / self.h).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        self.sample(i, j) * ((1.0 - tx) * (1.0 - ty))
            + self.sample(i + 1, j) * (tx * (1.0 - ty))
            + self.sample(i, j + 1) * ((1.0 - tx) * ty)
            + self.sample(i + 1, j + 1) * (tx * ty)
    }

    /// Samples `f` on a lattice covering `[lo, hi]`.
    pub fn from_fn(lo: Point, hi: Point, h: f64, f: impl Fn(&Point) -> Mat2) -> Self {
        let nx = ((hi.x - lo.x) / h).ceil() as usize + 1;
        let ny = ((hi.y - lo.y) / h).ceil() as usize + 1;
        let mut a11 = Vec::with_capacity(nx * ny);
        let mut a12 = Vec::with_capacity(nx * ny);
        let mut a22 = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let m = f(&pt(lo.x + i as f64 * h, lo.y + j as f64 * h));
                a11.push(m[(0, 0)]);
                a12.push(0.5 * (m[(0, 1)] + m[(1, 0)]));
                a22.push(m[(1, 1)]);
            }
        }
        Self {
            origin: [lo.x, lo.y],
            h,
            nx,
            ny,
            a11,
            a12,
            a22,
        }
    }
}

/// Position-dependent SPD matrix `A(x)` with `g_x(u, v) = <A(x) u, v>`.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricField {
    Euclidean,
    ConstantMatrix(Mat2),
    /// `A(x) = (F^T)^{-1}(x) F^{-1}(x)` for a control matrix `F`.
    ControlField(FSpec),
    GridSampled(SampledMetric),
}

impl MetricField {
    pub fn eval(&self, x: &Point) -> Mat2 {
        match self {
            MetricField::Euclidean => Mat2::identity(),
            MetricField::ConstantMatrix(a) => *a,
            MetricField::ControlField(f) => f.metric(x).unwrap_or_else(|_| Mat2::identity() * f64::NAN),
            MetricField::GridSampled(s) => s.eval(x),
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, MetricField::Euclidean)
    }

    /// The matrix when it does not depend on position.
    pub fn constant(&self) -> Option<Mat2> {
        match self {
            MetricField::Euclidean => Some(Mat2::identity()),
            MetricField::ConstantMatrix(a) => Some(*a),
            MetricField::ControlField(f @ FSpec::ConstantMatrix { .. }) => f.metric(&Point::origin()).ok(),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            MetricField::Euclidean => "euclidean",
            MetricField::ConstantMatrix(_) => "constant_matrix",
            MetricField::ControlField(_) => "control_field",
            MetricField::GridSampled(_) => "grid_sampled",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scene {
    boundary: Polygon,
    metric: MetricField,
    curvature_bound: Option<f64>,
    grid_h: f64,
    lambda_min: f64,
}

impl Scene {
    /// Validates every invariant and records the smallest metric eigenvalue
    /// seen over interior samples.
    pub fn new(
        boundary: Polygon,
        metric: MetricField,
        curvature_bound: Option<f64>,
        grid_h: Option<f64>,
    ) -> Result<Self> {
        boundary.validate()?;
        if let Some(a) = curvature_bound {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::InvalidCurvatureBound(a));
            }
        }
        let grid_h = grid_h.unwrap_or(DEFAULT_GRID_H);
        if !(grid_h > 0.0) || !grid_h.is_finite() {
            return Err(Error::InvalidScene(format!("grid_h must be > 0, got {grid_h}")));
        }
        if let MetricField::GridSampled(s) = &metric {
            s.check_shape()?;
        }
        if let MetricField::ControlField(f) = &metric {
            f.validate()?;
        }
        let lambda_min = check_metric(&boundary, &metric)?;
        Ok(Self {
            boundary,
            metric,
            curvature_bound,
            grid_h,
            lambda_min,
        })
    }

    pub fn euclidean(boundary: Polygon) -> Result<Self> {
        Self::new(boundary, MetricField::Euclidean, None, None)
    }

    pub fn boundary(&self) -> &Polygon {
        &self.boundary
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn curvature_bound(&self) -> Option<f64> {
        self.curvature_bound
    }

    pub fn grid_h(&self) -> f64 {
        self.grid_h
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn with_grid_h(&self, h: f64) -> Result<Self> {
        Self::new(
            self.boundary.clone(),
            self.metric.clone(),
            self.curvature_bound,
            Some(h),
        )
    }

    pub fn with_curvature_bound(&self, alpha: Option<f64>) -> Result<Self> {
        Self::new(self.boundary.clone(), self.metric.clone(), alpha, Some(self.grid_h))
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.boundary.contains(x) && self.boundary.boundary_distance(x) > 0.0
    }

    /// Diameter of the domain.
    ///
    /// Exact for the euclidean metric. Otherwise a lattice estimate at half the
    /// working spacing, taken from every polygon vertex (evenly subsampled past
    /// 64 vertices) to every reachable lattice node.
    pub fn diameter(&self) -> f64 {
        if self.metric.is_euclidean() {
            return self.boundary.vertex_diameter();
        }
        let lattice = crate::distance::lattice::Lattice::build(self, 0.5 * self.grid_h);
        let verts = self.boundary.vertices();
        let stride = verts.len().div_ceil(64);
        use rayon::prelude::*;
        verts
            .par_iter()
            .step_by(stride)
            .map(|v| lattice.geodesic_tree(v).map(|t| t.max_distance()).unwrap_or(0.0))
            .reduce(|| 0.0, f64::max)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(text)?;
        file.into_scene()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SceneFile::from_scene(self)).expect("scene serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

fn check_metric(boundary: &Polygon, metric: &MetricField) -> Result<f64> {
    let mut points: Vec<Point> = Vec::new();
    match metric {
        MetricField::Euclidean => return Ok(1.0),
        MetricField::ConstantMatrix(_) => {
            points.push(boundary.vertices()[0]);
        }
        MetricField::GridSampled(s) => {
            for j in 0..s.ny {
                for i in 0..s.nx {
                    let m = s.sample(i, j);
                    if !is_spd(&m) {
                        let (l1, l2) = sym_eigenvalues(&m);
                        return Err(Error::NonSpdMetric {
                            x: s.origin[0] + i as f64 * s.h,
                            y: s.origin[1] + j as f64 * s.h,
                            l1,
                            l2,
                        });
                    }
                }
            }
            points.extend(interior_samples(boundary, 48));
        }
        MetricField::ControlField(_) => {
            points.extend(interior_samples(boundary, 64));
            points.extend(boundary.vertices().iter().copied());
        }
    }
    let mut lambda_min = f64::INFINITY;
    for p in &points {
        let m = match metric {
            MetricField::ControlField(f) => f.metric(p)?,
            _ => metric.eval(p),
        };
        let (l1, l2) = sym_eigenvalues(&m);
        if !is_spd(&m) || !l1.is_finite() {
            return Err(Error::NonSpdMetric { x: p.x, y: p.y, l1, l2 });
        }
        lambda_min = lambda_min.min(l1);
    }
    Ok(lambda_min)
}

fn interior_samples(boundary: &Polygon, n: usize) -> Vec<Point> {
    let (lo, hi) = boundary.bbox();
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let p = pt(
                lo.x + (i as f64 + 0.5) / n as f64 * (hi.x - lo.x),
                lo.y + (j as f64 + 0.5) / n as f64 * (hi.y - lo.y),
            );
            if boundary.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryFile {
    polygon: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum MetricFile {
    Euclidean,
    ConstantMatrix { a: [[f64; 2]; 2] },
    ControlField { f: FSpec },
    GridSampled(SampledMetric),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    boundary: BoundaryFile,
    metric: MetricFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    curvature_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid_h: Option<f64>,
}

impl SceneFile {
    fn into_scene(self) -> Result<Scene> {
        let poly = Polygon::new(self.boundary.polygon.iter().map(|v| pt(v[0], v[1])).collect());
        let metric = match self.metric {
            MetricFile::Euclidean => MetricField::Euclidean,
            MetricFile::ConstantMatrix { a } => {
                let m = Mat2::new(a[0][0], a[0][1], a[1][0], a[1][1]);
                if !is_spd(&m) {
                    let (l1, l2) = sym_eigenvalues(&m);
                    return Err(Error::NonSpdMetric {
                        x: f64::NAN,
                        y: f64::NAN,
                        l1,
                        l2,
                    });
                }
                MetricField::ConstantMatrix(m)
            }
            MetricFile::ControlField { f } => MetricField::ControlField(f),
            MetricFile::GridSampled(s) => MetricField::GridSampled(s),
        };
        Scene::new(poly, metric, self.curvature_bound, self.grid_h)
    }

    fn from_scene(scene: &Scene) -> Self {
        let metric = match &scene.metric {
            MetricField::Euclidean => MetricFile::Euclidean,
            MetricField::ConstantMatrix(m) => MetricFile::ConstantMatrix {
                a: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
            },
            MetricField::ControlField(f) => MetricFile::ControlField { f: f.clone() },
            MetricField::GridSampled(s) => MetricFile::GridSampled(s.clone()),
        };
        SceneFile {
            boundary: BoundaryFile {
                polygon: scene.boundary.vertices().iter().map(|v| [v.x, v.y]).collect(),
            },
            metric,
            curvature_bound: scene.curvature_bound,
            grid_h: Some(scene.grid_h),
        }
    }
}
