//! Canonical domains used by the examples, the CLI battery and the tests.

use std::f64::consts::PI;

use crate::geom::Mat2;
use crate::geom::{pt, Polygon};
use crate::scene::{MetricField, Scene};

/// Axis-aligned square `[-half, half]^2`.
pub fn square(half: f64) -> Polygon {
    Polygon::new(vec![pt(-half, -half), pt(half, -half), pt(half, half), pt(-half, half)])
}

/// Regular `n`-gon with circumradius `r`; vertex `k` sits at angle
/// `(k + phase) * 2pi / n`.
pub fn regular_polygon(n: usize, r: f64, phase: f64) -> Polygon {
    Polygon::new(
        (0..n)
            .map(|k| {
                let th = (k as f64 + phase) * 2.0 * PI / n as f64;
                pt(r * th.cos(), r * th.sin())
            })
            .collect(),
    )
}

/// Disk approximation whose edge midpoints lie on the coordinate axes.
pub fn disk(n: usize) -> Polygon {
    regular_polygon(n, 1.0, 0.5)
}

/// Ellipse approximation with `n` vertices (multiple of 4), evenly spaced in
/// the parametric angle and mirror-symmetric about both axes bit for bit.
pub fn ellipse(n: usize, a: f64, b: f64) -> Polygon {
    assert!(n.is_multiple_of(4), "ellipse polygon needs a multiple of 4 vertices");
    let q = n / 4;
    let first: Vec<(f64, f64)> = (0..q)
        .map(|k| {
            let th = (k as f64 + 0.5) * 2.0 * PI / n as f64;
            (a * th.cos(), b * th.sin())
        })
        .collect();
    let mut v = Vec::with_capacity(n);
    v.extend(first.iter().map(|&(x, y)| pt(x, y)));
    v.extend(first.iter().rev().map(|&(x, y)| pt(-x, y)));
    v.extend(first.iter().map(|&(x, y)| pt(-x, -y)));
    v.extend(first.iter().rev().map(|&(x, y)| pt(x, -y)));
    Polygon::new(v)
}

/// L-shaped hexagon: `[-1,1]x[-1,0]` joined with `[-1,0]x[0,1]`, reflex
/// vertex at the origin.
pub fn l_shape() -> Polygon {
    Polygon::new(vec![
        pt(-1.0, -1.0),
        pt(1.0, -1.0),
        pt(1.0, 0.0),
        pt(0.0, 0.0),
        pt(0.0, 1.0),
        pt(-1.0, 1.0),
    ])
}

/// Star-shaped polygon with the given radii at evenly spaced angles; always
/// simple for positive radii.
pub fn star(radii: &[f64], phase: f64) -> Polygon {
    let n = radii.len();
    Polygon::new(
        radii
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let th = phase + k as f64 * 2.0 * PI / n as f64;
                pt(r * th.cos(), r * th.sin())
            })
            .collect(),
    )
}

pub fn square_scene() -> Scene {
    Scene::euclidean(square(1.0)).expect("valid square")
}

pub fn disk_scene() -> Scene {
    Scene::euclidean(disk(256)).expect("valid disk")
}

pub fn ellipse_scene() -> Scene {
    Scene::euclidean(ellipse(512, 2.0, 1.0)).expect("valid ellipse")
}

pub fn l_scene() -> Scene {
    Scene::euclidean(l_shape()).expect("valid L")
}

/// The four euclidean scenes of the verification battery, by name.
pub fn euclidean_battery() -> Vec<(&'static str, Scene)> {
    vec![
        ("square", square_scene()),
        ("disk", disk_scene()),
        ("ellipse", ellipse_scene()),
        ("l_shape", l_scene()),
    ]
}

/// Square with the constant metric `c * Id`.
pub fn scaled_square_scene(c: f64, curvature_bound: Option<f64>) -> Scene {
    Scene::new(
        square(1.0),
        MetricField::ConstantMatrix(Mat2::identity() * c),
        curvature_bound,
        None,
    )
    .expect("valid scaled square")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_polygons_validate() {
        for p in [
            square(1.0),
            disk(256),
            ellipse(512, 2.0, 1.0),
            l_shape(),
            star(&[1.0, 0.4, 0.9, 0.5, 1.2, 0.7], 0.1),
        ] {
            p.validate().unwrap();
        }
    }

    #[test]
    fn ellipse_is_mirror_symmetric() {
        let e = ellipse(16, 2.0, 1.0);
        let v = e.vertices();
        for p in v {
            assert!(v.iter().any(|q| q.x == p.x && q.y == -p.y));
            assert!(v.iter().any(|q| q.x == -p.x && q.y == p.y));
        }
    }
}
