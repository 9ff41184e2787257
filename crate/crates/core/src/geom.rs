//! Planar primitives: points, 2x2 matrices and simple polygons.

use nalgebra::{Matrix2, Point2, Vector2};

pub type Point = Point2<f64>;
pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

#[inline]
pub fn pt(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

/// Closest point to `p` on the segment `[a, b]`.
pub fn closest_on_segment(p: &Point, a: &Point, b: &Point) -> Point {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    (b - a).perp(&(c - a))
}

fn on_segment(a: &Point, b: &Point, p: &Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test, collinear overlaps included.
pub fn segments_intersect(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Symmetric eigenvalues of a 2x2 matrix, ascending.
pub fn sym_eigenvalues(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - r, mean + r)
}

pub fn is_spd(m: &Mat2) -> bool {
    let asym = (m[(0, 1)] - m[(1, 0)]).abs();
    let scale = m[(0, 0)].abs().max(m[(1, 1)].abs()).max(1.0);
    asym <= 1e-12 * scale && sym_eigenvalues(m).0 > 0.0
}

/// Length of `v` in the inner product given by `a`.
#[inline]
pub fn metric_norm(a: &Mat2, v: &Vec2) -> f64 {
    v.dot(&(a * v)).max(0.0).sqrt()
}

/// Angle between two vectors in the inner product given by `a`.
pub fn metric_angle(a: &Mat2, u: &Vec2, v: &Vec2) -> f64 {
    let nu = metric_norm(a, u);
    let nv = metric_norm(a, v);
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    // atan2 form keeps resolution for nearly parallel vectors
    let dot = u.dot(&(a * v));
    let cross = (u.perp(v)) * a.determinant().max(0.0).sqrt();
    cross.abs().atan2(dot)
}

/// A simple closed polygon with counterclockwise vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    /// Wraps vertices without validation; see [`Polygon::validate`].
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        (0..self.len()).map(move |i| self.edge(i))
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut s = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            s += a.x * b.y - b.x * a.y;
        }
        0.5 * s
    }

    /// Checks vertex count, simplicity and orientation.
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        let n = self.len();
        if n < 3 {
            return Err(Error::TooFewVertices(n));
        }
        if self.vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(Error::InvalidScene("non-finite vertex coordinate".into()));
        }
        for i in 0..n {
            let (a, b) = self.edge(i);
            if a == b {
                return Err(Error::NonSimplePolygon(i, (i + 1) % n));
            }
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (c, d) = self.edge(j);
                if adjacent {
                    // neighbours share exactly one endpoint; reject folding back
                    let shared = if j == i + 1 { b } else { a };
                    let other_i = if j == i + 1 { a } else { b };
                    let other_j = if j == i + 1 { d } else { c };
                    if orient(&other_i, &shared, &other_j) == 0.0 && (other_i - shared).dot(&(other_j - shared)) > 0.0 {
                        return Err(Error::NonSimplePolygon(i, j));
                    }
                    continue;
                }
                if segments_intersect(&a, &b, &c, &d) {
                    return Err(Error::NonSimplePolygon(i, j));
                }
            }
        }
        let area = self.signed_area();
        if area == 0.0 {
            return Err(Error::EmptyInterior);
        }
        if area < 0.0 {
            return Err(Error::Clockwise(area));
        }
        Ok(())
    }

    /// Even-odd containment test; boundary points may land on either side.
    pub fn contains(&self, p: &Point) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let vi = self.vertices[i];
            let vj = self.vertices[j];
            if (vi.y > p.y) != (vj.y > p.y) {
                let x = vj.x + (p.y - vj.y) * (vi.x - vj.x) / (vi.y - vj.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Euclidean distance from `p` to the boundary.
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        self.edges()
            .map(|(a, b)| (p - closest_on_segment(p, &a, &b)).norm_squared())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// True when the open segment `[p, q]` crosses no boundary edge.
    pub fn segment_crosses_boundary(&self, p: &Point, q: &Point) -> bool {
        self.edges().any(|(a, b)| segments_intersect(p, q, &a, &b))
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// Max pairwise vertex distance, which is the polygon's diameter.
    pub fn vertex_diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut best: f64 = 0.0;
        for i in 0..v.len() {
            for j in (i + 1)..v.len() {
                best = best.max((v[i] - v[j]).norm());
            }
        }
        best
    }

    pub fn transformed(&self, f: impl Fn(&Point) -> Point) -> Polygon {
        Polygon::new(self.vertices.iter().map(f).collect())
    }
}

/// Halton low-discrepancy value for `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polygon {
        Polygon::new(vec![pt(-1.0, -1.0), pt(1.0, -1.0), pt(1.0, 1.0), pt(-1.0, 1.0)])
    }

    #[test]
    fn square_validates_and_contains() {
        let sq = square();
        sq.validate().unwrap();
        assert!(sq.contains(&pt(0.3, 0.3)));
        assert!(!sq.contains(&pt(2.0, 2.0)));
        assert!((sq.signed_area() - 4.0).abs() < 1e-15);
        assert!((sq.boundary_distance(&pt(0.3, 0.3)) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn bowtie_is_rejected() {
        let bow = Polygon::new(vec![pt(0.0, 0.0), pt(1.0, 1.0), pt(1.0, 0.0), pt(0.0, 1.0)]);
        assert!(matches!(bow.validate(), Err(crate::Error::NonSimplePolygon(..))));
    }

    #[test]
    fn clockwise_is_rejected() {
        let mut v = square().vertices().to_vec();
        v.reverse();
        assert!(matches!(Polygon::new(v).validate(), Err(crate::Error::Clockwise(_))));
    }

    #[test]
    fn metric_angle_matches_euclidean_for_identity() {
        let a = Mat2::identity();
        let th = metric_angle(&a, &Vec2::new(1.0, 0.0), &Vec2::new(0.0, 2.0));
        assert!((th - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let tiny = metric_angle(&a, &Vec2::new(1.0, 0.0), &Vec2::new(1.0, 1e-9));
        assert!((tiny - 1e-9).abs() < 1e-20);
    }

    #[test]
    fn halton_first_terms() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert!((halton(1, 3) - 1.0 / 3.0).abs() < 1e-16);
    }
}
