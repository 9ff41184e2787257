//! Lattice geodesic distance for position-dependent metrics.
//!
//! Nodes of a regular grid inside the polygon are connected through a
//! 16-neighbour stencil; an edge costs its length under the metric frozen at
//! the edge midpoint. Nodes within a thin band of the boundary are seeded with
//! their frozen-metric distance to the polygon, then a label-setting sweep
//! propagates values, parents and boundary sources inward. Accuracy is O(h).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::geom::{closest_on_segment, metric_angle, metric_norm, pt, Mat2, Point, Vec2};
use crate::scene::Scene;
use crate::{Error, Result};

use super::{merge_projection, BackendKind, Projection, ProjectionSet, EPS_SING};

/// Parent-chain length used to smooth path directions.
pub const L_SMOOTH: usize = 8;
/// Seeds are placed within this many spacings of the boundary.
const SEED_BAND: f64 = 2.5;
const NONE: u32 = u32::MAX;

const STENCIL: [(i32, i32); 16] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
    (2, 1),
    (2, -1),
    (-2, 1),
    (-2, -1),
    (1, 2),
    (1, -2),
    (-1, 2),
    (-1, -2),
];

/// Merge angle for lattice generators: the separation at which a symmetric
/// pair of unit generators has `s* = 1 - EPS_SING`.
pub fn lattice_merge_angle() -> f64 {
    2.0 * (1.0 - EPS_SING).sqrt().acos()
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    cost: f64,
    node: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Distance from `x` to the polygon under the constant metric `a`, with the
/// metric-closest boundary point.
pub fn frozen_metric_projection(scene: &Scene, x: &Point, a: &Mat2) -> (f64, Point) {
    let chol = a.cholesky().expect("metric is SPD");
    let lt = chol.l().transpose();
    let lt_inv = lt.try_inverse().expect("invertible factor");
    let map = |p: &Point| Point::from(lt * p.coords);
    let tx = map(x);
    let mut best = (f64::INFINITY, *x);
    for (a0, b0) in scene.boundary().edges() {
        let y = closest_on_segment(&tx, &map(&a0), &map(&b0));
        let d = (tx - y).norm();
        if d < best.0 {
            best = (d, Point::from(lt_inv * y.coords));
        }
    }
    best
}

pub struct Lattice {
    scene: Scene,
    origin: Point,
    h: f64,
    nx: usize,
    ny: usize,
    inside: Vec<bool>,
    edist: Vec<f64>,
    value: Vec<f64>,
    parent: Vec<u32>,
    source: Vec<Point>,
    merge_angle: f64,
}

/// A candidate path from a query point to the boundary.
#[derive(Clone, Debug)]
struct Candidate {
    value: f64,
    source: Point,
    ascent: Vec2,
}

impl Lattice {
    pub fn build(scene: &Scene, h: f64) -> Self {
        assert!(h > 0.0, "lattice spacing must be positive");
        let (lo, hi) = scene.boundary().bbox();
        let nx = ((hi.x - lo.x) / h).ceil() as usize + 1;
        let ny = ((hi.y - lo.y) / h).ceil() as usize + 1;
        let n = nx * ny;
        let poly = scene.boundary();
        let (inside, edist): (Vec<bool>, Vec<f64>) = (0..n)
            .into_par_iter()
            .map(|k| {
                let p = pt(lo.x + (k % nx) as f64 * h, lo.y + (k / nx) as f64 * h);
                if poly.contains(&p) {
                    let d = poly.boundary_distance(&p);
                    (d > 1e-12 * h, d)
                } else {
                    (false, 0.0)
                }
            })
            .unzip();

        let seeds: Vec<(usize, f64, Point)> = (0..n)
            .into_par_iter()
            .filter(|&k| inside[k] && edist[k] < SEED_BAND * h)
            .map(|k| {
                let p = pt(lo.x + (k % nx) as f64 * h, lo.y + (k / nx) as f64 * h);
                let (d, y) = frozen_metric_projection(scene, &p, &scene.metric().eval(&p));
                (k, d, y)
            })
            .collect();

        let mut lat = Self {
            scene: scene.clone(),
            origin: lo,
            h,
            nx,
            ny,
            inside,
            edist,
            value: vec![f64::INFINITY; n],
            parent: vec![NONE; n],
            source: vec![lo; n],
            merge_angle: lattice_merge_angle(),
        };
        let mut heap = BinaryHeap::with_capacity(seeds.len() * 4);
        for (k, d, y) in seeds {
            lat.value[k] = d;
            lat.source[k] = y;
            heap.push(HeapItem {
                cost: d,
                node: k as u32,
            });
        }
        lat.sweep(heap, |lat, u, v| {
            lat.source[v] = lat.source[u];
        });
        lat
    }

    fn sweep(&mut self, mut heap: BinaryHeap<HeapItem>, mut on_relax: impl FnMut(&mut Self, usize, usize)) {
        let mut done = vec![false; self.value.len()];
        while let Some(HeapItem { cost, node }) = heap.pop() {
            let u = node as usize;
            if done[u] || cost > self.value[u] {
                continue;
            }
            done[u] = true;
            let (ui, uj) = ((u % self.nx) as i32, (u / self.nx) as i32);
            for (di, dj) in STENCIL {
                let (vi, vj) = (ui + di, uj + dj);
                if vi < 0 || vj < 0 || vi >= self.nx as i32 || vj >= self.ny as i32 {
                    continue;
                }
                let v = vj as usize * self.nx + vi as usize;
                if !self.inside[v] || done[v] {
                    continue;
                }
                let Some(w) = self.edge_weight(u, v) else { continue };
                let nv = cost + w;
                if nv < self.value[v] {
                    self.value[v] = nv;
                    self.parent[v] = u as u32;
                    on_relax(self, u, v);
                    heap.push(HeapItem {
                        cost: nv,
                        node: v as u32,
                    });
                }
            }
        }
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn node_point(&self, k: usize) -> Point {
        pt(
            self.origin.x + (k % self.nx) as f64 * self.h,
            self.origin.y + (k / self.nx) as f64 * self.h,
        )
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node_inside(&self, k: usize) -> bool {
        self.inside[k]
    }

    /// Lattice distance-to-boundary value at node `k` (infinite outside).
    pub fn node_value(&self, k: usize) -> f64 {
        self.value[k]
    }

    fn segment_admissible(&self, p: &Point, q: &Point, dp: f64, dq: f64) -> bool {
        let len = (q - p).norm();
        if dp >= len || dq >= len {
            return true;
        }
        self.scene.boundary().contains(q) && !self.scene.boundary().segment_crosses_boundary(p, q)
    }

    fn metric_length(&self, p: &Point, q: &Point) -> f64 {
        let mid = Point::from((p.coords + q.coords) * 0.5);
        metric_norm(&self.scene.metric().eval(&mid), &(q - p))
    }

    fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        let (p, q) = (self.node_point(u), self.node_point(v));
        self.segment_admissible(&p, &q, self.edist[u], self.edist[v])
            .then(|| self.metric_length(&p, &q))
    }

    /// End of the smoothed direction window along the parent chain of `k`.
    fn smoothing_target(&self, k: usize) -> Point {
        let mut cur = k;
        for _ in 0..L_SMOOTH {
            match self.parent[cur] {
                NONE => return self.source[cur],
                p => cur = p as usize,
            }
        }
        self.node_point(cur)
    }

    fn check_inside(&self, x: &Point) -> Result<f64> {
        let poly = self.scene.boundary();
        if !x.x.is_finite() || !x.y.is_finite() || !poly.contains(x) {
            return Err(Error::OutsideDomain(x.x, x.y));
        }
        let d = poly.boundary_distance(x);
        if d <= 0.0 {
            return Err(Error::OutsideDomain(x.x, x.y));
        }
        Ok(d)
    }

    fn candidates(&self, x: &Point) -> Result<Vec<Candidate>> {
        let ex = self.check_inside(x)?;
        let a = self.scene.metric().eval(x);
        let mut out = Vec::with_capacity(17);
        let fi = ((x.x - self.origin.x) / self.h).floor() as i64;
        let fj = ((x.y - self.origin.y) / self.h).floor() as i64;
        for j in (fj - 1)..=(fj + 2) {
            for i in (fi - 1)..=(fi + 2) {
                if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
                    continue;
                }
                let k = j as usize * self.nx + i as usize;
                if !self.inside[k] || !self.value[k].is_finite() {
                    continue;
                }
                let q = self.node_point(k);
                if !self.segment_admissible(x, &q, ex, self.edist[k]) {
                    continue;
                }
                let target = self.smoothing_target(k);
                let mut dir = q - target;
                if dir.norm() == 0.0 {
                    dir = x - target;
                }
                let n = metric_norm(&a, &dir);
                if n == 0.0 {
                    continue;
                }
                out.push(Candidate {
                    value: self.value[k] + self.metric_length(x, &q),
                    source: self.source[k],
                    ascent: dir / n,
                });
            }
        }
        if ex < SEED_BAND * self.h {
            let (d, y) = frozen_metric_projection(&self.scene, x, &a);
            let dir = x - y;
            let n = metric_norm(&a, &dir);
            if n > 0.0 {
                out.push(Candidate {
                    value: d,
                    source: y,
                    ascent: dir / n,
                });
            }
        }
        if out.is_empty() {
            return Err(Error::OutsideDomain(x.x, x.y));
        }
        Ok(out)
    }

    pub fn distance(&self, x: &Point) -> Result<f64> {
        Ok(self
            .candidates(x)?
            .iter()
            .map(|c| c.value)
            .fold(f64::INFINITY, f64::min))
    }

    /// Near-minimal paths within `2h` of the minimum, clustered by direction.
    pub fn project(&self, x: &Point) -> Result<ProjectionSet> {
        let mut cands = self.candidates(x)?;
        cands.sort_by(|a, b| a.value.total_cmp(&b.value));
        let delta = cands[0].value;
        let limit = delta + 2.0 * self.h;
        let a = self.scene.metric().eval(x);
        let mut projections: Vec<Projection> = Vec::new();
        for c in cands.into_iter().take_while(|c| c.value <= limit) {
            let p = Projection {
                point: c.source,
                distance: c.value,
                features: Vec::new(),
                ascent: c.ascent,
            };
            merge_projection(&mut projections, p, &a, self.merge_angle);
        }
        Ok(ProjectionSet {
            base: *x,
            delta,
            projections,
            backend: BackendKind::Lattice,
        })
    }

    /// Angle between two directions in the metric at `x`.
    pub fn angle_at(&self, x: &Point, u: &Vec2, v: &Vec2) -> f64 {
        metric_angle(&self.scene.metric().eval(x), u, v)
    }

    fn nearest_connected_node(&self, x: &Point) -> Option<(usize, f64)> {
        let ex = self.scene.boundary().boundary_distance(x);
        let fi = ((x.x - self.origin.x) / self.h).round() as i64;
        let fj = ((x.y - self.origin.y) / self.h).round() as i64;
        let mut best: Option<(usize, f64)> = None;
        for r in 0..4i64 {
            for j in (fj - r)..=(fj + r) {
                for i in (fi - r)..=(fi + r) {
                    if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
                        continue;
                    }
                    let k = j as usize * self.nx + i as usize;
                    if !self.inside[k] {
                        continue;
                    }
                    let q = self.node_point(k);
                    // a root on the boundary touches it at its own end of the segment
                    let from = if ex > 0.0 { *x } else { x + (q - x) * 1e-9 };
                    if !self.segment_admissible(&from, &q, ex, self.edist[k]) {
                        continue;
                    }
                    let d = (q - x).norm();
                    if best.is_none_or(|b| d < (self.node_point(b.0) - x).norm()) {
                        best = Some((k, self.metric_length(x, &q)));
                    }
                }
            }
            if best.is_some() {
                break;
            }
        }
        best
    }

    /// Single-source lattice geodesics from `x` to every reachable node.
    pub fn geodesic_tree(&self, x: &Point) -> Result<GeodesicTree<'_>> {
        self.check_inside(x).or_else(|e| {
            // polygon vertices are valid roots even though they sit on the boundary
            if self.scene.boundary().vertices().contains(x) {
                Ok(0.0)
            } else {
                Err(e)
            }
        })?;
        let (root, conn) = self.nearest_connected_node(x).ok_or(Error::OutsideDomain(x.x, x.y))?;
        let n = self.value.len();
        let mut tree = Lattice {
            scene: self.scene.clone(),
            origin: self.origin,
            h: self.h,
            nx: self.nx,
            ny: self.ny,
            inside: Vec::new(),
            edist: Vec::new(),
            value: vec![f64::INFINITY; n],
            parent: vec![NONE; n],
            source: Vec::new(),
            merge_angle: self.merge_angle,
        };
        // borrow the geometry tables without copying them into the scratch lattice
        tree.inside = self.inside.clone();
        tree.edist = self.edist.clone();
        tree.value[root] = conn;
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem {
            cost: conn,
            node: root as u32,
        });
        tree.sweep(heap, |_, _, _| {});
        Ok(GeodesicTree {
            lattice: self,
            root: *x,
            dist: tree.value,
            parent: tree.parent,
        })
    }
}

/// Shortest lattice paths from one root point.
pub struct GeodesicTree<'a> {
    lattice: &'a Lattice,
    root: Point,
    dist: Vec<f64>,
    parent: Vec<u32>,
}

/// A lattice geodesic as a polyline with its metric length.
#[derive(Clone, Debug)]
pub struct LatticePath {
    pub points: Vec<Point>,
    pub length: f64,
    cumulative: Vec<f64>,
}

impl LatticePath {
    /// Point at fraction `t` of the path's metric length.
    pub fn at(&self, t: f64) -> Point {
        let target = t.clamp(0.0, 1.0) * self.length;
        let k = self
            .cumulative
            .partition_point(|&c| c < target)
            .max(1)
            .min(self.points.len() - 1);
        let (c0, c1) = (self.cumulative[k - 1], self.cumulative[k]);
        let s = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
        self.points[k - 1] + (self.points[k] - self.points[k - 1]) * s
    }
}

impl GeodesicTree<'_> {
    pub fn max_distance(&self) -> f64 {
        self.dist.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max)
    }

    pub fn path_to(&self, y: &Point) -> Option<LatticePath> {
        let lat = self.lattice;
        let (end, conn) = lat.nearest_connected_node(y)?;
        if !self.dist[end].is_finite() {
            return None;
        }
        let mut nodes = vec![end];
        let mut cur = end;
        while self.parent[cur] != NONE {
            cur = self.parent[cur] as usize;
            nodes.push(cur);
        }
        let mut points = vec![self.root];
        points.extend(nodes.iter().rev().map(|&k| lat.node_point(k)));
        points.push(*y);
        let mut cumulative = vec![0.0];
        for w in points.windows(2) {
            let last = *cumulative.last().expect("non-empty");
            cumulative.push(last + lat.metric_length(&w[0], &w[1]));
        }
        let length = self.dist[end] + conn;
        Some(LatticePath {
            points,
            length,
            cumulative,
        })
    }
}
