//! Minimal-norm point of the convex hull of finitely many covectors, measured
//! in the dual inner product `<A^{-1} p, q>`.
//!
//! Up to three generators are handled in closed form (segment projection and
//! triangle containment). Larger sets go through Wolfe's minimum-norm-point
//! iteration, which terminates once the first-order optimality condition
//! `<A^{-1} p*, p_i - p*> >= -tol_vi` holds for every generator.

use nalgebra::{DMatrix, DVector};

use crate::geom::{is_spd, Mat2, Vec2};
use crate::{Error, Result};

pub const DEFAULT_MAX_GENERATORS: usize = 16;
pub const TOL_VI: f64 = 1e-10;

/// Minimizer of `q -> <A^{-1} q, q>` over the hull of the generators.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexSolution {
    /// Barycentric weights, one per input generator.
    pub coefficients: Vec<f64>,
    /// `p* = sum_i lambda_i p_i`.
    pub covector: Vec2,
    /// `v* = A^{-1} p*`.
    pub velocity: Vec2,
    /// `<A v*, v*> = <A^{-1} p*, p*>`.
    pub speed_sq: f64,
}

impl SimplexSolution {
    /// Indices of generators with non-negligible weight.
    pub fn active(&self) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 1e-12)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MinNormSolver {
    pub max_generators: usize,
    pub tol_vi: f64,
}

impl Default for MinNormSolver {
    fn default() -> Self {
        Self {
            max_generators: DEFAULT_MAX_GENERATORS,
            tol_vi: TOL_VI,
        }
    }
}

/// Solves with the default limits (at most 16 generators).
pub fn min_norm_point(generators: &[Vec2], a: &Mat2) -> Result<SimplexSolution> {
    MinNormSolver::default().solve(generators, a)
}

/// Smallest value of `<A^{-1} p*, p_i - p*>` over the generators; the
/// solution is optimal when this is non-negative.
pub fn variational_gap(generators: &[Vec2], a: &Mat2, sol: &SimplexSolution) -> f64 {
    let ainv = a.try_inverse().unwrap_or_else(Mat2::zeros);
    let w = ainv * sol.covector;
    generators
        .iter()
        .map(|p| w.dot(&(p - sol.covector)))
        .fold(f64::INFINITY, f64::min)
}

impl MinNormSolver {
    pub fn with_max_generators(max_generators: usize) -> Self {
        Self {
            max_generators,
            ..Self::default()
        }
    }

    pub fn solve(&self, generators: &[Vec2], a: &Mat2) -> Result<SimplexSolution> {
        if generators.is_empty() {
            return Err(Error::EmptyGenerators);
        }
        if generators.len() > self.max_generators {
            return Err(Error::TooManyGenerators {
                count: generators.len(),
                limit: self.max_generators,
            });
        }
        if !is_spd(a) {
            return Err(Error::NonSpdMatrix);
        }
        let ainv = a.try_inverse().ok_or(Error::NonSpdMatrix)?;
        let ainv = 0.5 * (ainv + ainv.transpose());

        let closed = match generators.len() {
            1 => Some(vec![1.0]),
            2 => Some(segment_weights(&generators[0], &generators[1], &ainv).to_vec()),
            3 => Some(triangle_weights(generators, &ainv)),
            _ => None,
        };
        if let Some(lambda) = closed {
            let sol = assemble(generators, lambda, &ainv);
            if gap(generators, &ainv, &sol) >= -self.tol_vi {
                return Ok(sol);
            }
        }
        Ok(assemble(generators, wolfe(generators, &ainv, self.tol_vi), &ainv))
    }
}

fn ip(ainv: &Mat2, u: &Vec2, v: &Vec2) -> f64 {
    u.dot(&(ainv * v))
}

fn gap(generators: &[Vec2], ainv: &Mat2, sol: &SimplexSolution) -> f64 {
    let w = ainv * sol.covector;
    generators
        .iter()
        .map(|p| w.dot(&(p - sol.covector)))
        .fold(f64::INFINITY, f64::min)
}

fn assemble(generators: &[Vec2], lambda: Vec<f64>, ainv: &Mat2) -> SimplexSolution {
    let covector = generators
        .iter()
        .zip(&lambda)
        .fold(Vec2::zeros(), |acc, (p, l)| acc + p * *l);
    let velocity = ainv * covector;
    let speed_sq = covector.dot(&velocity).max(0.0);
    SimplexSolution {
        coefficients: lambda,
        covector,
        velocity,
        speed_sq,
    }
}

/// Weights of the closest point to the origin on `[p, q]`.
fn segment_weights(p: &Vec2, q: &Vec2, ainv: &Mat2) -> [f64; 2] {
    let d = p - q;
    let dd = ip(ainv, &d, &d);
    if dd <= f64::MIN_POSITIVE {
        return [1.0, 0.0];
    }
    let mu = (ip(ainv, p, &d) / dd).clamp(0.0, 1.0);
    [1.0 - mu, mu]
}

fn triangle_weights(g: &[Vec2], ainv: &Mat2) -> Vec<f64> {
    // containment is affine, so it can be decided in plain coordinates
    let (a, b, c) = (g[0], g[1], g[2]);
    let area = (b - a).perp(&(c - a));
    let scale = (b - a).norm().max((c - a).norm()).max(1e-300);
    if area.abs() > 1e-14 * scale * scale {
        let l0 = b.perp(&c) / area;
        let l1 = c.perp(&a) / area;
        let l2 = a.perp(&b) / area;
        if l0 >= 0.0 && l1 >= 0.0 && l2 >= 0.0 {
            return vec![l0, l1, l2];
        }
    }
    let mut best = vec![1.0, 0.0, 0.0];
    let mut best_val = f64::INFINITY;
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        let w = segment_weights(&g[i], &g[j], ainv);
        let p = g[i] * w[0] + g[j] * w[1];
        let val = ip(ainv, &p, &p);
        if val < best_val {
            best_val = val;
            best = vec![0.0; 3];
            best[i] = w[0];
            best[j] = w[1];
        }
    }
    best
}

/// Affine minimizer of the norm over `sum_i alpha_i p_i`, `sum alpha = 1`.
fn affine_minimizer(points: &[Vec2], ainv: &Mat2) -> Option<Vec<f64>> {
    let k = points.len();
    let mut m = DMatrix::<f64>::zeros(k + 1, k + 1);
    let mut rhs = DVector::<f64>::zeros(k + 1);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = ip(ainv, &points[i], &points[j]);
        }
        m[(i, k)] = 1.0;
        m[(k, i)] = 1.0;
    }
    rhs[k] = 1.0;
    let sol = m.lu().solve(&rhs)?;
    let alpha: Vec<f64> = sol.iter().take(k).copied().collect();
    alpha.iter().all(|v| v.is_finite()).then_some(alpha)
}

fn wolfe(generators: &[Vec2], ainv: &Mat2, tol_vi: f64) -> Vec<f64> {
    let n = generators.len();
    let norm = |p: &Vec2| ip(ainv, p, p);
    let start = (0..n)
        .min_by(|&i, &j| norm(&generators[i]).total_cmp(&norm(&generators[j])))
        .unwrap_or(0);
    let mut set: Vec<usize> = vec![start];
    let mut lambda: Vec<f64> = vec![1.0];
    let mut x = generators[start];

    let combine = |set: &[usize], lambda: &[f64]| {
        set.iter()
            .zip(lambda)
            .fold(Vec2::zeros(), |acc, (&i, &l)| acc + generators[i] * l)
    };

    for _ in 0..(10 * n + 50) {
        let (j, m) = (0..n)
            .map(|i| (i, ip(ainv, &x, &generators[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        if norm(&x) - m <= tol_vi || set.contains(&j) {
            break;
        }
        set.push(j);
        lambda.push(0.0);
        loop {
            let pts: Vec<Vec2> = set.iter().map(|&i| generators[i]).collect();
            let Some(alpha) = affine_minimizer(&pts, ainv) else {
                set.pop();
                lambda.pop();
                return expand(n, &set, &lambda);
            };
            if alpha.iter().all(|&a| a > 1e-15) {
                lambda = alpha;
                x = combine(&set, &lambda);
                break;
            }
            let mut theta = 1.0f64;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= 1e-15 && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = (1.0 - theta) * *l + theta * a;
            }
            let mut k = 0;
            while k < set.len() {
                if lambda[k] <= 1e-15 {
                    set.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
            x = combine(&set, &lambda);
            if set.len() == 1 {
                break;
            }
        }
    }
    expand(n, &set, &lambda)
}

fn expand(n: usize, set: &[usize], lambda: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (&i, &l) in set.iter().zip(lambda) {
        out[i] += l;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn singleton_hull() {
        let s = min_norm_point(&[v(0.6, -0.8)], &Mat2::identity()).unwrap();
        assert_eq!(s.covector, v(0.6, -0.8));
        assert!((s.speed_sq - 1.0).abs() < 1e-15);
    }

    #[test]
    fn antipodal_pair() {
        let s = min_norm_point(&[v(1.0, 0.0), v(-1.0, 0.0)], &Mat2::identity()).unwrap();
        assert!(s.covector.norm() < 1e-15);
        assert_eq!(s.speed_sq, 0.0);
    }

    #[test]
    fn pair_at_120_degrees() {
        // brute-force scan of the 1-simplex at 1e-6 resolution, frozen:
        // minimum 0.25 at lambda = 0.5, i.e. the midpoint (1/4, sqrt(3)/4)
        let th = 2.0 * PI / 3.0;
        let g = [v(1.0, 0.0), v(th.cos(), th.sin())];
        let s = min_norm_point(&g, &Mat2::identity()).unwrap();
        assert!((s.covector - v(0.25, 3f64.sqrt() / 4.0)).norm() < 1e-12);
        assert!((s.speed_sq - (th / 2.0).cos().powi(2)).abs() < 1e-12);
        assert!((s.speed_sq - 0.25).abs() < 1e-12);
    }

    #[test]
    fn origin_inside_many_generators() {
        let g: Vec<Vec2> = (0..8)
            .map(|k| {
                let t = k as f64 * PI / 4.0 + 0.1;
                v(t.cos(), t.sin())
            })
            .collect();
        let s = min_norm_point(&g, &Mat2::identity()).unwrap();
        assert!(s.speed_sq < 1e-20);
        let sum: f64 = s.coefficients.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            min_norm_point(&[], &Mat2::identity()),
            Err(Error::EmptyGenerators)
        ));
        let bad = Mat2::new(1.0, 0.0, 0.0, -1.0);
        assert!(matches!(min_norm_point(&[v(1.0, 0.0)], &bad), Err(Error::NonSpdMatrix)));
        let many = vec![v(1.0, 0.0); 17];
        assert!(matches!(
            min_norm_point(&many, &Mat2::identity()),
            Err(Error::TooManyGenerators { .. })
        ));
        assert!(MinNormSolver::with_max_generators(17)
            .solve(&many, &Mat2::identity())
            .is_ok());
    }

    #[test]
    fn wolfe_agrees_with_closed_form_on_triangles() {
        let a = Mat2::new(2.0, 0.3, 0.3, 0.7);
        let ainv = a.try_inverse().unwrap();
        let g = [v(1.0, 0.2), v(0.4, 1.1), v(0.9, 0.8)];
        let closed = assemble(&g, triangle_weights(&g, &ainv), &ainv);
        let iter = assemble(&g, wolfe(&g, &ainv, TOL_VI), &ainv);
        assert!((closed.speed_sq - iter.speed_sq).abs() < 1e-12);
        assert!((closed.covector - iter.covector).norm() < 1e-9);
    }
}
