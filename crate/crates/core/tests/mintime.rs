use std::cmp::Reverse;
use std::collections::BinaryHeap;

use medflow::distance::DistanceField;
use medflow::geom::{pt, Mat2, Point, Vec2};
use medflow::mintime::{hjb_residual, metric_from_control, metric_of_matrix, min_time, FSpec};
use medflow::scene::{MetricField, SampledMetric, Scene};
use medflow::shapes;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn control_scene(f: FSpec, h: f64) -> DistanceField {
    let scene = Scene::new(shapes::square(1.0), metric_from_control(&f).unwrap(), None, Some(h)).unwrap();
    DistanceField::new(&scene)
}

#[test]
fn shear_metric_matches_inverse_control() {
    let f = Mat2::new(1.0, 0.0, 1.0, 1.0);
    let g = metric_of_matrix(&f).unwrap();
    assert!((g - Mat2::new(2.0, -1.0, -1.0, 1.0)).norm() < 1e-14);
    let finv = f.try_inverse().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let v = Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        assert!(((g * v).dot(&v) - (finv * v).norm_squared()).abs() < 1e-12 * (1.0 + v.norm_squared()));
    }
}

#[test]
fn isotropic_polynomial_speed() {
    // c(x) = 1 + x^2
    let f = FSpec::IsotropicPoly {
        coeffs: vec![vec![1.0], vec![0.0], vec![1.0]],
    };
    for x in [pt(0.0, 0.3), pt(0.5, -0.2), pt(-0.9, 0.9)] {
        let c = 1.0 + x.x * x.x;
        assert!((f.metric(&x).unwrap() - Mat2::identity() / (c * c)).norm() < 1e-14);
    }
}

#[test]
fn unit_and_double_speed_exit_times() {
    let h = 0.01;
    let unit = control_scene(FSpec::constant(Mat2::identity()), h);
    let double = control_scene(FSpec::constant(Mat2::identity() * 2.0), h);
    for x in [pt(0.3, 0.3), pt(-0.5, 0.1), pt(0.0, -0.8)] {
        let d = shapes::square(1.0).boundary_distance(&x);
        let t1 = min_time(&unit, &x).unwrap();
        let t2 = min_time(&double, &x).unwrap();
        assert!((t1 - d).abs() <= h, "{x:?}: {t1} vs {d}");
        assert!((t2 - d / 2.0).abs() <= h, "{x:?}: {t2} vs {}", d / 2.0);
        // Minimum time is the lattice distance itself.
        assert_eq!(t1, unit.distance(&x).unwrap());
    }
}

#[test]
fn hjb_residual_on_constant_controls() {
    let h = 0.01;
    for c in [1.0, 2.0] {
        let field = control_scene(FSpec::constant(Mat2::identity() * c), h);
        let r = hjb_residual(&field, 201).unwrap();
        assert!(r.checked > 10_000 && r.excluded > 0);
        assert!(r.max_residual <= h, "c={c}: {}", r.max_residual);
    }
}

/// 16-neighbour Dijkstra from the boundary nodes of `[-1, 1]^2` at spacing
/// `h`, with each edge weighted by its length under the metric at its
/// midpoint.
fn square_oracle(metric: impl Fn(&Point) -> Mat2, h: f64) -> (usize, Vec<f64>) {
    let n = (2.0 / h).round() as usize + 1;
    let at = |i: usize, j: usize| pt(-1.0 + i as f64 * h, -1.0 + j as f64 * h);
    let mut dist = vec![f64::INFINITY; n * n];
    let mut heap = BinaryHeap::new();
    for j in 0..n {
        for i in 0..n {
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                dist[j * n + i] = 0.0;
                heap.push(Reverse((0u64, j * n + i)));
            }
        }
    }
    let steps: [(i64, i64); 16] = [
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
    while let Some(Reverse((key, k))) = heap.pop() {
        let d = f64::from_bits(key);
        if d > dist[k] {
            continue;
        }
        let (i, j) = ((k % n) as i64, (k / n) as i64);
        for (di, dj) in steps {
            let (a, b) = (i + di, j + dj);
            if a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                continue;
            }
            let p = at(i as usize, j as usize);
            let q = at(a as usize, b as usize);
            let e = q - p;
            let w = (metric(&pt((p.x + q.x) / 2.0, (p.y + q.y) / 2.0)) * e).dot(&e).sqrt();
            let m = b as usize * n + a as usize;
            if d + w < dist[m] {
                dist[m] = d + w;
                heap.push(Reverse(((d + w).to_bits(), m)));
            }
        }
    }
    (n, dist)
}

#[test]
fn piecewise_speed_matches_refined_oracle() {
    let h = 0.01;
    // Speed 2 on the left half, 1 on the right.
    let speed = |x: &Point| if x.x < 0.0 { 2.0f64 } else { 1.0 };
    let sampled = SampledMetric::from_fn(pt(-1.0, -1.0), pt(1.0, 1.0), 0.05, |x| {
        Mat2::identity() / speed(x).powi(2)
    });
    let scene = Scene::new(
        shapes::square(1.0),
        MetricField::GridSampled(sampled.clone()),
        None,
        Some(h),
    )
    .unwrap();
    let field = DistanceField::new(&scene);
    let fine = h / 4.0;
    let (n, oracle) = square_oracle(|x| sampled.eval(x), fine);
    // (0.1, 0) exits faster through the left half than straight to the right.
    for x in [pt(-0.5, 0.0), pt(0.1, 0.0), pt(0.5, 0.2), pt(-0.2, -0.4)] {
        let i = ((x.x + 1.0) / fine).round() as usize;
        let j = ((x.y + 1.0) / fine).round() as usize;
        let expect = oracle[j * n + i];
        let t = min_time(&field, &x).unwrap();
        assert!((t - expect).abs() <= 3.0 * h, "{x:?}: {t} vs {expect}");
    }
    let t = min_time(&field, &pt(0.1, 0.0)).unwrap();
    assert!(t < 0.75, "{t}");
}

#[test]
fn min_time_needs_a_control_scene() {
    let field = DistanceField::new(&shapes::square_scene());
    assert!(min_time(&field, &pt(0.0, 0.0)).is_err());
}
