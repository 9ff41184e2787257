use medflow::distance::{DistanceField, EPS_SING};
use medflow::flow::is_singular;
use medflow::geom::{pt, Mat2, Point, Polygon};
use medflow::mintime::halton_interior;
use medflow::scene::{MetricField, SampledMetric, Scene};
use medflow::shapes;
use medflow::topology::extract_skeleton;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hexagon(rng: &mut ChaCha8Rng) -> Polygon {
    let radii: Vec<f64> = (0..6).map(|_| rng.gen_range(0.5..1.5)).collect();
    shapes::star(&radii, rng.gen_range(0.0..1.0))
}

/// Nearest of `n` boundary points spaced evenly by arc length.
fn sampled_boundary(poly: &Polygon, n: usize) -> Vec<Point> {
    let perimeter: f64 = poly.edges().map(|(a, b)| (b - a).norm()).sum();
    let step = perimeter / n as f64;
    let mut out = Vec::with_capacity(n + poly.len());
    for (a, b) in poly.edges() {
        let len = (b - a).norm();
        let k = (len / step).ceil() as usize;
        out.extend((0..k).map(|i| a + (b - a) * (i as f64 / k as f64)));
    }
    out
}

#[test]
fn hexagon_distance_matches_dense_boundary_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let poly = random_hexagon(&mut rng);
    let scene = Scene::euclidean(poly.clone()).unwrap();
    let field = DistanceField::new(&scene);
    let samples = sampled_boundary(&poly, 1_000_000);
    assert!(samples.len() >= 1_000_000);
    for x in halton_interior(&scene, 50) {
        let oracle = samples.iter().map(|q| (x - q).norm()).fold(f64::INFINITY, f64::min);
        let d = field.distance(&x).unwrap();
        assert!((d - oracle).abs() <= 1e-4, "{x:?}: {d} vs {oracle}");
    }
}

#[test]
fn ellipse_major_axis_is_singular() {
    let field = DistanceField::new(&shapes::ellipse_scene());
    assert!(is_singular(&field, &pt(1.0, 0.0)).unwrap().singular);
    assert!(is_singular(&field, &pt(-1.4, 0.0)).unwrap().singular);
    assert!(!is_singular(&field, &pt(1.0, 0.2)).unwrap().singular);
    assert!(!is_singular(&field, &pt(1.7, 0.0)).unwrap().singular);
}

#[test]
fn disk_skeleton_collapses_to_the_center() {
    for n in [64, 256, 1024] {
        let field = DistanceField::new(&Scene::euclidean(shapes::disk(n)).unwrap());
        let cloud = extract_skeleton(&field, 129).unwrap();
        assert!(!cloud.points.is_empty());
        for p in cloud.positions() {
            assert!(p.coords.norm() <= cloud.cell(), "{n}-gon spoke at {p:?}");
        }
    }
}

#[test]
fn grid_sampled_diameter_approaches_closed_form() {
    let h = 0.01;
    let sampled = SampledMetric::from_fn(pt(-1.0, -1.0), pt(1.0, 1.0), 0.05, |_| Mat2::identity() * 4.0);
    let scene = Scene::new(shapes::square(1.0), MetricField::GridSampled(sampled), None, Some(h)).unwrap();
    let d = scene.diameter();
    assert!((d - 4.0 * 2f64.sqrt()).abs() <= 3.0 * h, "{d}");
}

#[test]
fn lattice_agrees_with_exact_backend_on_flat_fronts() {
    let scene = shapes::square_scene();
    let exact = DistanceField::new(&scene);
    let points = halton_interior(&scene, 200);
    let worst = |h: f64| {
        let lattice = DistanceField::lattice(&scene, h);
        points
            .iter()
            .map(|x| (exact.distance(x).unwrap() - lattice.distance(x).unwrap()).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (worst(0.01), worst(0.005));
    assert!(e1 <= 0.15 * 0.01 && e2 <= 0.15 * 0.005, "{e1} {e2}");
    // Well inside a sheet both backends see a single regular generator.
    let lattice = DistanceField::lattice(&scene, 0.01);
    for x in [pt(0.5, 0.1), pt(-0.8, -0.4)] {
        let fa = exact.superdifferential(&x).unwrap();
        let fb = lattice.superdifferential(&x).unwrap();
        assert!(!fa.singular && !fb.singular);
        assert!((fa.min_norm_velocity - fb.min_norm_velocity).norm() < 0.05);
    }
}

/// Around a reentrant vertex or a curved boundary the front is a point
/// source, and a 16-neighbour graph path overshoots by at most the half-gap
/// between stencil directions, whatever the spacing.
#[test]
fn lattice_error_near_point_sources_is_stencil_limited() {
    let gap = 0.5f64.atan();
    let bias = 1.0 / (gap / 2.0).cos() - 1.0;
    for scene in [shapes::l_scene(), shapes::disk_scene()] {
        let exact = DistanceField::new(&scene);
        for h in [0.02, 0.01] {
            let lattice = DistanceField::lattice(&scene, h);
            for x in halton_interior(&scene, 200) {
                let (a, b) = (exact.distance(&x).unwrap(), lattice.distance(&x).unwrap());
                assert!((a - b).abs() <= bias * a + h, "{x:?} at h={h}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn lattice_flags_the_square_diagonal() {
    let scene = shapes::scaled_square_scene(4.0, None);
    let field = DistanceField::new(&scene);
    let fan = field.superdifferential(&pt(0.3, 0.3)).unwrap();
    assert!(fan.singular && fan.speed_sq < 1.0 - EPS_SING);
    assert!((fan.delta - 1.4).abs() < 0.02);
    assert!(!field.superdifferential(&pt(0.5, 0.0)).unwrap().singular);
}

fn rigid(poly: &Polygon, th: f64, dx: f64, dy: f64) -> Polygon {
    let (s, c) = th.sin_cos();
    poly.transformed(|p| pt(c * p.x - s * p.y + dx, s * p.x + c * p.y + dy))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euclidean_diameter_is_rigid_invariant(
        radii in proptest::collection::vec(0.3f64..2.0, 3..9),
        th in 0.0f64..6.3, dx in -5.0f64..5.0, dy in -5.0f64..5.0,
    ) {
        let poly = shapes::star(&radii, 0.1);
        let a = Scene::euclidean(poly.clone()).unwrap().diameter();
        let b = Scene::euclidean(rigid(&poly, th, dx, dy)).unwrap().diameter();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn distance_is_rigid_invariant(
        radii in proptest::collection::vec(0.5f64..1.5, 5..8),
        th in 0.0f64..6.3, dx in -3.0f64..3.0, dy in -3.0f64..3.0, k in 0usize..40,
    ) {
        let poly = shapes::star(&radii, 0.2);
        let scene = Scene::euclidean(poly.clone()).unwrap();
        let moved = Scene::euclidean(rigid(&poly, th, dx, dy)).unwrap();
        let x = halton_interior(&scene, 40)[k];
        let (s, c) = th.sin_cos();
        let y = pt(c * x.x - s * x.y + dx, s * x.x + c * x.y + dy);
        let a = DistanceField::new(&scene).distance(&x).unwrap();
        let b = DistanceField::new(&moved).distance(&y).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn scene_json_round_trip(
        radii in proptest::collection::vec(0.3f64..2.0, 3..9),
        l1 in 0.1f64..10.0, l2 in 0.1f64..10.0, alpha in proptest::option::of(0.01f64..3.0),
    ) {
        let metric = MetricField::ConstantMatrix(Mat2::new(l1, 0.0, 0.0, l2));
        let scene = Scene::new(shapes::star(&radii, 0.0), metric, alpha, Some(0.02)).unwrap();
        let back = Scene::from_json(&scene.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), scene.to_json());
        prop_assert_eq!(back.boundary().vertices(), scene.boundary().vertices());
        prop_assert_eq!(back.curvature_bound(), alpha);
    }
}
