//! The logistic speed bound along singular trajectories, euclidean and
//! riemannian.

use medflow::distance::DistanceField;
use medflow::flow::{integrate, verify_speed_bound};
use medflow::geom::pt;
use medflow::shapes;

fn main() -> medflow::Result<()> {
    let field = DistanceField::new(&shapes::square_scene());
    let traj = integrate(&field, &pt(0.3, 0.3), 1.0, 1e-3)?;
    let rep = verify_speed_bound(&traj, &field)?;
    for k in (0..traj.samples.len()).step_by(100) {
        let t = traj.samples[k].t;
        let closed = if t <= 0.6 { 4.0 * (1.0 + t / 1.4).ln() } else { f64::NAN };
        println!(
            "t={t:.2}  s={:.3}  bound={:.4}  alpha={:.5}  closed form={closed:.5}",
            rep.measured[k], rep.bound[k], rep.integral[k]
        );
    }
    println!("euclidean: pass={} min margin={:.3e}", rep.pass, rep.min_margin);

    let scene = shapes::scaled_square_scene(4.0, Some(0.5));
    let field = DistanceField::new(&scene);
    let traj = integrate(&field, &pt(0.3, 0.3), 2.0, 1e-3)?;
    let rep = verify_speed_bound(&traj, &field)?;
    println!(
        "metric 4 Id, curvature bound 0.5: pass={} min margin={:.3e}",
        rep.pass, rep.min_margin
    );
    Ok(())
}
