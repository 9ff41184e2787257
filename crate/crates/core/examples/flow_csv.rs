//! Integrates the singular gradient flow from (0.5, 0.1) in the square and
//! writes the trajectory as CSV to stdout.
//!
//!     cargo run --release --example flow_csv > flow.csv

use medflow::distance::DistanceField;
use medflow::flow::integrate;
use medflow::geom::pt;
use medflow::io::write_trajectory_csv;
use medflow::shapes;

fn main() -> medflow::Result<()> {
    let field = DistanceField::new(&shapes::square_scene());
    let traj = integrate(&field, &pt(0.5, 0.1), 1.0, 1e-3)?;
    eprintln!(
        "{} samples, enters the singular set at t={:.4}, ends at ({:.2e}, {:.2e})",
        traj.samples.len(),
        traj.first_singular_time().unwrap_or(f64::NAN),
        traj.end().x.x,
        traj.end().x.y
    );
    write_trajectory_csv(&mut std::io::stdout().lock(), &traj)?;
    Ok(())
}
