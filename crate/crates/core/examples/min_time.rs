//! Minimum exit time of the square under the control `y' = 2a`, `|a| <= 1`,
//! computed as a riemannian distance, with the HJB residual.

use medflow::distance::DistanceField;
use medflow::geom::{pt, Mat2};
use medflow::mintime::{hjb_residual, metric_from_control, min_time, FSpec};
use medflow::scene::Scene;
use medflow::shapes;

fn main() -> medflow::Result<()> {
    let metric = metric_from_control(&FSpec::constant(Mat2::identity() * 2.0))?;
    let scene = Scene::new(shapes::square(1.0), metric, None, Some(0.01))?;
    let field = DistanceField::new(&scene);
    for x in [pt(0.3, 0.3), pt(0.9, 0.0), pt(-0.5, 0.25)] {
        println!("T({:5.2},{:5.2}) = {:.6}", x.x, x.y, min_time(&field, &x)?);
    }
    let r = hjb_residual(&field, 201)?;
    println!(
        "HJB residual {:.3e} on {} nodes ({} excluded near the singular set)",
        r.max_residual, r.checked, r.excluded
    );
    Ok(())
}
