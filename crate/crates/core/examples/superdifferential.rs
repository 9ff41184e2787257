//! Nearest boundary points and superdifferential fans on the square and the
//! L-shaped domain.

use medflow::distance::DistanceField;
use medflow::geom::pt;
use medflow::shapes;

fn main() -> medflow::Result<()> {
    for (name, scene) in [("square", shapes::square_scene()), ("l_shape", shapes::l_scene())] {
        let field = DistanceField::new(&scene);
        for x in [pt(0.5, 0.0), pt(0.3, 0.3), pt(-0.5, 0.0), pt(0.0, 0.0)] {
            if !field.contains(&x) {
                continue;
            }
            let fan = field.superdifferential(&x)?;
            println!(
                "{name:8} x=({:5.2},{:5.2})  delta={:.4}  generators={}  v*=({:+.4},{:+.4})  s*={:.4}  singular={}",
                x.x,
                x.y,
                fan.delta,
                fan.generators.len(),
                fan.min_norm_velocity.x,
                fan.min_norm_velocity.y,
                fan.speed_sq,
                fan.singular
            );
        }
    }
    Ok(())
}
