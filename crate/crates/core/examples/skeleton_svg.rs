//! Extracts the singular set of the ellipse and renders it with a few
//! trajectories. The SVG goes to the path given as first argument, or to
//! `skeleton.svg`.

use medflow::distance::DistanceField;
use medflow::flow::integrate;
use medflow::geom::pt;
use medflow::io::render_svg;
use medflow::shapes;
use medflow::topology::extract_skeleton;

fn main() -> medflow::Result<()> {
    let scene = shapes::ellipse_scene();
    let field = DistanceField::new(&scene);
    let cloud = extract_skeleton(&field, 129)?;
    let xs = cloud.points.iter().map(|p| p.x.x.abs());
    println!(
        "{} singular nodes, |x| <= {:.4}, |y| <= {:.2e}",
        cloud.points.len(),
        xs.fold(0.0, f64::max),
        cloud.points.iter().map(|p| p.x.y.abs()).fold(0.0, f64::max)
    );
    let seeds = [pt(1.2, 0.6), pt(-0.4, -0.8), pt(1.8, -0.2), pt(0.0, 0.9)];
    let trajs = seeds
        .iter()
        .map(|s| integrate(&field, s, 3.0, 1e-2))
        .collect::<medflow::Result<Vec<_>>>()?;
    let path = std::env::args().nth(1).unwrap_or_else(|| "skeleton.svg".into());
    std::fs::write(
        &path,
        render_svg(scene.boundary(), Some(&cloud), &trajs.iter().collect::<Vec<_>>()),
    )?;
    println!("wrote {path}");
    Ok(())
}
