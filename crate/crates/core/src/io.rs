//! CSV and SVG output.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::flow::Trajectory;
use crate::geom::{Point, Polygon};
use crate::topology::SkeletonCloud;

pub const TRAJECTORY_HEADER: &str = "t,x,y,vx,vy,delta,speed_sq,singular";
pub const SKELETON_HEADER: &str = "x,y,speed_sq,delta";

pub fn write_trajectory_csv(w: &mut impl Write, traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for s in &traj.samples {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            s.t, s.x.x, s.x.y, s.v.x, s.v.y, s.delta, s.speed_sq, s.singular as u8
        )?;
    }
    Ok(())
}

pub fn write_skeleton_csv(w: &mut impl Write, cloud: &SkeletonCloud) -> io::Result<()> {
    writeln!(w, "{SKELETON_HEADER}")?;
    for p in &cloud.points {
        writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", p.x.x, p.x.y, p.speed_sq, p.delta)?;
    }
    Ok(())
}

/// Parses a trajectory CSV back into `(t, x, y, delta, speed_sq, singular)`
/// rows.
pub fn read_trajectory_csv(text: &str) -> Result<Vec<[f64; 6]>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(TRAJECTORY_HEADER) {
        return Err("missing trajectory header".into());
    }
    lines
        .map(|line| {
            let f: Vec<f64> = line
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|e| format!("{e}: {line}")))
                .collect::<Result<_, _>>()?;
            if f.len() != 8 {
                return Err(format!("expected 8 columns: {line}"));
            }
            Ok([f[0], f[1], f[2], f[5], f[6], f[7]])
        })
        .collect()
}

/// Boundary, skeleton dots and trajectory polylines, in a viewport of the
/// bounding box plus a 5% margin.
pub fn render_svg(boundary: &Polygon, skeleton: Option<&SkeletonCloud>, trajectories: &[&Trajectory]) -> String {
    let (lo, hi) = boundary.bbox();
    let (w, h) = (hi.x - lo.x, hi.y - lo.y);
    let m = 0.05 * w.max(h);
    let (vx, vy, vw, vh) = (lo.x - m, -(hi.y + m), w + 2.0 * m, h + 2.0 * m);
    let px = vw.max(vh) / 800.0;
    let coord = |p: &Point| format!("{:.6},{:.6}", p.x, -p.y);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{vx:.6} {vy:.6} {vw:.6} {vh:.6}" width="{:.0}" height="{:.0}">"#,
        800.0 * vw / vw.max(vh),
        800.0 * vh / vw.max(vh)
    );
    let pts: Vec<String> = boundary.vertices().iter().map(coord).collect();
    let _ = writeln!(
        s,
        r#"<polygon points="{}" fill="none" stroke="black" stroke-width="{:.6}"/>"#,
        pts.join(" "),
        2.0 * px
    );
    if let Some(cloud) = skeleton {
        let _ = writeln!(s, r#"<g fill="crimson">"#);
        for p in &cloud.points {
            let _ = writeln!(s, r#"<circle cx="{:.6}" cy="{:.6}" r="{:.6}"/>"#, p.x.x, -p.x.y, px);
        }
        let _ = writeln!(s, "</g>");
    }
    for tr in trajectories {
        let pts: Vec<String> = tr.samples.iter().map(|q| coord(&q.x)).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="{:.6}"/>"#,
            pts.join(" "),
            1.5 * px
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::DistanceField;
    use crate::flow::integrate;
    use crate::geom::pt;
    use crate::shapes;

    #[test]
    fn trajectory_csv_round_trip() {
        let field = DistanceField::new(&shapes::square_scene());
        let tr = integrate(&field, &pt(0.5, 0.1), 1.0, 1e-2).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &tr).unwrap();
        let rows = read_trajectory_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(rows.len(), tr.samples.len());
        for (r, s) in rows.iter().zip(&tr.samples) {
            assert_eq!(r[0], s.t);
            assert_eq!((r[1], r[2]), (s.x.x, s.x.y));
            assert_eq!(r[3], s.delta);
        }
    }

    #[test]
    fn svg_is_closed() {
        let svg = render_svg(&shapes::square(1.0), None, &[]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<polygon"));
    }
}
