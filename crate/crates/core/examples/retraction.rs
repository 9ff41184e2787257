//! Checks that the flow deforms the L-shaped domain onto its singular set.

use medflow::distance::DistanceField;
use medflow::shapes;
use medflow::topology::check_retraction;

fn main() -> medflow::Result<()> {
    let field = DistanceField::new(&shapes::l_scene());
    let report = check_retraction(&field, 200, 1e-2, 129)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}
