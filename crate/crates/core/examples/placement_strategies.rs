//! Where LB, MUL and MACS put the same box in a partly filled container.
//!
//! cargo run --example placement_strategies

use tap_core::container::ContainerState;
use tap_core::geom::{Extent, Orientation, Point};
use tap_core::instance::PlacedBox;
use tap_core::placement::{accessible_convex_space, candidates_lb, candidates_mul, select_placement, PlacementRequest, Strategy};

fn main() -> tap_core::Result<()> {
    let mut state = ContainerState::new(0, 5, 1);
    for (id, x, w, h) in [(10, 0, 2, 2), (11, 2, 1, 1)] {
        state.push(PlacedBox {
            box_id: id,
            orientation: Orientation::IDENTITY,
            position: Point::new2(x, 0),
            dims: Extent::new2(w, h),
            container_idx: 0,
        })?;
    }
    println!("heights {:?}", state.heights.heights());
    let dims = Extent::new2(2, 1);
    let show = |c: &[tap_core::placement::PlacementCandidate]| c.iter().map(|c| format!("({},{})", c.x, c.y)).collect::<Vec<_>>().join(" ");
    println!("LB candidates  {}", show(&candidates_lb(&state, dims)?));
    println!("MUL candidates {}", show(&candidates_mul(&state, dims)?));
    let acs = accessible_convex_space(&state.heights, 6)?;
    println!("convex space below y=6: largest {} total {}", acs.largest, acs.total);
    let req = PlacementRequest { box_id: 0, orientation: Orientation::IDENTITY, dims, headroom: 2 };
    for s in [Strategy::Lb, Strategy::Mul, Strategy::Macs] {
        let c = select_placement(s, &state, &req)?;
        println!("{s:<5} -> x={} y={} score {:.3}", c.x, c.y, c.score);
    }
    Ok(())
}
