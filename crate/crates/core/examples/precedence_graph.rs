//! Precedence extraction on a three-box pile, then packing it box by box.
//!
//! cargo run --example precedence_graph

use tap_core::geom::Orientation;
use tap_core::instance::fixture_f1;
use tap_core::precedence::PrecedenceGraph;

fn main() -> tap_core::Result<()> {
    let inst = fixture_f1();
    let mut g = PrecedenceGraph::extract(&inst)?;
    println!("{}", g.to_dot());
    for i in 0..g.len() {
        let node = g.node(i);
        let (removal, side) = g.priority(i);
        println!("box {}: blocked by {:?}, removal count {removal}, side access {side}", g.id(i), node.tb.iter().map(|&j| g.id(j)).collect::<Vec<_>>());
    }
    // pack whatever is movable, lowest id first
    while g.unpacked_count() > 0 {
        let states = g.valid_states();
        let list: Vec<String> = states.iter().map(|s| format!("{}/{}", g.id(s.box_idx), s.orientation.0)).collect();
        let pick = states[0];
        println!("valid: {:<20} take {}", list.join(" "), g.id(pick.box_idx));
        g.remove_box(pick.box_idx)?;
    }
    assert!(!PrecedenceGraph::extract(&inst)?.is_valid(1, Orientation::IDENTITY));
    Ok(())
}
