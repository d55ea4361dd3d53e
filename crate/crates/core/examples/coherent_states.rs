//! Coherent vectors |s) and the coshift semigroup acting on them.

use tqm::grid::{EnergyGrid, PhysicsParams};
use tqm::representation::CoherentLabel;
use tqm::shift::*;

fn main() {
    let params = PhysicsParams::default();
    let g = EnergyGrid::new(32.0, 1 << 16).unwrap();
    let a = CoherentLabel::new(0.5, 1.0).unwrap();
    let b = CoherentLabel::new(1.0, -2.0).unwrap();

    let (va, vb) = (coherent_vector(a, g, params), coherent_vector(b, g, params));
    println!("(a|b) numeric = {:.9}", va.overlap(&vb).unwrap());
    println!("(a|b) exact   = {:.9}", coherent_overlap(&a, &b, &params).unwrap());

    // V_lambda |s) = exp(-lambda s) |s) away from the top of the grid.
    let lam = 0.5;
    let q = g.commensurate_cells(lam).unwrap();
    let v = va.as_state();
    let shifted = coshift(&v, ShiftAmount::cells(&g, q));
    let factor = (-lam * a.s(&params)).exp();
    let j = 100;
    println!("ratio at cell {j}: {:.12}  expected {:.12}", shifted.amps[j] / v.amps[j], factor);
}
