//! Ideal time-of-arrival law, interval probabilities and the no-go staircase.

use tqm::grid::{EnergyGrid, PhysicsParams, TimeGrid};
use tqm::povm::*;
use tqm::representation::*;

fn main() {
    let params = PhysicsParams::default();
    let g = EnergyGrid::new(40.0, 1 << 14).unwrap();
    let psi = make_energy_state(&StateSpec::Gauss { mu: 5.0, sigma: 1.0 }, g, params).unwrap();
    let tg = TimeGrid::new(-20.0, 20.0, 4096).unwrap();

    let d = ideal_time_density(&psi, &tg);
    println!("window mass {:.6}, most likely tau {:.4}", d.mass, ml_estimate(&d).unwrap());
    let p = povm_probability(&psi, &Interval::new(-1.0, 1.0).unwrap(), &tg);
    println!("P(-1 < tau < 1) = {:.6}", p.probability);

    let exp1 = make_energy_state(&StateSpec::Exp { beta: 1.0 }, g, params).unwrap();
    let full = TimeGrid::full_period(&g, &params, 4 * g.n).unwrap();
    let table = nogo_sweep(&exp1, &[1.0, 0.3, 0.1, 0.03, 0.01], &full).unwrap();
    println!("lambda  TV(realized, ideal)");
    for r in &table.rows {
        println!("{:6.2}  {:.5}", r.lambda, r.tv_distance);
    }
}
