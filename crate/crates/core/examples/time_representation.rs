//! Energy amplitudes of exp(1) and their time-domain picture.

use tqm::grid::{EnergyGrid, PhysicsParams, TimeGrid};
use tqm::representation::*;

fn main() {
    let params = PhysicsParams::default();
    let g = EnergyGrid::new(40.0, 1 << 14).unwrap();
    let psi = make_energy_state(&StateSpec::Exp { beta: 1.0 }, g, params).unwrap();

    // A full period makes the energy/time transform an exact DFT pair.
    let tg = TimeGrid::full_period(&g, &params, 2 * g.n).unwrap();
    let h = energy_to_time(&psi, &tg);
    let back = time_to_energy(&h, g).state;
    println!("||psi||^2 = {:.15}", psi.norm_sqr());
    println!("||h||^2   = {:.15}", h.norm_sqr());
    println!("round trip max err = {:.3e}", back.max_abs_diff(&psi));

    for tau in [0.0, 1.0, 5.0] {
        let p = time_amplitude_at(&psi, tau).norm_sqr();
        // |h|^2 of exp(1) is 1 / (pi (1 + tau^2)) up to midpoint error.
        println!("|h({tau})|^2 = {p:.9}  Cauchy {:.9}", 1.0 / (std::f64::consts::PI * (1.0 + tau * tau)));
    }
}
