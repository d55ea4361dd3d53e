//! Seeded draws from the clock outcome law.

use tqm::clock::{outcome_density, ClockSpec};
use tqm::grid::{EnergyGrid, PhysicsParams, TimeGrid};
use tqm::representation::*;
use tqm::sampling::*;

fn main() {
    let params = PhysicsParams::default();
    let g = EnergyGrid::new(40.0, 1 << 14).unwrap();
    let psi = make_energy_state(&StateSpec::Exp { beta: 1.0 }, g, params).unwrap();
    let clock = ClockSpec::exponential(1.0, params).unwrap();
    let tg = TimeGrid::full_period(&g, &params, 4 * g.n).unwrap();

    let n = 50_000;
    let xs = sample_outcomes(&psi, &clock, &tg, n, 7).unwrap();
    let cdf = GridCdf::new(&outcome_density(&psi, &clock, &tg).unwrap()).unwrap();
    println!("median {:.4}", median(&xs).unwrap());
    let ks = ks_statistic(&xs, |t| cdf.eval(t));
    println!("KS {ks:.4e}, sqrt(n) KS = {:.3} (95% of seeds below 1.36)", ks * (n as f64).sqrt());
    // The law is Cauchy with scale 2: quartiles at -2 and 2.
    let below = xs.iter().filter(|&&x| x < 2.0).count() as f64 / n as f64;
    println!("fraction below 2: {below:.4}");
}
