//! Reading a case (a) clock: likelihood, posterior state and outcome law.

use tqm::clock::*;
use tqm::grid::{EnergyGrid, PhysicsParams, TimeGrid};
use tqm::povm::ml_estimate;
use tqm::representation::*;

fn main() {
    let params = PhysicsParams::default();
    let g = EnergyGrid::new(40.0, 1 << 14).unwrap();
    let psi = make_energy_state(&StateSpec::Exp { beta: 1.0 }, g, params).unwrap();
    let clock = ClockSpec::exponential(0.2, params).unwrap();

    for tau in [0.0, 0.5, 2.0] {
        let o = posterior_state(&psi, &clock, tau).unwrap();
        println!("tau {tau:4}: likelihood {:.6}  fidelity with prior {:.4}", o.likelihood, o.fidelity(&psi).unwrap());
    }

    let tg = TimeGrid::new(-10.0, 10.0, 2001).unwrap();
    let real = outcome_density(&psi, &clock, &tg).unwrap();
    println!("outcome mass on [-10, 10]: {:.6}, mode {:.4}", real.mass, ml_estimate(&real).unwrap());

    let cov = covariance_check(&psi, &clock, 1.0, &tg).unwrap();
    println!("covariance residuals: density {:.2e}, posterior {:.2e}", cov.density.abs_err, cov.posterior.abs_err);
}
