//! How pointer width and height scale as the clock sharpens.

use tqm::clock::*;
use tqm::grid::{PhysicsParams, TimeGrid};

fn main() {
    let params = PhysicsParams::default();
    println!("case (a)   lambda  fwhm     peak*hbar*lambda");
    for lambda in [1.0, 0.3, 0.1, 0.01] {
        let spec = ClockSpec::exponential(lambda, params).unwrap();
        let tg = TimeGrid::new(-20.0 * lambda, 20.0 * lambda, 8001).unwrap();
        let m = sharpness_metrics(&spec, &tg, lambda).unwrap();
        println!("          {lambda:6.2}  {:.6} {:.6}", m.fwhm, m.peak_height * lambda);
    }
    println!("case (b), lambda = 0   E  fwhm     peak*2pi/E");
    for e in [1.0, 4.0, 16.0] {
        let spec = ClockSpec::truncated(0.0, e, params).unwrap();
        let tg = TimeGrid::new(-20.0 / e, 20.0 / e, 8001).unwrap();
        let m = sharpness_metrics(&spec, &tg, 1.0 / e).unwrap();
        println!("                     {e:4}  {:.6} {:.6}", m.fwhm, m.peak_height * 2.0 * std::f64::consts::PI / e);
    }
}
