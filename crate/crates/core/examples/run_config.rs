//! Drives the experiment runner from a config string, as the CLI does.

use tqm::config::ExperimentConfig;
use tqm::experiments::{run, Command};

fn main() {
    let dir = std::env::temp_dir().join("tqm-example");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = ExperimentConfig::parse("clock.kind=b\nclock.lambda=0.5\nclock.e=2\nstate.kind=gauss\n").unwrap();
    let path = dir.join("run.cfg");
    std::fs::write(&path, cfg.to_text()).unwrap();

    let (report, code) = run(&Command::Density, Some(&path), &dir);
    println!("exit {code}, outputs {:?}", report.outputs);
    for (k, v) in &report.values {
        println!("{k} = {v}");
    }
}
