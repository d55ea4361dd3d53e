pub mod clock;
pub mod config;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod povm;
pub mod report;
pub mod representation;
pub mod sampling;
pub mod shift;
pub mod spectral;
