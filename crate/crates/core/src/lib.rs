pub mod checkpoint;
pub mod checks;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod ic;
pub mod littlewood_paley;
pub mod ranges;
pub mod run;
pub mod sampling;
pub mod series;
pub mod solver;
pub mod spectral;
