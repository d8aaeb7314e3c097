pub mod analysis;
pub mod cli;
pub mod error;
pub mod hop1d;
pub mod integrate;
pub mod params;
pub mod slip2d;
pub mod sweep;
