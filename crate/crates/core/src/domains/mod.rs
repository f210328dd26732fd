//! Benchmark domains.

pub mod battleship;
pub mod micro;
pub mod pocman;
pub mod rocksample;

pub use battleship::Battleship;
pub use micro::PlanTable;
pub use pocman::PocMan;
pub use rocksample::RockSample;
