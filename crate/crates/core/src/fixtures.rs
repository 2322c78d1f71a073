//! Bundled measured data.

use crate::montecarlo::CountsTable;

/// Measured count rates at φ = 22.5°, already corrected for channel efficiency.
pub const TABLE1_CSV: &str = include_str!("../data/table1.csv");

pub fn table1() -> CountsTable {
    CountsTable::from_csv(TABLE1_CSV).expect("bundled fixture parses")
}
