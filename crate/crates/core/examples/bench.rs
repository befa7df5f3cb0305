//! Runs the benchmark suite and prints the CSV. Rows that need an SMT
//! solver are marked not-run when none is configured.

use obsyn::experiments::{records_to_csv, reproduce_tables, SolverConfig};

fn main() {
    let jobs = std::env::args()
        .nth(1)
        .and_then(|j| j.parse().ok())
        .unwrap_or(1);
    let records = reproduce_tables(&SolverConfig::default(), jobs);
    print!("{}", records_to_csv(&records));
}
