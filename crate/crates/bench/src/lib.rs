//! Shared workloads for the benchmarks.

use wdvv_core::Multiplet;

/// Multiplets and orders benchmarked end to end.
pub const WORKLOADS: &[(&str, u32)] = &[("2,2,2", 4), ("2,2,3", 3), ("2,3,4", 2), ("3,3,3", 2)];

pub fn multiplet(s: &str) -> Multiplet {
    s.parse().expect("valid multiplet")
}
