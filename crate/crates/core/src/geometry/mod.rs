//! Delone subsets of the integer lattice and their local structure.

mod delone;
pub(crate) mod grid;
mod io;
mod lattice;
mod pattern;

pub use delone::{
    complement, compute_r, generate_periodic, generate_random_cell, generate_sturmian, sturmian_flagged_sites,
    DeloneSet, Rotation, NEAR_CUT_TOLERANCE,
};
pub use io::{read_delone, write_delone};
pub use lattice::{LatticePoint, Window};
pub use pattern::{
    enumerate_patterns, find_disjoint_repetitions, pattern_frequency, supf_diagnostic, FrequencyReport, FrequencyRow,
    Pattern, Repetitions,
};
