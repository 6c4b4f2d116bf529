//! Holds the `acceptance` test target, which runs every preset scenario
//! end to end. Kept apart from the core crate so its long runs come after
//! the unit and integration suites.
