//! Holds the acceptance test target; see `tests/acceptance.rs` in the core crate.
