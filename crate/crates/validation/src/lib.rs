//! Acceptance suite for `crn-core`.
//!
//! The criteria live in the `acceptance` test target, which runs without
//! the libtest harness and prints one `PASS`/`FAIL` line per criterion:
//!
//! ```text
//! cargo test -p crn-validation --test acceptance -- AC3 AC7
//! ```
