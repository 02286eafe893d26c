//! Acceptance suite for `simtrans`. Everything lives in `tests/acceptance.rs`:
//!
//! cargo test -p simtrans-acceptance
