//! Empty; the criteria live in `tests/acceptance.rs`.
