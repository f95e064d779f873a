//! Tree configurations.
