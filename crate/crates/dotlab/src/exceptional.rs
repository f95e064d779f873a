//! Exceptional direction scans.
