//! Pin pipelines.
