//! Compiles a data table and a title into an animated, narrated data video.
//!
//! The pipeline runs a perception step and two agent roles (analyst and
//! designer) against a chat backend, then a deterministic controller binds
//! the rendered SVG to table rows, aligns narration segments with speech
//! timings, and compiles a keyframe timeline for export.

pub mod agent;
pub mod analyst;
pub mod designer;
pub mod ingest;
pub mod media;
pub mod model;
pub mod pipeline;
pub mod prompt;
pub mod report;
pub mod svg;
pub mod timeline;
pub mod vega;

mod schema;
