//! Configuration documents and output formats.

pub mod config;
pub mod csv;
pub mod raster;
pub mod report;
pub mod svg;

pub use config::{parse_config, parse_system, serialize_config, Config};
pub use raster::{Raster, RenderMode};
pub use report::{build_report, RunReport};
