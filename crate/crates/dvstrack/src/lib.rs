//! File formats, rendering, benchmarking and the command line for the
//! `dvstrack-core` event-camera tracker.

pub mod bench;
pub mod cli;
pub mod io;
pub mod manifest;
pub mod render;
pub mod trajectory;

pub use bench::{bench, BenchReport};
pub use cli::{run, CliError};
pub use io::{
    read_aedat, read_events, read_events_text, write_aedat, write_events, write_events_text, AedatHeader, EventFormat,
    FormatError,
};
pub use manifest::Manifest;
pub use render::render_ppm;
pub use trajectory::{read_trajectory, write_trajectory};
