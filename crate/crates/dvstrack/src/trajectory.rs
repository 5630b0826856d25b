//! Trajectory table: one CSV line per bin.

use std::fmt::Write as _;

use dvstrack_core::{BoundingBox, TrajectoryRecord};

pub const TRAJECTORY_HEADER: &str = "bin,t_start_us,x,y,w,h,score,events";

pub fn write_trajectory(records: &[TrajectoryRecord]) -> String {
    let mut out = String::with_capacity(48 * (records.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in records {
        let b = r.bbox;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.bin_index, r.t_start, b.x, b.y, b.w, b.h, r.score, r.events_in_bin
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("trajectory line {line}: {reason}")]
pub struct TrajectoryParseError {
    pub line: usize,
    pub reason: String,
}

pub fn read_trajectory(text: &str) -> Result<Vec<TrajectoryRecord>, TrajectoryParseError> {
    let mut lines = text.lines();
    if lines.next() != Some(TRAJECTORY_HEADER) {
        return Err(TrajectoryParseError {
            line: 1,
            reason: "missing header".into(),
        });
    }
    let mut out = Vec::new();
    for (i, raw) in lines.enumerate() {
        let line = i + 2;
        let err = |reason: &str| TrajectoryParseError {
            line,
            reason: reason.to_string(),
        };
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 8 {
            return Err(err("expected 8 fields"));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|_| err("bad integer"));
        let small = |s: &str| s.parse::<u32>().map_err(|_| err("bad integer"));
        out.push(TrajectoryRecord {
            bin_index: int(f[0])?,
            t_start: int(f[1])?,
            bbox: BoundingBox::new(small(f[2])?, small(f[3])?, small(f[4])?, small(f[5])?),
            score: f[6].parse::<f64>().map_err(|_| err("bad score"))?,
            events_in_bin: int(f[7])?,
        });
    }
    Ok(out)
}
