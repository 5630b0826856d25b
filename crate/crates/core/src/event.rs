//! Address-event value types.

use alloc::vec::Vec;
use core::fmt;

/// Sensor array dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Geometry {
    pub width: u32,
    pub height: u32,
}

impl Geometry {
    /// The 128×128 array of the DVS128.
    pub const DVS128: Geometry = Geometry {
        width: 128,
        height: 128,
    };

    pub const fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height
    }
}

impl Default for Geometry {
    fn default() -> Self {
        Self::DVS128
    }
}

/// Sign of the log-intensity change that triggered a spike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    On,
    Off,
}

impl Polarity {
    pub fn from_sign(sign: i8) -> Option<Self> {
        match sign {
            1 => Some(Polarity::On),
            -1 => Some(Polarity::Off),
            _ => None,
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Polarity::On => 1,
            Polarity::Off => -1,
        }
    }
}

/// One AER spike: pixel address, microsecond timestamp and polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub x: u32,
    pub y: u32,
    pub t: u64,
    pub p: Polarity,
}

impl Event {
    pub const fn new(x: u32, y: u32, t: u64, p: Polarity) -> Self {
        Self { x, y, t, p }
    }
}

/// A time-ordered sequence of events on a fixed pixel array.
///
/// `span_us` is the recording extent `[0, span_us)` when it is known (the
/// simulator declares it). File readers leave it unset, in which case the
/// stream is taken to end with the bin holding its last event.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventStream {
    pub geometry: Geometry,
    pub events: Vec<Event>,
    pub span_us: Option<u64>,
}

impl EventStream {
    pub fn new(geometry: Geometry, events: Vec<Event>) -> Self {
        Self {
            geometry,
            events,
            span_us: None,
        }
    }

    pub fn with_span(mut self, span_us: u64) -> Self {
        self.span_us = Some(span_us);
        self
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// A single broken stream invariant, located by event index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    XOutOfRange { index: usize, x: u32 },
    YOutOfRange { index: usize, y: u32 },
    TimestampInversion { index: usize, previous: u64, t: u64 },
    BeyondSpan { index: usize, t: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::XOutOfRange { index, x } => {
                write!(f, "x out of range at index {index} (x = {x})")
            }
            Violation::YOutOfRange { index, y } => {
                write!(f, "y out of range at index {index} (y = {y})")
            }
            Violation::TimestampInversion { index, previous, t } => {
                write!(f, "timestamp inversion at index {index} ({t} after {previous})")
            }
            Violation::BeyondSpan { index, t } => {
                write!(f, "timestamp beyond declared span at index {index} (t = {t})")
            }
        }
    }
}

/// Checks every stream invariant and reports all violations in index order.
///
/// Polarity cannot be invalid by construction, so only coordinates, ordering
/// and the declared span are checked. An empty result means the stream is valid.
pub fn validate_stream(stream: &EventStream) -> Vec<Violation> {
    let mut out = Vec::new();
    let g = stream.geometry;
    let mut prev: Option<u64> = None;
    for (index, e) in stream.events.iter().enumerate() {
        if e.x >= g.width {
            out.push(Violation::XOutOfRange { index, x: e.x });
        }
        if e.y >= g.height {
            out.push(Violation::YOutOfRange { index, y: e.y });
        }
        if let Some(previous) = prev {
            if e.t < previous {
                out.push(Violation::TimestampInversion {
                    index,
                    previous,
                    t: e.t,
                });
            }
        }
        if let Some(span) = stream.span_us {
            if e.t >= span {
                out.push(Violation::BeyondSpan { index, t: e.t });
            }
        }
        prev = Some(e.t);
    }
    out
}
