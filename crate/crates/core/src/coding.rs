//! Spike-count coding: folding an event stream into per-bin count frames.

use alloc::vec;
use alloc::vec::Vec;

use crate::event::{Event, EventStream, Geometry, Polarity};

/// Default bin length, 10 ms.
pub const DEFAULT_BIN_US: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolarityMode {
    #[default]
    BothSummed,
    PositiveOnly,
    NegativeOnly,
}

impl PolarityMode {
    fn accepts(self, p: Polarity) -> bool {
        match self {
            PolarityMode::BothSummed => true,
            PolarityMode::PositiveOnly => p == Polarity::On,
            PolarityMode::NegativeOnly => p == Polarity::Off,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinningConfig {
    pub bin_length_us: u64,
    pub polarity_mode: PolarityMode,
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self {
            bin_length_us: DEFAULT_BIN_US,
            polarity_mode: PolarityMode::BothSummed,
        }
    }
}

impl BinningConfig {
    pub fn with_bin_length(bin_length_us: u64) -> Self {
        Self {
            bin_length_us,
            ..Self::default()
        }
    }
}

/// Per-pixel spike counts over one time bin, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeCountFrame {
    pub geometry: Geometry,
    pub counts: Vec<u32>,
    pub bin_index: u64,
    pub t_start: u64,
}

impl SpikeCountFrame {
    pub fn zeros(geometry: Geometry, bin_index: u64, t_start: u64) -> Self {
        Self {
            geometry,
            counts: vec![0; geometry.pixel_count()],
            bin_index,
            t_start,
        }
    }

    /// Builds a frame from a row-major count grid.
    ///
    /// # Panics
    /// If `counts.len()` does not match the geometry.
    pub fn from_counts(geometry: Geometry, counts: Vec<u32>) -> Self {
        assert_eq!(
            counts.len(),
            geometry.pixel_count(),
            "count grid does not match geometry"
        );
        Self {
            geometry,
            counts,
            bin_index: 0,
            t_start: 0,
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.counts[y as usize * self.geometry.width as usize + x as usize]
    }

    #[inline]
    pub fn add(&mut self, x: u32, y: u32, n: u32) {
        let w = self.geometry.width as usize;
        self.counts[y as usize * w + x as usize] += n;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Counts scaled linearly so the frame maximum maps to 255.
    pub fn to_gray8(&self) -> Vec<u8> {
        let max = self.counts.iter().copied().max().unwrap_or(0) as u64;
        if max == 0 {
            return vec![0; self.counts.len()];
        }
        self.counts
            .iter()
            .map(|&c| ((c as u64 * 255 + max / 2) / max) as u8)
            .collect()
    }
}

/// Number of complete bins a stream covers.
///
/// With a declared span only bins ending within it count; otherwise the
/// stream ends with the bin that holds its last event.
pub fn complete_bins(stream: &EventStream, bin_length_us: u64) -> u64 {
    assert!(bin_length_us >= 1, "bin length must be at least 1 µs");
    match (stream.span_us, stream.events.last()) {
        (Some(span), _) => span / bin_length_us,
        (None, Some(last)) => last.t / bin_length_us + 1,
        (None, None) => 0,
    }
}

/// Lazily yields one frame per complete bin of a time-sorted event slice.
pub struct Frames<'a> {
    events: &'a [Event],
    geometry: Geometry,
    cfg: BinningConfig,
    next_bin: u64,
    bins: u64,
}

impl<'a> Frames<'a> {
    pub fn new(stream: &'a EventStream, cfg: BinningConfig) -> Self {
        Self {
            events: &stream.events,
            geometry: stream.geometry,
            cfg,
            next_bin: 0,
            bins: complete_bins(stream, cfg.bin_length_us),
        }
    }
}

impl Iterator for Frames<'_> {
    type Item = SpikeCountFrame;

    fn next(&mut self) -> Option<SpikeCountFrame> {
        if self.next_bin >= self.bins {
            return None;
        }
        let len = self.cfg.bin_length_us;
        let k = self.next_bin;
        let end = (k + 1) * len;
        let mut frame = SpikeCountFrame::zeros(self.geometry, k, k * len);
        let split = self.events.partition_point(|e| e.t < end);
        for e in &self.events[..split] {
            if self.cfg.polarity_mode.accepts(e.p) {
                frame.add(e.x, e.y, 1);
            }
        }
        self.events = &self.events[split..];
        self.next_bin += 1;
        Some(frame)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.bins - self.next_bin) as usize;
        (n, Some(n))
    }
}

/// Accumulates each event into bin `⌊t / bin_length⌋`; a trailing partial bin
/// is dropped. The stream must be valid (sorted, in range).
pub fn bin_events(stream: &EventStream, cfg: BinningConfig) -> Vec<SpikeCountFrame> {
    Frames::new(stream, cfg).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrameStats {
    pub total_events: u64,
    pub active_pixels: usize,
    pub max_count: u32,
}

pub fn frame_stats(frame: &SpikeCountFrame) -> FrameStats {
    frame.counts.iter().fold(FrameStats::default(), |mut s, &c| {
        s.total_events += c as u64;
        if c > 0 {
            s.active_pixels += 1;
        }
        s.max_count = s.max_count.max(c);
        s
    })
}
