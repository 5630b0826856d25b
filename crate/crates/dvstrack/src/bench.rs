//! Throughput measurement for the binning and tracking loop.

use std::time::Instant;

use dvstrack_core::coding::{complete_bins, Frames};
use dvstrack_core::tracker::track_iter;
use dvstrack_core::{BinningConfig, BoundingBox, EventStream, TrackError, TrackerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub bins: u64,
    pub reps: usize,
    /// Median over repetitions of bins processed per wall-clock second.
    pub bins_per_second: f64,
    pub mean_events_per_bin: f64,
    /// Mean events per bin over the pixel count.
    pub reduction_ratio: f64,
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        format!(
            "bins={}\nreps={}\nbins_per_second_median={:.1}\nmean_events_per_bin={:.2}\nreduction_ratio={:.5}\n",
            self.bins, self.reps, self.bins_per_second, self.mean_events_per_bin, self.reduction_ratio
        )
    }
}

/// Times `reps` full runs of binning plus tracking over `stream`. Each run
/// starts from the parsed stream, so file decoding is excluded.
pub fn bench(
    stream: &EventStream,
    binning: BinningConfig,
    bbox0: BoundingBox,
    config: TrackerConfig,
    reps: usize,
) -> Result<BenchReport, TrackError> {
    let reps = reps.max(1);
    let mut rates = Vec::with_capacity(reps);
    let mut bins = 0;
    let mut events = 0u64;
    for _ in 0..reps {
        let start = Instant::now();
        let records = track_iter(Frames::new(stream, binning), bbox0, config)?;
        let secs = start.elapsed().as_secs_f64();
        bins = records.len() as u64;
        events = records.iter().map(|r| r.events_in_bin).sum();
        rates.push(bins as f64 / secs.max(f64::MIN_POSITIVE));
    }
    debug_assert_eq!(bins, complete_bins(stream, binning.bin_length_us));
    rates.sort_by(f64::total_cmp);
    let mid = rates.len() / 2;
    let median = if rates.len() % 2 == 1 {
        rates[mid]
    } else {
        (rates[mid - 1] + rates[mid]) / 2.0
    };
    let mean = events as f64 / bins as f64;
    Ok(BenchReport {
        bins,
        reps,
        bins_per_second: median,
        mean_events_per_bin: mean,
        reduction_ratio: mean / stream.geometry.pixel_count() as f64,
    })
}
