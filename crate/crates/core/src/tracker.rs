//! Per-bin compressive tracking loop.
//!
//! Each bin: score every integer translation of the box within the search
//! radius, move to the best one, then refresh the classifier from positive
//! windows near the new box and negative windows in an annulus around it.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::{ClassifierError, ClassifierParams, DEFAULT_LAMBDA};
use crate::coding::SpikeCountFrame;
use crate::event::Geometry;
use crate::features::{IntegralImage, Rect, SparseMeasurementMatrix};

pub const DEFAULT_SIGMA_FLOOR_SPIKES: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    /// Candidate shifts satisfy `dx² + dy² < search_radius²`.
    pub search_radius: u32,
    /// Positive training shifts satisfy `dx² + dy² < positive_radius²`.
    pub positive_radius: u32,
    /// Negative training shifts satisfy `inner² < dx² + dy² ≤ outer²`.
    pub negative_inner: u32,
    pub negative_outer: u32,
    pub negative_count: usize,
    pub n_features: usize,
    pub lambda: f64,
    /// Smallest class deviation, in spikes. One spike inside a rectangle moves
    /// a feature by the matrix weight `√s`, so the classifier floor is
    /// `sigma_floor_spikes · √s`.
    pub sigma_floor_spikes: f64,
    pub seed: u64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            search_radius: 20,
            positive_radius: 4,
            negative_inner: 8,
            negative_outer: 30,
            negative_count: 50,
            n_features: 50,
            lambda: DEFAULT_LAMBDA,
            sigma_floor_spikes: DEFAULT_SIGMA_FLOOR_SPIKES,
            seed: 0,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), TrackError> {
        let ok = self.positive_radius > 0
            && self.positive_radius < self.negative_inner
            && self.negative_inner <= self.negative_outer
            && self.search_radius >= 1
            && self.negative_count >= 1
            && self.n_features >= 1
            && self.lambda > 0.0
            && self.lambda <= 1.0
            && self.sigma_floor_spikes > 0.0
            && self.sigma_floor_spikes.is_finite();
        if ok {
            Ok(())
        } else {
            Err(TrackError::InvalidConfig)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundingBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BoundingBox {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    /// Box of the given size centered (to the nearest pixel) on `(cx, cy)`.
    pub fn centered(cx: f64, cy: f64, w: u32, h: u32) -> Self {
        let x = libm::round(cx - w as f64 / 2.0).max(0.0) as u32;
        let y = libm::round(cy - h as f64 / 2.0).max(0.0) as u32;
        Self { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x as f64 + self.w as f64 / 2.0, self.y as f64 + self.h as f64 / 2.0)
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.x, self.y, self.w, self.h)
    }

    pub fn is_valid_in(&self, g: Geometry) -> bool {
        self.w >= 2 && self.h >= 2 && self.rect().fits_in(g)
    }

    /// Translated box, if it stays inside `g`.
    pub fn shifted(&self, dx: i32, dy: i32, g: Geometry) -> Option<Self> {
        let x = self.x as i64 + dx as i64;
        let y = self.y as i64 + dy as i64;
        if x < 0 || y < 0 || x + self.w as i64 > g.width as i64 || y + self.h as i64 > g.height as i64 {
            return None;
        }
        Some(Self {
            x: x as u32,
            y: y as u32,
            ..*self
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum TrackError {
    #[error("invalid tracker configuration")]
    InvalidConfig,
    #[error("bounding box {0:?} is not a valid box inside the frame")]
    InvalidBox(BoundingBox),
    #[error("frame geometry {got:?} differs from the track's {expected:?}")]
    GeometryMismatch { expected: Geometry, got: Geometry },
    #[error("no negative window fits around the initial box")]
    NoNegatives,
    #[error("no frames to track")]
    NoFrames,
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// One line of tracker output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub bin_index: u64,
    pub t_start: u64,
    pub bbox: BoundingBox,
    pub score: f64,
    pub events_in_bin: u64,
}

/// Integer offsets with `lo < dx² + dy²` (or `lo ≤` when `lo == 0`) and
/// `dx² + dy² < hi` / `≤ hi`, in row-major `(dy, dx)` order.
fn lattice(min_sq: i64, inclusive_min: bool, max_sq: i64, inclusive_max: bool) -> Vec<(i32, i32)> {
    let r = libm::sqrt(max_sq as f64) as i32 + 1;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let d = (dx * dx + dy * dy) as i64;
            let above = if inclusive_min { d >= min_sq } else { d > min_sq };
            let below = if inclusive_max { d <= max_sq } else { d < max_sq };
            if above && below {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Offsets strictly inside a disk of radius `r`.
pub fn disk_offsets(r: u32) -> Vec<(i32, i32)> {
    let r = r as i64;
    lattice(0, true, r * r, false)
}

/// Offsets in the annulus `inner < d ≤ outer`.
pub fn annulus_offsets(inner: u32, outer: u32) -> Vec<(i32, i32)> {
    let (i, o) = (inner as i64, outer as i64);
    lattice(i * i, false, o * o, true)
}

#[derive(Debug, Clone)]
pub struct TrackerState {
    pub bbox: BoundingBox,
    pub matrix: SparseMeasurementMatrix,
    pub params: ClassifierParams,
    pub config: TrackerConfig,
    pub bin_count: u64,
    geometry: Geometry,
    rng: ChaCha8Rng,
    search: Vec<(i32, i32)>,
    positive: Vec<(i32, i32)>,
    negative: Vec<(i32, i32)>,
}

impl TrackerState {
    /// Samples the measurement matrix and trains the classifier on the first
    /// bin around `bbox`.
    pub fn init(frame: &SpikeCountFrame, bbox: BoundingBox, config: TrackerConfig) -> Result<Self, TrackError> {
        config.validate()?;
        if !bbox.is_valid_in(frame.geometry) {
            return Err(TrackError::InvalidBox(bbox));
        }
        let matrix = SparseMeasurementMatrix::sample(config.n_features, bbox.w, bbox.h, config.seed);
        let sigma_floor = config.sigma_floor_spikes * matrix.weight();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        let mut state = Self {
            bbox,
            params: ClassifierParams::uninformative(config.n_features, config.lambda, sigma_floor),
            matrix,
            config,
            bin_count: 1,
            geometry: frame.geometry,
            rng,
            search: disk_offsets(config.search_radius),
            positive: disk_offsets(config.positive_radius),
            negative: annulus_offsets(config.negative_inner, config.negative_outer),
        };
        let ii = IntegralImage::new(frame);
        let (pos, neg) = state.training_samples(&ii);
        if neg.is_empty() {
            return Err(TrackError::NoNegatives);
        }
        state.params = ClassifierParams::init(&pos, &neg, config.lambda, sigma_floor)?;
        Ok(state)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Classifier response of the window at `bbox`'s position.
    pub fn score_box(&self, ii: &IntegralImage, bbox: BoundingBox) -> f64 {
        let mut v = vec![0.0; self.matrix.n()];
        self.matrix.project_into(bbox.x, bbox.y, ii, &mut v);
        self.params.score(&v)
    }

    /// Candidate boxes scored in one step, in tie-break order.
    pub fn candidates(&self) -> impl Iterator<Item = BoundingBox> + '_ {
        self.search
            .iter()
            .filter_map(move |&(dx, dy)| self.bbox.shifted(dx, dy, self.geometry))
    }

    /// Positive training windows around the current box.
    pub fn positive_windows(&self) -> impl Iterator<Item = BoundingBox> + '_ {
        self.positive
            .iter()
            .filter_map(move |&(dx, dy)| self.bbox.shifted(dx, dy, self.geometry))
    }

    /// Windows eligible as negatives around the current box, before sampling.
    pub fn negative_pool(&self) -> impl Iterator<Item = BoundingBox> + '_ {
        self.negative
            .iter()
            .filter_map(move |&(dx, dy)| self.bbox.shifted(dx, dy, self.geometry))
    }

    /// Localizes the object in `frame`, then updates the classifier around
    /// the new location.
    pub fn step(&mut self, frame: &SpikeCountFrame) -> Result<TrajectoryRecord, TrackError> {
        if frame.geometry != self.geometry {
            return Err(TrackError::GeometryMismatch {
                expected: self.geometry,
                got: frame.geometry,
            });
        }
        let ii = IntegralImage::new(frame);
        let mut v = vec![0.0; self.matrix.n()];
        let mut best: Option<(f64, BoundingBox)> = None;
        for cand in self.candidates() {
            self.matrix.project_into(cand.x, cand.y, &ii, &mut v);
            let h = self.params.score(&v);
            if best.is_none_or(|(b, _)| h > b) {
                best = Some((h, cand));
            }
        }
        let (score, bbox) = best.expect("zero shift is always a candidate");
        self.bbox = bbox;
        let (pos, neg) = self.training_samples(&ii);
        if !neg.is_empty() {
            self.params.update(&pos, &neg)?;
        }
        self.bin_count += 1;
        Ok(TrajectoryRecord {
            bin_index: frame.bin_index,
            t_start: frame.t_start,
            bbox,
            score,
            events_in_bin: frame.total(),
        })
    }

    fn training_samples(&mut self, ii: &IntegralImage) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let project = |b: BoundingBox| {
            let mut v = vec![0.0; self.matrix.n()];
            self.matrix.project_into(b.x, b.y, ii, &mut v);
            v
        };
        let pos: Vec<Vec<f64>> = self.positive_windows().map(project).collect();
        let fitting: Vec<BoundingBox> = self.negative_pool().collect();
        let take = self.config.negative_count.min(fitting.len());
        let mut picks = index::sample(&mut self.rng, fitting.len(), take).into_vec();
        picks.sort_unstable();
        let neg = picks.into_iter().map(|k| project(fitting[k])).collect();
        (pos, neg)
    }
}

/// Tracks `bbox0` through `frames`, producing one record per frame.
///
/// Frame 0 only initializes the tracker; its record carries `bbox0` and the
/// zero-shift score under the freshly trained classifier.
pub fn track(
    frames: &[SpikeCountFrame],
    bbox0: BoundingBox,
    config: TrackerConfig,
) -> Result<Vec<TrajectoryRecord>, TrackError> {
    track_iter(frames.iter(), bbox0, config)
}

/// As [`track`], consuming frames from any iterator (for example a lazy
/// binner).
pub fn track_iter<'a, F>(
    frames: F,
    bbox0: BoundingBox,
    config: TrackerConfig,
) -> Result<Vec<TrajectoryRecord>, TrackError>
where
    F: IntoIterator,
    F::Item: core::borrow::Borrow<SpikeCountFrame> + 'a,
{
    use core::borrow::Borrow;
    let mut frames = frames.into_iter();
    let first = frames.next().ok_or(TrackError::NoFrames)?;
    let first = first.borrow();
    let mut state = TrackerState::init(first, bbox0, config)?;
    let mut out = vec![TrajectoryRecord {
        bin_index: first.bin_index,
        t_start: first.t_start,
        bbox: bbox0,
        score: state.score_box(&IntegralImage::new(first), bbox0),
        events_in_bin: first.total(),
    }];
    for frame in frames {
        out.push(state.step(frame.borrow())?);
    }
    Ok(out)
}
