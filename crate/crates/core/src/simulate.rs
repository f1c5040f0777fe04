//! Synthetic GVP scenarios with known ground truth.
//!
//! The world model is a set of waste items (boxes) inside the ROI. Every
//! frame interval, in local time:
//!
//! 1. new items arrive, Poisson with rate `dump_rate[hour] * weekday_multiplier`;
//! 2. inside the scatter window each item is removed or displaced at random;
//! 3. on cleaning days the items are pulled into a pile at `pile_hour` and
//!    removed entirely at `clear_hour`.
//!
//! The frame recorded at that step shows the state after all three. A noisy
//! detector is then applied per frame: misses, jitter, and low-confidence clutter.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::analytics::{write_coverage_csv, CoverageSample, EventKind, LocalClock};
use crate::dataset::{format_frame_stem, AnnotationSet, LabelBox};
use crate::detector::{write_detections, DetectionStream};
use crate::error::{Error, Result};
use crate::geometry::{coverage_fraction, iou, pixel_to_norm, union_area, BBox, Detection, FrameRecord, RoiPolygon, WASTE};

/// Jittered boxes are resampled until they keep this IoU with their source.
pub const JITTER_MIN_IOU: f64 = 0.5;
const JITTER_ATTEMPTS: usize = 32;
const PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterConfig {
    pub start_hour: u32,
    pub end_hour: u32,
    /// Per-item, per-step probability of disappearing.
    pub remove_prob: f64,
    /// Per-item, per-step probability of being dragged to a new spot.
    pub move_prob: f64,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        Self {
            start_hour: 3,
            end_hour: 6,
            remove_prob: 0.01,
            move_prob: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningConfig {
    /// Local hour (fractional) when workers gather the waste into one heap.
    pub pile_hour: f64,
    /// Local hour (fractional) when the truck removes everything.
    pub clear_hour: f64,
    /// 1 stacks every item on the pile point, 0 leaves them in place.
    pub consolidation: f64,
    /// Pile point; defaults to the center of the ROI bounding box.
    pub pile_center: Option<(f64, f64)>,
    /// Monday first.
    pub days: [bool; 7],
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            pile_hour: 6.5,
            clear_hour: 7.5,
            consolidation: 0.45,
            pile_center: None,
            days: [true; 7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub p_miss: f64,
    /// Expected clutter boxes per frame.
    pub clutter_rate: f64,
    /// Jitter standard deviation in pixels, per coordinate.
    pub jitter_sigma: f64,
    /// Confidence band of detections of real items.
    pub tp_confidence: (f64, f64),
    /// Confidence band of clutter; sits below `tp_confidence`.
    pub fp_confidence: (f64, f64),
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self {
            p_miss: 0.0,
            clutter_rate: 0.0,
            jitter_sigma: 0.0,
            ..Default::default()
        }
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            p_miss: 0.0,
            clutter_rate: 0.0,
            jitter_sigma: 0.0,
            tp_confidence: (0.55, 1.0),
            fp_confidence: (0.3, 0.55),
        }
    }
}

/// Hourly arrival intensity (items/hour, local time): quiet after the morning
/// pickup until 3 PM, ramping through the evening, heaviest 11 PM to midnight.
pub const DEFAULT_DUMP_RATE: [f64; 24] = [
    4.8, 3.0, 1.5, 0.4, 0.2, 0.2, 0.1, 0.1, // 00-07
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.4, // 08-15
    1.0, 1.6, 2.1, 2.8, 4.2, 5.3, 6.0, 8.0, // 16-23
];

/// Monday first: heavier after the weekend, a mid-week dip, slight Saturday decline.
pub const DEFAULT_WEEKDAY_MULTIPLIERS: [f64; 7] = [1.3, 1.25, 0.7, 1.05, 1.1, 0.95, 0.9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub days: u32,
    /// First simulated local date, `YYYY-MM-DD`.
    pub start_date: String,
    pub tz_offset_minutes: i32,
    /// Seconds between frames.
    pub frame_interval: i64,
    pub frame_w: f64,
    pub frame_h: f64,
    /// ROI vertices in pixels.
    pub roi: Vec<(f64, f64)>,
    pub dump_rate: [f64; 24],
    pub weekday_multipliers: [f64; 7],
    /// Item width range in pixels.
    pub item_w: (f64, f64),
    /// Item height range in pixels.
    pub item_h: (f64, f64),
    pub scatter: ScatterConfig,
    pub cleaning: CleaningConfig,
    /// Hours simulated before the first recorded frame so day one starts with overnight waste.
    pub warmup_hours: u32,
    pub noise: NoiseConfig,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            days: 60,
            start_date: "2024-01-01".into(),
            tz_offset_minutes: 330,
            frame_interval: 300,
            frame_w: 700.0,
            frame_h: 395.0,
            roi: vec![(50.0, 100.0), (650.0, 100.0), (650.0, 380.0), (50.0, 380.0)],
            dump_rate: DEFAULT_DUMP_RATE,
            weekday_multipliers: DEFAULT_WEEKDAY_MULTIPLIERS,
            item_w: (30.0, 80.0),
            item_h: (25.0, 60.0),
            scatter: ScatterConfig::default(),
            cleaning: CleaningConfig::default(),
            warmup_hours: 24,
            noise: NoiseConfig::default(),
            seed: 42,
        }
    }
}

fn check_prob(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(field, format!("{v} is not a probability")))
    }
}

fn check_range(field: &str, (lo, hi): (f64, f64), min: f64, max: f64) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && min <= lo && lo <= hi && hi <= max {
        Ok(())
    } else {
        Err(Error::config(field, format!("({lo}, {hi}) must be ordered within [{min}, {max}]")))
    }
}

impl ScenarioConfig {
    pub fn roi_polygon(&self) -> Result<RoiPolygon> {
        RoiPolygon::new(self.roi.clone(), self.frame_w, self.frame_h)
            .map_err(|e| Error::config("roi", e.to_string()))
    }

    pub fn clock(&self) -> LocalClock {
        LocalClock::new(self.tz_offset_minutes)
    }

    /// UTC timestamp of local midnight on `start_date`.
    pub fn start_ts(&self) -> Result<i64> {
        let date = NaiveDate::parse_from_str(&self.start_date, "%Y-%m-%d")
            .map_err(|e| Error::config("start_date", e.to_string()))?;
        let local = date.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp();
        Ok(local - i64::from(self.tz_offset_minutes) * 60)
    }

    pub fn frames_per_day(&self) -> i64 {
        86_400 / self.frame_interval
    }

    pub fn frame_count(&self) -> usize {
        (i64::from(self.days) * 86_400 / self.frame_interval) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.days == 0 {
            return Err(Error::config("days", "must be at least 1"));
        }
        if self.frame_interval <= 0 || 86_400 % self.frame_interval != 0 {
            return Err(Error::config("frame_interval", "must be positive and divide a day"));
        }
        if !(self.frame_w > 0.0 && self.frame_h > 0.0) {
            return Err(Error::config("frame_w", "frame dimensions must be positive"));
        }
        if self.tz_offset_minutes.abs() >= 24 * 60 {
            return Err(Error::config("tz_offset_minutes", "must be within a day"));
        }
        self.start_ts()?;
        let roi = self.roi_polygon()?;
        if let Some(i) = self.dump_rate.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config(format!("dump_rate[{i}]"), "must be a finite non-negative rate"));
        }
        if let Some(i) = self.weekday_multipliers.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config(format!("weekday_multipliers[{i}]"), "must be non-negative"));
        }
        let bb = roi.bounding_box();
        check_range("item_w", self.item_w, f64::MIN_POSITIVE, bb.w)?;
        check_range("item_h", self.item_h, f64::MIN_POSITIVE, bb.h)?;
        let s = &self.scatter;
        if s.start_hour > 24 || s.end_hour > 24 || s.start_hour > s.end_hour {
            return Err(Error::config("scatter.start_hour", "window must satisfy start <= end <= 24"));
        }
        check_prob("scatter.remove_prob", s.remove_prob)?;
        check_prob("scatter.move_prob", s.move_prob)?;
        if s.remove_prob + s.move_prob > 1.0 {
            return Err(Error::config("scatter.move_prob", "remove_prob + move_prob exceeds 1"));
        }
        let c = &self.cleaning;
        if !(0.0..24.0).contains(&c.pile_hour) {
            return Err(Error::config("cleaning.pile_hour", "must be in [0, 24)"));
        }
        if !(c.pile_hour < c.clear_hour && c.clear_hour < 24.0) {
            return Err(Error::config("cleaning.clear_hour", "must be after pile_hour and before 24"));
        }
        check_prob("cleaning.consolidation", c.consolidation)?;
        if let Some((x, y)) = c.pile_center {
            if !roi.contains(x, y) {
                return Err(Error::config("cleaning.pile_center", "must lie inside the ROI"));
            }
        }
        let n = &self.noise;
        check_prob("noise.p_miss", n.p_miss)?;
        if !(n.clutter_rate.is_finite() && n.clutter_rate >= 0.0) {
            return Err(Error::config("noise.clutter_rate", "must be non-negative"));
        }
        if !(n.jitter_sigma.is_finite() && n.jitter_sigma >= 0.0) {
            return Err(Error::config("noise.jitter_sigma", "must be non-negative"));
        }
        check_range("noise.tp_confidence", n.tp_confidence, 0.0, 1.0)?;
        check_range("noise.fp_confidence", n.fp_confidence, 0.0, 1.0)?;
        Ok(())
    }

    /// Largest jitter for which jittered boxes reliably keep IoU >= 0.5.
    pub fn jitter_limit(&self) -> f64 {
        self.item_w.0.min(self.item_h.0) / 10.0
    }
}

/// A change the generator made to the world, for scoring event detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueEvent {
    pub kind: EventKind,
    /// Timestamp of the first frame that shows the change.
    pub ts: i64,
    pub coverage_before: f64,
    pub coverage_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub roi: RoiPolygon,
    /// Pixel ground truth per frame (all class waste).
    pub ground_truth: Vec<Vec<BBox>>,
    pub annotations: AnnotationSet,
    pub detections: DetectionStream,
    /// Exact ROI coverage of the ground truth.
    pub coverage: Vec<CoverageSample>,
    pub events: Vec<TrueEvent>,
}

impl ScenarioOutput {
    pub fn total_gt_boxes(&self) -> usize {
        self.ground_truth.iter().map(Vec::len).sum()
    }

    pub fn clear_events(&self) -> usize {
        self.events.iter().filter(|e| e.kind == EventKind::Clear).count()
    }

    /// Write frames/ (empty placeholder images), labels/, detections.jsonl,
    /// coverage_truth.csv, events_truth.jsonl and roi.json under `dir`.
    pub fn write_to(&self, dir: &Path, clock: LocalClock, placeholder_frames: bool) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        if placeholder_frames {
            let frames = dir.join("frames");
            fs::create_dir_all(&frames).map_err(|e| Error::io(&frames, e))?;
            for rec in &self.detections {
                let p = frames.join(format!("{}.jpg", rec.frame_id));
                fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
            }
        }
        self.annotations.write_dir(&dir.join("labels"))?;
        write_detections(&dir.join("detections.jsonl"), &self.detections)?;
        write_coverage_csv(&dir.join("coverage_truth.csv"), &self.coverage, clock)?;
        let events: String = self
            .events
            .iter()
            .map(|e| serde_json::to_string(e).expect("event serializes") + "\n")
            .collect();
        let p = dir.join("events_truth.jsonl");
        fs::write(&p, events).map_err(|e| Error::io(&p, e))?;
        let p = dir.join("roi.json");
        fs::write(&p, serde_json::to_string_pretty(&self.roi).expect("roi serializes") + "\n")
            .map_err(|e| Error::io(&p, e))
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn poisson(rng: &mut ChaCha8Rng, rate: f64) -> u64 {
    if rate > 0.0 {
        Poisson::new(rate).expect("positive rate").sample(rng) as u64
    } else {
        0
    }
}

/// Places boxes uniformly inside the ROI.
struct Placer<'a> {
    roi: &'a RoiPolygon,
    rect: Option<BBox>,
    bounds: BBox,
    item_w: (f64, f64),
    item_h: (f64, f64),
}

impl<'a> Placer<'a> {
    fn new(roi: &'a RoiPolygon, cfg: &ScenarioConfig) -> Self {
        Self {
            roi,
            rect: roi.as_rect(),
            bounds: roi.bounding_box(),
            item_w: cfg.item_w,
            item_h: cfg.item_h,
        }
    }

    fn fits(&self, b: &BBox) -> bool {
        match self.rect {
            Some(r) => b.x >= r.x && b.y >= r.y && b.right() <= r.right() && b.bottom() <= r.bottom(),
            None => [(b.x, b.y), (b.right(), b.y), (b.right(), b.bottom()), (b.x, b.bottom())]
                .iter()
                .all(|&(x, y)| self.roi.contains(x, y)),
        }
    }

    fn place_sized(&self, rng: &mut ChaCha8Rng, w: f64, h: f64) -> Option<BBox> {
        let b = self.bounds;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let x = uniform(rng, (b.x, b.right() - w));
            let y = uniform(rng, (b.y, b.bottom() - h));
            let candidate = BBox::new(x, y, w, h);
            if self.fits(&candidate) {
                return Some(candidate);
            }
        }
        None
    }

    fn place(&self, rng: &mut ChaCha8Rng) -> Option<BBox> {
        let w = uniform(rng, self.item_w);
        let h = uniform(rng, self.item_h);
        self.place_sized(rng, w, h)
    }
}

/// Move every box toward `center` by `factor`; returns the new layout only if
/// its union area does not exceed the current one.
fn consolidate(items: &[BBox], center: (f64, f64), factor: f64) -> Option<Vec<BBox>> {
    let before = union_area(items);
    let moved: Vec<BBox> = items
        .iter()
        .map(|b| {
            let (cx, cy) = b.center();
            let nx = center.0 + (cx - center.0) * (1.0 - factor);
            let ny = center.1 + (cy - center.1) * (1.0 - factor);
            BBox::new(nx - b.w / 2.0, ny - b.h / 2.0, b.w, b.h)
        })
        .collect();
    (union_area(&moved) <= before).then_some(moved)
}

fn jitter(rng: &mut ChaCha8Rng, b: &BBox, sigma: f64, frame_w: f64, frame_h: f64) -> BBox {
    if sigma <= 0.0 {
        return *b;
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    for _ in 0..JITTER_ATTEMPTS {
        let x = b.x + normal.sample(rng);
        let y = b.y + normal.sample(rng);
        let w = (b.w + normal.sample(rng)).max(1.0);
        let h = (b.h + normal.sample(rng)).max(1.0);
        let candidate = crate::geometry::clip_box(&BBox::new(x, y, w, h), frame_w, frame_h);
        if iou(&candidate, b) >= JITTER_MIN_IOU {
            return candidate;
        }
    }
    *b
}

/// Run a scenario. Identical configs produce identical outputs.
pub fn generate(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let roi = cfg.roi_polygon()?;
    let clock = cfg.clock();
    let placer = Placer::new(&roi, cfg);
    let roi_bb = roi.bounding_box();
    let pile_center = cfg.cleaning.pile_center.unwrap_or_else(|| roi_bb.center());
    let pile_sod = (cfg.cleaning.pile_hour * 3600.0).round() as i64;
    let clear_sod = (cfg.cleaning.clear_hour * 3600.0).round() as i64;

    // World and detector noise draw from separate streams so changing the
    // noise model leaves the world untouched.
    let mut world = ChaCha8Rng::seed_from_u64(cfg.seed);
    world.set_stream(0);
    let mut noise = ChaCha8Rng::seed_from_u64(cfg.seed);
    noise.set_stream(1);

    let start = cfg.start_ts()?;
    let step = cfg.frame_interval;
    let warmup_steps = i64::from(cfg.warmup_hours) * 3600 / step;
    let total_steps = cfg.frame_count() as i64;

    let mut items: Vec<BBox> = Vec::new();
    let mut last_pile_day = i64::MIN;
    let mut last_clear_day = i64::MIN;
    let mut ground_truth = Vec::with_capacity(total_steps as usize);
    let mut coverage = Vec::with_capacity(total_steps as usize);
    let mut records = Vec::with_capacity(total_steps as usize);
    let mut annotations = AnnotationSet::with_default_classes();
    let mut events = Vec::new();
    let cover = |items: &[BBox]| coverage_fraction(items, &roi, 1);

    for k in -warmup_steps..total_steps {
        let ts = start + k * step;
        let hour = clock.hour(ts);
        let weekday = clock.weekday(ts) as usize;
        let day = clock.day_number(ts);
        let sod = (ts + i64::from(clock.offset_minutes()) * 60).rem_euclid(86_400);
        let recording = k >= 0;

        let rate = cfg.dump_rate[hour as usize] * cfg.weekday_multipliers[weekday] * step as f64 / 3600.0;
        for _ in 0..poisson(&mut world, rate) {
            if let Some(b) = placer.place(&mut world) {
                items.push(b);
            }
        }

        if hour >= cfg.scatter.start_hour && hour < cfg.scatter.end_hour {
            let mut kept = Vec::with_capacity(items.len());
            for b in items.drain(..) {
                let u: f64 = world.random();
                if u < cfg.scatter.remove_prob {
                    continue;
                }
                if u < cfg.scatter.remove_prob + cfg.scatter.move_prob {
                    kept.push(placer.place_sized(&mut world, b.w, b.h).unwrap_or(b));
                } else {
                    kept.push(b);
                }
            }
            items = kept;
        }

        let cleaning_day = cfg.cleaning.days[weekday];
        if cleaning_day && sod >= pile_sod && last_pile_day != day {
            last_pile_day = day;
            if !items.is_empty() {
                let before = cover(&items)?;
                if let Some(piled) = consolidate(&items, pile_center, cfg.cleaning.consolidation)
                    .or_else(|| consolidate(&items, pile_center, 1.0))
                {
                    items = piled;
                }
                if recording {
                    events.push(TrueEvent {
                        kind: EventKind::Pile,
                        ts,
                        coverage_before: before,
                        coverage_after: cover(&items)?,
                    });
                }
            }
        }
        if cleaning_day && sod >= clear_sod && last_clear_day != day {
            last_clear_day = day;
            if !items.is_empty() {
                let before = cover(&items)?;
                items.clear();
                if recording {
                    events.push(TrueEvent {
                        kind: EventKind::Clear,
                        ts,
                        coverage_before: before,
                        coverage_after: 0.0,
                    });
                }
            }
        }

        if !recording {
            continue;
        }

        let frame_id = format_frame_stem(ts);
        let mut detections = Vec::with_capacity(items.len());
        for b in &items {
            if noise.random::<f64>() < cfg.noise.p_miss {
                continue;
            }
            let jittered = jitter(&mut noise, b, cfg.noise.jitter_sigma, cfg.frame_w, cfg.frame_h);
            let conf = uniform(&mut noise, cfg.noise.tp_confidence);
            detections.push(Detection::new(jittered, conf, WASTE));
        }
        for _ in 0..poisson(&mut noise, cfg.noise.clutter_rate) {
            if let Some(b) = placer.place(&mut noise) {
                let conf = uniform(&mut noise, cfg.noise.fp_confidence);
                detections.push(Detection::new(b, conf, WASTE));
            }
        }
        let labels = items
            .iter()
            .map(|b| pixel_to_norm(b, cfg.frame_w, cfg.frame_h).map(|n| LabelBox::new(WASTE, n)))
            .collect::<Result<Vec<_>>>()?;
        annotations.insert(frame_id.clone(), labels)?;
        coverage.push(CoverageSample {
            timestamp: ts,
            coverage: cover(&items)?,
            waste_count: items.len(),
        });
        ground_truth.push(items.clone());
        records.push(FrameRecord {
            frame_id,
            timestamp: ts,
            detections,
        });
    }

    Ok(ScenarioOutput {
        roi,
        ground_truth,
        annotations,
        detections: DetectionStream::new(records)?,
        coverage,
        events,
    })
}

/// Expected number of ground-truth boxes summed over all recorded frames.
///
/// Follows the generator's step order in expectation: arrivals add their
/// rate, scatter removal scales the count, clearing resets it.
pub fn expected_gt_boxes(cfg: &ScenarioConfig) -> Result<f64> {
    cfg.validate()?;
    let clock = cfg.clock();
    let start = cfg.start_ts()?;
    let step = cfg.frame_interval;
    let warmup_steps = i64::from(cfg.warmup_hours) * 3600 / step;
    let clear_sod = (cfg.cleaning.clear_hour * 3600.0).round() as i64;
    let mut mean = 0.0f64;
    let mut last_clear_day = i64::MIN;
    let mut total = 0.0;
    for k in -warmup_steps..cfg.frame_count() as i64 {
        let ts = start + k * step;
        let hour = clock.hour(ts);
        let weekday = clock.weekday(ts) as usize;
        let day = clock.day_number(ts);
        let sod = (ts + i64::from(clock.offset_minutes()) * 60).rem_euclid(86_400);
        mean += cfg.dump_rate[hour as usize] * cfg.weekday_multipliers[weekday] * step as f64 / 3600.0;
        if hour >= cfg.scatter.start_hour && hour < cfg.scatter.end_hour {
            mean *= 1.0 - cfg.scatter.remove_prob;
        }
        if cfg.cleaning.days[weekday] && sod >= clear_sod && last_clear_day != day {
            last_clear_day = day;
            mean = 0.0;
        }
        if k >= 0 {
            total += mean;
        }
    }
    Ok(total)
}

/// Expected (precision, recall) of the simulated detector at IoU 0.5.
pub fn expected_metrics(cfg: &ScenarioConfig) -> Result<(f64, f64)> {
    let limit = cfg.jitter_limit();
    if cfg.noise.jitter_sigma > limit {
        return Err(Error::SigmaTooLarge {
            sigma: cfg.noise.jitter_sigma,
            limit,
        });
    }
    let gt = expected_gt_boxes(cfg)?;
    let tp = (1.0 - cfg.noise.p_miss) * gt;
    let fp = cfg.noise.clutter_rate * cfg.frame_count() as f64;
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 1.0 };
    let recall = if gt > 0.0 { 1.0 - cfg.noise.p_miss } else { 1.0 };
    Ok((precision, recall))
}

/// Clutter rate per frame that puts expected precision at `target_precision`.
pub fn clutter_rate_for_precision(cfg: &ScenarioConfig, target_precision: f64) -> Result<f64> {
    if !(target_precision > 0.0 && target_precision <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target precision {target_precision} must be in (0, 1]"
        )));
    }
    let tp = (1.0 - cfg.noise.p_miss) * expected_gt_boxes(cfg)?;
    Ok(tp * (1.0 / target_precision - 1.0) / cfg.frame_count() as f64)
}

/// A scenario whose detector operates at (`precision`, `recall`).
pub fn with_operating_point(mut cfg: ScenarioConfig, precision: f64, recall: f64) -> Result<ScenarioConfig> {
    check_prob("recall", recall)?;
    cfg.noise.p_miss = 1.0 - recall;
    cfg.noise.clutter_rate = clutter_rate_for_precision(&cfg, precision)?;
    Ok(cfg)
}
