//! Coverage time series, hourly/daily/weekday profiles and dump/pile/clear
//! event detection.
//!
//! All calendar binning happens in local time given as a fixed UTC offset in
//! minutes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, FixedOffset, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::detector::{postprocess, DetectionStream, DetectorConfig};
use crate::error::{Error, Result};
use crate::geometry::{coverage_fraction, BBox, FrameRecord, RoiPolygon, DEFAULT_GRID_SCALE, WASTE};

/// Indian Standard Time, the deployment locale's offset.
pub const DEFAULT_TZ_OFFSET_MINUTES: i32 = 330;

pub const WEEKDAY_NAMES: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageSample {
    pub timestamp: i64,
    pub coverage: f64,
    pub waste_count: usize,
}

/// Local clock for a fixed UTC offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalClock {
    offset_minutes: i32,
}

impl Default for LocalClock {
    fn default() -> Self {
        Self::new(DEFAULT_TZ_OFFSET_MINUTES)
    }
}

impl LocalClock {
    pub fn new(offset_minutes: i32) -> Self {
        Self { offset_minutes }
    }

    pub fn offset_minutes(&self) -> i32 {
        self.offset_minutes
    }

    fn local_seconds(&self, ts: i64) -> i64 {
        ts + i64::from(self.offset_minutes) * 60
    }

    pub fn hour(&self, ts: i64) -> u32 {
        (self.local_seconds(ts).rem_euclid(86_400) / 3_600) as u32
    }

    /// Days since 1970-01-01 in local time.
    pub fn day_number(&self, ts: i64) -> i64 {
        self.local_seconds(ts).div_euclid(86_400)
    }

    /// Monday = 0.
    pub fn weekday(&self, ts: i64) -> u32 {
        // 1970-01-01 was a Thursday.
        (self.day_number(ts) + 3).rem_euclid(7) as u32
    }

    pub fn date(&self, ts: i64) -> NaiveDate {
        day_to_date(self.day_number(ts))
    }

    /// RFC 3339 with the local offset, e.g. `2024-01-01T05:30:00+05:30`.
    pub fn iso(&self, ts: i64) -> String {
        let offset = FixedOffset::east_opt(self.offset_minutes * 60).expect("offset within a day");
        DateTime::from_timestamp(ts, 0)
            .expect("timestamp in range")
            .with_timezone(&offset)
            .format("%Y-%m-%dT%H:%M:%S%:z")
            .to_string()
    }
}

fn day_to_date(day: i64) -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("epoch") + chrono::Duration::days(day)
}

/// Folds frame records into coverage samples, one per frame.
#[derive(Debug, Clone)]
pub struct CoverageSeriesBuilder<'a> {
    roi: &'a RoiPolygon,
    cfg: &'a DetectorConfig,
    grid_scale: u32,
    samples: Vec<CoverageSample>,
}

impl<'a> CoverageSeriesBuilder<'a> {
    pub fn new(roi: &'a RoiPolygon, cfg: &'a DetectorConfig) -> Self {
        Self {
            roi,
            cfg,
            grid_scale: DEFAULT_GRID_SCALE,
            samples: Vec::new(),
        }
    }

    pub fn grid_scale(mut self, grid_scale: u32) -> Self {
        self.grid_scale = grid_scale;
        self
    }

    pub fn push(&mut self, rec: &FrameRecord) -> Result<CoverageSample> {
        let waste: Vec<BBox> = postprocess(&rec.detections, self.cfg)
            .into_iter()
            .filter(|d| d.class_id == WASTE)
            .map(|d| d.bbox)
            .collect();
        let sample = CoverageSample {
            timestamp: rec.timestamp,
            coverage: coverage_fraction(&waste, self.roi, self.grid_scale)?,
            waste_count: waste.len(),
        };
        self.samples.push(sample);
        Ok(sample)
    }

    pub fn finish(self) -> Vec<CoverageSample> {
        self.samples
    }
}

pub fn coverage_series(stream: &DetectionStream, roi: &RoiPolygon, cfg: &DetectorConfig) -> Result<Vec<CoverageSample>> {
    let mut builder = CoverageSeriesBuilder::new(roi, cfg);
    for rec in stream {
        builder.push(rec)?;
    }
    Ok(builder.finish())
}

pub const COVERAGE_CSV_HEADER: &str = "ts,iso_time,coverage,count";

pub fn format_coverage_csv(series: &[CoverageSample], clock: LocalClock) -> String {
    let mut out = String::with_capacity(48 * (series.len() + 1));
    out.push_str(COVERAGE_CSV_HEADER);
    out.push('\n');
    for s in series {
        let _ = writeln!(out, "{},{},{:.6},{}", s.timestamp, clock.iso(s.timestamp), s.coverage, s.waste_count);
    }
    out
}

pub fn write_coverage_csv(path: &Path, series: &[CoverageSample], clock: LocalClock) -> Result<()> {
    fs::write(path, format_coverage_csv(series, clock)).map_err(|e| Error::io(path, e))
}

pub fn parse_coverage_csv(text: &str, source_name: Option<&str>) -> Result<Vec<CoverageSample>> {
    let err = |line: usize, message: String| Error::Parse {
        source_name: source_name.map(str::to_string),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == COVERAGE_CSV_HEADER => {}
        _ => return Err(err(1, format!("expected header '{COVERAGE_CSV_HEADER}'"))),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(err(idx + 1, format!("expected 4 fields, found {}", f.len())));
        }
        let timestamp = f[0].trim().parse().map_err(|_| err(idx + 1, format!("bad ts '{}'", f[0])))?;
        let coverage: f64 = f[2].trim().parse().map_err(|_| err(idx + 1, format!("bad coverage '{}'", f[2])))?;
        if !(0.0..=1.0).contains(&coverage) {
            return Err(err(idx + 1, format!("coverage {coverage} outside [0, 1]")));
        }
        let waste_count = f[3].trim().parse().map_err(|_| err(idx + 1, format!("bad count '{}'", f[3])))?;
        out.push(CoverageSample {
            timestamp,
            coverage,
            waste_count,
        });
    }
    Ok(out)
}

pub fn read_coverage_csv(path: &Path) -> Result<Vec<CoverageSample>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_coverage_csv(&text, Some(&path.display().to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Hourly,
    Daily,
    Weekday,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 3] = [ProfileKind::Hourly, ProfileKind::Daily, ProfileKind::Weekday];

    pub fn name(&self) -> &'static str {
        match self {
            ProfileKind::Hourly => "hourly",
            ProfileKind::Daily => "daily",
            ProfileKind::Weekday => "weekday",
        }
    }

    fn bin_of(&self, clock: &LocalClock, ts: i64) -> i64 {
        match self {
            ProfileKind::Hourly => i64::from(clock.hour(ts)),
            ProfileKind::Daily => clock.day_number(ts),
            ProfileKind::Weekday => i64::from(clock.weekday(ts)),
        }
    }

    fn key_of(&self, bin: i64) -> String {
        match self {
            ProfileKind::Hourly => format!("{bin:02}"),
            ProfileKind::Daily => day_to_date(bin).format("%Y-%m-%d").to_string(),
            ProfileKind::Weekday => WEEKDAY_NAMES[bin as usize].to_string(),
        }
    }
}

impl std::str::FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hourly" => Ok(ProfileKind::Hourly),
            "daily" => Ok(ProfileKind::Daily),
            "weekday" => Ok(ProfileKind::Weekday),
            other => Err(Error::InvalidArgument(format!("unknown profile kind '{other}'"))),
        }
    }
}

/// One profile bin. Statistics are `None` when no sample fell in the bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    pub index: i64,
    pub key: String,
    pub count: usize,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl ProfileBin {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub kind: ProfileKind,
    pub tz_offset_minutes: i32,
    pub bins: Vec<ProfileBin>,
}

impl Profile {
    pub fn bin(&self, index: i64) -> Option<&ProfileBin> {
        self.bins.iter().find(|b| b.index == index)
    }

    /// Unweighted mean of the populated bin means among `indices`.
    pub fn mean_of(&self, indices: impl IntoIterator<Item = i64>) -> Option<f64> {
        let means: Vec<f64> = indices
            .into_iter()
            .filter_map(|i| self.bin(i).and_then(|b| b.mean))
            .collect();
        (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64)
    }

    /// Index of the populated bin with the highest mean; first wins on ties.
    pub fn argmax(&self) -> Option<i64> {
        let mut best: Option<(i64, f64)> = None;
        for b in &self.bins {
            if let Some(m) = b.mean {
                if best.is_none_or(|(_, v)| m > v) {
                    best = Some((b.index, m));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut out = String::from("bin,key,count,mean,min,max\n");
        for b in &self.bins {
            let _ = writeln!(out, "{},{},{},{},{},{}", b.index, b.key, b.count, opt(b.mean), opt(b.min), opt(b.max));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct BinStats {
    count: usize,
    sum: f64,
    min: f64,
    max: f64,
}

impl BinStats {
    fn merge(&mut self, other: &BinStats) {
        self.count += other.count;
        self.sum += other.sum;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }
}

/// Partial profile reduction; partitions can be accumulated separately and merged.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileAccumulator {
    kind: ProfileKind,
    clock: LocalClock,
    bins: BTreeMap<i64, BinStats>,
}

impl ProfileAccumulator {
    pub fn new(kind: ProfileKind, clock: LocalClock) -> Self {
        Self {
            kind,
            clock,
            bins: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, sample: &CoverageSample) {
        let bin = self.kind.bin_of(&self.clock, sample.timestamp);
        let c = sample.coverage;
        self.bins
            .entry(bin)
            .and_modify(|s| s.merge(&BinStats { count: 1, sum: c, min: c, max: c }))
            .or_insert(BinStats { count: 1, sum: c, min: c, max: c });
    }

    pub fn merge(&mut self, other: &ProfileAccumulator) {
        for (bin, stats) in &other.bins {
            self.bins
                .entry(*bin)
                .and_modify(|s| s.merge(stats))
                .or_insert(*stats);
        }
    }

    pub fn finish(&self) -> Result<Profile> {
        if self.bins.is_empty() {
            return Err(Error::EmptySeries);
        }
        let range: Vec<i64> = match self.kind {
            ProfileKind::Hourly => (0..24).collect(),
            ProfileKind::Weekday => (0..7).collect(),
            ProfileKind::Daily => {
                let first = *self.bins.keys().next().expect("nonempty");
                let last = *self.bins.keys().next_back().expect("nonempty");
                (first..=last).collect()
            }
        };
        let bins = range
            .into_iter()
            .map(|index| {
                let key = self.kind.key_of(index);
                match self.bins.get(&index) {
                    Some(s) => ProfileBin {
                        index,
                        key,
                        count: s.count,
                        mean: Some((s.sum / s.count as f64).clamp(s.min, s.max)),
                        min: Some(s.min),
                        max: Some(s.max),
                    },
                    None => ProfileBin {
                        index,
                        key,
                        count: 0,
                        mean: None,
                        min: None,
                        max: None,
                    },
                }
            })
            .collect();
        Ok(Profile {
            kind: self.kind,
            tz_offset_minutes: self.clock.offset_minutes(),
            bins,
        })
    }
}

/// Samples are taken in timestamp order, so the result does not depend on
/// the order of `series`.
pub fn profile(series: &[CoverageSample], kind: ProfileKind, clock: LocalClock) -> Result<Profile> {
    let mut sorted: Vec<&CoverageSample> = series.iter().collect();
    sorted.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then(a.coverage.total_cmp(&b.coverage))
            .then(a.waste_count.cmp(&b.waste_count))
    });
    let mut acc = ProfileAccumulator::new(kind, clock);
    for s in sorted {
        acc.add(s);
    }
    acc.finish()
}

pub fn hourly_profile(series: &[CoverageSample], clock: LocalClock) -> Result<Profile> {
    profile(series, ProfileKind::Hourly, clock)
}

pub fn daily_profile(series: &[CoverageSample], clock: LocalClock) -> Result<Profile> {
    profile(series, ProfileKind::Daily, clock)
}

pub fn weekday_profile(series: &[CoverageSample], clock: LocalClock) -> Result<Profile> {
    profile(series, ProfileKind::Weekday, clock)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// New waste deposited.
    Dump,
    /// Waste consolidated into a heap.
    Pile,
    /// Area cleared.
    Clear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GvpEvent {
    pub kind: EventKind,
    pub start_ts: i64,
    pub end_ts: i64,
    #[serde(rename = "before")]
    pub coverage_before: f64,
    #[serde(rename = "after")]
    pub coverage_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventParams {
    /// Relative drop that counts as consolidation or clearing.
    pub drop_rel: f64,
    /// Absolute coverage rise that counts as dumping.
    pub rise_abs: f64,
    /// Coverage at or below which the ROI counts as clean.
    pub clean_level: f64,
    /// Longest gap, in seconds, between the two samples of a trigger.
    pub window: i64,
}

impl Default for EventParams {
    fn default() -> Self {
        Self {
            drop_rel: 0.5,
            rise_abs: 0.05,
            clean_level: 0.05,
            window: 1800,
        }
    }
}

impl EventParams {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("drop_rel", self.drop_rel),
            ("rise_abs", self.rise_abs),
            ("clean_level", self.clean_level),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(field, format!("{v} is outside (0, 1]")));
            }
        }
        if self.window <= 0 {
            return Err(Error::config("window", "must be positive"));
        }
        Ok(())
    }
}

/// Classify the change between two samples no further apart than the window.
fn classify(before: f64, after: f64, p: &EventParams) -> Option<EventKind> {
    if after - before >= p.rise_abs {
        Some(EventKind::Dump)
    } else if after < before && (before - after) / before >= p.drop_rel {
        if after <= p.clean_level {
            (before > p.clean_level).then_some(EventKind::Clear)
        } else {
            Some(EventKind::Pile)
        }
    } else {
        None
    }
}

/// Detect dumping, consolidation and clearing.
///
/// Every pair of samples at most `window` seconds apart is a raw trigger of
/// the kind [`classify`] gives it; overlapping or touching triggers of the
/// same kind merge into one event spanning them. A merged dump reports the
/// lowest starting and highest ending coverage of its triggers, pile and
/// clear the highest starting and lowest ending.
pub fn detect_events(series: &[CoverageSample], params: &EventParams) -> Vec<GvpEvent> {
    let mut sorted: Vec<&CoverageSample> = series.iter().collect();
    sorted.sort_by_key(|s| s.timestamp);

    let mut open: BTreeMap<EventKind, GvpEvent> = BTreeMap::new();
    let mut done: Vec<GvpEvent> = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in sorted[i + 1..].iter().take_while(|b| b.timestamp - a.timestamp <= params.window) {
            if b.timestamp == a.timestamp {
                continue;
            }
            let Some(kind) = classify(a.coverage, b.coverage, params) else {
                continue;
            };
            let raw = GvpEvent {
                kind,
                start_ts: a.timestamp,
                end_ts: b.timestamp,
                coverage_before: a.coverage,
                coverage_after: b.coverage,
            };
            match open.get_mut(&kind) {
                Some(ev) if raw.start_ts <= ev.end_ts => {
                    ev.end_ts = ev.end_ts.max(raw.end_ts);
                    if kind == EventKind::Dump {
                        ev.coverage_before = ev.coverage_before.min(raw.coverage_before);
                        ev.coverage_after = ev.coverage_after.max(raw.coverage_after);
                    } else {
                        ev.coverage_before = ev.coverage_before.max(raw.coverage_before);
                        ev.coverage_after = ev.coverage_after.min(raw.coverage_after);
                    }
                }
                Some(ev) => {
                    done.push(*ev);
                    *ev = raw;
                }
                None => {
                    open.insert(kind, raw);
                }
            }
        }
    }
    done.extend(open.into_values());
    done.sort_by(|a, b| a.start_ts.cmp(&b.start_ts).then(a.kind.cmp(&b.kind)));
    done
}

pub fn write_events_jsonl(path: &Path, events: &[GvpEvent]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for ev in events {
        writeln!(w, "{}", serde_json::to_string(ev).expect("event serializes")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_events_jsonl(path: &Path) -> Result<Vec<GvpEvent>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                source_name: Some(path.display().to_string()),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Detection;

    // 2024-01-01 00:00 local (+05:30), a Monday.
    const MON_MIDNIGHT: i64 = 1_704_047_400;

    fn sample(ts: i64, coverage: f64) -> CoverageSample {
        CoverageSample {
            timestamp: ts,
            coverage,
            waste_count: 0,
        }
    }

    #[test]
    fn clock() {
        let c = LocalClock::default();
        assert_eq!(c.hour(MON_MIDNIGHT), 0);
        assert_eq!(c.weekday(MON_MIDNIGHT), 0);
        assert_eq!(c.date(MON_MIDNIGHT).to_string(), "2024-01-01");
        assert_eq!(c.hour(MON_MIDNIGHT - 1), 23);
        assert_eq!(c.weekday(MON_MIDNIGHT - 1), 6);
        assert_eq!(c.iso(MON_MIDNIGHT), "2024-01-01T00:00:00+05:30");
        assert_eq!(LocalClock::new(0).iso(0), "1970-01-01T00:00:00+00:00");
    }

    #[test]
    fn series_examples() {
        let roi = RoiPolygon::full_frame(100.0, 100.0).unwrap();
        let cfg = DetectorConfig::default();
        assert!(coverage_series(&DetectionStream::default(), &roi, &cfg).unwrap().is_empty());

        let rec = FrameRecord {
            frame_id: "a".into(),
            timestamp: 10,
            detections: vec![Detection::new(BBox::new(0.0, 0.0, 50.0, 50.0), 0.9, WASTE)],
        };
        let s = coverage_series(&DetectionStream::new(vec![rec]).unwrap(), &roi, &cfg).unwrap();
        assert_eq!(s, vec![CoverageSample { timestamp: 10, coverage: 0.25, waste_count: 1 }]);
    }

    #[test]
    fn non_waste_and_low_confidence_are_ignored() {
        let roi = RoiPolygon::full_frame(100.0, 100.0).unwrap();
        let cfg = DetectorConfig::default();
        let rec = FrameRecord {
            frame_id: "a".into(),
            timestamp: 10,
            detections: vec![
                Detection::new(BBox::new(0.0, 0.0, 50.0, 50.0), 0.9, 1),
                Detection::new(BBox::new(50.0, 50.0, 50.0, 50.0), 0.1, WASTE),
            ],
        };
        let s = coverage_series(&DetectionStream::new(vec![rec]).unwrap(), &roi, &cfg).unwrap();
        assert_eq!((s[0].coverage, s[0].waste_count), (0.0, 0));
    }

    #[test]
    fn constant_profile() {
        let series: Vec<_> = (0..48).map(|i| sample(MON_MIDNIGHT + i * 1800, 0.39)).collect();
        let p = hourly_profile(&series, LocalClock::default()).unwrap();
        assert_eq!(p.bins.len(), 24);
        assert!(p.bins.iter().all(|b| b.count == 2 && (b.mean.unwrap() - 0.39).abs() < 1e-12));
    }

    #[test]
    fn weekday_gaps_are_flagged() {
        let series: Vec<_> = (0..96).map(|i| sample(MON_MIDNIGHT + i * 1800, 0.1)).collect();
        let p = weekday_profile(&series, LocalClock::default()).unwrap();
        assert_eq!(p.bins.len(), 7);
        assert!(!p.bins[0].is_empty() && !p.bins[1].is_empty());
        for b in &p.bins[2..] {
            assert!(b.is_empty() && b.mean.is_none(), "{b:?}");
        }
        assert!(p.to_csv().contains("2,Wed,0,,,\n"));
    }

    #[test]
    fn daily_profile_spans_gaps() {
        let series = [sample(MON_MIDNIGHT, 0.2), sample(MON_MIDNIGHT + 2 * 86_400, 0.4)];
        let p = daily_profile(&series, LocalClock::default()).unwrap();
        let keys: Vec<_> = p.bins.iter().map(|b| b.key.as_str()).collect();
        assert_eq!(keys, ["2024-01-01", "2024-01-02", "2024-01-03"]);
        assert!(p.bins[1].is_empty());
        assert!(matches!(daily_profile(&[], LocalClock::default()), Err(Error::EmptySeries)));
    }

    #[test]
    fn accumulators_merge() {
        let series: Vec<_> = (0..100).map(|i| sample(MON_MIDNIGHT + i * 977, (i % 13) as f64 / 13.0)).collect();
        let whole = hourly_profile(&series, LocalClock::default()).unwrap();
        let mut left = ProfileAccumulator::new(ProfileKind::Hourly, LocalClock::default());
        let mut right = left.clone();
        series[..37].iter().for_each(|s| left.add(s));
        series[37..].iter().for_each(|s| right.add(s));
        left.merge(&right);
        let merged = left.finish().unwrap();
        for (a, b) in whole.bins.iter().zip(&merged.bins) {
            assert_eq!(a.count, b.count);
            assert_eq!(a.min, b.min);
            assert!((a.mean.unwrap_or(0.0) - b.mean.unwrap_or(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn events_flat_series() {
        let series: Vec<_> = (0..50).map(|i| sample(i * 300, 0.2)).collect();
        assert!(detect_events(&series, &EventParams::default()).is_empty());
    }

    #[test]
    fn events_pile_then_clear() {
        let series = [sample(0, 0.30), sample(1800, 0.15), sample(3600, 0.02)];
        let ev = detect_events(&series, &EventParams::default());
        assert_eq!(ev.len(), 2, "{ev:?}");
        assert_eq!(ev[0].kind, EventKind::Pile);
        assert_eq!((ev[0].start_ts, ev[0].end_ts), (0, 1800));
        assert_eq!(ev[1].kind, EventKind::Clear);
        assert_eq!((ev[1].start_ts, ev[1].end_ts), (1800, 3600));
        assert_eq!((ev[1].coverage_before, ev[1].coverage_after), (0.15, 0.02));
    }

    #[test]
    fn rising_series_merges_into_one_dump() {
        let series: Vec<_> = (0..20).map(|i| sample(i * 300, 0.02 * i as f64)).collect();
        let ev = detect_events(&series, &EventParams::default());
        assert_eq!(ev.len(), 1);
        let d = ev[0];
        assert_eq!(d.kind, EventKind::Dump);
        assert!(d.coverage_after > d.coverage_before && d.start_ts < d.end_ts);
        assert_eq!((d.start_ts, d.end_ts), (0, 19 * 300));
    }

    #[test]
    fn coverage_csv_round_trip() {
        let series = vec![
            CoverageSample { timestamp: MON_MIDNIGHT, coverage: 0.123_456, waste_count: 3 },
            CoverageSample { timestamp: MON_MIDNIGHT + 300, coverage: 0.0, waste_count: 0 },
        ];
        let text = format_coverage_csv(&series, LocalClock::default());
        assert!(text.starts_with("ts,iso_time,coverage,count\n1704047400,2024-01-01T00:00:00+05:30,0.123456,3\n"));
        assert_eq!(parse_coverage_csv(&text, None).unwrap(), series);
        assert!(parse_coverage_csv("nope\n", None).is_err());
        assert!(matches!(
            parse_coverage_csv("ts,iso_time,coverage,count\n1,x,1.5,0\n", None),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn event_log_format() {
        let ev = GvpEvent {
            kind: EventKind::Clear,
            start_ts: 1,
            end_ts: 2,
            coverage_before: 0.5,
            coverage_after: 0.0,
        };
        assert_eq!(
            serde_json::to_string(&ev).unwrap(),
            r#"{"kind":"clear","start_ts":1,"end_ts":2,"before":0.5,"after":0.0}"#
        );
    }
}
