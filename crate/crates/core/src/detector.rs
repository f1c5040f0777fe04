//! Detection ingestion, the external adapter protocol, confidence filtering,
//! greedy NMS and per-frame waste counting.
//!
//! Detections travel as JSON lines:
//!
//! ```text
//! {"frame_id": "20240101_000000", "ts": 1704067200, "boxes": [{"x": 1.0, "y": 2.0, "w": 30.0, "h": 20.0, "conf": 0.9, "cls": 0}]}
//! ```
//!
//! An adapter is any executable that reads one frame path per line on stdin
//! and answers with exactly one such record per path, in order.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Lines, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdout, Command, Stdio};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox, Detection, FrameRecord, WASTE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub confidence_threshold: f64,
    pub nms_iou_threshold: f64,
    pub class_filter: Option<BTreeSet<u32>>,
    /// Program followed by its arguments.
    pub adapter_cmd: Option<Vec<String>>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            confidence_threshold: 0.25,
            nms_iou_threshold: 0.45,
            class_filter: None,
            adapter_cmd: None,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("confidence_threshold", self.confidence_threshold),
            ("nms_iou_threshold", self.nms_iou_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(field, format!("{v} is outside [0, 1]")));
            }
        }
        if matches!(&self.adapter_cmd, Some(cmd) if cmd.is_empty()) {
            return Err(Error::config("adapter_cmd", "empty command"));
        }
        Ok(())
    }
}

/// Frame records with strictly increasing timestamps and unique ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionStream {
    records: Vec<FrameRecord>,
}

impl DetectionStream {
    pub fn new(records: Vec<FrameRecord>) -> Result<Self> {
        let mut check = StreamCheck::default();
        for r in &records {
            check.push(r)?;
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[FrameRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<FrameRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FrameRecord> {
        self.records.iter()
    }
}

impl<'a> IntoIterator for &'a DetectionStream {
    type Item = &'a FrameRecord;
    type IntoIter = std::slice::Iter<'a, FrameRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

#[derive(Default)]
struct StreamCheck {
    last_ts: Option<i64>,
    seen: HashSet<String>,
}

impl StreamCheck {
    fn push(&mut self, r: &FrameRecord) -> Result<()> {
        if let Some(prev) = self.last_ts {
            if r.timestamp <= prev {
                return Err(Error::NonMonotonicTimestamps {
                    frame_id: r.frame_id.clone(),
                    ts: r.timestamp,
                    previous: prev,
                });
            }
        }
        if !self.seen.insert(r.frame_id.clone()) {
            return Err(Error::DuplicateFrameId(r.frame_id.clone()));
        }
        self.last_ts = Some(r.timestamp);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    conf: f64,
    cls: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireRecord {
    frame_id: String,
    ts: i64,
    boxes: Vec<WireBox>,
}

impl WireRecord {
    fn into_record(self) -> std::result::Result<FrameRecord, String> {
        let detections = self
            .boxes
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                if ![b.x, b.y, b.w, b.h, b.conf].iter().all(|v| v.is_finite()) {
                    return Err(format!("box {i}: non-finite value"));
                }
                if b.w < 0.0 || b.h < 0.0 {
                    return Err(format!("box {i}: negative width or height"));
                }
                if !(0.0..=1.0).contains(&b.conf) {
                    return Err(format!("box {i}: confidence {} outside [0, 1]", b.conf));
                }
                Ok(Detection::new(BBox::new(b.x, b.y, b.w, b.h), b.conf, b.cls))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(FrameRecord {
            frame_id: self.frame_id,
            timestamp: self.ts,
            detections,
        })
    }
}

/// Parse and validate one wire record.
pub fn parse_detection_line(line: &str) -> std::result::Result<FrameRecord, String> {
    let wire: WireRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    wire.into_record()
}

pub fn format_detection_line(rec: &FrameRecord) -> String {
    let wire = WireRecord {
        frame_id: rec.frame_id.clone(),
        ts: rec.timestamp,
        boxes: rec
            .detections
            .iter()
            .map(|d| WireBox {
                x: d.bbox.x,
                y: d.bbox.y,
                w: d.bbox.w,
                h: d.bbox.h,
                conf: d.confidence,
                cls: d.class_id,
            })
            .collect(),
    };
    serde_json::to_string(&wire).expect("wire record serializes")
}

pub fn read_detections<R: BufRead>(reader: R, source_name: Option<&str>) -> Result<DetectionStream> {
    let mut records = Vec::new();
    let mut check = StreamCheck::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source_name.unwrap_or("<detections>"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_detection_line(&line).map_err(|message| Error::Parse {
            source_name: source_name.map(str::to_string),
            line: idx + 1,
            message,
        })?;
        check.push(&rec)?;
        records.push(rec);
    }
    Ok(DetectionStream { records })
}

pub fn load_detections(path: &Path) -> Result<DetectionStream> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_detections(BufReader::new(file), Some(&path.display().to_string()))
}

pub fn write_detections(path: &Path, stream: &DetectionStream) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in stream {
        writeln!(w, "{}", format_detection_line(rec)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Confidence threshold plus optional class filter.
pub fn filter_detections(dets: &[Detection], cfg: &DetectorConfig) -> Vec<Detection> {
    dets.iter()
        .filter(|d| d.confidence >= cfg.confidence_threshold)
        .filter(|d| cfg.class_filter.as_ref().is_none_or(|f| f.contains(&d.class_id)))
        .copied()
        .collect()
}

/// Greedy per-class NMS. Output is in confidence order, equal confidences
/// keeping their input order.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence).then(a.cmp(&b)));
    let mut kept: Vec<Detection> = Vec::new();
    for i in order {
        let d = &dets[i];
        let suppressed = kept
            .iter()
            .any(|k| k.class_id == d.class_id && iou(&k.bbox, &d.bbox) >= iou_threshold);
        if !suppressed {
            kept.push(*d);
        }
    }
    kept
}

/// Filter then NMS, the standard post-processing for raw adapter output.
pub fn postprocess(dets: &[Detection], cfg: &DetectorConfig) -> Vec<Detection> {
    nms(&filter_detections(dets, cfg), cfg.nms_iou_threshold)
}

pub fn waste_count(rec: &FrameRecord, cfg: &DetectorConfig) -> usize {
    postprocess(&rec.detections, cfg)
        .iter()
        .filter(|d| d.class_id == WASTE)
        .count()
}

/// A running adapter process. Iterating yields one validated record per
/// input frame; [`AdapterRun::finish`] checks the exit status and trailing output.
pub struct AdapterRun {
    child: Child,
    lines: Lines<BufReader<ChildStdout>>,
    feeder: Option<JoinHandle<()>>,
    stderr: Option<JoinHandle<String>>,
    expected: std::vec::IntoIter<String>,
    check: StreamCheck,
    delivered: usize,
    failed: bool,
}

fn frame_id_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn spawn_adapter(cfg: &DetectorConfig, frames: &[PathBuf]) -> Result<AdapterRun> {
    let cmd = cfg
        .adapter_cmd
        .as_ref()
        .filter(|c| !c.is_empty())
        .ok_or_else(|| Error::config("adapter_cmd", "no adapter command configured"))?;
    let mut child = Command::new(&cmd[0])
        .args(&cmd[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::AdapterCrashed {
            status: format!("spawn failure for '{}'", cmd[0]),
            stderr: e.to_string(),
        })?;

    let mut stdin = child.stdin.take().expect("stdin piped");
    let input: Vec<String> = frames.iter().map(|p| p.display().to_string()).collect();
    let feeder = std::thread::spawn(move || {
        let mut w = BufWriter::new(&mut stdin);
        for line in input {
            // A closed pipe means the adapter quit early; the reader side reports it.
            if writeln!(w, "{line}").is_err() {
                return;
            }
        }
        let _ = w.flush();
    });
    let mut stderr = child.stderr.take().expect("stderr piped");
    let stderr = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    let stdout = child.stdout.take().expect("stdout piped");
    Ok(AdapterRun {
        child,
        lines: BufReader::new(stdout).lines(),
        feeder: Some(feeder),
        stderr: Some(stderr),
        expected: frames.iter().map(|p| frame_id_of(p)).collect::<Vec<_>>().into_iter(),
        check: StreamCheck::default(),
        delivered: 0,
        failed: false,
    })
}

impl AdapterRun {
    fn crash_or(&mut self, fallback: Error) -> Error {
        if let Some(h) = self.feeder.take() {
            let _ = h.join();
        }
        match self.child.wait() {
            Ok(status) if !status.success() => Error::AdapterCrashed {
                status: status.to_string(),
                stderr: self.stderr.take().and_then(|h| h.join().ok()).unwrap_or_default(),
            },
            _ => fallback,
        }
    }

    fn next_record(&mut self, expected_id: String) -> Result<FrameRecord> {
        let line = loop {
            match self.lines.next() {
                Some(Ok(line)) if line.trim().is_empty() => continue,
                Some(Ok(line)) => break line,
                Some(Err(e)) => return Err(self.crash_or(Error::ProtocolViolation(format!("unreadable output: {e}")))),
                None => {
                    let msg = format!("adapter output ended after {} of the expected records", self.delivered);
                    return Err(self.crash_or(Error::ProtocolViolation(msg)));
                }
            }
        };
        let rec = parse_detection_line(&line)
            .map_err(|e| Error::ProtocolViolation(format!("record {}: {e}", self.delivered + 1)))?;
        if rec.frame_id != expected_id {
            return Err(Error::ProtocolViolation(format!(
                "record {} is for frame '{}', expected '{expected_id}'",
                self.delivered + 1,
                rec.frame_id
            )));
        }
        self.check.push(&rec)?;
        Ok(rec)
    }

    /// Wait for the adapter and verify it produced nothing beyond the expected records.
    pub fn finish(mut self) -> Result<()> {
        if self.expected.len() > 0 && !self.failed {
            return Err(Error::ProtocolViolation(format!(
                "finish called with {} records outstanding",
                self.expected.len()
            )));
        }
        let extra = self.lines.by_ref().filter_map(|l| l.ok()).filter(|l| !l.trim().is_empty()).count();
        if let Some(h) = self.feeder.take() {
            let _ = h.join();
        }
        let status = self.child.wait().map_err(|e| Error::AdapterCrashed {
            status: "wait failed".into(),
            stderr: e.to_string(),
        })?;
        let stderr = self.stderr.take().and_then(|h| h.join().ok()).unwrap_or_default();
        if !status.success() {
            return Err(Error::AdapterCrashed {
                status: status.to_string(),
                stderr,
            });
        }
        if extra > 0 {
            return Err(Error::ProtocolViolation(format!(
                "{extra} record(s) beyond the {} requested",
                self.delivered
            )));
        }
        Ok(())
    }
}

impl Iterator for AdapterRun {
    type Item = Result<FrameRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let expected_id = self.expected.next()?;
        let out = self.next_record(expected_id);
        match &out {
            Ok(_) => self.delivered += 1,
            Err(_) => self.failed = true,
        }
        Some(out)
    }
}

impl Drop for AdapterRun {
    fn drop(&mut self) {
        if self.feeder.is_some() {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

/// Run the configured adapter over `frames` and collect its records.
pub fn run_adapter(cfg: &DetectorConfig, frames: &[PathBuf]) -> Result<DetectionStream> {
    let mut run = spawn_adapter(cfg, frames)?;
    let mut records = Vec::with_capacity(frames.len());
    for rec in run.by_ref() {
        records.push(rec?);
    }
    run.finish()?;
    Ok(DetectionStream { records })
}
