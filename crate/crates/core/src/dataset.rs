//! Frame ingestion, YOLO label I/O, train/test splitting and flip augmentation.
//!
//! Pixel work (resizing, normalization, blurring, flipping the image itself)
//! belongs to the detector adapter. This module only carries the directives
//! and the label arithmetic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm_to_pixel, GroundTruthBox, NormBox};

pub const FRAME_EXTENSIONS: [&str; 2] = ["jpg", "png"];
pub const FRAME_NAME_FORMAT: &str = "%Y%m%d_%H%M%S";
pub const DEFAULT_CLASS_NAMES: [&str; 2] = ["waste", "non-waste"];
pub const CLASSES_FILE: &str = "classes.txt";

/// Parse `YYYYMMDD_HHMMSS` (UTC) into seconds since the epoch.
pub fn parse_frame_stem(stem: &str) -> Option<i64> {
    if stem.len() != 15 {
        return None;
    }
    NaiveDateTime::parse_from_str(stem, FRAME_NAME_FORMAT)
        .ok()
        .map(|t| t.and_utc().timestamp())
}

pub fn format_frame_stem(ts: i64) -> String {
    chrono::DateTime::from_timestamp(ts, 0)
        .expect("timestamp in chrono range")
        .format(FRAME_NAME_FORMAT)
        .to_string()
}

/// A frame image on disk, identified by its file stem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameStub {
    pub frame_id: String,
    pub timestamp: i64,
    pub path: PathBuf,
}

/// Directory of timestamp-named frame images.
#[derive(Debug, Clone)]
pub struct FrameSource {
    pub root: PathBuf,
    /// Frame rate of the video the images were cut from. Informational.
    pub fps: f64,
}

impl FrameSource {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            fps: 30.0,
        }
    }

    /// All frames, ordered by timestamp. Files with other extensions are ignored.
    pub fn scan(&self) -> Result<Vec<FrameStub>> {
        let entries = fs::read_dir(&self.root).map_err(|e| Error::io(&self.root, e))?;
        let mut frames = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&self.root, e))?;
            let path = entry.path();
            let Some(ext) = path.extension().and_then(|e| e.to_str()) else {
                continue;
            };
            if !FRAME_EXTENSIONS.contains(&ext.to_ascii_lowercase().as_str()) {
                continue;
            }
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let timestamp =
                parse_frame_stem(&stem).ok_or_else(|| Error::BadFrameName(entry.file_name().to_string_lossy().into()))?;
            frames.push(FrameStub {
                frame_id: stem,
                timestamp,
                path,
            });
        }
        frames.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.path.cmp(&b.path)));
        if let Some(pair) = frames.windows(2).find(|w| w[0].timestamp == w[1].timestamp) {
            return Err(Error::DuplicateFrame(pair[1].frame_id.clone()));
        }
        Ok(frames)
    }

    pub fn sample(&self, interval: i64) -> Result<Vec<FrameStub>> {
        let frames = self.scan()?;
        if frames.is_empty() {
            return Err(Error::EmptySource(self.root.clone()));
        }
        sample_frames(&frames, interval)
    }
}

/// Keep the earliest frame of every `interval`-second bucket, buckets aligned
/// to the first timestamp. Input must be sorted by timestamp.
pub fn sample_frames(frames: &[FrameStub], interval: i64) -> Result<Vec<FrameStub>> {
    if interval <= 0 {
        return Err(Error::InvalidArgument(format!("interval must be positive, got {interval}")));
    }
    let Some(first) = frames.first() else {
        return Err(Error::EmptySource(PathBuf::new()));
    };
    let origin = first.timestamp;
    let mut out: Vec<FrameStub> = Vec::new();
    let mut last_bucket = None;
    for frame in frames {
        let bucket = (frame.timestamp - origin).div_euclid(interval);
        if last_bucket != Some(bucket) {
            out.push(frame.clone());
            last_bucket = Some(bucket);
        }
    }
    Ok(out)
}

/// One YOLO label line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelBox {
    #[serde(rename = "cls")]
    pub class_id: u32,
    #[serde(flatten)]
    pub bbox: NormBox,
}

impl LabelBox {
    pub fn new(class_id: u32, bbox: NormBox) -> Self {
        Self { class_id, bbox }
    }

    pub fn flip_h(&self) -> LabelBox {
        LabelBox {
            class_id: self.class_id,
            bbox: self.bbox.flip_h(),
        }
    }
}

/// Parse YOLO label text: one `class cx cy w h` line per box. Blank lines are skipped.
pub fn parse_yolo_labels(text: &str, source_name: Option<&str>) -> Result<Vec<LabelBox>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        source_name: source_name.map(str::to_string),
        line,
        message,
    };
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(parse_err(line_no, format!("expected 5 fields, found {}", fields.len())));
        }
        let class_id: u32 = fields[0]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad class id '{}'", fields[0])))?;
        let mut coords = [0.0f64; 4];
        for (slot, field) in coords.iter_mut().zip(&fields[1..]) {
            *slot = field
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad coordinate '{field}'")))?;
        }
        let bbox = NormBox::new(coords[0], coords[1], coords[2], coords[3]);
        bbox.validate()?;
        out.push(LabelBox { class_id, bbox });
    }
    Ok(out)
}

pub fn read_yolo_labels(path: &Path) -> Result<Vec<LabelBox>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_yolo_labels(&text, Some(&path.display().to_string()))
}

pub fn format_yolo_labels(labels: &[LabelBox]) -> String {
    let mut out = String::new();
    for l in labels {
        let b = &l.bbox;
        let _ = writeln!(out, "{} {:.6} {:.6} {:.6} {:.6}", l.class_id, b.cx, b.cy, b.w, b.h);
    }
    out
}

pub fn write_yolo_labels(path: &Path, labels: &[LabelBox]) -> Result<()> {
    fs::write(path, format_yolo_labels(labels)).map_err(|e| Error::io(path, e))
}

/// Ground-truth labels keyed by frame id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub labels: BTreeMap<String, Vec<LabelBox>>,
    pub class_names: Vec<String>,
}

impl AnnotationSet {
    pub fn new(class_names: Vec<String>) -> Self {
        Self {
            labels: BTreeMap::new(),
            class_names,
        }
    }

    pub fn with_default_classes() -> Self {
        Self::new(DEFAULT_CLASS_NAMES.iter().map(|s| s.to_string()).collect())
    }

    pub fn insert(&mut self, frame_id: impl Into<String>, labels: Vec<LabelBox>) -> Result<()> {
        let frame_id = frame_id.into();
        if let Some(bad) = labels.iter().find(|l| l.class_id as usize >= self.class_names.len()) {
            return Err(Error::InvalidArgument(format!(
                "frame '{frame_id}': class id {} not in {} declared classes",
                bad.class_id,
                self.class_names.len()
            )));
        }
        self.labels.insert(frame_id, labels);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, frame_id: &str) -> Option<&[LabelBox]> {
        self.labels.get(frame_id).map(Vec::as_slice)
    }

    /// Labels of one frame converted to pixel-space ground truth.
    pub fn ground_truth(&self, frame_id: &str, frame_w: f64, frame_h: f64) -> Option<Result<Vec<GroundTruthBox>>> {
        self.labels.get(frame_id).map(|labels| {
            labels
                .iter()
                .map(|l| Ok(GroundTruthBox::new(norm_to_pixel(&l.bbox, frame_w, frame_h)?, l.class_id)))
                .collect()
        })
    }

    /// Load every `<frame_id>.txt` in `dir`. Class names come from `classes.txt` when present.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let classes_path = dir.join(CLASSES_FILE);
        let mut set = if classes_path.exists() {
            let text = fs::read_to_string(&classes_path).map_err(|e| Error::io(&classes_path, e))?;
            Self::new(
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::to_string)
                    .collect(),
            )
        } else {
            Self::with_default_classes()
        };
        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") || path == classes_path {
                continue;
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let labels = read_yolo_labels(&path)?;
            set.insert(stem, labels)?;
        }
        Ok(set)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let classes_path = dir.join(CLASSES_FILE);
        let mut names = self.class_names.join("\n");
        names.push('\n');
        fs::write(&classes_path, names).map_err(|e| Error::io(&classes_path, e))?;
        for (frame_id, labels) in &self.labels {
            write_yolo_labels(&dir.join(format!("{frame_id}.txt")), labels)?;
        }
        Ok(())
    }

    /// Every annotated frame must exist in `frames`.
    pub fn check_frames<'a>(&self, frames: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let known: BTreeSet<&str> = frames.into_iter().collect();
        let missing: Vec<String> = self
            .labels
            .keys()
            .filter(|id| !known.contains(id.as_str()))
            .cloned()
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "annotations reference unknown frames: {}",
                missing.join(", ")
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    /// Sampled frame without annotations.
    Unlabeled,
}

/// Pixel-level directive for the adapter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Transform {
    FlipH,
    Blur { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub frame_id: String,
    pub split: Split,
    pub transforms: Vec<Transform>,
    pub labels: Vec<LabelBox>,
    /// Original entry an augmented entry was derived from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub target_w: u32,
    pub target_h: u32,
    /// Scale pixel values to the unit interval.
    pub normalize: bool,
}

impl Default for Preprocess {
    fn default() -> Self {
        Self {
            target_w: 700,
            target_h: 395,
            normalize: true,
        }
    }
}

/// Entry counts. `train` and `test` count original annotated frames; flipped copies are counted only in `flipped`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ManifestSummary {
    pub annotated: usize,
    pub unannotated: usize,
    pub train: usize,
    pub test: usize,
    pub flipped: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub preprocess: Preprocess,
}

impl DatasetManifest {
    pub fn summary(&self) -> ManifestSummary {
        let mut s = ManifestSummary {
            total: self.entries.len(),
            ..Default::default()
        };
        for e in &self.entries {
            if e.source.is_some() {
                s.flipped += 1;
                continue;
            }
            match e.split {
                Split::Train => s.train += 1,
                Split::Test => s.test += 1,
                Split::Unlabeled => s.unannotated += 1,
            }
            if e.split != Split::Unlabeled {
                s.annotated += 1;
            }
        }
        s
    }

    /// Add sampled frames that carry no annotations. Ids already present are skipped.
    pub fn add_unlabeled<'a>(&mut self, frame_ids: impl IntoIterator<Item = &'a str>) {
        let present: BTreeSet<String> = self.entries.iter().map(|e| e.frame_id.clone()).collect();
        for id in frame_ids {
            if present.contains(id) {
                continue;
            }
            self.entries.push(ManifestEntry {
                frame_id: id.to_string(),
                split: Split::Unlabeled,
                transforms: Vec::new(),
                labels: Vec::new(),
                source: None,
            });
        }
    }

    /// Attach a blur directive to every train entry.
    pub fn add_blur(&mut self, sigma: f64) {
        for e in self.entries.iter_mut().filter(|e| e.split == Split::Train) {
            e.transforms.push(Transform::Blur { sigma });
        }
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for e in &self.entries {
            let line = serde_json::to_string(e).expect("manifest entry serializes");
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(&line).map_err(|e| Error::Parse {
                source_name: Some(path.display().to_string()),
                line: idx + 1,
                message: e.to_string(),
            })?;
            entries.push(entry);
        }
        Ok(Self {
            entries,
            preprocess: Preprocess::default(),
        })
    }
}

/// Seeded random split. Frames are ordered by id before shuffling so the
/// outcome depends only on the set of ids and the seed.
pub fn split(ann: &AnnotationSet, train_fraction: f64, seed: u64) -> Result<DatasetManifest> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut ids: Vec<&String> = ann.labels.keys().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let n_train = (train_fraction * ids.len() as f64).round() as usize;
    let entries = ids
        .into_iter()
        .enumerate()
        .map(|(i, id)| ManifestEntry {
            frame_id: id.clone(),
            split: if i < n_train { Split::Train } else { Split::Test },
            transforms: Vec::new(),
            labels: ann.labels[id].clone(),
            source: None,
        })
        .collect();
    Ok(DatasetManifest {
        entries,
        preprocess: Preprocess::default(),
    })
}

/// Append `count` horizontally flipped copies of distinct original train entries.
pub fn augment_flip(manifest: &DatasetManifest, count: usize, seed: u64) -> Result<DatasetManifest> {
    let originals: Vec<usize> = manifest
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.split == Split::Train && e.source.is_none())
        .map(|(i, _)| i)
        .collect();
    if count > originals.len() {
        return Err(Error::CountExceedsTrain {
            count,
            train: originals.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, originals.len(), count).into_vec();
    picked.sort_unstable();

    let mut out = manifest.clone();
    for p in picked {
        let orig = &manifest.entries[originals[p]];
        let mut transforms = orig.transforms.clone();
        transforms.insert(0, Transform::FlipH);
        out.entries.push(ManifestEntry {
            frame_id: format!("{}_flip", orig.frame_id),
            split: Split::Train,
            transforms,
            labels: orig.labels.iter().map(LabelBox::flip_h).collect(),
            source: Some(orig.frame_id.clone()),
        });
    }
    Ok(out)
}
