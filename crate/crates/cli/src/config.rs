use std::fs;
use std::path::{Path, PathBuf};

use gvp_core::analytics::{EventParams, LocalClock, DEFAULT_TZ_OFFSET_MINUTES};
use gvp_core::detector::DetectorConfig;
use gvp_core::{Error, Result, RoiPolygon};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub frames_dir: Option<PathBuf>,
    pub labels_dir: Option<PathBuf>,
    pub detections: Option<PathBuf>,
    pub coverage: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    pub train_fraction: f64,
    pub flip_count: usize,
    pub blur_sigma: Option<f64>,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            flip_count: 0,
            blur_sigma: None,
        }
    }
}

/// Everything a command may need. Loaded from TOML; command-line flags win.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub paths: Paths,
    /// ROI vertices in pixels; the full frame when absent.
    pub roi: Option<Vec<(f64, f64)>>,
    pub frame_w: f64,
    pub frame_h: f64,
    pub tz_offset_minutes: i32,
    pub seed: u64,
    pub grid_scale: u32,
    pub sample_interval: i64,
    pub detector: DetectorConfig,
    pub events: EventParams,
    pub prep: PrepConfig,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            roi: None,
            frame_w: 700.0,
            frame_h: 395.0,
            tz_offset_minutes: DEFAULT_TZ_OFFSET_MINUTES,
            seed: 0,
            grid_scale: 1,
            sample_interval: 300,
            detector: DetectorConfig::default(),
            events: EventParams::default(),
            prep: PrepConfig::default(),
        }
    }
}

pub fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| Error::InvalidConfig {
        field: path.display().to_string(),
        reason: e.to_string(),
    })
}

impl AppConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => parse_toml(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frame_w > 0.0 && self.frame_h > 0.0) {
            return Err(Error::InvalidConfig {
                field: "frame_w".into(),
                reason: "frame dimensions must be positive".into(),
            });
        }
        if self.grid_scale == 0 {
            return Err(Error::InvalidConfig {
                field: "grid_scale".into(),
                reason: "must be at least 1".into(),
            });
        }
        if self.sample_interval <= 0 {
            return Err(Error::InvalidConfig {
                field: "sample_interval".into(),
                reason: "must be positive".into(),
            });
        }
        self.detector.validate()?;
        self.events.validate()?;
        self.roi_polygon().map(|_| ())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn clock(&self) -> LocalClock {
        LocalClock::new(self.tz_offset_minutes)
    }

    pub fn roi_polygon(&self) -> Result<RoiPolygon> {
        match &self.roi {
            Some(v) => RoiPolygon::new(v.clone(), self.frame_w, self.frame_h),
            None => RoiPolygon::full_frame(self.frame_w, self.frame_h),
        }
    }
}

/// Require that an input path exists before any work starts.
pub fn require(path: Option<&PathBuf>, what: &str) -> Result<PathBuf> {
    let p = path.ok_or_else(|| Error::InvalidArgument(format!("no {what} given")))?;
    if !p.exists() {
        return Err(Error::Io {
            path: p.clone(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, format!("{what} does not exist")),
        });
    }
    Ok(p.clone())
}
