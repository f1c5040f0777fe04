use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "gvp", version, about = "Garbage vulnerable point monitoring: sampling, detection, coverage analytics and evaluation")]
pub struct Cli {
    /// TOML configuration file; flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (default: out)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for splitting, augmentation and simulation
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Local time offset from UTC in minutes (default: 330)
    #[arg(long = "tz-offset", global = true, value_name = "MINUTES", allow_negative_numbers = true)]
    pub tz_offset: Option<i32>,
    /// Suppress the summary line on stdout
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Keep one frame per interval from a directory of YYYYMMDD_HHMMSS images; writes frames.txt
    Sample(SampleArgs),
    /// Split annotated frames into train/test and add flipped copies; writes manifest.jsonl and prep_summary.json
    Prep(PrepArgs),
    /// Run the detector adapter over frames, or load a detections file; writes detections.jsonl
    Detect(DetectArgs),
    /// Compute per-frame ROI coverage from detections; writes coverage.csv
    Coverage(CoverageArgs),
    /// Score detections against YOLO labels; writes eval.json and eval_table.txt
    Eval(EvalArgs),
    /// Hourly, daily or weekday coverage profiles; writes profile_<kind>.csv and .json
    Profile(ProfileArgs),
    /// Detect dump, pile and clear events in a coverage series; writes events.jsonl
    Events(EventsArgs),
    /// Generate a synthetic scenario with ground truth and a noisy detector stream
    Simulate(SimulateArgs),
    /// Summarize evaluation and coverage outputs; writes report.txt
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::Prep(_) => "prep",
            Command::Detect(_) => "detect",
            Command::Coverage(_) => "coverage",
            Command::Eval(_) => "eval",
            Command::Profile(_) => "profile",
            Command::Events(_) => "events",
            Command::Simulate(_) => "simulate",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    /// Directory of frame images
    #[arg(long, value_name = "DIR")]
    pub frames_dir: Option<PathBuf>,
    /// Sampling interval in seconds (default: 300)
    #[arg(long, value_name = "SECONDS")]
    pub interval: Option<i64>,
}

#[derive(Debug, Args, Serialize)]
pub struct PrepArgs {
    /// Directory of YOLO label files, one <frame_id>.txt per annotated frame
    #[arg(long, value_name = "DIR")]
    pub labels_dir: Option<PathBuf>,
    /// Sampled frame list (from `sample`); frames without labels join the unannotated pool
    #[arg(long, value_name = "PATH")]
    pub frame_list: Option<PathBuf>,
    /// Fraction of annotated frames used for training (default: 0.8)
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Number of horizontally flipped train copies to add (default: 0)
    #[arg(long)]
    pub flip_count: Option<usize>,
    /// Record a blur directive with this sigma on train entries
    #[arg(long)]
    pub blur_sigma: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct DetectArgs {
    /// Adapter command line, split on whitespace; overrides detector.adapter_cmd
    #[arg(long, value_name = "CMD")]
    pub adapter: Option<String>,
    /// Directory of frames to send to the adapter
    #[arg(long, value_name = "DIR")]
    pub frames_dir: Option<PathBuf>,
    /// Frame list to send to the adapter instead of scanning a directory
    #[arg(long, value_name = "PATH")]
    pub frame_list: Option<PathBuf>,
    /// Load an existing detections file instead of running an adapter
    #[arg(long, value_name = "PATH")]
    pub detections: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CoverageArgs {
    /// Detections file (default: <out>/detections.jsonl)
    #[arg(long, value_name = "PATH")]
    pub detections: Option<PathBuf>,
    /// ROI as JSON {"vertices": [[x, y], ...], "frame_w": .., "frame_h": ..}; overrides the config
    #[arg(long, value_name = "PATH")]
    pub roi: Option<PathBuf>,
    /// Minimum detection confidence (default: 0.25)
    #[arg(long)]
    pub confidence: Option<f64>,
    /// NMS IoU threshold (default: 0.45)
    #[arg(long)]
    pub nms_iou: Option<f64>,
    /// Raster cells per pixel for non-rectangular ROIs (default: 1)
    #[arg(long)]
    pub grid_scale: Option<u32>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Detections file (default: <out>/detections.jsonl)
    #[arg(long, value_name = "PATH")]
    pub detections: Option<PathBuf>,
    /// Directory of YOLO ground-truth labels
    #[arg(long, value_name = "DIR")]
    pub labels_dir: Option<PathBuf>,
    /// Drop detection records for frames without labels instead of failing
    #[arg(long)]
    pub skip_unlabeled: bool,
    /// Confidence threshold for frame accuracy (default: 0.25)
    #[arg(long)]
    pub confidence: Option<f64>,
    /// NMS IoU threshold for frame accuracy (default: 0.45)
    #[arg(long)]
    pub nms_iou: Option<f64>,
    /// Column heading for this run in the comparison table
    #[arg(long, default_value = "This run")]
    pub model_name: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ProfileArgs {
    /// Coverage CSV (default: <out>/coverage.csv)
    #[arg(long, value_name = "PATH")]
    pub coverage: Option<PathBuf>,
    /// hourly, daily, weekday or all
    #[arg(long, default_value = "all", value_parser = ["hourly", "daily", "weekday", "all"])]
    pub kind: String,
}

#[derive(Debug, Args, Serialize)]
pub struct EventsArgs {
    /// Coverage CSV (default: <out>/coverage.csv)
    #[arg(long, value_name = "PATH")]
    pub coverage: Option<PathBuf>,
    /// Relative coverage drop that counts as piling or clearing (default: 0.5)
    #[arg(long)]
    pub drop_rel: Option<f64>,
    /// Absolute coverage rise that counts as dumping (default: 0.05)
    #[arg(long)]
    pub rise_abs: Option<f64>,
    /// Coverage at or below which the ROI is clean (default: 0.05)
    #[arg(long)]
    pub clean_level: Option<f64>,
    /// Longest gap between compared samples, seconds (default: 1800)
    #[arg(long, value_name = "SECONDS")]
    pub window: Option<i64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Scenario TOML; built-in 60-day default when omitted
    #[arg(long, value_name = "PATH")]
    pub scenario: Option<PathBuf>,
    /// Number of simulated days
    #[arg(long)]
    pub days: Option<u32>,
    /// Target detector precision; tunes the clutter rate (needs --recall)
    #[arg(long)]
    pub precision: Option<f64>,
    /// Target detector recall; sets the miss probability (needs --precision)
    #[arg(long)]
    pub recall: Option<f64>,
    /// Box jitter standard deviation in pixels
    #[arg(long)]
    pub jitter_sigma: Option<f64>,
    /// Skip writing empty placeholder frame images
    #[arg(long)]
    pub no_frames: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Coverage CSV to summarize (default: <out>/coverage.csv)
    #[arg(long, value_name = "PATH")]
    pub coverage: Option<PathBuf>,
    /// Column heading for this run in the comparison table
    #[arg(long, default_value = "This run")]
    pub model_name: String,
}
