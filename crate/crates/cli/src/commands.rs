use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gvp_core::analytics::{
    detect_events, profile, read_coverage_csv, read_events_jsonl, write_coverage_csv, write_events_jsonl,
    CoverageSeriesBuilder, EventKind, ProfileKind, WEEKDAY_NAMES,
};
use gvp_core::dataset::{augment_flip, split, AnnotationSet, FrameSource, FrameStub};
use gvp_core::detector::{format_detection_line, load_detections, spawn_adapter, write_detections, DetectionStream};
use gvp_core::evaluation::{evaluate, reference_models, render_table, EvalReport, ModelRow};
use gvp_core::simulate::{expected_gt_boxes, expected_metrics, generate, with_operating_point, ScenarioConfig};
use gvp_core::{Error, Result, RoiPolygon};
use serde::Serialize;

use crate::args::*;
use crate::config::{parse_toml, require, AppConfig};

pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub summary: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, &(serde_json::to_string_pretty(value).expect("serializable") + "\n"))
}

fn out_path(cfg: &AppConfig, name: &str) -> PathBuf {
    cfg.out_dir().join(name)
}

/// Input path from the flag, then the config, then the default name under the output dir.
fn input_path(flag: &Option<PathBuf>, configured: &Option<PathBuf>, cfg: &AppConfig, default: &str) -> PathBuf {
    flag.clone()
        .or_else(|| configured.clone())
        .unwrap_or_else(|| out_path(cfg, default))
}

pub fn sample(cfg: &AppConfig, args: &SampleArgs) -> Result<Outcome> {
    let dir = require(args.frames_dir.as_ref().or(cfg.paths.frames_dir.as_ref()), "frames directory")?;
    let interval = args.interval.unwrap_or(cfg.sample_interval);
    let frames = FrameSource::new(dir).sample(interval)?;
    let path = out_path(cfg, "frames.txt");
    let list: String = frames.iter().map(|f| format!("{}\n", f.path.display())).collect();
    write_file(&path, &list)?;
    Ok(Outcome {
        summary: format!("sampled {} frames at {interval} s", frames.len()),
        outputs: vec![path],
    })
}

fn read_frame_list(path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(PathBuf::from).collect())
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn prep(cfg: &AppConfig, args: &PrepArgs) -> Result<Outcome> {
    let labels_dir = require(args.labels_dir.as_ref().or(cfg.paths.labels_dir.as_ref()), "labels directory")?;
    let frame_list = match &args.frame_list {
        Some(p) => Some(read_frame_list(&require(Some(p), "frame list")?)?),
        None => None,
    };
    let fraction = args.train_fraction.unwrap_or(cfg.prep.train_fraction);
    let flips = args.flip_count.unwrap_or(cfg.prep.flip_count);
    let blur = args.blur_sigma.or(cfg.prep.blur_sigma);

    let ann = AnnotationSet::load_dir(&labels_dir)?;
    let mut manifest = split(&ann, fraction, cfg.seed)?;
    if let Some(frames) = &frame_list {
        let ids: Vec<String> = frames.iter().map(|p| stem(p)).collect();
        manifest.add_unlabeled(ids.iter().map(String::as_str));
    }
    let mut manifest = augment_flip(&manifest, flips, cfg.seed.wrapping_add(1))?;
    if let Some(sigma) = blur {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("blur sigma must be positive, got {sigma}")));
        }
        manifest.add_blur(sigma);
    }
    let s = manifest.summary();
    let manifest_path = out_path(cfg, "manifest.jsonl");
    manifest.write_jsonl(&manifest_path)?;

    #[derive(Serialize)]
    struct PrepSummary<'a> {
        #[serde(flatten)]
        counts: &'a gvp_core::dataset::ManifestSummary,
        train_fraction: f64,
        seed: u64,
        preprocess: gvp_core::dataset::Preprocess,
    }
    let summary_path = out_path(cfg, "prep_summary.json");
    write_json(
        &summary_path,
        &PrepSummary {
            counts: &s,
            train_fraction: fraction,
            seed: cfg.seed,
            preprocess: manifest.preprocess,
        },
    )?;
    Ok(Outcome {
        summary: format!(
            "annotated {} (train {}, test {}), unannotated {}, flipped {}, total {}",
            s.annotated, s.train, s.test, s.unannotated, s.flipped, s.total
        ),
        outputs: vec![manifest_path, summary_path],
    })
}

pub fn detect(cfg: &AppConfig, args: &DetectArgs) -> Result<Outcome> {
    let mut det_cfg = cfg.detector.clone();
    if let Some(cmd) = &args.adapter {
        det_cfg.adapter_cmd = Some(cmd.split_whitespace().map(str::to_string).collect());
    }
    det_cfg.validate()?;
    let out = out_path(cfg, "detections.jsonl");

    let loaded = args.detections.as_ref().or(cfg.paths.detections.as_ref());
    if det_cfg.adapter_cmd.is_none() || args.detections.is_some() {
        let src = require(loaded, "detections file (or an adapter command)")?;
        let stream = load_detections(&src)?;
        write_detections(&out, &stream)?;
        return Ok(Outcome {
            summary: format!("loaded {} frame records from {}", stream.len(), src.display()),
            outputs: vec![out],
        });
    }

    let frames: Vec<PathBuf> = match &args.frame_list {
        Some(p) => read_frame_list(&require(Some(p), "frame list")?)?,
        None => {
            let dir = require(args.frames_dir.as_ref().or(cfg.paths.frames_dir.as_ref()), "frames directory")?;
            FrameSource::new(dir).scan()?.into_iter().map(|f: FrameStub| f.path).collect()
        }
    };
    if let Some(parent) = out.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    // Records are written as they arrive; the file only replaces the old one on success.
    let partial = out.with_extension("jsonl.partial");
    let streamed = stream_adapter(&det_cfg, &frames, &partial);
    if streamed.is_err() {
        let _ = fs::remove_file(&partial);
    }
    let boxes = streamed?;
    fs::rename(&partial, &out).map_err(io_err(&out))?;
    Ok(Outcome {
        summary: format!("adapter produced {} records with {boxes} boxes", frames.len()),
        outputs: vec![out],
    })
}

fn stream_adapter(det_cfg: &gvp_core::detector::DetectorConfig, frames: &[PathBuf], partial: &Path) -> Result<usize> {
    let file = fs::File::create(partial).map_err(io_err(partial))?;
    let mut w = BufWriter::new(file);
    let mut run = spawn_adapter(det_cfg, frames)?;
    let mut boxes = 0usize;
    for rec in run.by_ref() {
        let rec = rec?;
        boxes += rec.detections.len();
        writeln!(w, "{}", format_detection_line(&rec)).map_err(io_err(partial))?;
    }
    run.finish()?;
    w.flush().map_err(io_err(partial))?;
    Ok(boxes)
}

fn detector_overrides(cfg: &AppConfig, confidence: Option<f64>, nms_iou: Option<f64>) -> Result<gvp_core::detector::DetectorConfig> {
    let mut d = cfg.detector.clone();
    if let Some(c) = confidence {
        d.confidence_threshold = c;
    }
    if let Some(n) = nms_iou {
        d.nms_iou_threshold = n;
    }
    d.validate()?;
    Ok(d)
}

pub fn coverage(cfg: &AppConfig, args: &CoverageArgs) -> Result<Outcome> {
    let src = input_path(&args.detections, &cfg.paths.detections, cfg, "detections.jsonl");
    let src = require(Some(&src), "detections file")?;
    let roi: RoiPolygon = match &args.roi {
        Some(p) => {
            let p = require(Some(p), "ROI file")?;
            let text = fs::read_to_string(&p).map_err(io_err(&p))?;
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig {
                field: "roi".into(),
                reason: e.to_string(),
            })?
        }
        None => cfg.roi_polygon()?,
    };
    let det = detector_overrides(cfg, args.confidence, args.nms_iou)?;
    let stream = load_detections(&src)?;
    let mut builder = CoverageSeriesBuilder::new(&roi, &det).grid_scale(args.grid_scale.unwrap_or(cfg.grid_scale));
    for rec in &stream {
        builder.push(rec)?;
    }
    let series = builder.finish();
    let path = out_path(cfg, "coverage.csv");
    write_coverage_csv(&path, &series, cfg.clock())?;
    let mean = if series.is_empty() {
        0.0
    } else {
        series.iter().map(|s| s.coverage).sum::<f64>() / series.len() as f64
    };
    Ok(Outcome {
        summary: format!("{} samples, mean coverage {mean:.4}", series.len()),
        outputs: vec![path],
    })
}

pub fn eval(cfg: &AppConfig, args: &EvalArgs) -> Result<Outcome> {
    let src = input_path(&args.detections, &cfg.paths.detections, cfg, "detections.jsonl");
    let src = require(Some(&src), "detections file")?;
    let labels = require(args.labels_dir.as_ref().or(cfg.paths.labels_dir.as_ref()), "labels directory")?;
    let det = detector_overrides(cfg, args.confidence, args.nms_iou)?;
    let ann = AnnotationSet::load_dir(&labels)?;
    let mut stream = load_detections(&src)?;
    if args.skip_unlabeled {
        let kept = stream.into_records().into_iter().filter(|r| ann.get(&r.frame_id).is_some()).collect();
        stream = DetectionStream::new(kept)?;
    }
    let report = evaluate(&stream, &ann, &det, cfg.frame_w, cfg.frame_h)?;
    let json_path = out_path(cfg, "eval.json");
    write_json(&json_path, &report)?;
    let table_path = out_path(cfg, "eval_table.txt");
    write_file(&table_path, &comparison_table(&report, &args.model_name))?;
    Ok(Outcome {
        summary: format!(
            "P {:.4}  R {:.4}  F1 {:.4}  mAP@50 {:.4}  frame accuracy {:.2}%  ({} frames, TP {} FP {} FN {})",
            report.precision,
            report.recall,
            report.f1,
            report.map50,
            report.accuracy.unwrap_or(0.0) * 100.0,
            report.frames,
            report.tp,
            report.fp,
            report.fn_
        ),
        outputs: vec![json_path, table_path],
    })
}

fn comparison_table(report: &EvalReport, model_name: &str) -> String {
    let mut rows = reference_models();
    rows.push(ModelRow::from_report(model_name, report));
    format!(
        "{}\nReference columns are published figures shown for comparison; the last column is computed.\n",
        render_table(&rows)
    )
}

pub fn profile_cmd(cfg: &AppConfig, args: &ProfileArgs) -> Result<Outcome> {
    let src = input_path(&args.coverage, &cfg.paths.coverage, cfg, "coverage.csv");
    let src = require(Some(&src), "coverage CSV")?;
    let series = read_coverage_csv(&src)?;
    let kinds: Vec<ProfileKind> = match args.kind.as_str() {
        "all" => ProfileKind::ALL.to_vec(),
        k => vec![k.parse()?],
    };
    let mut outputs = Vec::new();
    let mut summary = Vec::new();
    for kind in kinds {
        let p = profile(&series, kind, cfg.clock())?;
        let csv = out_path(cfg, &format!("profile_{}.csv", kind.name()));
        write_file(&csv, &p.to_csv())?;
        let json = out_path(cfg, &format!("profile_{}.json", kind.name()));
        write_json(&json, &p)?;
        outputs.extend([csv, json]);
        if let Some(peak) = p.argmax().and_then(|i| p.bin(i)) {
            summary.push(format!("{} peak {} ({:.4})", kind.name(), peak.key, peak.mean.unwrap_or(0.0)));
        }
    }
    Ok(Outcome {
        summary: summary.join("; "),
        outputs,
    })
}

pub fn events(cfg: &AppConfig, args: &EventsArgs) -> Result<Outcome> {
    let src = input_path(&args.coverage, &cfg.paths.coverage, cfg, "coverage.csv");
    let src = require(Some(&src), "coverage CSV")?;
    let mut params = cfg.events;
    if let Some(v) = args.drop_rel {
        params.drop_rel = v;
    }
    if let Some(v) = args.rise_abs {
        params.rise_abs = v;
    }
    if let Some(v) = args.clean_level {
        params.clean_level = v;
    }
    if let Some(v) = args.window {
        params.window = v;
    }
    params.validate()?;
    let series = read_coverage_csv(&src)?;
    let found = detect_events(&series, &params);
    let path = out_path(cfg, "events.jsonl");
    write_events_jsonl(&path, &found)?;
    let count = |k| found.iter().filter(|e| e.kind == k).count();
    Ok(Outcome {
        summary: format!(
            "dump {}, pile {}, clear {}",
            count(EventKind::Dump),
            count(EventKind::Pile),
            count(EventKind::Clear)
        ),
        outputs: vec![path],
    })
}

#[derive(Serialize)]
struct ExpectedMetrics {
    precision: f64,
    recall: f64,
    expected_gt_boxes: f64,
    frames: usize,
}

pub fn simulate(cfg: &AppConfig, args: &SimulateArgs, seed: Option<u64>, tz: Option<i32>) -> Result<Outcome> {
    let mut sc: ScenarioConfig = match &args.scenario {
        Some(p) => parse_toml(&require(Some(p), "scenario file")?)?,
        None => ScenarioConfig::default(),
    };
    if let Some(d) = args.days {
        sc.days = d;
    }
    if let Some(s) = seed {
        sc.seed = s;
    }
    if let Some(t) = tz {
        sc.tz_offset_minutes = t;
    }
    if let Some(sigma) = args.jitter_sigma {
        sc.noise.jitter_sigma = sigma;
    }
    match (args.precision, args.recall) {
        (Some(p), Some(r)) => sc = with_operating_point(sc, p, r)?,
        (None, None) => {}
        _ => return Err(Error::InvalidArgument("--precision and --recall go together".into())),
    }
    sc.validate()?;
    let (precision, recall) = expected_metrics(&sc)?;
    let out = generate(&sc)?;

    let dir = cfg.out_dir();
    out.write_to(&dir, sc.clock(), !args.no_frames)?;
    let scenario_path = dir.join("scenario.toml");
    let text = toml::to_string(&sc).map_err(|e| Error::InvalidConfig {
        field: "scenario".into(),
        reason: e.to_string(),
    })?;
    write_file(&scenario_path, &text)?;
    let expected_path = dir.join("expected_metrics.json");
    write_json(
        &expected_path,
        &ExpectedMetrics {
            precision,
            recall,
            expected_gt_boxes: expected_gt_boxes(&sc)?,
            frames: sc.frame_count(),
        },
    )?;

    let mut outputs: Vec<PathBuf> = Vec::new();
    if !args.no_frames {
        outputs.push(dir.join("frames"));
    }
    outputs.extend(
        ["labels", "detections.jsonl", "coverage_truth.csv", "events_truth.jsonl", "roi.json"]
            .iter()
            .map(|n| dir.join(n)),
    );
    outputs.extend([scenario_path, expected_path]);
    Ok(Outcome {
        summary: format!(
            "{} days, {} frames, {} ground-truth boxes, {} clear events; expected P {precision:.4} R {recall:.4}",
            sc.days,
            out.coverage.len(),
            out.total_gt_boxes(),
            out.clear_events()
        ),
        outputs,
    })
}

pub fn report(cfg: &AppConfig, args: &ReportArgs) -> Result<Outcome> {
    let dir = cfg.out_dir();
    let mut text = String::new();

    let eval_path = dir.join("eval.json");
    let run_row = if eval_path.exists() {
        let raw = fs::read_to_string(&eval_path).map_err(io_err(&eval_path))?;
        let report: EvalReport = serde_json::from_str(&raw).map_err(|e| Error::Parse {
            source_name: Some(eval_path.display().to_string()),
            line: e.line(),
            message: e.to_string(),
        })?;
        Some(report)
    } else {
        None
    };
    text.push_str("Detector comparison\n\n");
    match &run_row {
        Some(r) => text.push_str(&comparison_table(r, &args.model_name)),
        None => {
            text.push_str(&render_table(&reference_models()));
            text.push_str("\nReference columns are published figures; run `gvp eval` to add a computed column.\n");
        }
    }

    let cov_path = args
        .coverage
        .clone()
        .or_else(|| cfg.paths.coverage.clone())
        .unwrap_or_else(|| dir.join("coverage.csv"));
    if cov_path.exists() {
        let series = read_coverage_csv(&cov_path)?;
        let clock = cfg.clock();
        let hourly = profile(&series, ProfileKind::Hourly, clock)?;
        let weekday = profile(&series, ProfileKind::Weekday, clock)?;
        let daily = profile(&series, ProfileKind::Daily, clock)?;
        let off = cfg.tz_offset_minutes;
        let _ = writeln!(
            text,
            "\nCoverage ({} samples, local time UTC{}{:02}:{:02})\n",
            series.len(),
            if off < 0 { '-' } else { '+' },
            off.abs() / 60,
            off.abs() % 60
        );
        if let Some(peak) = hourly.argmax().and_then(|i| hourly.bin(i)) {
            let _ = writeln!(text, "  peak hour            {}  mean {:.4}", peak.key, peak.mean.unwrap_or(0.0));
        }
        for (label, range) in [("hours 00-02 mean", 0..3), ("hours 08-15 mean", 8..16), ("hours 15-23 mean", 15..24)] {
            if let Some(m) = hourly.mean_of(range) {
                let _ = writeln!(text, "  {label:<20} {m:.4}");
            }
        }
        if let Some(i) = weekday.argmax() {
            let _ = writeln!(text, "  busiest weekday      {}", WEEKDAY_NAMES[i as usize]);
        }
        let days = daily.bins.iter().filter(|b| b.count > 0).count();
        let _ = writeln!(text, "  days covered         {days}");

        let events_path = dir.join("events.jsonl");
        if events_path.exists() {
            let events = read_events_jsonl(&events_path)?;
            let mut counts: BTreeMap<EventKind, usize> = BTreeMap::new();
            for e in &events {
                *counts.entry(e.kind).or_default() += 1;
            }
            let get = |k| counts.get(&k).copied().unwrap_or(0);
            let _ = writeln!(
                text,
                "  events               dump {}, pile {}, clear {}",
                get(EventKind::Dump),
                get(EventKind::Pile),
                get(EventKind::Clear)
            );
        }
    }

    let path = dir.join("report.txt");
    write_file(&path, &text)?;
    Ok(Outcome {
        summary: text.trim_end().to_string(),
        outputs: vec![path],
    })
}
