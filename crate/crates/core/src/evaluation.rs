//! Detection-quality metrics: IoU-thresholded greedy matching, precision,
//! recall, F1, 101-point interpolated AP, mAP@50 and frame-level accuracy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::AnnotationSet;
use crate::detector::{postprocess, DetectionStream, DetectorConfig};
use crate::error::{Error, Result};
use crate::geometry::{iou, Detection, GroundTruthBox, WASTE};

pub const MAP50_IOU: f64 = 0.5;
/// Recall levels used by interpolated AP: 0.00, 0.01, ..., 1.00.
pub const AP_RECALL_POINTS: u32 = 101;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub detection: usize,
    pub ground_truth: usize,
    pub iou: f64,
}

/// Outcome of matching one frame's detections of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub matches: Vec<Match>,
    /// Detection indices without a ground truth (false positives).
    pub unmatched_detections: Vec<usize>,
    /// Ground-truth indices nobody claimed (false negatives).
    pub unmatched_ground_truths: Vec<usize>,
    pub iou_threshold: f64,
}

impl MatchResult {
    pub fn tp(&self) -> usize {
        self.matches.len()
    }

    pub fn fp(&self) -> usize {
        self.unmatched_detections.len()
    }

    pub fn fn_(&self) -> usize {
        self.unmatched_ground_truths.len()
    }

    pub fn is_tp(&self, detection: usize) -> bool {
        self.matches.iter().any(|m| m.detection == detection)
    }
}

/// Indices sorted by confidence descending, ties by index.
fn confidence_order(confidences: impl Iterator<Item = f64>) -> Vec<usize> {
    let conf: Vec<f64> = confidences.collect();
    let mut order: Vec<usize> = (0..conf.len()).collect();
    order.sort_by(|&a, &b| conf[b].total_cmp(&conf[a]).then(a.cmp(&b)));
    order
}

/// Greedy matching for one frame and one class. Each detection, highest
/// confidence first, claims the unclaimed ground truth it overlaps most
/// (lower index on ties) when that IoU reaches the threshold.
pub fn match_greedy(dets: &[Detection], gts: &[GroundTruthBox], iou_threshold: f64) -> MatchResult {
    let mut claimed = vec![false; gts.len()];
    let mut matches = Vec::new();
    let mut unmatched_detections = Vec::new();
    for d in confidence_order(dets.iter().map(|d| d.confidence)) {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if claimed[g] {
                continue;
            }
            let v = iou(&dets[d].bbox, &gt.bbox);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        match best {
            Some((g, v)) if v >= iou_threshold => {
                claimed[g] = true;
                matches.push(Match {
                    detection: d,
                    ground_truth: g,
                    iou: v,
                });
            }
            _ => unmatched_detections.push(d),
        }
    }
    let unmatched_ground_truths = (0..gts.len()).filter(|&g| !claimed[g]).collect();
    MatchResult {
        matches,
        unmatched_detections,
        unmatched_ground_truths,
        iou_threshold,
    }
}

/// Precision, recall and F1 from counts.
///
/// Empty denominators: precision is 1 when nothing was predicted and nothing
/// was missed, otherwise 0; recall is 1 when there was nothing to find.
pub fn precision_recall_f1(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else if fn_ == 0 {
        1.0
    } else {
        0.0
    };
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        1.0
    };
    (precision, recall, f1_score(precision, recall))
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Cumulative (recall, precision) points, one per scored detection in
/// confidence order.
pub fn pr_curve(scored: &[(f64, bool)], total_gt: usize) -> Vec<(f64, f64)> {
    let mut tp = 0usize;
    confidence_order(scored.iter().map(|s| s.0))
        .into_iter()
        .enumerate()
        .map(|(rank, i)| {
            if scored[i].1 {
                tp += 1;
            }
            let recall = if total_gt > 0 { tp as f64 / total_gt as f64 } else { 0.0 };
            (recall, tp as f64 / (rank + 1) as f64)
        })
        .collect()
}

/// 101-point interpolated average precision.
///
/// With no ground truth the result is 1 if nothing was detected and 0 otherwise.
pub fn average_precision(scored: &[(f64, bool)], total_gt: usize) -> f64 {
    if total_gt == 0 {
        return if scored.is_empty() { 1.0 } else { 0.0 };
    }
    // (true positives so far, precision) per rank; recall is compared in
    // integers so k/100 thresholds are exact.
    let mut tp = 0usize;
    let points: Vec<(usize, f64)> = confidence_order(scored.iter().map(|s| s.0))
        .into_iter()
        .enumerate()
        .map(|(rank, i)| {
            tp += usize::from(scored[i].1);
            (tp, tp as f64 / (rank + 1) as f64)
        })
        .collect();

    // Running max of precision from the right gives the interpolated envelope.
    let mut envelope = vec![0.0f64; points.len()];
    let mut best = 0.0f64;
    for (i, &(_, p)) in points.iter().enumerate().rev() {
        best = best.max(p);
        envelope[i] = best;
    }
    let mut sum = 0.0;
    let mut cursor = 0usize;
    for k in 0..AP_RECALL_POINTS as usize {
        // First rank whose recall reaches k/100; recall is non-decreasing in rank.
        while cursor < points.len() && points[cursor].0 * 100 < k * total_gt {
            cursor += 1;
        }
        if cursor < points.len() {
            sum += envelope[cursor];
        }
    }
    sum / f64::from(AP_RECALL_POINTS)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub gt_count: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub ap: f64,
    pub pr_curve: Vec<(f64, f64)>,
}

/// Frame-level waste presence confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameConfusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl FrameConfusion {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            1.0
        } else {
            (self.tp + self.tn) as f64 / self.total() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_threshold: f64,
    pub frames: usize,
    pub per_class: BTreeMap<u32, ClassMetrics>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Mean AP over classes with at least one ground-truth box.
    pub map50: f64,
    /// Frame-level waste presence accuracy; absent until computed.
    pub accuracy: Option<f64>,
    pub frame_confusion: Option<FrameConfusion>,
}

fn frame_ground_truth(
    stream: &DetectionStream,
    ann: &AnnotationSet,
    frame_w: f64,
    frame_h: f64,
) -> Result<Vec<Vec<GroundTruthBox>>> {
    let missing: Vec<String> = stream
        .iter()
        .filter(|r| ann.get(&r.frame_id).is_none())
        .map(|r| r.frame_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingAnnotations(missing));
    }
    stream
        .iter()
        .map(|r| ann.ground_truth(&r.frame_id, frame_w, frame_h).expect("checked above"))
        .collect()
}

/// Match every frame per class at IoU 0.5 and pool the results.
///
/// Detections are used as given; apply [`postprocess`] first to evaluate at
/// an operating threshold.
pub fn map50(stream: &DetectionStream, ann: &AnnotationSet, frame_w: f64, frame_h: f64) -> Result<EvalReport> {
    evaluate_at(stream, ann, frame_w, frame_h, MAP50_IOU)
}

pub fn evaluate_at(
    stream: &DetectionStream,
    ann: &AnnotationSet,
    frame_w: f64,
    frame_h: f64,
    iou_threshold: f64,
) -> Result<EvalReport> {
    let gts = frame_ground_truth(stream, ann, frame_w, frame_h)?;

    #[derive(Default)]
    struct Pool {
        scored: Vec<(f64, bool)>,
        tp: usize,
        fp: usize,
        fn_: usize,
        gt: usize,
    }
    let mut pools: BTreeMap<u32, Pool> = BTreeMap::new();
    for (rec, frame_gts) in stream.iter().zip(&gts) {
        let classes: BTreeSet<u32> = rec
            .detections
            .iter()
            .map(|d| d.class_id)
            .chain(frame_gts.iter().map(|g| g.class_id))
            .collect();
        for class in classes {
            let dets: Vec<Detection> = rec.detections.iter().filter(|d| d.class_id == class).copied().collect();
            let cls_gts: Vec<GroundTruthBox> = frame_gts.iter().filter(|g| g.class_id == class).copied().collect();
            let m = match_greedy(&dets, &cls_gts, iou_threshold);
            let pool = pools.entry(class).or_default();
            pool.tp += m.tp();
            pool.fp += m.fp();
            pool.fn_ += m.fn_();
            pool.gt += cls_gts.len();
            pool.scored
                .extend(dets.iter().enumerate().map(|(i, d)| (d.confidence, m.is_tp(i))));
        }
    }

    let mut report = EvalReport {
        iou_threshold,
        frames: stream.len(),
        ..Default::default()
    };
    let mut ap_sum = 0.0;
    let mut ap_classes = 0usize;
    for (class, pool) in pools {
        let (precision, recall, f1) = precision_recall_f1(pool.tp, pool.fp, pool.fn_);
        let ap = average_precision(&pool.scored, pool.gt);
        if pool.gt > 0 {
            ap_sum += ap;
            ap_classes += 1;
        }
        report.tp += pool.tp;
        report.fp += pool.fp;
        report.fn_ += pool.fn_;
        report.per_class.insert(
            class,
            ClassMetrics {
                tp: pool.tp,
                fp: pool.fp,
                fn_: pool.fn_,
                gt_count: pool.gt,
                precision,
                recall,
                f1,
                ap,
                pr_curve: pr_curve(&pool.scored, pool.gt),
            },
        );
    }
    let (precision, recall, f1) = precision_recall_f1(report.tp, report.fp, report.fn_);
    report.precision = precision;
    report.recall = recall;
    report.f1 = f1;
    report.map50 = if ap_classes > 0 {
        ap_sum / ap_classes as f64
    } else if report.fp == 0 {
        1.0
    } else {
        0.0
    };
    Ok(report)
}

/// Waste present / absent per frame. A frame is predicted positive when at
/// least one waste detection survives filtering and NMS.
pub fn frame_confusion(
    stream: &DetectionStream,
    ann: &AnnotationSet,
    cfg: &DetectorConfig,
) -> Result<FrameConfusion> {
    let missing: Vec<String> = stream
        .iter()
        .filter(|r| ann.get(&r.frame_id).is_none())
        .map(|r| r.frame_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingAnnotations(missing));
    }
    let mut c = FrameConfusion::default();
    for rec in stream {
        let actual = ann
            .get(&rec.frame_id)
            .is_some_and(|labels| labels.iter().any(|l| l.class_id == WASTE));
        let predicted = postprocess(&rec.detections, cfg).iter().any(|d| d.class_id == WASTE);
        match (predicted, actual) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

pub fn frame_accuracy(stream: &DetectionStream, ann: &AnnotationSet, cfg: &DetectorConfig) -> Result<f64> {
    frame_confusion(stream, ann, cfg).map(|c| c.accuracy())
}

/// Box metrics at IoU 0.5 on the raw stream plus frame accuracy at `cfg`.
pub fn evaluate(
    stream: &DetectionStream,
    ann: &AnnotationSet,
    cfg: &DetectorConfig,
    frame_w: f64,
    frame_h: f64,
) -> Result<EvalReport> {
    let mut report = map50(stream, ann, frame_w, frame_h)?;
    let confusion = frame_confusion(stream, ann, cfg)?;
    report.accuracy = Some(confusion.accuracy());
    report.frame_confusion = Some(confusion);
    Ok(report)
}

/// One column of a model comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub model: String,
    pub size_mb: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub map50: f64,
    /// Percent.
    pub accuracy: Option<f64>,
}

impl ModelRow {
    pub fn from_report(model: impl Into<String>, report: &EvalReport) -> Self {
        Self {
            model: model.into(),
            size_mb: None,
            precision: report.precision,
            recall: report.recall,
            f1: report.f1,
            map50: report.map50,
            accuracy: report.accuracy.map(|a| a * 100.0),
        }
    }
}

/// Published comparison of four detectors on the private GVP dataset.
/// Display-only: these cannot be recomputed without the trained weights.
pub fn reference_models() -> Vec<ModelRow> {
    let row = |model: &str, size, p, r, f1, map, acc| ModelRow {
        model: model.into(),
        size_mb: Some(size),
        precision: p,
        recall: r,
        f1,
        map50: map,
        accuracy: Some(acc),
    };
    vec![
        row("YOLOv8m", 102.0, 0.91, 0.84, 0.87, 0.87, 82.63),
        row("YOLOv10m", 88.0, 0.89, 0.81, 0.84, 0.86, 86.34),
        row("RT-DETR", 66.0, 0.82, 0.79, 0.80, 0.84, 84.24),
        row("YOLO11m", 74.0, 0.94, 0.84, 0.88, 0.91, 92.39),
    ]
}

/// Aligned text table with one metric per row and one model per column.
pub fn render_table(rows: &[ModelRow]) -> String {
    let fmt2 = |v: f64| format!("{v:.2}");
    let mut lines: Vec<(String, Vec<String>)> = vec![("Metric".into(), rows.iter().map(|r| r.model.clone()).collect())];
    if rows.iter().any(|r| r.size_mb.is_some()) {
        lines.push((
            "Model Size".into(),
            rows.iter()
                .map(|r| r.size_mb.map_or("-".into(), |s| format!("{s:.0} MB")))
                .collect(),
        ));
    }
    lines.push(("Precision".into(), rows.iter().map(|r| fmt2(r.precision)).collect()));
    lines.push(("Recall".into(), rows.iter().map(|r| fmt2(r.recall)).collect()));
    lines.push(("F1-Score".into(), rows.iter().map(|r| fmt2(r.f1)).collect()));
    lines.push(("mAP@50".into(), rows.iter().map(|r| fmt2(r.map50)).collect()));
    lines.push((
        "Accuracy (frame)".into(),
        rows.iter()
            .map(|r| r.accuracy.map_or("-".into(), |a| format!("{a:.2}%")))
            .collect(),
    ));

    let label_w = lines.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let col_w: Vec<usize> = (0..rows.len())
        .map(|c| lines.iter().map(|(_, cells)| cells[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, (label, cells)) in lines.iter().enumerate() {
        let _ = write!(out, "{label:<label_w$}");
        for (cell, w) in cells.iter().zip(&col_w) {
            let _ = write!(out, "  {cell:>w$}");
        }
        out.push('\n');
        if i == 0 {
            let width = label_w + col_w.iter().map(|w| w + 2).sum::<usize>();
            out.push_str(&"-".repeat(width));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LabelBox;
    use crate::geometry::{pixel_to_norm, BBox, FrameRecord};

    fn det(x: f64, y: f64, w: f64, h: f64, conf: f64) -> Detection {
        Detection::new(BBox::new(x, y, w, h), conf, WASTE)
    }

    fn gt(x: f64, y: f64, w: f64, h: f64) -> GroundTruthBox {
        GroundTruthBox::new(BBox::new(x, y, w, h), WASTE)
    }

    #[test]
    fn match_examples() {
        let m = match_greedy(&[det(0.0, 0.0, 10.0, 10.0, 0.9)], &[gt(0.0, 0.0, 10.0, 10.0)], 0.5);
        assert_eq!((m.tp(), m.fp(), m.fn_()), (1, 0, 0));
        let m = match_greedy(&[det(0.0, 0.0, 10.0, 10.0, 0.9)], &[], 0.5);
        assert_eq!((m.tp(), m.fp(), m.fn_()), (0, 1, 0));

        // Against a 10x10 GT: A (conf 0.9) shifted 2.5 px has IoU 75/125 = 0.6,
        // B (conf 0.8) is a 10x7 box inside it with IoU 0.7.
        let a = det(2.5, 0.0, 10.0, 10.0, 0.9);
        let b = det(0.0, 0.0, 10.0, 7.0, 0.8);
        let g = gt(0.0, 0.0, 10.0, 10.0);
        assert!((iou(&a.bbox, &g.bbox) - 0.6).abs() < 1e-12);
        assert!((iou(&b.bbox, &g.bbox) - 0.7).abs() < 1e-12);
        let m = match_greedy(&[b, a], &[g], 0.5);
        assert_eq!(m.matches.len(), 1);
        assert_eq!(m.matches[0].detection, 1);
        assert_eq!(m.unmatched_detections, vec![0]);
    }

    #[test]
    fn iou_ties_go_to_lower_gt_index() {
        let g0 = gt(0.0, 0.0, 10.0, 10.0);
        let g1 = gt(0.0, 0.0, 10.0, 10.0);
        let m = match_greedy(&[det(0.0, 0.0, 10.0, 10.0, 0.5)], &[g0, g1], 0.5);
        assert_eq!(m.matches[0].ground_truth, 0);
        assert_eq!(m.unmatched_ground_truths, vec![1]);
    }

    #[test]
    fn prf_examples() {
        let (p, r, f) = precision_recall_f1(2, 1, 1);
        assert!((p - 2.0 / 3.0).abs() < 1e-12 && (r - 2.0 / 3.0).abs() < 1e-12 && (f - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(precision_recall_f1(0, 0, 0), (1.0, 1.0, 1.0));
        assert_eq!(precision_recall_f1(0, 0, 3), (0.0, 0.0, 0.0));
        assert_eq!(precision_recall_f1(0, 3, 0), (0.0, 1.0, 0.0));
        assert!((f1_score(0.94, 0.84) - 0.887_191).abs() < 1e-6);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[(0.9, true)], 1), 1.0);
        assert_eq!(average_precision(&[(0.9, false)], 1), 0.0);
        assert_eq!(average_precision(&[], 0), 1.0);
        assert_eq!(average_precision(&[(0.3, false)], 0), 0.0);
        assert_eq!(average_precision(&[], 4), 0.0);
        // Staircase: ranks give (R,P) = (0.5,1), (0.5,0.5), (1,2/3). Levels 0..=50 see
        // envelope 1, levels 51..=100 see 2/3: (51 + 50*2/3) / 101.
        let ap = average_precision(&[(0.9, true), (0.8, false), (0.7, true)], 2);
        assert!((ap - (51.0 + 50.0 * 2.0 / 3.0) / 101.0).abs() < 1e-12, "{ap}");
    }

    #[test]
    fn ap_ties_keep_input_order() {
        let a = average_precision(&[(0.5, false), (0.5, true)], 1);
        let b = average_precision(&[(0.5, true), (0.5, false)], 1);
        assert_eq!(b, 1.0);
        assert!((a - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reference_rows_are_f1_consistent() {
        for row in reference_models() {
            let f1 = f1_score(row.precision, row.recall);
            assert!((f1 - row.f1).abs() <= 0.01, "{}: {f1} vs {}", row.model, row.f1);
        }
    }

    fn stream_and_ann(n: usize, with_dets: bool) -> (DetectionStream, AnnotationSet) {
        let mut ann = AnnotationSet::with_default_classes();
        let mut recs = Vec::new();
        for i in 0..n {
            let b = BBox::new(10.0 * i as f64, 20.0, 40.0, 30.0);
            let id = format!("f{i}");
            ann.insert(id.clone(), vec![LabelBox::new(WASTE, pixel_to_norm(&b, 700.0, 395.0).unwrap())])
                .unwrap();
            recs.push(FrameRecord {
                frame_id: id,
                timestamp: i as i64,
                detections: if with_dets { vec![Detection::new(b, 0.9, WASTE)] } else { vec![] },
            });
        }
        (DetectionStream::new(recs).unwrap(), ann)
    }

    #[test]
    fn map50_examples() {
        let cfg = DetectorConfig::default();
        let (s, ann) = stream_and_ann(10, true);
        let r = evaluate(&s, &ann, &cfg, 700.0, 395.0).unwrap();
        assert!((r.map50 - 1.0).abs() < 1e-12);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        assert_eq!(r.accuracy, Some(1.0));

        let (s, ann) = stream_and_ann(10, false);
        let r = evaluate(&s, &ann, &cfg, 700.0, 395.0).unwrap();
        assert_eq!((r.map50, r.recall), (0.0, 0.0));
        assert_eq!(r.accuracy, Some(0.0));

        let (s, mut ann) = stream_and_ann(3, true);
        ann.labels.remove("f1");
        match map50(&s, &ann, 700.0, 395.0) {
            Err(Error::MissingAnnotations(ids)) => assert_eq!(ids, vec!["f1".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn half_misclassified_frames() {
        let (full, ann) = stream_and_ann(10, true);
        let recs: Vec<FrameRecord> = full
            .iter()
            .enumerate()
            .map(|(i, r)| FrameRecord {
                detections: if i % 2 == 0 { r.detections.clone() } else { vec![] },
                ..r.clone()
            })
            .collect();
        let s = DetectionStream::new(recs).unwrap();
        assert_eq!(frame_accuracy(&s, &ann, &DetectorConfig::default()).unwrap(), 0.5);
    }

    #[test]
    fn table_renders_all_rows() {
        let t = render_table(&reference_models());
        for label in ["Precision", "Recall", "F1-Score", "mAP@50", "Accuracy", "YOLO11m", "92.39%"] {
            assert!(t.contains(label), "missing {label}\n{t}");
        }
        let widths: BTreeSet<usize> = t.lines().filter(|l| !l.starts_with('-')).map(str::len).collect();
        assert_eq!(widths.len(), 1, "{t}");
    }
}
