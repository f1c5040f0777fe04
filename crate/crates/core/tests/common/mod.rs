//! Brute-force reference implementations used by the property tests.
#![allow(dead_code)]

use gvp_core::{BBox, Detection, GroundTruthBox};
use proptest::prelude::*;

/// Pixel count of the union of integer boxes, by painting a grid.
pub fn raster_union(boxes: &[BBox], frame_w: usize, frame_h: usize) -> usize {
    let mut grid = vec![false; frame_w * frame_h];
    for b in boxes {
        let x0 = (b.x.max(0.0) as usize).min(frame_w);
        let y0 = (b.y.max(0.0) as usize).min(frame_h);
        let x1 = ((b.x + b.w).max(0.0) as usize).min(frame_w);
        let y1 = ((b.y + b.h).max(0.0) as usize).min(frame_h);
        for y in y0..y1 {
            grid[y * frame_w + x0..y * frame_w + x1].fill(true);
        }
    }
    grid.iter().filter(|&&c| c).count()
}

fn overlap_1d(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

pub fn iou_ref(a: &BBox, b: &BBox) -> f64 {
    let inter = overlap_1d(a.x, a.x + a.w, b.x, b.x + b.w) * overlap_1d(a.y, a.y + a.h, b.y, b.y + b.h);
    let union = a.w * a.h + b.w * b.h - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Reference greedy matcher: repeatedly pick the highest-confidence
/// unprocessed detection (earliest on ties) and give it the best free GT.
/// Returns TP flags per detection.
pub fn greedy_ref(dets: &[Detection], gts: &[GroundTruthBox], thr: f64) -> Vec<bool> {
    let mut done = vec![false; dets.len()];
    let mut taken = vec![false; gts.len()];
    let mut hit = vec![false; dets.len()];
    for _ in 0..dets.len() {
        let mut pick = usize::MAX;
        for i in 0..dets.len() {
            if !done[i] && (pick == usize::MAX || dets[i].confidence > dets[pick].confidence) {
                pick = i;
            }
        }
        done[pick] = true;
        let mut best = (usize::MAX, -1.0);
        for (g, gt) in gts.iter().enumerate() {
            let v = iou_ref(&dets[pick].bbox, &gt.bbox);
            if !taken[g] && v > best.1 {
                best = (g, v);
            }
        }
        if best.0 != usize::MAX && best.1 >= thr {
            taken[best.0] = true;
            hit[pick] = true;
        }
    }
    hit
}

/// 101-point interpolated AP written as the textbook staircase: for each
/// recall level, the best precision at any rank reaching that recall.
pub fn ap_ref(scored: &[(f64, bool)], total_gt: usize) -> f64 {
    if total_gt == 0 {
        return if scored.is_empty() { 1.0 } else { 0.0 };
    }
    let mut ranked: Vec<(usize, f64, bool)> = scored.iter().enumerate().map(|(i, s)| (i, s.0, s.1)).collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut pr = Vec::new();
    let mut tp = 0;
    for (rank, r) in ranked.iter().enumerate() {
        if r.2 {
            tp += 1;
        }
        pr.push((tp as f64 / total_gt as f64, tp as f64 / (rank + 1) as f64));
    }
    let mut sum = 0.0;
    for k in 0..=100 {
        let level = k as f64 / 100.0;
        let best = pr
            .iter()
            .filter(|(r, _)| *r >= level - 1e-12)
            .map(|(_, p)| *p)
            .fold(0.0, f64::max);
        sum += best;
    }
    sum / 101.0
}

pub fn int_box(frame_w: u32, frame_h: u32) -> impl Strategy<Value = BBox> {
    (0..frame_w, 0..frame_h, 0u32..200, 0u32..150).prop_map(move |(x, y, w, h)| {
        let w = w.min(frame_w - x);
        let h = h.min(frame_h - y);
        BBox::new(x as f64, y as f64, w as f64, h as f64)
    })
}

pub fn small_box() -> impl Strategy<Value = BBox> {
    (0.0..80.0f64, 0.0..80.0f64, 5.0..40.0f64, 5.0..40.0f64).prop_map(|(x, y, w, h)| BBox::new(x, y, w, h))
}

/// A small matching instance: boxes packed into a 120 px square so IoUs
/// span the whole range.
pub fn instance() -> impl Strategy<Value = (Vec<Detection>, Vec<GroundTruthBox>)> {
    (
        prop::collection::vec((small_box(), 0.0..1.0f64), 0..=6),
        prop::collection::vec(small_box(), 0..=6),
    )
        .prop_map(|(dets, gts)| {
            (
                dets.into_iter().map(|(b, c)| Detection::new(b, c, 0)).collect(),
                gts.into_iter().map(|b| GroundTruthBox::new(b, 0)).collect(),
            )
        })
}
