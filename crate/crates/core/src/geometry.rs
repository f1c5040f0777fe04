//! Box and region-of-interest geometry.
//!
//! Boxes are axis-aligned, top-left origin with `y` growing downward. For
//! area computations a box covers the half-open region
//! `[x, x + w) × [y, y + h)`, so boxes that only share an edge never
//! double count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class id used for waste objects.
pub const WASTE: u32 = 0;
/// Class id used for anything annotated as not being waste.
pub const NON_WASTE: u32 = 1;

/// Slack allowed on normalized coordinates before they count as out of range.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Corner-format box in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.w > 0.0 && self.h > 0.0)
    }

    /// Overlap of two boxes; zero-sized (but positioned inside `self`'s span) when disjoint.
    pub fn intersect(&self, other: &BBox) -> BBox {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        BBox {
            x: x0,
            y: y0,
            w: (x1 - x0).max(0.0),
            h: (y1 - y0).max(0.0),
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }
}

/// YOLO-style center-format box, every field a fraction of the frame size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl NormBox {
    pub const fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self { cx, cy, w, h }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, value) in [("cx", self.cx), ("cy", self.cy), ("w", self.w), ("h", self.h)] {
            if !value.is_finite() || !(-NORM_TOLERANCE..=1.0 + NORM_TOLERANCE).contains(&value) {
                return Err(Error::OutOfRange { field, value });
            }
        }
        Ok(())
    }

    /// Mirror around the vertical center line of the frame.
    pub fn flip_h(&self) -> NormBox {
        NormBox {
            cx: 1.0 - self.cx,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub confidence: f64,
    pub class_id: u32,
}

impl Detection {
    pub fn new(bbox: BBox, confidence: f64, class_id: u32) -> Self {
        Self {
            bbox,
            confidence,
            class_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub class_id: u32,
}

impl GroundTruthBox {
    pub fn new(bbox: BBox, class_id: u32) -> Self {
        Self { bbox, class_id }
    }
}

/// A timestamped frame with the detections produced for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_id: String,
    /// UTC seconds.
    pub timestamp: i64,
    pub detections: Vec<Detection>,
}

/// Region of interest: a simple polygon inside the frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRoi", into = "RawRoi")]
pub struct RoiPolygon {
    vertices: Vec<(f64, f64)>,
    frame_w: f64,
    frame_h: f64,
}

#[derive(Serialize, Deserialize)]
struct RawRoi {
    vertices: Vec<(f64, f64)>,
    frame_w: f64,
    frame_h: f64,
}

impl TryFrom<RawRoi> for RoiPolygon {
    type Error = Error;

    fn try_from(raw: RawRoi) -> Result<Self> {
        RoiPolygon::new(raw.vertices, raw.frame_w, raw.frame_h)
    }
}

impl From<RoiPolygon> for RawRoi {
    fn from(roi: RoiPolygon) -> Self {
        RawRoi {
            vertices: roi.vertices,
            frame_w: roi.frame_w,
            frame_h: roi.frame_h,
        }
    }
}

impl RoiPolygon {
    pub fn new(vertices: Vec<(f64, f64)>, frame_w: f64, frame_h: f64) -> Result<Self> {
        if !(frame_w > 0.0 && frame_h > 0.0) {
            return Err(Error::InvalidRoi(format!(
                "frame dimensions must be positive, got {frame_w}x{frame_h}"
            )));
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidRoi(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        for &(x, y) in &vertices {
            if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 || x > frame_w || y > frame_h {
                return Err(Error::InvalidRoi(format!(
                    "vertex ({x}, {y}) lies outside the {frame_w}x{frame_h} frame"
                )));
            }
        }
        if !is_simple(&vertices) {
            return Err(Error::InvalidRoi("polygon edges self-intersect".into()));
        }
        let roi = Self {
            vertices,
            frame_w,
            frame_h,
        };
        if roi.area() <= 0.0 {
            return Err(Error::ZeroRoiArea);
        }
        Ok(roi)
    }

    /// Axis-aligned rectangular ROI.
    pub fn rect(rect: BBox, frame_w: f64, frame_h: f64) -> Result<Self> {
        Self::new(
            vec![
                (rect.x, rect.y),
                (rect.right(), rect.y),
                (rect.right(), rect.bottom()),
                (rect.x, rect.bottom()),
            ],
            frame_w,
            frame_h,
        )
    }

    pub fn full_frame(frame_w: f64, frame_h: f64) -> Result<Self> {
        Self::rect(BBox::new(0.0, 0.0, frame_w, frame_h), frame_w, frame_h)
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn frame_w(&self) -> f64 {
        self.frame_w
    }

    pub fn frame_h(&self) -> f64 {
        self.frame_h
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let (x0, y0) = self.vertices[i];
                let (x1, y1) = self.vertices[(i + 1) % n];
                x0 * y1 - x1 * y0
            })
            .sum();
        twice.abs() / 2.0
    }

    pub fn bounding_box(&self) -> BBox {
        let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
        let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &self.vertices {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        BBox::new(x0, y0, x1 - x0, y1 - y0)
    }

    /// The ROI as a box when it is an axis-aligned rectangle.
    pub fn as_rect(&self) -> Option<BBox> {
        if self.vertices.len() != 4 {
            return None;
        }
        let n = self.vertices.len();
        let axis_aligned = (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            a.0 == b.0 || a.1 == b.1
        });
        if !axis_aligned {
            return None;
        }
        let bb = self.bounding_box();
        (bb.area() == self.area()).then_some(bb)
    }

    /// Even-odd point test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let (xa, ya) = self.vertices[i];
            let (xb, yb) = self.vertices[(i + 1) % n];
            if (ya > y) != (yb > y) {
                let xc = xa + (y - ya) * (xb - xa) / (yb - ya);
                if x < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Sorted x-intervals where the horizontal line at `y` is inside the polygon.
    fn row_spans(&self, y: f64) -> Vec<(f64, f64)> {
        let n = self.vertices.len();
        let mut xs: Vec<f64> = (0..n)
            .filter_map(|i| {
                let (xa, ya) = self.vertices[i];
                let (xb, yb) = self.vertices[(i + 1) % n];
                ((ya > y) != (yb > y)).then(|| xa + (y - ya) * (xb - xa) / (yb - ya))
            })
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.chunks_exact(2).map(|c| (c[0], c[1])).collect()
    }
}

fn orientation(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> f64 {
    (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)
}

fn on_segment(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> bool {
    r.0 >= p.0.min(q.0) && r.0 <= p.0.max(q.0) && r.1 >= p.1.min(q.1) && r.1 <= p.1.max(q.1)
}

fn segments_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let o1 = orientation(a, b, c);
    let o2 = orientation(a, b, d);
    let o3 = orientation(c, d, a);
    let o4 = orientation(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

fn is_simple(v: &[(f64, f64)]) -> bool {
    let n = v.len();
    for i in 0..n {
        if v[i] == v[(i + 1) % n] {
            return false;
        }
    }
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Neighbouring edges share a vertex; they only conflict when they fold back.
                let (shared, other_a, other_b) = if j == i + 1 {
                    (b, a, v[(j + 1) % n])
                } else {
                    (a, b, v[j])
                };
                if orientation(other_a, shared, other_b) == 0.0 {
                    let dot = (other_a.0 - shared.0) * (other_b.0 - shared.0)
                        + (other_a.1 - shared.1) * (other_b.1 - shared.1);
                    if dot > 0.0 {
                        return false;
                    }
                }
                continue;
            }
            if segments_intersect(a, b, v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Intersection over union; zero when the union has no area.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    // Areas from edge differences, the same way the intersection is formed,
    // so identical boxes give exactly 1.
    let span = |b: &BBox| (b.right() - b.x).max(0.0) * (b.bottom() - b.y).max(0.0);
    let i = a.intersect(b);
    let inter = i.w * i.h;
    let union = span(a) + span(b) - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

pub fn clip_box(b: &BBox, frame_w: f64, frame_h: f64) -> BBox {
    let x0 = b.x.clamp(0.0, frame_w);
    let y0 = b.y.clamp(0.0, frame_h);
    let x1 = b.right().clamp(0.0, frame_w);
    let y1 = b.bottom().clamp(0.0, frame_h);
    BBox::new(x0, y0, (x1 - x0).max(0.0), (y1 - y0).max(0.0))
}

/// Merged length of a set of half-open intervals. Sorts in place.
fn merged_length(spans: &mut [(f64, f64)]) -> f64 {
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for &(lo, hi) in spans.iter() {
        match current {
            Some((cl, ch)) if lo <= ch => current = Some((cl, ch.max(hi))),
            Some((cl, ch)) => {
                total += ch - cl;
                current = Some((lo, hi));
            }
            None => current = Some((lo, hi)),
        }
    }
    if let Some((cl, ch)) = current {
        total += ch - cl;
    }
    total
}

/// Exact area of a union of boxes by coordinate-compression sweep over x.
pub fn union_area(boxes: &[BBox]) -> f64 {
    let live: Vec<&BBox> = boxes.iter().filter(|b| !b.is_degenerate()).collect();
    if live.is_empty() {
        return 0.0;
    }
    let mut xs: Vec<f64> = live.iter().flat_map(|b| [b.x, b.right()]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut spans = Vec::with_capacity(live.len());
    let mut area = 0.0;
    for strip in xs.windows(2) {
        let (x0, x1) = (strip[0], strip[1]);
        spans.clear();
        spans.extend(
            live.iter()
                .filter(|b| b.x <= x0 && b.right() >= x1)
                .map(|b| (b.y, b.bottom())),
        );
        if !spans.is_empty() {
            area += (x1 - x0) * merged_length(&mut spans);
        }
    }
    area
}

/// Default raster resolution for non-rectangular ROIs: one cell per pixel.
pub const DEFAULT_GRID_SCALE: u32 = 1;

/// Fraction of the ROI covered by the union of `boxes`.
///
/// Rectangular ROIs are handled exactly. Any other polygon is rasterized at
/// `grid_scale` cells per pixel per axis; a cell belongs to a shape when its
/// center does.
pub fn coverage_fraction(boxes: &[BBox], roi: &RoiPolygon, grid_scale: u32) -> Result<f64> {
    if grid_scale == 0 {
        return Err(Error::InvalidArgument("grid_scale must be at least 1".into()));
    }
    if let Some(rect) = roi.as_rect() {
        let roi_area = rect.area();
        if roi_area <= 0.0 {
            return Err(Error::ZeroRoiArea);
        }
        let clipped: Vec<BBox> = boxes.iter().map(|b| b.intersect(&rect)).collect();
        return Ok((union_area(&clipped) / roi_area).clamp(0.0, 1.0));
    }
    raster_coverage(boxes, roi, grid_scale)
}

/// Cell index range `[lo, hi)` whose centers fall in `[a, b)`.
fn cell_range(a: f64, b: f64, scale: f64) -> (i64, i64) {
    let lo = (a * scale - 0.5).ceil() as i64;
    let hi = (b * scale - 0.5).ceil() as i64;
    (lo, hi.max(lo))
}

fn raster_coverage(boxes: &[BBox], roi: &RoiPolygon, grid_scale: u32) -> Result<f64> {
    let scale = f64::from(grid_scale);
    let bb = roi.bounding_box();
    let (row_lo, row_hi) = cell_range(bb.y, bb.bottom(), scale);
    let mut roi_cells: i64 = 0;
    let mut covered: i64 = 0;
    let mut box_ranges: Vec<(i64, i64)> = Vec::new();
    for row in row_lo..row_hi {
        let yc = (row as f64 + 0.5) / scale;
        let roi_ranges: Vec<(i64, i64)> = roi
            .row_spans(yc)
            .into_iter()
            .map(|(a, b)| cell_range(a, b, scale))
            .collect();
        roi_cells += roi_ranges.iter().map(|(lo, hi)| hi - lo).sum::<i64>();

        box_ranges.clear();
        box_ranges.extend(
            boxes
                .iter()
                .filter(|b| !b.is_degenerate() && b.y <= yc && yc < b.bottom())
                .map(|b| cell_range(b.x, b.right(), scale))
                .filter(|(lo, hi)| hi > lo),
        );
        box_ranges.sort_unstable();
        let mut merged: Vec<(i64, i64)> = Vec::with_capacity(box_ranges.len());
        for &(lo, hi) in &box_ranges {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        for &(rl, rh) in &roi_ranges {
            for &(ml, mh) in &merged {
                let lo = rl.max(ml);
                let hi = rh.min(mh);
                if hi > lo {
                    covered += hi - lo;
                }
            }
        }
    }
    if roi_cells == 0 {
        return Err(Error::ZeroRoiArea);
    }
    Ok(covered as f64 / roi_cells as f64)
}

fn check_frame(frame_w: f64, frame_h: f64) -> Result<()> {
    if frame_w > 0.0 && frame_h > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "frame dimensions must be positive, got {frame_w}x{frame_h}"
        )))
    }
}

pub fn norm_to_pixel(n: &NormBox, frame_w: f64, frame_h: f64) -> Result<BBox> {
    check_frame(frame_w, frame_h)?;
    n.validate()?;
    let w = n.w * frame_w;
    let h = n.h * frame_h;
    Ok(BBox::new(n.cx * frame_w - w / 2.0, n.cy * frame_h - h / 2.0, w, h))
}

pub fn pixel_to_norm(b: &BBox, frame_w: f64, frame_h: f64) -> Result<NormBox> {
    check_frame(frame_w, frame_h)?;
    let n = NormBox::new(
        (b.x + b.w / 2.0) / frame_w,
        (b.y + b.h / 2.0) / frame_h,
        b.w / frame_w,
        b.h / frame_h,
    );
    n.validate()?;
    Ok(n)
}
