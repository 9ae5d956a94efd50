//! Seafloor heightfields, survey regions and depth ranges.
//!
//! Depths are positive down from the water surface, where the sonar head sits.
//! Nodes are stored row-major with `y` increasing from row to row.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Point2};

/// Regular grid of seafloor depths.
#[derive(Debug, Clone, PartialEq)]
pub struct Heightfield {
    origin: Point2,
    cell_size: f64,
    nx: usize,
    ny: usize,
    depths: Vec<f64>,
}

impl Heightfield {
    pub fn new(origin: Point2, cell_size: f64, nx: usize, ny: usize, depths: Vec<f64>) -> Result<Self> {
        let hf = Self::new_unchecked_depths(origin, cell_size, nx, ny, depths)?;
        if let Some(k) = hf.depths.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::param(format!(
                "depth at node ({}, {}) is {}; depths must be finite and positive",
                k % nx,
                k / nx,
                hf.depths[k]
            )));
        }
        Ok(hf)
    }

    // Shape checks only; NaN marks NODATA nodes that lie away from the ROI.
    fn new_unchecked_depths(origin: Point2, cell_size: f64, nx: usize, ny: usize, depths: Vec<f64>) -> Result<Self> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::param(format!("cell size must be positive, got {cell_size}")));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::param(format!(
                "heightfield needs at least 2x2 nodes, got {nx}x{ny}"
            )));
        }
        if depths.len() != nx * ny {
            return Err(Error::param(format!(
                "depth array has {} values, expected {}",
                depths.len(),
                nx * ny
            )));
        }
        if !(origin.x.is_finite() && origin.y.is_finite()) {
            return Err(Error::param("origin must be finite"));
        }
        Ok(Heightfield {
            origin,
            cell_size,
            nx,
            ny,
            depths,
        })
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.depths[j * self.nx + i]
    }

    pub fn node_position(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + i as f64 * self.cell_size,
            self.origin.y + j as f64 * self.cell_size,
        )
    }

    /// Size of the node extent in meters.
    pub fn size(&self) -> (f64, f64) {
        (
            (self.nx - 1) as f64 * self.cell_size,
            (self.ny - 1) as f64 * self.cell_size,
        )
    }

    pub fn extent_max(&self) -> Point2 {
        let (w, h) = self.size();
        Point2::new(self.origin.x + w, self.origin.y + h)
    }

    pub fn contains(&self, p: Point2) -> bool {
        let tol = 1e-9 * self.cell_size;
        let hi = self.extent_max();
        p.x >= self.origin.x - tol && p.x <= hi.x + tol && p.y >= self.origin.y - tol && p.y <= hi.y + tol
    }

    /// Shallowest and deepest valid node depth.
    pub fn depth_bounds(&self) -> (f64, f64) {
        self.depths
            .iter()
            .filter(|d| d.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
                (lo.min(d), hi.max(d))
            })
    }

    pub fn has_nodata(&self) -> bool {
        self.depths.iter().any(|d| !d.is_finite())
    }

    /// Bilinear depth at a world position.
    pub fn depth_at(&self, x: f64, y: f64) -> Result<f64> {
        if !self.contains(Point2::new(x, y)) {
            return Err(Error::OutOfDomain { x, y });
        }
        let d = self.sample_local(x - self.origin.x, y - self.origin.y);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::OutOfDomain { x, y })
        }
    }

    /// Like [`Heightfield::depth_at`] but clamps the query into the extent first.
    pub fn depth_at_clamped(&self, x: f64, y: f64) -> f64 {
        let hi = self.extent_max();
        self.sample_local(
            x.clamp(self.origin.x, hi.x) - self.origin.x,
            y.clamp(self.origin.y, hi.y) - self.origin.y,
        )
    }

    /// Bilinear sample in grid-local meters; NaN outside the grid or on NODATA.
    #[inline]
    pub(crate) fn sample_local(&self, lx: f64, ly: f64) -> f64 {
        let gx = lx / self.cell_size;
        let gy = ly / self.cell_size;
        let maxx = (self.nx - 1) as f64;
        let maxy = (self.ny - 1) as f64;
        let eps = 1e-9;
        if !(gx >= -eps && gy >= -eps && gx <= maxx + eps && gy <= maxy + eps) {
            return f64::NAN;
        }
        let gx = gx.clamp(0.0, maxx);
        let gy = gy.clamp(0.0, maxy);
        let i = (gx.floor() as usize).min(self.nx - 2);
        let j = (gy.floor() as usize).min(self.ny - 2);
        let fx = gx - i as f64;
        let fy = gy - j as f64;
        let k = j * self.nx + i;
        let d00 = self.depths[k];
        let d10 = self.depths[k + 1];
        let d01 = self.depths[k + self.nx];
        let d11 = self.depths[k + self.nx + 1];
        let a = d00 + (d10 - d00) * fx;
        let b = d01 + (d11 - d01) * fx;
        a + (b - a) * fy
    }

    /// The same field with its origin moved by `offset`.
    pub fn translated(&self, offset: Point2) -> Heightfield {
        Heightfield {
            origin: self.origin + offset,
            ..self.clone()
        }
    }

    /// Axis-aligned rectangle covering the node extent.
    pub fn extent_roi(&self) -> RoiPolygon {
        let lo = self.origin;
        let hi = self.extent_max();
        RoiPolygon::rectangle(lo, hi).expect("heightfield extent has positive area")
    }
}

/// Simple counter-clockwise polygon bounding the survey area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct RoiPolygon {
    vertices: Vec<Point2>,
}

impl RoiPolygon {
    /// Validates the ring; clockwise input is reversed.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() >= 2 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::param("ROI polygon needs at least 3 vertices"));
        }
        if vertices.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::param("ROI vertices must be finite"));
        }
        if !geometry::ring_is_simple(&vertices) {
            return Err(Error::param("ROI polygon is not simple"));
        }
        let area = geometry::signed_area(&vertices);
        if area == 0.0 {
            return Err(Error::param("ROI polygon has zero area"));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(RoiPolygon { vertices })
    }

    pub fn rectangle(lo: Point2, hi: Point2) -> Result<Self> {
        Self::new(vec![lo, Point2::new(hi.x, lo.y), hi, Point2::new(lo.x, hi.y)])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        geometry::signed_area(&self.vertices)
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        geometry::bbox(&self.vertices)
    }

    pub fn contains(&self, p: Point2) -> bool {
        geometry::point_in_polygon(p, &self.vertices)
    }

    /// True when `p` is inside or within `dist` of the boundary.
    pub fn near(&self, p: Point2, dist: f64) -> bool {
        if self.contains(p) {
            return true;
        }
        let n = self.vertices.len();
        (0..n).any(|i| geometry::point_segment_distance(p, self.vertices[i], self.vertices[(i + 1) % n]) <= dist)
    }

    pub fn translated(&self, offset: Point2) -> RoiPolygon {
        RoiPolygon {
            vertices: self.vertices.iter().map(|&p| p + offset).collect(),
        }
    }

    pub fn check_inside(&self, hf: &Heightfield) -> Result<()> {
        match self.vertices.iter().find(|p| !hf.contains(**p)) {
            Some(p) => Err(Error::param(format!(
                "ROI vertex ({}, {}) lies outside the heightfield extent",
                p.x, p.y
            ))),
            None => Ok(()),
        }
    }
}

impl TryFrom<Vec<Point2>> for RoiPolygon {
    type Error = Error;
    fn try_from(v: Vec<Point2>) -> Result<Self> {
        RoiPolygon::new(v)
    }
}

impl From<RoiPolygon> for Vec<Point2> {
    fn from(r: RoiPolygon) -> Self {
        r.vertices
    }
}

/// Half-open depth interval `[d_min, d_max)`; the last range of a set is closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthRange {
    pub d_min: f64,
    pub d_max: f64,
}

impl DepthRange {
    pub fn new(d_min: f64, d_max: f64) -> Result<Self> {
        if !(d_min.is_finite() && d_max.is_finite() && d_min < d_max) {
            return Err(Error::param(format!("invalid depth range [{d_min}, {d_max})")));
        }
        Ok(DepthRange { d_min, d_max })
    }

    pub fn contains(&self, d: f64, closed: bool) -> bool {
        d >= self.d_min && (d < self.d_max || (closed && d <= self.d_max))
    }

    /// Ranges `[lo, s1), [s1, s2), ..., [sk, hi]` from interior split depths.
    pub fn from_splits(lo: f64, hi: f64, splits: &[f64]) -> Result<Vec<DepthRange>> {
        let mut cuts = vec![lo];
        for &s in splits {
            if !(s > *cuts.last().unwrap() && s < hi) {
                return Err(Error::param(format!(
                    "split depth {s} must be increasing and inside ({lo}, {hi})"
                )));
            }
            cuts.push(s);
        }
        cuts.push(hi);
        cuts.windows(2).map(|w| DepthRange::new(w[0], w[1])).collect()
    }

    /// `count` equal-height ranges spanning `[lo, hi]`.
    pub fn equal(lo: f64, hi: f64, count: usize) -> Result<Vec<DepthRange>> {
        if count == 0 {
            return Err(Error::param("range count must be at least 1"));
        }
        let step = (hi - lo) / count as f64;
        let splits: Vec<f64> = (1..count).map(|k| lo + step * k as f64).collect();
        Self::from_splits(lo, hi, &splits)
    }
}

/// Checks that ranges are ordered and non-overlapping.
pub fn validate_ranges(ranges: &[DepthRange]) -> Result<()> {
    if ranges.is_empty() {
        return Err(Error::param("at least one depth range is required"));
    }
    for w in ranges.windows(2) {
        if w[1].d_min < w[0].d_max {
            return Err(Error::param(format!(
                "depth ranges overlap or are unordered: [{}, {}) then [{}, {})",
                w[0].d_min, w[0].d_max, w[1].d_min, w[1].d_max
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Generators

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub width: f64,
    pub height: f64,
}

fn lattice(extent: Extent, cell_size: f64) -> Result<(usize, usize)> {
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(Error::param(format!("cell size must be positive, got {cell_size}")));
    }
    if !(extent.width > 0.0 && extent.height > 0.0) {
        return Err(Error::param("extent must be positive"));
    }
    let n = |len: f64| (len / cell_size - 1e-9).ceil() as usize + 1;
    Ok((n(extent.width).max(2), n(extent.height).max(2)))
}

fn generate(extent: Extent, cell_size: f64, f: impl Fn(Point2) -> f64) -> Result<Heightfield> {
    let (nx, ny) = lattice(extent, cell_size)?;
    let mut depths = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            depths.push(f(Point2::new(i as f64 * cell_size, j as f64 * cell_size)));
        }
    }
    Heightfield::new(Point2::default(), cell_size, nx, ny, depths)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShaftParams {
    pub extent: Extent,
    pub plain_depth: f64,
    pub pit_depth: f64,
    pub pit_center: Point2,
    pub pit_radius: f64,
    pub wall_smoothing: f64,
    pub cell_size: f64,
}

/// `3t² - 2t³`
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Depth of the shaft surface at `p`. The rim transition is centered on `pit_radius`;
/// with zero smoothing the rim itself belongs to the pit.
pub fn shaft_depth(p: &ShaftParams, at: Point2) -> f64 {
    let r = at.dist(p.pit_center);
    let ws = p.wall_smoothing;
    if ws <= 0.0 {
        return if r <= p.pit_radius { p.pit_depth } else { p.plain_depth };
    }
    let t = (r - (p.pit_radius - 0.5 * ws)) / ws;
    p.pit_depth + (p.plain_depth - p.pit_depth) * smoothstep(t)
}

/// Flat plain with a deep circular pit.
pub fn gen_shaft(p: &ShaftParams) -> Result<Heightfield> {
    if !(p.plain_depth > 0.0 && p.pit_depth > p.plain_depth) {
        return Err(Error::param("shaft requires pit_depth > plain_depth > 0"));
    }
    if !(p.pit_radius > 0.0 && p.wall_smoothing >= 0.0) {
        return Err(Error::param("shaft requires pit_radius > 0 and wall_smoothing >= 0"));
    }
    let reach = p.pit_radius + 0.5 * p.wall_smoothing;
    let c = p.pit_center;
    if c.x - reach < 0.0 || c.y - reach < 0.0 || c.x + reach > p.extent.width || c.y + reach > p.extent.height {
        return Err(Error::param("pit does not fit inside the extent"));
    }
    generate(p.extent, p.cell_size, |at| shaft_depth(p, at))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaddleParams {
    pub extent: Extent,
    pub base_depth: f64,
    pub amplitude: f64,
    pub cell_size: f64,
}

/// `base + amplitude·(u² − v²)` with `u, v` normalized to `[-1, 1]` over the node extent.
pub fn gen_saddle(p: &SaddleParams) -> Result<Heightfield> {
    if !(p.base_depth > 0.0 && p.amplitude >= 0.0 && p.amplitude < p.base_depth) {
        return Err(Error::param("saddle requires 0 <= amplitude < base_depth"));
    }
    let (nx, ny) = lattice(p.extent, p.cell_size)?;
    let half_w = 0.5 * (nx - 1) as f64 * p.cell_size;
    let half_h = 0.5 * (ny - 1) as f64 * p.cell_size;
    generate(p.extent, p.cell_size, |at| {
        let u = (at.x - half_w) / half_w;
        let v = (at.y - half_h) / half_h;
        p.base_depth + p.amplitude * (u * u - v * v)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelAxis {
    /// A point on the channel centerline.
    pub through: Point2,
    /// Direction of the centerline, degrees counter-clockwise from +x.
    pub angle_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub extent: Extent,
    pub shallow_depth: f64,
    pub deep_depth: f64,
    pub axis: ChannelAxis,
    pub channel_width: f64,
    pub cell_size: f64,
}

/// Shallow shelf cut by a straight deep channel with vertical walls.
pub fn gen_channel(p: &ChannelParams) -> Result<Heightfield> {
    if !(p.shallow_depth > 0.0 && p.deep_depth > p.shallow_depth) {
        return Err(Error::param("channel requires deep_depth > shallow_depth > 0"));
    }
    if !(p.channel_width > 0.0) {
        return Err(Error::param("channel width must be positive"));
    }
    let (s, c) = p.axis.angle_deg.to_radians().sin_cos();
    let dir = Point2::new(c, s);
    generate(p.extent, p.cell_size, |at| {
        let off = (at - p.axis.through).cross(dir).abs();
        if off <= 0.5 * p.channel_width {
            p.deep_depth
        } else {
            p.shallow_depth
        }
    })
}

// ---------------------------------------------------------------------------
// Grid files

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridFormat {
    XyzAscii,
    EsriAscii,
}

impl std::str::FromStr for GridFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xyz-ascii" | "xyz" => Ok(GridFormat::XyzAscii),
            "esri-ascii" | "asc" => Ok(GridFormat::EsriAscii),
            other => Err(Error::param(format!(
                "unknown grid format {other:?}; expected xyz-ascii or esri-ascii"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Values are elevations (negative below the surface) and are negated on load.
    pub values_are_elevation: bool,
    /// NODATA nodes are tolerated when farther than one cell from this ROI.
    pub roi: Option<RoiPolygon>,
}

pub fn load_grid(source: impl BufRead, format: GridFormat, opts: &LoadOptions) -> Result<Heightfield> {
    let raw = match format {
        GridFormat::XyzAscii => read_xyz(source)?,
        GridFormat::EsriAscii => read_esri(source)?,
    };
    let sign = if opts.values_are_elevation { -1.0 } else { 1.0 };
    let mut depths = Vec::with_capacity(raw.values.len());
    for (k, (v, line)) in raw.values.iter().enumerate() {
        let pos = Point2::new(
            raw.origin.x + (k % raw.nx) as f64 * raw.cell_size,
            raw.origin.y + (k / raw.nx) as f64 * raw.cell_size,
        );
        match v {
            None => {
                let blocking = match &opts.roi {
                    Some(roi) => roi.near(pos, raw.cell_size),
                    None => true,
                };
                if blocking {
                    return Err(Error::format(
                        *line,
                        format!("NODATA at ({}, {}) inside the region of interest", pos.x, pos.y),
                    ));
                }
                depths.push(f64::NAN);
            }
            Some(v) => {
                let d = sign * v;
                if !(d.is_finite() && d > 0.0) {
                    return Err(Error::format(
                        *line,
                        format!("depth {d} is not a positive finite value"),
                    ));
                }
                depths.push(d);
            }
        }
    }
    Heightfield::new_unchecked_depths(raw.origin, raw.cell_size, raw.nx, raw.ny, depths)
        .map_err(|e| Error::format(0, e.to_string()))
}

pub fn save_grid(hf: &Heightfield, format: GridFormat, mut out: impl Write) -> Result<()> {
    match format {
        GridFormat::XyzAscii => {
            for j in 0..hf.ny {
                for i in 0..hf.nx {
                    let p = hf.node_position(i, j);
                    writeln!(out, "{} {} {}", p.x, p.y, fmt_value(hf.node(i, j)))?;
                }
            }
        }
        GridFormat::EsriAscii => {
            let half = 0.5 * hf.cell_size;
            writeln!(out, "ncols {}", hf.nx)?;
            writeln!(out, "nrows {}", hf.ny)?;
            writeln!(out, "xllcorner {}", hf.origin.x - half)?;
            writeln!(out, "yllcorner {}", hf.origin.y - half)?;
            writeln!(out, "cellsize {}", hf.cell_size)?;
            writeln!(out, "NODATA_value {}", ESRI_NODATA)?;
            for j in (0..hf.ny).rev() {
                let row: Vec<String> = (0..hf.nx).map(|i| fmt_value(hf.node(i, j))).collect();
                writeln!(out, "{}", row.join(" "))?;
            }
        }
    }
    Ok(())
}

const ESRI_NODATA: i32 = -9999;

fn fmt_value(d: f64) -> String {
    if d.is_finite() {
        format!("{d}")
    } else {
        ESRI_NODATA.to_string()
    }
}

struct RawGrid {
    origin: Point2,
    cell_size: f64,
    nx: usize,
    ny: usize,
    /// Row-major from the south row, with the source line of each value.
    values: Vec<(Option<f64>, usize)>,
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::format(line, format!("non-numeric token {tok:?}")))
}

fn read_xyz(source: impl BufRead) -> Result<RawGrid> {
    let mut pts: Vec<(f64, f64, f64, usize)> = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::format(
                line_no,
                format!("expected 3 columns, found {}", toks.len()),
            ));
        }
        let x = parse_f64(toks[0], line_no)?;
        let y = parse_f64(toks[1], line_no)?;
        let d = parse_f64(toks[2], line_no)?;
        if !d.is_finite() {
            return Err(Error::format(line_no, "depth is not finite"));
        }
        pts.push((x, y, d, line_no));
    }
    if pts.len() < 4 {
        return Err(Error::format(
            pts.last().map_or(0, |p| p.3),
            "grid needs at least 2x2 nodes",
        ));
    }
    let y0 = pts[0].1;
    let nx = pts.iter().take_while(|p| p.1 == y0).count();
    if nx < 2 {
        return Err(Error::format(pts[0].3, "first row has a single node"));
    }
    if !pts.len().is_multiple_of(nx) {
        let line = pts.last().unwrap().3;
        return Err(Error::format(
            line,
            format!("ragged grid: {} values do not fill rows of {nx}", pts.len()),
        ));
    }
    let ny = pts.len() / nx;
    if ny < 2 {
        return Err(Error::format(pts[0].3, "grid needs at least 2 rows"));
    }
    let dx = pts[1].0 - pts[0].0;
    let dy = pts[nx].1 - pts[0].1;
    if !(dx > 0.0) || dy == 0.0 {
        return Err(Error::format(
            pts[1].3,
            "x must increase along a row and rows must differ in y",
        ));
    }
    let tol = 1e-6 * dx;
    if (dy.abs() - dx).abs() > tol {
        return Err(Error::format(
            pts[nx].3,
            format!("non-square cells: dx = {dx}, dy = {}", dy.abs()),
        ));
    }
    let (x0, cell) = (pts[0].0, dx);
    for (k, p) in pts.iter().enumerate() {
        let (i, j) = (k % nx, k / nx);
        let ex = x0 + i as f64 * cell;
        let ey = y0 + j as f64 * dy;
        if (p.0 - ex).abs() > tol || (p.1 - ey).abs() > tol {
            return Err(Error::format(
                p.3,
                format!("node ({}, {}) breaks the regular grid", p.0, p.1),
            ));
        }
    }
    let mut values = vec![(None, 0); nx * ny];
    for (k, p) in pts.iter().enumerate() {
        let (i, j) = (k % nx, k / nx);
        let row = if dy > 0.0 { j } else { ny - 1 - j };
        values[row * nx + i] = (Some(p.2), p.3);
    }
    let origin_y = if dy > 0.0 { y0 } else { y0 + dy * (ny - 1) as f64 };
    Ok(RawGrid {
        origin: Point2::new(x0, origin_y),
        cell_size: cell,
        nx,
        ny,
        values,
    })
}

fn read_esri(source: impl BufRead) -> Result<RawGrid> {
    let mut header: Vec<(String, f64)> = Vec::new();
    let mut tokens: Vec<(String, usize)> = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let first = t.split_whitespace().next().unwrap();
        let is_header = tokens.is_empty() && first.chars().next().is_some_and(|c| c.is_ascii_alphabetic());
        if is_header && !first.eq_ignore_ascii_case("nan") && !first.eq_ignore_ascii_case("inf") {
            let mut it = t.split_whitespace();
            let key = it.next().unwrap().to_ascii_lowercase();
            let val = it
                .next()
                .ok_or_else(|| Error::format(line_no, format!("header key {key} has no value")))?;
            header.push((key, parse_f64(val, line_no)?));
        } else {
            tokens.extend(t.split_whitespace().map(|s| (s.to_string(), line_no)));
        }
    }
    let get = |k: &str| header.iter().find(|(key, _)| key == k).map(|(_, v)| *v);
    let need = |k: &str| get(k).ok_or_else(|| Error::format(1, format!("missing header key {k}")));
    let ncols = need("ncols")?;
    let nrows = need("nrows")?;
    let cell = need("cellsize")?;
    if ncols.fract() != 0.0 || nrows.fract() != 0.0 || ncols < 2.0 || nrows < 2.0 {
        return Err(Error::format(1, "ncols and nrows must be integers >= 2"));
    }
    if !(cell > 0.0) {
        return Err(Error::format(1, "cellsize must be positive"));
    }
    let (nx, ny) = (ncols as usize, nrows as usize);
    let ox = match (get("xllcenter"), get("xllcorner")) {
        (Some(c), _) => c,
        (None, Some(c)) => c + 0.5 * cell,
        _ => return Err(Error::format(1, "missing header key xllcorner")),
    };
    let oy = match (get("yllcenter"), get("yllcorner")) {
        (Some(c), _) => c,
        (None, Some(c)) => c + 0.5 * cell,
        _ => return Err(Error::format(1, "missing header key yllcorner")),
    };
    let nodata = get("nodata_value");
    if tokens.len() != nx * ny {
        let line = tokens.last().map_or(header.len(), |t| t.1);
        return Err(Error::format(
            line,
            format!("ragged grid: found {} values, expected {}", tokens.len(), nx * ny),
        ));
    }
    let mut values = vec![(None, 0); nx * ny];
    for (k, (tok, line)) in tokens.iter().enumerate() {
        let (i, r) = (k % nx, k / nx);
        let j = ny - 1 - r;
        let v = parse_f64(tok, *line)?;
        let v = if nodata == Some(v) { None } else { Some(v) };
        if let Some(v) = v {
            if !v.is_finite() {
                return Err(Error::format(*line, "value is not finite"));
            }
        }
        values[j * nx + i] = (v, *line);
    }
    Ok(RawGrid {
        origin: Point2::new(ox, oy),
        cell_size: cell,
        nx,
        ny,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn extent(w: f64, h: f64) -> Extent {
        Extent { width: w, height: h }
    }

    fn shaft(ws: f64) -> ShaftParams {
        ShaftParams {
            extent: extent(100.0, 100.0),
            plain_depth: 5.0,
            pit_depth: 20.0,
            pit_center: Point2::new(50.0, 50.0),
            pit_radius: 20.0,
            wall_smoothing: ws,
            cell_size: 1.0,
        }
    }

    #[test]
    fn shaft_far_center_and_rim() {
        let p = shaft(0.0);
        let hf = gen_shaft(&p).unwrap();
        assert_eq!(hf.depth_at(2.0, 2.0).unwrap(), 5.0);
        assert_eq!(hf.depth_at(50.0, 50.0).unwrap(), 20.0);
        // node (70, 50) sits exactly on the rim
        assert_eq!(hf.node(70, 50), 20.0);
        assert_eq!(shaft_depth(&p, Point2::new(70.0, 50.0)), 20.0);
    }

    #[test]
    fn shaft_smoothing_is_monotone_across_rim() {
        let p = shaft(10.0);
        let mut prev = f64::INFINITY;
        for k in 0..=40 {
            let d = shaft_depth(&p, Point2::new(50.0 + 10.0 + k as f64 * 0.5, 50.0));
            assert!(d <= prev + 1e-12);
            prev = d;
        }
        assert_eq!(shaft_depth(&p, Point2::new(50.0 + 14.9, 50.0)), 20.0);
        assert_eq!(shaft_depth(&p, Point2::new(50.0 + 25.1, 50.0)), 5.0);
    }

    #[test]
    fn shaft_rejects_bad_params() {
        let mut p = shaft(0.0);
        p.pit_depth = 4.0;
        assert!(gen_shaft(&p).is_err());
        let mut p = shaft(0.0);
        p.pit_center = Point2::new(10.0, 50.0);
        assert!(gen_shaft(&p).is_err());
    }

    #[test]
    fn saddle_reference_points() {
        let p = SaddleParams {
            extent: extent(40.0, 20.0),
            base_depth: 10.0,
            amplitude: 4.0,
            cell_size: 0.5,
        };
        let hf = gen_saddle(&p).unwrap();
        assert_eq!(hf.depth_at(20.0, 10.0).unwrap(), 10.0);
        assert_eq!(hf.depth_at(40.0, 20.0).unwrap(), 10.0);
        assert_eq!(hf.depth_at(40.0, 10.0).unwrap(), 14.0);
        assert_eq!(hf.depth_at(20.0, 0.0).unwrap(), 6.0);
        let bad = SaddleParams { amplitude: 10.0, ..p };
        assert!(gen_saddle(&bad).is_err());
    }

    #[test]
    fn channel_extremes() {
        let p = ChannelParams {
            extent: extent(100.0, 80.0),
            shallow_depth: 3.26,
            deep_depth: 25.96,
            axis: ChannelAxis {
                through: Point2::new(50.0, 40.0),
                angle_deg: 30.0,
            },
            channel_width: 20.0,
            cell_size: 1.0,
        };
        let hf = gen_channel(&p).unwrap();
        assert_eq!(hf.depth_at(50.0, 40.0).unwrap(), 25.96);
        assert_eq!(hf.depth_at(5.0, 75.0).unwrap(), 3.26);
        assert_eq!(hf.depth_bounds(), (3.26, 25.96));
    }

    #[test]
    fn bilinear_midpoint_and_nodes() {
        let hf = Heightfield::new(Point2::new(0.0, 0.0), 0.5, 2, 2, vec![1.0, 1.0, 3.0, 3.0]).unwrap();
        assert_eq!(hf.depth_at(0.25, 0.25).unwrap(), 2.0);
        assert_eq!(hf.depth_at(0.5, 0.5).unwrap(), 3.0);
        assert_eq!(hf.depth_at(0.0, 0.0).unwrap(), 1.0);
        assert!(matches!(hf.depth_at(0.6, 0.1), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn heightfield_rejects_nonpositive_depth() {
        assert!(Heightfield::new(Point2::default(), 1.0, 2, 2, vec![1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(Heightfield::new(Point2::default(), 1.0, 2, 2, vec![1.0; 3]).is_err());
        assert!(Heightfield::new(Point2::default(), 0.0, 2, 2, vec![1.0; 4]).is_err());
    }

    #[test]
    fn xyz_constant_grid() {
        let src = "0 0 5.0\n1 0 5.0\n0 1 5.0\n1 1 5.0\n";
        let hf = load_grid(Cursor::new(src), GridFormat::XyzAscii, &LoadOptions::default()).unwrap();
        assert_eq!((hf.nx(), hf.ny()), (2, 2));
        assert!(hf.depths().iter().all(|&d| d == 5.0));
    }

    #[test]
    fn xyz_errors_carry_line_numbers() {
        let ragged = "0 0 5\n1 0 5\n0 1 5\n";
        match load_grid(Cursor::new(ragged), GridFormat::XyzAscii, &LoadOptions::default()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let bad = "0 0 5\n1 0 five\n0 1 5\n1 1 5\n";
        match load_grid(Cursor::new(bad), GridFormat::XyzAscii, &LoadOptions::default()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let neg = "0 0 5\n1 0 -5\n0 1 5\n1 1 5\n";
        assert!(matches!(
            load_grid(Cursor::new(neg), GridFormat::XyzAscii, &LoadOptions::default()),
            Err(Error::Format { line: 2, .. })
        ));
    }

    #[test]
    fn elevation_flag_negates() {
        let src = "0 0 -5\n1 0 -6\n0 1 -7\n1 1 -8\n";
        let opts = LoadOptions {
            values_are_elevation: true,
            ..Default::default()
        };
        let hf = load_grid(Cursor::new(src), GridFormat::XyzAscii, &opts).unwrap();
        assert_eq!(hf.depths(), &[5.0, 6.0, 7.0, 8.0]);
    }

    #[test]
    fn esri_nodata_inside_roi_is_rejected() {
        let src = "ncols 3\nnrows 3\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n\
                   4 4 4\n4 -9999 4\n4 4 4\n";
        let err = load_grid(Cursor::new(src), GridFormat::EsriAscii, &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Format { line: 8, .. }), "{err}");
    }

    #[test]
    fn esri_nodata_far_from_roi_is_tolerated() {
        let mut src = String::from("ncols 6\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n");
        src.push_str("4 4 4 4 4 -9999\n4 4 4 4 4 4\n");
        let roi = RoiPolygon::rectangle(Point2::new(0.5, 0.5), Point2::new(2.5, 1.5)).unwrap();
        let opts = LoadOptions {
            roi: Some(roi),
            ..Default::default()
        };
        let hf = load_grid(Cursor::new(src), GridFormat::EsriAscii, &opts).unwrap();
        assert!(hf.has_nodata());
        assert_eq!(hf.depth_at(1.0, 1.0).unwrap(), 4.0);
        assert!(hf.depth_at(5.4, 1.4).is_err());
    }

    #[test]
    fn esri_north_up_ordering() {
        let src = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 2\n1 2\n3 4\n";
        let hf = load_grid(Cursor::new(src), GridFormat::EsriAscii, &LoadOptions::default()).unwrap();
        assert_eq!(hf.origin(), Point2::new(1.0, 1.0));
        // the first data row is the northern one
        assert_eq!(hf.node(0, 1), 1.0);
        assert_eq!(hf.node(0, 0), 3.0);
    }

    #[test]
    fn roi_is_normalized_ccw() {
        let cw = vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
        ];
        let roi = RoiPolygon::new(cw).unwrap();
        assert!(roi.area() > 0.0);
        assert!(RoiPolygon::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn ranges_from_splits() {
        let r = DepthRange::from_splits(3.26, 25.96, &[15.0]).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r[0].contains(14.999, false));
        assert!(!r[0].contains(15.0, false));
        assert!(r[1].contains(25.96, true));
        assert!(DepthRange::from_splits(3.0, 10.0, &[12.0]).is_err());
        assert_eq!(
            DepthRange::equal(0.0, 8.0, 4).unwrap()[2],
            DepthRange::new(4.0, 6.0).unwrap()
        );
    }
}
