//! Survey simulation and coverage metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::planner::{CoveragePath, PlannerKind};
use crate::sonar::{RayCaster, SonarConfig};
use crate::terrain::{Heightfield, RoiPolygon};

/// Hit counts on a raster aligned with the heightfield origin, cropped to the
/// ROI bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    hits: Vec<u32>,
    mask: Vec<bool>,
    pings: u64,
    skipped_pings: u64,
}

impl CoverageGrid {
    /// Empty grid over `roi`; a cell belongs to the mask when its center is
    /// inside the ROI.
    pub fn new(hf: &Heightfield, roi: &RoiPolygon, cell: f64) -> Result<CoverageGrid> {
        if !(cell > 0.0 && cell.is_finite()) {
            return Err(Error::param("evaluation resolution must be positive"));
        }
        let o = hf.origin();
        let (lo, hi) = roi.bbox();
        let i0 = ((lo.x - o.x) / cell + 1e-9).floor();
        let j0 = ((lo.y - o.y) / cell + 1e-9).floor();
        let i1 = ((hi.x - o.x) / cell - 1e-9).ceil();
        let j1 = ((hi.y - o.y) / cell - 1e-9).ceil();
        let nx = (i1 - i0).max(1.0) as usize;
        let ny = (j1 - j0).max(1.0) as usize;
        let origin = Point2::new(o.x + i0 * cell, o.y + j0 * cell);
        let mut mask = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let c = Point2::new(origin.x + (i as f64 + 0.5) * cell, origin.y + (j as f64 + 0.5) * cell);
                mask.push(roi.contains(c));
            }
        }
        Ok(CoverageGrid {
            origin,
            cell,
            nx,
            ny,
            hits: vec![0; nx * ny],
            mask,
            pings: 0,
            skipped_pings: 0,
        })
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Row-major hit counts, `j * nx + i`, rows ascending in y.
    pub fn hits(&self) -> &[u32] {
        &self.hits
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn hit_count(&self, i: usize, j: usize) -> u32 {
        self.hits[j * self.nx + i]
    }

    pub fn in_mask(&self, i: usize, j: usize) -> bool {
        self.mask[j * self.nx + i]
    }

    pub fn pings(&self) -> u64 {
        self.pings
    }

    pub fn skipped_pings(&self) -> u64 {
        self.skipped_pings
    }

    pub fn mask_cells(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn covered_cells(&self) -> usize {
        self.hits.iter().zip(&self.mask).filter(|&(&h, &m)| m && h > 0).count()
    }

    /// Cell containing world point `p`, if inside the grid.
    pub fn cell_of(&self, p: Point2) -> Option<usize> {
        let fx = ((p.x - self.origin.x) / self.cell).floor();
        let fy = ((p.y - self.origin.y) / self.cell).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some(fy as usize * self.nx + fx as usize)
    }

    /// Marks a hit at world point `p`; points outside the grid are ignored.
    pub fn record(&mut self, p: Point2) {
        if let Some(c) = self.cell_of(p) {
            self.hits[c] += 1;
        }
    }

    /// Plain PGM (P2), north row first, counts clamped to 255.
    pub fn write_pgm(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "P2")?;
        writeln!(out, "{} {}", self.nx, self.ny)?;
        writeln!(out, "255")?;
        let mut line = String::new();
        for j in (0..self.ny).rev() {
            line.clear();
            for i in 0..self.nx {
                if i > 0 {
                    line.push(' ');
                }
                let _ = write!(line, "{}", self.hit_count(i, j).min(255));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Run-length encoded hit counts and mask as JSON.
    pub fn to_runs_json(&self) -> String {
        fn runs<T: PartialEq + Copy>(v: &[T]) -> Vec<(T, usize)> {
            let mut out: Vec<(T, usize)> = Vec::new();
            for &x in v {
                match out.last_mut() {
                    Some((y, n)) if *y == x => *n += 1,
                    _ => out.push((x, 1)),
                }
            }
            out
        }
        let mask: Vec<u8> = self.mask.iter().map(|&m| m as u8).collect();
        let v = serde_json::json!({
            "nx": self.nx,
            "ny": self.ny,
            "origin": [self.origin.x, self.origin.y],
            "cell_size": self.cell,
            "hits": runs(&self.hits),
            "mask": runs(&mask),
        });
        serde_json::to_string(&v).expect("json serializes")
    }
}

/// Simulation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    /// Evaluation grid cell size, meters.
    pub eval_resolution: f64,
    /// Distance between pings along the path; the evaluation resolution
    /// divided by `pings_per_cell` when unset.
    pub ping_spacing: Option<f64>,
    pub pings_per_cell: u32,
    /// Standard deviation of the cross-track offset, meters.
    pub noise_std: f64,
    pub seed: u64,
    /// Ping on back-and-forth connector segments.
    pub connectors_active: bool,
    /// Path length over which the heading turns through a corner, meters;
    /// a quarter of the sonar footprint when unset.
    pub turn_window: Option<f64>,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            eval_resolution: 0.10,
            ping_spacing: None,
            pings_per_cell: 1,
            noise_std: 0.0,
            seed: 0,
            connectors_active: true,
            turn_window: None,
        }
    }
}

impl SimParams {
    pub fn ping_spacing(&self) -> f64 {
        self.ping_spacing
            .unwrap_or(self.eval_resolution / self.pings_per_cell.max(1) as f64)
    }

    pub fn turn_window(&self, sonar: &SonarConfig) -> f64 {
        self.turn_window.unwrap_or(0.25 * sonar.footprint())
    }

    pub fn validate(&self) -> Result<()> {
        if self.turn_window.is_some_and(|w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::param("turn window must be non-negative"));
        }
        if !(self.eval_resolution > 0.0 && self.eval_resolution.is_finite()) {
            return Err(Error::param("evaluation resolution must be positive"));
        }
        if self.pings_per_cell == 0 {
            return Err(Error::param("pings per cell must be at least 1"));
        }
        if !(self.ping_spacing() > 0.0 && self.ping_spacing().is_finite()) {
            return Err(Error::param("ping spacing must be positive"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::param("noise standard deviation must be non-negative"));
        }
        Ok(())
    }
}

struct PingJob {
    origin: Point2,
    heading: Point2,
    theta: f64,
}

fn ping_jobs(
    path: &CoveragePath,
    params: &SimParams,
    window: f64,
    noise: &mut Option<(ChaCha8Rng, Normal<f64>)>,
) -> Result<Vec<PingJob>> {
    if path.is_empty() {
        return Err(Error::EmptyPath);
    }
    let spacing = params.ping_spacing();
    let samples = path.resample(spacing)?;
    let pts: Vec<Point2> = samples.waypoints.iter().map(|w| w.pos).collect();
    let n = pts.len();
    // heading is the chord over +-k samples, the tangent of a trajectory
    // that rounds its corners over roughly `window` meters
    // The chord never reaches across a switch between survey lines and
    // connectors, so back-and-forth tracks keep their heading up to the end
    // turn.
    let k = ((0.5 * window / spacing).round() as usize).max(1);
    let flags: Vec<bool> = samples.waypoints.iter().map(|w| w.connector).collect();
    let uniform = flags.iter().all(|&f| f == flags[0]);
    let mut run_start = vec![0; n];
    for i in 1..n {
        run_start[i] = if flags[i] == flags[i - 1] { run_start[i - 1] } else { i };
    }
    let mut run_end = vec![n - 1; n];
    for i in (0..n.saturating_sub(1)).rev() {
        run_end[i] = if flags[i] == flags[i + 1] { run_end[i + 1] } else { i };
    }
    let mut jobs = Vec::with_capacity(n);
    for (i, w) in samples.waypoints.iter().enumerate() {
        if w.connector && !params.connectors_active {
            continue;
        }
        let (a, b) = if samples.closed && uniform {
            let k = k.min(n / 2).max(1);
            (pts[(i + n - k % n) % n], pts[(i + k) % n])
        } else {
            (pts[i.saturating_sub(k).max(run_start[i])], pts[(i + k).min(run_end[i])])
        };
        let heading = (b - a)
            .normalized()
            .or_else(|| {
                // degenerate chord: fall back to the segment direction
                let s = i.min(samples.segment_count().saturating_sub(1));
                (samples.segment_count() > 0)
                    .then(|| samples.segment(s))
                    .and_then(|(a, b)| (b - a).normalized())
            })
            .unwrap_or(Point2::new(0.0, 1.0));
        let mut origin = w.pos;
        if let Some((rng, dist)) = noise.as_mut() {
            let off = dist.sample(rng);
            origin = origin + Point2::new(heading.y, -heading.x) * off;
        }
        jobs.push(PingJob {
            origin,
            heading,
            theta: w.theta_deg,
        });
    }
    Ok(jobs)
}

const CHUNK: usize = 64;

/// Flies every path over the heightfield and counts beam hits per cell.
pub fn simulate(
    hf: &Heightfield,
    roi: &RoiPolygon,
    paths: &[CoveragePath],
    sonar: &SonarConfig,
    params: &SimParams,
) -> Result<CoverageGrid> {
    sonar.validate()?;
    params.validate()?;
    let mut grid = CoverageGrid::new(hf, roi, params.eval_resolution)?;
    let mut noise = if params.noise_std > 0.0 {
        Some((
            ChaCha8Rng::seed_from_u64(params.seed),
            Normal::new(0.0, params.noise_std).map_err(|e| Error::param(e.to_string()))?,
        ))
    } else {
        None
    };
    let mut jobs = Vec::new();
    for p in paths {
        jobs.extend(ping_jobs(p, params, params.turn_window(sonar), &mut noise)?);
    }
    let caster = RayCaster::new(hf, sonar);
    let hf_origin = hf.origin();
    let shift = grid.origin - hf_origin;
    let (cell, nx, ny) = (grid.cell, grid.nx, grid.ny);
    let mut angle_cache: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for j in &jobs {
        angle_cache
            .entry(j.theta.to_bits())
            .or_insert_with(|| caster.beam_angles(j.theta));
    }

    let per_chunk: Vec<(Vec<u32>, u64)> = jobs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut cells = Vec::with_capacity(chunk.len() * sonar.n_beams);
            let mut skipped = 0u64;
            for job in chunk {
                if !hf.contains(job.origin) {
                    skipped += 1;
                    continue;
                }
                let angles = &angle_cache[&job.theta.to_bits()];
                caster.fan_local(job.origin - hf_origin, job.heading, angles, |h| {
                    let fx = ((h.x - shift.x) / cell).floor();
                    let fy = ((h.y - shift.y) / cell).floor();
                    if fx >= 0.0 && fy >= 0.0 && fx < nx as f64 && fy < ny as f64 {
                        cells.push((fy as usize * nx + fx as usize) as u32);
                    }
                });
            }
            (cells, skipped)
        })
        .collect();
    for (cells, skipped) in per_chunk {
        for c in cells {
            grid.hits[c as usize] += 1;
        }
        grid.skipped_pings += skipped;
    }
    grid.pings = jobs.len() as u64 - grid.skipped_pings;
    if grid.skipped_pings > 0 {
        warn!("{} pings outside the heightfield were skipped", grid.skipped_pings);
    }
    debug!("simulated {} pings on a {}x{} grid", grid.pings, nx, ny);
    Ok(grid)
}

/// Survey metrics for one planner run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub planner: String,
    /// Evaluation resolution, meters.
    pub resolution: f64,
    pub coverage_pct: f64,
    pub path_length: f64,
    pub angle_switch_count: usize,
    /// Mean hits per covered cell.
    pub redundancy: f64,
    pub covered_cells: usize,
    pub mask_cells: usize,
    pub pings: u64,
    pub skipped_pings: u64,
    pub config_hash: String,
    /// Seconds; kept out of the JSON so reruns serialize identically.
    #[serde(skip)]
    pub wall_time: f64,
}

pub fn evaluate(grid: &CoverageGrid, paths: &[CoveragePath]) -> Result<Report> {
    let mask_cells = grid.mask_cells();
    if mask_cells == 0 {
        return Err(Error::EmptyMask);
    }
    let covered = grid.covered_cells();
    let total_hits: u64 = grid
        .hits
        .iter()
        .zip(&grid.mask)
        .filter(|&(_, &m)| m)
        .map(|(&h, _)| h as u64)
        .sum();
    let first = paths.first().map(|p| p.provenance.clone());
    Ok(Report {
        scenario: String::new(),
        planner: first.as_ref().map(|p| p.planner.clone()).unwrap_or_default(),
        resolution: grid.cell,
        coverage_pct: 100.0 * covered as f64 / mask_cells as f64,
        path_length: paths.iter().map(CoveragePath::length).sum(),
        angle_switch_count: paths.iter().map(|p| p.angle_switches.len()).sum(),
        redundancy: if covered == 0 {
            0.0
        } else {
            total_hits as f64 / covered as f64
        },
        covered_cells: covered,
        mask_cells,
        pings: grid.pings,
        skipped_pings: grid.skipped_pings,
        config_hash: first.map(|p| p.config_hash).unwrap_or_default(),
        wall_time: 0.0,
    })
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let rows: [(&str, String); 12] = [
            ("scenario", self.scenario.clone()),
            ("planner", self.planner.clone()),
            ("resolution_m", format!("{:.2}", self.resolution)),
            ("coverage_pct", format!("{:.2}", self.coverage_pct)),
            ("path_length_m", format!("{:.2}", self.path_length)),
            ("angle_switches", self.angle_switch_count.to_string()),
            ("redundancy", format!("{:.3}", self.redundancy)),
            ("covered_cells", self.covered_cells.to_string()),
            ("mask_cells", self.mask_cells.to_string()),
            ("pings", self.pings.to_string()),
            ("skipped_pings", self.skipped_pings.to_string()),
            ("wall_time_s", format!("{:.3}", self.wall_time)),
        ];
        let mut s = String::new();
        for (k, v) in rows {
            let _ = writeln!(s, "{k:<16}{v}");
        }
        let _ = writeln!(s, "{:<16}{}", "config_hash", self.config_hash);
        s
    }
}

/// Coverage per planner for one (scenario, resolution) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub scenario: String,
    pub resolution: f64,
    pub coverage: Vec<Option<f64>>,
    pub best: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Planner names, one per column.
    pub planners: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

fn planner_label(name: &str) -> String {
    name.parse::<PlannerKind>()
        .map(|k| k.label().to_string())
        .unwrap_or_else(|_| name.to_string())
}

fn round2(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

/// Builds the planner × (scenario, resolution) coverage table.
pub fn compare(reports: &[Report]) -> Result<Comparison> {
    if reports.is_empty() {
        return Err(Error::Config("no reports to compare".into()));
    }
    let mut planners: Vec<String> = PlannerKind::ALL
        .iter()
        .map(|k| k.name().to_string())
        .filter(|n| reports.iter().any(|r| &r.planner == n))
        .collect();
    let mut extra: Vec<String> = reports
        .iter()
        .map(|r| r.planner.clone())
        .filter(|n| !planners.contains(n))
        .collect();
    extra.sort();
    extra.dedup();
    planners.extend(extra);

    // resolution keyed in integer micrometers so rows sort and group exactly
    let mut cells: BTreeMap<(String, i64), BTreeMap<usize, f64>> = BTreeMap::new();
    for r in reports {
        let col = planners.iter().position(|p| *p == r.planner).expect("column exists");
        let key = (r.scenario.clone(), (r.resolution * 1e6).round() as i64);
        if cells.entry(key).or_default().insert(col, r.coverage_pct).is_some() {
            warn!(
                "duplicate report for {} / {} / {}, keeping the last",
                r.scenario, r.planner, r.resolution
            );
        }
    }
    let rows = cells
        .into_iter()
        .map(|((scenario, res), vals)| {
            let coverage: Vec<Option<f64>> = (0..planners.len()).map(|c| vals.get(&c).copied()).collect();
            let top = coverage.iter().flatten().map(|&v| round2(v)).max();
            let best = coverage
                .iter()
                .map(|v| v.is_some_and(|v| Some(round2(v)) == top))
                .collect();
            ComparisonRow {
                scenario,
                resolution: res as f64 / 1e6,
                coverage,
                best,
            }
        })
        .collect();
    Ok(Comparison { planners, rows })
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scenario,resolution_m");
        for p in &self.planners {
            s.push(',');
            s.push_str(&planner_label(p));
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{},{:.2}", r.scenario, r.resolution);
            for v in &r.coverage {
                match v {
                    Some(v) => {
                        let _ = write!(s, ",{v:.2}");
                    }
                    None => s.push(','),
                }
            }
            s.push('\n');
        }
        s
    }

    /// Aligned text table; the best coverage in each row is wrapped in `**`.
    pub fn to_text(&self) -> String {
        let mut header = vec!["Scenario".to_string(), "Res (m)".to_string()];
        header.extend(self.planners.iter().map(|p| planner_label(p)));
        let mut table = vec![header];
        for r in &self.rows {
            let mut line = vec![r.scenario.clone(), format!("{:.2}", r.resolution)];
            for (v, &b) in r.coverage.iter().zip(&r.best) {
                line.push(match v {
                    Some(v) if b => format!("**{v:.2}**"),
                    Some(v) => format!("{v:.2}"),
                    None => "-".to_string(),
                });
            }
            table.push(line);
        }
        let cols = table[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut s = String::new();
        for (idx, row) in table.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, v)| {
                    if c == 0 {
                        format!("{v:<w$}", w = widths[c])
                    } else {
                        format!("{v:>w$}", w = widths[c])
                    }
                })
                .collect();
            let _ = writeln!(s, "{}", cells.join("  ").trim_end());
            if idx == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (cols - 1);
                let _ = writeln!(s, "{}", "-".repeat(total));
            }
        }
        s
    }
}
