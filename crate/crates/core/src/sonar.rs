//! Multibeam echo sounder model.
//!
//! Beams fan out across-track in the vertical plane perpendicular to the
//! vessel heading. Each beam is cast against the heightfield from the water
//! surface; the first seafloor crossing is the sounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::terrain::Heightfield;

/// How beam directions are distributed over the opening angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeamSpacing {
    /// Equal angular steps across the fan.
    Equiangular,
    /// Equal across-track spacing of soundings on a flat bottom.
    #[default]
    Equidistant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SonarConfig {
    pub n_beams: usize,
    /// Sounding resolution in meters; also scales the ray march.
    pub resolution: f64,
    pub theta_max_deg: f64,
    pub max_range: f64,
    pub beam_spacing: BeamSpacing,
    /// Ray-march step; `resolution / 4` when unset.
    pub march_step: Option<f64>,
    /// Bisection bracket width before the crossing is refined; `resolution / 10` when unset.
    pub tolerance: Option<f64>,
}

impl Default for SonarConfig {
    fn default() -> Self {
        SonarConfig {
            n_beams: 256,
            resolution: 0.10,
            theta_max_deg: 160.0,
            max_range: 200.0,
            beam_spacing: BeamSpacing::default(),
            march_step: None,
            tolerance: None,
        }
    }
}

impl SonarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_beams < 2 {
            return Err(Error::param("sonar needs at least 2 beams"));
        }
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(Error::param("sonar resolution must be positive"));
        }
        if !(self.theta_max_deg > 0.0 && self.theta_max_deg < 180.0) {
            return Err(Error::param("theta_max must lie in (0, 180) degrees"));
        }
        if !(self.max_range > 0.0) {
            return Err(Error::param("max_range must be positive"));
        }
        if self.march_step.is_some_and(|s| !(s > 0.0)) || self.tolerance.is_some_and(|s| !(s > 0.0)) {
            return Err(Error::param("march step and tolerance must be positive"));
        }
        Ok(())
    }

    pub fn march_step(&self) -> f64 {
        self.march_step.unwrap_or(self.resolution / 4.0)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(self.resolution / 10.0)
    }

    /// Design footprint `n_beams × resolution`.
    pub fn footprint(&self) -> f64 {
        self.n_beams as f64 * self.resolution
    }
}

/// Opening angle (degrees) that spans `w` meters on a flat bottom at depth `d`,
/// clamped to `theta_max_deg`.
pub fn opening_angle(w: f64, d: f64, theta_max_deg: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("depth must be positive, got {d}")));
    }
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::Domain(format!("footprint must be positive, got {w}")));
    }
    let theta = 2.0 * (w / (2.0 * d)).atan().to_degrees();
    Ok(theta.min(theta_max_deg))
}

/// Flat-bottom swath width for opening angle `theta_deg` at depth `d`.
pub fn footprint_width(theta_deg: f64, d: f64) -> Result<f64> {
    if !(theta_deg > 0.0 && theta_deg < 180.0) {
        return Err(Error::Domain(format!(
            "opening angle must lie in (0, 180), got {theta_deg}"
        )));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("depth must be positive, got {d}")));
    }
    Ok(2.0 * d * (0.5 * theta_deg).to_radians().tan())
}

/// Across-track beam angles in radians, port to starboard.
pub fn beam_angles(n_beams: usize, theta_deg: f64, spacing: BeamSpacing) -> Vec<f64> {
    let half = 0.5 * theta_deg.to_radians();
    let last = (n_beams - 1) as f64;
    (0..n_beams)
        .map(|k| {
            let u = -1.0 + 2.0 * k as f64 / last;
            match spacing {
                BeamSpacing::Equiangular => u * half,
                BeamSpacing::Equidistant => (u * half.tan()).atan(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub x: f64,
    pub y: f64,
    /// Depth of the ray at the sounding.
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ping {
    pub origin: Point2,
    pub heading: Point2,
    pub theta_deg: f64,
    pub hits: Vec<Hit>,
}

const TILE_CELLS: usize = 4;

/// Ray caster over one heightfield.
///
/// Marching is accelerated with per-tile Lipschitz bounds of the bilinear
/// surface: a step never exceeds the distance over which the ray provably
/// stays above the seafloor, and never drops below the configured march step.
#[derive(Debug, Clone)]
pub struct RayCaster<'a> {
    hf: &'a Heightfield,
    step: f64,
    tol: f64,
    max_range: f64,
    n_beams: usize,
    spacing: BeamSpacing,
    min_depth: f64,
    tiles_x: usize,
    tiles_y: usize,
    tile_size: f64,
    tile_slope: Vec<f64>,
}

impl<'a> RayCaster<'a> {
    pub fn new(hf: &'a Heightfield, cfg: &SonarConfig) -> Self {
        let (nx, ny) = (hf.nx(), hf.ny());
        let (cx, cy) = (nx - 1, ny - 1);
        let tiles_x = cx.div_ceil(TILE_CELLS);
        let tiles_y = cy.div_ceil(TILE_CELLS);
        let h = hf.cell_size();
        let mut tile_slope = vec![0.0f64; tiles_x * tiles_y];
        for j in 0..cy {
            for i in 0..cx {
                let d00 = hf.node(i, j);
                let d10 = hf.node(i + 1, j);
                let d01 = hf.node(i, j + 1);
                let d11 = hf.node(i + 1, j + 1);
                let gx = (d10 - d00).abs().max((d11 - d01).abs()) / h;
                let gy = (d01 - d00).abs().max((d11 - d10).abs()) / h;
                let l = gx.hypot(gy);
                let l = if l.is_finite() { l } else { f64::INFINITY };
                let t = &mut tile_slope[(j / TILE_CELLS) * tiles_x + i / TILE_CELLS];
                *t = t.max(l);
            }
        }
        RayCaster {
            hf,
            step: cfg.march_step(),
            tol: cfg.tolerance(),
            max_range: cfg.max_range,
            n_beams: cfg.n_beams,
            spacing: cfg.beam_spacing,
            min_depth: hf.depth_bounds().0,
            tiles_x,
            tiles_y,
            tile_size: TILE_CELLS as f64 * h,
            tile_slope,
        }
    }

    pub fn heightfield(&self) -> &Heightfield {
        self.hf
    }

    /// First seafloor crossing of the ray `origin + t·dir` in world coordinates.
    pub fn cast(&self, origin: [f64; 3], dir: [f64; 3]) -> Option<Hit> {
        let o = self.hf.origin();
        self.cast_local([origin[0] - o.x, origin[1] - o.y, origin[2]], dir)
            .map(|h| Hit {
                x: h.x + o.x,
                y: h.y + o.y,
                depth: h.depth,
            })
    }

    /// Same as [`RayCaster::cast`] with `x, y` relative to the heightfield origin.
    pub fn cast_local(&self, o: [f64; 3], dir: [f64; 3]) -> Option<Hit> {
        let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        if !(norm > 0.0) {
            return None;
        }
        let d = [dir[0] / norm, dir[1] / norm, dir[2] / norm];
        if d[2] <= 0.0 {
            return None;
        }
        let horiz = d[0].hypot(d[1]);
        let (w, h) = self.hf.size();

        let mut t0: f64 = 0.0;
        let mut t1: f64 = self.max_range;
        for (oa, da, hi) in [(o[0], d[0], w), (o[1], d[1], h)] {
            if da == 0.0 {
                if oa < 0.0 || oa > hi {
                    return None;
                }
            } else {
                let (a, b) = ((0.0 - oa) / da, (hi - oa) / da);
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
        }
        let mut t = t0.max((self.min_depth - o[2]) / d[2]);
        if t > t1 {
            return None;
        }

        let at = |t: f64| [o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]];
        let gap = |t: f64| {
            let p = at(t);
            self.hf.sample_local(p[0], p[1]) - p[2]
        };

        let mut g = gap(t);
        if g.is_nan() {
            return None;
        }
        if g <= 0.0 {
            return Some(self.point(at(t)));
        }
        loop {
            let probe = at(t + 1e-7);
            let tx = ((probe[0] / self.tile_size).floor().max(0.0) as usize).min(self.tiles_x - 1);
            let ty = ((probe[1] / self.tile_size).floor().max(0.0) as usize).min(self.tiles_y - 1);
            let lip = self.tile_slope[ty * self.tiles_x + tx];
            let safe = g / (d[2] + lip * horiz);
            let next = if safe >= self.step {
                let mut exit = f64::INFINITY;
                for (oa, da, idx) in [(o[0], d[0], tx), (o[1], d[1], ty)] {
                    if da > 0.0 {
                        exit = exit.min(((idx + 1) as f64 * self.tile_size - oa) / da);
                    } else if da < 0.0 {
                        exit = exit.min((idx as f64 * self.tile_size - oa) / da);
                    }
                }
                t + safe.min((exit - t).max(1e-7))
            } else {
                t + self.step
            };
            if next >= t1 {
                let g1 = gap(t1);
                if t1 > t && g1 <= 0.0 {
                    return Some(self.bisect(at, gap, t, t1));
                }
                return None;
            }
            let gn = gap(next);
            if gn.is_nan() {
                return None;
            }
            if gn <= 0.0 {
                return Some(self.bisect(at, gap, t, next));
            }
            t = next;
            g = gn;
        }
    }

    fn bisect(&self, at: impl Fn(f64) -> [f64; 3], gap: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Hit {
        for _ in 0..80 {
            if hi - lo <= self.tol && gap(hi).abs() <= self.tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if gap(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        // Illinois refinement to the crossing itself, so a sounding moves
        // continuously with the ray instead of jumping within the bracket.
        let (mut glo, mut ghi) = (gap(lo), gap(hi));
        let mut side = 0i8;
        for _ in 0..40 {
            if !(glo > 0.0 && ghi <= 0.0) || hi - lo <= 1e-12 * (1.0 + hi.abs()) {
                break;
            }
            let c = (lo * ghi - hi * glo) / (ghi - glo);
            if !(c > lo && c < hi) {
                break;
            }
            let gc = gap(c);
            if gc.abs() <= 1e-12 {
                hi = c;
                break;
            }
            if gc > 0.0 {
                lo = c;
                glo = gc;
                if side == 1 {
                    ghi *= 0.5;
                }
                side = 1;
            } else {
                hi = c;
                ghi = gc;
                if side == -1 {
                    glo *= 0.5;
                }
                side = -1;
            }
        }
        let t = if gap(lo).abs() < gap(hi).abs() { lo } else { hi };
        self.point(at(t))
    }

    fn point(&self, p: [f64; 3]) -> Hit {
        Hit {
            x: p[0],
            y: p[1],
            depth: p[2],
        }
    }

    /// Fires one fan from the surface at `origin` (world coordinates).
    pub fn ping(&self, origin: Point2, heading: Point2, theta_deg: f64) -> Ping {
        let o = self.hf.origin();
        let mut hits = Vec::with_capacity(self.n_beams);
        let angles = beam_angles(self.n_beams, theta_deg, self.spacing);
        self.fan_local(origin - o, heading, &angles, |h| {
            hits.push(Hit {
                x: h.x + o.x,
                y: h.y + o.y,
                depth: h.depth,
            })
        });
        Ping {
            origin,
            heading,
            theta_deg,
            hits,
        }
    }

    /// Casts every beam of a fan at a grid-local origin, reporting hits in order.
    pub fn fan_local(&self, origin: Point2, heading: Point2, angles: &[f64], mut on_hit: impl FnMut(Hit)) {
        let heading = heading.normalized().unwrap_or(Point2::new(1.0, 0.0));
        let across = Point2::new(heading.y, -heading.x);
        for &phi in angles {
            let (s, c) = phi.sin_cos();
            let dir = [s * across.x, s * across.y, c];
            if let Some(hit) = self.cast_local([origin.x, origin.y, 0.0], dir) {
                on_hit(hit);
            }
        }
    }

    pub fn beam_angles(&self, theta_deg: f64) -> Vec<f64> {
        beam_angles(self.n_beams, theta_deg, self.spacing)
    }
}

/// One-off ray cast; build a [`RayCaster`] when casting many rays.
pub fn cast_ray(hf: &Heightfield, origin: [f64; 3], dir: [f64; 3], cfg: &SonarConfig) -> Option<Hit> {
    RayCaster::new(hf, cfg).cast(origin, dir)
}

/// One-off ping; build a [`RayCaster`] when pinging repeatedly.
pub fn ping(hf: &Heightfield, origin: Point2, heading: Point2, theta_deg: f64, cfg: &SonarConfig) -> Ping {
    RayCaster::new(hf, cfg).ping(origin, heading, theta_deg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(depth: f64) -> Heightfield {
        Heightfield::new(Point2::new(-50.0, -50.0), 1.0, 101, 101, vec![depth; 101 * 101]).unwrap()
    }

    #[test]
    fn table_angles() {
        let a = opening_angle(25.6, 14.6, 160.0).unwrap();
        assert!((a - 82.44).abs() < 0.1, "{a}");
        let b = opening_angle(64.0, 14.6, 160.0).unwrap();
        assert!((b - 130.95).abs() < 0.1, "{b}");
        assert!((opening_angle(10.0, 5.0, 160.0).unwrap() - 90.0).abs() < 1e-12);
    }

    #[test]
    fn angle_domain_and_clamp() {
        assert!(opening_angle(10.0, 0.0, 160.0).is_err());
        assert!(opening_angle(10.0, -1.0, 160.0).is_err());
        assert_eq!(opening_angle(10.0, 1e-6, 160.0).unwrap(), 160.0);
        assert!(footprint_width(180.0, 5.0).is_err());
        assert!((footprint_width(90.0, 7.0).unwrap() - 14.0).abs() < 1e-12);
    }

    #[test]
    fn angle_width_round_trip() {
        for &(w, d) in &[(25.6, 14.6), (64.0, 22.0), (3.0, 40.0), (12.8, 7.0)] {
            let th = opening_angle(w, d, 179.9).unwrap();
            assert!((footprint_width(th, d).unwrap() - w).abs() < 1e-9);
        }
    }

    #[test]
    fn vertical_and_diagonal_rays() {
        let hf = flat(5.0);
        let cfg = SonarConfig::default();
        let hit = cast_ray(&hf, [3.0, -2.0, 0.0], [0.0, 0.0, 1.0], &cfg).unwrap();
        assert!((hit.x - 3.0).abs() < 1e-12 && (hit.y + 2.0).abs() < 1e-12);
        let d = 12.0;
        let hf = flat(d);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let hit = cast_ray(&hf, [0.0, 0.0, 0.0], [s, 0.0, s], &cfg).unwrap();
        assert!((hit.x - d).abs() <= cfg.resolution / 10.0, "{hit:?}");
        assert!(hit.y.abs() < 1e-12);
    }

    #[test]
    fn upward_or_escaping_rays_miss() {
        let hf = flat(5.0);
        let cfg = SonarConfig::default();
        assert!(cast_ray(&hf, [0.0, 0.0, 0.0], [0.0, 0.0, -1.0], &cfg).is_none());
        assert!(cast_ray(&hf, [0.0, 0.0, 0.0], [1.0, 0.0, 0.01], &cfg).is_none());
    }

    #[test]
    fn flat_fan_width_matches_footprint() {
        let d = 14.6;
        let hf = flat(d);
        let cfg = SonarConfig::default();
        let w = cfg.footprint();
        let theta = opening_angle(w, d, cfg.theta_max_deg).unwrap();
        for spacing in [BeamSpacing::Equiangular, BeamSpacing::Equidistant] {
            let cfg = SonarConfig {
                beam_spacing: spacing,
                ..cfg
            };
            let p = ping(&hf, Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), theta, &cfg);
            assert_eq!(p.hits.len(), cfg.n_beams);
            let xs: Vec<f64> = p.hits.iter().map(|h| h.x).collect();
            let span = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
            assert!((span - w).abs() <= 0.01 * w, "{spacing:?}: {span}");
        }
    }

    #[test]
    fn nadir_beam_hits_below_origin() {
        let hf = flat(9.0);
        let cfg = SonarConfig {
            n_beams: 11,
            ..Default::default()
        };
        let p = ping(&hf, Point2::new(1.5, 2.5), Point2::new(1.0, 0.0), 60.0, &cfg);
        let mid = p.hits[5];
        assert!((mid.x - 1.5).abs() < 1e-9 && (mid.y - 2.5).abs() < 1e-9);
    }

    #[test]
    fn equidistant_soundings_are_evenly_spaced() {
        let hf = flat(10.0);
        let cfg = SonarConfig {
            n_beams: 21,
            beam_spacing: BeamSpacing::Equidistant,
            ..Default::default()
        };
        let p = ping(&hf, Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), 90.0, &cfg);
        let xs: Vec<f64> = p.hits.iter().map(|h| h.x).collect();
        for w in xs.windows(2) {
            assert!(((w[0] - w[1]).abs() - 1.0).abs() < 0.02, "{xs:?}");
        }
    }
}
