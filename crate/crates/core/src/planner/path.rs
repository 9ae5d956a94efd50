use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub pos: Point2,
    pub theta_deg: f64,
    pub region: usize,
    /// Mesh face the waypoint was generated from, when it came from a quad.
    pub face: Option<usize>,
    /// The segment leaving this waypoint is a connector between tracks.
    pub connector: bool,
}

impl Waypoint {
    pub fn new(pos: Point2, theta_deg: f64, region: usize) -> Self {
        Waypoint {
            pos,
            theta_deg,
            region,
            face: None,
            connector: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub planner: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveragePath {
    pub waypoints: Vec<Waypoint>,
    pub closed: bool,
    /// Waypoint indices where the opening angle differs from the previous
    /// waypoint (cyclically, for closed paths).
    pub angle_switches: Vec<usize>,
    pub provenance: Provenance,
}

impl CoveragePath {
    pub fn new(waypoints: Vec<Waypoint>, closed: bool, provenance: Provenance) -> Self {
        let mut p = CoveragePath {
            waypoints,
            closed,
            angle_switches: Vec::new(),
            provenance,
        };
        p.recompute_switches();
        p
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn recompute_switches(&mut self) {
        let wp = &self.waypoints;
        let mut sw: Vec<usize> = (1..wp.len())
            .filter(|&i| wp[i].theta_deg != wp[i - 1].theta_deg)
            .collect();
        if self.closed && wp.len() > 1 && wp[0].theta_deg != wp[wp.len() - 1].theta_deg {
            sw.insert(0, 0);
        }
        self.angle_switches = sw;
    }

    pub fn segment_count(&self) -> usize {
        match (self.waypoints.len(), self.closed) {
            (0 | 1, _) => 0,
            (n, true) => n,
            (n, false) => n - 1,
        }
    }

    /// Segment `i` runs from waypoint `i` to the next one (wrapping when closed).
    pub fn segment(&self, i: usize) -> (Point2, Point2) {
        let n = self.waypoints.len();
        (self.waypoints[i].pos, self.waypoints[(i + 1) % n].pos)
    }

    pub fn length(&self) -> f64 {
        (0..self.segment_count())
            .map(|i| {
                let (a, b) = self.segment(i);
                a.dist(b)
            })
            .sum()
    }

    /// Arc-length resampling at `step`; original waypoints are kept and samples
    /// inherit the attributes of the segment they lie on.
    pub fn resample(&self, step: f64) -> Result<CoveragePath> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::param("resample step must be positive"));
        }
        let mut out = Vec::new();
        let mut arc = 0.0;
        for i in 0..self.segment_count() {
            let (a, b) = self.segment(i);
            let len = a.dist(b);
            let src = self.waypoints[i];
            out.push(src);
            let dir = b - a;
            let first = (arc / step).floor() as u64 + 1;
            let mut k = first;
            loop {
                let s = k as f64 * step - arc;
                if s >= len - 1e-9 {
                    break;
                }
                if s > 1e-9 {
                    out.push(Waypoint {
                        pos: a + dir * (s / len),
                        face: None,
                        ..src
                    });
                }
                k += 1;
            }
            arc += len;
        }
        if !self.closed {
            if let Some(last) = self.waypoints.last() {
                out.push(*last);
            }
        }
        Ok(CoveragePath::new(out, self.closed, self.provenance.clone()))
    }

    /// CSV with header `x,y,theta_deg,region_id,switch_flag`, six decimals.
    /// Closed paths repeat their first waypoint as the last row.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "x,y,theta_deg,region_id,switch_flag")?;
        let mut flags = vec![0u8; self.waypoints.len()];
        for &i in &self.angle_switches {
            flags[i] = 1;
        }
        for (w, f) in self.waypoints.iter().zip(&flags) {
            writeln!(
                out,
                "{:.6},{:.6},{:.6},{},{}",
                w.pos.x, w.pos.y, w.theta_deg, w.region, f
            )?;
        }
        if self.closed {
            if let Some(w) = self.waypoints.first() {
                writeln!(
                    out,
                    "{:.6},{:.6},{:.6},{},{}",
                    w.pos.x, w.pos.y, w.theta_deg, w.region, flags[0]
                )?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_csv(source: impl BufRead, provenance: Provenance) -> Result<CoveragePath> {
        let mut wps = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            if idx == 0 {
                if line.trim() != "x,y,theta_deg,region_id,switch_flag" {
                    return Err(Error::format(1, "unexpected path CSV header"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 5 {
                return Err(Error::format(
                    line_no,
                    format!("expected 5 columns, found {}", cols.len()),
                ));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::format(line_no, format!("non-numeric value {s:?}")))
            };
            let region = cols[3]
                .parse::<usize>()
                .map_err(|_| Error::format(line_no, format!("bad region id {:?}", cols[3])))?;
            wps.push(Waypoint::new(
                Point2::new(num(cols[0])?, num(cols[1])?),
                num(cols[2])?,
                region,
            ));
        }
        let closed = wps.len() > 2 && wps.first().map(|w| w.pos) == wps.last().map(|w| w.pos);
        if closed {
            wps.pop();
        }
        if wps.is_empty() {
            return Err(Error::EmptyPath);
        }
        Ok(CoveragePath::new(wps, closed, provenance))
    }

    /// GeoJSON Feature with a LineString geometry and per-point property arrays.
    pub fn to_geojson(&self) -> String {
        let mut coords: Vec<[f64; 2]> = self.waypoints.iter().map(|w| [w.pos.x, w.pos.y]).collect();
        let mut theta: Vec<f64> = self.waypoints.iter().map(|w| w.theta_deg).collect();
        let mut region: Vec<usize> = self.waypoints.iter().map(|w| w.region).collect();
        if self.closed && !self.waypoints.is_empty() {
            coords.push(coords[0]);
            theta.push(theta[0]);
            region.push(region[0]);
        }
        let v = serde_json::json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": coords },
            "properties": {
                "planner": self.provenance.planner,
                "config_hash": self.provenance.config_hash,
                "closed": self.closed,
                "theta_deg": theta,
                "region_id": region,
                "angle_switches": self.angle_switches,
            }
        });
        serde_json::to_string_pretty(&v).expect("geojson serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            planner: "test".into(),
            config_hash: "0".into(),
        }
    }

    fn open(points: &[(f64, f64)]) -> CoveragePath {
        let wps = points
            .iter()
            .map(|&(x, y)| Waypoint::new(Point2::new(x, y), 45.0, 0))
            .collect();
        CoveragePath::new(wps, false, prov())
    }

    #[test]
    fn straight_segment_resample() {
        let p = open(&[(0.0, 0.0), (10.0, 0.0)]);
        let r = p.resample(1.0).unwrap();
        assert_eq!(r.len(), 11);
        assert!((r.length() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn resample_keeps_corners_and_attributes() {
        let mut p = open(&[(0.0, 0.0), (2.5, 0.0), (2.5, 3.0)]);
        p.waypoints[1].theta_deg = 60.0;
        p.waypoints[1].region = 1;
        p.waypoints[2].theta_deg = 60.0;
        p.recompute_switches();
        let r = p.resample(1.0).unwrap();
        assert!(r.waypoints.iter().any(|w| w.pos == Point2::new(2.5, 0.0)));
        for w in &r.waypoints {
            let expect = if w.pos.x < 2.5 { 45.0 } else { 60.0 };
            assert_eq!(w.theta_deg, expect, "{w:?}");
        }
        assert_eq!(r.angle_switches.len(), 1);
        assert!((r.length() - 5.5).abs() < 1e-9);
    }

    #[test]
    fn closed_switches_wrap() {
        let mut p = open(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]);
        p.closed = true;
        p.waypoints[2].theta_deg = 30.0;
        p.recompute_switches();
        assert_eq!(p.angle_switches, vec![0, 2]);
        assert!((p.length() - (2.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_closed() {
        let mut p = open(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]);
        p.closed = true;
        p.recompute_switches();
        let text = p.to_csv_string();
        assert!(text.starts_with("x,y,theta_deg,region_id,switch_flag\n0.000000,0.000000,45.000000,0,0\n"));
        let back = CoveragePath::read_csv(text.as_bytes(), prov()).unwrap();
        assert!(back.closed);
        assert_eq!(back.len(), 3);
        assert!(CoveragePath::read_csv("x,y\n".as_bytes(), prov()).is_err());
    }
}
