use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Point2};
use crate::mesh::TriMesh;
use crate::partition::Partition;
use crate::sonar::{opening_angle, SonarConfig};
use crate::terrain::RoiPolygon;

use super::path::{CoveragePath, Provenance, Waypoint};

/// Direction the survey tracks run in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Heading {
    /// Along the longer side of the bounding box.
    #[default]
    Auto,
    X,
    Y,
}

impl std::str::FromStr for Heading {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Heading::Auto),
            "x" => Ok(Heading::X),
            "y" => Ok(Heading::Y),
            _ => Err(Error::Config(format!("unknown heading {s:?} (auto, x, y)"))),
        }
    }
}

impl Heading {
    fn along_x(self, lo: Point2, hi: Point2) -> bool {
        match self {
            Heading::X => true,
            Heading::Y => false,
            Heading::Auto => hi.x - lo.x >= hi.y - lo.y,
        }
    }
}

#[derive(Clone, Copy)]
struct Crossing {
    x: f64,
    ring: usize,
    /// Arc-length position along the ring.
    arc: f64,
}

struct Ring {
    pts: Vec<Point2>,
    arc: Vec<f64>,
    perimeter: f64,
}

impl Ring {
    fn new(pts: Vec<Point2>) -> Ring {
        let mut arc = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        for i in 0..pts.len() {
            arc.push(acc);
            acc += pts[i].dist(pts[(i + 1) % pts.len()]);
        }
        Ring {
            pts,
            arc,
            perimeter: acc,
        }
    }

    /// Ring vertices strictly between arc positions `a` and `b`, walking
    /// whichever way round is shorter.
    fn between(&self, a: f64, b: f64) -> Vec<Point2> {
        let p = self.perimeter;
        let fwd = (b - a).rem_euclid(p);
        let n = self.pts.len();
        let ahead = |i: usize| (self.arc[i] - a).rem_euclid(p);
        let mut out: Vec<(f64, Point2)> = Vec::new();
        if fwd <= p - fwd {
            for i in 0..n {
                let d = ahead(i);
                if d > 1e-12 && d < fwd - 1e-12 {
                    out.push((d, self.pts[i]));
                }
            }
            out.sort_by(|x, y| x.0.total_cmp(&y.0));
        } else {
            let back = p - fwd;
            for i in 0..n {
                let d = (a - self.arc[i]).rem_euclid(p);
                if d > 1e-12 && d < back - 1e-12 {
                    out.push((d, self.pts[i]));
                }
            }
            out.sort_by(|x, y| x.0.total_cmp(&y.0));
        }
        out.into_iter().map(|(_, q)| q).collect()
    }
}

fn swap(p: Point2) -> Point2 {
    Point2::new(p.y, p.x)
}

/// Scan line at height `y` against all rings (even-odd), returning the
/// sorted boundary crossings.
fn scan(rings: &[Ring], y: f64) -> Vec<Crossing> {
    let mut xs = Vec::new();
    for (ri, r) in rings.iter().enumerate() {
        let n = r.pts.len();
        for i in 0..n {
            let (a, b) = (r.pts[i], r.pts[(i + 1) % n]);
            if (a.y > y) != (b.y > y) {
                let t = (y - a.y) / (b.y - a.y);
                xs.push(Crossing {
                    x: a.x + t * (b.x - a.x),
                    ring: ri,
                    arc: r.arc[i] + t * a.dist(b),
                });
            }
        }
    }
    xs.sort_by(|a, b| a.x.total_cmp(&b.x));
    xs
}

/// Boustrophedon sweep of the area enclosed by `rings` (even-odd), in a frame
/// where tracks run along x. Returns waypoints in that frame.
fn sweep(rings: &[Ring], w: f64, theta: f64, region: usize) -> Vec<Waypoint> {
    let all: Vec<Point2> = rings.iter().flat_map(|r| r.pts.iter().copied()).collect();
    let (lo, hi) = geometry::bbox(&all);
    let extent = hi.y - lo.y;
    let offsets: Vec<f64> = if extent <= w {
        warn!("footprint {w:.3} m exceeds region width {extent:.3} m, using a single track");
        vec![lo.y + extent / 2.0]
    } else {
        let count = (extent / w - 1e-9).ceil() as usize;
        (0..count)
            .map(|k| (lo.y + w / 2.0 + k as f64 * w).min(hi.y - w / 2.0))
            .collect()
    };

    // (start, end) crossing pairs in driving order
    let mut pieces: Vec<(Crossing, Crossing, f64)> = Vec::new();
    let mut forward = true;
    for &y in &offsets {
        let xs = scan(rings, y);
        let mut ivs: Vec<(Crossing, Crossing)> = xs
            .chunks_exact(2)
            .filter(|c| c[1].x - c[0].x > 1e-9)
            .map(|c| (c[0], c[1]))
            .collect();
        if ivs.is_empty() {
            continue;
        }
        if !forward {
            ivs.reverse();
            for iv in &mut ivs {
                *iv = (iv.1, iv.0);
            }
        }
        pieces.extend(ivs.into_iter().map(|(a, b)| (a, b, y)));
        forward = !forward;
    }

    let mut out: Vec<Waypoint> = Vec::new();
    let push = |out: &mut Vec<Waypoint>, p: Point2, connector: bool| {
        if let Some(last) = out.last_mut() {
            if last.pos.dist(p) < 1e-9 {
                last.connector = connector;
                return;
            }
        }
        let mut wp = Waypoint::new(p, theta, region);
        wp.connector = connector;
        out.push(wp);
    };
    for (idx, &(a, b, y)) in pieces.iter().enumerate() {
        if idx > 0 {
            let prev = pieces[idx - 1].1;
            if prev.ring == a.ring {
                for q in rings[a.ring].between(prev.arc, a.arc) {
                    push(&mut out, q, true);
                }
            }
        }
        push(&mut out, Point2::new(a.x, y), false);
        push(&mut out, Point2::new(b.x, y), idx + 1 < pieces.len());
    }
    if let Some(last) = out.last_mut() {
        last.connector = false;
    }
    out
}

fn sweep_or_fallback(
    rings_world: &[Vec<Point2>],
    w: f64,
    heading: Heading,
    theta: f64,
    region: usize,
) -> Vec<Waypoint> {
    let all: Vec<Point2> = rings_world.iter().flatten().copied().collect();
    let (lo, hi) = geometry::bbox(&all);
    let along_x = heading.along_x(lo, hi);
    let to_frame = |p: Point2| if along_x { p } else { swap(p) };
    let rings: Vec<Ring> = rings_world
        .iter()
        .map(|r| Ring::new(r.iter().map(|&p| to_frame(p)).collect()))
        .collect();
    let mut wps = sweep(&rings, w, theta, region);
    if wps.len() < 2 {
        warn!("region {region} too small for a track, using a single pass over its centroid line");
        let (flo, fhi) = geometry::bbox(&rings.iter().flat_map(|r| r.pts.iter().copied()).collect::<Vec<_>>());
        let y = (flo.y + fhi.y) / 2.0;
        let xs = scan(&rings, y);
        let (x0, x1) = match (xs.first(), xs.last()) {
            (Some(a), Some(b)) if b.x - a.x > 1e-9 => (a.x, b.x),
            _ => (flo.x, fhi.x),
        };
        wps = vec![
            Waypoint::new(Point2::new(x0, y), theta, region),
            Waypoint::new(Point2::new(x1, y), theta, region),
        ];
    }
    for wp in &mut wps {
        wp.pos = to_frame(wp.pos);
    }
    wps
}

pub fn plan_bf(
    roi: &RoiPolygon,
    w: f64,
    heading: Heading,
    sonar: &SonarConfig,
    global_mean_depth: f64,
) -> Result<CoveragePath> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::param("footprint width must be positive"));
    }
    let theta = opening_angle(w, global_mean_depth, sonar.theta_max_deg)?;
    let wps = sweep_or_fallback(&[roi.vertices().to_vec()], w, heading, theta, 0);
    Ok(CoveragePath::new(
        wps,
        false,
        Provenance {
            planner: "bf".into(),
            config_hash: String::new(),
        },
    ))
}

/// Outline rings of the union of `faces` (interior edges cancel).
pub fn region_outline(mesh: &TriMesh, faces: &[usize]) -> Vec<Vec<Point2>> {
    let member: std::collections::BTreeSet<usize> = faces.iter().copied().collect();
    // directed boundary half-edges keyed by start vertex
    let mut out_edges: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut count = 0;
    for &f in faces {
        let tri = mesh.faces()[f];
        let fe = mesh.face_edges(f);
        for k in 0..3 {
            let inside = mesh.edge(fe[k]).other_face(f).is_some_and(|g| member.contains(&g));
            if !inside {
                out_edges.entry(tri[k]).or_default().push(tri[(k + 1) % 3]);
                count += 1;
            }
        }
    }
    for v in out_edges.values_mut() {
        v.sort_unstable();
        v.reverse();
    }
    let mut rings = Vec::new();
    let mut used = 0;
    while used < count {
        let start = *out_edges.iter().find(|(_, v)| !v.is_empty()).expect("edges remain").0;
        let mut ring = vec![mesh.vertices()[start].pos];
        let mut cur = start;
        loop {
            let next = out_edges.get_mut(&cur).and_then(Vec::pop).expect("outline is closed");
            used += 1;
            if next == start {
                break;
            }
            ring.push(mesh.vertices()[next].pos);
            cur = next;
        }
        rings.push(simplify_collinear(ring));
    }
    rings
}

fn simplify_collinear(ring: Vec<Point2>) -> Vec<Point2> {
    let n = ring.len();
    if n <= 3 {
        return ring;
    }
    let keep: Vec<Point2> = (0..n)
        .filter(|&i| {
            let (a, b, c) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
            geometry::orient(a, b, c).abs() > 1e-12 * (1.0 + a.dist(c).powi(2))
        })
        .map(|i| ring[i])
        .collect();
    if keep.len() >= 3 {
        keep
    } else {
        ring
    }
}

/// One independent back-and-forth path per region.
pub fn plan_mdbf(
    partition: &Partition,
    mesh: &TriMesh,
    w: f64,
    heading: Heading,
    sonar: &SonarConfig,
) -> Result<Vec<CoveragePath>> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::param("footprint width must be positive"));
    }
    partition
        .regions
        .iter()
        .map(|r| {
            let theta = opening_angle(w, r.mean_depth, sonar.theta_max_deg)?;
            let rings = region_outline(mesh, &r.faces);
            let wps = sweep_or_fallback(&rings, w, heading, theta, r.id);
            Ok(CoveragePath::new(
                wps,
                false,
                Provenance {
                    planner: "mdbf".into(),
                    config_hash: String::new(),
                },
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::remesh;
    use crate::partition::SlopeMode;
    use crate::terrain::{DepthRange, Heightfield};

    fn square(side: f64) -> RoiPolygon {
        RoiPolygon::rectangle(Point2::new(0.0, 0.0), Point2::new(side, side)).unwrap()
    }

    fn track_segments(p: &CoveragePath) -> Vec<(Point2, Point2)> {
        (0..p.segment_count())
            .filter(|&i| !p.waypoints[i].connector)
            .map(|i| p.segment(i))
            .collect()
    }

    #[test]
    fn four_tracks_on_4w_square() {
        let w = 10.0;
        let p = plan_bf(&square(4.0 * w), w, Heading::Auto, &SonarConfig::default(), 10.0).unwrap();
        let tracks = track_segments(&p);
        assert_eq!(tracks.len(), 4);
        let mut ys: Vec<f64> = tracks.iter().map(|t| t.0.y).collect();
        ys.sort_by(f64::total_cmp);
        assert!((ys[0] - w / 2.0).abs() < 1e-9);
        for pair in ys.windows(2) {
            assert!((pair[1] - pair[0] - w).abs() < 1e-9);
        }
        for (a, b) in &tracks {
            let d = (*b - *a).normalized().unwrap();
            assert!((d.dot(Point2::new(1.0, 0.0)).abs() - 1.0).abs() < 1e-12);
        }
        assert!(!p.closed);
    }

    #[test]
    fn heading_follows_longer_axis() {
        let roi = RoiPolygon::rectangle(Point2::new(0.0, 0.0), Point2::new(20.0, 100.0)).unwrap();
        let p = plan_bf(&roi, 10.0, Heading::Auto, &SonarConfig::default(), 10.0).unwrap();
        for (a, b) in track_segments(&p) {
            assert!((a.x - b.x).abs() < 1e-12);
        }
        assert_eq!(track_segments(&p).len(), 2);
    }

    #[test]
    fn narrow_roi_single_track() {
        let roi = RoiPolygon::rectangle(Point2::new(0.0, 0.0), Point2::new(100.0, 5.0)).unwrap();
        let p = plan_bf(&roi, 10.0, Heading::X, &SonarConfig::default(), 10.0).unwrap();
        assert_eq!(p.len(), 2);
        assert!((p.waypoints[0].pos.y - 2.5).abs() < 1e-12);
    }

    #[test]
    fn connectors_follow_concave_boundary() {
        // U shape: tracks on the lower part must connect along the outline
        let roi = RoiPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(30.0, 0.0),
            Point2::new(30.0, 30.0),
            Point2::new(20.0, 30.0),
            Point2::new(20.0, 10.0),
            Point2::new(10.0, 10.0),
            Point2::new(10.0, 30.0),
            Point2::new(0.0, 30.0),
        ])
        .unwrap();
        let p = plan_bf(&roi, 5.0, Heading::X, &SonarConfig::default(), 10.0).unwrap();
        for i in 0..p.segment_count() {
            let (a, b) = p.segment(i);
            let mid = a.midpoint(b);
            assert!(roi.near(mid, 1e-9), "segment {i} leaves the ROI at {mid:?}");
        }
        for w in p.waypoints.windows(2) {
            assert!(w[0].pos.dist(w[1].pos) > 1e-9);
        }
    }

    #[test]
    fn outline_of_faces_is_union() {
        let n = 41;
        let hf = Heightfield::new(Point2::default(), 1.0, n, n, vec![10.0; n * n]).unwrap();
        let roi = RoiPolygon::rectangle(Point2::new(0.0, 0.0), Point2::new(40.0, 40.0)).unwrap();
        let m = remesh(&hf, &roi, 10.0 * std::f64::consts::FRAC_1_SQRT_2 / 0.95, 0.05).unwrap();
        let all: Vec<usize> = (0..m.face_count()).collect();
        let rings = region_outline(&m, &all);
        assert_eq!(rings.len(), 1);
        assert!((geometry::signed_area(&rings[0]).abs() - roi.area()).abs() < 1e-6);
        assert_eq!(rings[0].len(), 4);
    }

    #[test]
    fn single_region_mdbf_equals_bf() {
        let n = 41;
        let hf = Heightfield::new(Point2::default(), 1.0, n, n, vec![10.0; n * n]).unwrap();
        let roi = RoiPolygon::rectangle(Point2::new(0.0, 0.0), Point2::new(40.0, 40.0)).unwrap();
        let m = remesh(&hf, &roi, 10.0 * std::f64::consts::FRAC_1_SQRT_2 / 0.95, 0.05).unwrap();
        let part = Partition::single(&m);
        let cfg = SonarConfig::default();
        let bf = plan_bf(&roi, 7.0, Heading::Auto, &cfg, part.regions[0].mean_depth).unwrap();
        let md = plan_mdbf(&part, &m, 7.0, Heading::Auto, &cfg).unwrap();
        assert_eq!(md.len(), 1);
        let a: Vec<_> = bf.waypoints.iter().map(|w| (w.pos, w.theta_deg)).collect();
        let b: Vec<_> = md[0].waypoints.iter().map(|w| (w.pos, w.theta_deg)).collect();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!(x.0.dist(y.0) < 1e-9 && x.1 == y.1);
        }
    }

    #[test]
    fn two_regions_two_angles() {
        let n = 61;
        let mut d = vec![5.0; n * n];
        for j in 0..n {
            for i in 30..n {
                d[j * n + i] = 25.0;
            }
        }
        let hf = Heightfield::new(Point2::default(), 1.0, n, n, d).unwrap();
        let roi = RoiPolygon::rectangle(Point2::new(0.0, 0.0), Point2::new(60.0, 60.0)).unwrap();
        let m = remesh(&hf, &roi, 6.0, 0.05).unwrap();
        let ranges = DepthRange::from_splits(5.0, 25.0, &[15.0]).unwrap();
        let part = Partition::build(&m, &ranges, SlopeMode::CrossEdge).unwrap();
        let paths = plan_mdbf(&part, &m, 6.0, Heading::Auto, &SonarConfig::default()).unwrap();
        assert_eq!(paths.len(), part.region_count());
        let thetas: std::collections::BTreeSet<u64> =
            paths.iter().map(|p| p.waypoints[0].theta_deg.to_bits()).collect();
        assert!(thetas.len() >= 2);
    }
}
