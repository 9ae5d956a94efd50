//! Depth-range regions, shared edges between them, and gate selection.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{build_dual, TriMesh};
use crate::terrain::{validate_ranges, DepthRange};

/// How the slope of a candidate gate edge is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlopeMode {
    /// Depth difference of the two faces over the distance between their centroids.
    #[default]
    CrossEdge,
    /// Depth difference of the edge endpoints over the edge length.
    AlongEdge,
}

/// Ordered region pair `(low, high)`.
pub type RegionPair = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    pub id: usize,
    /// Index into the partition's depth ranges.
    pub range: usize,
    pub faces: Vec<usize>,
    pub mean_depth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    pub face_range: Vec<usize>,
    pub face_region: Vec<usize>,
    pub region_range: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub ranges: Vec<DepthRange>,
    pub face_region: Vec<usize>,
    pub regions: Vec<Region>,
    pub shared: BTreeMap<RegionPair, Vec<usize>>,
    pub gates: BTreeMap<RegionPair, usize>,
    pub blocked: BTreeSet<usize>,
    pub slope_mode: SlopeMode,
}

fn range_of(ranges: &[DepthRange], d: f64) -> Option<usize> {
    let last = ranges.len() - 1;
    ranges.iter().enumerate().position(|(i, r)| r.contains(d, i == last))
}

/// Labels faces by depth range, then splits each range into connected regions.
/// Region ids follow the smallest face id of each region.
pub fn assign_regions(mesh: &TriMesh, ranges: &[DepthRange]) -> Result<Labeling> {
    validate_ranges(ranges)?;
    let n = mesh.face_count();
    let mut face_range = Vec::with_capacity(n);
    for f in 0..n {
        let d = mesh.face_mean_depth(f);
        match range_of(ranges, d) {
            Some(r) => face_range.push(r),
            None => return Err(Error::UncoveredDepth { face: f, depth: d }),
        }
    }
    let dual = build_dual(mesh);
    let mut face_region = vec![usize::MAX; n];
    let mut region_range = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if face_region[seed] != usize::MAX {
            continue;
        }
        let id = region_range.len();
        region_range.push(face_range[seed]);
        face_region[seed] = id;
        queue.push_back(seed);
        while let Some(f) = queue.pop_front() {
            for l in dual.neighbors(f) {
                if face_region[l.face] == usize::MAX && face_range[l.face] == face_range[seed] {
                    face_region[l.face] = id;
                    queue.push_back(l.face);
                }
            }
        }
    }
    Ok(Labeling {
        face_range,
        face_region,
        region_range,
    })
}

/// Interior edges whose faces lie in different regions, keyed by region pair.
pub fn find_shared_edges(mesh: &TriMesh, face_region: &[usize]) -> BTreeMap<RegionPair, Vec<usize>> {
    let mut shared: BTreeMap<RegionPair, Vec<usize>> = BTreeMap::new();
    for (id, e) in mesh.edges().iter().enumerate() {
        if e.is_boundary() {
            continue;
        }
        let (ra, rb) = (face_region[e.faces[0]], face_region[e.faces[1]]);
        if ra != rb {
            shared.entry((ra.min(rb), ra.max(rb))).or_default().push(id);
        }
    }
    shared
}

pub fn edge_slope(mesh: &TriMesh, edge: usize, mode: SlopeMode) -> f64 {
    let e = mesh.edge(edge);
    match mode {
        SlopeMode::CrossEdge => {
            let [a, b] = e.faces;
            let dist = mesh.face_centroid(a).dist(mesh.face_centroid(b));
            (mesh.face_mean_depth(a) - mesh.face_mean_depth(b)).abs() / dist
        }
        SlopeMode::AlongEdge => {
            let v = mesh.vertices();
            (v[e.v[0]].depth - v[e.v[1]].depth).abs() / mesh.edge_length(edge)
        }
    }
}

/// Picks the lowest-slope shared edge of every region pair as its gate; ties go
/// to the smaller edge id. All other shared edges are blocked.
pub fn select_gates(
    mesh: &TriMesh,
    shared: &BTreeMap<RegionPair, Vec<usize>>,
    mode: SlopeMode,
) -> (BTreeMap<RegionPair, usize>, BTreeSet<usize>) {
    let mut gates = BTreeMap::new();
    let mut blocked = BTreeSet::new();
    for (&pair, edges) in shared {
        let mut best: Option<(f64, usize)> = None;
        for &e in edges {
            let s = edge_slope(mesh, e, mode);
            best = match best {
                Some((bs, be)) if bs < s || (bs == s && be < e) => Some((bs, be)),
                _ => Some((s, e)),
            };
        }
        let (_, gate) = best.expect("shared edge sets are never empty");
        gates.insert(pair, gate);
        blocked.extend(edges.iter().copied().filter(|&e| e != gate));
    }
    (gates, blocked)
}

/// Area-weighted mean of the face depths of a region.
pub fn region_mean_depth(mesh: &TriMesh, faces: &[usize]) -> f64 {
    let (num, den) = faces.iter().fold((0.0, 0.0), |(n, d), &f| {
        let a = mesh.face_area(f);
        (n + a * mesh.face_mean_depth(f), d + a)
    });
    num / den
}

impl Partition {
    pub fn build(mesh: &TriMesh, ranges: &[DepthRange], mode: SlopeMode) -> Result<Partition> {
        let labels = assign_regions(mesh, ranges)?;
        let mut faces_of: Vec<Vec<usize>> = vec![Vec::new(); labels.region_range.len()];
        for (f, &r) in labels.face_region.iter().enumerate() {
            faces_of[r].push(f);
        }
        for (i, r) in ranges.iter().enumerate() {
            if !labels.face_range.contains(&i) {
                log::warn!("depth range [{}, {}) contains no faces", r.d_min, r.d_max);
            }
        }
        let regions = faces_of
            .into_iter()
            .enumerate()
            .map(|(id, faces)| Region {
                id,
                range: labels.region_range[id],
                mean_depth: region_mean_depth(mesh, &faces),
                faces,
            })
            .collect();
        let shared = find_shared_edges(mesh, &labels.face_region);
        let (gates, blocked) = select_gates(mesh, &shared, mode);
        let partition = Partition {
            ranges: ranges.to_vec(),
            face_region: labels.face_region,
            regions,
            shared,
            gates,
            blocked,
            slope_mode: mode,
        };
        let dual = build_dual(mesh);
        let pieces = dual.component_count(|e| !partition.blocked.contains(&e));
        assert_eq!(pieces, 1, "gating disconnected the face adjacency graph");
        Ok(partition)
    }

    /// Single region spanning the whole mesh.
    pub fn single(mesh: &TriMesh) -> Partition {
        let (lo, hi) = (0..mesh.face_count())
            .map(|f| mesh.face_mean_depth(f))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), d| (l.min(d), h.max(d)));
        let hi = if hi > lo { hi } else { lo + 1.0 };
        let range = DepthRange::new(lo, hi).expect("ordered bounds");
        Partition::build(mesh, &[range], SlopeMode::default()).expect("one range covers every face")
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn region_of_face(&self, f: usize) -> usize {
        self.face_region[f]
    }

    pub fn is_gate(&self, edge: usize) -> bool {
        self.gates.values().any(|&g| g == edge)
    }

    pub fn to_json(&self) -> String {
        let view = PartitionJson {
            ranges: self.ranges.iter().map(|r| [r.d_min, r.d_max]).collect(),
            slope_mode: self.slope_mode,
            face_region: &self.face_region,
            regions: self
                .regions
                .iter()
                .map(|r| RegionJson {
                    id: r.id,
                    range: r.range,
                    face_count: r.faces.len(),
                    mean_depth: r.mean_depth,
                })
                .collect(),
            shared: self
                .shared
                .iter()
                .map(|(p, e)| SharedJson {
                    pair: [p.0, p.1],
                    edges: e.clone(),
                })
                .collect(),
            gates: self
                .gates
                .iter()
                .map(|(p, &e)| GateJson {
                    pair: [p.0, p.1],
                    edge: e,
                })
                .collect(),
            blocked: self.blocked.iter().copied().collect(),
        };
        serde_json::to_string_pretty(&view).expect("partition serializes")
    }
}

#[derive(Serialize)]
struct PartitionJson<'a> {
    ranges: Vec<[f64; 2]>,
    slope_mode: SlopeMode,
    face_region: &'a [usize],
    regions: Vec<RegionJson>,
    shared: Vec<SharedJson>,
    gates: Vec<GateJson>,
    blocked: Vec<usize>,
}

#[derive(Serialize)]
struct RegionJson {
    id: usize,
    range: usize,
    face_count: usize,
    mean_depth: f64,
}

#[derive(Serialize)]
struct SharedJson {
    pair: [usize; 2],
    edges: Vec<usize>,
}

#[derive(Serialize)]
struct GateJson {
    pair: [usize; 2],
    edge: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::mesh::{remesh, Vertex, DEFAULT_SHRINK};
    use crate::terrain::{gen_shaft, Extent, Heightfield, ShaftParams};

    fn flat_mesh(depth: f64) -> TriMesh {
        let hf = Heightfield::new(Point2::default(), 1.0, 61, 61, vec![depth; 61 * 61]).unwrap();
        remesh(&hf, &hf.extent_roi(), 5.0, DEFAULT_SHRINK).unwrap()
    }

    #[test]
    fn constant_mesh_single_region() {
        let mesh = flat_mesh(14.6);
        let p = Partition::build(&mesh, &[DepthRange::new(10.0, 20.0).unwrap()], SlopeMode::CrossEdge).unwrap();
        assert_eq!(p.region_count(), 1);
        assert!(p.shared.is_empty() && p.gates.is_empty() && p.blocked.is_empty());
        assert!((p.regions[0].mean_depth - 14.6).abs() < 1e-12);
    }

    #[test]
    fn uncovered_depth_names_face() {
        let mesh = flat_mesh(14.6);
        let err = assign_regions(&mesh, &[DepthRange::new(1.0, 10.0).unwrap()]).unwrap_err();
        assert!(matches!(err, Error::UncoveredDepth { face: 0, .. }));
    }

    #[test]
    fn shaft_splits_into_plain_and_pit() {
        let hf = gen_shaft(&ShaftParams {
            extent: Extent {
                width: 200.0,
                height: 200.0,
            },
            plain_depth: 5.0,
            pit_depth: 30.0,
            pit_center: Point2::new(100.0, 100.0),
            pit_radius: 50.0,
            wall_smoothing: 10.0,
            cell_size: 1.0,
        })
        .unwrap();
        let mesh = remesh(&hf, &hf.extent_roi(), 8.0, DEFAULT_SHRINK).unwrap();
        let ranges = DepthRange::from_splits(5.0, 30.0, &[17.5]).unwrap();
        let p = Partition::build(&mesh, &ranges, SlopeMode::CrossEdge).unwrap();
        assert!(p.region_count() >= 2);
        for (&pair, &gate) in &p.gates {
            assert!(p.shared[&pair].contains(&gate));
            assert!(!p.blocked.contains(&gate));
        }
        let shared_total: usize = p.shared.values().map(Vec::len).sum();
        assert_eq!(p.blocked.len() + p.gates.len(), shared_total);
        for r in &p.regions {
            let (lo, hi) = r
                .faces
                .iter()
                .map(|&f| mesh.face_mean_depth(f))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), d| (l.min(d), h.max(d)));
            assert!(r.mean_depth >= lo - 1e-9 && r.mean_depth <= hi + 1e-9);
        }
    }

    #[test]
    fn equal_area_faces_average() {
        let v = |x, y, d| Vertex {
            pos: Point2::new(x, y),
            depth: d,
        };
        // two faces of equal area; face depths 7 and 21
        let mesh = TriMesh::from_parts(
            vec![v(0.0, 0.0, 7.0), v(1.0, 0.0, 7.0), v(1.0, 1.0, 7.0), v(0.0, 1.0, 49.0)],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        assert_eq!(mesh.face_mean_depth(1), 21.0);
        assert!((region_mean_depth(&mesh, &[0, 1]) - 14.0).abs() < 1e-12);
    }

    #[test]
    fn single_shared_edge_is_the_gate() {
        let v = |x, y, d| Vertex {
            pos: Point2::new(x, y),
            depth: d,
        };
        let mesh = TriMesh::from_parts(
            vec![v(0.0, 0.0, 5.0), v(1.0, 0.0, 5.0), v(1.0, 1.0, 5.0), v(0.0, 1.0, 40.0)],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let ranges = DepthRange::from_splits(5.0, 50.0, &[10.0]).unwrap();
        let p = Partition::build(&mesh, &ranges, SlopeMode::CrossEdge).unwrap();
        assert_eq!(p.region_count(), 2);
        assert_eq!(p.gates.len(), 1);
        assert!(p.blocked.is_empty());
    }

    #[test]
    fn slope_ties_break_on_smaller_edge_id() {
        // strip of faces: a shallow row above a deep row; every crossing edge has equal slope
        let mut verts = Vec::new();
        for j in 0..3 {
            for i in 0..5 {
                let d = if j == 0 { 30.0 } else { 5.0 };
                verts.push(Vertex {
                    pos: Point2::new(i as f64, j as f64),
                    depth: d,
                });
            }
        }
        let id = |i: usize, j: usize| j * 5 + i;
        let mut faces = Vec::new();
        for j in 0..2 {
            for i in 0..4 {
                faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mesh = TriMesh::from_parts(verts, faces).unwrap();
        let ranges = DepthRange::from_splits(5.0, 30.0, &[12.0]).unwrap();
        let a = Partition::build(&mesh, &ranges, SlopeMode::CrossEdge).unwrap();
        let b = Partition::build(&mesh, &ranges, SlopeMode::CrossEdge).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        for (pair, &gate) in &a.gates {
            let slopes: Vec<(f64, usize)> = a.shared[pair]
                .iter()
                .map(|&e| (edge_slope(&mesh, e, SlopeMode::CrossEdge), e))
                .collect();
            let min = slopes.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
            let first = slopes.iter().filter(|s| s.0 == min).map(|s| s.1).min().unwrap();
            assert_eq!(gate, first);
        }
    }

    #[test]
    fn json_lists_gates_and_blocked() {
        let mesh = flat_mesh(10.0);
        let p = Partition::single(&mesh);
        let v: serde_json::Value = serde_json::from_str(&p.to_json()).unwrap();
        assert_eq!(v["gates"].as_array().unwrap().len(), 0);
        assert_eq!(v["face_region"].as_array().unwrap().len(), mesh.face_count());
    }
}
