//! Footprint-sized triangle meshes of the survey region.
//!
//! The region is covered by a square lattice whose squares are cut along a
//! diagonal into two right isosceles triangles, by default alternating the
//! diagonal in a checkerboard. Faces are kept when their centroid lies in the ROI.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Point2};
use crate::terrain::{Heightfield, RoiPolygon};

/// Default fraction by which the face hypotenuse undershoots twice the footprint.
pub const DEFAULT_SHRINK: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub pos: Point2,
    pub depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// Endpoints, smaller index first.
    pub v: [usize; 2],
    pub faces: [usize; 2],
    pub face_count: u8,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.face_count == 1
    }

    /// The face across this edge from `f`.
    pub fn other_face(&self, f: usize) -> Option<usize> {
        if self.face_count < 2 {
            None
        } else if self.faces[0] == f {
            Some(self.faces[1])
        } else {
            Some(self.faces[0])
        }
    }
}

/// Lattice parameters recorded by [`remesh`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeInfo {
    pub origin: Point2,
    /// Side of a lattice square (triangle leg).
    pub leg: f64,
    pub hypotenuse: f64,
    /// Lattice faces touching the ROI whose centroid fell outside it.
    pub dropped_faces: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vertex>,
    faces: Vec<[usize; 3]>,
    /// `face_edges[f][k]` is the edge from corner `k` to corner `k + 1`.
    face_edges: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    face_centroid: Vec<Point2>,
    face_depth: Vec<f64>,
    lattice: Option<LatticeInfo>,
}

impl TriMesh {
    /// Builds a mesh from counter-clockwise faces. The face adjacency graph
    /// must be connected.
    pub fn from_parts(vertices: Vec<Vertex>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::param("mesh has no faces"));
        }
        let mut edge_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut face_edges = Vec::with_capacity(faces.len());
        for (f, tri) in faces.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::param(format!("face {f} references a missing vertex")));
            }
            let [a, b, c] = tri.map(|v| vertices[v].pos);
            if geometry::orient(a, b, c) <= 0.0 {
                return Err(Error::param(format!("face {f} is not counter-clockwise")));
            }
            let mut fe = [0; 3];
            for k in 0..3 {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                let key = (u.min(v), u.max(v));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        v: [key.0, key.1],
                        faces: [f, usize::MAX],
                        face_count: 0,
                    });
                    edges.len() - 1
                });
                let e = &mut edges[id];
                if e.face_count == 2 {
                    return Err(Error::param(format!("edge {u}-{v} is shared by more than two faces")));
                }
                e.faces[e.face_count as usize] = f;
                e.face_count += 1;
                fe[k] = id;
            }
            face_edges.push(fe);
        }
        // consistent orientation: the two faces of an interior edge run it in opposite directions
        for e in edges.iter().filter(|e| e.face_count == 2) {
            let dir = |f: usize| {
                let tri = faces[f];
                (0..3).any(|k| tri[k] == e.v[0] && tri[(k + 1) % 3] == e.v[1])
            };
            if dir(e.faces[0]) == dir(e.faces[1]) {
                return Err(Error::param(format!(
                    "faces {} and {} are inconsistently oriented",
                    e.faces[0], e.faces[1]
                )));
            }
        }
        let face_centroid = faces
            .iter()
            .map(|t| geometry::centroid(&t.map(|v| vertices[v].pos)))
            .collect();
        let face_depth = faces
            .iter()
            .map(|t| (vertices[t[0]].depth + vertices[t[1]].depth + vertices[t[2]].depth) / 3.0)
            .collect();
        let mesh = TriMesh {
            vertices,
            faces,
            face_edges,
            edges,
            face_centroid,
            face_depth,
            lattice: None,
        };
        let components = build_dual(&mesh).component_count(|_| true);
        if components != 1 {
            return Err(Error::FragmentedRoi { components });
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn face_edges(&self, f: usize) -> [usize; 3] {
        self.face_edges[f]
    }

    pub fn face_centroid(&self, f: usize) -> Point2 {
        self.face_centroid[f]
    }

    pub fn face_mean_depth(&self, f: usize) -> f64 {
        self.face_depth[f]
    }

    pub fn face_points(&self, f: usize) -> [Point2; 3] {
        self.faces[f].map(|v| self.vertices[v].pos)
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_points(f);
        0.5 * geometry::orient(a, b, c)
    }

    pub fn edge_segment(&self, e: usize) -> (Point2, Point2) {
        let [a, b] = self.edges[e].v;
        (self.vertices[a].pos, self.vertices[b].pos)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let (a, b) = self.edge_segment(e);
        a.dist(b)
    }

    /// Longest edge of face `f`.
    pub fn face_hypotenuse(&self, f: usize) -> f64 {
        self.face_edges[f]
            .iter()
            .map(|&e| self.edge_length(e))
            .fold(0.0, f64::max)
    }

    pub fn lattice(&self) -> Option<&LatticeInfo> {
        self.lattice.as_ref()
    }

    /// Area-weighted mean of face depths over the whole mesh.
    pub fn mean_depth(&self) -> f64 {
        let (num, den) = (0..self.face_count()).fold((0.0, 0.0), |(n, d), f| {
            let a = self.face_area(f);
            (n + a * self.face_depth[f], d + a)
        });
        num / den
    }

    pub fn interior_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.face_count == 2).count()
    }

    /// Writes the mesh as OFF text with `x y depth` vertex lines.
    pub fn write_off(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "OFF")?;
        writeln!(out, "{} {} {}", self.vertices.len(), self.faces.len(), self.edges.len())?;
        for v in &self.vertices {
            writeln!(out, "{:.6} {:.6} {:.6}", v.pos.x, v.pos.y, v.depth)?;
        }
        for t in &self.faces {
            writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

/// Swath width from beam count and sounding resolution.
pub fn footprint_target(n_beams: usize, resolution: f64) -> Result<f64> {
    if n_beams < 2 {
        return Err(Error::param("at least 2 beams are required"));
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::param("resolution must be positive"));
    }
    Ok(n_beams as f64 * resolution)
}

/// Lattice leg length for footprint `w`: hypotenuse `2w(1 - shrink)`.
pub fn lattice_leg(w: f64, shrink: f64) -> f64 {
    2.0 * w * (1.0 - shrink) / std::f64::consts::SQRT_2
}

/// Remeshes the ROI into right isosceles triangles sized to the footprint `w`.
/// How each lattice square is split into two triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Diagonals {
    /// Diagonal direction alternates per square; vertices have degree 4 or 8.
    #[default]
    Alternating,
    /// Every square split along the same diagonal; interior vertices have degree 6.
    Uniform,
}

impl std::str::FromStr for Diagonals {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alternating" => Ok(Diagonals::Alternating),
            "uniform" => Ok(Diagonals::Uniform),
            other => Err(Error::param(format!(
                "unknown diagonal layout {other:?}; expected alternating or uniform"
            ))),
        }
    }
}

pub fn remesh(hf: &Heightfield, roi: &RoiPolygon, w: f64, shrink: f64) -> Result<TriMesh> {
    remesh_with(hf, roi, w, shrink, Diagonals::default())
}

pub fn remesh_with(hf: &Heightfield, roi: &RoiPolygon, w: f64, shrink: f64, diagonals: Diagonals) -> Result<TriMesh> {
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::param("footprint must be positive"));
    }
    if !(shrink > 0.0 && shrink < 0.5) {
        return Err(Error::param("shrink must lie in (0, 0.5)"));
    }
    roi.check_inside(hf)?;
    let leg = lattice_leg(w, shrink);
    let (lo, hi) = roi.bbox();
    let count = |len: f64| ((len / leg - 1e-9).ceil() as usize).max(1);
    let (ncx, ncy) = (count(hi.x - lo.x), count(hi.y - lo.y));
    let node = |i: usize, j: usize| Point2::new(lo.x + i as f64 * leg, lo.y + j as f64 * leg);
    let key = |i: usize, j: usize| j * (ncx + 1) + i;

    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut dropped = 0;
    for cj in 0..ncy {
        for ci in 0..ncx {
            let (v00, v10, v01, v11) = ((ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1));
            let tris = if diagonals == Diagonals::Uniform || (ci + cj) % 2 == 0 {
                [[v00, v10, v11], [v00, v11, v01]]
            } else {
                [[v00, v10, v01], [v10, v11, v01]]
            };
            for tri in tris {
                let pts = tri.map(|(i, j)| node(i, j));
                if !roi.contains(geometry::centroid(&pts)) {
                    if pts.iter().any(|p| roi.contains(*p)) {
                        dropped += 1;
                    }
                    continue;
                }
                let mut idx = [0; 3];
                for (k, &(i, j)) in tri.iter().enumerate() {
                    let next = vertices.len();
                    idx[k] = *remap.entry(key(i, j)).or_insert(next);
                    if idx[k] == next {
                        let p = node(i, j);
                        let depth = hf.depth_at_clamped(p.x, p.y);
                        if !depth.is_finite() {
                            return Err(Error::param(format!(
                                "no depth data near mesh vertex ({}, {})",
                                p.x, p.y
                            )));
                        }
                        vertices.push(Vertex { pos: p, depth });
                    }
                }
                faces.push(idx);
            }
        }
    }
    if faces.is_empty() {
        return Err(Error::RoiUnderResolved { footprint: w });
    }
    let mut mesh = TriMesh::from_parts(vertices, faces)?;
    mesh.lattice = Some(LatticeInfo {
        origin: lo,
        leg,
        hypotenuse: leg * std::f64::consts::SQRT_2,
        dropped_faces: dropped,
    });
    Ok(mesh)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualLink {
    pub face: usize,
    pub edge: usize,
}

/// Face adjacency graph; one link per interior mesh edge.
#[derive(Debug, Clone, PartialEq)]
pub struct DualGraph {
    adj: Vec<Vec<DualLink>>,
}

impl DualGraph {
    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Neighbors of `f`, in ascending face order.
    pub fn neighbors(&self, f: usize) -> &[DualLink] {
        &self.adj[f]
    }

    pub fn degree(&self, f: usize) -> usize {
        self.adj[f].len()
    }

    pub fn link_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Connected components when only links with `keep(edge)` are used.
    pub fn component_count(&self, keep: impl Fn(usize) -> bool) -> usize {
        let n = self.adj.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(f) = stack.pop() {
                for l in &self.adj[f] {
                    if !seen[l.face] && keep(l.edge) {
                        seen[l.face] = true;
                        stack.push(l.face);
                    }
                }
            }
        }
        count
    }
}

pub fn build_dual(mesh: &TriMesh) -> DualGraph {
    let mut adj = vec![Vec::new(); mesh.face_count()];
    for (id, e) in mesh.edges.iter().enumerate() {
        if e.face_count == 2 {
            let [a, b] = e.faces;
            adj[a].push(DualLink { face: b, edge: id });
            adj[b].push(DualLink { face: a, edge: id });
        }
    }
    for links in &mut adj {
        links.sort_by_key(|l| (l.face, l.edge));
    }
    DualGraph { adj }
}

/// One corner quadrilateral of a face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    /// Corner vertex, midpoint of the outgoing edge, face centroid, midpoint of the incoming edge.
    pub corners: [Point2; 4],
    pub centroid: Point2,
    /// Mesh vertex at the quad's corner.
    pub vertex: usize,
    /// Mesh edges whose half the quad touches: `[outgoing, incoming]`.
    pub edges: [usize; 2],
}

impl Quad {
    pub fn area(&self) -> f64 {
        geometry::signed_area(&self.corners)
    }
}

/// The three corner quads of a face, in counter-clockwise order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceQuads {
    pub face: usize,
    pub quads: [Quad; 3],
}

pub fn subdivide_quads(mesh: &TriMesh, face: usize) -> FaceQuads {
    let tri = mesh.faces[face];
    let pts = mesh.face_points(face);
    let fe = mesh.face_edges[face];
    let c = mesh.face_centroid[face];
    let quads = std::array::from_fn(|k| {
        let prev = (k + 2) % 3;
        let corners = [pts[k], pts[k].midpoint(pts[(k + 1) % 3]), c, pts[prev].midpoint(pts[k])];
        Quad {
            corners,
            centroid: geometry::centroid(&corners),
            vertex: tri[k],
            edges: [fe[k], fe[prev]],
        }
    });
    FaceQuads { face, quads }
}

pub fn subdivide_all(mesh: &TriMesh) -> Vec<FaceQuads> {
    (0..mesh.face_count()).map(|f| subdivide_quads(mesh, f)).collect()
}
