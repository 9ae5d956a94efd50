use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::mesh::{DualGraph, TriMesh};

/// Breadth-first spanning tree of the face adjacency graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonTree {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    /// Mesh edge linking each face to its parent.
    pub parent_edge: Vec<Option<usize>>,
    pub edges: BTreeSet<usize>,
}

impl SkeletonTree {
    pub fn face_count(&self) -> usize {
        self.parent.len()
    }

    pub fn contains_edge(&self, e: usize) -> bool {
        self.edges.contains(&e)
    }
}

/// Spanning tree rooted at `seed`, skipping links across `blocked` edges.
/// Neighbours are expanded in ascending face id.
pub fn build_skeleton(dual: &DualGraph, blocked: &BTreeSet<usize>, seed: usize) -> Result<SkeletonTree> {
    let n = dual.node_count();
    if seed >= n {
        return Err(Error::param(format!(
            "seed face {seed} out of range (mesh has {n} faces)"
        )));
    }
    let mut parent = vec![None; n];
    let mut parent_edge = vec![None; n];
    let mut seen = vec![false; n];
    let mut edges = BTreeSet::new();
    let mut queue = VecDeque::from([seed]);
    seen[seed] = true;
    while let Some(f) = queue.pop_front() {
        for link in dual.neighbors(f) {
            if seen[link.face] || blocked.contains(&link.edge) {
                continue;
            }
            seen[link.face] = true;
            parent[link.face] = Some(f);
            parent_edge[link.face] = Some(link.edge);
            edges.insert(link.edge);
            queue.push_back(link.face);
        }
    }
    if let Some(face) = seen.iter().position(|s| !s) {
        return Err(Error::UnreachableRegion { face, region: None });
    }
    Ok(SkeletonTree {
        root: seed,
        parent,
        parent_edge,
        edges,
    })
}

/// Post-processing step applied to a skeleton before circumnavigation.
pub trait SkeletonRefinement {
    fn refine(&self, mesh: &TriMesh, tree: SkeletonTree) -> SkeletonTree;
}

/// Leaves the tree untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoRefinement;

impl SkeletonRefinement for NoRefinement {
    fn refine(&self, _mesh: &TriMesh, tree: SkeletonTree) -> SkeletonTree {
        tree
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::mesh::{build_dual, Vertex};

    fn strip(n: usize) -> TriMesh {
        // 2n triangles in a 1-high strip
        let mut vs = Vec::new();
        for i in 0..=n {
            vs.push(Vertex {
                pos: Point2::new(i as f64, 0.0),
                depth: 1.0,
            });
            vs.push(Vertex {
                pos: Point2::new(i as f64, 1.0),
                depth: 1.0,
            });
        }
        let mut fs = Vec::new();
        for i in 0..n {
            let (a, b, c, d) = (2 * i, 2 * i + 2, 2 * i + 3, 2 * i + 1);
            fs.push([a, b, c]);
            fs.push([a, c, d]);
        }
        TriMesh::from_parts(vs, fs).unwrap()
    }

    #[test]
    fn two_faces_single_link() {
        let m = strip(1);
        let t = build_skeleton(&build_dual(&m), &BTreeSet::new(), 0).unwrap();
        assert_eq!(t.edges.len(), 1);
        assert_eq!(t.parent, vec![None, Some(0)]);
    }

    #[test]
    fn spanning_tree_size_and_acyclic() {
        let m = strip(7);
        let dual = build_dual(&m);
        let t = build_skeleton(&dual, &BTreeSet::new(), 3).unwrap();
        assert_eq!(t.edges.len(), m.face_count() - 1);
        for f in 0..m.face_count() {
            let mut cur = f;
            let mut steps = 0;
            while let Some(p) = t.parent[cur] {
                cur = p;
                steps += 1;
                assert!(steps <= m.face_count());
            }
            assert_eq!(cur, 3);
        }
    }

    #[test]
    fn blocked_cut_is_unreachable() {
        let m = strip(2);
        let dual = build_dual(&m);
        // the edge between the two squares separates the strip
        let cut: BTreeSet<usize> = (0..m.edges().len())
            .filter(|&e| {
                let (a, b) = m.edge_segment(e);
                a.x == 1.0 && b.x == 1.0
            })
            .collect();
        assert_eq!(cut.len(), 1);
        match build_skeleton(&dual, &cut, 0) {
            Err(Error::UnreachableRegion { face, .. }) => assert!(face >= 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_seed() {
        let m = strip(1);
        assert!(build_skeleton(&build_dual(&m), &BTreeSet::new(), 9).is_err());
    }
}
