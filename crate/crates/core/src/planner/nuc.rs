use std::collections::BTreeSet;

use log::warn;

use crate::error::{Error, Result};
use crate::mesh::{subdivide_all, DualGraph, FaceQuads, TriMesh};
use crate::partition::Partition;
use crate::sonar::{opening_angle, SonarConfig};

use super::path::{CoveragePath, Provenance, Waypoint};
use super::skeleton::{build_skeleton, NoRefinement, SkeletonRefinement, SkeletonTree};

/// Closed walk through every quad centroid, wrapping counter-clockwise around
/// the skeleton tree. Waypoints carry face ids; angles are left at zero.
pub fn circumnavigate(mesh: &TriMesh, tree: &SkeletonTree, quads: &[FaceQuads]) -> CoveragePath {
    let nf = mesh.face_count();
    assert_eq!(quads.len(), nf, "one quad triple per face");
    assert_eq!(tree.face_count(), nf, "tree spans the mesh");

    let root = tree.root;
    let fe = mesh.face_edges(root);
    // start where the predecessor quad is in the same face, so the walk
    // begins at the start of a run within the seed face
    let k0 = (0..3).find(|&k| !tree.contains_edge(fe[(k + 2) % 3])).unwrap_or(0);

    let total = 3 * nf;
    let mut visited = vec![false; total];
    let mut waypoints = Vec::with_capacity(total);
    let (mut f, mut k) = (root, k0);
    for _ in 0..total {
        let slot = 3 * f + k;
        assert!(!visited[slot], "quad ({f},{k}) visited twice");
        visited[slot] = true;
        let mut w = Waypoint::new(quads[f].quads[k].centroid, 0.0, 0);
        w.face = Some(f);
        waypoints.push(w);

        let e = mesh.face_edges(f)[k];
        if tree.contains_edge(e) {
            let v = mesh.faces()[f][k];
            let g = mesh.edge(e).other_face(f).expect("tree edge is interior");
            let j = mesh.faces()[g].iter().position(|&u| u == v).expect("shared vertex");
            f = g;
            k = j;
        } else {
            k = (k + 1) % 3;
        }
    }
    assert_eq!((f, k), (root, k0), "walk did not close");
    assert!(visited.iter().all(|&v| v), "quad left unvisited");

    CoveragePath::new(
        waypoints,
        true,
        Provenance {
            planner: String::new(),
            config_hash: String::new(),
        },
    )
}

fn provenance(name: &str) -> Provenance {
    Provenance {
        planner: name.to_string(),
        config_hash: String::new(),
    }
}

pub fn plan_nuc(mesh: &TriMesh, dual: &DualGraph, sonar: &SonarConfig, global_mean_depth: f64) -> Result<CoveragePath> {
    plan_nuc_with(mesh, dual, sonar, global_mean_depth, 0, &NoRefinement)
}

pub fn plan_nuc_with(
    mesh: &TriMesh,
    dual: &DualGraph,
    sonar: &SonarConfig,
    global_mean_depth: f64,
    seed_face: usize,
    refine: &dyn SkeletonRefinement,
) -> Result<CoveragePath> {
    let theta = opening_angle(sonar.footprint(), global_mean_depth, sonar.theta_max_deg)?;
    let tree = build_skeleton(dual, &BTreeSet::new(), seed_face)?;
    let tree = refine.refine(mesh, tree);
    let mut path = circumnavigate(mesh, &tree, &subdivide_all(mesh));
    for w in &mut path.waypoints {
        w.theta_deg = theta;
    }
    path.recompute_switches();
    path.provenance = provenance("nuc");
    Ok(path)
}

pub fn plan_mdnuc(
    mesh: &TriMesh,
    dual: &DualGraph,
    partition: &Partition,
    sonar: &SonarConfig,
) -> Result<CoveragePath> {
    plan_mdnuc_with(mesh, dual, partition, sonar, 0, &NoRefinement)
}

pub fn plan_mdnuc_with(
    mesh: &TriMesh,
    dual: &DualGraph,
    partition: &Partition,
    sonar: &SonarConfig,
    seed_face: usize,
    refine: &dyn SkeletonRefinement,
) -> Result<CoveragePath> {
    let w = sonar.footprint();
    let thetas = partition
        .regions
        .iter()
        .map(|r| opening_angle(w, r.mean_depth, sonar.theta_max_deg))
        .collect::<Result<Vec<_>>>()?;
    let tree = build_skeleton(dual, &partition.blocked, seed_face).map_err(|e| match e {
        Error::UnreachableRegion { face, .. } => Error::UnreachableRegion {
            face,
            region: Some(partition.region_of_face(face)),
        },
        other => other,
    })?;
    let tree = refine.refine(mesh, tree);
    for (pair, gate) in &partition.gates {
        if !tree.contains_edge(*gate) {
            warn!("gate unused: edge {gate} between regions {} and {}", pair.0, pair.1);
        }
    }
    let mut path = circumnavigate(mesh, &tree, &subdivide_all(mesh));
    for wp in &mut path.waypoints {
        let r = partition.region_of_face(wp.face.expect("quad waypoint"));
        wp.region = r;
        wp.theta_deg = thetas[r];
    }
    path.recompute_switches();
    path.provenance = provenance("mdnuc");
    Ok(path)
}
