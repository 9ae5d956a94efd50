//! End-to-end glue: terrain → mesh → partition → paths → coverage report.

use std::time::Instant;

use log::info;

use crate::config::RunConfig;
use crate::coverage::{evaluate, simulate, CoverageGrid, Report};
use crate::error::Result;
use crate::mesh::{build_dual, remesh_with, DualGraph, TriMesh};
use crate::partition::Partition;
use crate::planner::{
    plan_bf, plan_mdbf, plan_mdnuc_with, plan_nuc_with, CoveragePath, NoRefinement, PlannerKind, Provenance,
};
use crate::terrain::{Heightfield, RoiPolygon};

/// Everything a planner needs, built once per configuration.
#[derive(Debug, Clone)]
pub struct Scene {
    pub hf: Heightfield,
    pub roi: RoiPolygon,
    pub mesh: TriMesh,
    pub dual: DualGraph,
    /// Depth-range partition used by the multi-depth planners.
    pub partition: Partition,
    /// Single-region partition used by the constant-angle planners.
    pub whole: Partition,
}

impl Scene {
    pub fn build(cfg: &RunConfig) -> Result<Scene> {
        let roi_hint = if cfg.roi.is_empty() {
            None
        } else {
            Some(RoiPolygon::new(cfg.roi.clone())?)
        };
        let hf = cfg.terrain.build(roi_hint.as_ref())?;
        Self::from_heightfield(cfg, hf)
    }

    pub fn from_heightfield(cfg: &RunConfig, hf: Heightfield) -> Result<Scene> {
        let roi = cfg.roi(&hf)?;
        let mesh = remesh_with(&hf, &roi, cfg.footprint(), cfg.mesh.shrink, cfg.mesh.diagonals)?;
        let dual = build_dual(&mesh);
        let ranges = cfg.depth.ranges(&mesh)?;
        let partition = Partition::build(&mesh, &ranges, cfg.mesh.slope_mode)?;
        let whole = Partition::single(&mesh);
        info!(
            "mesh: {} faces, {} regions, {} gates",
            mesh.face_count(),
            partition.region_count(),
            partition.gates.len()
        );
        Ok(Scene {
            hf,
            roi,
            mesh,
            dual,
            partition,
            whole,
        })
    }

    pub fn partition_for(&self, kind: PlannerKind) -> &Partition {
        if kind.uses_depth_ranges() {
            &self.partition
        } else {
            &self.whole
        }
    }

    /// Paths for `kind`; one per region for MDB&F, a single one otherwise.
    pub fn plan(&self, cfg: &RunConfig, kind: PlannerKind) -> Result<Vec<CoveragePath>> {
        let w = cfg.footprint();
        let mean = self.mesh.mean_depth();
        let mut paths = match kind {
            PlannerKind::Bf => vec![plan_bf(&self.roi, w, cfg.mesh.heading, &cfg.sonar, mean)?],
            PlannerKind::Mdbf => plan_mdbf(&self.partition, &self.mesh, w, cfg.mesh.heading, &cfg.sonar)?,
            PlannerKind::Nuc => vec![plan_nuc_with(
                &self.mesh,
                &self.dual,
                &cfg.sonar,
                mean,
                cfg.mesh.seed_face,
                &NoRefinement,
            )?],
            PlannerKind::Mdnuc => vec![plan_mdnuc_with(
                &self.mesh,
                &self.dual,
                &self.partition,
                &cfg.sonar,
                cfg.mesh.seed_face,
                &NoRefinement,
            )?],
        };
        let prov = Provenance {
            planner: kind.name().to_string(),
            config_hash: cfg.hash(),
        };
        for p in &mut paths {
            p.provenance = prov.clone();
        }
        Ok(paths)
    }

    pub fn simulate(&self, cfg: &RunConfig, paths: &[CoveragePath]) -> Result<CoverageGrid> {
        simulate(&self.hf, &self.roi, paths, &cfg.sonar, &cfg.sim_params())
    }

    /// Simulates and evaluates `paths`, filling in scenario and timing.
    pub fn survey(&self, cfg: &RunConfig, paths: &[CoveragePath]) -> Result<(CoverageGrid, Report)> {
        let start = Instant::now();
        let grid = self.simulate(cfg, paths)?;
        let mut report = evaluate(&grid, paths)?;
        report.scenario = cfg.scenario.clone();
        report.config_hash = cfg.hash();
        report.wall_time = start.elapsed().as_secs_f64();
        Ok((grid, report))
    }

    /// Plans with `kind` and surveys the result.
    pub fn run(&self, cfg: &RunConfig, kind: PlannerKind) -> Result<(Vec<CoveragePath>, CoverageGrid, Report)> {
        let start = Instant::now();
        let paths = self.plan(cfg, kind)?;
        let (grid, mut report) = self.survey(cfg, &paths)?;
        report.planner = kind.name().to_string();
        report.wall_time = start.elapsed().as_secs_f64();
        Ok((paths, grid, report))
    }
}
