//! Run configuration: one TOML file per experiment, plus the shipped presets.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coverage::SimParams;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::mesh::{Diagonals, TriMesh, DEFAULT_SHRINK};
use crate::partition::SlopeMode;
use crate::planner::{Heading, PlannerKind};
use crate::sonar::SonarConfig;
use crate::terrain::{
    gen_channel, gen_saddle, gen_shaft, load_grid, ChannelAxis, ChannelParams, DepthRange, Extent, GridFormat,
    Heightfield, LoadOptions, RoiPolygon, SaddleParams, ShaftParams,
};

pub const PRESETS: [&str; 3] = ["shaft", "saddle", "channel"];

/// Where the heightfield comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TerrainSpec {
    Shaft(ShaftParams),
    Saddle(SaddleParams),
    Channel(ChannelParams),
    File(FileTerrain),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileTerrain {
    pub path: PathBuf,
    pub format: GridFormat,
    #[serde(default)]
    pub values_are_elevation: bool,
}

impl TerrainSpec {
    pub fn build(&self, roi: Option<&RoiPolygon>) -> Result<Heightfield> {
        match self {
            TerrainSpec::Shaft(p) => gen_shaft(p),
            TerrainSpec::Saddle(p) => gen_saddle(p),
            TerrainSpec::Channel(p) => gen_channel(p),
            TerrainSpec::File(f) => {
                let file = File::open(&f.path)
                    .map_err(|e| Error::Config(format!("cannot open terrain {}: {e}", f.path.display())))?;
                let opts = LoadOptions {
                    values_are_elevation: f.values_are_elevation,
                    roi: roi.cloned(),
                };
                load_grid(BufReader::new(file), f.format, &opts)
            }
        }
    }

    pub fn cell_size_mut(&mut self) -> Option<&mut f64> {
        match self {
            TerrainSpec::Shaft(p) => Some(&mut p.cell_size),
            TerrainSpec::Saddle(p) => Some(&mut p.cell_size),
            TerrainSpec::Channel(p) => Some(&mut p.cell_size),
            TerrainSpec::File(_) => None,
        }
    }
}

/// Depth ranges for the multi-depth planners, spanning the mesh's face depths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DepthConfig {
    /// Interior split depths, increasing. Splits outside the mesh's depth span are dropped.
    pub splits: Vec<f64>,
    /// Number of equal-height ranges; used when `splits` is empty.
    pub count: Option<usize>,
}

impl DepthConfig {
    pub fn ranges(&self, mesh: &TriMesh) -> Result<Vec<DepthRange>> {
        let (lo, hi) = (0..mesh.face_count())
            .map(|f| mesh.face_mean_depth(f))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), d| (l.min(d), h.max(d)));
        if !(hi > lo) {
            return DepthRange::new(lo, lo + 1.0).map(|r| vec![r]);
        }
        if self.splits.is_empty() {
            return DepthRange::equal(lo, hi, self.count.unwrap_or(1));
        }
        let inside: Vec<f64> = self.splits.iter().copied().filter(|&s| s > lo && s < hi).collect();
        if inside.len() < self.splits.len() {
            warn!("dropping depth splits outside the mesh depth span [{lo:.3}, {hi:.3}]");
        }
        DepthRange::from_splits(lo, hi, &inside)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    /// Fraction the triangle hypotenuse is shortened below twice the footprint.
    pub shrink: f64,
    pub slope_mode: SlopeMode,
    /// Track direction of the back-and-forth planners.
    pub heading: Heading,
    /// Root face of the coverage skeleton.
    pub seed_face: usize,
    pub diagonals: Diagonals,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            shrink: DEFAULT_SHRINK,
            slope_mode: SlopeMode::default(),
            heading: Heading::default(),
            seed_face: 0,
            diagonals: Diagonals::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Evaluation cell size; the sonar resolution when unset.
    pub eval_resolution: Option<f64>,
    /// Ping spacing along the path; overrides `pings_per_cell`.
    pub ping_spacing: Option<f64>,
    /// Pings per evaluation cell length when no spacing is given; 1 when unset.
    pub pings_per_cell: Option<u32>,
    pub noise_std: f64,
    pub seed: u64,
    /// Keep the sonar off on back-and-forth connectors.
    pub connectors_inactive: bool,
    /// Path length over which the heading turns through a corner; a quarter
    /// of the footprint when unset.
    pub turn_window: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_scenario")]
    pub scenario: String,
    #[serde(default = "default_terrain")]
    pub terrain: TerrainSpec,
    /// ROI polygon; the whole heightfield extent when empty.
    #[serde(default)]
    pub roi: Vec<Point2>,
    #[serde(default)]
    pub depth: DepthConfig,
    #[serde(default)]
    pub sonar: SonarConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub sim: SimConfig,
    /// Planner used by `plan` and `survey`.
    #[serde(default = "default_planner")]
    pub planner: PlannerKind,
    /// Planners run by `compare`.
    #[serde(default = "default_planners")]
    pub planners: Vec<PlannerKind>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_scenario() -> String {
    "shaft".into()
}

fn default_terrain() -> TerrainSpec {
    shaft_terrain(1.0)
}

fn default_planner() -> PlannerKind {
    PlannerKind::Mdnuc
}

fn default_planners() -> Vec<PlannerKind> {
    PlannerKind::ALL.to_vec()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        preset("shaft").expect("shaft preset exists")
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        // relative terrain paths are relative to the config file
        if let TerrainSpec::File(f) = &mut cfg.terrain {
            if f.path.is_relative() {
                if let Some(dir) = path.parent() {
                    f.path = dir.join(&f.path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.sonar.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.mesh.shrink > 0.0 && self.mesh.shrink < 0.5) {
            return Err(Error::Config("mesh.shrink must lie in (0, 0.5)".into()));
        }
        if self.planners.is_empty() {
            return Err(Error::Config("planners must not be empty".into()));
        }
        if self.depth.count == Some(0) {
            return Err(Error::Config("depth.count must be at least 1".into()));
        }
        self.sim_params().validate().map_err(|e| Error::Config(e.to_string()))?;
        if !self.roi.is_empty() {
            RoiPolygon::new(self.roi.clone()).map_err(|e| Error::Config(format!("roi: {e}")))?;
        }
        Ok(())
    }

    /// Canonical TOML rendering; parsing it yields the same config.
    pub fn to_canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form, ignoring the output directory and the
    /// single-planner selection.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.planner = PlannerKind::Mdnuc;
        let digest = Sha256::digest(c.to_canonical_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            eval_resolution: self.sim.eval_resolution.unwrap_or(self.sonar.resolution),
            ping_spacing: self.sim.ping_spacing,
            pings_per_cell: self.sim.pings_per_cell.unwrap_or(1),
            noise_std: self.sim.noise_std,
            seed: self.sim.seed,
            connectors_active: !self.sim.connectors_inactive,
            turn_window: self.sim.turn_window,
        }
    }

    pub fn roi(&self, hf: &Heightfield) -> Result<RoiPolygon> {
        if self.roi.is_empty() {
            Ok(hf.extent_roi())
        } else {
            RoiPolygon::new(self.roi.clone())
        }
    }

    pub fn footprint(&self) -> f64 {
        self.sonar.footprint()
    }
}

// ---------------------------------------------------------------------------
// Presets

const EXTENT: f64 = 360.0;
const ROI_MIN: f64 = 8.0;
/// Ten lattice squares at 10 cm and four at 25 cm fit in this side length.
const ROI_SIDE: f64 = 343.9;

fn preset_roi() -> Vec<Point2> {
    let (a, b) = (ROI_MIN, ROI_MIN + ROI_SIDE);
    vec![
        Point2::new(a, a),
        Point2::new(b, a),
        Point2::new(b, b),
        Point2::new(a, b),
    ]
}

fn shaft_terrain(cell_size: f64) -> TerrainSpec {
    TerrainSpec::Shaft(ShaftParams {
        extent: Extent {
            width: EXTENT,
            height: EXTENT,
        },
        plain_depth: 6.0,
        pit_depth: 36.0,
        pit_center: Point2::new(180.0, 180.0),
        pit_radius: 60.0,
        wall_smoothing: 10.0,
        cell_size,
    })
}

fn saddle_terrain(cell_size: f64) -> TerrainSpec {
    TerrainSpec::Saddle(SaddleParams {
        extent: Extent {
            width: EXTENT,
            height: EXTENT,
        },
        base_depth: 20.0,
        amplitude: 12.0,
        cell_size,
    })
}

fn channel_terrain(cell_size: f64) -> TerrainSpec {
    TerrainSpec::Channel(ChannelParams {
        extent: Extent {
            width: EXTENT,
            height: EXTENT,
        },
        shallow_depth: 7.0,
        deep_depth: 22.0,
        axis: ChannelAxis {
            through: Point2::new(180.0, 180.0),
            angle_deg: 45.0,
        },
        channel_width: 174.0,
        cell_size,
    })
}

/// Shipped scenario presets at 10 cm sonar resolution.
pub fn preset(name: &str) -> Result<RunConfig> {
    let (terrain, depth) = match name {
        "shaft" => (
            shaft_terrain(1.0),
            DepthConfig {
                splits: vec![18.0],
                count: None,
            },
        ),
        "saddle" => (
            saddle_terrain(1.0),
            DepthConfig {
                splits: Vec::new(),
                count: Some(4),
            },
        ),
        "channel" => (
            channel_terrain(1.0),
            DepthConfig {
                splits: vec![15.0],
                count: None,
            },
        ),
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; available presets: {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(RunConfig {
        scenario: name.to_string(),
        terrain,
        roi: preset_roi(),
        depth,
        sonar: SonarConfig::default(),
        mesh: MeshConfig {
            diagonals: Diagonals::Uniform,
            ..MeshConfig::default()
        },
        sim: SimConfig {
            pings_per_cell: Some(2),
            ..SimConfig::default()
        },
        planner: default_planner(),
        planners: default_planners(),
        output_dir: default_output_dir(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            let text = cfg.to_canonical_toml();
            let back = RunConfig::from_toml(&text).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.to_canonical_toml(), text);
        }
    }

    #[test]
    fn empty_file_takes_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg.planner, PlannerKind::Mdnuc);
        assert_eq!(cfg.sonar.n_beams, 256);
        assert_eq!(cfg.sim_params().eval_resolution, 0.10);
        assert_eq!(cfg.sim_params().ping_spacing(), 0.10);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("bogus = 1").is_err());
        assert!(RunConfig::from_toml("[sonar]\nbeams = 3").is_err());
        let t = "[terrain]\nkind = \"saddle\"\nbase_depth = 20.0\namplitude = 5.0\ncell_size = 1.0\nwobble = 2\n\
                 [terrain.extent]\nwidth = 10.0\nheight = 10.0\n";
        assert!(RunConfig::from_toml(t).is_err());
    }

    #[test]
    fn terrain_variants_parse() {
        let t = "[terrain]\nkind = \"saddle\"\nbase_depth = 20.0\namplitude = 5.0\ncell_size = 1.0\n\
                 [terrain.extent]\nwidth = 10.0\nheight = 10.0\n";
        let cfg = RunConfig::from_toml(t).unwrap();
        assert!(matches!(cfg.terrain, TerrainSpec::Saddle(_)));
        let t = "[terrain]\nkind = \"file\"\npath = \"a.asc\"\nformat = \"esri-ascii\"\n";
        assert!(matches!(RunConfig::from_toml(t).unwrap().terrain, TerrainSpec::File(_)));
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = preset("shaft").unwrap();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        b.planner = PlannerKind::Bf;
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        b.sonar.n_beams = 128;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn unknown_preset_lists_names() {
        let e = preset("volcano").unwrap_err().to_string();
        assert!(e.contains("shaft, saddle, channel"));
    }
}
