//! Coverage path planners: the mesh based NUC/MDNUC tours and the
//! back-and-forth baselines.

mod bf;
mod nuc;
mod path;
mod skeleton;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use bf::{plan_bf, plan_mdbf, region_outline, Heading};
pub use nuc::{circumnavigate, plan_mdnuc, plan_mdnuc_with, plan_nuc, plan_nuc_with};
pub use path::{CoveragePath, Provenance, Waypoint};
pub use skeleton::{build_skeleton, NoRefinement, SkeletonRefinement, SkeletonTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Bf,
    Mdbf,
    Nuc,
    Mdnuc,
}

impl PlannerKind {
    /// Table column order.
    pub const ALL: [PlannerKind; 4] = [PlannerKind::Bf, PlannerKind::Mdbf, PlannerKind::Nuc, PlannerKind::Mdnuc];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Bf => "bf",
            PlannerKind::Mdbf => "mdbf",
            PlannerKind::Nuc => "nuc",
            PlannerKind::Mdnuc => "mdnuc",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PlannerKind::Bf => "B&F",
            PlannerKind::Mdbf => "MDB&F",
            PlannerKind::Nuc => "NUC",
            PlannerKind::Mdnuc => "MDNUC",
        }
    }

    pub fn uses_depth_ranges(self) -> bool {
        matches!(self, PlannerKind::Mdbf | PlannerKind::Mdnuc)
    }
}

impl std::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown planner {s:?} (bf, mdbf, nuc, mdnuc)")))
    }
}
