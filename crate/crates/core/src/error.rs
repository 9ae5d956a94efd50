use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("query ({x}, {y}) is outside the heightfield domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("ROI under-resolved: no face centroid falls inside the ROI; try a smaller footprint (w = {footprint} m)")]
    RoiUnderResolved { footprint: f64 },

    #[error("fragmented ROI: the kept faces form {components} disconnected pieces")]
    FragmentedRoi { components: usize },

    #[error("uncovered depth: face {face} has mean depth {depth} m outside every depth range")]
    UncoveredDepth { face: usize, depth: f64 },

    #[error("unreachable region: face {face} cannot be reached from the seed face{}", region_hint(*.region))]
    UnreachableRegion { face: usize, region: Option<usize> },

    #[error("empty path")]
    EmptyPath,

    #[error("coverage mask is empty: no evaluation cell center lies inside the ROI")]
    EmptyMask,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn region_hint(region: Option<usize>) -> String {
    match region {
        Some(r) => format!(" (region {r} has no usable gate)"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: msg.into(),
        }
    }
}
