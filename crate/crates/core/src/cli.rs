//! The `mdnuc` command line: gen, plan, survey and compare.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 terrain
//! generation or loading error, 4 planning error (including unreachable
//! regions), 5 simulation or evaluation error.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{preset, RunConfig, PRESETS};
use crate::coverage::{compare, Report};
use crate::error::Error;
use crate::mesh::Diagonals;
use crate::pipeline::Scene;
use crate::planner::{CoveragePath, Heading, PlannerKind, Provenance};
use crate::sonar::opening_angle;
use crate::terrain::{save_grid, GridFormat};

pub const OUT_DIR_ENV: &str = "MDNUC_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "mdnuc",
    version,
    about = "Depth-aware coverage path planning for multibeam surveys"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    /// Worker threads for ray casting and for independent compare runs; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the configured terrain and write it as an ESRI ASCII grid.
    Gen(GenArgs),
    /// Build the mesh and partition and plan a coverage path.
    Plan(RunArgs),
    /// Simulate a survey of a path and write the coverage report.
    Survey(SurveyArgs),
    /// Tabulate coverage per planner from reports, configs or presets.
    Compare(CompareArgs),
}

/// Configuration source and overrides shared by every subcommand. Flags win
/// over the configuration file.
#[derive(Debug, Args, Clone, Default)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(short, long, value_name = "FILE", conflicts_with = "preset")]
    pub config: Option<PathBuf>,

    /// Shipped scenario preset: shaft, saddle or channel.
    #[arg(short, long, value_name = "NAME")]
    pub preset: Option<String>,

    /// Output directory [default: output_dir from the config, "out"].
    #[arg(short, long, value_name = "DIR", env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,

    /// Planner for plan and survey: bf, mdbf, nuc or mdnuc [default: mdnuc].
    #[arg(long, value_name = "NAME")]
    pub planner: Option<PlannerKind>,

    /// Sonar sounding resolution in meters [default: 0.10].
    #[arg(long, value_name = "M")]
    pub resolution: Option<f64>,

    /// Evaluation grid cell size in meters [default: the sonar resolution].
    #[arg(long, value_name = "M")]
    pub eval_resolution: Option<f64>,

    /// Distance between pings along the path in meters [default: eval resolution / pings per cell].
    #[arg(long, value_name = "M")]
    pub ping_spacing: Option<f64>,

    /// Pings per evaluation cell length [default: 1].
    #[arg(long, value_name = "N")]
    pub pings_per_cell: Option<u32>,

    /// Cross-track noise standard deviation in meters [default: 0].
    #[arg(long, value_name = "M")]
    pub noise_std: Option<f64>,

    /// Noise seed [default: 0].
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,

    /// Depth split points in meters, comma separated [default: none].
    #[arg(long, value_name = "D,..", value_delimiter = ',')]
    pub splits: Option<Vec<f64>>,

    /// Number of equal depth ranges when no splits are given [default: 1].
    #[arg(long, value_name = "N")]
    pub depth_count: Option<usize>,

    /// Number of sonar beams [default: 256].
    #[arg(long, value_name = "N")]
    pub n_beams: Option<usize>,

    /// Maximum opening angle in degrees [default: 160].
    #[arg(long, value_name = "DEG")]
    pub theta_max: Option<f64>,

    /// Fraction the triangle hypotenuse undershoots twice the footprint [default: 0.05].
    #[arg(long, value_name = "F")]
    pub shrink: Option<f64>,

    /// Lattice diagonal layout: alternating or uniform [default: alternating].
    #[arg(long, value_name = "LAYOUT")]
    pub diagonals: Option<Diagonals>,

    /// Back-and-forth track direction: auto, x or y [default: auto].
    #[arg(long, value_name = "DIR")]
    pub heading: Option<Heading>,

    /// Root face of the coverage skeleton [default: 0].
    #[arg(long, value_name = "N")]
    pub seed_face: Option<usize>,

    /// Terrain generator cell size in meters [default: 1].
    #[arg(long, value_name = "M")]
    pub cell_size: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub run: RunArgs,

    /// Output grid file [default: <out>/terrain.asc].
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SurveyArgs {
    #[command(flatten)]
    pub run: RunArgs,

    /// Path CSV files to survey instead of planning inline; repeat for several.
    #[arg(long = "path", value_name = "FILE")]
    pub paths: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Report JSON files, directories searched for report.json, or TOML configs to run.
    #[arg(value_name = "INPUT")]
    pub inputs: Vec<PathBuf>,

    /// Presets to run; repeat for several.
    #[arg(short, long = "preset", value_name = "NAME")]
    pub presets: Vec<String>,

    /// Sonar resolutions to run each config and preset at; repeat for several [default: the config's].
    #[arg(long = "resolution", value_name = "M")]
    pub resolutions: Vec<f64>,

    /// Output directory [default: "out"].
    #[arg(short, long, value_name = "DIR", env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
}

/// An error tagged with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: Error,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn tag(code: i32) -> impl Fn(Error) -> CliError {
    move |error| CliError { code, error }
}

fn config_err(error: Error) -> CliError {
    CliError { code: 2, error }
}

fn plan_err(error: Error) -> CliError {
    match error {
        Error::Config(_) => config_err(error),
        _ => CliError { code: 4, error },
    }
}

fn io_err(code: i32, path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError {
        code,
        error: Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))),
    }
}

impl RunArgs {
    /// The configuration after applying every override.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::load(path).map_err(config_err)?,
            (None, Some(name)) => preset(name).map_err(config_err)?,
            (None, None) => RunConfig::from_toml("").map_err(config_err)?,
        };
        self.apply(&mut cfg)?;
        Ok(cfg)
    }

    pub fn apply(&self, cfg: &mut RunConfig) -> CliResult<()> {
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.planner {
            cfg.planner = v;
        }
        if let Some(v) = self.resolution {
            cfg.sonar.resolution = v;
        }
        if let Some(v) = self.eval_resolution {
            cfg.sim.eval_resolution = Some(v);
        }
        if let Some(v) = self.ping_spacing {
            cfg.sim.ping_spacing = Some(v);
        }
        if let Some(v) = self.pings_per_cell {
            cfg.sim.pings_per_cell = Some(v);
        }
        if let Some(v) = self.noise_std {
            cfg.sim.noise_std = v;
        }
        if let Some(v) = self.seed {
            cfg.sim.seed = v;
        }
        if let Some(v) = &self.splits {
            cfg.depth.splits = v.clone();
        }
        if let Some(v) = self.depth_count {
            cfg.depth.count = Some(v);
        }
        if let Some(v) = self.n_beams {
            cfg.sonar.n_beams = v;
        }
        if let Some(v) = self.theta_max {
            cfg.sonar.theta_max_deg = v;
        }
        if let Some(v) = self.shrink {
            cfg.mesh.shrink = v;
        }
        if let Some(v) = self.diagonals {
            cfg.mesh.diagonals = v;
        }
        if let Some(v) = self.heading {
            cfg.mesh.heading = v;
        }
        if let Some(v) = self.seed_face {
            cfg.mesh.seed_face = v;
        }
        if let Some(v) = self.cell_size {
            match cfg.terrain.cell_size_mut() {
                Some(c) => *c = v,
                None => {
                    return Err(config_err(Error::Config(
                        "--cell-size only applies to generated terrains".into(),
                    )))
                }
            }
        }
        cfg.validate().map_err(config_err)
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(2, dir))
}

fn write_file(path: &Path, contents: &[u8], code: i32) -> CliResult<()> {
    fs::write(path, contents).map_err(io_err(code, path))
}

fn build_scene(cfg: &RunConfig) -> CliResult<Scene> {
    let hf = cfg.terrain.build(None).map_err(|e| match e {
        Error::Config(_) => config_err(e),
        _ => CliError { code: 3, error: e },
    })?;
    Scene::from_heightfield(cfg, hf).map_err(plan_err)
}

pub fn cmd_gen(args: &GenArgs) -> CliResult<PathBuf> {
    let cfg = args.run.resolve()?;
    let hf = cfg.terrain.build(None).map_err(|e| match e {
        Error::Config(_) => config_err(e),
        _ => CliError { code: 3, error: e },
    })?;
    let path = match &args.output {
        Some(p) => p.clone(),
        None => {
            create_dir(&cfg.output_dir)?;
            cfg.output_dir.join("terrain.asc")
        }
    };
    let mut buf = Vec::new();
    save_grid(&hf, GridFormat::EsriAscii, &mut buf).map_err(tag(3))?;
    write_file(&path, &buf, 3)?;
    let (lo, hi) = hf.depth_bounds();
    println!(
        "{}: {} x {} nodes, cell {} m, depth {:.2} to {:.2} m",
        path.display(),
        hf.nx(),
        hf.ny(),
        hf.cell_size(),
        lo,
        hi
    );
    Ok(path)
}

#[derive(Debug, Serialize)]
struct RegionSummary {
    id: usize,
    face_count: usize,
    mean_depth: f64,
    theta_deg: f64,
}

#[derive(Debug, Serialize)]
struct GateSummary {
    regions: [usize; 2],
    edge: usize,
}

#[derive(Debug, Serialize)]
struct PlanSummary {
    scenario: String,
    planner: String,
    config_hash: String,
    footprint_m: f64,
    face_count: usize,
    region_count: usize,
    gate_count: usize,
    gates: Vec<GateSummary>,
    regions: Vec<RegionSummary>,
    path_count: usize,
    waypoint_count: usize,
    angle_switch_count: usize,
    path_length_m: f64,
}

fn path_file_names(n: usize) -> Vec<String> {
    if n == 1 {
        vec!["path.csv".to_string()]
    } else {
        (0..n).map(|k| format!("path_{k}.csv")).collect()
    }
}

fn geojson_collection(paths: &[CoveragePath]) -> String {
    let features: Vec<serde_json::Value> = paths
        .iter()
        .map(|p| serde_json::from_str(&p.to_geojson()).expect("path geojson parses"))
        .collect();
    let fc = serde_json::json!({ "type": "FeatureCollection", "features": features });
    serde_json::to_string_pretty(&fc).expect("geojson serializes")
}

pub fn cmd_plan(args: &RunArgs) -> CliResult<Vec<PathBuf>> {
    let cfg = args.resolve()?;
    let scene = build_scene(&cfg)?;
    let kind = cfg.planner;
    let paths = scene.plan(&cfg, kind).map_err(plan_err)?;
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let mut written = Vec::new();

    for (name, p) in path_file_names(paths.len()).iter().zip(&paths) {
        let f = dir.join(name);
        write_file(&f, p.to_csv_string().as_bytes(), 4)?;
        written.push(f);
    }
    let f = dir.join("path.geojson");
    write_file(&f, geojson_collection(&paths).as_bytes(), 4)?;
    written.push(f);

    let partition = scene.partition_for(kind);
    let f = dir.join("partition.json");
    write_file(&f, partition.to_json().as_bytes(), 4)?;
    written.push(f);

    let f = dir.join("mesh.off");
    let mut off = Vec::new();
    scene.mesh.write_off(&mut off).map_err(|e| plan_err(e.into()))?;
    write_file(&f, &off, 4)?;
    written.push(f);

    let w = cfg.footprint();
    let regions = partition
        .regions
        .iter()
        .map(|r| {
            Ok(RegionSummary {
                id: r.id,
                face_count: r.faces.len(),
                mean_depth: r.mean_depth,
                theta_deg: opening_angle(w, r.mean_depth, cfg.sonar.theta_max_deg)?,
            })
        })
        .collect::<crate::Result<Vec<_>>>()
        .map_err(plan_err)?;
    let summary = PlanSummary {
        scenario: cfg.scenario.clone(),
        planner: kind.name().to_string(),
        config_hash: cfg.hash(),
        footprint_m: w,
        face_count: scene.mesh.face_count(),
        region_count: partition.region_count(),
        gate_count: partition.gates.len(),
        gates: partition
            .gates
            .iter()
            .map(|(&(a, b), &edge)| GateSummary { regions: [a, b], edge })
            .collect(),
        regions,
        path_count: paths.len(),
        waypoint_count: paths.iter().map(CoveragePath::len).sum(),
        angle_switch_count: paths.iter().map(|p| p.angle_switches.len()).sum(),
        path_length_m: paths.iter().map(CoveragePath::length).sum(),
    };
    let f = dir.join("plan_summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&f, json.as_bytes(), 4)?;
    written.push(f);

    println!(
        "{} {}: {} faces, {} regions, {} gates, {} switches, path {:.1} m -> {}",
        cfg.scenario,
        kind,
        summary.face_count,
        summary.region_count,
        summary.gate_count,
        summary.angle_switch_count,
        summary.path_length_m,
        dir.display()
    );
    Ok(written)
}

fn read_paths(files: &[PathBuf], prov: &Provenance) -> CliResult<Vec<CoveragePath>> {
    files
        .iter()
        .map(|f| {
            let file = File::open(f).map_err(|e| CliError {
                code: 5,
                error: Error::Io(std::io::Error::new(e.kind(), format!("path file {}: {e}", f.display()))),
            })?;
            CoveragePath::read_csv(BufReader::new(file), prov.clone()).map_err(|e| CliError {
                code: 5,
                error: Error::Domain(format!("path file {}: {e}", f.display())),
            })
        })
        .collect()
}

pub fn cmd_survey(args: &SurveyArgs) -> CliResult<Report> {
    let cfg = args.run.resolve()?;
    let scene = build_scene(&cfg)?;
    let kind = cfg.planner;
    let paths = if args.paths.is_empty() {
        scene.plan(&cfg, kind).map_err(plan_err)?
    } else {
        let prov = Provenance {
            planner: kind.name().to_string(),
            config_hash: cfg.hash(),
        };
        read_paths(&args.paths, &prov)?
    };
    let (grid, mut report) = scene.survey(&cfg, &paths).map_err(tag(5))?;
    report.planner = kind.name().to_string();

    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let mut pgm = Vec::new();
    grid.write_pgm(&mut pgm).map_err(|e| CliError {
        code: 5,
        error: e.into(),
    })?;
    write_file(&dir.join("coverage.pgm"), &pgm, 5)?;
    write_file(&dir.join("coverage_runs.json"), grid.to_runs_json().as_bytes(), 5)?;
    write_file(&dir.join("report.json"), report.to_json().as_bytes(), 5)?;
    write_file(&dir.join("report.txt"), report.to_text().as_bytes(), 5)?;
    println!(
        "{} {}: coverage {:.2}% over {} cells -> {}",
        cfg.scenario,
        kind,
        report.coverage_pct,
        report.mask_cells,
        dir.display()
    );
    Ok(report)
}

fn collect_report_files(dir: &Path, out: &mut Vec<PathBuf>) -> CliResult<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(2, dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .map_err(io_err(2, dir))?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_report_files(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == "report.json") {
            out.push(p);
        }
    }
    Ok(())
}

fn load_report(path: &Path) -> CliResult<Report> {
    let text = fs::read_to_string(path).map_err(io_err(2, path))?;
    serde_json::from_str(&text).map_err(|e| config_err(Error::Config(format!("report {}: {e}", path.display()))))
}

/// Runs every configured planner on one config and writes each report under
/// `<out>/<scenario>_<resolution in cm>cm/<planner>/report.json`.
fn run_config(cfg: &RunConfig, out: &Path) -> CliResult<Vec<Report>> {
    let scene = build_scene(cfg)?;
    let tag_dir = out.join(format!(
        "{}_{}cm",
        cfg.scenario,
        (cfg.sonar.resolution * 100.0).round() as i64
    ));
    let mut reports = Vec::new();
    for &kind in &cfg.planners {
        let (_, _, report) = scene.run(cfg, kind).map_err(|e| match e {
            Error::UnreachableRegion { .. } | Error::Config(_) => plan_err(e),
            _ => CliError { code: 5, error: e },
        })?;
        info!(
            "{} {} {}: {:.2}%",
            cfg.scenario, cfg.sonar.resolution, kind, report.coverage_pct
        );
        let dir = tag_dir.join(kind.name());
        create_dir(&dir)?;
        write_file(&dir.join("report.json"), report.to_json().as_bytes(), 5)?;
        reports.push(report);
    }
    Ok(reports)
}

pub fn cmd_compare(args: &CompareArgs) -> CliResult<String> {
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut reports = Vec::new();
    let mut configs = Vec::new();
    for input in &args.inputs {
        if input.is_dir() {
            let mut files = Vec::new();
            collect_report_files(input, &mut files)?;
            for f in files {
                reports.push(load_report(&f)?);
            }
        } else if input.extension().is_some_and(|e| e == "toml") {
            configs.push(RunConfig::load(input).map_err(config_err)?);
        } else {
            reports.push(load_report(input)?);
        }
    }
    for name in &args.presets {
        configs.push(preset(name).map_err(config_err)?);
    }
    let mut jobs = Vec::new();
    for cfg in configs {
        if args.resolutions.is_empty() {
            jobs.push(cfg);
        } else {
            for &r in &args.resolutions {
                let mut c = cfg.clone();
                c.sonar.resolution = r;
                c.validate().map_err(config_err)?;
                jobs.push(c);
            }
        }
    }
    let runs: Vec<CliResult<Vec<Report>>> = jobs.par_iter().map(|cfg| run_config(cfg, &out)).collect();
    for r in runs {
        reports.extend(r?);
    }
    if reports.is_empty() {
        return Err(config_err(Error::Config(format!(
            "nothing to compare; pass report files, directories, configs or --preset ({})",
            PRESETS.join(", ")
        ))));
    }
    let table = compare(&reports).map_err(config_err)?;
    create_dir(&out)?;
    write_file(&out.join("comparison.csv"), table.to_csv().as_bytes(), 5)?;
    let text = table.to_text();
    write_file(&out.join("comparison.txt"), text.as_bytes(), 5)?;
    print!("{text}");
    Ok(text)
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    if cli.jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a).map(|_| ()),
        Command::Plan(a) => cmd_plan(a).map(|_| ()),
        Command::Survey(a) => cmd_survey(a).map(|_| ()),
        Command::Compare(a) => cmd_compare(a).map(|_| ()),
    };
    match result {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let unreachable = Error::UnreachableRegion {
            face: 3,
            region: Some(1),
        };
        let e = plan_err(unreachable);
        assert_eq!(e.code, 4);
        assert!(e.to_string().contains("region 1"));
        assert_eq!(plan_err(Error::Config("x".into())).code, 2);
        assert_eq!(config_err(Error::param("x")).code, 2);
    }

    #[test]
    fn overrides_win_over_config() {
        let args = RunArgs {
            preset: Some("shaft".into()),
            resolution: Some(0.25),
            splits: Some(vec![10.0, 20.0]),
            planner: Some(PlannerKind::Nuc),
            diagonals: Some(Diagonals::Alternating),
            ..RunArgs::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.sonar.resolution, 0.25);
        assert_eq!(cfg.depth.splits, vec![10.0, 20.0]);
        assert_eq!(cfg.planner, PlannerKind::Nuc);
        assert_eq!(cfg.mesh.diagonals, Diagonals::Alternating);
    }

    #[test]
    fn invalid_override_is_config_error() {
        let args = RunArgs {
            shrink: Some(0.7),
            ..RunArgs::default()
        };
        assert_eq!(args.resolve().unwrap_err().code, 2);
    }

    #[test]
    fn path_names() {
        assert_eq!(path_file_names(1), vec!["path.csv"]);
        assert_eq!(path_file_names(2), vec!["path_0.csv", "path_1.csv"]);
    }
}
