use std::path::PathBuf;

use mdnuc::config::{preset, RunConfig};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../experiments")
}

fn expected(base: &str, scenario: &str, resolution: f64, noise: f64, seed: u64, stem: &str) -> RunConfig {
    let mut c = preset(base).unwrap();
    c.scenario = scenario.into();
    c.sonar.resolution = resolution;
    c.sim.noise_std = noise;
    c.sim.seed = seed;
    c.output_dir = format!("out/{stem}").into();
    c
}

#[test]
fn experiments_match_presets() {
    let cases = [
        ("shaft_10cm", "shaft", "shaft", 0.10, 0.0, 0),
        ("shaft_25cm", "shaft", "shaft", 0.25, 0.0, 0),
        ("saddle_10cm", "saddle", "saddle", 0.10, 0.0, 0),
        ("saddle_25cm", "saddle", "saddle", 0.25, 0.0, 0),
        ("channel_10cm", "channel", "channel", 0.10, 0.0, 0),
        ("channel_25cm", "channel", "channel", 0.25, 0.0, 0),
        ("shaft_noise_10cm", "shaft", "shaft_noise", 0.10, 1.1, 7),
        ("channel_noise_25cm", "channel", "channel_noise", 0.25, 1.1, 7),
    ];
    let mut found: Vec<String> = std::fs::read_dir(dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".toml"))
        .collect();
    found.sort();
    let mut listed: Vec<String> = cases.iter().map(|c| format!("{}.toml", c.0)).collect();
    listed.sort();
    assert_eq!(found, listed);

    for (stem, base, scenario, res, noise, seed) in cases {
        let path = dir().join(format!("{stem}.toml"));
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg, expected(base, scenario, res, noise, seed, stem), "{stem}");
        // files are stored in canonical form below their comment header
        let text = std::fs::read_to_string(&path).unwrap();
        let body: String = text
            .lines()
            .skip_while(|l| l.starts_with('#') || l.is_empty())
            .map(|l| format!("{l}\n"))
            .collect();
        assert_eq!(body, cfg.to_canonical_toml(), "{stem}");
    }
}
