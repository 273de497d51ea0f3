#![allow(dead_code)]

use std::path::PathBuf;

use gallop_sim::harness::metrics::EstopMetrics;
use gallop_sim::harness::config::ObstacleInjection;
use gallop_sim::harness::{run_scenario, RunOutput, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn scenario_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(file)
}

pub fn square() -> ScenarioConfig {
    ScenarioConfig::load(scenario_path("remote_control_square.json")).expect("bundled scenario")
}

pub fn platoon() -> ScenarioConfig {
    ScenarioConfig::load(scenario_path("leader_follower_l.json")).expect("bundled scenario")
}

pub fn run(cfg: &ScenarioConfig) -> RunOutput {
    run_scenario(cfg).expect("scenario runs")
}

/// Binomial standard deviation of an empirical fraction.
pub fn sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

pub struct EstopEvent {
    pub at_us: u64,
    pub robot: u8,
    pub metrics: EstopMetrics,
    pub output: RunOutput,
}

/// One injected-obstacle run on the platoon scenario: a wall appears 12 cm
/// ahead of one robot at a seeded time in [0.5, 2.5] s, and the run stops
/// one second later at the latest.
pub fn estop_event(per: f64, index: u64) -> EstopEvent {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE570_0000 + index);
    let at_us = rng.gen_range(500_000..=2_500_000u64);
    let robot = if index.is_multiple_of(2) { 1 } else { 2 };
    let mut cfg = platoon().with_uniform_per(per);
    cfg.seed = 1000 + index;
    cfg.injections = vec![ObstacleInjection {
        at_us,
        robot,
        distance_m: 0.12,
        half_width_m: 0.2,
    }];
    cfg.max_time_s = at_us as f64 * 1e-6 + 1.0;
    let output = run(&cfg);
    let metrics = output.metrics.estop.clone().expect("estop fired");
    EstopEvent {
        at_us,
        robot,
        metrics,
        output,
    }
}
