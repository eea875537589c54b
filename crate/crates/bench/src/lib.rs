//! Shared fixtures for the benchmarks.

use rydgate::preset::Preset;
use rydgate::sim::plan::Plan;
use rydgate::sim::{SimConfig, SourceMode};

/// Simulator configuration with the preset gate and ideal detection.
pub fn sim_config(plan: Plan, shots: u64) -> SimConfig {
    let gate = Preset::paper().gate().expect("bundled preset");
    SimConfig {
        source: SourceMode::ExactlyOne,
        n_targets: plan.photons().expect("valid plan") - 1,
        gate,
        phase_noise: Default::default(),
        shared_target_phase: false,
        target_rotation: false,
        detection_efficiency: 1.0,
        dark_count_rate: 0.0,
        shots,
        seed: 1,
        plan,
    }
}
