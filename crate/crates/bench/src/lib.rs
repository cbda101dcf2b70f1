//! Fixtures shared by the benchmarks.

use minerec_core::corpus::{playout, random_tree, GeneratorConfig};
use minerec_core::learner::TrainingDataset;
use minerec_core::{extract, EventLog};

/// Noisy generated log with roughly `n_traces` traces over 10 activities.
pub fn sample_log(n_traces: usize, seed: u64) -> EventLog {
    let config = GeneratorConfig {
        n_activities: [10, 10],
        depth: [3, 3],
        ..GeneratorConfig::default()
    };
    playout(&random_tree(&config, seed), n_traces, config.noise, seed)
}

/// Feature rows of `n` generated logs with a synthetic target.
pub fn sample_dataset(n: usize) -> TrainingDataset {
    let rows: Vec<Vec<f64>> = (0..n as u64).map(|s| extract(&sample_log(30, s)).values).collect();
    let y = rows.iter().map(|r| (r[0] / (1.0 + r[0])).min(1.0)).collect();
    TrainingDataset::new((0..n).map(|i| format!("log_{i}")).collect(), rows, y).expect("finite features")
}
