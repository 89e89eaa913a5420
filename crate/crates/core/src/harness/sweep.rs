use crate::analysis::RunStatistics;
use crate::rng::derive_seed;

use super::config::RunConfig;
use super::sim::{run_simulation, HarnessError};

/// One grid point of a sweep. Failures stay attached to their point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub config: RunConfig,
    pub outcome: Result<RunStatistics, HarnessError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub template: RunConfig,
    pub points: Vec<SweepPoint>,
}

impl SweepTable {
    /// `(f, e_cm, qber_mm, R)` for every point that succeeded.
    pub fn rows(&self) -> Vec<(f64, f64, f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| {
                p.outcome
                    .as_ref()
                    .ok()
                    .map(|s| (p.config.attack_fraction, s.e_cm.rate, s.qber_mm.rate, s.key_rate))
            })
            .collect()
    }
}

/// Runs `template` once per attack fraction in `f_grid`, each with a seed
/// derived from the template seed and the point index.
pub fn sweep(template: &RunConfig, f_grid: &[f64]) -> Result<SweepTable, HarnessError> {
    if f_grid.is_empty() {
        return Err(HarnessError::Sweep("empty fraction grid".into()));
    }
    if let Some(bad) = f_grid.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(HarnessError::Sweep(format!("fraction {bad} outside [0, 1]")));
    }
    template.validate()?;
    let points = f_grid
        .iter()
        .enumerate()
        .map(|(index, &f)| {
            let config = RunConfig {
                attack_fraction: f,
                master_seed: derive_seed(template.master_seed, index as u64),
                ..template.clone()
            };
            let outcome = run_simulation(&config).map(|sim| sim.statistics);
            SweepPoint { index, config, outcome }
        })
        .collect();
    Ok(SweepTable {
        template: template.clone(),
        points,
    })
}
