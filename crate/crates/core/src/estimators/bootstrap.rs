//! Stationary bootstrap: blocks of geometric length with wrap-around.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::distributions::{open_unit, seeded_rng, Provenance, SortedSample};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};

use super::{z_value, CiMethod, EstimatorSpec, RiskEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub mean_block: f64,
    pub reps: usize,
    pub coverage: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub estimate: RiskEstimate,
    pub sd: Option<f64>,
    pub used: usize,
    pub failed: usize,
}

// more than this fraction of failed replicates aborts the interval
const MAX_FAILED_FRACTION: f64 = 0.2;

fn block_length(rng: &mut dyn RngCore, mean_block: f64) -> usize {
    if mean_block <= 1.0 {
        return 1;
    }
    let p = 1.0 / mean_block;
    let len = (open_unit(rng).ln() / (-p).ln_1p()).ceil();
    (len as usize).max(1)
}

/// One stationary-bootstrap path of the same length as `path`.
pub fn stationary_resample(path: &[f64], mean_block: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    let n = path.len();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let start = (open_unit(rng) * n as f64) as usize % n;
        let len = block_length(rng, mean_block).min(n - out.len());
        out.extend((0..len).map(|j| path[(start + j) % n]));
    }
    out
}

/// Point estimate on `path` with a CI of `point ± z sd` over bootstrap replicates.
///
/// Replicate `r` is drawn with seed `seed + r`, so output does not depend on
/// the execution schedule.
pub fn block_bootstrap_ci(
    path: &[f64],
    spec: &EstimatorSpec,
    cfg: &BootstrapConfig,
    exec: Execution,
) -> Result<BootstrapResult> {
    if cfg.reps == 0 {
        return Err(Error::InvalidParameter("bootstrap needs reps >= 1".into()));
    }
    if !(cfg.mean_block > 0.0) || (path.len() as f64) < cfg.mean_block {
        return Err(Error::InvalidParameter(format!(
            "mean block length {} must be positive and at most the path length {}",
            cfg.mean_block,
            path.len()
        )));
    }
    let z = z_value(cfg.coverage)?;
    let original = SortedSample::new(path.to_vec(), Provenance::Derived)?;
    let mut estimate = spec.estimate(&original)?;

    let draws = map_indexed(exec, cfg.reps, |r| {
        let mut rng = seeded_rng(cfg.seed.wrapping_add(r as u64));
        let resampled = stationary_resample(path, cfg.mean_block, &mut rng);
        SortedSample::new(resampled, Provenance::Derived)
            .and_then(|s| spec.estimate(&s))
            .map(|e| e.point)
            .ok()
    });
    let values: Vec<f64> = draws.iter().flatten().copied().collect();
    let failed = cfg.reps - values.len();
    if values.is_empty() {
        return Err(Error::AllReplicatesFailed { reps: cfg.reps });
    }
    if failed as f64 > MAX_FAILED_FRACTION * cfg.reps as f64 {
        return Err(Error::TooManyBootstrapFailures {
            failed,
            reps: cfg.reps,
        });
    }
    let sd = if values.len() >= 2 {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        Some((ss / (values.len() - 1) as f64).sqrt())
    } else {
        None
    };
    if let Some(sd) = sd {
        estimate = estimate.with_symmetric_ci(z * sd, CiMethod::BlockBootstrap);
    }
    Ok(BootstrapResult {
        estimate,
        sd,
        used: values.len(),
        failed,
    })
}
