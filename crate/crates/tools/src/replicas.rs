//! Replica-parallel simulation runs. Results are identical to the sequential
//! drivers in `bs5_core::sim` because each replica owns its random stream.

use bs5_core::sim::{self, EmpiricalCDF, SimConfig};
use rayon::prelude::*;

use crate::error::Result;

pub fn run_steady(cfg: &SimConfig) -> Result<EmpiricalCDF> {
    cfg.validate()?;
    let parts = (0..cfg.n_replicas)
        .into_par_iter()
        .map(|r| sim::run_steady_replica(cfg, r))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(EmpiricalCDF::merge(parts))
}

pub fn run_kstep(cfg: &SimConfig, k: u64) -> Result<EmpiricalCDF> {
    cfg.validate()?;
    let parts = (0..cfg.n_replicas)
        .into_par_iter()
        .map(|r| sim::run_kstep_replica(cfg, k, r))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(EmpiricalCDF::merge(parts))
}

/// Replica count used when the caller does not fix one.
pub const DEFAULT_REPLICAS: usize = 16;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_equals_sequential() {
        let cfg = SimConfig { seed: 3, burn_in: 100, n_samples: 1000, n_replicas: 4, ..SimConfig::default() };
        assert_eq!(run_steady(&cfg).unwrap(), sim::run_steady(&cfg).unwrap());
        assert_eq!(run_kstep(&cfg, 2).unwrap(), sim::run_kstep(&cfg, 2).unwrap());
    }
}
