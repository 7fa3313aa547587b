//! Monte Carlo simulation of the Bak-Sneppen chain on a ring of `N` species.
//!
//! Randomness comes from ChaCha8 with one stream per replica, so a run is a
//! pure function of `(seed, config)` regardless of how replicas are scheduled.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Parameters of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub n_species: usize,
    pub seed: u64,
    pub burn_in: u64,
    pub n_samples: usize,
    pub thinning: u64,
    pub n_replicas: usize,
    /// Record every site at each sampling time instead of site 0 only.
    pub pool_sites: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_species: 5,
            seed: 0,
            burn_in: 100_000,
            n_samples: 100_000,
            thinning: 10,
            n_replicas: 1,
            pool_sites: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_species < 3 {
            return Err(Error::InvalidParameter("n_species must be at least 3".into()));
        }
        if self.thinning < 1 || self.n_samples < 1 || self.n_replicas < 1 {
            return Err(Error::InvalidParameter("thinning, n_samples and n_replicas must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of samples assigned to `replica`; the remainder goes to the first replicas.
    pub fn replica_share(&self, replica: usize) -> usize {
        let base = self.n_samples / self.n_replicas;
        base + usize::from(replica < self.n_samples % self.n_replicas)
    }
}

/// Fitness vector plus the random stream driving it.
#[derive(Debug, Clone)]
pub struct SimState {
    fitness: Vec<f64>,
    rng: ChaCha8Rng,
    step_count: u64,
}

impl SimState {
    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Replaces the fitness vector, e.g. to start from a prescribed configuration.
    pub fn set_fitness(&mut self, fitness: &[f64]) -> Result<()> {
        if fitness.len() != self.fitness.len() || fitness.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::InvalidParameter("fitness must have n_species entries in [0, 1]".into()));
        }
        self.fitness.copy_from_slice(fitness);
        Ok(())
    }

    fn redraw(&mut self) {
        for f in self.fitness.iter_mut() {
            *f = self.rng.gen::<f64>();
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fresh state on stream 0 with i.i.d. uniform fitness values.
pub fn init(cfg: &SimConfig) -> Result<SimState> {
    init_stream(cfg, 0)
}

/// Fresh state on the given stream.
pub fn init_stream(cfg: &SimConfig, stream: u64) -> Result<SimState> {
    cfg.validate()?;
    let mut s = SimState { fitness: alloc::vec![0.0; cfg.n_species], rng: rng_for(cfg.seed, stream), step_count: 0 };
    s.redraw();
    Ok(s)
}

/// One update: the minimum (lowest index on ties) and its two ring neighbours are redrawn.
///
/// Returns the index of the minimum.
pub fn step(state: &mut SimState) -> usize {
    let n = state.fitness.len();
    let mut nu = 0;
    for (i, &f) in state.fitness.iter().enumerate().skip(1) {
        if f < state.fitness[nu] {
            nu = i;
        }
    }
    for idx in [(nu + n - 1) % n, nu, (nu + 1) % n] {
        state.fitness[idx] = state.rng.gen::<f64>();
    }
    state.step_count += 1;
    nu
}

/// Sorted sample set with step-function CDF.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmpiricalCDF {
    samples: Vec<f64>,
}

impl EmpiricalCDF {
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_unstable_by(f64::total_cmp);
        EmpiricalCDF { samples }
    }

    /// Pools several sample sets; the result does not depend on their order.
    pub fn merge<I: IntoIterator<Item = Vec<f64>>>(parts: I) -> Self {
        let mut all = Vec::new();
        for p in parts {
            all.extend(p);
        }
        Self::from_samples(all)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.partition_point(|&s| s <= x) as f64 / self.samples.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Sample variance (unbiased).
    pub fn variance(&self) -> f64 {
        let n = self.samples.len() as f64;
        let m = self.mean();
        self.samples.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / (n - 1.0)
    }
}

/// `sup |ECDF - cdf|`, checking both one-sided gaps at every distinct sample value.
///
/// The lower gap compares against `cdf` just left of the sample, so a step-function
/// reference is handled as well as a continuous one.
pub fn ks_distance<F: FnMut(f64) -> f64>(ecdf: &EmpiricalCDF, mut cdf: F) -> f64 {
    let xs = &ecdf.samples;
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i + 1;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        d = d.max(j as f64 / n - cdf(xs[i])).max(cdf(xs[i].next_down()) - i as f64 / n);
        i = j;
    }
    d
}

/// Stationary samples from one replica: burn in, then record every `thinning` steps.
pub fn run_steady_replica(cfg: &SimConfig, replica: usize) -> Result<Vec<f64>> {
    let count = cfg.replica_share(replica);
    let mut state = init_stream(cfg, replica as u64)?;
    for _ in 0..cfg.burn_in {
        step(&mut state);
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        for _ in 0..cfg.thinning {
            step(&mut state);
        }
        if cfg.pool_sites {
            let room = count - out.len();
            out.extend(state.fitness.iter().take(room));
        } else {
            out.push(state.fitness[0]);
        }
    }
    Ok(out)
}

/// Pooled stationary samples over all replicas, run one after another.
pub fn run_steady(cfg: &SimConfig) -> Result<EmpiricalCDF> {
    cfg.validate()?;
    let parts = (0..cfg.n_replicas).map(|r| run_steady_replica(cfg, r)).collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalCDF::merge(parts))
}

/// Site-0 fitness after exactly `k` steps from uniforms, for this replica's share of chains.
pub fn run_kstep_replica(cfg: &SimConfig, k: u64, replica: usize) -> Result<Vec<f64>> {
    let count = cfg.replica_share(replica);
    let mut state = init_stream(cfg, replica as u64)?;
    let mut out = Vec::with_capacity(count);
    for c in 0..count {
        if c > 0 {
            state.redraw();
        }
        for _ in 0..k {
            step(&mut state);
        }
        out.push(state.fitness[0]);
    }
    Ok(out)
}

/// Pooled `k`-step samples over all replicas.
pub fn run_kstep(cfg: &SimConfig, k: u64) -> Result<EmpiricalCDF> {
    cfg.validate()?;
    let parts = (0..cfg.n_replicas).map(|r| run_kstep_replica(cfg, k, r)).collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalCDF::merge(parts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SimConfig {
        SimConfig { seed: 7, ..SimConfig::default() }
    }

    #[test]
    fn init_is_deterministic() {
        let a = init(&cfg()).unwrap();
        let b = init(&cfg()).unwrap();
        assert_eq!(a.fitness(), b.fitness());
        assert_eq!(a.fitness().len(), 5);
        assert_eq!(a.step_count(), 0);
        let c = init_stream(&cfg(), 1).unwrap();
        assert_ne!(a.fitness(), c.fitness());
    }

    #[test]
    fn step_resamples_neighbourhood() {
        let mut s = init(&cfg()).unwrap();
        s.set_fitness(&[0.9, 0.1, 0.8, 0.7, 0.6]).unwrap();
        assert_eq!(step(&mut s), 1);
        assert_eq!(&s.fitness()[3..], &[0.7, 0.6]);
        assert!(s.fitness()[..3].iter().zip([0.9, 0.1, 0.8]).all(|(a, b)| *a != b));

        s.set_fitness(&[0.1, 0.9, 0.8, 0.7, 0.2]).unwrap();
        assert_eq!(step(&mut s), 0);
        assert_eq!(&s.fitness()[2..4], &[0.8, 0.7]);
        assert_eq!(s.step_count(), 2);
    }

    #[test]
    fn ties_pick_lowest_index() {
        let mut s = init(&cfg()).unwrap();
        s.set_fitness(&[0.5, 0.2, 0.9, 0.2, 0.7]).unwrap();
        assert_eq!(step(&mut s), 1);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(init(&SimConfig { n_species: 2, ..cfg() }).is_err());
        assert!(run_steady(&SimConfig { thinning: 0, ..cfg() }).is_err());
        let mut s = init(&cfg()).unwrap();
        assert!(s.set_fitness(&[0.5; 4]).is_err());
        assert!(s.set_fitness(&[1.5, 0.1, 0.1, 0.1, 0.1]).is_err());
    }

    #[test]
    fn ks_hand_values() {
        let e = EmpiricalCDF::from_samples(alloc::vec![0.5]);
        assert_eq!(ks_distance(&e, |x| x), 0.5);
        let e = EmpiricalCDF::from_samples(alloc::vec![0.2, 0.4, 0.4, 0.9]);
        assert_eq!(ks_distance(&e, |x| e.eval(x)), 0.0);
        assert_eq!(e.eval(0.4), 0.75);
        assert_eq!(e.eval(0.1), 0.0);
    }

    #[test]
    fn replica_shares_cover_total() {
        let c = SimConfig { n_samples: 10, n_replicas: 3, ..cfg() };
        assert_eq!((0..3).map(|r| c.replica_share(r)).sum::<usize>(), 10);
        let run = run_steady(&SimConfig { burn_in: 10, ..c }).unwrap();
        assert_eq!(run.len(), 10);
    }

    #[test]
    fn pooled_sites_fill_exactly() {
        let c = SimConfig { n_samples: 12, burn_in: 5, pool_sites: true, ..cfg() };
        assert_eq!(run_steady(&c).unwrap().len(), 12);
    }

    #[test]
    fn zero_steps_gives_uniform() {
        let c = SimConfig { n_samples: 10_000, ..cfg() };
        let e = run_kstep(&c, 0).unwrap();
        assert!(ks_distance(&e, |x| x) < 1.63 / 100.0);
    }
}
