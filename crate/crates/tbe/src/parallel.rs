//! Thread-pool wrappers around the core solvers and ensemble samplers.
//!
//! Work is cut into index ranges that are fixed before any thread starts and
//! results are reassembled in index order, so the thread count never changes
//! an output.

use std::ops::Range;

use rayon::prelude::*;
use tbe_core::ensemble::{self, EnsembleSpec};
use tbe_core::quadratize::QuboModel;
use tbe_core::solve::{self, Method, Sample, SolveResult};
use tbe_core::IsingPolynomial;

use crate::error::{CliError, CliResult};

/// Trials handled by one task.
const TRIAL_CHUNK: usize = 256;

pub struct Workers {
    pool: rayon::ThreadPool,
}

impl Workers {
    /// `None` uses every available core.
    pub fn new(threads: Option<usize>) -> CliResult<Self> {
        let threads = match threads {
            Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
            Some(t) => t,
            None => std::thread::available_parallelism().map_or(1, |t| t.get()),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Other(format!("thread pool: {e}")))?;
        Ok(Workers { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    fn merged<F>(&self, restarts: usize, run: F) -> CliResult<Sample>
    where
        F: Fn(usize) -> tbe_core::Result<Sample> + Sync,
    {
        let samples: Vec<Sample> = self
            .pool
            .install(|| (0..restarts).into_par_iter().map(&run).collect::<tbe_core::Result<_>>())?;
        samples
            .into_iter()
            .reduce(solve::merge)
            .ok_or_else(|| CliError::Usage("anneal needs at least one restart".into()))
    }

    pub fn solve(&self, poly: &IsingPolynomial, method: Method, seed: u64) -> CliResult<SolveResult> {
        let best = match &method {
            Method::Exhaustive => solve::exhaustive(poly)?,
            Method::Anneal(p) => self.merged(p.restarts, |r| solve::anneal_restart(poly, p, seed, r))?,
        };
        Ok(SolveResult::new(best, method, seed))
    }

    pub fn solve_qubo(&self, qubo: &QuboModel, method: Method, seed: u64) -> CliResult<SolveResult> {
        let best = match &method {
            Method::Exhaustive => return Ok(solve::solve_qubo(qubo, method, seed)?),
            Method::Anneal(p) => {
                let ising = qubo.to_ising()?;
                self.merged(p.restarts, |r| {
                    solve::project_qubo_sample(qubo, &solve::anneal_restart(&ising, p, seed, r)?)
                })?
            }
        };
        Ok(SolveResult::new(best, method, seed))
    }

    fn chunked<T, F>(&self, trials: usize, run: F) -> CliResult<Vec<T>>
    where
        T: Send,
        F: Fn(Range<usize>) -> tbe_core::Result<T> + Sync,
    {
        let chunks: Vec<Range<usize>> = (0..trials)
            .step_by(TRIAL_CHUNK)
            .map(|s| s..(s + TRIAL_CHUNK).min(trials))
            .collect();
        Ok(self
            .pool
            .install(|| chunks.into_par_iter().map(&run).collect::<tbe_core::Result<Vec<T>>>())?)
    }

    pub fn residuals(&self, spec: &EnsembleSpec, n: usize, k_max: usize) -> CliResult<Vec<f64>> {
        let parts = self.chunked(spec.trials, |r| ensemble::sample_residuals(spec, n, k_max, r))?;
        Ok(parts.concat())
    }

    pub fn bitflips(&self, spec: &EnsembleSpec, n: usize, k_max: usize, coordinate: usize) -> CliResult<Vec<f64>> {
        let parts = self.chunked(spec.trials, |r| ensemble::sample_bitflips(spec, n, k_max, coordinate, r))?;
        Ok(parts.concat())
    }

    /// `(agreeing pairs, total pairs)` with the omitted variances scaled.
    pub fn sign_agreement(&self, spec: &EnsembleSpec, n: usize, k_max: usize, scale: f64) -> CliResult<(usize, usize)> {
        let parts = self.chunked(spec.trials, |r| ensemble::sign_agreement(spec, n, k_max, scale, r))?;
        Ok(parts.into_iter().fold((0, 0), |(a, t), (x, y)| (a + x, t + y)))
    }
}
