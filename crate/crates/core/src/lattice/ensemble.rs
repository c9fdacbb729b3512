use rayon::prelude::*;

use super::{Engine, InitSpec, InitialLaw, Simulator};
use crate::correlations::{triangle_index, triangle_len};
use crate::error::{check_time, Error, Result};
use crate::hydro::Reservoirs;
use crate::rng::derive;

/// Trajectories per work unit. Fixed so that reductions do not depend on the
/// number of worker threads.
const CHUNK: usize = 64;

/// Parameters of an independent-trajectory experiment.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub n: usize,
    pub reservoirs: Reservoirs,
    pub init: InitSpec,
    pub times: Vec<f64>,
    pub trajectories: usize,
    pub master_seed: u64,
    pub engine: Engine,
    pub pairs: bool,
}

impl EnsembleSpec {
    pub fn new(n: usize, reservoirs: Reservoirs, init: InitSpec, times: Vec<f64>, trajectories: usize, master_seed: u64) -> Self {
        Self { n, reservoirs, init, times, trajectories, master_seed, engine: Engine::default(), pairs: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidArgument(format!("n = {} must be at least 3", self.n)));
        }
        if self.trajectories == 0 {
            return Err(Error::InvalidArgument("at least one trajectory is required".into()));
        }
        if self.times.is_empty() {
            return Err(Error::InvalidArgument("no observation times".into()));
        }
        self.times.iter().try_for_each(|&t| check_time(t))?;
        if self.times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("observation times must be sorted".into()));
        }
        Ok(())
    }
}

/// A freshly initialised trajectory handed to the per-trajectory closure.
pub struct Trajectory {
    pub index: usize,
    pub sim: Simulator,
}

/// Runs trajectories `0..trajectories`, trajectory `i` on stream
/// `derive(master_seed, i)`, folding each into an accumulator. Chunks are
/// merged in index order, so the result is independent of scheduling.
pub fn fold_trajectories<A, Make, Step, Merge>(
    law: &InitialLaw,
    reservoirs: Reservoirs,
    engine: Engine,
    trajectories: usize,
    master_seed: u64,
    make: Make,
    step: Step,
    merge: Merge,
) -> A
where
    A: Send,
    Make: Fn() -> A + Sync,
    Step: Fn(&mut A, Trajectory) + Sync,
    Merge: Fn(&mut A, A),
{
    let chunks = trajectories.div_ceil(CHUNK);
    let partial: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = make();
            for index in c * CHUNK..((c + 1) * CHUNK).min(trajectories) {
                let mut rng = derive(master_seed, index as u64);
                let config = law.sample(&mut rng);
                let sim = Simulator::new(config, reservoirs, engine, rng);
                step(&mut acc, Trajectory { index, sim });
            }
            acc
        })
        .collect();
    let mut total = make();
    for p in partial {
        merge(&mut total, p);
    }
    total
}

/// Occupation counts at each observation time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n: usize,
    pub trajectories: usize,
    pub master_seed: u64,
    pub times: Vec<f64>,
    /// `site_counts[i][x − 1]`: trajectories with site `x` occupied at `times[i]`.
    pub site_counts: Vec<Vec<u64>>,
    /// Joint occupation counts over pairs `x < y`, in triangle order.
    pub pair_counts: Option<Vec<Vec<u64>>>,
}

impl EnsembleStats {
    fn empty(spec: &EnsembleSpec) -> Self {
        let sites = spec.n - 1;
        Self {
            n: spec.n,
            trajectories: 0,
            master_seed: spec.master_seed,
            times: spec.times.clone(),
            site_counts: vec![vec![0; sites]; spec.times.len()],
            pair_counts: spec.pairs.then(|| vec![vec![0; triangle_len(spec.n)]; spec.times.len()]),
        }
    }

    fn merge(&mut self, other: Self) {
        self.trajectories += other.trajectories;
        for (a, b) in self.site_counts.iter_mut().zip(other.site_counts) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        if let (Some(a), Some(b)) = (self.pair_counts.as_mut(), other.pair_counts) {
            for (ra, rb) in a.iter_mut().zip(b) {
                ra.iter_mut().zip(rb).for_each(|(x, y)| *x += y);
            }
        }
    }

    fn m(&self) -> f64 {
        self.trajectories as f64
    }

    /// Empirical mean occupation of site `x` at `times[ti]`.
    pub fn mean(&self, ti: usize, x: usize) -> f64 {
        self.site_counts[ti][x - 1] as f64 / self.m()
    }

    /// Sample standard deviation over `√M`.
    pub fn stderr(&self, ti: usize, x: usize) -> f64 {
        let m = self.m();
        if self.trajectories < 2 {
            return 0.0;
        }
        let c = self.site_counts[ti][x - 1] as f64;
        ((c - c * c / m) / (m - 1.0) / m).max(0.0).sqrt()
    }

    pub fn means(&self, ti: usize) -> Vec<f64> {
        (1..self.n).map(|x| self.mean(ti, x)).collect()
    }

    pub fn has_pairs(&self) -> bool {
        self.pair_counts.is_some()
    }

    /// Plug-in covariance of `η(x)` and `η(y)` for `x < y`, with the standard
    /// error of the centred product. The plug-in bias is `O(1/M)`.
    pub fn pair_covariance(&self, ti: usize, x: usize, y: usize) -> Result<(f64, f64)> {
        if !(1 <= x && x < y && y < self.n) {
            return Err(Error::InvalidArgument(format!(
                "pair ({x}, {y}) must satisfy 0 < x < y < n = {}",
                self.n
            )));
        }
        let pairs = self
            .pair_counts
            .as_ref()
            .ok_or_else(|| Error::Configuration("pair statistics were not recorded".into()))?;
        let m = self.m();
        let cx = self.site_counts[ti][x - 1] as f64;
        let cy = self.site_counts[ti][y - 1] as f64;
        let cxy = pairs[ti][triangle_index(self.n, x, y)] as f64;
        let (mx, my) = (cx / m, cy / m);
        // Centred product over the four joint outcomes.
        let cells = [
            (cxy, (1.0 - mx) * (1.0 - my)),
            (cx - cxy, (1.0 - mx) * (-my)),
            (cy - cxy, (-mx) * (1.0 - my)),
            (m - cx - cy + cxy, mx * my),
        ];
        let mean: f64 = cells.iter().map(|(k, z)| k * z).sum::<f64>() / m;
        let var = if self.trajectories > 1 {
            cells.iter().map(|(k, z)| k * (z - mean).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        Ok((mean, (var / m).sqrt()))
    }
}

/// Runs `spec.trajectories` independent copies and records occupations at
/// each observation time.
pub fn simulate_ensemble(spec: &EnsembleSpec) -> Result<EnsembleStats> {
    spec.validate()?;
    let law = spec.init.resolve(spec.n, spec.reservoirs)?;
    let n = spec.n;
    let stats = fold_trajectories(
        &law,
        spec.reservoirs,
        spec.engine,
        spec.trajectories,
        spec.master_seed,
        || EnsembleStats::empty(spec),
        |acc, mut traj| {
            acc.trajectories += 1;
            for (ti, &t) in spec.times.iter().enumerate() {
                traj.sim.advance_to(t);
                let sites = traj.sim.config().sites();
                for (c, &v) in acc.site_counts[ti].iter_mut().zip(sites) {
                    *c += v as u64;
                }
                if let Some(pairs) = acc.pair_counts.as_mut() {
                    let row = &mut pairs[ti];
                    let occupied: Vec<usize> = (1..n).filter(|&x| sites[x - 1] == 1).collect();
                    for (i, &x) in occupied.iter().enumerate() {
                        for &y in &occupied[i + 1..] {
                            row[triangle_index(n, x, y)] += 1;
                        }
                    }
                }
            }
        },
        |a, b| a.merge(b),
    );
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(init: InitSpec, times: Vec<f64>, m: usize) -> EnsembleSpec {
        EnsembleSpec::new(6, Reservoirs::new(0.2, 0.7).unwrap(), init, times, m, 17)
    }

    #[test]
    fn validates_inputs() {
        assert!(simulate_ensemble(&spec(InitSpec::Constant(0.5), vec![0.2, 0.1], 4)).is_err());
        assert!(simulate_ensemble(&spec(InitSpec::Constant(0.5), vec![0.1], 0)).is_err());
        assert!(simulate_ensemble(&spec(InitSpec::Constant(0.5), vec![-0.1], 3)).is_err());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let mut s = spec(InitSpec::Constant(0.5), vec![0.0, 0.05, 0.2], 300);
        s.pairs = true;
        let a = simulate_ensemble(&s).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| simulate_ensemble(&s).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.trajectories, 300);
        for ti in 0..3 {
            for x in 1..6 {
                assert!((0.0..=1.0).contains(&a.mean(ti, x)));
            }
        }
    }

    #[test]
    fn pair_covariance_domain() {
        let mut s = spec(InitSpec::Constant(0.5), vec![0.1], 50);
        s.pairs = true;
        let st = simulate_ensemble(&s).unwrap();
        assert!(st.pair_covariance(0, 2, 2).is_err());
        assert!(st.pair_covariance(0, 3, 2).is_err());
        assert!(st.pair_covariance(0, 2, 3).is_ok());
    }
}
