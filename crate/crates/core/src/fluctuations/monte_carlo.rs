//! Ensemble samples of the fluctuation field.

use super::{field_from_samples, lattice_samples};
use crate::error::{check_time, Result};
use crate::hydro::{DiscreteHeat, LatticeProfile, Reservoirs};
use crate::lattice::{fold_trajectories, Engine, EnsembleSpec, InitSpec};
use crate::spectral::UnitFunction;
use crate::stats::{CoMoments, Moments};

/// Field observations `Y_t(f)` for several test functions, each trajectory
/// first run for `burn_in` and then observed at `burn_in + t`.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub n: usize,
    pub reservoirs: Reservoirs,
    pub init: InitSpec,
    pub times: Vec<f64>,
    pub trajectories: usize,
    pub master_seed: u64,
    pub engine: Engine,
    pub burn_in: f64,
}

/// `values[i][f][m]`: trajectory `m`, function `f`, time `times[i]`.
#[derive(Debug, Clone)]
pub struct FieldSamples {
    pub times: Vec<f64>,
    pub profiles: Vec<LatticeProfile>,
    pub values: Vec<Vec<Vec<f64>>>,
}

impl FieldSamples {
    pub fn moments(&self, ti: usize, fi: usize) -> Moments {
        Moments::from_slice(&self.values[ti][fi])
    }

    /// Joint moments of two observations across trajectories.
    pub fn co_moments(&self, (ti, fi): (usize, usize), (tj, fj): (usize, usize)) -> CoMoments {
        let mut c = CoMoments::default();
        for (x, y) in self.values[ti][fi].iter().zip(&self.values[tj][fj]) {
            c.push(*x, *y);
        }
        c
    }
}

/// Samples the field centred by the exact mean profile `ρ^n` of the
/// initial law evolved to each observation time.
pub fn sample_fields(spec: &FieldSpec, functions: &[&dyn UnitFunction]) -> Result<FieldSamples> {
    let ensemble = EnsembleSpec::new(
        spec.n,
        spec.reservoirs,
        spec.init.clone(),
        spec.times.clone(),
        spec.trajectories,
        spec.master_seed,
    );
    ensemble.validate()?;
    check_time(spec.burn_in)?;
    let law = spec.init.resolve(spec.n, spec.reservoirs)?;
    let heat = DiscreteHeat::new(spec.n, spec.reservoirs)?;
    let start = LatticeProfile::new(law.marginals(), spec.reservoirs.alpha, spec.reservoirs.beta)?;
    let profiles = spec
        .times
        .iter()
        .map(|&t| heat.evolve(&start, spec.burn_in + t))
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<Vec<f64>> = functions.iter().map(|f| lattice_samples(*f, spec.n)).collect();
    let empty = || vec![vec![Vec::new(); samples.len()]; spec.times.len()];
    let values = fold_trajectories(
        &law,
        spec.reservoirs,
        spec.engine,
        spec.trajectories,
        spec.master_seed,
        empty,
        |acc: &mut Vec<Vec<Vec<f64>>>, mut traj| {
            for (ti, &t) in spec.times.iter().enumerate() {
                traj.sim.advance_to(spec.burn_in + t);
                for (fi, p) in samples.iter().enumerate() {
                    acc[ti][fi].push(field_from_samples(traj.sim.config(), &profiles[ti], p));
                }
            }
        },
        |a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (ca, cb) in ra.iter_mut().zip(rb) {
                    ca.extend(cb);
                }
            }
        },
    );
    Ok(FieldSamples { times: spec.times.clone(), profiles, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chi;

    #[test]
    fn initial_variance_is_independent_site_sum() {
        let n = 40;
        let rho0 = |u: f64| 0.2 + 0.5 * u;
        let f = |u: f64| (3.0 * u).cos() + 0.5;
        let spec = FieldSpec {
            n,
            reservoirs: Reservoirs::new(0.2, 0.7).unwrap(),
            init: InitSpec::Linear { intercept: 0.2, slope: 0.5 },
            times: vec![0.0, 0.01],
            trajectories: 4000,
            master_seed: 11,
            engine: Engine::Uniformized,
            burn_in: 0.0,
        };
        let out = sample_fields(&spec, &[&f]).unwrap();
        let m = out.moments(0, 0);
        let want: f64 = (1..n)
            .map(|x| {
                let u = x as f64 / n as f64;
                f(u).powi(2) * chi(rho0(u))
            })
            .sum::<f64>()
            / n as f64;
        assert!((m.variance() - want).abs() < 4.0 * m.variance_stderr());
        assert!(m.mean().abs() < 4.0 * m.stderr());
        let later = out.moments(1, 0);
        assert!(later.mean().abs() < 4.0 * later.stderr());
        assert_eq!(out.values[0][0].len(), 4000);
    }
}
