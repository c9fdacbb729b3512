//! Dynkin martingales of `Y_t(φ)` along simulated paths.
//!
//! For fixed `φ` the drift of `n^{-1/2} Σ φ_x η_x` under `n² L_n` is
//! `n^{3/2} [Σ_x c_x η_x + (α φ_1 + β φ_{n−1})/n]` where `c` is the Neumann
//! Laplacian of `φ` on `1..=n−1` with the reservoir leak `φ/n` removed at both
//! ends. Both it and `Γ` change locally at each event, so the time integrals
//! are exact sums over holding intervals.

use rand::Rng;

use super::lattice_samples;
use crate::error::Result;
use crate::hydro::Reservoirs;
use crate::lattice::{fold_trajectories, Configuration, Engine, Event, EventObserver, InitSpec, Simulator};
use crate::spectral::SpectralFunction;
use crate::stats::Moments;

/// Per-function weights and running integrals.
#[derive(Debug, Clone)]
struct Channel {
    phi: Vec<f64>,
    drift: Vec<f64>,
    bond_weight: Vec<f64>,
    /// `(φ(1/n)², φ((n−1)/n)²)`.
    edge_sq: (f64, f64),
    y0: f64,
    s: f64,
    gamma: f64,
    int_s: f64,
    int_gamma: f64,
}

/// Running integrals of the drift and of `Γ` for several test functions
/// along one path. Only the sites and bonds touched by an event are
/// revisited.
#[derive(Debug, Clone)]
pub struct MartingaleTracker {
    n: usize,
    reservoirs: Reservoirs,
    channels: Vec<Channel>,
    discordant: Vec<bool>,
    left: u8,
    right: u8,
    start: f64,
    last: f64,
}

impl MartingaleTracker {
    /// Each entry of `phis` holds `φ(x/n)` for `x = 0..=n`.
    pub fn new(phis: &[Vec<f64>], config: &Configuration, reservoirs: Reservoirs, start: f64) -> Self {
        let n = config.n();
        let nf = n as f64;
        let discordant: Vec<bool> = (0..n).map(|x| (1..n - 1).contains(&x) && config.get(x) != config.get(x + 1)).collect();
        let channels = phis
            .iter()
            .map(|phi| {
                let mut drift = vec![0.0; n + 1];
                for x in 1..n {
                    let left = if x > 1 { phi[x - 1] - phi[x] } else { -phi[1] / nf };
                    let right = if x < n - 1 { phi[x + 1] - phi[x] } else { -phi[n - 1] / nf };
                    drift[x] = left + right;
                }
                let mut bond_weight = vec![0.0; n];
                for x in 1..n - 1 {
                    bond_weight[x] = (nf * (phi[x + 1] - phi[x])).powi(2) / nf;
                }
                let bulk: f64 = (1..n - 1).filter(|&x| discordant[x]).map(|x| bond_weight[x]).sum();
                let edge_sq = (phi[1] * phi[1], phi[n - 1] * phi[n - 1]);
                let s = (1..n).map(|x| drift[x] * config.get(x) as f64).sum();
                let y0 = (1..n).map(|x| phi[x] * config.get(x) as f64).sum::<f64>() / nf.sqrt();
                Channel { phi: phi.clone(), drift, bond_weight, edge_sq, y0, s, gamma: bulk, int_s: 0.0, int_gamma: 0.0 }
            })
            .collect();
        let mut tracker = Self {
            n,
            reservoirs,
            channels,
            discordant,
            left: config.get(1),
            right: config.get(n - 1),
            start,
            last: start,
        };
        tracker.shift_boundary_gamma(1.0);
        tracker
    }

    /// Adds `sign` times the boundary part of `Γ` for the held end sites.
    fn shift_boundary_gamma(&mut self, sign: f64) {
        let Reservoirs { alpha, beta } = self.reservoirs;
        let w1 = alpha + self.left as f64 * (1.0 - 2.0 * alpha);
        let wn = beta + self.right as f64 * (1.0 - 2.0 * beta);
        for c in &mut self.channels {
            c.gamma += sign * (c.edge_sq.0 * w1 + c.edge_sq.1 * wn);
        }
    }

    /// Current `Γ(η)` of function `k`.
    pub fn gamma(&self, k: usize) -> f64 {
        self.channels[k].gamma
    }

    /// Current drift sum `Σ c_x η(x)` of function `k`.
    pub fn drift_sum(&self, k: usize) -> f64 {
        self.channels[k].s
    }

    fn refresh_bond(&mut self, x: usize, config: &Configuration) {
        if !(1..self.n - 1).contains(&x) {
            return;
        }
        let now = config.get(x) != config.get(x + 1);
        if now != self.discordant[x] {
            self.discordant[x] = now;
            let sign = if now { 1.0 } else { -1.0 };
            for c in &mut self.channels {
                c.gamma += sign * c.bond_weight[x];
            }
        }
    }

    /// Integrates the held state up to `time`.
    fn integrate_to(&mut self, time: f64) {
        let dt = time - self.last;
        for c in &mut self.channels {
            c.int_s += c.s * dt;
            c.int_gamma += c.gamma * dt;
        }
        self.last = time;
    }

    fn apply(&mut self, event: Event, config: &Configuration) {
        match event {
            Event::Exchange(b) => {
                let d = config.get(b) as f64 - config.get(b + 1) as f64;
                for c in &mut self.channels {
                    c.s += (c.drift[b] - c.drift[b + 1]) * d;
                }
                self.refresh_bond(b - 1, config);
                self.refresh_bond(b + 1, config);
            }
            Event::Flip(x) => {
                let d = 2.0 * config.get(x) as f64 - 1.0;
                for c in &mut self.channels {
                    c.s += c.drift[x] * d;
                }
                self.refresh_bond(x - 1, config);
                self.refresh_bond(x, config);
            }
        }
        let (left, right) = (config.get(1), config.get(self.n - 1));
        if (left, right) != (self.left, self.right) {
            self.shift_boundary_gamma(-1.0);
            self.left = left;
            self.right = right;
            self.shift_boundary_gamma(1.0);
        }
    }

    /// `(M_t, N_t, ∫_0^t Γ)` of function `k`; `config` must be the current state.
    pub fn values(&mut self, k: usize, time: f64, config: &Configuration) -> (f64, f64, f64) {
        if time > self.last {
            self.integrate_to(time);
        }
        let nf = self.n as f64;
        let Reservoirs { alpha, beta } = self.reservoirs;
        let c = &self.channels[k];
        let y = (1..self.n).map(|x| c.phi[x] * config.get(x) as f64).sum::<f64>() / nf.sqrt();
        let constant = (alpha * c.phi[1] + beta * c.phi[self.n - 1]) / nf;
        let m = y - c.y0 - nf.powf(1.5) * (c.int_s + constant * (time - self.start));
        (m, m * m - c.int_gamma, c.int_gamma)
    }
}

impl EventObserver for MartingaleTracker {
    fn on_event(&mut self, time: f64, event: Event, config: &Configuration) {
        self.integrate_to(time);
        self.apply(event, config);
    }
}

/// `M`, `N` and `∫Γ` of one test function at each observation time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MartingalePath {
    pub m: Vec<f64>,
    pub n: Vec<f64>,
    pub quadratic_variation: Vec<f64>,
}

/// Runs `sim` through the sorted `times` and returns one path per test
/// function, each given by its lattice samples `φ(x/n)`, `x = 0..=n`.
pub fn martingale_paths<R: Rng>(sim: &mut Simulator<R>, phis: &[Vec<f64>], times: &[f64]) -> Vec<MartingalePath> {
    let mut tracker = MartingaleTracker::new(phis, sim.config(), sim.reservoirs(), sim.time());
    let mut paths = vec![MartingalePath::default(); phis.len()];
    for &t in times {
        sim.advance_to_with(t, &mut tracker);
        let now = sim.time();
        for (k, path) in paths.iter_mut().enumerate() {
            let (m, n, qv) = tracker.values(k, now, sim.config());
            path.m.push(m);
            path.n.push(n);
            path.quadratic_variation.push(qv);
        }
    }
    paths
}

/// Ensemble check that `M` and `N` are centred.
#[derive(Debug, Clone)]
pub struct MartingaleSpec {
    pub n: usize,
    pub reservoirs: Reservoirs,
    pub init: InitSpec,
    pub functions: Vec<SpectralFunction>,
    pub times: Vec<f64>,
    pub trajectories: usize,
    pub master_seed: u64,
    pub engine: Engine,
}

#[derive(Debug, Clone, Default)]
pub struct MartingaleRow {
    pub m: Moments,
    pub n: Moments,
    pub quadratic_variation: Moments,
}

#[derive(Debug, Clone)]
pub struct MartingaleReport {
    pub times: Vec<f64>,
    /// `rows[f][i]` for function `f` at `times[i]`.
    pub rows: Vec<Vec<MartingaleRow>>,
}

pub fn martingale_check(spec: &MartingaleSpec) -> Result<MartingaleReport> {
    let ensemble = crate::lattice::EnsembleSpec::new(
        spec.n,
        spec.reservoirs,
        spec.init.clone(),
        spec.times.clone(),
        spec.trajectories,
        spec.master_seed,
    );
    ensemble.validate()?;
    let law = spec.init.resolve(spec.n, spec.reservoirs)?;
    let phis: Vec<Vec<f64>> = spec.functions.iter().map(|f| lattice_samples(f, spec.n)).collect();
    let empty = || vec![vec![MartingaleRow::default(); spec.times.len()]; phis.len()];
    let rows = fold_trajectories(
        &law,
        spec.reservoirs,
        spec.engine,
        spec.trajectories,
        spec.master_seed,
        empty,
        |acc, mut traj| {
            let paths = martingale_paths(&mut traj.sim, &phis, &spec.times);
            for (row, path) in acc.iter_mut().zip(paths) {
                for (i, cell) in row.iter_mut().enumerate() {
                    cell.m.push(path.m[i]);
                    cell.n.push(path.n[i]);
                    cell.quadratic_variation.push(path.quadratic_variation[i]);
                }
            }
        },
        |a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (ca, cb) in ra.iter_mut().zip(rb) {
                    ca.m.merge(&cb.m);
                    ca.n.merge(&cb.n);
                    ca.quadratic_variation.merge(&cb.quadratic_variation);
                }
            }
        },
    );
    Ok(MartingaleReport { times: spec.times.clone(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluctuations::gamma_from_samples;
    use crate::lattice::exact_chain;
    use crate::quadrature::GaussLegendre;
    use crate::rng::derive;
    use crate::spectral::EigenBasis;

    fn res(a: f64, b: f64) -> Reservoirs {
        Reservoirs::new(a, b).unwrap()
    }

    /// Recomputes drift sums and `Γ` from scratch at every event.
    struct Audit {
        tracker: MartingaleTracker,
        phis: Vec<Vec<f64>>,
        reservoirs: Reservoirs,
        worst: f64,
        events: usize,
    }

    impl EventObserver for Audit {
        fn on_event(&mut self, time: f64, event: Event, config: &Configuration) {
            self.tracker.on_event(time, event, config);
            let n = config.n();
            for (k, phi) in self.phis.iter().enumerate() {
                let drift = &self.tracker.channels[k].drift;
                let s: f64 = (1..n).map(|x| drift[x] * config.get(x) as f64).sum();
                let g = gamma_from_samples(config, phi, self.reservoirs);
                let gap = (s - self.tracker.drift_sum(k)).abs().max((g - self.tracker.gamma(k)).abs());
                self.worst = self.worst.max(gap);
            }
            self.events += 1;
        }
    }

    #[test]
    fn incremental_updates_match_recomputation() {
        for engine in [Engine::Thinned, Engine::Uniformized] {
            let n = 9;
            let r = res(0.25, 0.8);
            let phis = vec![lattice_samples(&|u: f64| (3.0 * u).sin() + u, n), lattice_samples(&|u: f64| u * u, n)];
            let mut rng = derive(5, 0);
            let config = InitSpec::Constant(0.5).resolve(n, r).unwrap().sample(&mut rng);
            let mut sim = Simulator::new(config, r, engine, rng);
            let tracker = MartingaleTracker::new(&phis, sim.config(), r, 0.0);
            let mut audit = Audit { tracker, phis, reservoirs: r, worst: 0.0, events: 0 };
            sim.advance_to_with(0.5, &mut audit);
            assert!(audit.events > 100);
            assert!(audit.worst < 1e-9, "{engine:?}: {}", audit.worst);
        }
    }

    /// `E[M_t] = 0` from the exact law: the drift integral uses Gauss nodes
    /// in time on the matrix-exponential marginals.
    #[test]
    fn exact_chain_gives_centred_martingale() {
        let n = 4;
        let r = res(0.1, 0.9);
        let chain = exact_chain(n, r).unwrap();
        let phi = lattice_samples(&|u: f64| 1.0 + (2.0 * u).cos(), n);
        let config = Configuration::from_sites(n, &[1, 0, 1]).unwrap();
        let tracker = MartingaleTracker::new(&[phi.clone()], &config, r, 0.0);
        let weights = &tracker.channels[0].drift;
        let start = chain.point_mass(&config);
        let t = 0.3;
        let nf = n as f64;
        let y = |law: &nalgebra::DVector<f64>| {
            chain.marginals(law).iter().enumerate().map(|(i, m)| phi[i + 1] * m).sum::<f64>() / nf.sqrt()
        };
        let rule = GaussLegendre::new(40);
        let drift = rule.integrate(|v| {
            let law = chain.law_at(&start, v * t).unwrap();
            t * chain.marginals(&law).iter().enumerate().map(|(i, m)| weights[i + 1] * m).sum::<f64>()
        });
        let constant = (r.alpha * phi[1] + r.beta * phi[n - 1]) / nf * t;
        let end = chain.law_at(&start, t).unwrap();
        let mean_m = y(&end) - y(&start) - nf.powf(1.5) * (drift + constant);
        assert!(mean_m.abs() < 1e-8, "{mean_m}");
    }

    #[test]
    fn ensemble_martingales_are_centred() {
        let basis = EigenBasis::new(4).unwrap();
        let spec = MartingaleSpec {
            n: 12,
            reservoirs: res(0.2, 0.7),
            init: InitSpec::Constant(0.5),
            functions: vec![SpectralFunction::mode(&basis, 1), SpectralFunction::mode(&basis, 2)],
            times: vec![0.05, 0.2],
            trajectories: 2000,
            master_seed: 99,
            engine: Engine::Uniformized,
        };
        let report = martingale_check(&spec).unwrap();
        for row in &report.rows {
            for cell in row {
                assert!(cell.m.mean().abs() < 4.5 * cell.m.stderr());
                assert!(cell.n.mean().abs() < 4.5 * cell.n.stderr());
                assert!(cell.quadratic_variation.mean() > 0.0);
            }
        }
    }
}
