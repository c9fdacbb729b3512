use rand::distr::{Distribution, Uniform};
use rand::Rng;
use rand_distr::{Exp1, Poisson};

use super::{flip_rate, Configuration, Event};
use crate::hydro::Reservoirs;
use crate::rng::StreamRng;

/// Exact-in-law event loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    /// Direct method over state-changing events only, with an incrementally
    /// maintained list of discordant bonds.
    Thinned,
    /// Stirring representation: every bond rings at rate `n²` and swaps
    /// unconditionally; each boundary site rings at rate `n` and is redrawn
    /// from its reservoir. Bulk ring counts between boundary rings are
    /// Poisson, so no per-event clock is needed unless an observer asks.
    #[default]
    Uniformized,
}

/// Receives every state-changing event, after it has been applied.
pub trait EventObserver {
    /// When false the engine may skip per-event times.
    const NEEDS_TIMES: bool = true;

    fn on_event(&mut self, time: f64, event: Event, config: &Configuration);
}

/// Observer that ignores everything.
pub struct Silent;

impl EventObserver for Silent {
    const NEEDS_TIMES: bool = false;

    fn on_event(&mut self, _: f64, _: Event, _: &Configuration) {}
}

const NO_SLOT: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct Simulator<R = StreamRng> {
    config: Configuration,
    reservoirs: Reservoirs,
    engine: Engine,
    time: f64,
    rng: R,
    n2: f64,
    bonds: Uniform<u32>,
    active: Vec<u32>,
    slot: Vec<u32>,
}

impl<R: Rng> Simulator<R> {
    pub fn new(config: Configuration, reservoirs: Reservoirs, engine: Engine, rng: R) -> Self {
        let n = config.n();
        let mut sim = Self {
            reservoirs,
            engine,
            time: 0.0,
            rng,
            n2: (n * n) as f64,
            bonds: Uniform::new(1, (n - 1) as u32).expect("n ≥ 3"),
            active: Vec::new(),
            slot: vec![NO_SLOT; n],
            config,
        };
        if engine == Engine::Thinned {
            for b in 1..n - 1 {
                if sim.config.is_discordant(b) {
                    sim.toggle(b);
                }
            }
        }
        sim
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn reservoirs(&self) -> Reservoirs {
        self.reservoirs
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }

    pub fn advance_to(&mut self, t_end: f64) {
        self.advance_to_with(t_end, &mut Silent);
    }

    /// Runs the chain up to time `t_end`. Earlier targets are ignored.
    pub fn advance_to_with<O: EventObserver>(&mut self, t_end: f64, observer: &mut O) {
        if t_end <= self.time {
            return;
        }
        match self.engine {
            Engine::Thinned => self.advance_thinned(t_end, observer),
            Engine::Uniformized => self.advance_uniformized(t_end, observer),
        }
    }

    fn toggle(&mut self, bond: usize) {
        let s = self.slot[bond];
        if s == NO_SLOT {
            self.slot[bond] = self.active.len() as u32;
            self.active.push(bond as u32);
        } else {
            let last = *self.active.last().expect("nonempty");
            self.active.swap_remove(s as usize);
            if last as usize != bond {
                self.slot[last as usize] = s;
            }
            self.slot[bond] = NO_SLOT;
        }
    }

    fn advance_thinned<O: EventObserver>(&mut self, t_end: f64, observer: &mut O) {
        let n = self.config.n();
        loop {
            let left = flip_rate(n, self.config.get(1), self.reservoirs.alpha);
            let right = flip_rate(n, self.config.get(n - 1), self.reservoirs.beta);
            let bulk = self.n2 * self.active.len() as f64;
            let total = bulk + left + right;
            if total <= 0.0 {
                self.time = t_end;
                return;
            }
            let wait: f64 = self.rng.sample::<f64, _>(Exp1) / total;
            // Memorylessness lets the overshooting clock be discarded.
            if self.time + wait > t_end {
                self.time = t_end;
                return;
            }
            self.time += wait;
            let v = self.rng.random::<f64>() * total;
            let event = if v < bulk {
                let idx = ((v / self.n2) as usize).min(self.active.len() - 1);
                let bond = self.active[idx] as usize;
                self.config.exchange(bond);
                if bond > 1 {
                    self.toggle(bond - 1);
                }
                if bond + 1 < n - 1 {
                    self.toggle(bond + 1);
                }
                Event::Exchange(bond)
            } else {
                let x = if v - bulk < left { 1 } else { n - 1 };
                self.config.flip(x);
                self.toggle(if x == 1 { 1 } else { n - 2 });
                Event::Flip(x)
            };
            observer.on_event(self.time, event, &self.config);
        }
    }

    fn advance_uniformized<O: EventObserver>(&mut self, t_end: f64, observer: &mut O) {
        let n = self.config.n();
        let nf = n as f64;
        let bulk_rate = self.n2 * (n - 2) as f64;
        loop {
            let boundary_time = self.time + self.rng.sample::<f64, _>(Exp1) / (2.0 * nf);
            let stop = boundary_time.min(t_end);
            if O::NEEDS_TIMES {
                loop {
                    let wait: f64 = self.rng.sample::<f64, _>(Exp1) / bulk_rate;
                    if self.time + wait >= stop {
                        break;
                    }
                    self.time += wait;
                    let bond = self.bonds.sample(&mut self.rng) as usize;
                    if self.config.is_discordant(bond) {
                        self.config.exchange(bond);
                        observer.on_event(self.time, Event::Exchange(bond), &self.config);
                    }
                }
            } else {
                let mean = bulk_rate * (stop - self.time);
                let rings = if mean > 0.0 {
                    Poisson::new(mean).expect("finite mean").sample(&mut self.rng) as u64
                } else {
                    0
                };
                for _ in 0..rings {
                    let bond = self.bonds.sample(&mut self.rng) as usize;
                    self.config.exchange(bond);
                }
            }
            self.time = stop;
            if boundary_time > t_end {
                return;
            }
            let (x, density) = if self.rng.random::<bool>() {
                (1, self.reservoirs.alpha)
            } else {
                (n - 1, self.reservoirs.beta)
            };
            let fresh = u8::from(self.rng.random::<f64>() < density);
            if fresh != self.config.get(x) {
                self.config.flip(x);
                observer.on_event(self.time, Event::Flip(x), &self.config);
            }
        }
    }

    /// Checks the discordant-bond list against a full scan.
    #[cfg(test)]
    fn bookkeeping_consistent(&self) -> bool {
        let n = self.config.n();
        let mut listed: Vec<usize> = self.active.iter().map(|&b| b as usize).collect();
        listed.sort_unstable();
        let scanned: Vec<usize> = (1..n - 1).filter(|&b| self.config.is_discordant(b)).collect();
        listed == scanned
            && self.active.iter().enumerate().all(|(i, &b)| self.slot[b as usize] == i as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive;

    struct Recorder {
        last_time: f64,
        flips: i64,
        events: usize,
        before: Configuration,
    }

    impl EventObserver for Recorder {
        fn on_event(&mut self, time: f64, event: Event, config: &Configuration) {
            assert!(time >= self.last_time);
            self.last_time = time;
            self.events += 1;
            match event {
                Event::Flip(x) => {
                    assert!(x == 1 || x == config.n() - 1);
                    self.flips += if config.get(x) == 1 { 1 } else { -1 };
                }
                Event::Exchange(x) => {
                    assert_ne!(self.before.get(x), self.before.get(x + 1));
                    assert!(x >= 1 && x + 1 < config.n());
                }
            }
            self.before = config.clone();
        }
    }

    fn run(engine: Engine) {
        let start = Configuration::from_sites(9, &[1, 1, 0, 0, 1, 0, 1, 1]).unwrap();
        let res = Reservoirs::new(0.2, 0.7).unwrap();
        let mut sim = Simulator::new(start.clone(), res, engine, derive(42, 0));
        let mut rec = Recorder { last_time: 0.0, flips: 0, events: 0, before: start.clone() };
        for k in 1..=20 {
            sim.advance_to_with(0.05 * k as f64, &mut rec);
            assert_eq!(sim.time(), 0.05 * k as f64);
            assert_eq!(sim.config().particles() as i64 - start.particles() as i64, rec.flips);
            if engine == Engine::Thinned {
                assert!(sim.bookkeeping_consistent());
            }
        }
        assert!(rec.events > 100);
    }

    #[test]
    fn thinned_counts_flips() {
        run(Engine::Thinned);
    }

    #[test]
    fn uniformized_counts_flips() {
        run(Engine::Uniformized);
    }

    #[test]
    fn frozen_state_just_advances_time() {
        let c = Configuration::filled(5).unwrap();
        let res = Reservoirs::new(1.0, 1.0).unwrap();
        for engine in [Engine::Thinned, Engine::Uniformized] {
            let mut sim = Simulator::new(c.clone(), res, engine, derive(0, 0));
            sim.advance_to(3.0);
            assert_eq!(sim.config(), &c);
            assert_eq!(sim.time(), 3.0);
        }
    }

    #[test]
    fn same_stream_same_path() {
        let c = Configuration::from_sites(6, &[0, 1, 0, 1, 0]).unwrap();
        let res = Reservoirs::new(0.4, 0.1).unwrap();
        for engine in [Engine::Thinned, Engine::Uniformized] {
            let mut a = Simulator::new(c.clone(), res, engine, derive(9, 4));
            let mut b = Simulator::new(c.clone(), res, engine, derive(9, 4));
            a.advance_to(0.7);
            b.advance_to(0.3);
            b.advance_to(0.7);
            // Thinned clocks are redrawn at each target, so only same-target runs coincide.
            let mut c2 = Simulator::new(c.clone(), res, engine, derive(9, 4));
            c2.advance_to(0.7);
            assert_eq!(a.config(), c2.config());
            assert!(b.config().sites().iter().all(|&v| v <= 1));
        }
    }
}
