//! The exclusion process with slow reservoirs, run under the sped-up
//! generator `n² L_n`.
//!
//! Sites are `1..=n−1`. Every bond `(x, x+1)` exchanges occupations at rate
//! `n²`; site 1 is filled at rate `nα` when empty and emptied at rate
//! `n(1 − α)` when occupied, and site `n − 1` likewise with `β`.

mod ensemble;
mod exact;
mod init;
mod simulator;

pub use ensemble::{fold_trajectories, simulate_ensemble, EnsembleSpec, EnsembleStats, Trajectory};
pub use exact::{exact_chain, ExactChain, MAX_EXACT_N};
pub use init::{InitSpec, InitialLaw};
pub use simulator::{Engine, EventObserver, Silent, Simulator};

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::hydro::Reservoirs;

/// Occupation numbers of sites `1..=n−1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    n: usize,
    /// Index `x` holds site `x`; slots `0` and `n` are padding and stay 0.
    occ: Vec<u8>,
}

impl Configuration {
    pub fn empty(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("lattice parameter n = {n} must be at least 3")));
        }
        Ok(Self { n, occ: vec![0; n + 1] })
    }

    pub fn filled(n: usize) -> Result<Self> {
        let mut c = Self::empty(n)?;
        c.occ[1..n].fill(1);
        Ok(c)
    }

    /// Builds a configuration from the occupations of sites `1..=n−1`.
    pub fn from_sites(n: usize, sites: &[u8]) -> Result<Self> {
        let mut c = Self::empty(n)?;
        if sites.len() != n - 1 {
            return Err(Error::Shape(format!("{} occupations for n = {n}", sites.len())));
        }
        if let Some(bad) = sites.iter().find(|&&v| v > 1) {
            return Err(Error::Configuration(format!("occupation {bad} is not 0 or 1")));
        }
        c.occ[1..n].copy_from_slice(sites);
        Ok(c)
    }

    /// Decodes a state index whose bit `x − 1` is `η(x)`.
    pub fn from_index(n: usize, index: usize) -> Result<Self> {
        let mut c = Self::empty(n)?;
        for x in 1..n {
            c.occ[x] = ((index >> (x - 1)) & 1) as u8;
        }
        Ok(c)
    }

    pub fn index(&self) -> usize {
        (1..self.n).map(|x| (self.occ[x] as usize) << (x - 1)).sum()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, x: usize) -> u8 {
        debug_assert!((1..self.n).contains(&x));
        self.occ[x]
    }

    /// Occupations of sites `1..=n−1`.
    pub fn sites(&self) -> &[u8] {
        &self.occ[1..self.n]
    }

    pub fn particles(&self) -> usize {
        self.sites().iter().map(|&v| v as usize).sum()
    }

    #[inline]
    fn is_discordant(&self, bond: usize) -> bool {
        self.occ[bond] != self.occ[bond + 1]
    }

    pub fn active_bonds(&self) -> usize {
        (1..self.n - 1).filter(|&x| self.is_discordant(x)).count()
    }

    #[inline]
    pub fn exchange(&mut self, bond: usize) {
        self.occ.swap(bond, bond + 1);
    }

    #[inline]
    pub fn flip(&mut self, x: usize) {
        self.occ[x] ^= 1;
    }

    pub fn apply(&mut self, event: Event) {
        match event {
            Event::Exchange(x) => self.exchange(x),
            Event::Flip(x) => self.flip(x),
        }
    }
}

/// A state-changing transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// Swap of sites `x` and `x + 1`.
    Exchange(usize),
    /// Creation or annihilation at boundary site `x ∈ {1, n − 1}`.
    Flip(usize),
}

/// Rates of state-changing events under `n² L_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRates {
    pub active_bonds: usize,
    pub bond_rate: f64,
    pub left_flip_rate: f64,
    pub right_flip_rate: f64,
}

impl EventRates {
    pub fn total(&self) -> f64 {
        self.active_bonds as f64 * self.bond_rate + self.left_flip_rate + self.right_flip_rate
    }
}

#[inline]
pub(crate) fn flip_rate(n: usize, occupied: u8, density: f64) -> f64 {
    let nf = n as f64;
    if occupied == 1 {
        nf * (1.0 - density)
    } else {
        nf * density
    }
}

/// Concordant exchanges are no-ops and are left out.
pub fn total_rate(config: &Configuration, reservoirs: Reservoirs) -> EventRates {
    let n = config.n();
    EventRates {
        active_bonds: config.active_bonds(),
        bond_rate: (n * n) as f64,
        left_flip_rate: flip_rate(n, config.get(1), reservoirs.alpha),
        right_flip_rate: flip_rate(n, config.get(n - 1), reservoirs.beta),
    }
}

/// Outcome of [`gillespie_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Jump { wait: f64, event: Event },
    /// No event can ever occur from this state.
    Frozen,
}

/// One step of the direct method, scanning all bonds. Reference
/// implementation for [`Simulator`].
pub fn gillespie_step<R: Rng + ?Sized>(
    config: &mut Configuration,
    reservoirs: Reservoirs,
    rng: &mut R,
) -> Step {
    let rates = total_rate(config, reservoirs);
    let total = rates.total();
    if total <= 0.0 {
        return Step::Frozen;
    }
    let wait = rng.sample::<f64, _>(Exp1) / total;
    let mut v = rng.random::<f64>() * total;
    let n = config.n();
    let event = 'pick: {
        if v < rates.left_flip_rate {
            break 'pick Event::Flip(1);
        }
        v -= rates.left_flip_rate;
        if v < rates.right_flip_rate || rates.active_bonds == 0 {
            break 'pick Event::Flip(n - 1);
        }
        v -= rates.right_flip_rate;
        let target = ((v / rates.bond_rate) as usize).min(rates.active_bonds - 1);
        let bond = (1..n - 1).filter(|&x| config.is_discordant(x)).nth(target).expect("active bond");
        Event::Exchange(bond)
    };
    config.apply(event);
    Step::Jump { wait, event }
}
