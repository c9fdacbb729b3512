//! Fixtures shared by the benchmark targets.

use ssep_core::lattice::{Engine, InitSpec, Simulator};
use ssep_core::rng::{derive, StreamRng};
use ssep_core::{LatticeProfile, Reservoirs};

/// Non-equilibrium reservoirs used throughout the benches.
pub fn reservoirs() -> Reservoirs {
    Reservoirs::new(0.1, 0.9).expect("valid densities")
}

/// A simulator started from a Bernoulli(1/2) product configuration.
pub fn half_filled(n: usize, engine: Engine, seed: u64) -> Simulator<StreamRng> {
    let r = reservoirs();
    let law = InitSpec::Constant(0.5).resolve(n, r).expect("valid init");
    let mut rng = derive(seed, 0);
    let config = law.sample(&mut rng);
    Simulator::new(config, r, engine, rng)
}

/// Flat mean profile at density 1/2.
pub fn flat_profile(n: usize) -> LatticeProfile {
    let r = reservoirs();
    LatticeProfile::new(&vec![0.5; n - 1], r.alpha, r.beta).expect("valid profile")
}
