use proptest::prelude::*;
use ssep_core::lattice::{
    exact_chain, fold_trajectories, gillespie_step, simulate_ensemble, Engine, EnsembleSpec, Event, Step,
};
use ssep_core::rng::derive;
use ssep_core::{Configuration, InitSpec, Reservoirs};

fn state_counts(n: usize, r: Reservoirs, engine: Engine, t: f64, m: usize, seed: u64) -> Vec<u64> {
    let law = InitSpec::Constant(0.5).resolve(n, r).unwrap();
    fold_trajectories(
        &law,
        r,
        engine,
        m,
        seed,
        || vec![0u64; 1 << (n - 1)],
        |acc, mut traj| {
            traj.sim.advance_to(t);
            acc[traj.sim.config().index()] += 1;
        },
        |a, b| a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
    )
}

#[test]
fn both_engines_match_the_exact_law() {
    let r = Reservoirs::new(0.2, 0.7).unwrap();
    for n in [3, 5] {
        let chain = exact_chain(n, r).unwrap();
        let start = chain.product_law(&vec![0.5; n - 1]).unwrap();
        for t in [0.1, 1.0] {
            let law = chain.law_at(&start, t).unwrap();
            for engine in [Engine::Thinned, Engine::Uniformized] {
                let counts = state_counts(n, r, engine, t, 20_000, 7);
                let tv = chain.total_variation(&law, &counts);
                assert!(tv < 0.02, "n = {n}, t = {t}, {engine:?}: TV {tv}");
            }
        }
    }
}

#[test]
fn reference_stepper_matches_the_exact_law() {
    let n = 4;
    let r = Reservoirs::new(0.1, 0.9).unwrap();
    let chain = exact_chain(n, r).unwrap();
    let start = Configuration::from_sites(n, &[0, 1, 0]).unwrap();
    let t = 0.2;
    let law = chain.law_at(&chain.point_mass(&start), t).unwrap();
    let mut counts = vec![0u64; chain.states()];
    for i in 0..20_000 {
        let mut rng = derive(3, i);
        let mut c = start.clone();
        let mut clock = 0.0;
        loop {
            let mut next = c.clone();
            match gillespie_step(&mut next, r, &mut rng) {
                Step::Frozen => break,
                Step::Jump { wait, .. } => {
                    clock += wait;
                    if clock > t {
                        break;
                    }
                    c = next;
                }
            }
        }
        counts[c.index()] += 1;
    }
    let tv = chain.total_variation(&law, &counts);
    assert!(tv < 0.02, "TV {tv}");
}

#[test]
fn ensemble_is_reproducible_and_seed_sensitive() {
    let r = Reservoirs::new(0.3, 0.6).unwrap();
    let spec = EnsembleSpec::new(10, r, InitSpec::Constant(0.4), vec![0.05, 0.1], 256, 42);
    let a = simulate_ensemble(&spec).unwrap();
    let b = simulate_ensemble(&spec).unwrap();
    assert_eq!(a, b);
    let other = simulate_ensemble(&EnsembleSpec { master_seed: 43, ..spec }).unwrap();
    assert_ne!(a.site_counts, other.site_counts);
}

#[test]
fn ensemble_means_track_the_exact_marginals() {
    let n = 6;
    let r = Reservoirs::new(0.1, 0.8).unwrap();
    let chain = exact_chain(n, r).unwrap();
    let start = chain.product_law(&vec![0.5; n - 1]).unwrap();
    let spec = EnsembleSpec::new(n, r, InitSpec::Constant(0.5), vec![0.05, 0.3], 8000, 5);
    let stats = simulate_ensemble(&spec).unwrap();
    for (ti, &t) in spec.times.iter().enumerate() {
        let exact = chain.marginals(&chain.law_at(&start, t).unwrap());
        for x in 1..n {
            let z = (stats.mean(ti, x) - exact[x - 1]) / stats.stderr(ti, x);
            assert!(z.abs() < 4.5, "t = {t}, x = {x}: z = {z}");
        }
    }
}

proptest! {
    #[test]
    fn exchanges_conserve_particles(sites in prop::collection::vec(0u8..2, 2..30), bonds in prop::collection::vec(0usize..1000, 0..50)) {
        let n = sites.len() + 1;
        let mut c = Configuration::from_sites(n, &sites).unwrap();
        let before = c.particles();
        for b in bonds {
            if n > 2 {
                c.apply(Event::Exchange(1 + b % (n - 2)));
            }
        }
        prop_assert_eq!(c.particles(), before);
        prop_assert!(c.particles() <= n - 1);
    }

    #[test]
    fn index_round_trip(n in 3usize..13, raw in any::<u64>()) {
        let i = (raw as usize) % (1 << (n - 1));
        let c = Configuration::from_index(n, i).unwrap();
        prop_assert_eq!(c.index(), i);
    }
}
