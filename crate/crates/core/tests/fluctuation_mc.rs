use ssep_core::fluctuations::{
    field_evaluate, lattice_samples, martingale_paths, ou_covariance, sample_fields, Convention, FieldSpec,
};
use ssep_core::hydro::HydroSolution;
use ssep_core::lattice::{fold_trajectories, Engine};
use ssep_core::stats::CoMoments;
use ssep_core::{EigenBasis, InitSpec, LatticeProfile, Reservoirs, SpectralFunction};

#[test]
fn initial_field_is_uncorrelated_with_later_noise() {
    let n = 48;
    let r = Reservoirs::new(0.2, 0.7).unwrap();
    let b = EigenBasis::new(4).unwrap();
    let f = SpectralFunction::mode(&b, 1);
    let g = SpectralFunction::mode(&b, 2);
    let init = InitSpec::Linear { intercept: 0.2, slope: 0.5 };
    let law = init.resolve(n, r).unwrap();
    let p0 = LatticeProfile::new(law.marginals(), r.alpha, r.beta).unwrap();
    let phis = vec![lattice_samples(&g, n)];
    let co = fold_trajectories(
        &law,
        r,
        Engine::Uniformized,
        6000,
        21,
        CoMoments::default,
        |acc, mut traj| {
            let y0 = field_evaluate(traj.sim.config(), &p0, &f).unwrap();
            let path = martingale_paths(&mut traj.sim, &phis, &[0.1]);
            acc.push(y0, path[0].m[0]);
        },
        |a, b| a.merge(&b),
    );
    let (slope, se) = co.slope();
    assert!(slope.abs() < 4.0 * se, "slope {slope} ± {se}");
}

#[test]
fn conditional_mean_follows_the_semigroup() {
    let n = 64;
    let r = Reservoirs::new(0.1, 0.9).unwrap();
    let b = EigenBasis::new(8).unwrap();
    let f = SpectralFunction::mode(&b, 1);
    let (s, t) = (0.05, 0.15);
    let propagated = f.semigroup(t - s).unwrap();
    let spec = FieldSpec {
        n,
        reservoirs: r,
        init: InitSpec::Linear { intercept: 0.2, slope: 0.5 },
        times: vec![s, t],
        trajectories: 6000,
        master_seed: 8,
        engine: Engine::Uniformized,
        burn_in: 0.0,
    };
    let out = sample_fields(&spec, &[&f, &propagated]).unwrap();
    let (slope, se) = out.co_moments((0, 1), (1, 0)).slope();
    assert!((slope - 1.0).abs() < 4.0 * se + 0.05, "slope {slope} ± {se}");
}

#[test]
fn local_gibbs_variance_at_moderate_size() {
    let n = 64;
    let r = Reservoirs::new(0.2, 0.7).unwrap();
    let b = EigenBasis::new(16).unwrap();
    let f = SpectralFunction::mode(&b, 1);
    let rho0 = |u: f64| 0.2 + 0.5 * u;
    let path = HydroSolution::new(&rho0, r, &b);
    let t = 0.05;
    let spec = FieldSpec {
        n,
        reservoirs: r,
        init: InitSpec::Linear { intercept: 0.2, slope: 0.5 },
        times: vec![t],
        trajectories: 6000,
        master_seed: 2,
        engine: Engine::Uniformized,
        burn_in: 0.0,
    };
    let out = sample_fields(&spec, &[&f]).unwrap();
    let m = out.moments(0, 0);
    let sigma0 = ssep_core::fluctuations::local_gibbs_sigma0(rho0);
    let predicted = ou_covariance(&f, &f, t, t, sigma0, &path, Convention::Plus).unwrap();
    let allowance = 1.0 / (n as f64).sqrt();
    assert!((m.variance() - predicted).abs() < 4.0 * m.variance_stderr() + allowance);
}
