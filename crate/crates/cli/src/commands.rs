use std::path::PathBuf;

use ssep_core::correlations::{
    empirical_correlations, evolve_correlations, stationary_correlations, CorrelationGrid, CorrelationOptions,
};
use ssep_core::fluctuations::{
    local_gibbs_sigma0, ou_covariance, sample_fields, stationary_covariance, Convention, CovarianceReport, FieldSpec,
};
use ssep_core::hydro::{DiscreteHeat, HydroSolution};
use ssep_core::lattice::{exact_chain, simulate_ensemble, EnsembleSpec, InitialLaw};
use ssep_core::spectral::{find_eigenvalues, SampledGrid, UnitFunction};
use ssep_core::stats::Moments;
use ssep_core::{EigenBasis, InitSpec, LatticeProfile, Reservoirs, SpectralFunction};

use crate::config::{
    CorrelationSource, CorrelationsConfig, CovarianceConfig, CovarianceMode, ProfileConfig, Resolved, Run,
    SimulateConfig, SpectrumConfig,
};
use crate::error::{CliError, CliResult};
use crate::output::{sig17, CsvFile};

/// Shortest round-trip form, scientific outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn time_label(t: f64) -> String {
    if t.is_infinite() {
        "inf".into()
    } else {
        num(t)
    }
}

pub fn spectrum(c: &SpectrumConfig, resolved: &Resolved, run: &Run) -> CliResult<Vec<PathBuf>> {
    let modes = find_eigenvalues(c.count, c.tol_root)?;
    let mut csv = CsvFile::create(&run.out, "spectrum.csv", resolved, run, "k,sqrt_lambda,lambda,norm_const")?;
    for m in &modes {
        csv.row(&[m.index.to_string(), sig17(m.sqrt_lambda), sig17(m.lambda), sig17(m.norm_const)])?;
    }
    Ok(vec![csv.finish()?])
}

pub fn simulate(c: &SimulateConfig, resolved: &Resolved, run: &Run) -> CliResult<Vec<PathBuf>> {
    let reservoirs = Reservoirs::new(c.alpha, c.beta)?;
    let mut spec =
        EnsembleSpec::new(c.n, reservoirs, InitSpec::parse(&c.init)?, c.times.clone(), c.trajectories, c.seed);
    spec.engine = c.engine.into();
    spec.pairs = c.pairs;
    let stats = simulate_ensemble(&spec)?;

    let mut files = Vec::new();
    let mut csv = CsvFile::create(&run.out, "ensemble.csv", resolved, run, "t,x,mean,stderr")?;
    for (ti, &t) in c.times.iter().enumerate() {
        for x in 1..c.n {
            csv.row(&[num(t), x.to_string(), num(stats.mean(ti, x)), num(stats.stderr(ti, x))])?;
        }
    }
    files.push(csv.finish()?);
    if c.pairs {
        let mut csv = CsvFile::create(&run.out, "pairs.csv", resolved, run, "t,x,y,cov,stderr")?;
        for (ti, &t) in c.times.iter().enumerate() {
            for x in 1..c.n {
                for y in x + 1..c.n {
                    let (cov, se) = stats.pair_covariance(ti, x, y)?;
                    csv.row(&[num(t), x.to_string(), y.to_string(), num(cov), num(se)])?;
                }
            }
        }
        files.push(csv.finish()?);
    }
    Ok(files)
}

fn initial_profile(law: &InitialLaw, reservoirs: Reservoirs) -> CliResult<LatticeProfile> {
    Ok(LatticeProfile::new(law.marginals(), reservoirs.alpha, reservoirs.beta)?)
}

pub fn profile(c: &ProfileConfig, resolved: &Resolved, run: &Run) -> CliResult<Vec<PathBuf>> {
    let reservoirs = Reservoirs::new(c.alpha, c.beta)?;
    let law = InitSpec::parse(&c.init)?.resolve(c.n, reservoirs)?;
    let p0 = initial_profile(&law, reservoirs)?;
    let path = DiscreteHeat::new(c.n, reservoirs)?.path(&p0, &c.times)?;
    let mut csv = CsvFile::create(&run.out, "profile.csv", resolved, run, "t,x,rho")?;
    for (p, &t) in path.iter().zip(&c.times) {
        for (x, &rho) in p.values().iter().enumerate() {
            csv.row(&[num(t), x.to_string(), num(rho)])?;
        }
    }
    Ok(vec![csv.finish()?])
}

pub fn correlations(c: &CorrelationsConfig, resolved: &Resolved, run: &Run) -> CliResult<Vec<PathBuf>> {
    let reservoirs = Reservoirs::new(c.alpha, c.beta)?;
    let init = InitSpec::parse(&c.init)?;
    let t = c.t.0;
    let grid = match c.source {
        CorrelationSource::Ode if t.is_infinite() => {
            stationary_correlations(c.n, reservoirs, CorrelationOptions::default())?
        }
        CorrelationSource::Ode => {
            let law = init.resolve(c.n, reservoirs)?;
            if !matches!(law, InitialLaw::Product(_)) {
                return Err(CliError::Usage(format!(
                    "--source ode starts from a product law; '{}' is not one",
                    c.init
                )));
            }
            let heat = DiscreteHeat::new(c.n, reservoirs)?;
            let p0 = initial_profile(&law, reservoirs)?;
            evolve_correlations(&CorrelationGrid::zeros(c.n)?, &heat, &p0, t, CorrelationOptions::default())?
        }
        CorrelationSource::Mc => {
            let seed = c.seed.expect("resolved with a seed");
            let mut spec = EnsembleSpec::new(c.n, reservoirs, init, vec![t], c.trajectories, seed);
            spec.engine = c.engine.into();
            spec.pairs = true;
            empirical_correlations(&simulate_ensemble(&spec)?, 0)?
        }
        CorrelationSource::Oracle => {
            let chain = exact_chain(c.n, reservoirs)?;
            let law = if t.is_infinite() {
                chain.stationary().clone()
            } else {
                let start = match init.resolve(c.n, reservoirs)? {
                    InitialLaw::Product(p) => chain.product_law(&p)?,
                    InitialLaw::Enumerated { .. } => chain.stationary().clone(),
                };
                chain.law_at(&start, t)?
            };
            CorrelationGrid::from_values(c.n, chain.pair_covariances(&law))?
        }
    };
    let columns = if grid.stderr().is_some() { "t,x,y,phi,stderr" } else { "t,x,y,phi" };
    let mut csv = CsvFile::create(&run.out, "corr.csv", resolved, run, columns)?;
    for (i, (x, y, phi)) in grid.iter().enumerate() {
        let mut row = vec![time_label(t), x.to_string(), y.to_string(), num(phi)];
        if let Some(se) = grid.stderr() {
            row.push(num(se[i]));
        }
        csv.row(&row)?;
    }
    Ok(vec![csv.finish()?])
}

/// Sample covariance of paired observations and its standard error.
pub fn covariance_estimate(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let products: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let z = Moments::from_slice(&products);
    (z.mean() * m / (m - 1.0), z.stderr())
}

/// The covariance rows for one configuration, one per convention.
pub fn covariance_reports(c: &CovarianceConfig) -> CliResult<Vec<CovarianceReport>> {
    let reservoirs = Reservoirs::new(c.alpha, c.beta)?;
    let basis = EigenBasis::new(c.basis)?;
    let f = SpectralFunction::mode(&basis, c.modes[0]);
    let g = SpectralFunction::mode(&basis, c.modes[1]);
    let names = (format!("psi{}", c.modes[0]), format!("psi{}", c.modes[1]));
    let init = InitSpec::parse(&c.init)?;
    let conventions = c.convention.conventions();
    let field_spec = |times: Vec<f64>, burn_in: f64| FieldSpec {
        n: c.n,
        reservoirs,
        init: init.clone(),
        times,
        trajectories: c.trajectories,
        master_seed: c.seed,
        engine: c.engine.into(),
        burn_in,
    };
    let report = |t: f64, s: f64, predicted: f64, (mc, se): (f64, f64), convention: Convention, tail_bound: f64| {
        CovarianceReport {
            f: names.0.clone(),
            g: names.1.clone(),
            t,
            s,
            predicted,
            mc: Some(mc),
            stderr: Some(se),
            convention,
            tail_bound,
        }
    };

    match c.mode {
        CovarianceMode::Stationary => {
            let out = sample_fields(&field_spec(vec![0.0], c.burn_in), &[&f, &g])?;
            let estimate = covariance_estimate(&out.values[0][0], &out.values[0][1]);
            conventions
                .into_iter()
                .map(|conv| {
                    let sc = stationary_covariance(&f, &g, reservoirs, conv, c.horizon.0)?;
                    Ok(report(f64::INFINITY, f64::INFINITY, sc.value, estimate, conv, sc.tail_bound))
                })
                .collect()
        }
        CovarianceMode::LocalGibbs => {
            let (t, s) = (c.t.expect("resolved"), c.s.expect("resolved"));
            if init.density_at(0.0).is_none() {
                return Err(CliError::Usage(format!("local-gibbs needs a density profile, got '{}'", c.init)));
            }
            let rho0 = {
                let init = init.clone();
                move |u: f64| init.density_at(u).expect("checked above")
            };
            let path = HydroSolution::new(&rho0, reservoirs, &basis);
            let sigma0 = local_gibbs_sigma0(rho0);
            let out = sample_fields(&field_spec(vec![s, t], c.burn_in), &[&f, &g])?;
            let estimate = covariance_estimate(&out.values[1][0], &out.values[0][1]);
            conventions
                .into_iter()
                .map(|conv| Ok(report(t, s, ou_covariance(&f, &g, t, s, &sigma0, &path, conv)?, estimate, conv, 0.0)))
                .collect()
        }
        CovarianceMode::Dynamic => {
            // The initial covariance is taken from the ensemble itself, so any
            // initial law works and only the noise term is predicted.
            let (t, s) = (c.t.expect("resolved"), c.s.expect("resolved"));
            let law = init.resolve(c.n, reservoirs)?;
            let rho0: Box<dyn UnitFunction> = match init.density_at(0.0) {
                Some(_) => {
                    let init = init.clone();
                    Box::new(move |u: f64| init.density_at(u).expect("profile law"))
                }
                None => Box::new(SampledGrid { values: initial_profile(&law, reservoirs)?.values().to_vec() }),
            };
            let path = HydroSolution::new(rho0.as_ref(), reservoirs, &basis);
            let (tf, sg) = (f.semigroup(t)?, g.semigroup(s)?);
            let out = sample_fields(&field_spec(vec![0.0, s, t], c.burn_in), &[&f, &g, &tf, &sg])?;
            let (sigma_hat, _) = covariance_estimate(&out.values[0][2], &out.values[0][3]);
            let estimate = covariance_estimate(&out.values[2][0], &out.values[1][1]);
            conventions
                .into_iter()
                .map(|conv| {
                    let predicted = ou_covariance(&f, &g, t, s, |_, _| sigma_hat, &path, conv)?;
                    Ok(report(t, s, predicted, estimate, conv, 0.0))
                })
                .collect()
        }
    }
}

pub fn covariance(c: &CovarianceConfig, resolved: &Resolved, run: &Run) -> CliResult<Vec<PathBuf>> {
    let reports = covariance_reports(c)?;
    let mut csv = CsvFile::create(
        &run.out,
        "covariance.csv",
        resolved,
        run,
        "f,g,t,s,predicted,mc,stderr,convention,tail_bound",
    )?;
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for r in &reports {
        csv.row(&[
            r.f.clone(),
            r.g.clone(),
            time_label(r.t),
            time_label(r.s),
            num(r.predicted),
            opt(r.mc),
            opt(r.stderr),
            r.convention.to_string(),
            num(r.tail_bound),
        ])?;
    }
    Ok(vec![csv.finish()?])
}
