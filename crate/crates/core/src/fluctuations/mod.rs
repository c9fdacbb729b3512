//! The density fluctuation field `Y_t(f) = n^{-1/2} Σ_x f(x/n)(η_t(x) − ρ_t(x))`,
//! its martingale decomposition and the limiting covariances.

mod covariance;
mod martingale;
mod monte_carlo;

pub use covariance::{
    exact_field_variance, l2_rho_inner, local_gibbs_sigma0, ou_conditional_law, ou_covariance,
    quadratic_variation_limit, stationary_covariance, stationary_field_variance, Convention, CovarianceReport,
    StationaryCovariance,
};
pub use martingale::{
    martingale_check, martingale_paths, MartingalePath, MartingaleReport, MartingaleRow, MartingaleSpec, MartingaleTracker,
};
pub use monte_carlo::{sample_fields, FieldSamples, FieldSpec};

use crate::error::{Error, Result};
use crate::hydro::{LatticeProfile, Reservoirs};
use crate::lattice::Configuration;
use crate::spectral::UnitFunction;

/// `f(x/n)` for `x = 0..=n`.
pub fn lattice_samples<F: UnitFunction + ?Sized>(f: &F, n: usize) -> Vec<f64> {
    (0..=n).map(|x| f.eval(x as f64 / n as f64)).collect()
}

fn check_sizes(config: &Configuration, profile: &LatticeProfile) -> Result<()> {
    if config.n() != profile.n() {
        return Err(Error::Shape(format!(
            "configuration has n = {}, profile has n = {}",
            config.n(),
            profile.n()
        )));
    }
    Ok(())
}

pub(crate) fn field_from_samples(config: &Configuration, profile: &LatticeProfile, samples: &[f64]) -> f64 {
    let n = config.n();
    let sum: f64 = (1..n).map(|x| samples[x] * (config.get(x) as f64 - profile.value(x))).sum();
    sum / (n as f64).sqrt()
}

/// `Y(f)` for one configuration centred by the mean profile.
pub fn field_evaluate<F: UnitFunction + ?Sized>(config: &Configuration, profile: &LatticeProfile, f: &F) -> Result<f64> {
    check_sizes(config, profile)?;
    Ok(field_from_samples(config, profile, &lattice_samples(f, config.n())))
}

/// Drift of `Y_s(φ)` for time-independent `φ`:
///
/// ```text
/// Y(Δ_n φ) + √n (η(1) − ρ(1)) (∇⁺φ(0) − φ(1/n)) − √n (η(n−1) − ρ(n−1)) (∇⁻φ(1) + φ((n−1)/n))
/// ```
///
/// with `Δ_n` the discrete Laplacian using `φ(0)` and `φ(1)` at the ends.
pub fn lambda_term<F: UnitFunction + ?Sized>(config: &Configuration, profile: &LatticeProfile, phi: &F) -> Result<f64> {
    check_sizes(config, profile)?;
    let n = config.n();
    let nf = n as f64;
    let p = lattice_samples(phi, n);
    let centred = |x: usize| config.get(x) as f64 - profile.value(x);
    let laplacian: f64 = (1..n).map(|x| nf * nf * (p[x + 1] + p[x - 1] - 2.0 * p[x]) * centred(x)).sum::<f64>() / nf.sqrt();
    let left = nf.sqrt() * centred(1) * (nf * (p[1] - p[0]) - p[1]);
    let right = -nf.sqrt() * centred(n - 1) * (nf * (p[n] - p[n - 1]) + p[n - 1]);
    Ok(laplacian + left + right)
}

/// The boundary factors `(√n(∇⁺φ(0) − φ(1/n)), √n(∇⁻φ(1) + φ((n−1)/n)))`.
pub fn lambda_boundary_factors<F: UnitFunction + ?Sized>(phi: &F, n: usize) -> (f64, f64) {
    let p = lattice_samples(phi, n);
    let nf = n as f64;
    (nf.sqrt() * (nf * (p[1] - p[0]) - p[1]), nf.sqrt() * (nf * (p[n] - p[n - 1]) + p[n - 1]))
}

/// Carré du champ of `Y(φ)` under `n² L_n`.
pub fn gamma_term<F: UnitFunction + ?Sized>(config: &Configuration, phi: &F, reservoirs: Reservoirs) -> f64 {
    let n = config.n();
    let p = lattice_samples(phi, n);
    gamma_from_samples(config, &p, reservoirs)
}

pub(crate) fn gamma_from_samples(config: &Configuration, p: &[f64], reservoirs: Reservoirs) -> f64 {
    let n = config.n();
    let nf = n as f64;
    let bulk: f64 = (1..n - 1)
        .filter(|&x| config.get(x) != config.get(x + 1))
        .map(|x| (nf * (p[x + 1] - p[x])).powi(2))
        .sum::<f64>()
        / nf;
    let Reservoirs { alpha, beta } = reservoirs;
    let e1 = config.get(1) as f64;
    let en = config.get(n - 1) as f64;
    bulk + p[1] * p[1] * (alpha - 2.0 * alpha * e1 + e1) + p[n - 1] * p[n - 1] * (beta - 2.0 * beta * en + en)
}
