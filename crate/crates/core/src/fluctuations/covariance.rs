//! Limit covariances of the fluctuation field and their finite-`n` analogues.

use std::fmt;
use std::sync::Arc;

use crate::chi;
use crate::correlations::{stationary_correlations, CorrelationGrid, CorrelationOptions};
use crate::error::{check_time, Error, Result};
use crate::hydro::{stationary_profile_continuous, stationary_profile_discrete, BoundaryExtension, HydroSolution, LatticeProfile, Reservoirs};
use crate::quadrature::adaptive_simpson;
use crate::spectral::{EigenBasis, SpectralFunction, UnitFunction};

use super::lattice_samples;

/// Absolute tolerance of every time integral below.
const TIME_TOLERANCE: f64 = 1e-8;

/// Sign in front of `(1 − 2α)ρ(0)` and `(1 − 2β)ρ(1)` in the boundary atoms
/// of the weighted inner product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Convention {
    #[default]
    Plus,
    Minus,
}

impl Convention {
    pub fn sign(self) -> f64 {
        match self {
            Convention::Plus => 1.0,
            Convention::Minus => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Convention::Plus => "plus",
            Convention::Minus => "minus",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Weight of the atom at an endpoint whose reservoir has density `r`.
fn atom(r: f64, rho_edge: f64, convention: Convention) -> f64 {
    r + convention.sign() * (1.0 - 2.0 * r) * rho_edge
}

/// Values of two functions and of the density at the quadrature nodes and
/// both endpoints.
struct Sampled<'a> {
    weights: &'a [f64],
    f: &'a [f64],
    g: &'a [f64],
    rho: &'a [f64],
    ends: [(f64, f64, f64); 2],
}

fn weighted_form(s: &Sampled<'_>, reservoirs: Reservoirs, convention: Convention) -> f64 {
    let bulk: f64 = s
        .weights
        .iter()
        .zip(s.f)
        .zip(s.g)
        .zip(s.rho)
        .map(|(((w, f), g), r)| w * 2.0 * chi(*r) * f * g)
        .sum();
    let [(f0, g0, r0), (f1, g1, r1)] = s.ends;
    bulk + atom(reservoirs.alpha, r0, convention) * f0 * g0 + atom(reservoirs.beta, r1, convention) * f1 * g1
}

/// `⟨f, g⟩_{L²(ρ)} = [α ± (1−2α)ρ(0)] f(0)g(0) + [β ± (1−2β)ρ(1)] f(1)g(1) + ∫ 2χ(ρ) f g`.
pub fn l2_rho_inner<R: UnitFunction + ?Sized>(
    f: &SpectralFunction,
    g: &SpectralFunction,
    rho: &R,
    reservoirs: Reservoirs,
    convention: Convention,
) -> f64 {
    let rule = f.basis().rule();
    let fv = f.node_values(0);
    let gv = node_values_on(g, f.basis());
    let rv: Vec<f64> = rule.nodes.iter().map(|&u| rho.eval(u)).collect();
    let s = Sampled {
        weights: &rule.weights,
        f: &fv,
        g: &gv,
        rho: &rv,
        ends: [(f.value(0.0), g.value(0.0), rho.eval(0.0)), (f.value(1.0), g.value(1.0), rho.eval(1.0))],
    };
    weighted_form(&s, reservoirs, convention)
}

fn node_values_on(g: &SpectralFunction, basis: &Arc<EigenBasis>) -> Vec<f64> {
    if Arc::ptr_eq(g.basis(), basis) {
        g.node_values(0)
    } else {
        basis.rule().nodes.iter().map(|&u| g.value(u)).collect()
    }
}

fn gradient_node_values_on(g: &SpectralFunction, basis: &Arc<EigenBasis>) -> Vec<f64> {
    if Arc::ptr_eq(g.basis(), basis) {
        g.node_values(1)
    } else {
        basis.rule().nodes.iter().map(|&u| g.gradient(u)).collect()
    }
}

/// `ρ_r` at the nodes of `basis` and at both endpoints.
fn density_at(path: &HydroSolution, r: f64, basis: &Arc<EigenBasis>) -> Result<(Vec<f64>, f64, f64)> {
    let res = path.reservoirs();
    let dev = path.deviation().semigroup(r)?;
    let dv = node_values_on(&dev, basis);
    let nodes = &basis.rule().nodes;
    let values = nodes.iter().zip(dv).map(|(&u, d)| stationary_profile_continuous(u, res) + d).collect();
    Ok((values, path.value(r, 0.0)?, path.value(r, 1.0)?))
}

/// `⟨∇T_a f, ∇T_b g⟩_{L²(ρ_r)}`.
fn noise_density(
    f: &SpectralFunction,
    a: f64,
    g: &SpectralFunction,
    b: f64,
    r: f64,
    path: &HydroSolution,
    convention: Convention,
) -> Result<f64> {
    let basis = f.basis();
    let tf = f.semigroup(a)?;
    let tg = g.semigroup(b)?;
    let fv = tf.node_values(1);
    let gv = gradient_node_values_on(&tg, basis);
    let (rho, r0, r1) = density_at(path, r, basis)?;
    let s = Sampled {
        weights: &basis.rule().weights,
        f: &fv,
        g: &gv,
        rho: &rho,
        ends: [(tf.gradient(0.0), tg.gradient(0.0), r0), (tf.gradient(1.0), tg.gradient(1.0), r1)],
    };
    Ok(weighted_form(&s, path.reservoirs(), convention))
}

/// `σ₀(T_t f, T_s g) + ∫_0^s ⟨∇T_{t−r} f, ∇T_{s−r} g⟩_{L²(ρ_r)} dr` for `s ≤ t`.
pub fn ou_covariance<S>(
    f: &SpectralFunction,
    g: &SpectralFunction,
    t: f64,
    s: f64,
    sigma0: S,
    path: &HydroSolution,
    convention: Convention,
) -> Result<f64>
where
    S: Fn(&SpectralFunction, &SpectralFunction) -> f64,
{
    check_time(t)?;
    check_time(s)?;
    if s > t {
        return Err(Error::InvalidArgument(format!("s = {s} exceeds t = {t}")));
    }
    let initial = sigma0(&f.semigroup(t)?, &g.semigroup(s)?);
    let mut failure = None;
    let noise = adaptive_simpson(
        |r| match noise_density(f, t - r, g, s - r, r, path, convention) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        s,
        TIME_TOLERANCE,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(initial + noise),
    }
}

/// Conditional law of the limit field at time `t` given the past up to `s`:
/// mean `Y_s(T_{t−s} f)` (supplied by the caller) and the noise variance.
pub fn ou_conditional_law(
    f: &SpectralFunction,
    s: f64,
    t: f64,
    propagated_value: f64,
    path: &HydroSolution,
    convention: Convention,
) -> Result<(f64, f64)> {
    check_time(s)?;
    if s > t {
        return Err(Error::InvalidArgument(format!("s = {s} exceeds t = {t}")));
    }
    let mut failure = None;
    let var = adaptive_simpson(
        |r| match noise_density(f, t - r, f, t - r, r, path, convention) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        s,
        t,
        TIME_TOLERANCE,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok((propagated_value, var)),
    }
}

/// Limit of `E[∫_0^t Γ_s(φ) ds]` for a fixed `φ`:
/// `∫_0^t {∫2χ(ρ_r)(φ')² + [α ± (1−2α)ρ_r(0)]φ(0)² + [β ± (1−2β)ρ_r(1)]φ(1)²} dr`.
pub fn quadratic_variation_limit(phi: &SpectralFunction, t: f64, path: &HydroSolution, convention: Convention) -> Result<f64> {
    check_time(t)?;
    let basis = phi.basis();
    let grad = phi.node_values(1);
    let (p0, p1) = (phi.value(0.0), phi.value(1.0));
    let res = path.reservoirs();
    let mut failure = None;
    let value = adaptive_simpson(
        |r| match density_at(path, r, basis) {
            Ok((rho, r0, r1)) => {
                let bulk: f64 =
                    basis.rule().weights.iter().zip(&grad).zip(&rho).map(|((w, d), x)| w * 2.0 * chi(*x) * d * d).sum();
                bulk + atom(res.alpha, r0, convention) * p0 * p0 + atom(res.beta, r1, convention) * p1 * p1
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        t,
        TIME_TOLERANCE,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// `σ₀(f, g) = ∫ χ(ρ₀) f g`, the initial covariance of a product law with
/// slowly varying profile `ρ₀`.
pub fn local_gibbs_sigma0<R: UnitFunction>(rho0: R) -> impl Fn(&SpectralFunction, &SpectralFunction) -> f64 {
    move |f, g| {
        let rule = f.basis().rule();
        let fv = f.node_values(0);
        let gv = node_values_on(g, f.basis());
        rule.weights.iter().zip(&rule.nodes).zip(fv.iter().zip(&gv)).map(|((w, &u), (a, b))| w * chi(rho0.eval(u)) * a * b).sum()
    }
}

/// Terms of the stationary covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryCovariance {
    pub convention: Convention,
    pub value: f64,
    /// `∫ χ(ρ̄) f g`.
    pub bulk: f64,
    /// `((β − α)/3)² ∫ f (−Δ)^{-1} g`.
    pub green: f64,
    /// Boundary term at `u = 0`; zero under [`Convention::Plus`].
    pub left: f64,
    /// Boundary term at `u = 1`; zero under [`Convention::Plus`].
    pub right: f64,
    /// Bound on the boundary time integrals beyond the cutoff.
    pub tail_bound: f64,
}

/// `∫_0^{T} T_s f(u) T_s g(u) ds` in closed form, and the bound on the rest.
fn boundary_time_integral(f: &SpectralFunction, g: &SpectralFunction, u: f64, horizon: f64) -> (f64, f64) {
    let basis = f.basis();
    let a = f.coeffs();
    let b = g.coeffs();
    let mut value = 0.0;
    for (j, &aj) in a.iter().enumerate() {
        if aj == 0.0 {
            continue;
        }
        let mj = basis.mode(j + 1);
        let pj = mj.value(u);
        for (k, &bk) in b.iter().enumerate() {
            if bk == 0.0 {
                continue;
            }
            let mk = basis.mode(k + 1);
            let rate = mj.lambda + mk.lambda;
            let factor = if horizon.is_infinite() { 1.0 } else { -(-rate * horizon).exp_m1() };
            value += aj * bk * pj * mk.value(u) * factor / rate;
        }
    }
    let tail = if horizon.is_infinite() {
        0.0
    } else {
        let lam1 = basis.mode(1).lambda;
        let sa: f64 = a.iter().enumerate().map(|(j, x)| x.abs() * basis.mode(j + 1).value(u).abs()).sum();
        let sb: f64 = b.iter().enumerate().map(|(k, x)| x.abs() * basis.mode(k + 1).value(u).abs()).sum();
        sa * sb * (-2.0 * lam1 * horizon).exp() / (2.0 * lam1)
    };
    (value, tail)
}

/// Limit covariance of the stationary field. Under [`Convention::Minus`] this
/// is the form with the two boundary time integrals
///
/// ```text
/// ∫χ(ρ̄)fg − ((β−α)/3)² ∫((−Δ)^{-1}f)g
///   + (2(2β+α)(2β−1)/3) ∫_0^∞ T_t f(1) T_t g(1) dt
///   + (2(β+2α)(2α−1)/3) ∫_0^∞ T_t f(0) T_t g(0) dt,
/// ```
///
/// truncated at `horizon` (which may be infinite). Under
/// [`Convention::Plus`] the boundary contributions cancel and only the first
/// two terms remain.
pub fn stationary_covariance(
    f: &SpectralFunction,
    g: &SpectralFunction,
    reservoirs: Reservoirs,
    convention: Convention,
    horizon: f64,
) -> Result<StationaryCovariance> {
    if horizon.is_nan() || horizon < 0.0 {
        return Err(Error::InvalidArgument(format!("cutoff {horizon} must be non-negative")));
    }
    if !Arc::ptr_eq(f.basis(), g.basis()) {
        return Err(Error::Shape("test functions live on different eigenbases".into()));
    }
    let Reservoirs { alpha, beta } = reservoirs;
    let bulk = local_gibbs_sigma0(|u: f64| stationary_profile_continuous(u, reservoirs))(f, g);
    let green = ((beta - alpha) / 3.0).powi(2) * f.inverse_laplacian().inner(g);
    let (left, right, tail_bound) = match convention {
        Convention::Plus => (0.0, 0.0, 0.0),
        Convention::Minus => {
            let c0 = 2.0 * (beta + 2.0 * alpha) * (2.0 * alpha - 1.0) / 3.0;
            let c1 = 2.0 * (2.0 * beta + alpha) * (2.0 * beta - 1.0) / 3.0;
            let (i0, t0) = boundary_time_integral(f, g, 0.0, horizon);
            let (i1, t1) = boundary_time_integral(f, g, 1.0, horizon);
            (c0 * i0, c1 * i1, c0.abs() * t0 + c1.abs() * t1)
        }
    };
    Ok(StationaryCovariance { convention, value: bulk - green + left + right, bulk, green, left, right, tail_bound })
}

/// Exact `Var Y(f)` under a law with mean profile `profile` and pair
/// covariances `phi`: `(1/n)[Σ f²χ(ρ) + 2 Σ_{x<y} f(x/n) f(y/n) φ(x, y)]`.
pub fn exact_field_variance<F: UnitFunction + ?Sized>(profile: &LatticeProfile, phi: &CorrelationGrid, f: &F) -> Result<f64> {
    let n = profile.n();
    if phi.n() != n {
        return Err(Error::Shape(format!("profile has n = {n}, correlations have n = {}", phi.n())));
    }
    let p = lattice_samples(f, n);
    let diagonal: f64 = (1..n).map(|x| p[x] * p[x] * chi(profile.value(x))).sum();
    let off: f64 = phi.iter().map(|(x, y, v)| p[x] * p[y] * v).sum();
    Ok((diagonal + 2.0 * off) / n as f64)
}

/// [`exact_field_variance`] under the stationary law of the lattice of size `n`.
pub fn stationary_field_variance<F: UnitFunction + ?Sized>(
    n: usize,
    reservoirs: Reservoirs,
    f: &F,
    options: CorrelationOptions,
) -> Result<f64> {
    let profile = stationary_profile_discrete(n, reservoirs, BoundaryExtension::Reservoir)?;
    let phi = stationary_correlations(n, reservoirs, options)?;
    exact_field_variance(&profile, &phi, f)
}

/// One predicted covariance, optionally set against a Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    pub f: String,
    pub g: String,
    pub t: f64,
    pub s: f64,
    pub predicted: f64,
    pub mc: Option<f64>,
    pub stderr: Option<f64>,
    pub convention: Convention,
    pub tail_bound: f64,
}

impl CovarianceReport {
    /// `|mc − predicted| ≤ k·stderr + allowance`; false without an estimate.
    pub fn within(&self, k: f64, allowance: f64) -> bool {
        match (self.mc, self.stderr) {
            (Some(mc), Some(se)) => (mc - self.predicted).abs() <= k * se + allowance,
            _ => false,
        }
    }
}
