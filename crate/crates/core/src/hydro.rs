//! Mean occupation profiles: the discrete heat system on the lattice and the
//! continuum Robin problem.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_time, check_unit_interval, Error, Result};
use crate::spectral::{project, EigenBasis, SpectralFunction, UnitFunction};

/// Reservoir densities at the left and right ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reservoirs {
    pub alpha: f64,
    pub beta: f64,
}

impl Reservoirs {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_unit_interval("alpha", alpha)?;
        check_unit_interval("beta", beta)?;
        Ok(Self { alpha, beta })
    }

    pub fn equilibrium(rho: f64) -> Result<Self> {
        Self::new(rho, rho)
    }
}

/// How the discrete stationary profile is extended to sites `0` and `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryExtension {
    /// `ρ(0) = α`, `ρ(n) = β`.
    #[default]
    Reservoir,
    /// The affine formula continued to the end points.
    Linear,
}

/// `ρ(x)` for `x = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeProfile {
    n: usize,
    values: Vec<f64>,
}

impl LatticeProfile {
    /// From the interior values `ρ(1..=n−1)` and the end values.
    pub fn new(interior: &[f64], left: f64, right: f64) -> Result<Self> {
        let n = interior.len() + 1;
        if n < 3 {
            return Err(Error::InvalidArgument(format!("profile needs n ≥ 3, got {n}")));
        }
        let mut values = Vec::with_capacity(n + 1);
        values.push(left);
        values.extend_from_slice(interior);
        values.push(right);
        Ok(Self { n, values })
    }

    /// Samples `f(x/n)` on the interior with reservoir end values.
    pub fn from_fn(n: usize, reservoirs: Reservoirs, f: impl Fn(f64) -> f64) -> Result<Self> {
        let interior: Vec<f64> = (1..n).map(|x| f(x as f64 / n as f64)).collect();
        Self::new(&interior, reservoirs.alpha, reservoirs.beta)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `ρ(x)`, `0 ≤ x ≤ n`.
    #[inline]
    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.n]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.interior().iter().zip(other.interior()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// `(B_n p)(x)` for `x = 1..=n−1`; the two end bonds carry weight `1/n`.
pub fn bn_apply(p: &LatticeProfile) -> Vec<f64> {
    let n = p.n();
    let w = 1.0 / n as f64;
    (1..n)
        .map(|x| {
            let left = if x == 1 { w } else { 1.0 };
            let right = if x == n - 1 { w } else { 1.0 };
            left * (p.value(x - 1) - p.value(x)) + right * (p.value(x + 1) - p.value(x))
        })
        .collect()
}

/// Slope and intercept of the discrete stationary profile.
pub fn stationary_coefficients(n: usize, reservoirs: Reservoirs) -> (f64, f64) {
    let a = (reservoirs.beta - reservoirs.alpha) / (3 * n - 2) as f64;
    (a, a * (n - 1) as f64 + reservoirs.alpha)
}

pub fn stationary_profile_discrete(
    n: usize,
    reservoirs: Reservoirs,
    extension: BoundaryExtension,
) -> Result<LatticeProfile> {
    let (a, b) = stationary_coefficients(n, reservoirs);
    let interior: Vec<f64> = (1..n).map(|x| a * x as f64 + b).collect();
    let (left, right) = match extension {
        BoundaryExtension::Reservoir => (reservoirs.alpha, reservoirs.beta),
        BoundaryExtension::Linear => (b, a * n as f64 + b),
    };
    LatticeProfile::new(&interior, left, right)
}

/// `ρ̄(u) = ((β − α)/3) u + (2α + β)/3`.
pub fn stationary_profile_continuous(u: f64, reservoirs: Reservoirs) -> f64 {
    let Reservoirs { alpha, beta } = reservoirs;
    (beta - alpha) / 3.0 * u + (2.0 * alpha + beta) / 3.0
}

/// Exact propagator of `dρ/dt = n² B_n ρ` with pinned end values.
///
/// The interior operator is symmetric tridiagonal, so the flow of the
/// deviation from the stationary profile is `V e^{tΛ} Vᵀ`.
#[derive(Debug, Clone)]
pub struct DiscreteHeat {
    n: usize,
    reservoirs: Reservoirs,
    stationary: Vec<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl DiscreteHeat {
    pub fn new(n: usize, reservoirs: Reservoirs) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("n = {n} must be at least 3")));
        }
        let m = n - 1;
        let n2 = (n * n) as f64;
        let end = -(1.0 + 1.0 / n as f64);
        let mut op = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            op[(i, i)] = if i == 0 || i == m - 1 { end } else { -2.0 } * n2;
            if i + 1 < m {
                op[(i, i + 1)] = n2;
                op[(i + 1, i)] = n2;
            }
        }
        let eig = SymmetricEigen::new(op);
        let stationary = stationary_profile_discrete(n, reservoirs, BoundaryExtension::Reservoir)?;
        Ok(Self {
            n,
            reservoirs,
            stationary: stationary.interior().to_vec(),
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reservoirs(&self) -> Reservoirs {
        self.reservoirs
    }

    /// Slowest decay rate of the interior flow.
    pub fn spectral_gap(&self) -> f64 {
        -self.eigenvalues.max()
    }

    fn profile(&self, interior: &[f64]) -> LatticeProfile {
        LatticeProfile::new(interior, self.reservoirs.alpha, self.reservoirs.beta).expect("n ≥ 3")
    }

    pub fn stationary(&self) -> LatticeProfile {
        self.profile(&self.stationary)
    }

    pub fn evolve(&self, initial: &LatticeProfile, t: f64) -> Result<LatticeProfile> {
        check_time(t)?;
        if initial.n() != self.n {
            return Err(Error::Shape(format!("profile has n = {}, propagator n = {}", initial.n(), self.n)));
        }
        let dev = DVector::from_iterator(
            self.n - 1,
            initial.interior().iter().zip(&self.stationary).map(|(p, s)| p - s),
        );
        let mut modal = self.eigenvectors.tr_mul(&dev);
        for (c, &lam) in modal.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= (lam * t).exp();
        }
        let back = &self.eigenvectors * modal;
        let interior: Vec<f64> = back.iter().zip(&self.stationary).map(|(d, s)| d + s).collect();
        Ok(self.profile(&interior))
    }

    pub fn path(&self, initial: &LatticeProfile, times: &[f64]) -> Result<Vec<LatticeProfile>> {
        times.iter().map(|&t| self.evolve(initial, t)).collect()
    }
}

pub fn evolve_profile(initial: &LatticeProfile, reservoirs: Reservoirs, t: f64) -> Result<LatticeProfile> {
    DiscreteHeat::new(initial.n(), reservoirs)?.evolve(initial, t)
}

/// `ρ(t, u) = ρ̄(u) + T_t(ρ₀ − ρ̄)(u)` on a truncated eigenbasis.
#[derive(Debug, Clone)]
pub struct HydroSolution {
    reservoirs: Reservoirs,
    deviation: SpectralFunction,
}

impl HydroSolution {
    pub fn new<F: UnitFunction + ?Sized>(initial: &F, reservoirs: Reservoirs, basis: &Arc<EigenBasis>) -> Self {
        let deviation = project(&|u: f64| initial.eval(u) - stationary_profile_continuous(u, reservoirs), basis);
        Self { reservoirs, deviation }
    }

    pub fn deviation(&self) -> &SpectralFunction {
        &self.deviation
    }

    pub fn reservoirs(&self) -> Reservoirs {
        self.reservoirs
    }

    pub fn value(&self, t: f64, u: f64) -> Result<f64> {
        Ok(stationary_profile_continuous(u, self.reservoirs) + self.deviation.semigroup(t)?.value(u))
    }

    pub fn gradient(&self, t: f64, u: f64) -> Result<f64> {
        let slope = (self.reservoirs.beta - self.reservoirs.alpha) / 3.0;
        Ok(slope + self.deviation.semigroup(t)?.gradient(u))
    }

    /// `(|∂ρ(t,0) − (ρ(t,0) − α)|, |∂ρ(t,1) − (β − ρ(t,1))|)`.
    pub fn robin_residuals(&self, t: f64) -> Result<(f64, f64)> {
        let left = self.gradient(t, 0.0)? - (self.value(t, 0.0)? - self.reservoirs.alpha);
        let right = self.gradient(t, 1.0)? - (self.reservoirs.beta - self.value(t, 1.0)?);
        Ok((left.abs(), right.abs()))
    }
}

pub fn pde_solution<F: UnitFunction + ?Sized>(
    initial: &F,
    reservoirs: Reservoirs,
    basis: &Arc<EigenBasis>,
    t: f64,
    u: f64,
) -> Result<f64> {
    HydroSolution::new(initial, reservoirs, basis).value(t, u)
}

/// `max_{t,x} n |ρ_t(x+1) − ρ_t(x)|` over interior bonds `1 ≤ x ≤ n − 2`.
pub fn gradient_bound(path: &[LatticeProfile]) -> f64 {
    path.iter()
        .map(|p| {
            let n = p.n();
            (1..n - 1).map(|x| (p.value(x + 1) - p.value(x)).abs()).fold(0.0, f64::max) * n as f64
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(a: f64, b: f64) -> Reservoirs {
        Reservoirs::new(a, b).unwrap()
    }

    #[test]
    fn reservoirs_validate() {
        assert!(Reservoirs::new(1.2, 0.5).is_err());
        assert!(Reservoirs::new(0.5, -0.1).is_err());
    }

    #[test]
    fn stationary_profile_small_case() {
        let p = stationary_profile_discrete(4, res(0.1, 0.9), BoundaryExtension::Reservoir).unwrap();
        let (a, b) = stationary_coefficients(4, res(0.1, 0.9));
        assert!((a - 0.08).abs() < 1e-15 && (b - 0.34).abs() < 1e-15);
        for (got, want) in p.interior().iter().zip([0.42, 0.50, 0.58]) {
            assert!((got - want).abs() < 1e-15);
        }
        let lin = stationary_profile_discrete(4, res(0.1, 0.9), BoundaryExtension::Linear).unwrap();
        assert!((lin.value(0) - 0.34).abs() < 1e-15 && (lin.value(4) - 0.66).abs() < 1e-15);
    }

    #[test]
    fn bn_annihilates_stationary_and_constants() {
        for n in [3, 4, 9, 50] {
            let p = stationary_profile_discrete(n, res(0.15, 0.8), BoundaryExtension::Reservoir).unwrap();
            assert!(bn_apply(&p).iter().all(|v| v.abs() < 1e-14));
            let c = LatticeProfile::from_fn(n, res(0.3, 0.3), |_| 0.3).unwrap();
            assert!(bn_apply(&c).iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn bn_stencil_on_indicator() {
        let n = 8;
        let mut interior = vec![0.0; n - 1];
        interior[3] = 1.0; // site 4
        let p = LatticeProfile::new(&interior, 0.0, 0.0).unwrap();
        let b = bn_apply(&p);
        assert_eq!(&b[2..5], &[1.0, -2.0, 1.0]);
        assert!(b.iter().enumerate().all(|(i, &v)| (2..5).contains(&i) || v == 0.0));
    }

    #[test]
    fn continuum_profile_end_points() {
        let r = res(0.1, 0.9);
        assert!((stationary_profile_continuous(0.0, r) - 1.1 / 3.0).abs() < 1e-15);
        assert!((stationary_profile_continuous(1.0, r) - 1.9 / 3.0).abs() < 1e-15);
        assert!((stationary_profile_continuous(0.7, res(0.4, 0.4)) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn discrete_stationary_profile_is_close_to_continuum() {
        let r = res(0.1, 0.9);
        let gap = |n: usize| {
            let p = stationary_profile_discrete(n, r, BoundaryExtension::Reservoir).unwrap();
            (1..n)
                .map(|x| (p.value(x) - stationary_profile_continuous(x as f64 / n as f64, r)).abs())
                .fold(0.0, f64::max)
        };
        let ratio = gap(64) / gap(128);
        assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
    }

    /// Classical RK4 with a small fixed step, independent of the eigensolver.
    fn rk4(p0: &LatticeProfile, t: f64, dt: f64) -> LatticeProfile {
        let n = p0.n();
        let n2 = (n * n) as f64;
        let rhs = |v: &[f64]| {
            let p = LatticeProfile::new(v, p0.value(0), p0.value(n)).unwrap();
            bn_apply(&p).into_iter().map(|b| n2 * b).collect::<Vec<_>>()
        };
        let mut v = p0.interior().to_vec();
        let steps = (t / dt).round() as usize;
        let axpy = |v: &[f64], k: &[f64], h: f64| v.iter().zip(k).map(|(a, b)| a + h * b).collect::<Vec<_>>();
        for _ in 0..steps {
            let k1 = rhs(&v);
            let k2 = rhs(&axpy(&v, &k1, dt / 2.0));
            let k3 = rhs(&axpy(&v, &k2, dt / 2.0));
            let k4 = rhs(&axpy(&v, &k3, dt));
            for i in 0..v.len() {
                v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        LatticeProfile::new(&v, p0.value(0), p0.value(n)).unwrap()
    }

    #[test]
    fn evolve_matches_time_stepping_oracle() {
        let r = res(0.2, 0.7);
        let p0 = LatticeProfile::new(&[0.9, 0.0, 0.6], r.alpha, r.beta).unwrap();
        let exact = evolve_profile(&p0, r, 0.05).unwrap();
        let oracle = rk4(&p0, 0.05, 1e-6);
        assert!(exact.max_abs_diff(&oracle) < 1e-8);
    }

    #[test]
    fn evolve_is_a_flow() {
        let r = res(0.1, 0.9);
        let heat = DiscreteHeat::new(20, r).unwrap();
        let p0 = LatticeProfile::from_fn(20, r, |u| (3.0 * u).sin().abs()).unwrap();
        let direct = heat.evolve(&p0, 0.13).unwrap();
        let split = heat.evolve(&heat.evolve(&p0, 0.05).unwrap(), 0.08).unwrap();
        assert!(direct.max_abs_diff(&split) < 1e-12);
        assert!(heat.evolve(&p0, 0.0).unwrap().max_abs_diff(&p0) < 1e-14);
        assert!(heat.evolve(&p0, -1.0).is_err());
    }

    #[test]
    fn stationary_profile_is_fixed_and_attracting() {
        let r = res(0.1, 0.9);
        let heat = DiscreteHeat::new(16, r).unwrap();
        let ss = heat.stationary();
        assert!(heat.evolve(&ss, 3.0).unwrap().max_abs_diff(&ss) < 1e-13);
        let p0 = LatticeProfile::from_fn(16, r, |_| 0.0).unwrap();
        let g1 = heat.evolve(&p0, 1.0).unwrap().max_abs_diff(&ss);
        let g2 = heat.evolve(&p0, 2.0).unwrap().max_abs_diff(&ss);
        let rate = (g1 / g2).ln();
        assert!((rate - heat.spectral_gap()).abs() < 1e-3 * heat.spectral_gap());
    }

    #[test]
    fn pde_solution_properties() {
        let r = res(0.1, 0.9);
        let basis = EigenBasis::new(64).unwrap();
        let rho_bar = move |u: f64| stationary_profile_continuous(u, r);
        let h = HydroSolution::new(&rho_bar, r, &basis);
        assert!(h.deviation().coeffs().iter().all(|a| a.abs() < 1e-12));
        let bump = |u: f64| 0.2 + 0.5 * u;
        let h = HydroSolution::new(&bump, r, &basis);
        for t in [0.01, 0.1, 1.0] {
            let (l, rr) = h.robin_residuals(t).unwrap();
            assert!(l < 1e-6 && rr < 1e-6, "t = {t}: {l} {rr}");
        }
        let late = h.value(30.0, 0.4).unwrap();
        assert!((late - rho_bar(0.4)).abs() < 1e-12);
        assert!((pde_solution(&bump, r, &basis, 30.0, 0.4).unwrap() - late).abs() < 1e-15);
    }

    #[test]
    fn gradient_bound_cases() {
        let r = res(0.1, 0.9);
        let ss = stationary_profile_discrete(40, r, BoundaryExtension::Reservoir).unwrap();
        let want = 40.0 * 0.8 / 118.0;
        assert!((gradient_bound(&[ss.clone(), ss]) - want).abs() < 1e-14);
        let flat = LatticeProfile::from_fn(40, res(0.3, 0.3), |_| 0.3).unwrap();
        assert_eq!(gradient_bound(&[flat]), 0.0);
    }
}
