//! Robin Sturm–Liouville eigenbasis and the heat semigroup built on it.
//!
//! The eigenproblem is `−Ψ'' = λΨ` on `[0, 1]` with `Ψ(0) = Ψ'(0)` and
//! `Ψ(1) = −Ψ'(1)`. Writing `s = √λ`, the eigenfunctions are
//! `Ψ_k(u) = A_k (sin(s_k u) + s_k cos(s_k u))` and `s_k` is the unique root of
//!
//! ```text
//! F(x) = (x² − 1) sin x − 2x cos x
//! ```
//!
//! inside `((k − 1)π, kπ)`. `F` is the pole-free form of
//! `tan x = 2x / (x² − 1)`.
//!
//! Functions in the test space are represented by finitely many
//! eigen-coefficients ([`SpectralFunction`]); on that representation the
//! semigroup, the Laplacian and its inverse are diagonal and exact.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{check_time, Error, Result};
use crate::quadrature::GaussLegendre;

/// Default number of modes kept in a basis.
pub const DEFAULT_MODES: usize = 64;
/// Bisection width used by [`EigenBasis::new`].
pub const ROOT_TOLERANCE: f64 = 1e-12;
/// Smallest Gauss–Legendre order used for projections.
pub const MIN_QUADRATURE_ORDER: usize = 64;

/// `F(x) = (x² − 1) sin x − 2x cos x`.
pub fn secular(x: f64) -> f64 {
    (x * x - 1.0) * x.sin() - 2.0 * x * x.cos()
}

fn secular_derivative(x: f64) -> f64 {
    4.0 * x * x.sin() + (x * x - 3.0) * x.cos()
}

/// `F(hi + lo)` for `|lo| ≪ ulp(hi)`-scale corrections, evaluated with
/// error-free products so that the result reflects the residual of the
/// unrounded root rather than the spacing of `f64` near `hi`.
fn secular_compensated(hi: f64, lo: f64) -> f64 {
    let (sh, ch) = hi.sin_cos();
    let s = sh + lo * ch;
    let c = ch - lo * sh;
    let p = hi * hi;
    let p_err = hi.mul_add(hi, -p);
    let pm1 = p - 1.0;
    let q = pm1 * s;
    let q_err = pm1.mul_add(s, -q);
    let r = 2.0 * hi * c;
    let r_err = (2.0 * hi).mul_add(c, -r);
    (q - r) + (q_err - r_err) + (p_err + 2.0 * hi * lo) * s - 2.0 * lo * c
}

/// One Robin eigenmode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenMode {
    /// 1-based mode index.
    pub index: usize,
    pub sqrt_lambda: f64,
    pub lambda: f64,
    /// `A_k`, chosen so that `‖Ψ_k‖_{L²} = 1`.
    pub norm_const: f64,
    /// Sub-ulp correction: the root is `sqrt_lambda + correction`.
    correction: f64,
}

impl EigenMode {
    fn from_root(index: usize, hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        let norm_const = 1.0 / unnormalized_square_norm(s).sqrt();
        Self {
            index,
            sqrt_lambda: hi,
            lambda: hi * hi,
            norm_const,
            correction: lo,
        }
    }

    /// `|F(√λ)|` at the refined root.
    pub fn root_residual(&self) -> f64 {
        secular_compensated(self.sqrt_lambda, self.correction).abs()
    }

    /// `∂_u^order Ψ_k(u)`.
    pub fn derivative(&self, u: f64, order: usize) -> f64 {
        let s = self.sqrt_lambda;
        let (sn0, cs0) = (s * u).sin_cos();
        let d = self.correction * u;
        let sn = sn0 + d * cs0;
        let cs = cs0 - d * sn0;
        // sin(θ + mπ/2), cos(θ + mπ/2)
        let (sin_shift, cos_shift) = match order % 4 {
            0 => (sn, cs),
            1 => (cs, -sn),
            2 => (-sn, -cs),
            _ => (-cs, sn),
        };
        self.norm_const * s.powi(order as i32) * (sin_shift + s * cos_shift)
    }

    pub fn value(&self, u: f64) -> f64 {
        self.derivative(u, 0)
    }

    /// Upper bound for `sup_{[0,1]} |Ψ_k|`.
    pub fn sup_bound(&self) -> f64 {
        self.norm_const * (1.0 + self.lambda).sqrt()
    }
}

/// Closed form of `∫₀¹ (sin(s u) + s cos(s u))² du`.
fn unnormalized_square_norm(s: f64) -> f64 {
    let sin2 = (2.0 * s).sin();
    let sin1 = s.sin();
    0.5 - sin2 / (4.0 * s) + sin1 * sin1 + 0.5 * s * s + s * sin2 / 4.0
}

/// Derivative orders accepted by [`eigenfunction_value`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeOrder {
    Value = 0,
    First = 1,
    Second = 2,
}

pub fn eigenfunction_value(mode: &EigenMode, u: f64, order: DerivativeOrder) -> f64 {
    match order {
        DerivativeOrder::Second => -mode.lambda * mode.value(u),
        _ => mode.derivative(u, order as usize),
    }
}

/// Locates the first `count` roots of [`secular`], one per bracket
/// `((k − 1)π, kπ)`: bisection to width `tol_root`, then two Newton steps.
pub fn find_eigenvalues(count: usize, tol_root: f64) -> Result<Vec<EigenMode>> {
    if count == 0 {
        return Err(Error::InvalidArgument("mode count must be at least 1".into()));
    }
    if !(tol_root > 0.0) {
        return Err(Error::InvalidArgument(format!("root tolerance {tol_root} must be positive")));
    }
    (1..=count).map(|k| locate_root(k, tol_root)).collect()
}

fn locate_root(k: usize, tol_root: f64) -> Result<EigenMode> {
    // x = 0 is a spurious root of F, so the first bracket starts just right of it.
    let mut lo = if k == 1 { 1e-3 } else { (k - 1) as f64 * PI };
    let mut hi = k as f64 * PI;
    let (bracket_lo, bracket_hi) = (lo, hi);
    let mut f_lo = secular(lo);
    let f_hi = secular(hi);
    if f_lo * f_hi >= 0.0 {
        return Err(Error::BracketFailure { mode: k, lo, hi });
    }
    // Width can never drop below a couple of ulps of the root.
    let width = tol_root.max(4.0 * f64::EPSILON * hi);
    let mut iterations = 0;
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let f_mid = secular(mid);
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid * f_lo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
        iterations += 1;
        if iterations > 400 {
            return Err(Error::BracketFailure { mode: k, lo, hi });
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..2 {
        let step = secular(x) / secular_derivative(x);
        let candidate = x - step;
        if candidate > bracket_lo && candidate < bracket_hi && step.is_finite() {
            x = candidate;
        }
    }
    if !(x > bracket_lo && x < bracket_hi) {
        return Err(Error::BracketFailure { mode: k, lo: bracket_lo, hi: bracket_hi });
    }
    // The f64 nearest to the root still leaves |F| ~ x² ulp(x); carry the
    // remainder as a correction term.
    let correction = -secular(x) / secular_derivative(x);
    let mode = EigenMode::from_root(k, x, correction);
    let accept = tol_root.max(1e-15 * (1.0 + x * x));
    if !(mode.root_residual() <= accept) {
        return Err(Error::Numerical(format!(
            "mode {k}: residual {} above {accept} after polishing",
            mode.root_residual()
        )));
    }
    Ok(mode)
}

/// Ordered eigenmodes with a Gauss–Legendre rule fine enough to resolve them.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    modes: Vec<EigenMode>,
    rule: GaussLegendre,
    tol_root: f64,
    /// `Ψ_k(u_i)` at the quadrature nodes, row `k − 1`.
    table: Vec<f64>,
    /// `Ψ_k'(u_i)`, same layout.
    dtable: Vec<f64>,
}

impl EigenBasis {
    pub fn new(n_modes: usize) -> Result<Arc<Self>> {
        Self::with_tolerance(n_modes, ROOT_TOLERANCE)
    }

    pub fn with_tolerance(n_modes: usize, tol_root: f64) -> Result<Arc<Self>> {
        let modes = find_eigenvalues(n_modes, tol_root)?;
        let rule = GaussLegendre::new(MIN_QUADRATURE_ORDER.max(4 * n_modes));
        let mut table = Vec::with_capacity(n_modes * rule.order());
        let mut dtable = Vec::with_capacity(n_modes * rule.order());
        for mode in &modes {
            table.extend(rule.nodes.iter().map(|&u| mode.value(u)));
            dtable.extend(rule.nodes.iter().map(|&u| mode.derivative(u, 1)));
        }
        Ok(Arc::new(Self { modes, rule, tol_root, table, dtable }))
    }

    pub fn modes(&self) -> &[EigenMode] {
        &self.modes
    }

    /// Mode `k`, 1-based.
    pub fn mode(&self, k: usize) -> &EigenMode {
        &self.modes[k - 1]
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn quadrature_order(&self) -> usize {
        self.rule.order()
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    pub fn tol_root(&self) -> f64 {
        self.tol_root
    }

    fn row(&self, k: usize) -> &[f64] {
        let m = self.rule.order();
        &self.table[(k - 1) * m..k * m]
    }

    /// Quadrature value of `⟨Ψ_j, Ψ_k⟩`.
    pub fn gram(&self, j: usize, k: usize) -> f64 {
        self.row(j)
            .iter()
            .zip(self.row(k))
            .zip(&self.rule.weights)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }

    /// `max_{j,k} |⟨Ψ_j, Ψ_k⟩ − δ_jk|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for j in 1..=n {
            for k in j..=n {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((self.gram(j, k) - target).abs());
            }
        }
        worst
    }

    /// Bound on `Σ_{k > N} ‖f‖₂ sup|Ψ_k| e^{−λ_k t}` for the modes a
    /// truncated expansion drops, using `λ_k ≥ ((k − 1)π)²` and
    /// `sup|Ψ_k| ≤ √2` beyond the first mode.
    pub fn semigroup_tail_bound(&self, l2_norm: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::INFINITY;
        }
        let mut total = 0.0;
        let mut k = self.len() + 1;
        loop {
            let lower = ((k - 1) as f64 * PI).powi(2);
            let term = 2f64.sqrt() * (-lower * t).exp();
            total += term;
            if term < 1e-18 * total.max(1e-300) || k > self.len() + 1_000_000 {
                break;
            }
            k += 1;
        }
        l2_norm * total
    }
}

/// A finite eigen-expansion `f = Σ a_k Ψ_k`.
#[derive(Debug, Clone)]
pub struct SpectralFunction {
    basis: Arc<EigenBasis>,
    coeffs: Vec<f64>,
}

impl SpectralFunction {
    pub fn zero(basis: &Arc<EigenBasis>) -> Self {
        Self { basis: Arc::clone(basis), coeffs: vec![0.0; basis.len()] }
    }

    /// `Ψ_k` itself (1-based).
    pub fn mode(basis: &Arc<EigenBasis>, k: usize) -> Self {
        let mut f = Self::zero(basis);
        f.coeffs[k - 1] = 1.0;
        f
    }

    /// Coefficients beyond the basis length are rejected; missing ones are zero.
    pub fn from_coeffs(basis: &Arc<EigenBasis>, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() > basis.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for a basis of {} modes",
                coeffs.len(),
                basis.len()
            )));
        }
        let mut f = Self::zero(basis);
        f.coeffs[..coeffs.len()].copy_from_slice(coeffs);
        Ok(f)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    fn map_coeffs(&self, mut g: impl FnMut(&EigenMode, f64) -> f64) -> Self {
        let coeffs = self.basis.modes().iter().zip(&self.coeffs).map(|(m, &a)| g(m, a)).collect();
        Self { basis: Arc::clone(&self.basis), coeffs }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.derivative(u, 0)
    }

    pub fn gradient(&self, u: f64) -> f64 {
        self.derivative(u, 1)
    }

    pub fn derivative(&self, u: f64, order: usize) -> f64 {
        self.basis
            .modes()
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, &a)| a != 0.0)
            .map(|(m, &a)| a * m.derivative(u, order))
            .sum()
    }

    /// `T_t f`: `a_k ↦ a_k e^{−λ_k t}`.
    pub fn semigroup(&self, t: f64) -> Result<Self> {
        check_time(t)?;
        Ok(self.map_coeffs(|m, a| a * (-m.lambda * t).exp()))
    }

    pub fn laplacian(&self) -> Self {
        self.map_coeffs(|m, a| -m.lambda * a)
    }

    /// `(−Δ)^{-1} f`: `a_k ↦ a_k / λ_k`.
    pub fn inverse_laplacian(&self) -> Self {
        self.map_coeffs(|m, a| a / m.lambda)
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map_coeffs(|_, a| c * a)
    }

    pub fn plus(&self, other: &Self) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Self { basis: Arc::clone(&self.basis), coeffs }
    }

    /// `L²` inner product, exact by orthonormality.
    pub fn inner(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Sampled supremum norm on a uniform grid of `points` nodes.
    pub fn sup_norm(&self, points: usize) -> f64 {
        let points = points.max(2);
        (0..points)
            .map(|i| self.value(i as f64 / (points - 1) as f64).abs())
            .fold(0.0, f64::max)
    }

    /// `f` (order 0) or `f'` (order 1) at the basis quadrature nodes.
    pub fn node_values(&self, order: usize) -> Vec<f64> {
        assert!(order <= 1, "node tables hold orders 0 and 1");
        let m = self.basis.rule.order();
        let table = if order == 0 { &self.basis.table } else { &self.basis.dtable };
        let mut out = vec![0.0; m];
        for (k, &a) in self.coeffs.iter().enumerate() {
            if a != 0.0 {
                let row = &table[k * m..(k + 1) * m];
                out.iter_mut().zip(row).for_each(|(o, &psi)| *o += a * psi);
            }
        }
        out
    }

    /// Number of leading modes carrying nonzero coefficients.
    pub fn active_modes(&self) -> usize {
        self.coeffs.iter().rposition(|&a| a != 0.0).map_or(0, |i| i + 1)
    }
}

/// Anything that can be evaluated pointwise on `[0, 1]`.
pub trait UnitFunction {
    fn eval(&self, u: f64) -> f64;

    fn as_spectral(&self) -> Option<&SpectralFunction> {
        None
    }
}

impl<F: Fn(f64) -> f64> UnitFunction for F {
    fn eval(&self, u: f64) -> f64 {
        self(u)
    }
}

impl UnitFunction for SpectralFunction {
    fn eval(&self, u: f64) -> f64 {
        self.value(u)
    }

    fn as_spectral(&self) -> Option<&SpectralFunction> {
        Some(self)
    }
}

/// Samples on the uniform grid `u_i = i / (m − 1)`, linearly interpolated.
#[derive(Debug, Clone)]
pub struct SampledGrid {
    pub values: Vec<f64>,
}

impl UnitFunction for SampledGrid {
    fn eval(&self, u: f64) -> f64 {
        let m = self.values.len();
        if m == 1 {
            return self.values[0];
        }
        let pos = u.clamp(0.0, 1.0) * (m - 1) as f64;
        let i = (pos.floor() as usize).min(m - 2);
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// Fourier coefficients `a_k = ⟨f, Ψ_k⟩` by the basis quadrature.
pub fn project<F: UnitFunction + ?Sized>(f: &F, basis: &Arc<EigenBasis>) -> SpectralFunction {
    if let Some(sf) = f.as_spectral() {
        if Arc::ptr_eq(sf.basis(), basis) {
            return sf.clone();
        }
    }
    let samples: Vec<f64> = basis.rule.nodes.iter().map(|&u| f.eval(u)).collect();
    let coeffs = (1..=basis.len())
        .map(|k| {
            basis
                .row(k)
                .iter()
                .zip(&samples)
                .zip(&basis.rule.weights)
                .map(|((psi, fv), w)| psi * fv * w)
                .sum()
        })
        .collect();
    SpectralFunction { basis: Arc::clone(basis), coeffs }
}

/// Projection of uniformly sampled data; needs at least `quadrature_order` samples.
pub fn project_grid(grid: &SampledGrid, basis: &Arc<EigenBasis>) -> Result<SpectralFunction> {
    if grid.values.len() < basis.quadrature_order() {
        return Err(Error::Resolution(format!(
            "grid of {} samples is coarser than quadrature order {}",
            grid.values.len(),
            basis.quadrature_order()
        )));
    }
    Ok(project(grid, basis))
}

pub fn semigroup_apply(f: &SpectralFunction, t: f64) -> Result<SpectralFunction> {
    f.semigroup(t)
}

pub fn inverse_laplacian(f: &SpectralFunction) -> SpectralFunction {
    f.inverse_laplacian()
}

/// `(∫₀^T ∫₀¹ 2 (T_r f)² du dr, ∫₀¹ f (−Δ)^{-1} f du)` from the coefficients.
pub fn green_identity_check(f: &SpectralFunction, horizon: f64) -> Result<(f64, f64)> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (m, &a) in f.basis.modes().iter().zip(&f.coeffs) {
        let a2 = a * a;
        lhs += a2 * (-(-2.0 * m.lambda * horizon).exp_m1()) / m.lambda;
        rhs += a2 / m.lambda;
    }
    Ok((lhs, rhs))
}

/// Functions whose derivatives of every order can be evaluated directly.
pub trait Derivatives {
    fn derivative_at(&self, u: f64, order: usize) -> f64;
}

impl Derivatives for SpectralFunction {
    fn derivative_at(&self, u: f64, order: usize) -> f64 {
        self.derivative(u, order)
    }
}

/// Polynomial with coefficients in increasing degree.
#[derive(Debug, Clone)]
pub struct Polynomial(pub Vec<f64>);

impl Derivatives for Polynomial {
    fn derivative_at(&self, u: f64, order: usize) -> f64 {
        let mut acc = 0.0;
        for (deg, &c) in self.0.iter().enumerate().rev() {
            if deg < order {
                break;
            }
            let falling: f64 = ((deg - order + 1)..=deg).map(|j| j as f64).product();
            acc += c * falling * u.powi((deg - order) as i32);
        }
        acc
    }
}

/// Largest violation of `∂^{2k+1} f(0) = ∂^{2k} f(0)` and
/// `∂^{2k+1} f(1) = −∂^{2k} f(1)` over `k ≤ k_max`.
pub fn test_space_residual<D: Derivatives + ?Sized>(f: &D, k_max: usize) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..=k_max {
        let even = 2 * k;
        let left = (f.derivative_at(0.0, even + 1) - f.derivative_at(0.0, even)).abs();
        let right = (f.derivative_at(1.0, even + 1) + f.derivative_at(1.0, even)).abs();
        worst = worst.max(left).max(right);
    }
    worst
}
