//! Two-point correlations `φ_t(x, y) = Cov(η_t(x), η_t(y))` on the triangle
//! `V_n = {0 < x < y < n}`.
//!
//! `φ` solves `∂_t φ = n² A_n φ + g_t` where `A_n` generates a walk on
//! `V_n ∪ ∂V_n` absorbed on `∂V_n = {x = 0} ∪ {y = n}` and `g_t` lives on the
//! diagonal `D_n = {y = x + 1}`. Expanding the generator gives
//! `g_t(x, x+1) = −n² (ρ_t(x+1) − ρ_t(x))²`: the source is non-positive,
//! which is what makes boundary-driven correlations negative.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{check_time, Error, Result};
use crate::hydro::{DiscreteHeat, LatticeProfile, Reservoirs};
use crate::lattice::EnsembleStats;
use crate::linalg::{BandedCholesky, BandedSpd};
use crate::rng::derive;
use crate::stats::Moments;

/// Number of points in `V_n`.
pub fn triangle_len(n: usize) -> usize {
    (n - 1) * (n - 2) / 2
}

/// Packed row-major position of `(x, y)`, `0 < x < y < n`.
#[inline]
pub fn triangle_index(n: usize, x: usize, y: usize) -> usize {
    debug_assert!(0 < x && x < y && y < n);
    (x - 1) * (n - 1) - (x - 1) * x / 2 + (y - x - 1)
}

/// Which lattice moves connect points of `V_n ∪ ∂V_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Adjacency {
    /// Nearest neighbours along the axes.
    #[default]
    Axis,
    /// Sup-norm distance one, i.e. diagonal moves included.
    SupNorm,
}

/// Sign of the diagonal source term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceSign {
    /// `g = −n² (∇ρ)²`, as obtained from the generator.
    #[default]
    Negative,
    /// `g = +n² (∇ρ)²`.
    Positive,
}

impl SourceSign {
    fn factor(self) -> f64 {
        match self {
            SourceSign::Negative => -1.0,
            SourceSign::Positive => 1.0,
        }
    }
}

/// Time integrators for the correlation system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Exponential for `n ≤ EXPONENTIAL_MAX_N`, Crank–Nicolson above.
    #[default]
    Auto,
    /// Modal exponential integrator with a source linear in time per step.
    Exponential,
    CrankNicolson,
}

pub const EXPONENTIAL_MAX_N: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationOptions {
    pub adjacency: Adjacency,
    /// Weight of edges into `∂V_n`; `None` means `1/n`.
    pub boundary_weight: Option<f64>,
    pub source_sign: SourceSign,
    pub integrator: Integrator,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        Self {
            adjacency: Adjacency::Axis,
            boundary_weight: None,
            source_sign: SourceSign::Negative,
            integrator: Integrator::Auto,
        }
    }
}

/// `φ(x, y)` on `V_n`, zero on `∂V_n`, optionally with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGrid {
    n: usize,
    values: Vec<f64>,
    stderr: Option<Vec<f64>>,
}

impl CorrelationGrid {
    pub fn zeros(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("n = {n} must be at least 3")));
        }
        Ok(Self { n, values: vec![0.0; triangle_len(n)], stderr: None })
    }

    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 3 || values.len() != triangle_len(n) {
            return Err(Error::Shape(format!("{} values for the triangle of n = {n}", values.len())));
        }
        Ok(Self { n, values, stderr: None })
    }

    /// Pairwise covariances of a product law are zero; this builds the
    /// grid from an arbitrary function of `(x, y)`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut g = Self::zeros(n)?;
        for x in 1..n {
            for y in x + 1..n {
                g.values[triangle_index(n, x, y)] = f(x, y);
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stderr(&self) -> Option<&[f64]> {
        self.stderr.as_deref()
    }

    /// `φ(x, y)` for `0 ≤ x < y ≤ n`; zero on `∂V_n`.
    pub fn get(&self, x: usize, y: usize) -> Result<f64> {
        if x >= y || y > self.n {
            return Err(Error::InvalidArgument(format!(
                "({x}, {y}) is not in the closed triangle for n = {}",
                self.n
            )));
        }
        if x == 0 || y == self.n {
            return Ok(0.0);
        }
        Ok(self.values[triangle_index(self.n, x, y)])
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `(x, y, φ)` for every point of `V_n` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (1..n).flat_map(move |x| (x + 1..n).map(move |y| (x, y))).zip(&self.values).map(|((x, y), &v)| (x, y, v))
    }
}

/// The walk generator `A_n` on the packed triangle.
#[derive(Debug, Clone)]
pub struct CorrelationOperator {
    n: usize,
    adjacency: Adjacency,
    boundary_weight: f64,
    /// Interior neighbours `(j, weight)` per point.
    neighbours: Vec<Vec<(usize, f64)>>,
    /// Total weight of edges from each point into `∂V_n`.
    absorption: Vec<f64>,
    diagonal: Vec<usize>,
}

impl CorrelationOperator {
    pub fn new(n: usize, adjacency: Adjacency, boundary_weight: Option<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("n = {n} must be at least 3")));
        }
        let bw = boundary_weight.unwrap_or(1.0 / n as f64);
        if !(bw >= 0.0) {
            return Err(Error::InvalidArgument(format!("boundary weight {bw} must be nonnegative")));
        }
        let len = triangle_len(n);
        let mut neighbours = vec![Vec::new(); len];
        let mut absorption = vec![0.0; len];
        let moves: &[(i64, i64)] = match adjacency {
            Adjacency::Axis => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
            Adjacency::SupNorm => &[(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)],
        };
        let ni = n as i64;
        for x in 1..n {
            for y in x + 1..n {
                let i = triangle_index(n, x, y);
                for &(dx, dy) in moves {
                    let (vx, vy) = (x as i64 + dx, y as i64 + dy);
                    let in_interior = 0 < vx && vx < vy && vy < ni;
                    let on_boundary = (vx == 0 && (1..=ni).contains(&vy)) || (vy == ni && (1..ni).contains(&vx));
                    if in_interior {
                        neighbours[i].push((triangle_index(n, vx as usize, vy as usize), 1.0));
                    } else if on_boundary {
                        absorption[i] += bw;
                    }
                }
            }
        }
        let diagonal = (1..n - 1).map(|x| triangle_index(n, x, x + 1)).collect();
        Ok(Self { n, adjacency, boundary_weight: bw, neighbours, absorption, diagonal })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.absorption.len()
    }

    pub fn is_empty(&self) -> bool {
        self.absorption.is_empty()
    }

    pub fn adjacency(&self) -> Adjacency {
        self.adjacency
    }

    pub fn boundary_weight(&self) -> f64 {
        self.boundary_weight
    }

    /// Packed indices of `D_n`, ordered by `x`.
    pub fn diagonal(&self) -> &[usize] {
        &self.diagonal
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.neighbours
            .iter()
            .zip(&self.absorption)
            .enumerate()
            .map(|(i, (nb, &abs))| nb.iter().map(|&(j, w)| w * (f[j] - f[i])).sum::<f64>() - abs * f[i])
            .collect()
    }

    fn bandwidth(&self) -> usize {
        self.neighbours
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().map(move |&(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// `shift · I − scale · A_n` in banded storage.
    pub fn banded(&self, shift: f64, scale: f64) -> BandedSpd {
        let mut m = BandedSpd::zeros(self.len(), self.bandwidth());
        for (i, nb) in self.neighbours.iter().enumerate() {
            let out: f64 = nb.iter().map(|&(_, w)| w).sum::<f64>() + self.absorption[i];
            m.add(i, i, shift + scale * out);
            for &(j, w) in nb {
                if j < i {
                    m.add(i, j, -scale * w);
                }
            }
        }
        m
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let len = self.len();
        let mut m = DMatrix::zeros(len, len);
        for (i, nb) in self.neighbours.iter().enumerate() {
            let out: f64 = nb.iter().map(|&(_, w)| w).sum::<f64>() + self.absorption[i];
            m[(i, i)] = -out;
            for &(j, w) in nb {
                m[(i, j)] += w;
            }
        }
        m
    }

    /// Diagonal source `g` for a given mean profile.
    pub fn source(&self, profile: &LatticeProfile, sign: SourceSign) -> Vec<f64> {
        let n2 = (self.n * self.n) as f64;
        let mut g = vec![0.0; self.len()];
        for (k, &i) in self.diagonal.iter().enumerate() {
            let x = k + 1;
            let d = profile.value(x + 1) - profile.value(x);
            g[i] = sign.factor() * n2 * d * d;
        }
        g
    }
}

pub fn an_apply(phi: &CorrelationGrid, adjacency: Adjacency) -> Result<CorrelationGrid> {
    let op = CorrelationOperator::new(phi.n, adjacency, None)?;
    CorrelationGrid::from_values(phi.n, op.apply(&phi.values))
}

/// Mean profiles at the integrator nodes.
#[derive(Debug, Clone)]
pub struct ProfilePath {
    pub times: Vec<f64>,
    pub profiles: Vec<LatticeProfile>,
}

impl ProfilePath {
    /// Exact profiles on a uniform grid of `[0, t]` with step at most `max_step`.
    pub fn exact(heat: &DiscreteHeat, initial: &LatticeProfile, t: f64, max_step: f64) -> Result<Self> {
        check_time(t)?;
        let steps = ((t / max_step).ceil() as usize).max(1);
        let times: Vec<f64> = (0..=steps).map(|k| t * k as f64 / steps as f64).collect();
        let profiles = heat.path(initial, &times)?;
        Ok(Self { times, profiles })
    }

    fn check(&self, n: usize, t: f64, max_step: f64) -> Result<()> {
        if self.times.len() != self.profiles.len() || self.times.is_empty() {
            return Err(Error::Shape("profile path times and profiles differ in length".into()));
        }
        if self.profiles.iter().any(|p| p.n() != n) {
            return Err(Error::Shape("profile path has the wrong lattice size".into()));
        }
        let first = self.times[0];
        let last = *self.times.last().unwrap();
        if first != 0.0 || last < t {
            return Err(Error::Resolution(format!("profile path covers [{first}, {last}], need [0, {t}]")));
        }
        let widest = self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        if widest > max_step * (1.0 + 1e-9) {
            return Err(Error::Resolution(format!(
                "profile path step {widest} exceeds integrator step {max_step}"
            )));
        }
        Ok(())
    }
}

/// Largest step accepted for the correlation integrators: `1/(4n²)`.
pub fn max_step(n: usize) -> f64 {
    1.0 / (4.0 * (n * n) as f64)
}

/// Precomputed solver for the correlation system.
pub struct CorrelationSolver {
    op: CorrelationOperator,
    options: CorrelationOptions,
    modal: Option<SymmetricEigen<f64, nalgebra::Dyn>>,
}

impl CorrelationSolver {
    pub fn new(n: usize, options: CorrelationOptions) -> Result<Self> {
        let op = CorrelationOperator::new(n, options.adjacency, options.boundary_weight)?;
        let exponential = match options.integrator {
            Integrator::Auto => n <= EXPONENTIAL_MAX_N,
            Integrator::Exponential => true,
            Integrator::CrankNicolson => false,
        };
        let modal = exponential.then(|| SymmetricEigen::new(op.dense() * (n * n) as f64));
        Ok(Self { op, options, modal })
    }

    pub fn operator(&self) -> &CorrelationOperator {
        &self.op
    }

    /// Evolves `φ₀` to time `t` along `path`, returning `φ` at every path
    /// node up to `t`.
    pub fn evolve_path(&self, initial: &CorrelationGrid, path: &ProfilePath, t: f64) -> Result<Vec<CorrelationGrid>> {
        let n = self.op.n;
        if initial.n != n {
            return Err(Error::Shape(format!("grid n = {} but solver n = {n}", initial.n)));
        }
        path.check(n, t, max_step(n))?;
        let nodes = path.times.iter().take_while(|&&s| s <= t * (1.0 + 1e-12)).count();
        let sources: Vec<Vec<f64>> =
            path.profiles[..nodes].iter().map(|p| self.op.source(p, self.options.source_sign)).collect();
        let mut out = Vec::with_capacity(nodes);
        out.push(initial.clone());
        match &self.modal {
            Some(eig) => {
                let v = &eig.eigenvectors;
                let to_modal = |f: &[f64]| v.tr_mul(&DVector::from_column_slice(f));
                let mut c = to_modal(&initial.values);
                let mut s0 = to_modal(&sources[0]);
                for k in 1..nodes {
                    let h = path.times[k] - path.times[k - 1];
                    let s1 = to_modal(&sources[k]);
                    for m in 0..c.len() {
                        let z = eig.eigenvalues[m] * h;
                        let (p1, p2) = phi_functions(z);
                        c[m] = z.exp() * c[m] + h * p1 * s0[m] + h * p2 * (s1[m] - s0[m]);
                    }
                    s0 = s1;
                    let back = v * &c;
                    out.push(CorrelationGrid { n, values: back.as_slice().to_vec(), stderr: None });
                }
            }
            None => {
                let n2 = (n * n) as f64;
                let mut factor: Option<(f64, BandedCholesky)> = None;
                let mut phi = initial.values.clone();
                for k in 1..nodes {
                    let h = path.times[k] - path.times[k - 1];
                    if factor.as_ref().is_none_or(|(hh, _)| (hh - h).abs() > 1e-14 * h) {
                        factor = Some((h, self.op.banded(1.0, 0.5 * h * n2).cholesky()?));
                    }
                    let a_phi = self.op.apply(&phi);
                    let mut rhs: Vec<f64> = (0..phi.len())
                        .map(|i| phi[i] + 0.5 * h * n2 * a_phi[i] + 0.5 * h * (sources[k - 1][i] + sources[k][i]))
                        .collect();
                    factor.as_ref().unwrap().1.solve_in_place(&mut rhs);
                    phi = rhs;
                    out.push(CorrelationGrid { n, values: phi.clone(), stderr: None });
                }
            }
        }
        Ok(out)
    }
}

/// `φ₁(z) = (e^z − 1)/z` and `φ₂(z) = (e^z − 1 − z)/z²`, series near 0.
fn phi_functions(z: f64) -> (f64, f64) {
    if z.abs() < 1e-3 {
        let p1 = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
        let p2 = 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
        (p1, p2)
    } else {
        let em1 = z.exp_m1();
        (em1 / z, (em1 - z) / (z * z))
    }
}

/// `φ_t` from `φ₀` with the mean profile evolved exactly from `initial`.
pub fn evolve_correlations(
    initial_phi: &CorrelationGrid,
    heat: &DiscreteHeat,
    initial_profile: &LatticeProfile,
    t: f64,
    options: CorrelationOptions,
) -> Result<CorrelationGrid> {
    let solver = CorrelationSolver::new(heat.n(), options)?;
    let path = ProfilePath::exact(heat, initial_profile, t, max_step(heat.n()))?;
    Ok(solver.evolve_path(initial_phi, &path, t)?.pop().expect("nonempty"))
}

/// Stationary `φ`: solves `−A_n φ = g/n²` with the stationary source.
pub fn stationary_correlations(n: usize, reservoirs: Reservoirs, options: CorrelationOptions) -> Result<CorrelationGrid> {
    let op = CorrelationOperator::new(n, options.adjacency, options.boundary_weight)?;
    let profile = crate::hydro::stationary_profile_discrete(n, reservoirs, crate::hydro::BoundaryExtension::Reservoir)?;
    let n2 = (n * n) as f64;
    let rhs: Vec<f64> = op.source(&profile, options.source_sign).into_iter().map(|g| g / n2).collect();
    let values = op.banded(0.0, 1.0).cholesky()?.solve(&rhs);
    CorrelationGrid::from_values(n, values)
}

/// Plug-in covariances at `stats.times[ti]` with per-entry standard errors.
pub fn empirical_correlations(stats: &EnsembleStats, ti: usize) -> Result<CorrelationGrid> {
    let n = stats.n;
    let mut values = vec![0.0; triangle_len(n)];
    let mut errors = vec![0.0; triangle_len(n)];
    for x in 1..n {
        for y in x + 1..n {
            let (c, se) = stats.pair_covariance(ti, x, y)?;
            let i = triangle_index(n, x, y);
            values[i] = c;
            errors[i] = se;
        }
    }
    Ok(CorrelationGrid { n, values, stderr: Some(errors) })
}

/// Expected time the walk generated by `A_n` spends on `D_n` before
/// absorption, for every start point: solves `−A_n ψ = 1_{D_n}`.
pub fn occupation_times(n: usize, adjacency: Adjacency) -> Result<CorrelationGrid> {
    let op = CorrelationOperator::new(n, adjacency, None)?;
    let mut rhs = vec![0.0; op.len()];
    op.diagonal().iter().for_each(|&i| rhs[i] = 1.0);
    let values = op.banded(0.0, 1.0).cholesky()?.solve(&rhs);
    CorrelationGrid::from_values(n, values)
}

/// Expected diagonal occupation time from `(x, y)`; zero on `∂V_n`.
pub fn occupation_time(n: usize, x: usize, y: usize, adjacency: Adjacency) -> Result<f64> {
    occupation_times(n, adjacency)?.get(x, y)
}

/// Monte Carlo estimate of [`occupation_time`]: mean and standard error.
pub fn occupation_time_mc(
    n: usize,
    x: usize,
    y: usize,
    adjacency: Adjacency,
    walks: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let op = CorrelationOperator::new(n, adjacency, None)?;
    if x >= y || y > n {
        return Err(Error::InvalidArgument(format!("({x}, {y}) is not in the closed triangle")));
    }
    if x == 0 || y == n {
        return Ok((0.0, 0.0));
    }
    let on_diagonal: Vec<bool> = {
        let mut d = vec![false; op.len()];
        op.diagonal().iter().for_each(|&i| d[i] = true);
        d
    };
    let start = triangle_index(n, x, y);
    let moments = (0..walks)
        .into_par_iter()
        .map(|w| {
            let mut rng = derive(seed, w as u64);
            let mut at = start;
            let mut occupied = 0.0;
            loop {
                let nb = &op.neighbours[at];
                let out: f64 = nb.len() as f64 + op.absorption[at];
                if on_diagonal[at] {
                    occupied += rng.sample::<f64, _>(Exp1) / out;
                }
                let v = rng.random::<f64>() * out;
                if v >= nb.len() as f64 {
                    break;
                }
                at = nb[v as usize].0;
            }
            Moments::from_slice(&[occupied])
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Moments::new(), |mut acc, m| {
            acc.merge(&m);
            acc
        });
    Ok((moments.mean(), moments.stderr()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydro::BoundaryExtension;
    use crate::lattice::exact_chain;

    fn res(a: f64, b: f64) -> Reservoirs {
        Reservoirs::new(a, b).unwrap()
    }

    #[test]
    fn packing_is_a_bijection() {
        for n in 3..12 {
            let mut seen = vec![false; triangle_len(n)];
            for x in 1..n {
                for y in x + 1..n {
                    let i = triangle_index(n, x, y);
                    assert!(!seen[i]);
                    seen[i] = true;
                }
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }

    /// Enumerates `V_n ∪ ∂V_n` and connects every pair at the requested
    /// distance, then removes `∂V_n` rows and columns.
    fn brute_force_matrix(n: usize, adjacency: Adjacency) -> DMatrix<f64> {
        let mut points = Vec::new();
        for x in 0..=n {
            for y in 0..=n {
                let interior = 0 < x && x < y && y < n;
                let boundary = (x == 0 && 1 <= y && y <= n) || (y == n && 1 <= x && x < n);
                if interior || boundary {
                    points.push((x as i64, y as i64, interior));
                }
            }
        }
        let len = triangle_len(n);
        let mut m = DMatrix::zeros(len, len);
        for &(x, y, interior) in &points {
            if !interior {
                continue;
            }
            let i = triangle_index(n, x as usize, y as usize);
            for &(vx, vy, v_interior) in &points {
                let dist = match adjacency {
                    Adjacency::Axis => (x - vx).abs() + (y - vy).abs(),
                    Adjacency::SupNorm => (x - vx).abs().max((y - vy).abs()),
                };
                if dist != 1 {
                    continue;
                }
                let w = if v_interior { 1.0 } else { 1.0 / n as f64 };
                m[(i, i)] -= w;
                if v_interior {
                    m[(i, triangle_index(n, vx as usize, vy as usize))] += w;
                }
            }
        }
        m
    }

    #[test]
    fn operator_matches_enumeration() {
        for n in 3..=6 {
            for adj in [Adjacency::Axis, Adjacency::SupNorm] {
                let op = CorrelationOperator::new(n, adj, None).unwrap();
                let diff = (op.dense() - brute_force_matrix(n, adj)).amax();
                assert!(diff < 1e-15, "n = {n}, {adj:?}");
            }
        }
    }

    #[test]
    fn operator_stencil() {
        let n = 12;
        let op = CorrelationOperator::new(n, Adjacency::Axis, None).unwrap();
        let mut f = vec![0.0; op.len()];
        let centre = triangle_index(n, 4, 8);
        f[centre] = 1.0;
        let af = op.apply(&f);
        assert_eq!(af[centre], -4.0);
        for (x, y) in [(3, 8), (5, 8), (4, 7), (4, 9)] {
            assert_eq!(af[triangle_index(n, x, y)], 1.0);
        }
        assert_eq!(af.iter().sum::<f64>(), 0.0);
        assert!(op.apply(&vec![0.0; op.len()]).iter().all(|&v| v == 0.0));
        let banded = op.banded(0.0, 1.0);
        let neg: Vec<f64> = op.apply(&f).iter().map(|v| -v).collect();
        assert_eq!(banded.mul_vec(&f), neg);
    }

    fn exact_stationary_phi(n: usize, r: Reservoirs) -> Vec<f64> {
        let chain = exact_chain(n, r).unwrap();
        chain.pair_covariances(chain.stationary())
    }

    #[test]
    fn stationary_matches_exact_chain() {
        for n in [3, 4, 5, 7] {
            let r = res(0.2, 0.7);
            let phi = stationary_correlations(n, r, CorrelationOptions::default()).unwrap();
            let oracle = exact_stationary_phi(n, r);
            let gap = phi.values().iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(gap < 1e-12, "n = {n}: gap {gap}");
            assert!(phi.values().iter().all(|&v| v <= 1e-15));
        }
    }

    #[test]
    fn alternative_readings_disagree_with_exact_chain() {
        let n = 5;
        let r = res(0.1, 0.9);
        let oracle = exact_stationary_phi(n, r);
        let gap = |opts: CorrelationOptions| {
            let phi = stationary_correlations(n, r, opts).unwrap();
            phi.values().iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let base = CorrelationOptions::default();
        assert!(gap(CorrelationOptions { adjacency: Adjacency::SupNorm, ..base }) > 1e-4);
        assert!(gap(CorrelationOptions { source_sign: SourceSign::Positive, ..base }) > 1e-4);
        assert!(gap(CorrelationOptions { boundary_weight: Some(1.0), ..base }) > 1e-4);
    }

    /// [`evolve_correlations`] on a path `refine` times finer than the cap.
    fn evolve_fine(
        phi0: &CorrelationGrid,
        heat: &DiscreteHeat,
        p0: &LatticeProfile,
        t: f64,
        options: CorrelationOptions,
        refine: f64,
    ) -> CorrelationGrid {
        let solver = CorrelationSolver::new(heat.n(), options).unwrap();
        let path = ProfilePath::exact(heat, p0, t, max_step(heat.n()) / refine).unwrap();
        solver.evolve_path(phi0, &path, t).unwrap().pop().unwrap()
    }

    #[test]
    fn transient_matches_exact_chain() {
        let n = 4;
        let r = res(0.2, 0.7);
        let chain = exact_chain(n, r).unwrap();
        let start = chain.point_mass(&crate::lattice::Configuration::from_sites(n, &[1, 0, 1]).unwrap());
        let heat = DiscreteHeat::new(n, r).unwrap();
        let p0 = LatticeProfile::new(&[1.0, 0.0, 1.0], r.alpha, r.beta).unwrap();
        let phi0 = CorrelationGrid::zeros(n).unwrap();
        for integrator in [Integrator::Exponential, Integrator::CrankNicolson] {
            let opts = CorrelationOptions { integrator, ..Default::default() };
            let phi = evolve_fine(&phi0, &heat, &p0, 0.05, opts, 64.0);
            let oracle = chain.pair_covariances(&chain.law_at(&start, 0.05).unwrap());
            let gap = phi.values().iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(gap < 1e-5, "{integrator:?}: gap {gap}");
        }
    }

    #[test]
    fn flat_profile_gives_no_correlations() {
        let n = 10;
        let r = res(0.4, 0.4);
        let heat = DiscreteHeat::new(n, r).unwrap();
        let p0 = LatticeProfile::from_fn(n, r, |_| 0.4).unwrap();
        let phi = evolve_correlations(&CorrelationGrid::zeros(n).unwrap(), &heat, &p0, 0.02, Default::default()).unwrap();
        assert_eq!(phi.sup_norm(), 0.0);
    }

    #[test]
    fn zero_source_evolution_is_linear() {
        let n = 9;
        let r = res(0.3, 0.3);
        let heat = DiscreteHeat::new(n, r).unwrap();
        let flat = LatticeProfile::from_fn(n, r, |_| 0.3).unwrap();
        let a = CorrelationGrid::from_fn(n, |x, y| ((x * y) as f64).sin() * 0.1).unwrap();
        let b = CorrelationGrid::from_fn(n, |x, y| (x as f64 - y as f64) * 0.01).unwrap();
        let combo = CorrelationGrid::from_fn(n, |x, y| {
            2.0 * a.get(x, y).unwrap() - 3.0 * b.get(x, y).unwrap()
        })
        .unwrap();
        for integrator in [Integrator::Exponential, Integrator::CrankNicolson] {
            let opts = CorrelationOptions { integrator, ..Default::default() };
            let ea = evolve_correlations(&a, &heat, &flat, 0.01, opts).unwrap();
            let eb = evolve_correlations(&b, &heat, &flat, 0.01, opts).unwrap();
            let ec = evolve_correlations(&combo, &heat, &flat, 0.01, opts).unwrap();
            for i in 0..ea.values().len() {
                let lin = 2.0 * ea.values()[i] - 3.0 * eb.values()[i];
                assert!((lin - ec.values()[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn integrators_agree_and_reach_stationarity() {
        let n = 8;
        let r = res(0.1, 0.9);
        let heat = DiscreteHeat::new(n, r).unwrap();
        let p0 = LatticeProfile::from_fn(n, r, |u| 0.2 + 0.5 * u).unwrap();
        let phi0 = CorrelationGrid::zeros(n).unwrap();
        let run = |integrator, refine| {
            evolve_fine(&phi0, &heat, &p0, 0.3, CorrelationOptions { integrator, ..Default::default() }, refine)
        };
        let ex = run(Integrator::Exponential, 1.0);
        let cn = run(Integrator::CrankNicolson, 1.0);
        let coarse = ex.max_abs_diff(&cn);
        assert!(coarse < 1e-2 * ex.sup_norm(), "{coarse}");
        let fine = run(Integrator::Exponential, 16.0).max_abs_diff(&run(Integrator::CrankNicolson, 16.0));
        assert!(fine < 1e-5 * ex.sup_norm(), "{fine}");
        let ss_start = crate::hydro::stationary_profile_discrete(n, r, BoundaryExtension::Reservoir).unwrap();
        let ss = stationary_correlations(n, r, Default::default()).unwrap();
        let late = evolve_correlations(&ss, &heat, &ss_start, 0.05, Default::default()).unwrap();
        assert!(late.max_abs_diff(&ss) < 1e-12);
    }

    #[test]
    fn coarse_profile_path_is_rejected() {
        let n = 6;
        let r = res(0.1, 0.9);
        let heat = DiscreteHeat::new(n, r).unwrap();
        let p0 = heat.stationary();
        let coarse = ProfilePath::exact(&heat, &p0, 0.1, 0.05).unwrap();
        let solver = CorrelationSolver::new(n, Default::default()).unwrap();
        let phi0 = CorrelationGrid::zeros(n).unwrap();
        assert!(matches!(solver.evolve_path(&phi0, &coarse, 0.1), Err(Error::Resolution(_))));
    }

    #[test]
    fn grid_access() {
        let g = CorrelationGrid::from_fn(5, |x, y| (10 * x + y) as f64).unwrap();
        assert_eq!(g.get(2, 4).unwrap(), 24.0);
        assert_eq!(g.get(0, 3).unwrap(), 0.0);
        assert_eq!(g.get(2, 5).unwrap(), 0.0);
        assert!(g.get(3, 3).is_err());
        assert_eq!(g.iter().count(), 6);
    }

    #[test]
    fn occupation_time_oracle_and_mc() {
        let n = 6;
        let exact = occupation_time(n, 2, 3, Adjacency::Axis).unwrap();
        // dense solve, independent of the banded factorisation
        let op = CorrelationOperator::new(n, Adjacency::Axis, None).unwrap();
        let mut rhs = DVector::zeros(op.len());
        op.diagonal().iter().for_each(|&i| rhs[i] = 1.0);
        let dense = (-op.dense()).lu().solve(&rhs).unwrap();
        assert!((dense[triangle_index(n, 2, 3)] - exact).abs() < 1e-10 * exact);
        let (mc, se) = occupation_time_mc(n, 2, 3, Adjacency::Axis, 20_000, 5).unwrap();
        assert!((mc - exact).abs() < 4.0 * se, "mc {mc} ± {se} vs {exact}");
        assert_eq!(occupation_time(n, 0, 3, Adjacency::Axis).unwrap(), 0.0);
        assert_eq!(occupation_time_mc(n, 2, 6, Adjacency::Axis, 10, 1).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn occupation_time_grows_linearly() {
        let t = |n: usize| occupation_time(n, n / 2, n / 2 + 1, Adjacency::Axis).unwrap();
        let ratio = t(64) / t(32);
        assert!((1.5..2.5).contains(&ratio), "ratio {ratio}");
    }
}
