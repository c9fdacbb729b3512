//! Brute-force enumeration of the chain on `2^{n−1}` states.

use nalgebra::{DMatrix, DVector};

use super::{flip_rate, Configuration};
use crate::correlations::{triangle_index, triangle_len};
use crate::error::{check_time, Error, Result};
use crate::hydro::Reservoirs;

pub const MAX_EXACT_N: usize = 12;

/// Generator of `n² L_n` and its stationary law. State `i` encodes `η(x)` in
/// bit `x − 1`.
#[derive(Debug, Clone)]
pub struct ExactChain {
    n: usize,
    reservoirs: Reservoirs,
    generator: DMatrix<f64>,
    stationary: DVector<f64>,
}

pub fn exact_chain(n: usize, reservoirs: Reservoirs) -> Result<ExactChain> {
    ExactChain::new(n, reservoirs)
}

impl ExactChain {
    pub fn new(n: usize, reservoirs: Reservoirs) -> Result<Self> {
        if n > MAX_EXACT_N {
            return Err(Error::TooLarge { n, max: MAX_EXACT_N });
        }
        if n < 3 {
            return Err(Error::InvalidArgument(format!("n = {n} must be at least 3")));
        }
        let states = 1usize << (n - 1);
        let mut q = DMatrix::<f64>::zeros(states, states);
        let bond_rate = (n * n) as f64;
        for i in 0..states {
            let c = Configuration::from_index(n, i)?;
            for b in 1..n - 1 {
                if c.get(b) != c.get(b + 1) {
                    let j = i ^ (1 << (b - 1)) ^ (1 << b);
                    q[(i, j)] += bond_rate;
                }
            }
            q[(i, i ^ 1)] += flip_rate(n, c.get(1), reservoirs.alpha);
            q[(i, i ^ (1 << (n - 2)))] += flip_rate(n, c.get(n - 1), reservoirs.beta);
            let out: f64 = (0..states).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
            q[(i, i)] = -out;
        }
        // πQ = 0 with one balance equation replaced by normalisation.
        let mut a = q.transpose();
        let last = states - 1;
        for j in 0..states {
            a[(last, j)] = 1.0;
        }
        let mut rhs = DVector::zeros(states);
        rhs[last] = 1.0;
        let stationary = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular stationary system".into()))?;
        Ok(Self { n, reservoirs, generator: q, stationary })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reservoirs(&self) -> Reservoirs {
        self.reservoirs
    }

    pub fn states(&self) -> usize {
        self.generator.nrows()
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn stationary(&self) -> &DVector<f64> {
        &self.stationary
    }

    pub fn configuration(&self, state: usize) -> Configuration {
        Configuration::from_index(self.n, state).expect("state in range")
    }

    /// Law of `η_t` started from `initial`, via `exp(t Qᵀ)`.
    pub fn law_at(&self, initial: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(initial.clone());
        }
        let propagator = (self.generator.transpose() * t).exp();
        Ok(propagator * initial)
    }

    /// Independent Bernoulli sites with the given means (sites `1..=n−1`).
    pub fn product_law(&self, marginals: &[f64]) -> Result<DVector<f64>> {
        if marginals.len() != self.n - 1 {
            return Err(Error::Shape(format!("{} marginals for n = {}", marginals.len(), self.n)));
        }
        Ok(DVector::from_iterator(
            self.states(),
            (0..self.states()).map(|i| {
                marginals
                    .iter()
                    .enumerate()
                    .map(|(b, &p)| if (i >> b) & 1 == 1 { p } else { 1.0 - p })
                    .product::<f64>()
            }),
        ))
    }

    pub fn point_mass(&self, config: &Configuration) -> DVector<f64> {
        let mut v = DVector::zeros(self.states());
        v[config.index()] = 1.0;
        v
    }

    pub fn expectation(&self, law: &DVector<f64>, f: impl Fn(&Configuration) -> f64) -> f64 {
        (0..self.states()).map(|i| law[i] * f(&self.configuration(i))).sum()
    }

    /// `E[η(x)]` for `x = 1..=n−1`.
    pub fn marginals(&self, law: &DVector<f64>) -> Vec<f64> {
        (1..self.n)
            .map(|x| (0..self.states()).filter(|i| (i >> (x - 1)) & 1 == 1).map(|i| law[i]).sum())
            .collect()
    }

    /// `E[η(x)η(y)] − E[η(x)]E[η(y)]` for `x < y`, in triangle order.
    pub fn pair_covariances(&self, law: &DVector<f64>) -> Vec<f64> {
        let m = self.marginals(law);
        let mut out = vec![0.0; triangle_len(self.n)];
        for x in 1..self.n {
            for y in x + 1..self.n {
                let mask = (1 << (x - 1)) | (1 << (y - 1));
                let joint: f64 = (0..self.states()).filter(|i| i & mask == mask).map(|i| law[i]).sum();
                out[triangle_index(self.n, x, y)] = joint - m[x - 1] * m[y - 1];
            }
        }
        out
    }

    /// `(Q f)(η)` for a function given by its values on states.
    pub fn apply_generator(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.generator * f
    }

    /// Total-variation distance between a law and empirical state counts.
    pub fn total_variation(&self, law: &DVector<f64>, counts: &[u64]) -> f64 {
        let m: u64 = counts.iter().sum();
        0.5 * (0..self.states()).map(|i| (law[i] - counts[i] as f64 / m as f64).abs()).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(a: f64, b: f64) -> Reservoirs {
        Reservoirs::new(a, b).unwrap()
    }

    #[test]
    fn refuses_large_lattices() {
        assert!(matches!(exact_chain(13, res(0.5, 0.5)), Err(Error::TooLarge { n: 13, max: 12 })));
    }

    #[test]
    fn generator_rows_sum_to_zero() {
        let chain = exact_chain(5, res(0.3, 0.8)).unwrap();
        for i in 0..chain.states() {
            let s: f64 = chain.generator().row(i).iter().sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn equilibrium_is_bernoulli_product() {
        let chain = exact_chain(6, res(0.35, 0.35)).unwrap();
        let product = chain.product_law(&[0.35; 5]).unwrap();
        assert!((chain.stationary() - product).amax() < 1e-12);
    }

    #[test]
    fn stationary_marginals_are_linear() {
        let chain = exact_chain(4, res(0.2, 0.7)).unwrap();
        let m = chain.marginals(chain.stationary());
        for (got, want) in m.iter().zip([0.40, 0.45, 0.50]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn transient_law_relaxes_to_stationary() {
        let chain = exact_chain(4, res(0.1, 0.9)).unwrap();
        let start = chain.point_mass(&Configuration::empty(4).unwrap());
        let late = chain.law_at(&start, 20.0).unwrap();
        assert!((late - chain.stationary()).amax() < 1e-10);
        let early = chain.law_at(&start, 0.1).unwrap();
        assert!((early.sum() - 1.0).abs() < 1e-12);
        assert!(early.iter().all(|&p| p > -1e-14));
    }

    #[test]
    fn stationary_correlations_are_negative_out_of_equilibrium() {
        let chain = exact_chain(6, res(0.1, 0.9)).unwrap();
        let phi = chain.pair_covariances(chain.stationary());
        assert!(phi.iter().all(|&v| v < 0.0));
        let flat = exact_chain(6, res(0.4, 0.4)).unwrap();
        assert!(flat.pair_covariances(flat.stationary()).iter().all(|v| v.abs() < 1e-12));
    }
}
