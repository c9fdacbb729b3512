use std::path::Path;

use rand::Rng;

use super::{exact_chain, Configuration, MAX_EXACT_N};
use crate::error::{Error, Result};
use crate::hydro::{stationary_profile_discrete, BoundaryExtension, Reservoirs};

/// How initial configurations are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// Bernoulli product with the same density on every site.
    Constant(f64),
    /// Bernoulli product with marginal `γ(x/n)`, where `γ` is given by
    /// samples on a uniform grid of `[0, 1]` and interpolated linearly.
    Profile(Vec<f64>),
    /// Bernoulli product with marginal `intercept + slope · x/n`.
    Linear { intercept: f64, slope: f64 },
    /// Bernoulli product with the discrete stationary profile as marginals.
    /// This is not the stationary measure when `α ≠ β`.
    StationaryDiscrete,
    /// Exact draw from the stationary vector of the enumerated chain.
    ExactStationary,
}

impl InitSpec {
    /// Parses `constant:ρ`, `bernoulli-profile:<file>`, `linear:a,b`,
    /// `stationary-discrete` or `exact-stationary`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (head, arg) = match spec.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (spec.trim(), None),
        };
        let number = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Configuration(format!("'{s}' is not a number in init spec '{spec}'")))
        };
        let parsed = match (head, arg) {
            ("constant", Some(a)) => InitSpec::Constant(number(a)?),
            ("bernoulli-profile", Some(path)) => InitSpec::Profile(read_profile(Path::new(path))?),
            ("linear", Some(a)) => {
                let (i, s) = a
                    .split_once(',')
                    .ok_or_else(|| Error::Configuration(format!("linear init needs 'a,b', got '{a}'")))?;
                InitSpec::Linear { intercept: number(i)?, slope: number(s)? }
            }
            ("stationary-discrete", None) => InitSpec::StationaryDiscrete,
            ("exact-stationary", None) => InitSpec::ExactStationary,
            _ => return Err(Error::Configuration(format!("unknown init spec '{spec}'"))),
        };
        parsed.validate()?;
        Ok(parsed)
    }

    fn validate(&self) -> Result<()> {
        let check = |v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Configuration(format!("initial density {v} is outside [0, 1]")))
            }
        };
        match self {
            InitSpec::Constant(r) => check(*r),
            InitSpec::Profile(values) => {
                if values.len() < 2 {
                    return Err(Error::Configuration("profile needs at least two samples".into()));
                }
                values.iter().try_for_each(|&v| check(v))
            }
            InitSpec::Linear { intercept, slope } => {
                check(*intercept)?;
                check(intercept + slope)
            }
            InitSpec::StationaryDiscrete | InitSpec::ExactStationary => Ok(()),
        }
    }

    /// Density profile `γ(u)` of the product-measure variants; `None` for
    /// laws that are not given by a profile.
    pub fn density_at(&self, u: f64) -> Option<f64> {
        match self {
            InitSpec::Constant(r) => Some(*r),
            InitSpec::Linear { intercept, slope } => Some(intercept + slope * u),
            InitSpec::Profile(values) => {
                let m = values.len();
                let pos = u.clamp(0.0, 1.0) * (m - 1) as f64;
                let i = (pos.floor() as usize).min(m - 2);
                let frac = pos - i as f64;
                Some(values[i] * (1.0 - frac) + values[i + 1] * frac)
            }
            _ => None,
        }
    }

    pub fn resolve(&self, n: usize, reservoirs: Reservoirs) -> Result<InitialLaw> {
        self.validate()?;
        match self {
            InitSpec::StationaryDiscrete => {
                let p = stationary_profile_discrete(n, reservoirs, BoundaryExtension::Reservoir)?;
                Ok(InitialLaw::Product(p.interior().to_vec()))
            }
            InitSpec::ExactStationary => {
                if n > MAX_EXACT_N {
                    return Err(Error::TooLarge { n, max: MAX_EXACT_N });
                }
                let chain = exact_chain(n, reservoirs)?;
                let pi = chain.stationary();
                let mut cdf = Vec::with_capacity(pi.len());
                let mut acc = 0.0;
                for &p in pi.iter() {
                    acc += p.max(0.0);
                    cdf.push(acc);
                }
                Ok(InitialLaw::Enumerated { n, cdf, marginals: chain.marginals(pi) })
            }
            _ => {
                let values: Vec<f64> = (1..n).map(|x| self.density_at(x as f64 / n as f64).unwrap()).collect();
                if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::Configuration(format!("initial density {v} is outside [0, 1]")));
                }
                Ok(InitialLaw::Product(values))
            }
        }
    }
}

fn read_profile(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Configuration(format!("cannot read profile {}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| Error::Configuration(format!("'{tok}' in {} is not a number", path.display())))
        })
        .collect()
}

/// A resolved initial law on a fixed lattice.
#[derive(Debug, Clone)]
pub enum InitialLaw {
    /// Independent Bernoulli sites with these means (sites `1..=n−1`).
    Product(Vec<f64>),
    Enumerated { n: usize, cdf: Vec<f64>, marginals: Vec<f64> },
}

impl InitialLaw {
    pub fn n(&self) -> usize {
        match self {
            InitialLaw::Product(p) => p.len() + 1,
            InitialLaw::Enumerated { n, .. } => *n,
        }
    }

    pub fn marginals(&self) -> &[f64] {
        match self {
            InitialLaw::Product(p) => p,
            InitialLaw::Enumerated { marginals, .. } => marginals,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let n = self.n();
        match self {
            InitialLaw::Product(p) => {
                let sites: Vec<u8> = p.iter().map(|&q| u8::from(rng.random::<f64>() < q)).collect();
                Configuration::from_sites(n, &sites).expect("valid shape")
            }
            InitialLaw::Enumerated { cdf, .. } => {
                let u = rng.random::<f64>() * cdf[cdf.len() - 1];
                let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                Configuration::from_index(n, idx).expect("valid shape")
            }
        }
    }
}
