//! Streaming moment accumulators with an order-stable merge.

/// Running mean and central moments up to order four.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut m = Self::new();
        values.iter().for_each(|&v| m.push(v));
        m
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    /// Combines two accumulators as if their samples had been pushed in order.
    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3
            + other.m3
            + d2 * delta * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        self.mean += delta * nb / n;
        self.count += other.count;
        self.m2 = m2;
        self.m3 = m3;
        self.m4 = m4;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    /// Standard error of the sample variance, from the fourth central moment.
    pub fn variance_stderr(&self) -> f64 {
        if self.count < 4 {
            return f64::INFINITY;
        }
        let n = self.count as f64;
        let mu2 = self.m2 / n;
        let mu4 = self.m4 / n;
        ((mu4 - mu2 * mu2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
    }

    pub fn skewness(&self) -> f64 {
        if self.m2 == 0.0 {
            return 0.0;
        }
        let n = self.count as f64;
        n.sqrt() * self.m3 / self.m2.powf(1.5)
    }

    pub fn excess_kurtosis(&self) -> f64 {
        if self.m2 == 0.0 {
            return 0.0;
        }
        let n = self.count as f64;
        n * self.m4 / (self.m2 * self.m2) - 3.0
    }
}

/// Running covariance of paired samples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoMoments {
    count: u64,
    mean_x: f64,
    mean_y: f64,
    c_xy: f64,
    m2_x: f64,
    m2_y: f64,
}

impl CoMoments {
    pub fn push(&mut self, x: f64, y: f64) {
        self.count += 1;
        let n = self.count as f64;
        let dx = x - self.mean_x;
        self.mean_x += dx / n;
        let dy = y - self.mean_y;
        self.mean_y += dy / n;
        self.c_xy += dx * (y - self.mean_y);
        self.m2_x += dx * (x - self.mean_x);
        self.m2_y += dy * (y - self.mean_y);
    }

    /// Combines two disjoint sample sets.
    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let dx = other.mean_x - self.mean_x;
        let dy = other.mean_y - self.mean_y;
        self.c_xy += other.c_xy + dx * dy * na * nb / n;
        self.m2_x += other.m2_x + dx * dx * na * nb / n;
        self.m2_y += other.m2_y + dy * dy * na * nb / n;
        self.mean_x += dx * nb / n;
        self.mean_y += dy * nb / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn covariance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.c_xy / (self.count - 1) as f64
        }
    }

    /// Least-squares slope of `y` on `x` and its standard error.
    pub fn slope(&self) -> (f64, f64) {
        let n = self.count as f64;
        if self.count < 3 || self.m2_x == 0.0 {
            return (f64::NAN, f64::INFINITY);
        }
        let b = self.c_xy / self.m2_x;
        let residual = (self.m2_y - b * self.c_xy).max(0.0);
        let se = (residual / (n - 2.0) / self.m2_x).sqrt();
        (b, se)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_pass(v: &[f64]) -> (f64, f64, f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let c = |p: i32| v.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / n;
        let var = c(2) * n / (n - 1.0);
        (mean, var, c(3) / c(2).powf(1.5), c(4) / (c(2) * c(2)) - 3.0)
    }

    #[test]
    fn matches_two_pass_formulas() {
        let v = [0.3, 1.7, -2.0, 4.5, 0.0, 0.25, 9.0];
        let m = Moments::from_slice(&v);
        let (mean, var, skew, kurt) = two_pass(&v);
        assert!((m.mean() - mean).abs() < 1e-14);
        assert!((m.variance() - var).abs() < 1e-12);
        assert!((m.skewness() - skew).abs() < 1e-12);
        assert!((m.excess_kurtosis() - kurt).abs() < 1e-12);
        assert!((m.stderr() - (var / 7.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn regression_slope() {
        let mut c = CoMoments::default();
        for i in 0..10 {
            let x = i as f64;
            c.push(x, 2.0 * x + 1.0);
        }
        let (b, se) = c.slope();
        assert!((b - 2.0).abs() < 1e-12);
        assert!(se < 1e-6);
        assert!((c.covariance() - 2.0 * 55.0 / 6.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn merge_equals_sequential(
            a in prop::collection::vec(-10.0f64..10.0, 0..40),
            b in prop::collection::vec(-10.0f64..10.0, 0..40),
        ) {
            let mut left = Moments::from_slice(&a);
            left.merge(&Moments::from_slice(&b));
            let all: Vec<f64> = a.iter().chain(&b).copied().collect();
            let seq = Moments::from_slice(&all);
            prop_assert_eq!(left.count(), seq.count());
            prop_assert!((left.mean() - seq.mean()).abs() < 1e-10);
            prop_assert!((left.variance() - seq.variance()).abs() < 1e-8);
            prop_assert!((left.m3 - seq.m3).abs() < 1e-6 * (1.0 + seq.m3.abs()));
            prop_assert!((left.m4 - seq.m4).abs() < 1e-6 * (1.0 + seq.m4.abs()));
        }
    }

    proptest! {
        #[test]
        fn co_moments_merge_equals_sequential(
            pairs in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 2..60),
            split in 0usize..60,
        ) {
            let k = split.min(pairs.len());
            let mut whole = CoMoments::default();
            pairs.iter().for_each(|&(x, y)| whole.push(x, y));
            let mut a = CoMoments::default();
            let mut b = CoMoments::default();
            pairs[..k].iter().for_each(|&(x, y)| a.push(x, y));
            pairs[k..].iter().for_each(|&(x, y)| b.push(x, y));
            a.merge(&b);
            prop_assert_eq!(a.count(), whole.count());
            prop_assert!((a.covariance() - whole.covariance()).abs() < 1e-9);
        }
    }
}
