pub(crate) use crate::random::bernoulli;

/// Running mean and variance (Welford).
#[derive(Clone, Copy, Debug, Default)]
pub struct MeanAcc {
    count: usize,
    mean: f64,
    m2: f64,
}

impl MeanAcc {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (n - 1 denominator); zero below two samples.
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
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 4.0, 7.0];
        let mut acc = MeanAcc::default();
        xs.iter().for_each(|&x| acc.push(x));
        assert_eq!(acc.mean(), 4.0);
        assert!((acc.variance() - 6.0).abs() < 1e-12);
        assert!((acc.stderr() - (6.0f64 / 4.0).sqrt()).abs() < 1e-12);
    }
}
