//! Online Gaussian naive-Bayes classifier over compressed features.
//!
//! Each feature has a Gaussian likelihood per class. The score is the summed
//! log-likelihood ratio under a uniform class prior, and parameters follow an
//! exponential moving average of per-batch population estimates.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

pub const DEFAULT_LAMBDA: f64 = 0.85;
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ClassifierError {
    #[error("{0} sample set is empty")]
    EmptySamples(&'static str),
    #[error("feature vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Population mean and standard deviation of feature `i` over `samples`,
/// with the deviation floored at `sigma_floor`.
pub fn batch_estimate<V: AsRef<[f64]>>(
    samples: &[V],
    i: usize,
    sigma_floor: f64,
) -> Result<(f64, f64), ClassifierError> {
    if samples.is_empty() {
        return Err(ClassifierError::EmptySamples("feature"));
    }
    let count = samples.len() as f64;
    let mean = samples.iter().map(|v| v.as_ref()[i]).sum::<f64>() / count;
    let var = samples
        .iter()
        .map(|v| {
            let d = v.as_ref()[i] - mean;
            d * d
        })
        .sum::<f64>()
        / count;
    Ok((mean, libm::sqrt(var).max(sigma_floor)))
}

fn check_lengths<V: AsRef<[f64]>>(samples: &[V], n: usize) -> Result<(), ClassifierError> {
    match samples.iter().find(|v| v.as_ref().len() != n) {
        Some(v) => Err(ClassifierError::LengthMismatch {
            expected: n,
            got: v.as_ref().len(),
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    pub mu1: Vec<f64>,
    pub sigma1: Vec<f64>,
    pub mu0: Vec<f64>,
    pub sigma0: Vec<f64>,
    pub lambda: f64,
    pub sigma_floor: f64,
}

impl ClassifierParams {
    /// Parameters set directly to the batch estimates of both classes.
    pub fn init<V: AsRef<[f64]>>(
        positives: &[V],
        negatives: &[V],
        lambda: f64,
        sigma_floor: f64,
    ) -> Result<Self, ClassifierError> {
        let first = positives.first().ok_or(ClassifierError::EmptySamples("positive"))?;
        if negatives.is_empty() {
            return Err(ClassifierError::EmptySamples("negative"));
        }
        let n = first.as_ref().len();
        check_lengths(positives, n)?;
        check_lengths(negatives, n)?;
        let mut p = Self {
            mu1: Vec::with_capacity(n),
            sigma1: Vec::with_capacity(n),
            mu0: Vec::with_capacity(n),
            sigma0: Vec::with_capacity(n),
            lambda,
            sigma_floor,
        };
        for i in 0..n {
            let (m1, s1) = batch_estimate(positives, i, sigma_floor)?;
            let (m0, s0) = batch_estimate(negatives, i, sigma_floor)?;
            p.mu1.push(m1);
            p.sigma1.push(s1);
            p.mu0.push(m0);
            p.sigma0.push(s0);
        }
        Ok(p)
    }

    /// Parameters whose two classes are identical, which score every vector 0.
    pub fn uninformative(n: usize, lambda: f64, sigma_floor: f64) -> Self {
        Self {
            mu1: alloc::vec![0.0; n],
            sigma1: alloc::vec![1.0; n],
            mu0: alloc::vec![0.0; n],
            sigma0: alloc::vec![1.0; n],
            lambda,
            sigma_floor,
        }
    }

    pub fn n(&self) -> usize {
        self.mu1.len()
    }

    /// Log-likelihood ratio `Σ log p(v_i | y=1) − log p(v_i | y=0)`.
    ///
    /// # Panics
    /// If `v` does not have one entry per feature.
    pub fn score(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.n(), "feature vector length mismatch");
        let mut h = 0.0;
        for (i, &x) in v.iter().enumerate() {
            h += log_gaussian(x, self.mu1[i], self.sigma1[i]) - log_gaussian(x, self.mu0[i], self.sigma0[i]);
        }
        h
    }

    /// Blends fresh batch estimates of both classes into the parameters with
    /// learning factor `lambda`.
    pub fn update<V: AsRef<[f64]>>(&mut self, positives: &[V], negatives: &[V]) -> Result<(), ClassifierError> {
        if positives.is_empty() {
            return Err(ClassifierError::EmptySamples("positive"));
        }
        if negatives.is_empty() {
            return Err(ClassifierError::EmptySamples("negative"));
        }
        let n = self.n();
        check_lengths(positives, n)?;
        check_lengths(negatives, n)?;
        let (lambda, floor) = (self.lambda, self.sigma_floor);
        for i in 0..n {
            let (m1, s1) = batch_estimate(positives, i, floor)?;
            blend(&mut self.mu1[i], &mut self.sigma1[i], m1, s1, lambda, floor);
            let (m0, s0) = batch_estimate(negatives, i, floor)?;
            blend(&mut self.mu0[i], &mut self.sigma0[i], m0, s0, lambda, floor);
        }
        Ok(())
    }

    /// Text table `feature,mu1,sigma1,mu0,sigma0`, one row per feature.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# lambda={} sigma_floor={}\nfeature,mu1,sigma1,mu0,sigma0\n",
            self.lambda, self.sigma_floor
        );
        for i in 0..self.n() {
            let _ = writeln!(
                out,
                "{i},{},{},{},{}",
                self.mu1[i], self.sigma1[i], self.mu0[i], self.sigma0[i]
            );
        }
        out
    }
}

fn blend(mu: &mut f64, sigma: &mut f64, batch_mu: f64, batch_sigma: f64, lambda: f64, floor: f64) {
    let d = *mu - batch_mu;
    let var = lambda * *sigma * *sigma + (1.0 - lambda) * batch_sigma * batch_sigma + lambda * (1.0 - lambda) * d * d;
    *sigma = libm::sqrt(var).max(floor);
    *mu = lambda * *mu + (1.0 - lambda) * batch_mu;
}

// The shared -½·ln 2π term cancels in the ratio and is omitted.
#[inline]
fn log_gaussian(v: f64, mu: f64, sigma: f64) -> f64 {
    let z = (v - mu) / sigma;
    -libm::log(sigma) - 0.5 * z * z
}
