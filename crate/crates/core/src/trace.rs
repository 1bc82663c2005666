use crate::error::{Error, Result};

/// Uniformly sampled real signal covering a whole number of periods.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    dt: f64,
    samples: Vec<f64>,
    samples_per_period: usize,
}

impl SignalTrace {
    pub fn new(dt: f64, samples: Vec<f64>, samples_per_period: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(
                "SignalTrace dt",
                format!("must be > 0, got {dt}"),
            ));
        }
        if samples_per_period == 0
            || samples.is_empty()
            || !samples.len().is_multiple_of(samples_per_period)
        {
            return Err(Error::NotWholePeriods {
                len: samples.len(),
                samples_per_period,
            });
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "SignalTrace samples",
                format!("sample {i} is not finite"),
            ));
        }
        Ok(Self {
            dt,
            samples,
            samples_per_period,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn samples_per_period(&self) -> usize {
        self.samples_per_period
    }

    pub fn periods(&self) -> usize {
        self.samples.len() / self.samples_per_period
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Fundamental frequency 1 / (samples_per_period * dt).
    pub fn fundamental(&self) -> f64 {
        1.0 / (self.samples_per_period as f64 * self.dt)
    }

    /// Same metadata, new samples. Length must stay a whole number of periods.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(self.dt, samples, self.samples_per_period)
    }

    /// Multiply every sample by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        self.with_samples(self.samples.iter().map(|v| v * factor).collect())
    }

    /// Coherent average of all periods, returned as a one-period trace.
    pub fn period_average(&self) -> Self {
        let n = self.samples_per_period;
        let mut acc = vec![0.0; n];
        for chunk in self.samples.chunks_exact(n) {
            for (a, v) in acc.iter_mut().zip(chunk) {
                *a += v;
            }
        }
        let p = self.periods() as f64;
        acc.iter_mut().for_each(|a| *a /= p);
        Self {
            dt: self.dt,
            samples: acc,
            samples_per_period: n,
        }
    }
}
