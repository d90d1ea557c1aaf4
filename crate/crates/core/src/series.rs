//! Uniformly sampled time series, the carrier type for every signal in the
//! crate.

use crate::error::{Error, Result};

/// A uniformly sampled real signal. Sample `i` occurs at `t0 + i * dt`.
///
/// Values may contain NaN holes between ingestion and repair; every
/// downstream numeric stage requires finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::parameter("dt", format!("must be positive, got {dt}")));
        }
        if values.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "series needs at least 2 samples, got {}",
                values.len()
            )));
        }
        Ok(Self { t0, dt, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sampling rate in Hz.
    pub fn fs(&self) -> f64 {
        1.0 / self.dt
    }

    /// Time of sample `i`.
    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Total record length in seconds (first to last sample).
    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time_at(i)).collect()
    }

    /// True when every sample is finite.
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Same time axis, new values. Panics if the length differs.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.len(), "value length must match series");
        Self {
            t0: self.t0,
            dt: self.dt,
            values,
        }
    }

    /// True when `other` shares t0, dt and length within tight tolerance.
    pub fn same_axis(&self, other: &TimeSeries) -> bool {
        self.len() == other.len()
            && (self.t0 - other.t0).abs() <= 1e-9 * self.dt
            && (self.dt - other.dt).abs() <= 1e-9 * self.dt
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Population variance about the sample mean.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.len() as f64
    }

    pub fn rms(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.len() as f64).sqrt()
    }
}

/// A [`TimeSeries`] whose values are angles in radians.
///
/// After unwrapping, consecutive differences lie in (-pi, pi].
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSeries(pub TimeSeries);

impl AngleSeries {
    pub fn new(series: TimeSeries) -> Self {
        AngleSeries(series)
    }

    pub fn series(&self) -> &TimeSeries {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0.values
    }
}
