use rand::Rng as _;

use crate::data::norm::NormRecord;
use crate::error::{Error, Result};
use crate::ndmath::Scalar;
use crate::rng::Rng;

/// Equal-length normalized windows of one channel.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesBatch<T> {
    pub windows: Vec<Vec<T>>,
    pub channel: String,
    pub sample_rate_hz: f64,
    pub norm: NormRecord,
}

impl<T: Scalar> SeriesBatch<T> {
    pub fn new(
        windows: Vec<Vec<T>>,
        channel: &str,
        sample_rate_hz: f64,
        norm: NormRecord,
    ) -> Result<Self> {
        let len = windows.first().map(Vec::len).unwrap_or(0);
        if len == 0 || windows.iter().any(|w| w.len() != len) {
            return Err(Error::Contract("series batch windows must be non-empty and equal-length".into()));
        }
        Ok(Self {
            windows,
            channel: channel.to_string(),
            sample_rate_hz,
            norm,
        })
    }
}

/// `⌊(len − window) / stride⌋ + 1`, or zero when the window does not fit.
pub fn window_count(len: usize, window_len: usize, stride: usize) -> usize {
    if window_len == 0 || stride == 0 || window_len > len {
        0
    } else {
        (len - window_len) / stride + 1
    }
}

pub fn window_series<T: Copy>(series: &[T], window_len: usize, stride: usize) -> Result<Vec<Vec<T>>> {
    if window_len == 0 || stride == 0 {
        return Err(Error::Config("window length and stride must be ≥ 1".into()));
    }
    if window_len > series.len() {
        return Err(Error::Contract(format!(
            "window of {window_len} exceeds series length {}",
            series.len()
        )));
    }
    Ok((0..window_count(series.len(), window_len, stride))
        .map(|i| series[i * stride..i * stride + window_len].to_vec())
        .collect())
}

/// Source of randomly positioned windows drawn from one or more series.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesPool<T> {
    series: Vec<Vec<T>>,
}

impl<T: Scalar> SeriesPool<T> {
    pub fn new(series: Vec<Vec<T>>) -> Result<Self> {
        if series.iter().all(|s| s.is_empty()) {
            return Err(Error::EmptyInput("series pool has no values".into()));
        }
        Ok(Self { series })
    }

    pub fn series(&self) -> &[Vec<T>] {
        &self.series
    }

    pub fn max_len(&self) -> usize {
        self.series.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `count` windows of `len` values; each picks a series long enough
    /// uniformly, then a uniform start offset.
    pub fn sample_windows(&self, len: usize, count: usize, rng: &mut Rng) -> Result<Vec<Vec<T>>> {
        let eligible: Vec<&Vec<T>> = self.series.iter().filter(|s| s.len() >= len).collect();
        if eligible.is_empty() || len == 0 {
            return Err(Error::Config(format!(
                "no series holds a window of {len} (longest is {})",
                self.max_len()
            )));
        }
        Ok((0..count)
            .map(|_| {
                let s = eligible[rng.random_range(0..eligible.len())];
                let start = rng.random_range(0..=s.len() - len);
                s[start..start + len].to_vec()
            })
            .collect())
    }
}
