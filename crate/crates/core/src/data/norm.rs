use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndmath::Scalar;

/// Raw-unit range mapped onto `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRange {
    pub min: f64,
    pub max: f64,
}

impl NormRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::DegenerateRange { min, max });
        }
        Ok(Self { min, max })
    }

    pub fn of<'a>(values: impl IntoIterator<Item = &'a f64>) -> Result<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut any = false;
        for &v in values {
            lo = lo.min(v);
            hi = hi.max(v);
            any = true;
        }
        if !any {
            return Err(Error::EmptyInput("cannot normalize an empty series".into()));
        }
        Self::new(lo, hi)
    }

    pub fn apply<T: Scalar>(&self, x: f64) -> T {
        T::lit((x - self.min) / (self.max - self.min))
    }

    pub fn invert<T: Scalar>(&self, x: T) -> f64 {
        x.to_f64_lossy() * (self.max - self.min) + self.min
    }
}

/// Channel name → normalization range.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub channels: BTreeMap<String, NormRange>,
}

impl NormRecord {
    pub fn single(channel: &str, range: NormRange) -> Self {
        let mut channels = BTreeMap::new();
        channels.insert(channel.to_string(), range);
        Self { channels }
    }

    pub fn get(&self, channel: &str) -> Option<NormRange> {
        self.channels.get(channel).copied()
    }
}

/// Min-max scales a series into `[0, 1]`.
pub fn normalize<T: Scalar>(series: &[f64]) -> Result<(Vec<T>, NormRange)> {
    let r = NormRange::of(series)?;
    Ok((series.iter().map(|&x| r.apply(x)).collect(), r))
}

/// Min-max scales a set of windows with one shared range.
pub fn normalize_windows<T: Scalar>(windows: &[Vec<f64>]) -> Result<(Vec<Vec<T>>, NormRange)> {
    let r = NormRange::of(windows.iter().flatten())?;
    let out = windows
        .iter()
        .map(|w| w.iter().map(|&x| r.apply(x)).collect())
        .collect();
    Ok((out, r))
}
