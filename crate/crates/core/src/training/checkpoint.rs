//! Versioned binary container for model parameters.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes  "SGENCKPT"
//! version    u32
//! meta_len   u64, then meta_len bytes of UTF-8 JSON (CheckpointMeta)
//! count      u32
//! count × {
//!   name_len u32, name bytes (UTF-8)
//!   rank     u32, rank × u64 extents
//!   payload  Π extents × f64
//! }
//! ```

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::NormRecord;
use crate::discriminator::{DiscriminatorConfig, DiscriminatorModel};
use crate::error::{Error, Result};
use crate::generator::{GeneratorConfig, GeneratorModel};
use crate::ndmath::{Scalar, Tensor};
use crate::nn::Params;
use crate::training::{RoundMetrics, TrainConfig};

pub const MAGIC: &[u8; 8] = b"SGENCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Generator,
    Discriminator,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricHistory {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gen_nll: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub d_accuracy: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rounds: Vec<RoundMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discriminator: Option<DiscriminatorConfig>,
    pub channel: String,
    pub sample_rate_hz: f64,
    pub normalization: NormRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub history: MetricHistory,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub meta: CheckpointMeta,
    pub tensors: Vec<(String, Tensor<f64>)>,
}

fn export<T: Scalar>(m: &impl Params<T>) -> Vec<(String, Tensor<f64>)> {
    m.names()
        .into_iter()
        .zip(m.tensors())
        .map(|(n, t)| {
            let data = t.data().iter().map(|v| v.to_f64_lossy()).collect();
            (n, Tensor::new(t.shape().to_vec(), data).expect("same shape"))
        })
        .collect()
}

fn import<T: Scalar>(m: &mut impl Params<T>, tensors: &[(String, Tensor<f64>)]) -> Result<()> {
    let names = m.names();
    if names.len() != tensors.len() {
        return Err(Error::Config(format!(
            "checkpoint holds {} tensors, model expects {}",
            tensors.len(),
            names.len()
        )));
    }
    for ((want, dst), (name, src)) in names.iter().zip(m.tensors_mut()).zip(tensors) {
        if want != name || dst.shape() != src.shape() {
            return Err(Error::Config(format!(
                "checkpoint tensor {name} {:?} does not match model tensor {want} {:?}",
                src.shape(),
                dst.shape()
            )));
        }
        for (d, &s) in dst.data_mut().iter_mut().zip(src.data()) {
            *d = T::lit(s);
        }
    }
    Ok(())
}

impl Checkpoint {
    pub fn from_generator<T: Scalar>(m: &GeneratorModel<T>, mut meta: CheckpointMeta) -> Self {
        meta.kind = ModelKind::Generator;
        meta.generator = Some(m.config.clone());
        Self {
            version: FORMAT_VERSION,
            meta,
            tensors: export(m),
        }
    }

    pub fn from_discriminator<T: Scalar>(m: &DiscriminatorModel<T>, mut meta: CheckpointMeta) -> Self {
        meta.kind = ModelKind::Discriminator;
        meta.discriminator = Some(m.config.clone());
        Self {
            version: FORMAT_VERSION,
            meta,
            tensors: export(m),
        }
    }

    pub fn to_generator<T: Scalar>(&self) -> Result<GeneratorModel<T>> {
        let cfg = match (&self.meta.kind, &self.meta.generator) {
            (ModelKind::Generator, Some(c)) => c.clone(),
            _ => return Err(Error::Config("checkpoint does not hold a generator".into())),
        };
        let mut m = GeneratorModel::zeros(cfg)?;
        import(&mut m, &self.tensors)?;
        Ok(m)
    }

    pub fn to_discriminator<T: Scalar>(&self) -> Result<DiscriminatorModel<T>> {
        let cfg = match (&self.meta.kind, &self.meta.discriminator) {
            (ModelKind::Discriminator, Some(c)) => c.clone(),
            _ => return Err(Error::Config("checkpoint does not hold a discriminator".into())),
        };
        let mut m = DiscriminatorModel::zeros(cfg)?;
        import(&mut m, &self.tensors)?;
        Ok(m)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        let meta = serde_json::to_vec(&self.meta).expect("metadata serializes");
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8, "magic")? != MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: "bad magic, not a checkpoint".into(),
            });
        }
        let version = r.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let meta_len = r.u64("metadata length")? as usize;
        let meta_at = r.pos;
        let meta_bytes = r.take(meta_len, "metadata")?;
        let meta: CheckpointMeta = serde_json::from_slice(meta_bytes).map_err(|e| Error::Format {
            offset: meta_at as u64,
            message: format!("metadata: {e}"),
        })?;
        let count = r.u32("tensor count")?;
        let mut tensors = Vec::new();
        for _ in 0..count {
            let name_at = r.pos;
            let name_len = r.u32("name length")? as usize;
            let name = String::from_utf8(r.take(name_len, "name")?.to_vec()).map_err(|_| {
                Error::Format {
                    offset: name_at as u64,
                    message: "tensor name is not UTF-8".into(),
                }
            })?;
            let rank = r.u32("rank")? as usize;
            let shape_at = r.pos;
            let shape = (0..rank)
                .map(|_| r.u64("extent").map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let n = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .filter(|&n| n.checked_mul(8).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(|| Error::Format {
                    offset: shape_at as u64,
                    message: format!("tensor {name} extents {shape:?} exceed the file"),
                })?;
            let data = r
                .take(n * 8, "payload")?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            let t = Tensor::new(shape, data).map_err(|e| Error::Format {
                offset: shape_at as u64,
                message: e.to_string(),
            })?;
            tensors.push((name, t));
        }
        if r.remaining() != 0 {
            return Err(Error::Format {
                offset: r.pos as u64,
                message: format!("{} trailing bytes", r.remaining()),
            });
        }
        Ok(Self {
            version,
            meta,
            tensors,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Format {
                offset: self.pos as u64,
                message: format!("truncated while reading {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

/// Writes to a sibling temporary file and renames it into place, so a
/// failed save never leaves a partial checkpoint at `path`.
pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("tmp-ckpt");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&ckpt.to_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&fs::read(path)?)
}
