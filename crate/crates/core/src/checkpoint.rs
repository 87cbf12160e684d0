//! Binary model snapshots.
//!
//! Layout: a little-endian `u64` header length, a JSON header describing
//! the configs and tensor table, then every tensor as raw little-endian
//! `f64` in table order. Moving-average tensors are named `ema/<name>`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::jepa::TrainConfig;
use crate::nn::{JepaModel, ModelConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub shape: [usize; 2],
    pub dtype: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub model: ModelConfig,
    pub train: Option<TrainConfig>,
    pub tensors: Vec<TensorEntry>,
}

pub struct Checkpoint {
    pub model: JepaModel,
    pub train: Option<TrainConfig>,
}

pub fn to_bytes(model: &JepaModel, train: Option<&TrainConfig>) -> Result<Vec<u8>> {
    let params = model.params();
    let named = params
        .names()
        .iter()
        .cloned()
        .zip(params.tensors())
        .chain(model.ema_names().iter().map(|n| format!("ema/{n}")).zip(model.ema()));
    let (names, tensors): (Vec<String>, Vec<&Tensor>) = named.unzip();
    let header = CheckpointHeader {
        format_version: FORMAT_VERSION,
        model: model.config.clone(),
        train: train.cloned(),
        tensors: names
            .into_iter()
            .zip(&tensors)
            .map(|(name, t)| TensorEntry {
                name,
                shape: t.shape(),
                dtype: "f64".into(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let payload: usize = tensors.iter().map(|t| t.len() * 8).sum();
    let mut out = Vec::with_capacity(8 + json.len() + payload);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for t in tensors {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    let len_bytes: [u8; 8] = bytes.get(..8).ok_or_else(|| bad("truncated header length"))?.try_into().expect("8 bytes");
    let len = usize::try_from(u64::from_le_bytes(len_bytes)).map_err(|_| bad("header length overflow"))?;
    let json = bytes.get(8..8usize.saturating_add(len)).ok_or_else(|| bad("truncated header"))?;
    let header: CheckpointHeader = serde_json::from_slice(json)?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {}", header.format_version)));
    }
    let mut model = JepaModel::new(header.model.clone(), 0)?;
    let expected: Vec<String> = model
        .params()
        .names()
        .iter()
        .cloned()
        .chain(model.ema_names().iter().map(|n| format!("ema/{n}")))
        .collect();
    if expected.len() != header.tensors.len() {
        return Err(Error::Checkpoint(format!(
            "expected {} tensors, found {}",
            expected.len(),
            header.tensors.len()
        )));
    }
    let mut cursor = 8 + len;
    let mut loaded = Vec::with_capacity(expected.len());
    for (entry, name) in header.tensors.iter().zip(&expected) {
        if &entry.name != name || entry.dtype != "f64" {
            return Err(Error::Checkpoint(format!("unexpected tensor '{}' ({}), wanted '{name}'", entry.name, entry.dtype)));
        }
        let count = entry.shape[0] * entry.shape[1];
        let raw = bytes.get(cursor..cursor + 8 * count).ok_or_else(|| bad("truncated tensor data"))?;
        cursor += 8 * count;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        loaded.push(Tensor::new(entry.shape[0], entry.shape[1], data)?);
    }
    if cursor != bytes.len() {
        return Err(bad("trailing bytes after tensor data"));
    }
    let n_params = model.params().len();
    let mut loaded = loaded.into_iter();
    for (slot, t) in model.params_mut().tensors_mut().iter_mut().zip(loaded.by_ref().take(n_params)) {
        check_shape(slot, &t)?;
        *slot = t;
    }
    for (slot, t) in model.ema_mut().iter_mut().zip(loaded) {
        check_shape(slot, &t)?;
        *slot = t;
    }
    Ok(Checkpoint {
        model,
        train: header.train,
    })
}

fn check_shape(slot: &Tensor, t: &Tensor) -> Result<()> {
    if slot.shape() == t.shape() {
        Ok(())
    } else {
        Err(Error::Checkpoint(format!("tensor shape {:?} does not match {:?}", t.shape(), slot.shape())))
    }
}

pub fn save(model: &JepaModel, train: Option<&TrainConfig>, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(model, train)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let cfg = ModelConfig::new(2, 1, 8, 2, 1, 4);
        let mut model = JepaModel::new(cfg, 3).unwrap();
        model.params_mut().tensors_mut()[0].data_mut()[0] = 0.125;
        let bytes = to_bytes(&model, Some(&TrainConfig::default())).unwrap();
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(back.model.params().tensors(), model.params().tensors());
        assert_eq!(back.model.ema(), model.ema());
        assert_eq!(back.train, Some(TrainConfig::default()));
        assert_eq!(to_bytes(&back.model, back.train.as_ref()).unwrap(), bytes);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let model = JepaModel::new(ModelConfig::new(1, 1, 4, 1, 1, 2), 0).unwrap();
        let bytes = to_bytes(&model, None).unwrap();
        assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(from_bytes(&bytes[..4]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(from_bytes(&extra).is_err());
    }
}
