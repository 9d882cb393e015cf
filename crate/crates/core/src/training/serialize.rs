//! Model file layout (all integers little-endian):
//!
//! ```text
//! "LSNT"            4 bytes magic
//! version           u16
//! header length     u32
//! header            canonical JSON: config, encoder, threshold, tensor manifest
//! payload           f64 values of every manifest tensor, in manifest order
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::FeatureEncoder;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelParams, Weights};
use crate::numeric::Matrix;

use super::TrainedModel;

pub const MAGIC: &[u8; 4] = b"LSNT";
pub const FORMAT_VERSION: u16 = 1;
const POSITIONAL: &str = "positional";

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: [usize; 2],
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    encoder: FeatureEncoder,
    threshold: f64,
    tensors: Vec<TensorEntry>,
}

fn manifest(params: &ModelParams) -> Vec<(String, &Matrix)> {
    let mut out = params.weights.named();
    out.push((POSITIONAL.to_string(), &params.positional));
    out
}

pub fn to_bytes(model: &TrainedModel) -> Result<Vec<u8>> {
    let tensors = manifest(&model.params);
    let header = Header {
        config: model.config.clone(),
        encoder: model.encoder.clone(),
        threshold: model.threshold,
        tensors: tensors
            .iter()
            .map(|(name, m)| TensorEntry {
                name: name.clone(),
                shape: [m.rows(), m.cols()],
            })
            .collect(),
    };
    let header = serde_json::to_vec(&header)?;
    let header_len =
        u32::try_from(header.len()).map_err(|_| Error::Format("header exceeds 4 GiB".into()))?;
    let payload_len: usize = tensors.iter().map(|(_, m)| m.len() * 8).sum();

    let mut out = Vec::with_capacity(10 + header.len() + payload_len);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(&header);
    for (_, m) in &tensors {
        for v in m.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<TrainedModel> {
    if bytes.len() < 4 {
        return Err(Error::Format(format!(
            "truncated file: {} bytes, expected magic {:?}",
            bytes.len(),
            "LSNT"
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[..4]),
            "LSNT"
        )));
    }
    if bytes.len() < 10 {
        return Err(Error::Format("truncated file: incomplete preamble".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let header_len = u32::from_le_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]) as usize;
    let header_end = 10usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| Error::Format("truncated file: header cut short".into()))?;
    let header: Header = serde_json::from_slice(&bytes[10..header_end])
        .map_err(|e| Error::Format(format!("unreadable header: {e}")))?;

    header.config.validate()?;
    if header.encoder.dim() != header.config.input_dim {
        return Err(Error::Config(format!(
            "encoder produces {} features but config input_dim is {}",
            header.encoder.dim(),
            header.config.input_dim
        )));
    }

    let expected_weights = Weights::zeros(&header.config);
    let expected: Vec<(String, (usize, usize))> = expected_weights
        .named()
        .into_iter()
        .map(|(n, m)| (n, m.shape()))
        .chain(std::iter::once((
            POSITIONAL.to_string(),
            (header.config.window, header.config.latent_dim),
        )))
        .collect();
    if header.tensors.len() != expected.len() {
        return Err(Error::Format(format!(
            "manifest lists {} tensors, config implies {}",
            header.tensors.len(),
            expected.len()
        )));
    }
    for (entry, (name, shape)) in header.tensors.iter().zip(&expected) {
        if &entry.name != name || (entry.shape[0], entry.shape[1]) != *shape {
            return Err(Error::Format(format!(
                "manifest entry {} {:?} does not match expected {} {:?}",
                entry.name, entry.shape, name, shape
            )));
        }
    }

    let payload = &bytes[header_end..];
    let needed: usize = expected.iter().map(|(_, (r, c))| r * c * 8).sum();
    if payload.len() < needed {
        return Err(Error::Format(format!(
            "truncated file: payload has {} bytes, expected {needed}",
            payload.len()
        )));
    }
    if payload.len() > needed {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            payload.len() - needed
        )));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let mut weights = expected_weights;
    for m in weights.tensors_mut() {
        for v in m.as_mut_slice() {
            *v = values.next().expect("length checked");
        }
    }
    let mut positional = Matrix::zeros(header.config.window, header.config.latent_dim);
    for v in positional.as_mut_slice() {
        *v = values.next().expect("length checked");
    }
    if !weights.tensors().iter().all(|m| m.is_finite()) || !positional.is_finite() {
        return Err(Error::Format("payload contains non-finite values".into()));
    }
    Ok(TrainedModel {
        config: header.config,
        params: ModelParams {
            weights,
            positional,
        },
        encoder: header.encoder,
        threshold: header.threshold,
    })
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
