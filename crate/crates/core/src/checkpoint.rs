//! Binary checkpoint files: the magic `LSNET1`, a version byte, a
//! little-endian `u32` length, a JSON architecture descriptor of that many
//! bytes, then the flat parameters as little-endian `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{psi_catalog, Activation, ArchitectureSpec, Cutoff, NetworkParameters, Psi};

pub const MAGIC: &[u8; 6] = b"LSNET1";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Descriptor {
    input_dim: usize,
    layer_widths: Vec<usize>,
    activation: Activation,
    cutoff: Cutoff,
    psi: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    psi_radius_sq: Option<f64>,
    seed: u64,
}

impl Descriptor {
    fn from_params(params: &NetworkParameters) -> Self {
        let spec = params.spec();
        let psi_radius_sq = match spec.psi {
            Psi::TransmissionCircles { radius_sq } => Some(radius_sq),
            _ => None,
        };
        Descriptor {
            input_dim: spec.input_dim,
            layer_widths: spec.layer_widths.clone(),
            activation: spec.activation,
            cutoff: spec.cutoff,
            psi: spec.psi.token().to_string(),
            psi_radius_sq,
            seed: params.seed(),
        }
    }

    fn spec(&self) -> Result<ArchitectureSpec> {
        let mut psi = psi_catalog(&self.psi)?;
        if let (Psi::TransmissionCircles { radius_sq }, Some(r)) = (&mut psi, self.psi_radius_sq) {
            *radius_sq = r;
        }
        Ok(ArchitectureSpec {
            input_dim: self.input_dim,
            layer_widths: self.layer_widths.clone(),
            activation: self.activation,
            cutoff: self.cutoff,
            psi,
        })
    }
}

/// Serializes parameters to bytes.
pub fn encode(params: &NetworkParameters) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(&Descriptor::from_params(params))
        .map_err(|e| Error::Checkpoint(format!("descriptor: {e}")))?;
    let len = u32::try_from(json.len()).map_err(|_| Error::Checkpoint("descriptor too long".into()))?;
    let mut out = Vec::with_capacity(MAGIC.len() + 5 + json.len() + 8 * params.flat().len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&json);
    for v in params.flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses bytes written by [`encode`].
pub fn decode(bytes: &[u8]) -> Result<NetworkParameters> {
    let header = MAGIC.len() + 5;
    if bytes.len() < header || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("missing LSNET1 magic".into()));
    }
    let version = bytes[MAGIC.len()];
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let len = u32::from_le_bytes(bytes[MAGIC.len() + 1..header].try_into().expect("4 bytes")) as usize;
    let json = bytes.get(header..header + len).ok_or_else(|| Error::Checkpoint("truncated descriptor".into()))?;
    let desc: Descriptor = serde_json::from_slice(json).map_err(|e| Error::Checkpoint(format!("descriptor: {e}")))?;
    let spec = desc.spec()?;
    let body = &bytes[header + len..];
    let expected = 8 * spec.num_params();
    if body.len() != expected {
        return Err(Error::Checkpoint(format!("parameter block has {} bytes, expected {expected}", body.len())));
    }
    let flat = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    NetworkParameters::from_flat(spec, desc.seed, flat)
}

/// Writes a checkpoint atomically (temporary file, then rename).
pub fn save_checkpoint(path: &Path, params: &NetworkParameters) -> Result<()> {
    let bytes = encode(params)?;
    let tmp = path.with_extension("lsnet.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<NetworkParameters> {
    decode(&fs::read(path)?)
}
