//! Flat binary checkpoints.
//!
//! ```text
//! "DELV1"                                   5 bytes
//! vocab, embed, latent, max_len, props      5 x u32 little-endian
//! parameters                                f64 little-endian, Layout order
//! ```
//!
//! Hidden widths are fixed at [`HIDDEN`](super::HIDDEN), so the header
//! fully determines the parameter count.

use alloc::vec::Vec;

use super::{Layout, ModelDims, SequenceVae};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"DELV1";
const HEADER: usize = MAGIC.len() + 5 * 4;

impl SequenceVae {
    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.dims();
        let mut out = Vec::with_capacity(HEADER + 8 * self.params().len());
        out.extend_from_slice(MAGIC);
        for dim in [d.vocab, d.embed, d.latent, d.max_len, d.props] {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        for p in self.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Checkpoint("missing DELV1 header".into()));
        }
        let mut dims = [0usize; 5];
        for (i, d) in dims.iter_mut().enumerate() {
            let at = MAGIC.len() + 4 * i;
            *d = u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
        }
        let [vocab, embed, latent, max_len, props] = dims;
        let dims = ModelDims {
            vocab,
            embed,
            latent,
            max_len,
            props,
        };
        dims.validate()?;
        let expected = Layout::new(&dims).total;
        let body = &bytes[HEADER..];
        if body.len() != 8 * expected {
            return Err(Error::Checkpoint(alloc::format!(
                "expected {} parameter bytes, found {}",
                8 * expected,
                body.len()
            )));
        }
        let params = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Self::from_params(dims, params)
    }
}
