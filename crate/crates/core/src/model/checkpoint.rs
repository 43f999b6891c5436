//! Binary checkpoint container.
//!
//! Layout (little-endian): magic `SLCKPT`, u32 version, u64-length-prefixed
//! JSON echo of the config, u64-length-prefixed vocabulary text, u64 step,
//! u64 parameter count, then params, first moments and second moments as f64.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{ModelConfig, ModelError, ModelState, Vocab};

const MAGIC: &[u8; 6] = b"SLCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
    out.extend_from_slice(bytes);
}

pub fn to_bytes(state: &ModelState) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + state.params.len() * 24);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    put_bytes(&mut out, serde_json::to_string(&state.config).expect("config serializes").as_bytes());
    put_bytes(&mut out, state.vocab.to_text().as_bytes());
    out.extend_from_slice(&state.step.to_le_bytes());
    out.extend_from_slice(&(state.params.len() as u64).to_le_bytes());
    for xs in [&state.params, &state.m, &state.v] {
        for x in xs.iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], ModelError> {
        if self.buf.len() < n {
            return Err(ModelError::Checkpoint("truncated checkpoint".into()));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        let mut b = [0u8; 8];
        b.copy_from_slice(self.take(8)?);
        Ok(u64::from_le_bytes(b))
    }

    fn text(&mut self) -> Result<String, ModelError> {
        let n = self.u64()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| ModelError::Checkpoint(e.to_string()))
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>, ModelError> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| ModelError::Checkpoint("size overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelState, ModelError> {
    let mut r = Reader { buf: bytes };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(ModelError::Checkpoint("not a checkpoint file".into()));
    }
    let mut v = [0u8; 4];
    v.copy_from_slice(r.take(4)?);
    let version = u32::from_le_bytes(v);
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let config: ModelConfig =
        serde_json::from_str(&r.text()?).map_err(|e| ModelError::Checkpoint(format!("config: {e}")))?;
    let vocab = Vocab::from_text(&r.text()?)?;
    let step = r.u64()?;
    let n = r.u64()? as usize;
    if n != config.param_count() || vocab.len() != config.vocab_size {
        return Err(ModelError::Checkpoint("tensor sizes disagree with the config".into()));
    }
    let params = r.floats(n)?;
    let m = r.floats(n)?;
    let v = r.floats(n)?;
    if !r.buf.is_empty() {
        return Err(ModelError::Checkpoint("trailing bytes".into()));
    }
    Ok(ModelState { config, vocab, params, m, v, step })
}

pub fn save_checkpoint(state: &ModelState, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| ModelError::Io(path.to_path_buf(), e))?;
    f.write_all(&to_bytes(state)).map_err(|e| ModelError::Io(path.to_path_buf(), e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelState, ModelError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| ModelError::Io(path.to_path_buf(), e))?;
    from_bytes(&bytes)
}
