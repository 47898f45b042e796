//! Policy checkpoints.
//!
//! Layout, all little-endian:
//!
//! | field | type |
//! |---|---|
//! | magic `b"BLSTPOL\0"` | 8 bytes |
//! | version (= 1) | u32 |
//! | obs_dim, act_dim, hidden layer count `k` | u32 × 3 |
//! | hidden sizes | u32 × k |
//! | input scale | f32 × obs_dim |
//! | log-std | f32 × act_dim |
//! | actor weights | f32 × actor param count |
//! | critic weights | f32 × critic param count |
//!
//! Each network stores, layer by layer, its weight matrix row-major with
//! shape `[inputs, outputs]` followed by its bias vector.

use std::io::{Read, Write};
use std::path::Path;

use super::nn::Mlp;
use super::policy::PolicyParams;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"BLSTPOL\0";
pub const VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn to_bytes(policy: &PolicyParams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    let hidden = policy.hidden();
    for v in [VERSION, policy.obs_dim() as u32, policy.act_dim() as u32, hidden.len() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for h in hidden {
        out.extend_from_slice(&(*h as u32).to_le_bytes());
    }
    let floats = policy
        .input_scale
        .iter()
        .chain(&policy.log_std)
        .chain(policy.actor.params())
        .chain(policy.critic.params());
    for f in floats {
        out.extend_from_slice(&f.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.data.len()).ok_or_else(|| bad("truncated file"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| bad("size overflow"))?)?;
        Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    }
}

pub fn from_bytes(data: &[u8]) -> Result<PolicyParams> {
    let mut c = Cursor { data, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(bad("not a policy checkpoint"));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let obs_dim = c.u32()? as usize;
    let act_dim = c.u32()? as usize;
    let k = c.u32()? as usize;
    if obs_dim == 0 || act_dim == 0 || k > 64 {
        return Err(bad("implausible dimensions"));
    }
    let hidden = (0..k).map(|_| c.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let mut actor_sizes = vec![obs_dim];
    actor_sizes.extend_from_slice(&hidden);
    let mut critic_sizes = actor_sizes.clone();
    actor_sizes.push(act_dim);
    critic_sizes.push(1);

    let input_scale = c.f32s(obs_dim)?;
    let log_std = c.f32s(act_dim)?;
    let actor = Mlp::from_params(&actor_sizes, c.f32s(Mlp::param_count(&actor_sizes))?).ok_or_else(|| bad("actor"))?;
    let critic =
        Mlp::from_params(&critic_sizes, c.f32s(Mlp::param_count(&critic_sizes))?).ok_or_else(|| bad("critic"))?;
    if c.pos != data.len() {
        return Err(bad(format!("{} trailing bytes", data.len() - c.pos)));
    }
    let policy = PolicyParams { actor, critic, log_std, input_scale };
    if !policy.is_finite() {
        return Err(bad("non-finite weights"));
    }
    Ok(policy)
}

pub fn write<W: Write>(policy: &PolicyParams, mut out: W) -> Result<()> {
    out.write_all(&to_bytes(policy))?;
    Ok(())
}

pub fn read<R: Read>(mut input: R) -> Result<PolicyParams> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    from_bytes(&data)
}

/// Writes through a temporary file so a crash never leaves a torn checkpoint.
pub fn save(policy: &PolicyParams, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, to_bytes(policy))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<PolicyParams> {
    from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn policy() -> PolicyParams {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        PolicyParams::new(5, 2, &[7, 3], 0.5, vec![0.5; 5], &mut rng).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let p = policy();
        let bytes = to_bytes(&p);
        assert_eq!(bytes.len(), 8 + 4 * 4 + 2 * 4 + 4 * (5 + 2 + p.actor.params().len() + p.critic.params().len()));
        assert_eq!(from_bytes(&bytes).unwrap(), p);
    }

    #[test]
    fn header_is_little_endian() {
        let bytes = to_bytes(&policy());
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[5, 0, 0, 0]);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = to_bytes(&policy());
        assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(from_bytes(&extra).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(from_bytes(&magic).is_err());
        let mut version = bytes;
        version[8] = 2;
        assert!(from_bytes(&version).is_err());
    }
}
