//! Binary checkpoint container.
//!
//! Layout: 4-byte magic `HPCK`, little-endian `u32` version, `u64` header
//! length, a JSON header (configs and the ordered tensor directory), then
//! every tensor as little-endian `f64` in directory order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Discriminator, DiscriminatorConfig, Generator, GeneratorConfig};
use crate::data::NormalizationStats;
use crate::data::Standardizer;
use crate::error::{Error, Result};
use crate::nn::Parameterized;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"HPCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    generator: GeneratorConfig,
    discriminator: Option<DiscriminatorConfig>,
    tensors: Vec<(String, usize)>,
}

/// A generator with its normalization statistics, optionally paired with
/// its discriminator.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub generator: Generator,
    pub discriminator: Option<Discriminator>,
}

fn norm_tensors(stats: &NormalizationStats) -> Vec<(String, &[f64])> {
    let mut out: Vec<(String, &[f64])> = vec![
        ("norm.body.mean".into(), &stats.body.mean),
        ("norm.body.std".into(), &stats.body.std),
        ("norm.hands.mean".into(), &stats.hands.mean),
        ("norm.hands.std".into(), &stats.hands.std),
    ];
    if let Some(f) = &stats.feats {
        out.push(("norm.feats.mean".into(), &f.mean));
        out.push(("norm.feats.std".into(), &f.std));
    }
    out
}

fn collect(ck: &Checkpoint) -> Vec<(String, Vec<f64>)> {
    let mut out: Vec<(String, Vec<f64>)> = norm_tensors(&ck.generator.norm)
        .into_iter()
        .map(|(n, v)| (n, v.to_vec()))
        .collect();
    ck.generator.visit(&mut |n, p| out.push((format!("gen.{n}"), p.to_vec())));
    if let Some(d) = &ck.discriminator {
        d.visit(&mut |n, p| out.push((n.to_string(), p.to_vec())));
    }
    out
}

pub fn write_checkpoint(ck: &Checkpoint, w: &mut impl Write) -> std::io::Result<()> {
    let tensors = collect(ck);
    let header = Header {
        generator: ck.generator.config.clone(),
        discriminator: ck.discriminator.as_ref().map(|d| d.config.clone()),
        tensors: tensors.iter().map(|(n, v)| (n.clone(), v.len())).collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for (_, v) in &tensors {
        for x in v {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let bad = |m: String| Error::Checkpoint(m);
    let mut r = bytes;
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| bad("truncated magic".into()))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("not a checkpoint file (bad magic)".into()));
    }
    let mut u4 = [0u8; 4];
    r.read_exact(&mut u4).map_err(|_| bad("truncated version".into()))?;
    let version = u32::from_le_bytes(u4);
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let mut u8b = [0u8; 8];
    r.read_exact(&mut u8b).map_err(|_| bad("truncated header length".into()))?;
    let hlen = u64::from_le_bytes(u8b) as usize;
    if r.len() < hlen {
        return Err(bad("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&r[..hlen]).map_err(|e| bad(format!("header: {e}")))?;
    r = &r[hlen..];

    // Build the expected layout from the declared configs before reading data.
    let mut generator = Generator::new(header.generator.clone(), 0)?;
    generator.norm = NormalizationStats::identity(header.generator.image_feat_dim);
    let mut discriminator = header
        .discriminator
        .clone()
        .map(|c| Discriminator::new(c, 0))
        .transpose()?;
    let expected = collect(&Checkpoint {
        generator: generator.clone(),
        discriminator: discriminator.clone(),
    });
    let expected_dir: Vec<(String, usize)> = expected.iter().map(|(n, v)| (n.clone(), v.len())).collect();
    if expected_dir != header.tensors {
        return Err(bad("tensor directory does not match the declared configuration".into()));
    }
    let total: usize = expected_dir.iter().map(|(_, l)| l).sum();
    if r.len() != total * 8 {
        return Err(bad(format!("expected {} data bytes, found {}", total * 8, r.len())));
    }
    let mut values = r.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut take = |n: usize| -> Vec<f64> { values.by_ref().take(n).collect() };

    let feat = header.generator.image_feat_dim;
    let mut std = |dim: usize| Standardizer {
        mean: take(dim),
        std: take(dim),
    };
    let body = std(crate::kinematics::BODY_DIM);
    let hands = std(crate::kinematics::HAND_DIM);
    let feats = (feat > 0).then(|| std(feat));
    generator.norm = NormalizationStats { body, hands, feats };
    let n = generator.num_params();
    generator.assign(&take(n));
    if let Some(d) = &mut discriminator {
        let n = d.num_params();
        d.assign(&take(n));
    }
    Ok(Checkpoint {
        generator,
        discriminator,
    })
}

pub fn save_checkpoint(ck: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_checkpoint(ck, &mut buf).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes)
}
