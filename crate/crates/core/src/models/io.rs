//! Weights file, version 1, little-endian:
//!
//! ```text
//! magic "CSIWGHTS" | schema_version u32
//! arch      kind u8 (0 cnn, 1 fcn) | input_len u32 | kernel_len u32 | embedding_dim u32
//!           | n_conv u32 | conv_filters u32 × n_conv | n_fcn u32 | fcn_widths u32 × n_fcn
//! optimizer present u8 | learning_rate f64 | batch_size u32 | epochs u32 | margin_eta f64
//!           | rmsprop_decay f64 | rmsprop_epsilon f64 | seed u64
//! params    count u64 | f32 × count in layer order
//! trailer   SHA-256 of every preceding byte
//! ```

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{count_parameters, ArchKind, ArchSpec, SiameseWeights, TrainConfig};
use crate::dataset::{Reader, Writer};
use crate::{Error, Result, Scalar};

pub const WEIGHTS_MAGIC: &[u8; 8] = b"CSIWGHTS";
const WEIGHTS_VERSION: u32 = 1;
// guards allocation on corrupt headers
const MAX_LIST: u32 = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightsFile {
    pub weights: SiameseWeights<f32>,
    /// Training recipe that produced the weights, when known.
    pub optimizer: Option<TrainConfig>,
}

/// Parameters are stored as `f32`; `f64` weights are rounded.
pub fn encode_weights<T: Scalar>(
    weights: &SiameseWeights<T>,
    optimizer: Option<&TrainConfig>,
) -> Vec<u8> {
    let arch = weights.arch();
    let mut w = Writer::new();
    w.bytes(WEIGHTS_MAGIC);
    w.u32(WEIGHTS_VERSION);
    w.u8(match arch.kind {
        ArchKind::Cnn => 0,
        ArchKind::Fcn => 1,
    });
    w.u32(arch.input_len as u32);
    w.u32(arch.kernel_len as u32);
    w.u32(arch.embedding_dim as u32);
    for list in [&arch.conv_filters, &arch.fcn_widths] {
        w.u32(list.len() as u32);
        list.iter().for_each(|&v| w.u32(v as u32));
    }
    let cfg = optimizer.copied().unwrap_or_default();
    w.u8(u8::from(optimizer.is_some()));
    w.f64(cfg.learning_rate);
    w.u32(cfg.batch_size as u32);
    w.u32(cfg.epochs as u32);
    w.f64(cfg.margin_eta);
    w.f64(cfg.rmsprop_decay);
    w.f64(cfg.rmsprop_epsilon);
    w.u64(cfg.seed);
    w.u64(weights.params().len() as u64);
    for p in weights.params() {
        w.f32(p.as_f32());
    }
    w.finish()
}

pub fn decode_weights(data: &[u8]) -> Result<WeightsFile> {
    let mut r = Reader::new(data);
    let magic: [u8; 8] = r.array()?;
    if &magic != WEIGHTS_MAGIC {
        return Err(r.invalid(0, "not a weights file (bad magic)"));
    }
    let version = r.u32()?;
    if version != WEIGHTS_VERSION {
        return Err(Error::SchemaVersion {
            found: version,
            supported: WEIGHTS_VERSION,
        });
    }
    let kind_at = r.offset();
    let kind = match r.u8()? {
        0 => ArchKind::Cnn,
        1 => ArchKind::Fcn,
        k => return Err(r.invalid(kind_at, format!("unknown architecture kind {k}"))),
    };
    let input_len = r.u32()? as usize;
    let kernel_len = r.u32()? as usize;
    let embedding_dim = r.u32()? as usize;
    let mut lists = Vec::with_capacity(2);
    for _ in 0..2 {
        let at = r.offset();
        let n = r.u32()?;
        if n > MAX_LIST {
            return Err(r.invalid(at, format!("implausible layer list length {n}")));
        }
        lists.push(
            (0..n)
                .map(|_| r.u32().map(|v| v as usize))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let fcn_widths = lists.pop().expect("two lists");
    let conv_filters = lists.pop().expect("two lists");
    let arch = ArchSpec {
        kind,
        input_len,
        conv_filters,
        kernel_len,
        fcn_widths,
        embedding_dim,
    };
    arch.validate()
        .map_err(|e| r.invalid(kind_at, format!("invalid architecture: {e}")))?;

    let present = r.u8()? != 0;
    let cfg = TrainConfig {
        learning_rate: r.f64()?,
        batch_size: r.u32()? as usize,
        epochs: r.u32()? as usize,
        margin_eta: r.f64()?,
        rmsprop_decay: r.f64()?,
        rmsprop_epsilon: r.f64()?,
        seed: r.u64()?,
    };
    let count_at = r.offset();
    let count = r.u64()?;
    if count != count_parameters(&arch) as u64 {
        return Err(r.invalid(
            count_at,
            format!(
                "parameter count {count} does not match architecture ({})",
                count_parameters(&arch)
            ),
        ));
    }
    let params = (0..count).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok(WeightsFile {
        weights: SiameseWeights::from_params(&arch, params)?,
        optimizer: present.then_some(cfg),
    })
}

pub fn write_weights<T: Scalar>(
    weights: &SiameseWeights<T>,
    optimizer: Option<&TrainConfig>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_weights(weights, optimizer)).map_err(|e| Error::io(path, e))
}

pub fn read_weights(path: impl AsRef<Path>) -> Result<WeightsFile> {
    let path = path.as_ref();
    decode_weights(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Hex SHA-256 of the encoded file.
pub fn weights_digest<T: Scalar>(
    weights: &SiameseWeights<T>,
    optimizer: Option<&TrainConfig>,
) -> String {
    hex::encode(Sha256::digest(encode_weights(weights, optimizer)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        for arch in [ArchSpec::cnn(), ArchSpec::fcn()] {
            let w = SiameseWeights::<f32>::init(&arch, 21).unwrap();
            let cfg = TrainConfig {
                seed: 77,
                epochs: 3,
                ..TrainConfig::default()
            };
            let bytes = encode_weights(&w, Some(&cfg));
            let back = decode_weights(&bytes).unwrap();
            assert_eq!(back.weights, w);
            assert_eq!(back.optimizer, Some(cfg));
            assert!(back
                .weights
                .params()
                .iter()
                .zip(w.params())
                .all(|(a, b)| a.to_bits() == b.to_bits()));
            assert_eq!(
                encode_weights(&back.weights, back.optimizer.as_ref()),
                bytes
            );
        }
    }

    #[test]
    fn corruption_detected() {
        let w = SiameseWeights::<f32>::init(&ArchSpec::cnn(), 1).unwrap();
        let mut bytes = encode_weights(&w, None);
        assert_eq!(decode_weights(&bytes).unwrap().optimizer, None);
        let n = bytes.len();
        bytes[n / 2] ^= 1;
        assert!(matches!(
            decode_weights(&bytes),
            Err(Error::Integrity { .. })
        ));
        assert!(matches!(
            decode_weights(&bytes[..n / 3]),
            Err(Error::Integrity { .. })
        ));
        assert!(decode_weights(&[]).is_err());
    }

    #[test]
    fn version_checked() {
        let w = SiameseWeights::<f32>::init(&ArchSpec::cnn(), 1).unwrap();
        let mut bytes = encode_weights(&w, None);
        bytes[8] = 9;
        assert!(matches!(
            decode_weights(&bytes),
            Err(Error::SchemaVersion { found: 9, .. })
        ));
    }
}
