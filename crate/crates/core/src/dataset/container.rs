//! Binary dataset container, version 1. All integers and floats are
//! little-endian.
//!
//! ```text
//! header   magic "CSIPAIRS" | schema_version u32 | subcarriers u32 | pair_count u64
//!          | tag_len u32 | tag (UTF-8)
//! pair     csi_a | csi_b | label u8 | provenance (64 bytes)
//! csi      meta (24 bytes) | subcarriers × (re f32, im f32)
//! meta     flags u8 | snr_db f64 | timestamp f64 | source kind u8 | mac [u8; 6]
//! trailer  SHA-256 of every preceding byte
//! ```
//!
//! Meta flags: bit 0 snr present, bit 1 timestamp present, bit 2 exceeds
//! cyclic prefix, bit 3 zero-power signal. Source kind: 0 unknown,
//! 1 legitimate, 2 attacker, 3 MAC address.
//!
//! Provenance kind byte 0 unknown; 1 synthetic followed by model u8,
//! snr_db, dt_s, v0, wavelength, d_bm_wavelengths, theta (f64 each) and
//! seed u64; 2 experimental followed by mac [u8; 6], index_a u64, index_b
//! u64. Unused bytes are zero.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex;
use sha2::{Digest, Sha256};

use crate::channel::TgnModel;
use crate::ofdm::{CsiMeta, CsiVector, SourceTag, OCCUPIED};
use crate::{Error, Result};

use super::{Dataset, Label, LabeledPair, PairGenConfig, Provenance, SCHEMA_VERSION};

pub const DATASET_MAGIC: &[u8; 8] = b"CSIPAIRS";
const META_LEN: usize = 24;
const PROVENANCE_LEN: usize = 64;
const CHECKSUM_LEN: usize = 32;

pub(crate) struct Writer {
    pub(crate) buf: Vec<u8>,
}

impl Writer {
    pub(crate) fn new() -> Self {
        Self { buf: Vec::new() }
    }
    pub(crate) fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub(crate) fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }
    pub(crate) fn pad_to(&mut self, start: usize, len: usize) {
        self.buf.resize(start + len, 0);
    }
    /// Appends the SHA-256 trailer and returns the finished buffer.
    pub(crate) fn finish(mut self) -> Vec<u8> {
        let digest = Sha256::digest(&self.buf);
        self.buf.extend_from_slice(&digest);
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// The checksum is verified by [`Reader::finish`] once the body parsed.
    pub(crate) fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }
    pub(crate) fn offset(&self) -> u64 {
        self.pos as u64
    }
    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        // body ends where the checksum trailer starts
        let body_end = self.data.len().saturating_sub(CHECKSUM_LEN);
        if self.pos + n > body_end {
            return Err(Error::Integrity {
                offset: self.pos as u64,
                detail: format!(
                    "file truncated: needed {n} bytes, {} available before the checksum",
                    body_end.saturating_sub(self.pos)
                ),
            });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    pub(crate) fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array()?))
    }
    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    pub(crate) fn skip_to(&mut self, start: u64, len: usize) -> Result<()> {
        let end = start as usize + len;
        if end < self.pos {
            return Err(Error::Integrity {
                offset: start,
                detail: "fixed-width block overrun".into(),
            });
        }
        self.take(end - self.pos).map(|_| ())
    }
    pub(crate) fn invalid(&self, at: u64, detail: impl Into<String>) -> Error {
        Error::Integrity {
            offset: at,
            detail: detail.into(),
        }
    }
    /// Checks that the body was consumed exactly and the checksum matches.
    pub(crate) fn finish(self) -> Result<()> {
        if self.data.len() < CHECKSUM_LEN {
            return Err(self.invalid(self.data.len() as u64, "missing checksum trailer"));
        }
        let body_end = self.data.len() - CHECKSUM_LEN;
        if self.pos != body_end {
            return Err(self.invalid(
                self.pos as u64,
                format!("{} unexpected trailing bytes", body_end - self.pos),
            ));
        }
        let digest = Sha256::digest(&self.data[..body_end]);
        if digest.as_slice() != &self.data[body_end..] {
            return Err(self.invalid(body_end as u64, "checksum mismatch"));
        }
        Ok(())
    }
}

fn write_meta(w: &mut Writer, meta: &CsiMeta) {
    let mut flags = 0u8;
    flags |= u8::from(meta.snr_db.is_some());
    flags |= u8::from(meta.timestamp.is_some()) << 1;
    flags |= u8::from(meta.exceeds_cyclic_prefix) << 2;
    flags |= u8::from(meta.zero_power_signal) << 3;
    w.u8(flags);
    w.f64(meta.snr_db.unwrap_or(0.0));
    w.f64(meta.timestamp.unwrap_or(0.0));
    let (kind, mac) = match meta.source {
        SourceTag::Unknown => (0, [0; 6]),
        SourceTag::Legitimate => (1, [0; 6]),
        SourceTag::Attacker => (2, [0; 6]),
        SourceTag::Mac(m) => (3, m),
    };
    w.u8(kind);
    w.bytes(&mac);
}

fn read_meta(r: &mut Reader<'_>) -> Result<CsiMeta> {
    let at = r.offset();
    let flags = r.u8()?;
    if flags & !0x0f != 0 {
        return Err(r.invalid(at, format!("unknown metadata flags {flags:#04x}")));
    }
    let snr = r.f64()?;
    let ts = r.f64()?;
    let kind_at = r.offset();
    let kind = r.u8()?;
    let mac: [u8; 6] = r.array()?;
    let source = match kind {
        0 => SourceTag::Unknown,
        1 => SourceTag::Legitimate,
        2 => SourceTag::Attacker,
        3 => SourceTag::Mac(mac),
        k => return Err(r.invalid(kind_at, format!("unknown source kind {k}"))),
    };
    Ok(CsiMeta {
        snr_db: (flags & 1 != 0).then_some(snr),
        timestamp: (flags & 2 != 0).then_some(ts),
        source,
        exceeds_cyclic_prefix: flags & 4 != 0,
        zero_power_signal: flags & 8 != 0,
    })
}

fn write_csi(w: &mut Writer, csi: &CsiVector<f32>) {
    write_meta(w, &csi.meta);
    for h in &csi.estimates {
        w.f32(h.re);
        w.f32(h.im);
    }
}

fn read_csi(r: &mut Reader<'_>, subcarriers: usize) -> Result<CsiVector<f32>> {
    let meta = read_meta(r)?;
    let mut estimates = Vec::with_capacity(subcarriers);
    for _ in 0..subcarriers {
        let re = r.f32()?;
        let im = r.f32()?;
        estimates.push(Complex::new(re, im));
    }
    Ok(CsiVector { estimates, meta })
}

fn write_provenance(w: &mut Writer, p: &Provenance) {
    let start = w.buf.len();
    match p {
        Provenance::Unknown => w.u8(0),
        Provenance::Synthetic(c) => {
            w.u8(1);
            w.u8(c.model.index());
            for v in [
                c.snr_db,
                c.dt_s,
                c.v0,
                c.wavelength,
                c.d_bm_wavelengths,
                c.theta,
            ] {
                w.f64(v);
            }
            w.u64(c.seed);
        }
        Provenance::Experimental {
            mac,
            index_a,
            index_b,
        } => {
            w.u8(2);
            w.bytes(mac);
            w.u64(*index_a);
            w.u64(*index_b);
        }
    }
    w.pad_to(start, PROVENANCE_LEN);
}

fn read_provenance(r: &mut Reader<'_>) -> Result<Provenance> {
    let start = r.offset();
    let p = match r.u8()? {
        0 => Provenance::Unknown,
        1 => {
            let model_at = r.offset();
            let model = TgnModel::from_index(r.u8()?)
                .ok_or_else(|| r.invalid(model_at, "unknown TGn model index"))?;
            Provenance::Synthetic(PairGenConfig {
                model,
                snr_db: r.f64()?,
                dt_s: r.f64()?,
                v0: r.f64()?,
                wavelength: r.f64()?,
                d_bm_wavelengths: r.f64()?,
                theta: r.f64()?,
                seed: r.u64()?,
            })
        }
        2 => Provenance::Experimental {
            mac: r.array()?,
            index_a: r.u64()?,
            index_b: r.u64()?,
        },
        k => return Err(r.invalid(start, format!("unknown provenance kind {k}"))),
    };
    r.skip_to(start, PROVENANCE_LEN)?;
    Ok(p)
}

/// Serializes a dataset. Every CSI vector must hold 52 estimates.
pub fn encode_dataset(dataset: &Dataset) -> Result<Vec<u8>> {
    if dataset.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: dataset.schema_version,
            supported: SCHEMA_VERSION,
        });
    }
    if let Some(i) = dataset
        .pairs
        .iter()
        .position(|p| p.csi_a.len() != OCCUPIED || p.csi_b.len() != OCCUPIED)
    {
        return Err(Error::Format(format!(
            "pair {i} does not hold {OCCUPIED}-subcarrier CSI"
        )));
    }
    let mut w = Writer::new();
    w.bytes(DATASET_MAGIC);
    w.u32(SCHEMA_VERSION);
    w.u32(OCCUPIED as u32);
    w.u64(dataset.pairs.len() as u64);
    w.u32(dataset.tag.len() as u32);
    w.bytes(dataset.tag.as_bytes());
    for pair in &dataset.pairs {
        write_csi(&mut w, &pair.csi_a);
        write_csi(&mut w, &pair.csi_b);
        w.u8(pair.label.as_u8());
        write_provenance(&mut w, &pair.provenance);
    }
    Ok(w.finish())
}

pub fn decode_dataset(data: &[u8]) -> Result<Dataset> {
    let mut r = Reader::new(data);
    let magic: [u8; 8] = r.array()?;
    if &magic != DATASET_MAGIC {
        return Err(r.invalid(0, "not a dataset container (bad magic)"));
    }
    let version = r.u32()?;
    if version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: version,
            supported: SCHEMA_VERSION,
        });
    }
    let m_at = r.offset();
    let subcarriers = r.u32()? as usize;
    if subcarriers != OCCUPIED {
        return Err(r.invalid(
            m_at,
            format!("expected {OCCUPIED} subcarriers, header says {subcarriers}"),
        ));
    }
    let count = r.u64()?;
    let tag_len = r.u32()? as usize;
    let tag_at = r.offset();
    let tag = std::str::from_utf8(r.take(tag_len)?)
        .map_err(|_| r.invalid(tag_at, "tag is not UTF-8"))?
        .to_owned();
    let per_pair = 2 * (META_LEN + 8 * subcarriers) + 1 + PROVENANCE_LEN;
    let mut pairs = Vec::with_capacity((count as usize).min(data.len() / per_pair + 1));
    for _ in 0..count {
        let csi_a = read_csi(&mut r, subcarriers)?;
        let csi_b = read_csi(&mut r, subcarriers)?;
        let label_at = r.offset();
        let label = Label::from_u8(r.u8()?)
            .ok_or_else(|| r.invalid(label_at, "label byte is not 0 or 1"))?;
        let provenance = read_provenance(&mut r)?;
        pairs.push(LabeledPair {
            csi_a,
            csi_b,
            label,
            provenance,
        });
    }
    r.finish()?;
    Ok(Dataset {
        schema_version: version,
        tag,
        pairs,
    })
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_dataset(dataset)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < CHECKSUM_LEN {
        return Err(Error::Integrity {
            offset: bytes.len() as u64,
            detail: "file shorter than the checksum trailer".into(),
        });
    }
    decode_dataset(&bytes)
}

/// Hex SHA-256 of the encoded container.
pub fn dataset_digest(dataset: &Dataset) -> String {
    match encode_dataset(dataset) {
        Ok(bytes) => hex::encode(Sha256::digest(bytes)),
        Err(_) => String::from("unencodable"),
    }
}

/// Lossy magnitude-only export for inspection:
/// `pair,label,a_0..a_51,b_0..b_51`.
pub fn write_dataset_csv<W: Write>(dataset: &Dataset, mut out: W) -> std::io::Result<()> {
    let mut header = vec!["pair".to_string(), "label".to_string()];
    header.extend((0..OCCUPIED).map(|i| format!("a_{i}")));
    header.extend((0..OCCUPIED).map(|i| format!("b_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for (i, p) in dataset.pairs.iter().enumerate() {
        let mags: Vec<String> = p
            .csi_a
            .magnitudes()
            .into_iter()
            .chain(p.csi_b.magnitudes())
            .map(|m| format!("{m:.6}"))
            .collect();
        writeln!(out, "{i},{},{}", p.label.as_u8(), mags.join(","))?;
    }
    Ok(())
}
