//! Labeled CSI pairs: synthetic generation over parameter grids, ingestion
//! of captured CSI logs, and a versioned binary container.

mod container;
mod ingest;
mod synth;

pub use container::{
    dataset_digest, decode_dataset, encode_dataset, read_dataset, write_dataset, write_dataset_csv,
    DATASET_MAGIC,
};
pub(crate) use container::{Reader, Writer};
pub use ingest::{
    build_experimental_pairs, build_mac_labeled_pairs, format_mac, ingest_raw_csv, parse_mac,
    parse_raw_csv, IngestOptions, IngestReport, MalformedRow, RawCsiRecord, RawFormat,
};
pub use synth::{
    generate_pair, generate_test_grid, generate_training_grid, PairGenConfig, TestAxis, TestGrid,
    TrainingGrid,
};

use crate::ofdm::CsiVector;
use crate::Scalar;

/// Current container schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// `Same` (0): both estimates come from the same transmitter.
/// `Different` (1): the second estimate comes from another transmitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Same = 0,
    Different = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Same),
            1 => Some(Label::Different),
            _ => None,
        }
    }

    pub fn value<T: Scalar>(self) -> T {
        match self {
            Label::Same => T::zero(),
            Label::Different => T::one(),
        }
    }
}

/// Where a pair came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    Unknown,
    /// Regenerable from the recorded configuration (including its seed).
    Synthetic(PairGenConfig),
    /// Indices into the ingested record stream of one capture.
    Experimental {
        mac: [u8; 6],
        index_a: u64,
        index_b: u64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPair {
    pub csi_a: CsiVector<f32>,
    pub csi_b: CsiVector<f32>,
    pub label: Label,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub schema_version: u32,
    /// Free-form setting description, e.g. `model=B;snr_db=10`.
    pub tag: String,
    pub pairs: Vec<LabeledPair>,
}

impl Dataset {
    pub fn new(tag: impl Into<String>, pairs: Vec<LabeledPair>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tag: tag.into(),
            pairs,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `(same, different)` label counts.
    pub fn label_counts(&self) -> (usize, usize) {
        let different = self
            .pairs
            .iter()
            .filter(|p| p.label == Label::Different)
            .count();
        (self.pairs.len() - different, different)
    }

    pub fn has_both_labels(&self) -> bool {
        let (same, different) = self.label_counts();
        same > 0 && different > 0
    }
}
