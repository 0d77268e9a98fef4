use std::fmt;
use std::str::FromStr;

use crate::{Error, Result, Scalar};

use super::PowerDelayProfile;

/// IEEE 802.11 TGn indoor channel model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TgnModel {
    B,
    C,
    D,
    E,
    F,
}

/// One exponentially decaying cluster: first tap index into the model's
/// delay grid and the per-tap powers in dB.
struct Cluster {
    start: usize,
    powers_db: &'static [f64],
}

struct Table {
    delays_ns: &'static [f64],
    clusters: &'static [Cluster],
}

const MODEL_B: Table = Table {
    delays_ns: &[0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0],
    clusters: &[
        Cluster {
            start: 0,
            powers_db: &[0.0, -5.4, -10.8, -16.2, -21.7],
        },
        Cluster {
            start: 2,
            powers_db: &[-3.2, -6.3, -9.4, -12.5, -15.6, -18.7, -21.8],
        },
    ],
};

const MODEL_C: Table = Table {
    delays_ns: &[
        0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 110.0, 140.0, 170.0, 200.0,
    ],
    clusters: &[
        Cluster {
            start: 0,
            powers_db: &[
                0.0, -2.1, -4.3, -6.5, -8.6, -10.8, -13.0, -15.2, -17.3, -19.5,
            ],
        },
        Cluster {
            start: 6,
            powers_db: &[-5.0, -7.2, -9.3, -11.5, -13.7, -15.8, -18.0, -20.2],
        },
    ],
};

const MODEL_D: Table = Table {
    delays_ns: &[
        0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 110.0, 140.0, 170.0, 200.0,
        240.0, 290.0, 340.0, 390.0,
    ],
    clusters: &[
        Cluster {
            start: 0,
            powers_db: &[
                0.0, -0.9, -1.7, -2.6, -3.5, -4.3, -5.2, -6.1, -6.9, -7.8, -9.0, -11.1, -13.7,
                -16.3, -19.3, -23.2,
            ],
        },
        Cluster {
            start: 10,
            powers_db: &[-6.6, -9.5, -12.1, -14.7, -17.4, -21.9, -25.5],
        },
        Cluster {
            start: 14,
            powers_db: &[-18.8, -23.2, -25.2, -26.7],
        },
    ],
};

const MODEL_E: Table = Table {
    delays_ns: &[
        0.0, 10.0, 20.0, 30.0, 50.0, 80.0, 110.0, 140.0, 180.0, 230.0, 280.0, 330.0, 380.0, 430.0,
        490.0, 560.0, 640.0, 730.0,
    ],
    clusters: &[
        Cluster {
            start: 0,
            powers_db: &[
                -2.6, -3.0, -3.5, -3.9, -4.5, -5.6, -6.9, -8.2, -9.8, -11.7, -13.9, -16.1, -18.3,
                -20.5, -22.9,
            ],
        },
        Cluster {
            start: 4,
            powers_db: &[
                -1.8, -3.2, -4.5, -5.8, -7.1, -9.9, -10.3, -14.3, -14.7, -18.7, -19.9, -22.4,
            ],
        },
        Cluster {
            start: 8,
            powers_db: &[-7.9, -9.6, -14.2, -13.8, -18.6, -18.1, -22.8],
        },
        Cluster {
            start: 14,
            powers_db: &[-20.6, -20.5, -20.7, -24.6],
        },
    ],
};

const MODEL_F: Table = Table {
    delays_ns: &[
        0.0, 10.0, 20.0, 30.0, 50.0, 80.0, 110.0, 140.0, 180.0, 230.0, 280.0, 330.0, 400.0, 490.0,
        600.0, 730.0, 880.0, 1050.0,
    ],
    clusters: &[
        Cluster {
            start: 0,
            powers_db: &[
                -3.3, -3.6, -3.9, -4.2, -4.6, -5.3, -6.2, -7.1, -8.2, -9.5, -11.0, -12.5, -14.3,
                -16.7, -19.9,
            ],
        },
        Cluster {
            start: 4,
            powers_db: &[
                -1.8, -2.8, -3.5, -4.4, -5.3, -7.4, -7.0, -10.3, -10.4, -13.8, -15.7, -19.9,
            ],
        },
        Cluster {
            start: 8,
            powers_db: &[-5.7, -6.7, -10.4, -9.6, -14.1, -12.7, -18.5],
        },
        Cluster {
            start: 12,
            powers_db: &[-8.8, -13.3, -18.7],
        },
        Cluster {
            start: 14,
            powers_db: &[-12.9, -14.2],
        },
        Cluster {
            start: 16,
            powers_db: &[-16.3, -21.2],
        },
    ],
};

impl TgnModel {
    pub const ALL: [TgnModel; 5] = [
        TgnModel::B,
        TgnModel::C,
        TgnModel::D,
        TgnModel::E,
        TgnModel::F,
    ];

    /// Nominal RMS delay spread in ns.
    pub fn rms_delay_ns(self) -> f64 {
        match self {
            TgnModel::B => 15.0,
            TgnModel::C => 30.0,
            TgnModel::D => 50.0,
            TgnModel::E => 100.0,
            TgnModel::F => 150.0,
        }
    }

    pub fn num_clusters(self) -> usize {
        self.table().clusters.len()
    }

    pub fn letter(self) -> char {
        match self {
            TgnModel::B => 'B',
            TgnModel::C => 'C',
            TgnModel::D => 'D',
            TgnModel::E => 'E',
            TgnModel::F => 'F',
        }
    }

    /// Stable small integer used in file formats and seed derivation.
    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(i as usize).copied()
    }

    fn table(self) -> &'static Table {
        match self {
            TgnModel::B => &MODEL_B,
            TgnModel::C => &MODEL_C,
            TgnModel::D => &MODEL_D,
            TgnModel::E => &MODEL_E,
            TgnModel::F => &MODEL_F,
        }
    }
}

impl fmt::Display for TgnModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for TgnModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let t = t
            .strip_prefix("Model-")
            .or_else(|| t.strip_prefix("model-"))
            .unwrap_or(t);
        match t {
            "B" | "b" => Ok(TgnModel::B),
            "C" | "c" => Ok(TgnModel::C),
            "D" | "d" => Ok(TgnModel::D),
            "E" | "e" => Ok(TgnModel::E),
            "F" | "f" => Ok(TgnModel::F),
            _ => Err(Error::Usage(format!(
                "unknown TGn model '{s}' (expected B..F)"
            ))),
        }
    }
}

/// Tap delay/power table of a TGn model, clusters summed in linear power
/// and normalized to unit total. LOS components are not modelled.
pub fn build_pdp<T: Scalar>(model: TgnModel) -> PowerDelayProfile<T> {
    let table = model.table();
    let mut powers = vec![0.0f64; table.delays_ns.len()];
    for cluster in table.clusters {
        for (i, db) in cluster.powers_db.iter().enumerate() {
            powers[cluster.start + i] += 10f64.powf(db / 10.0);
        }
    }
    let delays = table.delays_ns.iter().map(|&d| T::lit(d)).collect();
    let powers = powers.into_iter().map(T::lit).collect();
    PowerDelayProfile::new(delays, powers).expect("embedded TGn tables are valid")
}
