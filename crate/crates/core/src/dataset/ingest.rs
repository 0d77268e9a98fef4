use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex;

use crate::ofdm::{occupied_bins, CsiVector, SourceTag, FFT_SIZE};
use crate::{Error, Result};

use super::{Dataset, Label, LabeledPair, Provenance};

/// One captured packet as logged by an ESP32-style CSI tool.
#[derive(Clone, Debug, PartialEq)]
pub struct RawCsiRecord {
    pub mac: [u8; 6],
    pub rssi_dbm: f64,
    pub noise_floor: f64,
    /// Seconds.
    pub timestamp: f64,
    /// All 64 DFT bins, in DFT index order.
    pub subcarriers: Vec<Complex<i8>>,
}

impl RawCsiRecord {
    /// Occupied-bin estimates, ordered like simulated CSI.
    pub fn to_csi(&self) -> CsiVector<f32> {
        let estimates = occupied_bins()
            .iter()
            .map(|&b| {
                let v = self.subcarriers[b];
                Complex::new(f32::from(v.re), f32::from(v.im))
            })
            .collect();
        let mut csi = CsiVector::new(estimates);
        csi.meta.timestamp = Some(self.timestamp);
        csi.meta.source = SourceTag::Mac(self.mac);
        csi
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RawFormat {
    /// `mac,rssi,noise_floor,timestamp,csi` with 128 space-separated
    /// signed integers in `csi`, imaginary part first for each bin.
    #[default]
    Esp32Csv,
}

impl FromStr for RawFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "esp32-csv" => Ok(RawFormat::Esp32Csv),
            _ => Err(Error::Usage(format!(
                "unknown raw format '{s}' (expected esp32-csv)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IngestOptions {
    pub format: RawFormat,
    /// Fraction of malformed rows above which ingestion fails.
    pub max_malformed_fraction: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            format: RawFormat::Esp32Csv,
            max_malformed_fraction: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MalformedRow {
    /// 1-based line number in the input.
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IngestReport {
    pub records: Vec<RawCsiRecord>,
    pub malformed: Vec<MalformedRow>,
    pub warnings: Vec<String>,
}

pub fn parse_mac(s: &str) -> Result<[u8; 6]> {
    let parts: Vec<&str> = s.trim().split([':', '-']).collect();
    if parts.len() != 6 {
        return Err(Error::Format(format!(
            "MAC address '{s}' must have six octets"
        )));
    }
    let mut mac = [0u8; 6];
    for (slot, part) in mac.iter_mut().zip(parts) {
        *slot = u8::from_str_radix(part, 16)
            .map_err(|_| Error::Format(format!("bad MAC octet '{part}' in '{s}'")))?;
    }
    Ok(mac)
}

pub fn format_mac(mac: &[u8; 6]) -> String {
    mac.iter()
        .map(|b| format!("{b:02x}"))
        .collect::<Vec<_>>()
        .join(":")
}

fn parse_number(field: &str, name: &str) -> std::result::Result<f64, String> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| format!("{name} '{}' is not a number", field.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} is not finite"))
    }
}

fn parse_row(row: &csv::StringRecord) -> std::result::Result<RawCsiRecord, String> {
    if row.len() != 5 {
        return Err(format!("expected 5 fields, found {}", row.len()));
    }
    let mac = parse_mac(&row[0]).map_err(|e| e.to_string())?;
    let rssi_dbm = parse_number(&row[1], "rssi")?;
    let noise_floor = parse_number(&row[2], "noise_floor")?;
    let timestamp = parse_number(&row[3], "timestamp")?;
    let csi = row[4].trim().trim_start_matches('[').trim_end_matches(']');
    let values = csi
        .split_whitespace()
        .map(|t| {
            t.parse::<i8>()
                .map_err(|_| format!("csi value '{t}' is not a signed 8-bit integer"))
        })
        .collect::<std::result::Result<Vec<i8>, String>>()?;
    if values.len() != 2 * FFT_SIZE {
        return Err(format!(
            "expected {} csi integers ({} subcarriers), found {}",
            2 * FFT_SIZE,
            FFT_SIZE,
            values.len()
        ));
    }
    let subcarriers = values
        .chunks_exact(2)
        .map(|p| Complex::new(p[1], p[0]))
        .collect();
    Ok(RawCsiRecord {
        mac,
        rssi_dbm,
        noise_floor,
        timestamp,
        subcarriers,
    })
}

/// Parses a raw CSI log. Rows that fail to parse are reported in
/// [`IngestReport::malformed`]; more than the configured fraction is an error.
pub fn parse_raw_csv<R: Read>(reader: R, options: &IngestOptions) -> Result<IngestReport> {
    let RawFormat::Esp32Csv = options.format;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut report = IngestReport::default();
    let mut total = 0usize;
    for (i, row) in rdr.records().enumerate() {
        total += 1;
        let (line, parsed) = match row {
            Ok(row) => {
                let line = row.position().map(|p| p.line() as usize).unwrap_or(i + 2);
                (line, parse_row(&row))
            }
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(i + 2);
                (line, Err(e.to_string()))
            }
        };
        match parsed {
            Ok(rec) => report.records.push(rec),
            Err(reason) => report.malformed.push(MalformedRow { line, reason }),
        }
    }
    if total == 0 {
        report.warnings.push("input contains no CSI rows".into());
        return Ok(report);
    }
    let fraction = report.malformed.len() as f64 / total as f64;
    if fraction > options.max_malformed_fraction {
        return Err(Error::Malformed {
            count: report.malformed.len(),
            total,
            limit_pct: options.max_malformed_fraction * 100.0,
            lines: report.malformed.iter().take(10).map(|m| m.line).collect(),
        });
    }
    if !report.malformed.is_empty() {
        report.warnings.push(format!(
            "skipped {} malformed rows of {total} (first at line {})",
            report.malformed.len(),
            report.malformed[0].line
        ));
    }
    Ok(report)
}

pub fn ingest_raw_csv(path: impl AsRef<Path>, options: &IngestOptions) -> Result<IngestReport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_raw_csv(std::io::BufReader::new(file), options)
}

fn check_time_order(records: &[RawCsiRecord]) -> Result<()> {
    if let Some(i) = records
        .windows(2)
        .position(|w| w[1].timestamp < w[0].timestamp)
    {
        return Err(Error::Precondition(format!(
            "records are not time-ordered at index {} ({} after {})",
            i + 1,
            records[i + 1].timestamp,
            records[i].timestamp
        )));
    }
    Ok(())
}

fn experimental_pair(records: &[RawCsiRecord], a: usize, b: usize, label: Label) -> LabeledPair {
    LabeledPair {
        csi_a: records[a].to_csi(),
        csi_b: records[b].to_csi(),
        label,
        provenance: Provenance::Experimental {
            mac: records[b].mac,
            index_a: a as u64,
            index_b: b as u64,
        },
    }
}

/// Pairs packets of a single transmitter by packet distance: `Δk =
/// delta_k_same` apart counts as the same device, `Δk = delta_k_diff` apart
/// as a different one. Returns the dataset plus any warnings.
pub fn build_experimental_pairs(
    records: &[RawCsiRecord],
    delta_k_same: usize,
    delta_k_diff: usize,
) -> Result<(Dataset, Vec<String>)> {
    if delta_k_same == 0 || delta_k_diff == 0 {
        return Err(Error::Usage("packet distances must be at least 1".into()));
    }
    if let Some(first) = records.first() {
        if let Some(other) = records.iter().find(|r| r.mac != first.mac) {
            return Err(Error::Precondition(format!(
                "records mix transmitters {} and {}; filter by MAC first",
                format_mac(&first.mac),
                format_mac(&other.mac)
            )));
        }
    }
    check_time_order(records)?;
    let n = records.len();
    let mut pairs = Vec::new();
    for k in 0..n.saturating_sub(delta_k_same) {
        pairs.push(experimental_pair(records, k, k + delta_k_same, Label::Same));
    }
    for k in 0..n.saturating_sub(delta_k_diff) {
        pairs.push(experimental_pair(
            records,
            k,
            k + delta_k_diff,
            Label::Different,
        ));
    }
    let mut warnings = Vec::new();
    if n <= delta_k_diff {
        warnings.push(format!(
            "{n} records are too few for Δk={delta_k_diff}; no different-device pairs produced"
        ));
    }
    let tag = format!("experimental;delta_k_same={delta_k_same};delta_k_diff={delta_k_diff}");
    Ok((Dataset::new(tag, pairs), warnings))
}

/// Pairs every packet with the most recent packet of the legitimate
/// transmitter, labelling by MAC ground truth.
pub fn build_mac_labeled_pairs(records: &[RawCsiRecord], legitimate: [u8; 6]) -> Result<Dataset> {
    check_time_order(records)?;
    let mut last_legit: Option<usize> = None;
    let mut pairs = Vec::new();
    for (k, rec) in records.iter().enumerate() {
        if let Some(prev) = last_legit {
            let label = if rec.mac == legitimate {
                Label::Same
            } else {
                Label::Different
            };
            pairs.push(experimental_pair(records, prev, k, label));
        }
        if rec.mac == legitimate {
            last_legit = Some(k);
        }
    }
    Ok(Dataset::new(
        format!("experimental;legitimate={}", format_mac(&legitimate)),
        pairs,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csi_field(seed: i32) -> String {
        (0..128)
            .map(|i| (((i * 7 + seed) % 200) - 100).to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn record(mac: [u8; 6], t: f64) -> RawCsiRecord {
        RawCsiRecord {
            mac,
            rssi_dbm: -40.0,
            noise_floor: -95.0,
            timestamp: t,
            subcarriers: vec![Complex::new(1, -1); 64],
        }
    }

    const BOB: [u8; 6] = [0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff];
    const MALLORY: [u8; 6] = [1, 2, 3, 4, 5, 6];

    #[test]
    fn empty_input_warns() {
        let r = parse_raw_csv("".as_bytes(), &IngestOptions::default()).unwrap();
        assert!(r.records.is_empty());
        assert_eq!(r.warnings.len(), 1);
        let r = parse_raw_csv(
            "mac,rssi,noise_floor,timestamp,csi\n".as_bytes(),
            &IngestOptions::default(),
        )
        .unwrap();
        assert!(r.records.is_empty());
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn short_row_is_malformed() {
        let mut text = String::from("mac,rssi,noise_floor,timestamp,csi\n");
        for i in 0..30 {
            text += &format!("aa:bb:cc:dd:ee:ff,-40,-95,{i}.0,{}\n", csi_field(i));
        }
        let short: Vec<String> = (0..126).map(|v| v.to_string()).collect();
        text += &format!("aa:bb:cc:dd:ee:ff,-40,-95,31.0,{}\n", short.join(" "));
        let r = parse_raw_csv(text.as_bytes(), &IngestOptions::default()).unwrap();
        assert_eq!(r.records.len(), 30);
        assert_eq!(r.malformed.len(), 1);
        assert_eq!(r.malformed[0].line, 32);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn too_many_malformed_rows_fail_with_lines() {
        let mut text = String::from("mac,rssi,noise_floor,timestamp,csi\n");
        text += &format!("aa:bb:cc:dd:ee:ff,-40,-95,0.0,{}\n", csi_field(0));
        text += "zz,-40,-95,1.0,1 2 3\n";
        let err = parse_raw_csv(text.as_bytes(), &IngestOptions::default()).unwrap_err();
        match err {
            Error::Malformed {
                count,
                total,
                lines,
                ..
            } => {
                assert_eq!((count, total), (1, 2));
                assert_eq!(lines, vec![3]);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn out_of_range_values_are_malformed() {
        let mut vals: Vec<String> = (0..128).map(|_| "0".to_string()).collect();
        vals[5] = "300".into();
        let text = format!(
            "mac,rssi,noise_floor,timestamp,csi\naa:bb:cc:dd:ee:ff,-40,-95,0.0,{}\n",
            vals.join(" ")
        );
        assert!(parse_raw_csv(text.as_bytes(), &IngestOptions::default()).is_err());
    }

    #[test]
    fn mac_round_trip() {
        assert_eq!(parse_mac("aa:bb:cc:dd:ee:ff").unwrap(), BOB);
        assert_eq!(format_mac(&BOB), "aa:bb:cc:dd:ee:ff");
        assert!(parse_mac("aa:bb").is_err());
        assert!(parse_mac("gg:bb:cc:dd:ee:ff").is_err());
    }

    #[test]
    fn delta_k_pair_counts() {
        let recs: Vec<_> = (0..101).map(|i| record(BOB, i as f64 * 0.01)).collect();
        let (ds, warnings) = build_experimental_pairs(&recs, 1, 100).unwrap();
        assert_eq!(ds.label_counts(), (100, 1));
        assert!(warnings.is_empty());

        let (ds, warnings) = build_experimental_pairs(&recs[..2], 1, 100).unwrap();
        assert_eq!(ds.label_counts(), (1, 0));
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn mixed_macs_rejected() {
        let recs = vec![record(BOB, 0.0), record(MALLORY, 0.1)];
        assert!(matches!(
            build_experimental_pairs(&recs, 1, 100),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn unordered_records_rejected() {
        let recs = vec![record(BOB, 1.0), record(BOB, 0.5)];
        assert!(build_experimental_pairs(&recs, 1, 100).is_err());
    }

    #[test]
    fn mac_ground_truth_labels() {
        let recs = vec![
            record(MALLORY, 0.0),
            record(BOB, 0.1),
            record(BOB, 0.2),
            record(MALLORY, 0.25),
            record(BOB, 0.3),
        ];
        let ds = build_mac_labeled_pairs(&recs, BOB).unwrap();
        let got: Vec<_> = ds
            .pairs
            .iter()
            .map(|p| match p.provenance {
                Provenance::Experimental {
                    index_a, index_b, ..
                } => (index_a, index_b, p.label),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(
            got,
            vec![
                (1, 2, Label::Same),
                (2, 3, Label::Different),
                (2, 4, Label::Same)
            ]
        );
    }

    #[test]
    fn occupied_extraction_uses_dft_index_map() {
        let mut rec = record(BOB, 0.0);
        for (i, v) in rec.subcarriers.iter_mut().enumerate() {
            *v = Complex::new(i as i8, -(i as i8));
        }
        let csi = rec.to_csi();
        assert_eq!(csi.len(), 52);
        assert_eq!(csi.estimates[0], Complex::new(38.0, -38.0));
        assert_eq!(csi.estimates[26], Complex::new(1.0, -1.0));
        assert_eq!(csi.meta.source, SourceTag::Mac(BOB));
    }
}
