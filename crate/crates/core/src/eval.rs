//! Detectors, thresholds and ROC/AUC metrics.
//!
//! Both detectors emit a suspicion score where larger means "more likely a
//! different transmitter", and [`decide`] flags a pair when the score is
//! strictly above the threshold.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;

use crate::dataset::{Dataset, Label, LabeledPair, Provenance};
use crate::models::SiameseWeights;
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredSample<T> {
    pub score: T,
    pub label: Label,
    pub meta: Provenance,
}

impl<T> ScoredSample<T> {
    pub fn new(score: T, label: Label) -> Self {
        Self {
            score,
            label,
            meta: Provenance::Unknown,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pearson<T> {
    pub r: T,
    /// Set when either input is constant; `r` is then defined as zero.
    pub degenerate: bool,
}

/// Sample Pearson correlation coefficient.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<Pearson<T>> {
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "length mismatch {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::domain("pearson needs at least two samples"));
    }
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Ok(Pearson {
            r: T::zero(),
            degenerate: true,
        });
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    if !r.is_finite() {
        return Err(Error::Numeric("pearson coefficient is not finite".into()));
    }
    Ok(Pearson {
        r: r.max(-T::one()).min(T::one()),
        degenerate: false,
    })
}

/// `1 − r` over the magnitude vectors, in `[0, 2]`.
pub fn correlation_score<T: Scalar>(mag_a: &[T], mag_b: &[T]) -> Result<T> {
    Ok(T::one() - pearson(mag_a, mag_b)?.r)
}

pub fn pair_correlation_score(pair: &LabeledPair) -> Result<f64> {
    let a: Vec<f64> = pair.csi_a.magnitudes().into_iter().map(f64::from).collect();
    let b: Vec<f64> = pair.csi_b.magnitudes().into_iter().map(f64::from).collect();
    correlation_score(&a, &b)
}

/// 1 (rogue) iff `score > threshold`.
pub fn decide<T: PartialOrd>(score: T, threshold: T) -> u8 {
    u8::from(score > threshold)
}

/// Which detector scores a dataset.
#[derive(Clone, Copy, Debug)]
pub enum Detector<'a> {
    Correlation,
    Siamese(&'a SiameseWeights<f32>),
}

/// Scores every pair, preserving dataset order.
pub fn score_dataset(detector: Detector<'_>, dataset: &Dataset) -> Result<Vec<ScoredSample<f64>>> {
    dataset
        .pairs
        .par_iter()
        .map(|p| {
            let score = match detector {
                Detector::Correlation => pair_correlation_score(p)?,
                Detector::Siamese(w) => {
                    f64::from(w.score(&p.csi_a.magnitudes(), &p.csi_b.magnitudes())?)
                }
            };
            Ok(ScoredSample {
                score,
                label: p.label,
                meta: p.provenance,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve<T> {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(T, T)>,
    /// `thresholds[i]` produces `points[i]` under `score > threshold`. The
    /// last entry is negative infinity.
    pub thresholds: Vec<T>,
    pub positives: usize,
    pub negatives: usize,
}

fn check_samples<T: Scalar>(samples: &[ScoredSample<T>]) -> Result<(usize, usize)> {
    if let Some(i) = samples.iter().position(|s| !s.score.is_finite()) {
        return Err(Error::domain(format!("sample {i} has a non-finite score")));
    }
    let pos = samples
        .iter()
        .filter(|s| s.label == Label::Different)
        .count();
    let neg = samples.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Usage(format!(
            "ROC needs both labels ({pos} positive, {neg} negative samples)"
        )));
    }
    Ok((pos, neg))
}

fn sorted_desc<T: Scalar>(samples: &[ScoredSample<T>]) -> Vec<(T, Label)> {
    let mut v: Vec<(T, Label)> = samples.iter().map(|s| (s.score, s.label)).collect();
    v.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    v
}

pub fn roc_curve<T: Scalar>(samples: &[ScoredSample<T>]) -> Result<RocCurve<T>> {
    let (pos, neg) = check_samples(samples)?;
    let sorted = sorted_desc(samples);
    let (np, nn) = (T::from_usize_lossy(pos), T::from_usize_lossy(neg));
    let mut points = vec![(T::zero(), T::zero())];
    let mut thresholds = vec![sorted[0].0];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            match sorted[i].1 {
                Label::Different => tp += 1,
                Label::Same => fp += 1,
            }
            i += 1;
        }
        let next = if i < sorted.len() {
            sorted[i].0
        } else {
            T::neg_infinity()
        };
        points.push((T::from_usize_lossy(fp) / nn, T::from_usize_lossy(tp) / np));
        thresholds.push(next);
    }
    // exact endpoint regardless of rounding
    *points.last_mut().expect("non-empty") = (T::one(), T::one());
    Ok(RocCurve {
        points,
        thresholds,
        positives: pos,
        negatives: neg,
    })
}

impl<T: Scalar> RocCurve<T> {
    /// Trapezoidal area under the curve.
    pub fn auc(&self) -> T {
        let half = T::lit(0.5);
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) * half)
            .sum()
    }
}

pub fn auc<T: Scalar>(curve: &RocCurve<T>) -> T {
    curve.auc()
}

pub fn auc_from_samples<T: Scalar>(samples: &[ScoredSample<T>]) -> Result<T> {
    Ok(roc_curve(samples)?.auc())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    /// Highest threshold whose TPR reaches the value.
    Tpr(f64),
    /// Lowest threshold whose FPR stays within the value.
    Fpr(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdChoice<T> {
    pub threshold: T,
    pub tpr: T,
    pub fpr: T,
}

/// Picks an operating threshold. Candidates are midpoints between
/// consecutive distinct scores plus one point beyond each end, so the
/// returned threshold never coincides with a sample score.
pub fn threshold_for_target<T: Scalar>(
    samples: &[ScoredSample<T>],
    target: Target,
) -> Result<ThresholdChoice<T>> {
    let (pos, neg) = check_samples(samples)?;
    let value = match target {
        Target::Tpr(v) | Target::Fpr(v) => v,
    };
    if !(0.0..=1.0).contains(&value) {
        let nearest = value.clamp(0.0, 1.0);
        return Err(Error::domain(format!(
            "target {target:?} is unachievable; nearest achievable value is {nearest}"
        )));
    }
    let sorted = sorted_desc(samples);
    let mut distinct: Vec<T> = sorted.iter().map(|s| s.0).collect();
    distinct.dedup();
    // candidates in descending order
    let mut candidates = vec![distinct[0] + T::one()];
    candidates.extend(distinct.windows(2).map(|w| (w[0] + w[1]) * T::lit(0.5)));
    candidates.push(*distinct.last().expect("non-empty") - T::one());

    let (np, nn) = (T::from_usize_lossy(pos), T::from_usize_lossy(neg));
    let rates = |t: T| {
        let (mut tp, mut fp) = (0usize, 0usize);
        for (s, l) in &sorted {
            if *s > t {
                match l {
                    Label::Different => tp += 1,
                    Label::Same => fp += 1,
                }
            }
        }
        (T::from_usize_lossy(tp) / np, T::from_usize_lossy(fp) / nn)
    };
    let goal = T::lit(value);
    let pick = match target {
        // TPR grows as the threshold falls: first hit scanning downwards
        Target::Tpr(_) => candidates.iter().copied().find(|&t| rates(t).0 >= goal),
        // FPR grows as the threshold falls: last candidate still within budget
        Target::Fpr(_) => candidates
            .iter()
            .copied()
            .take_while(|&t| rates(t).1 <= goal)
            .last(),
    };
    let threshold =
        pick.ok_or_else(|| Error::domain(format!("target {target:?} is unachievable")))?;
    let (tpr, fpr) = rates(threshold);
    Ok(ThresholdChoice {
        threshold,
        tpr,
        fpr,
    })
}

/// Summary appended to a ROC report.
#[derive(Clone, Debug, PartialEq)]
pub struct RocSummary {
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
    pub setting: String,
}

/// Writes `threshold,fpr,tpr` rows followed by a
/// `# auc=<a> positives=<p> negatives=<n> setting=<tag>` line.
pub fn write_roc_csv<T: Scalar, W: Write>(
    curve: &RocCurve<T>,
    setting: &str,
    mut out: W,
) -> std::io::Result<RocSummary> {
    writeln!(out, "threshold,fpr,tpr")?;
    for (t, (fpr, tpr)) in curve.thresholds.iter().zip(&curve.points) {
        writeln!(out, "{},{},{}", t.as_f64(), fpr.as_f64(), tpr.as_f64())?;
    }
    let summary = RocSummary {
        auc: curve.auc().as_f64(),
        positives: curve.positives,
        negatives: curve.negatives,
        setting: setting.to_owned(),
    };
    writeln!(
        out,
        "# auc={} positives={} negatives={} setting={}",
        summary.auc, summary.positives, summary.negatives, summary.setting
    )?;
    Ok(summary)
}
