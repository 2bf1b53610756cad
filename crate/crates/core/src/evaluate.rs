//! Evaluation statistics: average cosine distance, peak classification,
//! accuracy and F1, Welch's t-test and histogram summaries.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::change::ChangeSeries;
use crate::error::{Error, Result};
use crate::io::write_atomic;

/// Per-step mean distance over the complete series of a word set.
#[derive(Debug, Clone, PartialEq)]
pub struct AcdReport {
    pub means: Vec<f64>,
    pub n_words: usize,
}

pub fn acd(series: &[ChangeSeries]) -> Result<AcdReport> {
    let complete: Vec<Vec<f64>> = series.iter().filter_map(ChangeSeries::complete_values).collect();
    acd_values(&complete)
}

pub fn acd_values(series: &[Vec<f64>]) -> Result<AcdReport> {
    let first = series.first().ok_or_else(|| Error::Empty("no complete series".into()))?;
    let n = first.len();
    if let Some(s) = series.iter().find(|s| s.len() != n) {
        return Err(Error::ShapeMismatch(format!("series of length {} among length {n}", s.len())));
    }
    let mut means = vec![0.0; n];
    for s in series {
        for (m, x) in means.iter_mut().zip(s) {
            *m += x;
        }
    }
    let k = series.len() as f64;
    means.iter_mut().for_each(|m| *m /= k);
    Ok(AcdReport { means, n_words: series.len() })
}

/// `genuine − shuffled` per step.
pub fn true_change(genuine: &AcdReport, shuffled: &AcdReport) -> Result<Vec<f64>> {
    if genuine.means.len() != shuffled.means.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} steps vs {} steps",
            genuine.means.len(),
            shuffled.means.len()
        )));
    }
    Ok(genuine.means.iter().zip(&shuffled.means).map(|(g, s)| g - s).collect())
}

/// 1-based index of the maximum, earliest on ties.
pub fn peak_position(series: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in series.iter().enumerate() {
        if x > series[best] {
            best = i;
        }
    }
    best + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Changed,
    Stable,
}

/// Peaks strictly inside the series count as change.
pub fn classify_peak(pos: usize, series_len: usize) -> Label {
    if pos >= 2 && pos + 1 <= series_len {
        Label::Changed
    } else {
        Label::Stable
    }
}

/// Gold class of an evaluated word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordClass {
    Stable,
    ChangeUnrelated,
    ChangeRelated,
    /// Changed word with no relatedness annotation.
    Changed,
}

impl WordClass {
    pub const ALL: [WordClass; 4] = [
        WordClass::Stable,
        WordClass::ChangeUnrelated,
        WordClass::ChangeRelated,
        WordClass::Changed,
    ];

    pub fn gold_label(self) -> Label {
        match self {
            WordClass::Stable => Label::Stable,
            _ => Label::Changed,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WordClass::Stable => "stable",
            WordClass::ChangeUnrelated => "change_unrelated",
            WordClass::ChangeRelated => "change_related",
            WordClass::Changed => "changed",
        }
    }
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WordClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        WordClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown word class `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassAccuracy {
    pub class: WordClass,
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    /// Classes with at least one word, in [`WordClass::ALL`] order.
    pub per_class: Vec<ClassAccuracy>,
    /// Correct predictions over all words.
    pub mean_word_weighted: f64,
    /// Unweighted mean of the per-class accuracies.
    pub mean_class_unweighted: f64,
    pub f1: f64,
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
}

impl ClassificationReport {
    pub fn accuracy(&self, class: WordClass) -> Option<f64> {
        self.per_class.iter().find(|c| c.class == class).map(|c| c.accuracy)
    }

    pub fn total(&self) -> usize {
        self.per_class.iter().map(|c| c.n).sum()
    }
}

/// Scores predicted labels against gold classes, with change as the
/// positive class for F1.
pub fn score(items: &[(WordClass, Label)]) -> Result<ClassificationReport> {
    if items.is_empty() {
        return Err(Error::Empty("nothing to score".into()));
    }
    let mut per_class = Vec::new();
    for class in WordClass::ALL {
        let of: Vec<_> = items.iter().filter(|(c, _)| *c == class).collect();
        if of.is_empty() {
            continue;
        }
        let correct = of.iter().filter(|(c, p)| c.gold_label() == *p).count();
        per_class.push(ClassAccuracy {
            class,
            n: of.len(),
            correct,
            accuracy: correct as f64 / of.len() as f64,
        });
    }
    let count = |g: Label, p: Label| items.iter().filter(|(c, q)| c.gold_label() == g && *q == p).count();
    let tp = count(Label::Changed, Label::Changed);
    let fp = count(Label::Stable, Label::Changed);
    let fneg = count(Label::Changed, Label::Stable);
    let tn = count(Label::Stable, Label::Stable);
    let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fneg) as f64 };
    Ok(ClassificationReport {
        mean_word_weighted: (tp + tn) as f64 / items.len() as f64,
        mean_class_unweighted: per_class.iter().map(|c| c.accuracy).sum::<f64>() / per_class.len() as f64,
        per_class,
        f1,
        true_positive: tp,
        false_positive: fp,
        false_negative: fneg,
        true_negative: tn,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

/// Sample mean and unbiased variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = if xs.len() > 1 {
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, v)
}

/// Welch's unequal-variance t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Degenerate("each group needs at least two values".into()));
    }
    let (ma, va) = mean_variance(a);
    let (mb, vb) = mean_variance(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    if sa + sb == 0.0 {
        return Err(Error::Degenerate("both groups have zero variance".into()));
    }
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (a.len() - 1) as f64 + sb * sb / (b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Degenerate(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest { t, df, p })
}

/// Relative difference of change over stable, in whole percent.
pub fn diff_percent(changed: f64, stable: f64) -> Result<f64> {
    if stable == 0.0 {
        return Err(Error::Degenerate("stable average is zero".into()));
    }
    Ok(((changed - stable) / stable * 100.0).round())
}

pub const HIST_WIDTH: f64 = 0.02;
pub const HIST_BINS: usize = 100;

/// Counts over `[0, 2]` in bins of width 0.02; 2.0 falls in the last bin.
pub fn distance_histogram(values: &[f64]) -> Vec<usize> {
    let mut h = vec![0; HIST_BINS];
    for &x in values {
        let i = ((x / HIST_WIDTH).floor().max(0.0) as usize).min(HIST_BINS - 1);
        h[i] += 1;
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalHistogram {
    pub bins: (String, String),
    pub counts: Vec<usize>,
    pub mean: f64,
    pub n: usize,
}

/// Distance distribution per compared interval over complete series.
pub fn interval_histograms(series: &[ChangeSeries]) -> Result<Vec<IntervalHistogram>> {
    let complete: Vec<(&ChangeSeries, Vec<f64>)> = series
        .iter()
        .filter_map(|s| s.complete_values().map(|v| (s, v)))
        .collect();
    let (first, _) = complete.first().ok_or_else(|| Error::Empty("no complete series".into()))?;
    Ok(first
        .bins
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let col: Vec<f64> = complete.iter().map(|(_, v)| v[k]).collect();
            IntervalHistogram {
                bins: b.clone(),
                counts: distance_histogram(&col),
                mean: col.iter().sum::<f64>() / col.len() as f64,
                n: col.len(),
            }
        })
        .collect())
}

/// Bar heights for 1-based peak positions over a series of length `len`.
pub fn peak_histogram(peaks: &[usize], len: usize) -> Vec<usize> {
    let mut h = vec![0; len];
    for &p in peaks {
        if (1..=len).contains(&p) {
            h[p - 1] += 1;
        }
    }
    h
}

/// Flat `key = value` summary, one entry per line, in the given order.
pub fn write_summary(path: &Path, entries: &[(String, String)]) -> Result<()> {
    write_atomic(path, |w| {
        for (k, v) in entries {
            writeln!(w, "{k} = {v}")?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acd_examples() {
        let r = acd_values(&[vec![0.1, 0.3], vec![0.3, 0.1]]).unwrap();
        assert!(r.means.iter().all(|m| (m - 0.2).abs() < 1e-15));
        assert_eq!(acd_values(&[vec![0.4, 0.7]]).unwrap().means, vec![0.4, 0.7]);
        assert!(acd_values(&[]).is_err());
    }

    #[test]
    fn true_change_of_equal_reports_is_zero() {
        let r = AcdReport { means: vec![0.1, 0.2], n_words: 3 };
        assert_eq!(true_change(&r, &r).unwrap(), vec![0.0, 0.0]);
        let s = AcdReport { means: vec![0.1], n_words: 3 };
        assert!(true_change(&r, &s).is_err());
    }

    #[test]
    fn peaks() {
        assert_eq!(peak_position(&[0.1, 0.5, 0.2, 0.2, 0.1, 0.1]), 2);
        assert_eq!(peak_position(&[0.3, 0.3, 0.1, 0.1, 0.1, 0.1]), 1);
        assert_eq!(peak_position(&[0.2; 6]), 1);
        assert_eq!(classify_peak(2, 6), Label::Changed);
        assert_eq!(classify_peak(5, 6), Label::Changed);
        assert_eq!(classify_peak(6, 6), Label::Stable);
        assert_eq!(classify_peak(1, 6), Label::Stable);
    }

    #[test]
    fn perfect_score() {
        let r = score(&[
            (WordClass::Stable, Label::Stable),
            (WordClass::ChangeRelated, Label::Changed),
            (WordClass::ChangeUnrelated, Label::Changed),
        ])
        .unwrap();
        assert_eq!(r.mean_word_weighted, 1.0);
        assert_eq!(r.mean_class_unweighted, 1.0);
        assert_eq!(r.f1, 1.0);
    }

    #[test]
    fn welch_identical_groups() {
        let a = [1.0, 2.0, 3.0];
        let r = welch_t_test(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert!((r.p - 1.0).abs() < 1e-12);
        assert!(welch_t_test(&[1.0, 1.0], &[2.0, 2.0]).is_err());
        assert!(welch_t_test(&[1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn diff_percent_examples() {
        assert_eq!(diff_percent(0.31, 0.21).unwrap(), 48.0);
        assert_eq!(diff_percent(0.86, 0.71).unwrap(), 21.0);
        assert_eq!(diff_percent(0.5, 0.5).unwrap(), 0.0);
        assert!(diff_percent(0.5, 0.0).is_err());
    }

    #[test]
    fn histograms() {
        assert_eq!(peak_histogram(&[2, 2, 3], 6), vec![0, 2, 1, 0, 0, 0]);
        let h = distance_histogram(&[0.0, 0.019, 0.02, 2.0]);
        assert_eq!(h.len(), 100);
        assert_eq!((h[0], h[1], h[99]), (2, 1, 1));
    }

    #[test]
    fn class_round_trip() {
        for c in WordClass::ALL {
            assert_eq!(c.as_str().parse::<WordClass>().unwrap(), c);
        }
    }
}
