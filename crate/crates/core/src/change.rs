//! Cosine-distance change series and nearest-neighbour reports.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::peak_position;
use crate::io::{fmt_sig, read_lines, write_atomic};
use crate::pairgen::TemporalTagger;
use crate::ppmi::{align_intersect, sparse_dot, sparse_norm, SparseMatrix};
use crate::procrustes::{align_with, DistanceBasis};
use crate::sgns::DenseSpace;

/// `1 − u·v / (‖u‖‖v‖)`, clamped to `[0, 2]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { left: u.len(), right: v.len() });
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let d: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    distance_from(d, nu, nv)
}

fn distance_from(dot: f64, nu: f64, nv: f64) -> Result<f64> {
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((1.0 - dot / (nu * nv)).clamp(0.0, 2.0))
}

/// Row access shared by dense embeddings and sparse weighted matrices.
pub trait CosineRows {
    fn n_rows(&self) -> usize;
    fn row_name(&self, i: usize) -> &str;
    fn find_row(&self, token: &str) -> Option<usize>;
    fn row_norm(&self, i: usize) -> f64;
    /// Dot product of row `i` here with row `j` of `other`, which must share
    /// this space's column layout.
    fn cross_dot(&self, i: usize, other: &Self, j: usize) -> f64;
}

impl CosineRows for DenseSpace {
    fn n_rows(&self) -> usize {
        self.len()
    }
    fn row_name(&self, i: usize) -> &str {
        &self.tokens()[i]
    }
    fn find_row(&self, token: &str) -> Option<usize> {
        self.index_of(token)
    }
    fn row_norm(&self, i: usize) -> f64 {
        self.row(i).iter().map(|x| x * x).sum::<f64>().sqrt()
    }
    fn cross_dot(&self, i: usize, other: &Self, j: usize) -> f64 {
        self.row(i).iter().zip(other.row(j)).map(|(a, b)| a * b).sum()
    }
}

impl CosineRows for SparseMatrix {
    fn n_rows(&self) -> usize {
        SparseMatrix::n_rows(self)
    }
    fn row_name(&self, i: usize) -> &str {
        &self.row_names()[i]
    }
    fn find_row(&self, token: &str) -> Option<usize> {
        self.row_id(token)
    }
    fn row_norm(&self, i: usize) -> f64 {
        sparse_norm(self.row(i))
    }
    fn cross_dot(&self, i: usize, other: &Self, j: usize) -> f64 {
        sparse_dot(self.row(i), other.row(j))
    }
}

/// Distance between `token` in `a` and in `b`; `None` when it is missing
/// from either side or has an all-zero row.
pub fn token_distance<S: CosineRows>(a: &S, b: &S, ta: &str, tb: &str) -> Option<f64> {
    let i = a.find_row(ta)?;
    let j = b.find_row(tb)?;
    distance_from(a.cross_dot(i, b, j), a.row_norm(i), b.row_norm(j)).ok()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Space {
    Dense(DenseSpace),
    Sparse(SparseMatrix),
}

/// What a trained model hands to change measurement.
#[derive(Debug, Clone)]
pub enum ModelOutput {
    /// One joint space whose target rows carry time tags.
    Tagged { space: Space, tagger: TemporalTagger },
    /// One space per bin, to be aligned pairwise.
    PerBin { spaces: Vec<Space>, labels: Vec<String> },
}

impl ModelOutput {
    pub fn labels(&self) -> &[String] {
        match self {
            ModelOutput::Tagged { tagger, .. } => tagger.labels(),
            ModelOutput::PerBin { labels, .. } => labels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMode {
    #[default]
    Consecutive,
    RelativeToFirst,
}

impl ComparisonMode {
    /// Compared bin ordinals, earlier bin first.
    pub fn bin_pairs(self, n_bins: usize) -> Vec<(usize, usize)> {
        (1..n_bins)
            .map(|t| match self {
                ComparisonMode::Consecutive => (t - 1, t),
                ComparisonMode::RelativeToFirst => (0, t),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangeSeries {
    pub word: String,
    /// One entry per compared bin pair; `None` where the word could not be measured.
    pub values: Vec<Option<f64>>,
    pub mode: ComparisonMode,
    pub bins: Vec<(String, String)>,
}

impl ChangeSeries {
    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn complete_values(&self) -> Option<Vec<f64>> {
        self.values.iter().copied().collect()
    }
}

/// Change series for every target, aligning each compared pair of bins once.
pub fn change_report(
    model: &ModelOutput,
    targets: &[String],
    mode: ComparisonMode,
    basis: DistanceBasis,
) -> Result<Vec<ChangeSeries>> {
    let labels = model.labels();
    if labels.len() < 2 {
        return Err(Error::Config("change measurement needs at least two bins".into()));
    }
    let pairs = mode.bin_pairs(labels.len());
    // columns[k][w]: distance of target w at compared pair k.
    let columns: Vec<Vec<Option<f64>>> = match model {
        ModelOutput::Tagged { space, tagger } => pairs
            .par_iter()
            .map(|&(i, j)| {
                targets
                    .iter()
                    .map(|t| {
                        let (a, b) = (tagger.render(t, i), tagger.render(t, j));
                        match space {
                            Space::Dense(s) => token_distance(s, s, &a, &b),
                            Space::Sparse(s) => token_distance(s, s, &a, &b),
                        }
                    })
                    .collect()
            })
            .collect(),
        ModelOutput::PerBin { spaces, .. } => {
            if spaces.len() != labels.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} spaces for {} bins",
                    spaces.len(),
                    labels.len()
                )));
            }
            pairs
                .par_iter()
                .map(|&(i, j)| -> Result<Vec<Option<f64>>> {
                    match (&spaces[i], &spaces[j]) {
                        (Space::Dense(a), Space::Dense(b)) => {
                            let r = align_with(a, b, basis)?;
                            Ok(targets
                                .iter()
                                .map(|t| token_distance(&r.a_prepared, &r.b_mapped, t, t))
                                .collect())
                        }
                        (Space::Sparse(a), Space::Sparse(b)) => {
                            let (a, b) = align_intersect(a, b)?;
                            Ok(targets.iter().map(|t| token_distance(&a, &b, t, t)).collect())
                        }
                        _ => Err(Error::ShapeMismatch("mixed dense and sparse spaces".into())),
                    }
                })
                .collect::<Result<_>>()?
        }
    };
    let bins: Vec<(String, String)> = pairs
        .iter()
        .map(|&(i, j)| (labels[i].clone(), labels[j].clone()))
        .collect();
    Ok(targets
        .iter()
        .enumerate()
        .map(|(w, t)| ChangeSeries {
            word: t.clone(),
            values: columns.iter().map(|c| c[w]).collect(),
            mode,
            bins: bins.clone(),
        })
        .collect())
}

/// Single-target convenience wrapper over [`change_report`].
pub fn change_series(
    model: &ModelOutput,
    target: &str,
    mode: ComparisonMode,
    basis: DistanceBasis,
) -> Result<ChangeSeries> {
    let mut v = change_report(model, &[target.to_string()], mode, basis)?;
    Ok(v.remove(0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub query: String,
    pub neighbors: Vec<(String, f64)>,
}

/// Top `n` rows by cosine similarity to `query`, excluding the query itself.
/// Ties go to the lexicographically smaller token; all-zero rows are skipped.
pub fn nearest_neighbors<S: CosineRows + Sync>(space: &S, query: &str, n: usize) -> Result<NeighborList> {
    let q = space
        .find_row(query)
        .ok_or_else(|| Error::UnknownToken(query.to_string()))?;
    let qn = space.row_norm(q);
    if qn == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut sims: Vec<(&str, f64)> = (0..space.n_rows())
        .into_par_iter()
        .filter(|&i| i != q)
        .filter_map(|i| {
            let norm = space.row_norm(i);
            (norm > 0.0).then(|| (space.row_name(i), space.cross_dot(q, space, i) / (qn * norm)))
        })
        .collect();
    sims.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    sims.truncate(n);
    Ok(NeighborList {
        query: query.to_string(),
        neighbors: sims.into_iter().map(|(t, s)| (t.to_string(), s)).collect(),
    })
}

pub fn nearest_neighbors_in(space: &Space, query: &str, n: usize) -> Result<NeighborList> {
    match space {
        Space::Dense(s) => nearest_neighbors(s, query, n),
        Space::Sparse(s) => nearest_neighbors(s, query, n),
    }
}

/// `query,rank,neighbor,similarity`.
pub fn write_neighbor_report(path: &Path, lists: &[NeighborList]) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "query,rank,neighbor,similarity")?;
        for l in lists {
            for (r, (t, s)) in l.neighbors.iter().enumerate() {
                writeln!(w, "{},{},{},{}", l.query, r + 1, t, fmt_sig(*s, 8))?;
            }
        }
        Ok(())
    })
}

/// One row of a change report.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeRow {
    pub word: String,
    pub class: String,
    pub values: Vec<Option<f64>>,
}

impl ChangeRow {
    pub fn from_series(s: &ChangeSeries, class: impl Into<String>) -> Self {
        ChangeRow {
            word: s.word.clone(),
            class: class.into(),
            values: s.values.clone(),
        }
    }

    pub fn complete_values(&self) -> Option<Vec<f64>> {
        self.values.iter().copied().collect()
    }
}

/// `word,class,v1,…,v{n-1},peak,complete`; missing values and the peak of an
/// incomplete row are left empty.
pub fn write_change_report(path: &Path, rows: &[ChangeRow]) -> Result<()> {
    let n = rows.first().map_or(0, |r| r.values.len());
    if let Some(r) = rows.iter().find(|r| r.values.len() != n) {
        return Err(Error::ShapeMismatch(format!("row `{}` has {} values, expected {n}", r.word, r.values.len())));
    }
    write_atomic(path, |w| {
        write!(w, "word,class")?;
        for i in 1..=n {
            write!(w, ",v{i}")?;
        }
        writeln!(w, ",peak,complete")?;
        for r in rows {
            write!(w, "{},{}", r.word, r.class)?;
            for v in &r.values {
                match v {
                    Some(x) => write!(w, ",{}", fmt_sig(*x, 10))?,
                    None => write!(w, ",")?,
                }
            }
            match r.complete_values() {
                Some(v) if !v.is_empty() => writeln!(w, ",{},true", peak_position(&v))?,
                _ => writeln!(w, ",,false")?,
            }
        }
        Ok(())
    })
}

pub fn read_change_report(path: &Path) -> Result<Vec<ChangeRow>> {
    let lines = read_lines(path)?;
    let mut it = lines.into_iter();
    let (_, header) = it.next().ok_or_else(|| Error::parse(path, 1, "missing header"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[0] != "word" || cols[1] != "class" || cols[cols.len() - 2] != "peak" || cols[cols.len() - 1] != "complete" {
        return Err(Error::parse(path, 1, "expected header word,class,v1..,peak,complete"));
    }
    let n = cols.len() - 4;
    let mut rows = Vec::new();
    for (ln, line) in it {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(Error::parse(path, ln, format!("expected {} fields", cols.len())));
        }
        let values = f[2..2 + n]
            .iter()
            .map(|x| {
                if x.is_empty() {
                    Ok(None)
                } else {
                    x.parse().map(Some).map_err(|_| Error::parse(path, ln, "bad distance"))
                }
            })
            .collect::<Result<_>>()?;
        rows.push(ChangeRow { word: f[0].into(), class: f[1].into(), values });
    }
    Ok(rows)
}

/// Index from word to row, for joining reports.
pub fn index_rows(rows: &[ChangeRow]) -> HashMap<&str, &ChangeRow> {
    rows.iter().map(|r| (r.word.as_str(), r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        assert!(cosine_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap() < 1e-15);
        assert!((cosine_distance(&[1.0, 0.0], &[0.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine_distance(&[1.0, -2.0], &[-1.0, 2.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector)));
    }

    fn tagged(rows: Vec<(&str, Vec<f64>)>, labels: &[&str]) -> ModelOutput {
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        ModelOutput::Tagged {
            space: Space::Dense(DenseSpace::from_rows(rows).unwrap()),
            tagger: TemporalTagger::with_separator("_", &labels),
        }
    }

    #[test]
    fn tagged_series_lengths_and_modes() {
        let m = tagged(
            vec![
                ("a_t1", vec![1.0, 0.0]),
                ("a_t2", vec![0.0, 1.0]),
                ("a_t3", vec![-1.0, 0.0]),
                ("x", vec![1.0, 1.0]),
            ],
            &["t1", "t2", "t3"],
        );
        let s = change_series(&m, "a", ComparisonMode::Consecutive, DistanceBasis::Centered).unwrap();
        assert_eq!(s.values.len(), 2);
        assert!((s.values[0].unwrap() - 1.0).abs() < 1e-12);
        assert!((s.values[1].unwrap() - 1.0).abs() < 1e-12);
        let s = change_series(&m, "a", ComparisonMode::RelativeToFirst, DistanceBasis::Centered).unwrap();
        assert!((s.values[1].unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(s.bins[1], ("t1".to_string(), "t3".to_string()));
    }

    #[test]
    fn missing_bin_marks_incomplete() {
        let m = tagged(
            vec![("a_t1", vec![1.0, 0.0]), ("a_t3", vec![0.0, 1.0]), ("b_t1", vec![0.0, 0.0])],
            &["t1", "t2", "t3"],
        );
        let s = change_report(&m, &["a".into(), "b".into()], ComparisonMode::Consecutive, DistanceBasis::Centered).unwrap();
        assert_eq!(s[0].values, vec![None, None]);
        assert!(!s[0].is_complete());
        assert!(!s[1].is_complete());
    }

    #[test]
    fn neighbors_rank_duplicates_first_and_break_ties() {
        let sp = DenseSpace::from_rows(vec![
            ("q", vec![1.0, 0.0]),
            ("dup", vec![2.0, 0.0]),
            ("b", vec![0.0, 1.0]),
            ("a", vec![0.0, 1.0]),
            ("z", vec![0.0, 0.0]),
        ])
        .unwrap();
        let l = nearest_neighbors(&sp, "q", 10).unwrap();
        assert_eq!(l.neighbors.len(), 3);
        assert_eq!(l.neighbors[0].0, "dup");
        assert!((l.neighbors[0].1 - 1.0).abs() < 1e-15);
        assert_eq!(l.neighbors[1].0, "a");
        assert_eq!(l.neighbors[2].0, "b");
        assert!(matches!(nearest_neighbors(&sp, "nope", 3), Err(Error::UnknownToken(_))));
    }

    #[test]
    fn sparse_neighbors() {
        let m = SparseMatrix::from_triplets([("a", "x", 1.0), ("b", "x", 2.0), ("c", "y", 1.0)]);
        let l = nearest_neighbors(&m, "a", 5).unwrap();
        assert_eq!(l.neighbors[0], ("b".to_string(), 1.0));
        assert_eq!(l.neighbors[1].1, 0.0);
    }

    #[test]
    fn report_round_trip() {
        let rows = vec![
            ChangeRow { word: "a".into(), class: "stable".into(), values: vec![Some(0.1), Some(0.5), Some(0.2)] },
            ChangeRow { word: "b".into(), class: "change_related".into(), values: vec![Some(0.1), None, Some(0.2)] },
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        write_change_report(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "word,class,v1,v2,v3,peak,complete");
        assert!(lines[1].ends_with(",2,true"));
        assert!(lines[2].ends_with(",,false"));
        assert_eq!(read_change_report(&p).unwrap(), rows);
    }
}
