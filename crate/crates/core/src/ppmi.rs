//! Sparse co-occurrence matrices with smoothed, shifted PPMI weighting and
//! column-intersection alignment.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_sig, read_lines, write_atomic};
use crate::pairgen::PairStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpmiConfig {
    /// Context-distribution smoothing exponent.
    pub cds_alpha: f64,
    /// Shift: `ln(shift_k)` is subtracted before clipping at zero.
    pub shift_k: f64,
}

impl Default for PpmiConfig {
    fn default() -> Self {
        PpmiConfig {
            cds_alpha: 0.75,
            shift_k: 5.0,
        }
    }
}

impl PpmiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cds_alpha > 0.0 && self.cds_alpha <= 1.0) {
            return Err(Error::Config("cds_alpha must lie in (0, 1]".into()));
        }
        if !(self.shift_k >= 1.0) {
            return Err(Error::Config("shift_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Row-compressed sparse matrix with named rows and columns.
///
/// Row and column names are sorted lexicographically; every row holds its
/// non-zero cells sorted by column id.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: Vec<String>,
    cols: Vec<String>,
    row_index: HashMap<String, usize>,
    cells: Vec<Vec<(u32, f64)>>,
}

impl SparseMatrix {
    fn new(rows: Vec<String>, cols: Vec<String>, cells: Vec<Vec<(u32, f64)>>) -> Self {
        let row_index = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), i))
            .collect();
        SparseMatrix {
            rows,
            cols,
            row_index,
            cells,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn nnz(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    pub fn row_names(&self) -> &[String] {
        &self.rows
    }

    pub fn col_names(&self) -> &[String] {
        &self.cols
    }

    pub fn row_id(&self, token: &str) -> Option<usize> {
        self.row_index.get(token).copied()
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.cells[i]
    }

    pub fn row_by_name(&self, token: &str) -> Option<&[(u32, f64)]> {
        self.row_id(token).map(|i| self.row(i))
    }

    pub fn get(&self, row: &str, col: &str) -> f64 {
        let Some(r) = self.row_id(row) else { return 0.0 };
        let Ok(c) = self.cols.binary_search_by(|x| x.as_str().cmp(col)) else {
            return 0.0;
        };
        self.cells[r]
            .binary_search_by_key(&(c as u32), |&(k, _)| k)
            .map_or(0.0, |i| self.cells[r][i].1)
    }

    pub fn row_marginals(&self) -> Vec<f64> {
        self.cells
            .iter()
            .map(|r| r.iter().map(|&(_, v)| v).sum())
            .collect()
    }

    pub fn col_marginals(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols.len()];
        for row in &self.cells {
            for &(c, v) in row {
                m[c as usize] += v;
            }
        }
        m
    }

    /// Iterates over `(row, col, value)` in lexicographic order.
    pub fn triplets(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.cells.iter().enumerate().flat_map(move |(r, row)| {
            row.iter()
                .map(move |&(c, v)| (self.rows[r].as_str(), self.cols[c as usize].as_str(), v))
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            writeln!(w, "#rows {}", self.rows.len())?;
            writeln!(w, "#cols {}", self.cols.len())?;
            writeln!(w, "#row_tokens\t{}", self.rows.join("\t"))?;
            writeln!(w, "#col_tokens\t{}", self.cols.join("\t"))?;
            for (r, c, v) in self.triplets() {
                writeln!(w, "{r}\t{c}\t{}", fmt_sig(v, 12))?;
            }
            Ok(())
        })
    }

    /// Reads a matrix file written by [`SparseMatrix::write`]. Without the
    /// `#row_tokens`/`#col_tokens` lines, only rows and columns that have a
    /// stored cell are recovered.
    pub fn read(path: &Path) -> Result<Self> {
        let mut rows: Option<Vec<String>> = None;
        let mut cols: Option<Vec<String>> = None;
        let mut triplets = Vec::new();
        for (n, line) in read_lines(path)? {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut f = rest.split('\t');
                let key = f.next();
                let names = f.filter(|x| !x.is_empty()).map(String::from).collect();
                match key {
                    Some("row_tokens") => rows = Some(names),
                    Some("col_tokens") => cols = Some(names),
                    _ => {}
                }
                continue;
            }
            let mut f = line.split('\t');
            let (Some(r), Some(c), Some(v), None) = (f.next(), f.next(), f.next(), f.next())
            else {
                return Err(Error::parse(path, n, "expected row<TAB>col<TAB>value"));
            };
            let v: f64 = v
                .parse()
                .map_err(|_| Error::parse(path, n, "value is not a number"))?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::parse(path, n, "values must be finite and non-negative"));
            }
            triplets.push((n, r.to_string(), c.to_string(), v));
        }
        let (Some(rows), Some(cols)) = (rows, cols) else {
            return Ok(Self::from_triplets(triplets.into_iter().map(|(_, r, c, v)| (r, c, v))));
        };
        let ridx: HashMap<&str, usize> = rows.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
        let cidx: HashMap<&str, u32> = cols.iter().enumerate().map(|(i, c)| (c.as_str(), i as u32)).collect();
        if ridx.len() != rows.len() || cidx.len() != cols.len() {
            return Err(Error::parse(path, 1, "duplicate row or column name"));
        }
        let mut cells: Vec<Vec<(u32, f64)>> = vec![Vec::new(); rows.len()];
        for (n, r, c, v) in &triplets {
            let (Some(&ri), Some(&ci)) = (ridx.get(r.as_str()), cidx.get(c.as_str())) else {
                return Err(Error::parse(path, *n, "cell names an undeclared row or column"));
            };
            if *v != 0.0 {
                cells[ri].push((ci, *v));
            }
        }
        for row in &mut cells {
            row.sort_by_key(|&(c, _)| c);
        }
        Ok(Self::new(rows, cols, cells))
    }

    /// Builds a matrix from named cells; duplicates are summed and zeros dropped.
    pub fn from_triplets<I, R, C>(triplets: I) -> Self
    where
        I: IntoIterator<Item = (R, C, f64)>,
        R: AsRef<str>,
        C: AsRef<str>,
    {
        let triplets: Vec<(String, String, f64)> = triplets
            .into_iter()
            .map(|(r, c, v)| (r.as_ref().to_string(), c.as_ref().to_string(), v))
            .collect();
        let rows: Vec<String> = triplets
            .iter()
            .map(|t| t.0.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let cols: Vec<String> = triplets
            .iter()
            .map(|t| t.1.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let ridx: HashMap<&str, usize> = rows.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
        let cidx: HashMap<&str, u32> = cols
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i as u32))
            .collect();
        let mut cells: Vec<Vec<(u32, f64)>> = vec![Vec::new(); rows.len()];
        for (r, c, v) in &triplets {
            cells[ridx[r.as_str()]].push((cidx[c.as_str()], *v));
        }
        for row in &mut cells {
            row.sort_by_key(|&(c, _)| c);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            row.retain(|&(_, v)| v != 0.0);
        }
        Self::new(rows, cols, cells)
    }
}

/// Raw co-occurrence counts: cell (w, c) holds #(w, c).
pub fn count_matrix(pairs: &PairStream) -> Result<SparseMatrix> {
    if pairs.is_empty() {
        return Err(Error::Empty("pair stream has no pairs".into()));
    }
    let mut cells: Vec<Vec<(u32, f64)>> = vec![Vec::new(); pairs.words().len()];
    // Records are sorted by (word, context), so each row comes out sorted.
    for r in pairs.records() {
        cells[r.word as usize].push((r.context, r.count as f64));
    }
    Ok(SparseMatrix::new(
        pairs.words().to_vec(),
        pairs.contexts().to_vec(),
        cells,
    ))
}

/// Applies `max(0, ln(#(w,c)·Σα / (#(w)·#(c)^α)) − ln k)` to every stored
/// cell, where Σα sums `#(c')^α` over all columns. Cells that end up at zero
/// are dropped; the row and column indices are kept.
pub fn ppmi_weight(m: &SparseMatrix, cfg: &PpmiConfig) -> Result<SparseMatrix> {
    cfg.validate()?;
    let row_sums = m.row_marginals();
    let col_smoothed: Vec<f64> = m
        .col_marginals()
        .into_iter()
        .map(|c| c.powf(cfg.cds_alpha))
        .collect();
    let total_smoothed: f64 = col_smoothed.iter().sum();
    let shift = cfg.shift_k.ln();
    let cells = m
        .cells
        .iter()
        .zip(&row_sums)
        .map(|(row, &rw)| {
            row.iter()
                .filter_map(|&(c, n)| {
                    let pmi = (n * total_smoothed / (rw * col_smoothed[c as usize])).ln();
                    let v = pmi - shift;
                    (v > 0.0 && v.is_finite()).then_some((c, v))
                })
                .collect()
        })
        .collect();
    Ok(SparseMatrix::new(m.rows.clone(), m.cols.clone(), cells))
}

/// Restricts both matrices to their shared columns, re-indexed identically
/// (lexicographic order). Rows are left as they are.
pub fn align_intersect(a: &SparseMatrix, b: &SparseMatrix) -> Result<(SparseMatrix, SparseMatrix)> {
    let b_cols: BTreeSet<&str> = b.cols.iter().map(String::as_str).collect();
    let shared: Vec<String> = a
        .cols
        .iter()
        .filter(|c| b_cols.contains(c.as_str()))
        .cloned()
        .collect();
    if shared.is_empty() {
        return Err(Error::Empty("matrices share no columns".into()));
    }
    let restrict = |m: &SparseMatrix| -> SparseMatrix {
        // Both column lists are sorted, so shared ids follow a merge walk.
        let mut remap: Vec<Option<u32>> = vec![None; m.cols.len()];
        let mut j = 0;
        for (i, c) in m.cols.iter().enumerate() {
            while j < shared.len() && shared[j] < *c {
                j += 1;
            }
            if j < shared.len() && shared[j] == *c {
                remap[i] = Some(j as u32);
            }
        }
        let cells = m
            .cells
            .iter()
            .map(|row| {
                row.iter()
                    .filter_map(|&(c, v)| remap[c as usize].map(|nc| (nc, v)))
                    .collect()
            })
            .collect();
        SparseMatrix::new(m.rows.clone(), shared.clone(), cells)
    };
    Ok((restrict(a), restrict(b)))
}

pub(crate) fn sparse_dot(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

pub(crate) fn sparse_norm(a: &[(u32, f64)]) -> f64 {
    a.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
}
