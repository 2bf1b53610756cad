//! Orthogonal Procrustes alignment of one dense space onto another.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_sig, read_lines, write_atomic};
use crate::sgns::DenseSpace;

/// Which representation downstream distances are taken on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceBasis {
    /// Length-normalised and column-centred rows.
    #[default]
    Centered,
    /// Length-normalised rows only; the mapping is still fitted on centred rows.
    Uncentered,
}

#[derive(Debug, Clone)]
pub struct AlignmentResult {
    pub w: DMatrix<f64>,
    pub shared_vocab: Vec<String>,
    pub a_prepared: DenseSpace,
    pub b_mapped: DenseSpace,
}

impl AlignmentResult {
    pub fn write_w(&self, path: &Path) -> Result<()> {
        write_matrix(path, &self.w)
    }

    /// Squared distance between the prepared rows of A and the mapped rows of B.
    pub fn mapped_residual(&self) -> f64 {
        (0..self.a_prepared.len())
            .map(|i| {
                let (a, b) = (self.a_prepared.row(i), self.b_mapped.row(i));
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
            })
            .sum()
    }

    pub fn write_shared_vocab(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            for t in &self.shared_vocab {
                writeln!(w, "{t}")?;
            }
            Ok(())
        })
    }
}

/// Gathers the rows of `tokens` into a matrix, scaled to unit length and,
/// if `center`, with the column means removed.
pub fn prepare(space: &DenseSpace, tokens: &[String], center: bool) -> Result<DMatrix<f64>> {
    let d = space.dim();
    let mut m = DMatrix::zeros(tokens.len(), d);
    for (r, t) in tokens.iter().enumerate() {
        let v = space.vector(t).ok_or_else(|| Error::UnknownToken(t.clone()))?;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Degenerate(format!("zero vector for `{t}`")));
        }
        for (c, x) in v.iter().enumerate() {
            m[(r, c)] = x / norm;
        }
    }
    if center {
        for c in 0..d {
            let mean = m.column(c).mean();
            m.column_mut(c).add_scalar_mut(-mean);
        }
    }
    Ok(m)
}

/// Orthogonal `W` minimising `‖B·W − A‖²`.
pub fn orthogonal_map(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let m = b.transpose() * a;
    let svd = m
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Svd("did not converge".into()))?;
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => Ok(u * v_t),
        _ => Err(Error::Svd("singular vectors unavailable".into())),
    }
}

/// Squared Frobenius norm of `B·W − A`.
pub fn residual(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    (b * w - a).norm_squared()
}

/// Aligns `b` onto `a` over their shared tokens.
pub fn align(a: &DenseSpace, b: &DenseSpace) -> Result<AlignmentResult> {
    align_with(a, b, DistanceBasis::Centered)
}

pub fn align_with(a: &DenseSpace, b: &DenseSpace, basis: DistanceBasis) -> Result<AlignmentResult> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let mut shared: Vec<String> = a
        .tokens()
        .iter()
        .filter(|t| b.index_of(t).is_some())
        .cloned()
        .collect();
    shared.sort();
    if shared.is_empty() {
        return Err(Error::Empty("spaces share no tokens".into()));
    }
    let a_prep = prepare(a, &shared, true)?;
    let b_prep = prepare(b, &shared, true)?;
    let w = orthogonal_map(&a_prep, &b_prep)?;
    let (a_out, b_out) = match basis {
        DistanceBasis::Centered => (a_prep, b_prep * &w),
        DistanceBasis::Uncentered => (prepare(a, &shared, false)?, prepare(b, &shared, false)? * &w),
    };
    Ok(AlignmentResult {
        a_prepared: to_space(&shared, &a_out)?,
        b_mapped: to_space(&shared, &b_out)?,
        shared_vocab: shared,
        w,
    })
}

fn to_space(tokens: &[String], m: &DMatrix<f64>) -> Result<DenseSpace> {
    let mut data = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        data.extend(m.row(r).iter());
    }
    DenseSpace::new(tokens.to_vec(), m.ncols(), data)
}

/// One row per line, space-separated, 17 significant digits.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_atomic(path, |w| {
        for r in 0..m.nrows() {
            let row: Vec<String> = m.row(r).iter().map(|&x| fmt_sig(x, 17)).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    })
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, line) in read_lines(path)? {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| Error::parse(path, n, "bad matrix entry")))
            .collect::<Result<Vec<f64>>>()?;
        if rows.first().is_some_and(|r| r.len() != row.len()) {
            return Err(Error::parse(path, n, "ragged matrix row"));
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}
