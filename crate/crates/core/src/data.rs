//! Dense row-major observation matrix.

use crate::error::{OclustError, Result};

/// `n` observations in `p` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(OclustError::EmptyData);
        }
        if p == 0 {
            return Err(OclustError::InvalidArgument("dimension must be at least 1".into()));
        }
        if values.len() != n * p {
            return Err(OclustError::DimensionMismatch { expected: n * p, actual: values.len() });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(OclustError::NonFinite { row: pos / p, col: pos % p });
        }
        Ok(Self { n, p, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(OclustError::EmptyData)?;
        let p = first.as_ref().len();
        let mut values = Vec::with_capacity(rows.len() * p);
        for row in rows {
            let row = row.as_ref();
            if row.len() != p {
                return Err(OclustError::DimensionMismatch { expected: p, actual: row.len() });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), p, values)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Copy of the matrix with row `skip` removed. Requires `n >= 2`.
    pub fn without_row(&self, skip: usize) -> Result<Self> {
        if self.n < 2 {
            return Err(OclustError::EmptyData);
        }
        let mut values = Vec::with_capacity((self.n - 1) * self.p);
        values.extend_from_slice(&self.values[..skip * self.p]);
        values.extend_from_slice(&self.values[(skip + 1) * self.p..]);
        Ok(Self { n: self.n - 1, p: self.p, values })
    }

    /// Rows at `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.p);
        for &i in indices {
            if i >= self.n {
                return Err(OclustError::InvalidArgument(format!("row {i} out of range")));
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.p, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(DataMatrix::new(0, 2, vec![]), Err(OclustError::EmptyData)));
        assert!(DataMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            DataMatrix::new(2, 2, vec![1.0, 2.0, f64::NAN, 0.0]),
            Err(OclustError::NonFinite { row: 1, col: 0 })
        ));
        assert!(DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn row_removal() {
        let d = DataMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let s = d.without_row(1).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.row(0), &[1.0, 2.0]);
        assert_eq!(s.row(1), &[5.0, 6.0]);
        let t = d.select_rows(&[2, 0]).unwrap();
        assert_eq!(t.row(0), &[5.0, 6.0]);
    }
}
