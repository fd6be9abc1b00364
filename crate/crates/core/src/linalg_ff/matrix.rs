use serde::{Deserialize, Serialize};

use super::field::Field;

/// Dense row-major matrix over GF(2^w); elements are stored as `u16`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<u16>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(cols: usize, rows: Vec<Vec<u16>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend(r);
        }
        Self {
            rows: n,
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u16 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u16) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u16] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[u16]> {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn push_row(&mut self, row: &[u16]) {
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    /// Copy without row `r`.
    pub fn without_row(&self, r: usize) -> Self {
        let mut out = Self::zeros(0, self.cols);
        for (i, row) in self.row_iter().enumerate() {
            if i != r {
                out.push_row(row);
            }
        }
        out
    }

    /// Submatrix keeping the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                out.set(r, j, self.get(r, c));
            }
        }
        out
    }

    pub fn rank(&self, field: &Field) -> usize {
        let mut basis = RowEchelon::new(self.cols);
        for row in self.row_iter() {
            basis.insert(field, row.to_vec());
        }
        basis.rank()
    }
}

/// Incrementally built echelon basis of a row space.
///
/// Every stored row has a unit pivot and is zero on the pivots of the rows
/// stored before it, so reducing a vector against the rows in insertion order
/// is exact.
#[derive(Debug, Clone)]
pub struct RowEchelon {
    cols: usize,
    rows: Vec<(usize, Vec<u16>)>,
}

impl RowEchelon {
    pub fn new(cols: usize) -> Self {
        Self {
            cols,
            rows: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, field: &Field, v: &mut [u16]) {
        for (pivot, row) in &self.rows {
            let coef = v[*pivot];
            if coef != 0 {
                for (x, &y) in v.iter_mut().zip(row) {
                    *x ^= field.mul(coef, y);
                }
            }
        }
    }

    /// Adds `v` to the basis; returns whether the rank grew.
    pub fn insert(&mut self, field: &Field, mut v: Vec<u16>) -> bool {
        assert_eq!(v.len(), self.cols);
        self.reduce(field, &mut v);
        let Some(pivot) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = field.inv(v[pivot]);
        for x in v.iter_mut() {
            *x = field.mul(*x, inv);
        }
        self.rows.push((pivot, v));
        true
    }

    pub fn contains(&self, field: &Field, v: &[u16]) -> bool {
        let mut v = v.to_vec();
        self.reduce(field, &mut v);
        v.iter().all(|&x| x == 0)
    }

    /// Whether the unit vector `e_col` lies in the span.
    pub fn contains_unit(&self, field: &Field, col: usize) -> bool {
        let mut v = vec![0u16; self.cols];
        v[col] = 1;
        self.reduce(field, &mut v);
        v.iter().all(|&x| x == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg_ff::FieldSpec;

    fn gf256() -> &'static Field {
        FieldSpec::new(8).unwrap().field()
    }

    #[test]
    fn rank_basics() {
        let f = gf256();
        assert_eq!(Matrix::zeros(3, 5).rank(f), 0);
        assert_eq!(Matrix::identity(6).rank(f), 6);
        let m = Matrix::from_rows(3, vec![vec![1, 2, 3], vec![2, 4, 6], vec![0, 0, 1]]);
        // second row is 2 * first row
        assert_eq!(m.rank(f), 2);
    }

    #[test]
    fn echelon_membership() {
        let f = gf256();
        let mut e = RowEchelon::new(3);
        assert!(e.insert(f, vec![1, 1, 0]));
        assert!(e.insert(f, vec![0, 1, 1]));
        assert!(!e.insert(f, vec![1, 0, 1]));
        assert!(e.contains(f, &[1, 0, 1]));
        assert!(!e.contains_unit(f, 0));
        assert!(e.insert(f, vec![0, 0, 7]));
        assert!(e.contains_unit(f, 0) && e.contains_unit(f, 1) && e.contains_unit(f, 2));
    }

    #[test]
    fn row_helpers() {
        let m = Matrix::from_rows(2, vec![vec![1, 2], vec![3, 4], vec![5, 6]]);
        assert_eq!(
            m.without_row(1).row_iter().collect::<Vec<_>>(),
            vec![&[1, 2][..], &[5, 6][..]]
        );
        assert_eq!(m.select_columns(&[1]).row(2), &[6]);
    }
}
