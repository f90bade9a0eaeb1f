//! Exact dense and sparse linear algebra over a `Scalar` field.

use std::collections::BTreeMap;
use std::fmt;

use crate::scalar::Scalar;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix<K> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<K>,
}

impl<K: Scalar> fmt::Debug for Matrix<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = (0..self.cols).map(|j| format!("{}", self.get(i, j))).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

/// Result of an in-place row reduction.
pub struct Echelon<K> {
    pub rref: Matrix<K>,
    pub pivots: Vec<usize>,
}

impl<K: Scalar> Matrix<K> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![K::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { K::one() } else { K::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> K) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<K>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged matrix");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| K::from_i64(x)).collect()).collect())
    }

    pub fn column(v: &[K]) -> Self {
        Matrix { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn get(&self, i: usize, j: usize) -> &K {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: K) {
        self.data[i * self.cols + j] = x;
    }

    pub fn row(&self, i: usize) -> &[K] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<K> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "shape mismatch in product");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if !b.is_zero() {
                        let idx = i * out.cols + j;
                        out.data[idx] = out.data[idx].add(&a.mul(b));
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.shape(), o.shape(), "shape mismatch in sum");
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!(self.shape(), o.shape(), "shape mismatch in difference");
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn scale(&self, c: &K) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a.mul(c)).collect() }
    }

    pub fn neg(&self) -> Self {
        self.scale(&K::one().neg())
    }

    pub fn mul_vec(&self, v: &[K]) -> Vec<K> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(K::zero(), |acc, (a, b)| acc.add(&a.mul(b))))
            .collect()
    }

    /// Vertical concatenation.
    pub fn vstack(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.cols);
        let mut data = self.data.clone();
        data.extend(o.data.iter().cloned());
        Matrix { rows: self.rows + o.rows, cols: self.cols, data }
    }

    /// Horizontal concatenation.
    pub fn hstack(&self, o: &Self) -> Self {
        assert_eq!(self.rows, o.rows);
        Self::from_fn(self.rows, self.cols + o.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                o.get(i, j - self.cols).clone()
            }
        })
    }

    pub fn echelon(&self) -> Echelon<K> {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else { continue };
            if p != r {
                for j in 0..m.cols {
                    m.data.swap(p * m.cols + j, r * m.cols + j);
                }
            }
            let inv = m.get(r, c).inv().expect("nonzero pivot is invertible");
            for j in c..m.cols {
                let x = m.get(r, j).mul(&inv);
                m.set(r, j, x);
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m.get(i, c).clone();
                if f.is_zero() {
                    continue;
                }
                for j in c..m.cols {
                    let x = m.get(i, j).sub(&f.mul(m.get(r, j)));
                    m.set(i, j, x);
                }
            }
            pivots.push(c);
            r += 1;
        }
        Echelon { rref: m, pivots }
    }

    pub fn rank(&self) -> usize {
        self.echelon().pivots.len()
    }

    /// Basis of the right kernel {v : Mv = 0}.
    pub fn kernel(&self) -> Vec<Vec<K>> {
        let e = self.echelon();
        let free: Vec<usize> = (0..self.cols).filter(|c| !e.pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![K::zero(); self.cols];
                v[f] = K::one();
                for (r, &p) in e.pivots.iter().enumerate() {
                    v[p] = e.rref.get(r, f).neg();
                }
                v
            })
            .collect()
    }

    /// Basis of the column space, as columns of the original matrix.
    pub fn column_basis(&self) -> Vec<Vec<K>> {
        self.echelon().pivots.iter().map(|&c| self.col(c)).collect()
    }

    pub fn inverse(&self) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let aug = self.hstack(&Self::identity(n));
        let e = aug.echelon();
        if e.pivots.len() < n || e.pivots[n - 1] != n - 1 {
            return None;
        }
        Some(Self::from_fn(n, n, |i, j| e.rref.get(i, n + j).clone()))
    }

    /// One solution of Mx = b, if any.
    pub fn solve(&self, b: &[K]) -> Option<Vec<K>> {
        let aug = self.hstack(&Matrix::column(b));
        let e = aug.echelon();
        if e.pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![K::zero(); self.cols];
        for (r, &p) in e.pivots.iter().enumerate() {
            x[p] = e.rref.get(r, self.cols).clone();
        }
        Some(x)
    }

    pub fn kron(&self, o: &Self) -> Self {
        Self::from_fn(self.rows * o.rows, self.cols * o.cols, |i, j| {
            self.get(i / o.rows, j / o.cols).mul(o.get(i % o.rows, j % o.cols))
        })
    }
}

/// Rank of a family of vectors given as columns.
pub fn rank_of_vectors<K: Scalar>(vs: &[Vec<K>], dim: usize) -> usize {
    if vs.is_empty() {
        return 0;
    }
    Matrix::from_fn(dim, vs.len(), |i, j| vs[j][i].clone()).rank()
}

/// Sparse vector: sorted (index, nonzero value) pairs.
pub type SparseVec<K> = Vec<(usize, K)>;

/// Incrementally maintained echelon basis of a subspace of K^n, stored as
/// sparse rows keyed by their pivot column.
#[derive(Clone, Debug, Default)]
pub struct SparseBasis<K> {
    rows: BTreeMap<usize, SparseVec<K>>,
}

impl<K: Scalar> SparseBasis<K> {
    pub fn new() -> Self {
        SparseBasis { rows: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    fn axpy(x: &SparseVec<K>, f: &K, y: &SparseVec<K>) -> SparseVec<K> {
        // x − f·y
        let mut out = Vec::with_capacity(x.len() + y.len());
        let (mut i, mut j) = (0, 0);
        while i < x.len() || j < y.len() {
            let take_x = j == y.len() || (i < x.len() && x[i].0 < y[j].0);
            let take_y = i == x.len() || (j < y.len() && y[j].0 < x[i].0);
            if take_x {
                out.push(x[i].clone());
                i += 1;
            } else if take_y {
                out.push((y[j].0, f.mul(&y[j].1).neg()));
                j += 1;
            } else {
                let v = x[i].1.sub(&f.mul(&y[j].1));
                if !v.is_zero() {
                    out.push((x[i].0, v));
                }
                i += 1;
                j += 1;
            }
        }
        out
    }

    /// Reduces v against the basis; returns the residue.
    pub fn reduce(&self, mut v: SparseVec<K>) -> SparseVec<K> {
        let mut start = 0;
        loop {
            let Some(pos) = v.iter().position(|(c, _)| *c >= start && self.rows.contains_key(c)) else {
                return v;
            };
            let (c, f) = v[pos].clone();
            let row = &self.rows[&c];
            v = Self::axpy(&v, &f, row);
            start = c + 1;
        }
    }

    /// Inserts v; returns true when the dimension grew.
    pub fn insert(&mut self, v: SparseVec<K>) -> bool {
        let r = self.reduce(v);
        let Some((c, lead)) = r.first().cloned() else { return false };
        let inv = lead.inv().expect("field");
        let r: SparseVec<K> = r.into_iter().map(|(i, x)| (i, x.mul(&inv))).collect();
        self.rows.insert(c, r);
        true
    }

    pub fn contains(&self, v: SparseVec<K>) -> bool {
        self.reduce(v).is_empty()
    }
}

/// Rank of sparse vectors.
pub fn sparse_rank<K: Scalar>(vs: impl IntoIterator<Item = SparseVec<K>>) -> usize {
    let mut b = SparseBasis::new();
    for v in vs {
        b.insert(v);
    }
    b.dim()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, Rational};

    #[test]
    fn rank_kernel_inverse() {
        let m = Matrix::<Rational>::from_i64(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(m.rank(), 2);
        for v in m.kernel() {
            assert!(m.mul_vec(&v).iter().all(|x| x.is_zero()));
        }
        let a = Matrix::<Rational>::from_i64(&[&[2, 1], &[1, 1]]);
        assert_eq!(a.mul(&a.inverse().unwrap()), Matrix::identity(2));
        assert!(m.inverse().is_none());
    }

    #[test]
    fn sparse_matches_dense() {
        let rows = [vec![1, 0, 2, 0], vec![0, 1, 1, 0], vec![1, 1, 3, 0], vec![0, 0, 0, 5]];
        let dense = Matrix::<Rational>::from_rows(rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect());
        let sparse: Vec<SparseVec<Rational>> = rows
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &x)| x != 0).map(|(i, &x)| (i, int(x))).collect())
            .collect();
        assert_eq!(dense.rank(), sparse_rank(sparse));
    }
}
