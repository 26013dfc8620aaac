//! Small dense/sparse linear algebra used by the trainers and the fallback
//! embedder.

use alloc::vec;
use alloc::vec::Vec;

/// Sparse vector as `(index, value)` pairs sorted by index.
pub type SparseVec = Vec<(usize, f64)>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn sparse_dot(x: &[(usize, f64)], w: &[f64]) -> f64 {
    x.iter().map(|&(i, v)| v * w[i]).sum()
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Dense {
        Dense { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.at(r, c)).collect()
    }

    /// `selfᵀ · other`
    pub fn t_mul(&self, other: &Dense) -> Dense {
        assert_eq!(self.rows, other.rows);
        let mut out = Dense::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let a = self.row(r);
            let b = other.row(r);
            for (i, &ai) in a.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &bj) in dst.iter_mut().zip(b) {
                    *d += ai * bj;
                }
            }
        }
        out
    }

    /// `self · other`
    pub fn mul(&self, other: &Dense) -> Dense {
        assert_eq!(self.cols, other.rows);
        let mut out = Dense::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Orthonormalizes the columns in place with two passes of modified
    /// Gram-Schmidt. Columns that collapse numerically are zeroed.
    pub fn orthonormalize_columns(&mut self) {
        let (n, k) = (self.rows, self.cols);
        for _pass in 0..2 {
            for j in 0..k {
                for p in 0..j {
                    let mut proj = 0.0;
                    for r in 0..n {
                        proj += self.at(r, p) * self.at(r, j);
                    }
                    for r in 0..n {
                        let v = self.at(r, j) - proj * self.at(r, p);
                        self.set(r, j, v);
                    }
                }
                let mut nrm = 0.0;
                for r in 0..n {
                    nrm += self.at(r, j) * self.at(r, j);
                }
                let nrm = libm::sqrt(nrm);
                let scale = if nrm > 1e-12 { 1.0 / nrm } else { 0.0 };
                for r in 0..n {
                    let v = self.at(r, j) * scale;
                    self.set(r, j, v);
                }
            }
        }
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub rows: usize,
    pub cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets sorted by `(row, col)` with
    /// no duplicates.
    pub fn from_sorted_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Csr {
        let mut indptr = vec![0usize; rows + 1];
        for &(r, _, _) in triplets {
            indptr[r + 1] += 1;
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Csr {
            rows,
            cols,
            indptr,
            indices: triplets.iter().map(|t| t.1).collect(),
            values: triplets.iter().map(|t| t.2).collect(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `self · dense`
    pub fn mul_dense(&self, dense: &Dense) -> Dense {
        assert_eq!(self.cols, dense.rows);
        let mut out = Dense::zeros(self.rows, dense.cols);
        for r in 0..self.rows {
            let dst = &mut out.data[r * dense.cols..(r + 1) * dense.cols];
            for p in self.indptr[r]..self.indptr[r + 1] {
                let v = self.values[p];
                let src = dense.row(self.indices[p]);
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
        out
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` where column `i` of the returned
/// matrix is the eigenvector for `eigenvalues[i]`. Order is unspecified.
pub fn symmetric_eigen(matrix: &Dense) -> (Vec<f64>, Dense) {
    let n = matrix.rows;
    assert_eq!(n, matrix.cols);
    let mut a = matrix.clone();
    let mut v = Dense::zeros(n, n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += a.at(i, i) * a.at(i, i);
            for j in (i + 1)..n {
                off += a.at(i, j) * a.at(i, j);
            }
        }
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q);
                if libm::fabs(apq) < 1e-300 {
                    continue;
                }
                let app = a.at(p, p);
                let aqq = a.at(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = libm::copysign(1.0, theta) / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a.at(k, p);
                    let akq = a.at(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.at(p, k);
                    let aqk = a.at(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.at(k, p);
                    let vkq = v.at(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    ((0..n).map(|i| a.at(i, i)).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let m = Dense { rows: 2, cols: 2, data: vec![2.0, 1.0, 1.0, 2.0] };
        let (mut vals, vecs) = symmetric_eigen(&m);
        let v0 = vecs.column(0);
        let mv0 = [2.0 * v0[0] + v0[1], v0[0] + 2.0 * v0[1]];
        assert!((mv0[0] - vals[0] * v0[0]).abs() < 1e-12);
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gram_schmidt_orthonormal() {
        let mut m = Dense { rows: 3, cols: 2, data: vec![1.0, 1.0, 0.0, 1.0, 1.0, 0.0] };
        m.orthonormalize_columns();
        let g = m.t_mul(&m);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g.at(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn csr_matches_dense_product() {
        let trip = [(0, 1, 2.0), (1, 0, 1.0), (1, 2, -1.0)];
        let csr = Csr::from_sorted_triplets(2, 3, &trip);
        let d = Dense { rows: 3, cols: 1, data: vec![1.0, 2.0, 3.0] };
        assert_eq!(csr.mul_dense(&d).data, vec![4.0, -2.0]);
        assert_eq!(csr.nnz(), 3);
    }
}
