//! Small dense linear algebra over flat `Vec<f64>` buffers.
//!
//! Dimensions in this crate are tiny (d = 2 in most experiments, d <= 64 for
//! the dense eigenvalue path), so everything is plain row-major storage with
//! no BLAS. The Jacobi eigensolver is exact to machine precision for the
//! symmetric matrices we feed it.
#![allow(clippy::needless_range_loop)]

/// Dense symmetric matrix, row-major full storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from a row-major slice; symmetrizes to guard against rounding
    /// asymmetry in the input.
    pub fn from_rows(n: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), n * n, "row buffer must be n*n");
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = 0.5 * (rows[i * n + j] + rows[j * n + i]);
            }
        }
        SymMatrix { n, data }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = entries[i];
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            out[i] = dot(row, x);
        }
    }

    /// self + alpha * other.
    pub fn add_scaled(&self, other: &SymMatrix, alpha: f64) -> SymMatrix {
        assert_eq!(self.n, other.n);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + alpha * b)
            .collect();
        SymMatrix { n: self.n, data }
    }

    /// Matrix product. The callers only multiply commuting polynomials of a
    /// fixed symmetric matrix, so the result stays symmetric up to rounding;
    /// we re-symmetrize.
    pub fn mul(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut raw = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    raw[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        SymMatrix::from_rows(n, &raw)
    }

    pub fn scaled(&self, alpha: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn neg(&self) -> SymMatrix {
        self.scaled(-1.0)
    }

    /// Spectral norm (largest absolute eigenvalue), exact via Jacobi.
    pub fn spectral_norm(&self) -> f64 {
        let (eigs, _) = self.jacobi_eigen();
        eigs.iter().fold(0.0f64, |acc, e| acc.max(e.abs()))
    }

    /// Full symmetric eigendecomposition by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order with matching unit
    /// eigenvectors (columns of the rotation product).
    pub fn jacobi_eigen(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = self.n;
        let mut a = self.data.clone();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        let fro: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let tol = 1e-15 * fro.max(f64::MIN_POSITIVE);
        for _sweep in 0..100 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[p * n + q] * a[p * n + q];
                }
            }
            if off.sqrt() <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() <= tol * 1e-2 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (1.0 + theta * theta).sqrt())
                    } else {
                        1.0 / (theta - (1.0 + theta * theta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
            .map(|j| {
                let eig = a[j * n + j];
                let vec: Vec<f64> = (0..n).map(|i| v[i * n + j]).collect();
                (eig, vec)
            })
            .collect();
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let eigs = pairs.iter().map(|(e, _)| *e).collect();
        let vecs = pairs.into_iter().map(|(_, v)| v).collect();
        (eigs, vecs)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scaled(a: &[f64], alpha: f64) -> Vec<f64> {
    a.iter().map(|x| alpha * x).collect()
}

/// Normalize in place; returns the original norm. Zero vectors are left alone.
pub fn normalize(a: &mut [f64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Fix the sign of a unit vector deterministically: the entry of largest
/// magnitude is made positive (first such entry on ties).
pub fn canonical_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonal_matrix() {
        let m = SymMatrix::diagonal(&[3.0, -1.0, 2.0]);
        let (eigs, vecs) = m.jacobi_eigen();
        assert!((eigs[0] + 1.0).abs() < 1e-14);
        assert!((eigs[1] - 2.0).abs() < 1e-14);
        assert!((eigs[2] - 3.0).abs() < 1e-14);
        // eigenvector of the smallest eigenvalue is +-e_1
        assert!(vecs[0][1].abs() > 1.0 - 1e-12);
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        // fixed pseudo-random symmetric 6x6
        let n = 6;
        let mut m = SymMatrix::zeros(n);
        let mut state = 0x9e3779b97f4a7c15u64;
        for i in 0..n {
            for j in i..n {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                let v = ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
                m.set(i, j, v);
            }
        }
        let (eigs, vecs) = m.jacobi_eigen();
        // check A v = lambda v for each pair
        for (e, v) in eigs.iter().zip(&vecs) {
            let av = m.matvec(v);
            for (ai, vi) in av.iter().zip(v) {
                assert!((ai - e * vi).abs() < 1e-12, "residual too large");
            }
        }
        // orthonormality
        for i in 0..n {
            for j in 0..n {
                let d = dot(&vecs[i], &vecs[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn canonical_sign_flips_consistently() {
        let mut v = vec![0.1, -0.9, 0.2];
        canonical_sign(&mut v);
        assert!(v[1] > 0.0);
        let mut w = vec![-0.1, 0.9, -0.2];
        canonical_sign(&mut w);
        assert_eq!(v, w);
    }
}
