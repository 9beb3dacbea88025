//! Dense symmetric eigensolver: Householder tridiagonalization followed by
//! implicit-shift QL with deflation.

use crate::ensemble::SymmetricMatrix;
use crate::{Error, Result};

/// Iteration cap per eigenvalue in the QL sweep.
pub const MAX_QL_ITERATIONS: usize = 60;

/// Eigenvalues (ascending) with orthonormal eigenvectors stored column-wise:
/// `vectors[i * n + q]` is component `i` of the eigenvector for `values[q]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn component(&self, i: usize, q: usize) -> f64 {
        self.vectors[i * self.values.len() + q]
    }
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(w: &SymmetricMatrix) -> Result<Vec<f64>> {
    let n = w.dim();
    let mut a = w.as_slice().to_vec();
    let (mut d, mut e) = tridiagonalize(&mut a, n, None);
    ql_implicit(&mut d, &mut e, None).map_err(|iterations| Error::NoConvergence {
        iterations,
        hash: w.fingerprint(),
    })?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Full eigendecomposition of a symmetric matrix.
pub fn symmetric_eigen(w: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let n = w.dim();
    let mut a = w.as_slice().to_vec();
    let mut q = vec![0.0; n * n];
    let (mut d, mut e) = tridiagonalize(&mut a, n, Some(&mut q));
    ql_implicit(&mut d, &mut e, Some(&mut q)).map_err(|iterations| Error::NoConvergence {
        iterations,
        hash: w.fingerprint(),
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = vec![0.0; n * n];
    for i in 0..n {
        for (col, &src) in order.iter().enumerate() {
            vectors[i * n + col] = q[i * n + src];
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Reduces the row-major symmetric `a` to tridiagonal form `T = Q^T A Q`,
/// working on the lower triangle only. Returns the diagonal and the
/// subdiagonal (`e[i]` couples `i` and `i + 1`, `e[n - 1] = 0`). When `q`
/// is given it receives the orthogonal factor.
fn tridiagonalize(a: &mut [f64], n: usize, q: Option<&mut [f64]>) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut reflectors: Vec<(usize, f64, Vec<f64>)> = Vec::new();
    let keep = q.is_some();
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let v = &mut v[..m];
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = a[(k + 1 + i) * n + k];
        }
        let tail: f64 = v[1..].iter().map(|x| x * x).sum();
        d[k] = a[k * n + k];
        if tail == 0.0 {
            e[k] = v[0];
            continue;
        }
        let norm = (v[0] * v[0] + tail).sqrt();
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let beta = 2.0 / (v[0] * v[0] + tail);
        e[k] = alpha;

        // p = beta * A22 v from the lower triangle of the trailing block
        let p = &mut p[..m];
        p.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..m {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + k + 1 + i];
            let vi = v[i];
            let mut acc = 0.0;
            for ((pj, &aij), &vj) in p[..i].iter_mut().zip(row).zip(&v[..i]) {
                acc += aij * vj;
                *pj += aij * vi;
            }
            p[i] += acc + a[(k + 1 + i) * n + k + 1 + i] * vi;
        }
        let pv: f64 = p.iter().zip(v.iter()).map(|(x, y)| x * y).sum();
        let kk = 0.5 * beta * beta * pv;
        // w = beta p - K v, stored in p
        for (pi, &vi) in p.iter_mut().zip(v.iter()) {
            *pi = beta * *pi - kk * vi;
        }
        for i in 0..m {
            let (vi, wi) = (v[i], p[i]);
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + k + 2 + i];
            for ((aij, &vj), &wj) in row.iter_mut().zip(&v[..=i]).zip(&p[..=i]) {
                *aij -= vi * wj + wi * vj;
            }
        }
        if keep {
            reflectors.push((k, beta, v.to_vec()));
        }
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + n - 2];
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    if n >= 1 {
        d[n - 1] = a[(n - 1) * n + n - 1];
    }

    if let Some(q) = q {
        q.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            q[i * n + i] = 1.0;
        }
        // Q = H_0 H_1 ... ; apply from the innermost reflector outwards
        for (k, beta, v) in reflectors.iter().rev() {
            let off = k + 1;
            let mut t = vec![0.0; n];
            for (i, &vi) in v.iter().enumerate() {
                let row = &q[(off + i) * n..(off + i + 1) * n];
                for (tj, &qij) in t.iter_mut().zip(row) {
                    *tj += vi * qij;
                }
            }
            for (i, &vi) in v.iter().enumerate() {
                let row = &mut q[(off + i) * n..(off + i + 1) * n];
                for (qij, &tj) in row.iter_mut().zip(&t) {
                    *qij -= beta * vi * tj;
                }
            }
        }
    }
    (d, e)
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. On success `d` holds
/// the (unsorted) eigenvalues and, if given, the columns of `z` are rotated
/// into the eigenvectors. On failure returns the iteration count reached.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> std::result::Result<(), usize> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(iter);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let zk = &mut z[k * n..(k + 1) * n];
                        let f = zk[i + 1];
                        zk[i + 1] = s * zk[i] + c * f;
                        zk[i] = c * zk[i] - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{assemble, sample_entries, EntryLaw, WignerSpec};

    fn residual(w: &SymmetricMatrix, ed: &EigenDecomposition) -> f64 {
        let n = w.dim();
        let mut worst = 0.0_f64;
        for q in 0..n {
            let mut r2 = 0.0;
            for i in 0..n {
                let wv: f64 = (0..n).map(|k| w.get(i, k) * ed.component(k, q)).sum();
                let diff = wv - ed.values[q] * ed.component(i, q);
                r2 += diff * diff;
            }
            worst = worst.max(r2.sqrt());
        }
        worst
    }

    #[test]
    fn diagonal_and_swap() {
        let w = SymmetricMatrix::from_upper(3, |j, k| if j == k { [3.0, 1.0, 2.0][j] } else { 0.0 });
        assert_eq!(symmetric_eigenvalues(&w).unwrap(), vec![1.0, 2.0, 3.0]);
        let w = SymmetricMatrix::from_upper(2, |j, k| if j == k { 0.0 } else { 1.0 });
        let l = symmetric_eigenvalues(&w).unwrap();
        assert!((l[0] + 1.0).abs() < 1e-15 && (l[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trivial_sizes() {
        assert!(symmetric_eigenvalues(&SymmetricMatrix::zeros(0)).unwrap().is_empty());
        let one = SymmetricMatrix::from_upper(1, |_, _| -4.5);
        assert_eq!(symmetric_eigenvalues(&one).unwrap(), vec![-4.5]);
        let ed = symmetric_eigen(&one).unwrap();
        assert_eq!(ed.vectors, vec![1.0]);
    }

    #[test]
    fn eigenvectors_reconstruct() {
        for &n in &[2usize, 3, 8, 33, 64] {
            let w = assemble(&sample_entries(&WignerSpec::new(n, EntryLaw::Gaussian, n as u64).unwrap()).unwrap());
            let ed = symmetric_eigen(&w).unwrap();
            let norm = w.frobenius_norm();
            assert!(residual(&w, &ed) <= 1e-10 * (1.0 + norm), "n = {n}");
            let fast = symmetric_eigenvalues(&w).unwrap();
            for (a, b) in fast.iter().zip(&ed.values) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + norm));
            }
            // orthonormal columns
            for p in 0..n {
                for q in 0..n {
                    let dot: f64 = (0..n).map(|i| ed.component(i, p) * ed.component(i, q)).sum();
                    let target = if p == q { 1.0 } else { 0.0 };
                    assert!((dot - target).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn repeated_eigenvalues() {
        let w = SymmetricMatrix::from_upper(5, |_, _| 1.0);
        let l = symmetric_eigenvalues(&w).unwrap();
        for x in &l[..4] {
            assert!(x.abs() < 1e-14);
        }
        assert!((l[4] - 5.0).abs() < 1e-13);
    }
}
