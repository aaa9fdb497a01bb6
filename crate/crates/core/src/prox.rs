//! Proximal maps of the l1 norm and of the matrix nuclear norm.
//!
//! Singular value thresholding works on the Gram matrix of the short side of
//! the matrix: unfoldings here are very wide (e.g. 40 x 3360), so the small
//! symmetric eigenproblem is far cheaper than a full thin SVD. With
//! `M M^T = U diag(s^2) U^T` the thresholded matrix is
//! `U diag(max(s - tau, 0) / s) U^T M`, which never divides by a vanishing
//! singular value because the shrink factor stays in `[0, 1]`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::tensor::DenseTensor;

/// Shrunk singular values at or below this are reported as exactly zero.
pub const RANK_EPS: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SvtResult<T: Real> {
    pub output: DMatrix<T>,
    pub retained_rank: usize,
    /// Singular values of the input, descending.
    pub singular_values_before: Vec<T>,
}

/// `sign(x) * max(|x| - lambda, 0)`, elementwise.
pub fn soft_threshold<T: Real>(x: &DenseTensor<T>, lambda: T) -> Result<DenseTensor<T>> {
    if !(lambda >= T::zero()) {
        return Err(invalid("soft threshold needs lambda >= 0"));
    }
    Ok(x.map(|v| shrink(v, lambda)))
}

#[inline]
pub fn shrink<T: Real>(v: T, lambda: T) -> T {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        T::zero()
    }
}

/// Singular value thresholding of a matrix.
pub fn svt<T: Real>(m: &DMatrix<T>, tau: T) -> Result<SvtResult<T>> {
    let (rows, cols) = m.shape();
    let mut buf = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        buf.extend(m.row(r).iter().copied());
    }
    let res = svt_rows(rows, cols, &buf, tau)?;
    Ok(SvtResult {
        output: DMatrix::from_row_slice(rows, cols, &res.output),
        retained_rank: res.retained_rank,
        singular_values_before: res.singular_values,
    })
}

pub(crate) struct RowSvt<T> {
    pub output: Vec<T>,
    pub retained_rank: usize,
    pub singular_values: Vec<T>,
}

/// SVT on a row-major `rows x cols` buffer.
pub(crate) fn svt_rows<T: Real>(rows: usize, cols: usize, buf: &[T], tau: T) -> Result<RowSvt<T>> {
    if !(tau >= T::zero()) {
        return Err(invalid("singular value threshold must be >= 0"));
    }
    if buf.iter().any(|v| !v.is_finite_value()) {
        return Err(Error::NonFinite("singular value thresholding"));
    }
    if rows > cols {
        let t = transpose(rows, cols, buf);
        let mut res = svt_rows(cols, rows, &t, tau)?;
        res.output = transpose(cols, rows, &res.output);
        return Ok(res);
    }
    let (vectors, sv) = gram_eigen(rows, cols, buf)?;
    let eps = T::c(RANK_EPS);
    let factors: Vec<T> = sv
        .iter()
        .map(|&s| {
            let shrunk = s - tau;
            if shrunk > eps && s > T::zero() {
                shrunk / s
            } else {
                T::zero()
            }
        })
        .collect();
    let retained_rank = factors.iter().filter(|&&f| f > T::zero()).count();
    if tau == T::zero() {
        return Ok(RowSvt {
            output: buf.to_vec(),
            retained_rank,
            singular_values: sv,
        });
    }
    // P = U diag(f) U^T restricted to the retained components
    let mut p = DMatrix::<T>::zeros(rows, rows);
    for (j, &f) in factors.iter().enumerate() {
        if f == T::zero() {
            continue;
        }
        let u = vectors.column(j);
        for a in 0..rows {
            let ua = u[a] * f;
            for b in 0..rows {
                p[(a, b)] += ua * u[b];
            }
        }
    }
    let mut output = vec![T::zero(); rows * cols];
    if retained_rank > 0 {
        for a in 0..rows {
            let out_row = &mut output[a * cols..(a + 1) * cols];
            for b in 0..rows {
                let w = p[(a, b)];
                if w == T::zero() {
                    continue;
                }
                let src = &buf[b * cols..(b + 1) * cols];
                for (o, &s) in out_row.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
    }
    Ok(RowSvt {
        output,
        retained_rank,
        singular_values: sv,
    })
}

/// Singular values (descending) of a row-major buffer.
pub(crate) fn singular_values_rows<T: Real>(rows: usize, cols: usize, buf: &[T]) -> Result<Vec<T>> {
    if rows > cols {
        return singular_values_rows(cols, rows, &transpose(rows, cols, buf));
    }
    Ok(gram_eigen(rows, cols, buf)?.1)
}

pub(crate) fn nuclear_norm_rows<T: Real>(rows: usize, cols: usize, buf: &[T]) -> Result<T> {
    Ok(singular_values_rows(rows, cols, buf)?
        .into_iter()
        .fold(T::zero(), |a, s| a + s))
}

/// Eigenvectors of `M M^T` (columns, sorted by descending eigenvalue) and the
/// corresponding singular values of `M`. Requires `rows <= cols`.
fn gram_eigen<T: Real>(rows: usize, cols: usize, buf: &[T]) -> Result<(DMatrix<T>, Vec<T>)> {
    let mut gram = DMatrix::<T>::zeros(rows, rows);
    for a in 0..rows {
        let ra = &buf[a * cols..(a + 1) * cols];
        for b in a..rows {
            let rb = &buf[b * cols..(b + 1) * cols];
            let d = dot(ra, rb);
            gram[(a, b)] = d;
            gram[(b, a)] = d;
        }
    }
    let eig = SymmetricEigen::try_new(gram, T::default_epsilon(), 10_000)
        .ok_or_else(|| Error::Eigen("Gram matrix eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vectors = DMatrix::from_fn(rows, rows, |i, j| eig.eigenvectors[(i, order[j])]);
    let sv = order
        .iter()
        .map(|&k| eig.eigenvalues[k].max(T::zero()).sqrt())
        .collect();
    Ok((vectors, sv))
}

/// Dot product with four independent accumulators.
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail = ca.remainder().iter().zip(cb.remainder()).fold(T::zero(), |s, (&x, &y)| s + x * y);
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn transpose<T: Real>(rows: usize, cols: usize, buf: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = buf[r * cols + c];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Full SVD, shrink, reconstruct.
    fn svd_oracle(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
        let svd = m.clone().svd(true, true);
        let s = svd.singular_values.map(|v| (v - tau).max(0.0));
        svd.u.unwrap() * DMatrix::from_diagonal(&s) * svd.v_t.unwrap()
    }

    #[test]
    fn soft_threshold_values() {
        let x = DenseTensor::<f64>::new(vec![4], vec![0.5, -1.2, 3.0, -0.1]).unwrap();
        assert_eq!(soft_threshold(&x, 0.0).unwrap(), x);
        let y = soft_threshold(&x, 0.5).unwrap();
        assert_eq!(y.as_slice()[0], 0.0);
        assert!((y.as_slice()[1] + 0.7).abs() < 1e-15);
        assert_eq!(y.as_slice()[2], 2.5);
        assert_eq!(y.as_slice()[3], 0.0);
        assert_eq!(soft_threshold(&x, 1.0).unwrap().as_slice()[0], 0.0);
        assert!(soft_threshold(&x, -0.1).is_err());
    }

    #[test]
    fn svt_diagonal_and_zero() {
        let d = DMatrix::<f64>::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let r = svt(&d, 2.0).unwrap();
        assert!((r.output.clone() - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).norm() < 1e-12);
        assert_eq!(r.retained_rank, 1);
        assert!((r.singular_values_before[0] - 3.0).abs() < 1e-12);
        let z = svt(&DMatrix::<f64>::zeros(3, 5), 0.7).unwrap();
        assert_eq!(z.output, DMatrix::zeros(3, 5));
        assert_eq!(z.retained_rank, 0);
    }

    #[test]
    fn svt_rejects_non_finite() {
        let mut m = DMatrix::<f64>::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(svt(&m, 1.0), Err(Error::NonFinite(_))));
        assert!(svt(&DMatrix::<f64>::zeros(2, 2), -1.0).is_err());
    }

    #[test]
    fn svt_matches_svd_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_matrix(&mut rng, 5, 4);
        let r = svt(&m, 0.3).unwrap();
        assert!((r.output - svd_oracle(&m, 0.3)).amax() < 1e-10);
        for (r, c) in [(3, 9), (9, 3), (6, 6), (1, 7)] {
            let m = random_matrix(&mut rng, r, c);
            for tau in [0.0, 0.1, 0.9, 5.0] {
                let out = svt(&m, tau).unwrap().output;
                assert!((out - svd_oracle(&m, tau)).amax() < 1e-10, "{r}x{c} tau={tau}");
            }
        }
    }

    #[test]
    fn svt_zero_threshold_reproduces_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_matrix(&mut rng, 4, 11);
        assert!((svt(&m, 0.0).unwrap().output - &m).amax() < 1e-9);
        assert!((svt(&m, 1e-14).unwrap().output - &m).amax() < 1e-9);
    }

    #[test]
    fn svt_never_increases_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 4, 7);
            let r = svt(&m, 0.4).unwrap();
            let after = r.output.singular_values();
            let mut after: Vec<f64> = after.iter().copied().collect();
            after.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in after.iter().zip(&r.singular_values_before) {
                assert!(*a <= b + 1e-10);
            }
            assert!(r.retained_rank <= 4);
        }
    }

    #[test]
    fn nuclear_norm_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_matrix(&mut rng, 6, 13);
        let buf: Vec<f64> = (0..6).flat_map(|r| m.row(r).iter().copied().collect::<Vec<_>>()).collect();
        let expected: f64 = m.singular_values().iter().sum();
        assert!((nuclear_norm_rows(6, 13, &buf).unwrap() - expected).abs() < 1e-10);
        let t = transpose(6, 13, &buf);
        assert!((nuclear_norm_rows(13, 6, &t).unwrap() - expected).abs() < 1e-10);
    }
}
