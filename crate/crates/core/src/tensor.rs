//! Dense N-mode tensors.
//!
//! Values are stored lexicographically with mode 0 most significant, so the
//! mode-0 unfolding is a plain row-major reshape. Every unfolding orders its
//! columns lexicographically over the remaining modes in increasing mode
//! order, lowest remaining mode most significant.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

/// Mode-n matricization of a tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnfolding<T: Real> {
    pub mode: usize,
    pub matrix: DMatrix<T>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::InvalidShape(shape.to_vec()));
    }
    Ok(shape.iter().product())
}

impl<T: Real> DenseTensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let n = check_shape(&shape)?;
        if data.len() != n {
            return Err(invalid(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    /// Zero tensor. Panics on an empty shape or a zero-length mode.
    pub fn zeros(shape: &[usize]) -> Self {
        let n = check_shape(shape).expect("invalid tensor shape");
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); n],
        }
    }

    pub fn filled(shape: &[usize], value: T) -> Self {
        let mut t = Self::zeros(shape);
        t.data.iter_mut().for_each(|v| *v = value);
        t
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> T) -> Self {
        let mut t = Self::zeros(shape);
        let mut idx = vec![0usize; shape.len()];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            increment(&mut idx, shape);
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn get(&self, index: &[usize]) -> T {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: T) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    /// Multi-index of a storage offset.
    pub fn index_of(&self, mut offset: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for (k, &d) in self.shape.iter().enumerate().rev() {
            idx[k] = offset % d;
            offset /= d;
        }
        idx
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                found: other.shape.clone(),
            });
        }
        Ok(())
    }

    /// (product of modes before `mode`, size of `mode`, product after).
    pub(crate) fn split_at_mode(&self, mode: usize) -> (usize, usize, usize) {
        let outer = self.shape[..mode].iter().product();
        let inner = self.shape[mode + 1..].iter().product();
        (outer, self.shape[mode], inner)
    }

    /// Mode-`mode` unfolding as a row-major buffer of `I_mode` rows.
    pub(crate) fn unfold_rows(&self, mode: usize) -> Vec<T> {
        let (outer, rows, inner) = self.split_at_mode(mode);
        if outer == 1 {
            return self.data.clone();
        }
        let cols = outer * inner;
        let mut out = vec![T::zero(); self.data.len()];
        for a in 0..outer {
            for r in 0..rows {
                let src = (a * rows + r) * inner;
                let dst = r * cols + a * inner;
                out[dst..dst + inner].copy_from_slice(&self.data[src..src + inner]);
            }
        }
        out
    }

    /// Inverse of [`unfold_rows`](Self::unfold_rows).
    pub(crate) fn fold_rows(shape: &[usize], mode: usize, rows_buf: &[T]) -> Self {
        let mut t = Self::zeros(shape);
        let (outer, rows, inner) = t.split_at_mode(mode);
        if outer == 1 {
            t.data.copy_from_slice(rows_buf);
            return t;
        }
        let cols = outer * inner;
        for a in 0..outer {
            for r in 0..rows {
                let dst = (a * rows + r) * inner;
                let src = r * cols + a * inner;
                t.data[dst..dst + inner].copy_from_slice(&rows_buf[src..src + inner]);
            }
        }
        t
    }

    pub fn unfold(&self, mode: usize) -> Result<ModeUnfolding<T>> {
        self.check_mode(mode)?;
        let rows = self.shape[mode];
        let cols = self.len() / rows;
        let buf = self.unfold_rows(mode);
        Ok(ModeUnfolding {
            mode,
            matrix: DMatrix::from_row_slice(rows, cols, &buf),
        })
    }

    pub fn fold(unfolding: &ModeUnfolding<T>, shape: &[usize]) -> Result<Self> {
        let n = check_shape(shape)?;
        let mode = unfolding.mode;
        if mode >= shape.len() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: shape.len(),
            });
        }
        let m = &unfolding.matrix;
        if m.nrows() != shape[mode] || m.nrows() * m.ncols() != n {
            return Err(invalid(format!(
                "{}x{} unfolding is inconsistent with shape {shape:?} at mode {mode}",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut buf = Vec::with_capacity(n);
        for r in 0..m.nrows() {
            buf.extend(m.row(r).iter().copied());
        }
        Ok(Self::fold_rows(shape, mode, &buf))
    }

    /// `self ×_mode u`: applies `u` (J × I_mode) to every mode-`mode` fiber.
    pub fn mode_product(&self, u: &DMatrix<T>, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        if u.ncols() != self.shape[mode] {
            return Err(invalid(format!(
                "matrix has {} columns but mode {mode} has size {}",
                u.ncols(),
                self.shape[mode]
            )));
        }
        let mut shape = self.shape.clone();
        shape[mode] = u.nrows();
        let mut out = Self::zeros(&shape);
        self.mode_product_into(u, mode, &mut out);
        Ok(out)
    }

    /// Unchecked mode product writing into a preallocated tensor.
    pub(crate) fn mode_product_into(&self, u: &DMatrix<T>, mode: usize, out: &mut Self) {
        let (outer, rows, inner) = self.split_at_mode(mode);
        let out_rows = u.nrows();
        debug_assert_eq!(out.len(), outer * out_rows * inner);
        // row-major copy of u
        let ur: Vec<T> = (0..out_rows).flat_map(|j| u.row(j).iter().copied().collect::<Vec<_>>()).collect();
        if inner == 1 {
            for (src, dst) in self.data.chunks_exact(rows).zip(out.data.chunks_exact_mut(out_rows)) {
                for (d, urow) in dst.iter_mut().zip(ur.chunks_exact(rows)) {
                    *d = urow.iter().zip(src).fold(T::zero(), |acc, (&w, &s)| acc + w * s);
                }
            }
            return;
        }
        out.data.iter_mut().for_each(|v| *v = T::zero());
        for (src, dst) in self
            .data
            .chunks_exact(rows * inner)
            .zip(out.data.chunks_exact_mut(out_rows * inner))
        {
            for (drow, urow) in dst.chunks_exact_mut(inner).zip(ur.chunks_exact(rows)) {
                for (&w, srow) in urow.iter().zip(src.chunks_exact(inner)) {
                    if w == T::zero() {
                        continue;
                    }
                    for (d, &s) in drow.iter_mut().zip(srow) {
                        *d += w * s;
                    }
                }
            }
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
    }

    pub fn l1_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v.abs())
    }

    pub fn lp_norm(&self, p: T) -> Result<T> {
        if !(p >= T::one()) {
            return Err(invalid("lp norm requires p >= 1"));
        }
        let s = self
            .data
            .iter()
            .fold(T::zero(), |acc, &v| acc + v.abs().powf(p));
        Ok(s.powf(T::one() / p))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn inner(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b))
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `alpha * a + b`.
    pub fn axpy(alpha: T, a: &Self, b: &Self) -> Result<Self> {
        a.zip_with(b, |x, y| alpha * x + y)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, alpha: T) -> Self {
        self.map(|v| alpha * v)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite_value())
    }

    /// Reorders modes: output mode `k` is input mode `order[k]`.
    pub fn permute_modes(&self, order: &[usize]) -> Result<Self> {
        let n = self.order();
        let mut seen = vec![false; n];
        if order.len() != n
            || order.iter().any(|&m| m >= n || std::mem::replace(&mut seen[m], true))
        {
            return Err(invalid(format!("{order:?} is not a permutation of 0..{n}")));
        }
        if order.iter().enumerate().all(|(k, &m)| k == m) {
            return Ok(self.clone());
        }
        let new_shape: Vec<usize> = order.iter().map(|&m| self.shape[m]).collect();
        let old_strides = strides(&self.shape);
        let step: Vec<usize> = order.iter().map(|&m| old_strides[m]).collect();
        let mut data = Vec::with_capacity(self.len());
        let mut idx = vec![0usize; n];
        let mut src = 0usize;
        for _ in 0..self.len() {
            data.push(self.data[src]);
            // odometer over the new index, tracking the source offset
            for k in (0..n).rev() {
                idx[k] += 1;
                src += step[k];
                if idx[k] < new_shape[k] {
                    break;
                }
                src -= step[k] * new_shape[k];
                idx[k] = 0;
            }
        }
        Ok(Self {
            shape: new_shape,
            data,
        })
    }

    /// Converts the scalar type (lossy for f64 -> f32).
    pub fn cast<U: Real>(&self) -> DenseTensor<U> {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::c(v.to_f64_lossy())).collect(),
        }
    }

    pub(crate) fn add_assign_scaled(&mut self, alpha: T, other: &Self) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }
}

/// Inverse of a permutation as accepted by [`DenseTensor::permute_modes`].
pub fn inverse_permutation(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; order.len()];
    for (k, &m) in order.iter().enumerate() {
        inv[m] = k;
    }
    inv
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}
