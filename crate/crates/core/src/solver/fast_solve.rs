//! Eigendecomposition-based solve of the S-update normal equations.
//!
//! The system matrix is the Kronecker sum
//! `G = I_l ⊗ (ΔᵀΔ + I_t) + (L_nᵀL_n + I_l) ⊗ I_t`, whose inverse is
//! `(Φ_l ⊗ Φ_t) (D_l ⊕ D_t)^{-1} (Φ_l ⊗ Φ_t)ᵀ`. It is applied with mode
//! products on the location and time modes and an entrywise division, so no
//! Kronecker product is ever formed.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::tensor::{strides, DenseTensor};

#[derive(Clone, Debug)]
pub struct FastSolveCache<T: Real> {
    /// Eigenvectors of `L_nᵀL_n + I`; `None` when the spatial term is off.
    pub phi_l: Option<DMatrix<T>>,
    /// Eigenvalues of `L_nᵀL_n + I`, or all ones when the spatial term is off.
    pub d_l: DVector<T>,
    pub phi_t: Option<DMatrix<T>>,
    pub d_t: DVector<T>,
    pub location_mode: usize,
    pub time_mode: usize,
}

fn shifted_gram_eigen<T: Real>(m: &DMatrix<T>) -> Result<(DMatrix<T>, DVector<T>)> {
    let n = m.ncols();
    let g = m.transpose() * m + DMatrix::identity(n, n);
    let g = (&g + g.transpose()) * T::c(0.5);
    let eig = SymmetricEigen::try_new(g, T::default_epsilon(), 10_000)
        .ok_or_else(|| Error::Eigen("operator eigensolver did not converge".into()))?;
    Ok((eig.eigenvectors, eig.eigenvalues))
}

/// Caches the eigendecompositions of `L_nᵀL_n + I_l` and `ΔᵀΔ + I_t`.
///
/// A `None` operator removes that term from `G` entirely (its block becomes
/// the identity), which is what the reduced variants need.
pub fn build_fast_solve<T: Real>(
    spatial: Option<&DMatrix<T>>,
    temporal: Option<&DMatrix<T>>,
    n_location: usize,
    n_time: usize,
    location_mode: usize,
    time_mode: usize,
) -> Result<FastSolveCache<T>> {
    let (phi_l, d_l) = match spatial {
        Some(ln) => {
            if ln.shape() != (n_location, n_location) {
                return Err(invalid(format!(
                    "spatial operator is {:?}, expected {n_location}x{n_location}",
                    ln.shape()
                )));
            }
            let (v, d) = shifted_gram_eigen(ln)?;
            (Some(v), d)
        }
        None => (None, DVector::from_element(n_location, T::one())),
    };
    let (phi_t, d_t) = match temporal {
        Some(delta) => {
            if delta.ncols() != n_time {
                return Err(invalid(format!(
                    "temporal operator has {} columns, expected {n_time}",
                    delta.ncols()
                )));
            }
            let (v, d) = shifted_gram_eigen(delta)?;
            (Some(v), d)
        }
        None => (None, DVector::from_element(n_time, T::one())),
    };
    Ok(FastSolveCache {
        phi_l,
        d_l,
        phi_t,
        d_t,
        location_mode,
        time_mode,
    })
}

impl<T: Real> FastSolveCache<T> {
    /// Applies `G^{-1}` to `b` along its location and time modes.
    pub fn solve(&self, b: &DenseTensor<T>) -> Result<DenseTensor<T>> {
        let shape = b.shape();
        let (l, t) = (self.location_mode, self.time_mode);
        if l >= shape.len() || t >= shape.len() || shape[l] != self.d_l.len() || shape[t] != self.d_t.len() {
            return Err(invalid(format!(
                "cache built for location {} / time {} sizes, tensor shape is {shape:?}",
                self.d_l.len(),
                self.d_t.len()
            )));
        }
        let mut cur = b.clone();
        let mut tmp = DenseTensor::zeros(shape);
        if let Some(phi) = &self.phi_l {
            cur.mode_product_into(&phi.transpose(), l, &mut tmp);
            std::mem::swap(&mut cur, &mut tmp);
        }
        if let Some(phi) = &self.phi_t {
            cur.mode_product_into(&phi.transpose(), t, &mut tmp);
            std::mem::swap(&mut cur, &mut tmp);
        }
        let st = strides(shape);
        let (sl, nl, stt, nt) = (st[l], shape[l], st[t], shape[t]);
        for (off, v) in cur.as_mut_slice().iter_mut().enumerate() {
            let il = (off / sl) % nl;
            let it = (off / stt) % nt;
            *v /= self.d_l[il] + self.d_t[it];
        }
        if let Some(phi) = &self.phi_l {
            cur.mode_product_into(phi, l, &mut tmp);
            std::mem::swap(&mut cur, &mut tmp);
        }
        if let Some(phi) = &self.phi_t {
            cur.mode_product_into(phi, t, &mut tmp);
            std::mem::swap(&mut cur, &mut tmp);
        }
        Ok(cur)
    }

    /// Smallest divisor `d_l[i] + d_t[j]`.
    pub fn min_divisor(&self) -> T {
        self.d_l.min() + self.d_t.min()
    }
}
