use rayon::prelude::*;

use super::{objective_with, FastSolveCache, IterationRecord, Operators, Residuals, SolverConfig};
use crate::error::Result;
use crate::prox::{shrink, svt_rows};
use crate::scalar::Real;
use crate::tensor::DenseTensor;

/// Primal and dual ADMM variables. The spatial and temporal splitting
/// variables and their duals exist only when the matching term is active.
#[derive(Clone, Debug)]
pub struct SolverState<T: Real> {
    pub y: DenseTensor<T>,
    pub x: DenseTensor<T>,
    pub s: DenseTensor<T>,
    pub w: DenseTensor<T>,
    pub w_l: Option<DenseTensor<T>>,
    pub w_t: Option<DenseTensor<T>>,
    pub x_i: Vec<DenseTensor<T>>,
    /// Dual of `W = S`.
    pub dual: DenseTensor<T>,
    /// Dual of `X + S = Y`.
    pub dual_f: DenseTensor<T>,
    pub dual_l: Option<DenseTensor<T>>,
    pub dual_t: Option<DenseTensor<T>>,
    pub dual_i: Vec<DenseTensor<T>>,
    pub iteration: usize,
    /// `S ×_l L_n` and `S ×_t Δ` for the current `S`, carried from the dual
    /// step of one iteration to the `W` step of the next.
    products: Option<Products<T>>,
}

type Products<T> = (Option<DenseTensor<T>>, Option<DenseTensor<T>>);

impl<T: Real> SolverState<T> {
    pub fn new(y: DenseTensor<T>, ops: &Operators<T>) -> Self {
        let shape = y.shape().to_vec();
        let zeros = || DenseTensor::zeros(&shape);
        let wt_shape = ops.temporal.as_ref().map(|d| {
            let mut s = shape.clone();
            s[ops.time_mode] = d.nrows();
            s
        });
        let n = shape.len();
        Self {
            x: zeros(),
            s: zeros(),
            w: zeros(),
            w_l: ops.spatial.as_ref().map(|_| zeros()),
            w_t: wt_shape.as_ref().map(|s| DenseTensor::zeros(s)),
            x_i: (0..n).map(|_| zeros()).collect(),
            dual: zeros(),
            dual_f: zeros(),
            dual_l: ops.spatial.as_ref().map(|_| zeros()),
            dual_t: wt_shape.as_ref().map(|s| DenseTensor::zeros(s)),
            dual_i: (0..n).map(|_| zeros()).collect(),
            y,
            iteration: 0,
            products: None,
        }
    }

    /// `X = (Σ_i (X_i - Λ_i/ρ) + (Y - S - Λ_f/ρ)) / (N + 1)`.
    pub fn update_x(&self, rho: T) -> DenseTensor<T> {
        let inv_rho = T::one() / rho;
        let mut acc = self.y.clone();
        acc.add_assign_scaled(-T::one(), &self.s);
        acc.add_assign_scaled(-inv_rho, &self.dual_f);
        for (xi, li) in self.x_i.iter().zip(&self.dual_i) {
            acc.add_assign_scaled(T::one(), xi);
            acc.add_assign_scaled(-inv_rho, li);
        }
        let denom = T::c((self.x_i.len() + 1) as f64);
        acc.map(|v| v / denom)
    }

    fn s_products(&self, ops: &Operators<T>) -> Result<Products<T>> {
        let sl = match &ops.spatial {
            Some(ln) => Some(self.s.mode_product(ln, ops.location_mode)?),
            None => None,
        };
        let st = match &ops.temporal {
            Some(d) => Some(self.s.mode_product(d, ops.time_mode)?),
            None => None,
        };
        Ok((sl, st))
    }

    /// Soft-threshold updates of `W`, `W_l`, `W_t` from the current `S`.
    #[allow(clippy::type_complexity)]
    pub fn update_w_group(
        &self,
        cfg: &SolverConfig<T>,
        ops: &Operators<T>,
    ) -> Result<(DenseTensor<T>, Option<DenseTensor<T>>, Option<DenseTensor<T>>)> {
        self.w_group_from(cfg, self.s_products(ops)?)
    }

    #[allow(clippy::type_complexity)]
    fn w_group_from(
        &self,
        cfg: &SolverConfig<T>,
        (sl, st): Products<T>,
    ) -> Result<(DenseTensor<T>, Option<DenseTensor<T>>, Option<DenseTensor<T>>)> {
        let inv_rho = T::one() / cfg.rho;
        let prox = |arg: DenseTensor<T>, dual: &DenseTensor<T>, lambda: T| {
            let thr = lambda * inv_rho;
            arg.zip_with(dual, |a, d| shrink(a - d * inv_rho, thr))
        };
        let w = prox(self.s.clone(), &self.dual, cfg.lambda1)?;
        let w_l = match (sl, &self.dual_l) {
            (Some(sl), Some(dl)) => Some(prox(sl, dl, cfg.lambda_l)?),
            _ => None,
        };
        let w_t = match (st, &self.dual_t) {
            (Some(st), Some(dt)) => Some(prox(st, dt, cfg.lambda_t)?),
            _ => None,
        };
        Ok((w, w_l, w_t))
    }

    /// `X_i = fold(SVT(unfold(X + Λ_i/ρ, i), ψ_i/ρ))` for every mode, using the
    /// already-updated `X`. Also returns the retained ranks.
    pub fn update_xi(&self, cfg: &SolverConfig<T>) -> Result<(Vec<DenseTensor<T>>, Vec<usize>)> {
        let inv_rho = T::one() / cfg.rho;
        let shape = self.x.shape().to_vec();
        let out: Vec<(DenseTensor<T>, usize)> = (0..shape.len())
            .into_par_iter()
            .map(|mode| {
                let mut arg = self.x.clone();
                arg.add_assign_scaled(inv_rho, &self.dual_i[mode]);
                let rows = shape[mode];
                let buf = arg.unfold_rows(mode);
                let res = svt_rows(rows, arg.len() / rows, &buf, cfg.psi[mode] * inv_rho)?;
                Ok((DenseTensor::fold_rows(&shape, mode, &res.output), res.retained_rank))
            })
            .collect::<Result<_>>()?;
        Ok(out.into_iter().unzip())
    }

    /// Right-hand side of the S-update normal equations:
    /// `(W_t + Λ_t/ρ) ×_t Δᵀ + (W_l + Λ_l/ρ) ×_l L_nᵀ + (W + Λ/ρ) + (Y - X - Λ_f/ρ)`.
    pub fn s_update_rhs(&self, ops: &Operators<T>, rho: T) -> Result<DenseTensor<T>> {
        let inv_rho = T::one() / rho;
        let mut b = self.y.clone();
        b.add_assign_scaled(-T::one(), &self.x);
        b.add_assign_scaled(-inv_rho, &self.dual_f);
        b.add_assign_scaled(T::one(), &self.w);
        b.add_assign_scaled(inv_rho, &self.dual);
        if let (Some(adj), Some(wl), Some(dl)) = (&ops.spatial_adjoint, &self.w_l, &self.dual_l) {
            let mut arg = wl.clone();
            arg.add_assign_scaled(inv_rho, dl);
            b.add_assign_scaled(T::one(), &arg.mode_product(adj, ops.location_mode)?);
        }
        if let (Some(adj), Some(wt), Some(dt)) = (&ops.temporal_adjoint, &self.w_t, &self.dual_t) {
            let mut arg = wt.clone();
            arg.add_assign_scaled(inv_rho, dt);
            b.add_assign_scaled(T::one(), &arg.mode_product(adj, ops.time_mode)?);
        }
        Ok(b)
    }

    /// `S = G^{-1} B`.
    pub fn update_s(&self, ops: &Operators<T>, cache: &FastSolveCache<T>, rho: T) -> Result<DenseTensor<T>> {
        cache.solve(&self.s_update_rhs(ops, rho)?)
    }

    /// Dual ascent on every constraint; returns the constraint violations
    /// (before scaling by ρ) as residuals relative to `‖Y‖_F`.
    pub fn update_duals(&mut self, ops: &Operators<T>, rho: T) -> Result<Residuals> {
        let products = self.s_products(ops)?;
        self.duals_from(rho, &products)
    }

    fn duals_from(&mut self, rho: T, (sl, st): &Products<T>) -> Result<Residuals> {
        let y_norm = self.y.frobenius_norm().to_f64_lossy();
        let scale = if y_norm > 0.0 { 1.0 / y_norm } else { 1.0 };

        let mut viol = self.w.clone();
        viol.add_assign_scaled(-T::one(), &self.s);
        let w = viol.frobenius_norm().to_f64_lossy() * scale;
        self.dual.add_assign_scaled(rho, &viol);

        let mut viol = self.x.clone();
        viol.add_assign_scaled(T::one(), &self.s);
        viol.add_assign_scaled(-T::one(), &self.y);
        let fidelity = viol.frobenius_norm().to_f64_lossy() * scale;
        self.dual_f.add_assign_scaled(rho, &viol);

        let mut wt = 0.0;
        if let (Some(st), Some(w_t), Some(dual_t)) = (st, &self.w_t, &mut self.dual_t) {
            let mut viol = w_t.clone();
            viol.add_assign_scaled(-T::one(), st);
            wt = viol.frobenius_norm().to_f64_lossy() * scale;
            dual_t.add_assign_scaled(rho, &viol);
        }
        let mut wl = 0.0;
        if let (Some(sl), Some(w_l), Some(dual_l)) = (sl, &self.w_l, &mut self.dual_l) {
            let mut viol = w_l.clone();
            viol.add_assign_scaled(-T::one(), sl);
            wl = viol.frobenius_norm().to_f64_lossy() * scale;
            dual_l.add_assign_scaled(rho, &viol);
        }
        let mut xi_max = 0.0f64;
        for (xi, li) in self.x_i.iter().zip(self.dual_i.iter_mut()) {
            let mut viol = self.x.clone();
            viol.add_assign_scaled(-T::one(), xi);
            xi_max = xi_max.max(viol.frobenius_norm().to_f64_lossy() * scale);
            li.add_assign_scaled(rho, &viol);
        }
        Ok(Residuals {
            fidelity,
            w,
            wl,
            wt,
            xi_max,
        })
    }

    /// One full ADMM iteration.
    pub fn step(
        &mut self,
        cfg: &SolverConfig<T>,
        ops: &Operators<T>,
        cache: &FastSolveCache<T>,
    ) -> Result<IterationRecord> {
        // block 1: X, W, W_l, W_t (all from the previous S and duals)
        let x = self.update_x(cfg.rho);
        let products = match self.products.take() {
            Some(p) => p,
            None => self.s_products(ops)?,
        };
        let (w, w_l, w_t) = self.w_group_from(cfg, products)?;
        self.x = x;
        self.w = w;
        self.w_l = w_l;
        self.w_t = w_t;
        // block 2: X_i from the new X, then S
        let (x_i, ranks) = self.update_xi(cfg)?;
        self.x_i = x_i;
        self.s = self.update_s(ops, cache, cfg.rho)?;
        let products = self.s_products(ops)?;
        let residuals = self.duals_from(cfg.rho, &products)?;
        self.iteration += 1;
        let objective = objective_with(&self.x, &self.s, cfg, products.0.as_ref(), products.1.as_ref())?.to_f64_lossy();
        self.products = Some(products);
        Ok(IterationRecord {
            iter: self.iteration,
            objective,
            residuals,
            ranks,
        })
    }
}
