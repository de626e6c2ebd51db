//! Incrementally refit complex ridge regression.
//!
//! Maintains `A⁻¹ = (X*X + λI)⁻¹` together with the normalized moments
//! `X*X / N` and `X*Y / N`. New blocks of rows are absorbed either with a
//! Woodbury update of `A⁻¹` (an `M_b × M_b` solve) or by a direct inverse of
//! the normalized Gram matrix with the regularizer annealed to `λ / N`.

use nalgebra::{Cholesky, DMatrix};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Condition estimate above which the Woodbury inner solve is rejected.
pub const MAX_INNER_CONDITION: f64 = 1e12;

/// How a block of rows is absorbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateStrategy {
    /// Woodbury when the block has fewer rows than the feature dimension,
    /// direct recompute otherwise or when the inner solve is ill conditioned.
    #[default]
    Auto,
    Woodbury,
    Direct,
}

/// The path actually taken by [`OnlineRidge::fit_rows`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdatePath {
    Woodbury,
    Direct,
    /// Woodbury was attempted but the inner matrix was ill conditioned.
    DirectFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineRidge {
    pub(crate) a_inv: CMatrix,
    pub(crate) gram_norm: CMatrix,
    pub(crate) cross_norm: CMatrix,
    pub(crate) weight: CMatrix,
    pub(crate) n_samples: u64,
    pub(crate) lambda: f64,
    pub strategy: UpdateStrategy,
}

impl OnlineRidge {
    pub fn new(features: usize, outputs: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be positive, got {lambda}")));
        }
        if features == 0 || outputs == 0 {
            return Err(Error::config("ridge dimensions must be positive"));
        }
        let zero = Complex64::new(0.0, 0.0);
        Ok(OnlineRidge {
            a_inv: CMatrix::identity(features, features) * Complex64::new(1.0 / lambda, 0.0),
            gram_norm: CMatrix::from_element(features, features, zero),
            cross_norm: CMatrix::from_element(features, outputs, zero),
            weight: CMatrix::from_element(features, outputs, zero),
            n_samples: 0,
            lambda,
            strategy: UpdateStrategy::Auto,
        })
    }

    pub fn features(&self) -> usize {
        self.a_inv.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `(X*X + λI)⁻¹` over all rows absorbed so far.
    pub fn a_inv(&self) -> &CMatrix {
        &self.a_inv
    }

    /// `X*X / N`.
    pub fn gram_norm(&self) -> &CMatrix {
        &self.gram_norm
    }

    /// `X*Y / N`.
    pub fn cross_norm(&self) -> &CMatrix {
        &self.cross_norm
    }

    /// Ridge weights `A⁻¹ X*Y`, refreshed after every fit.
    pub fn weight(&self) -> &CMatrix {
        &self.weight
    }

    /// Absorb a block of rows: `x` is `M_b × features`, `y` is `M_b × outputs`.
    pub fn fit_rows(&mut self, x: &CMatrix, y: &CMatrix) -> Result<UpdatePath> {
        let rows = x.nrows();
        if rows == 0 {
            return Err(Error::EmptyBlock);
        }
        if x.ncols() != self.features() {
            return Err(Error::ShapeMismatch {
                what: "design row",
                expected: self.features(),
                got: x.ncols(),
            });
        }
        if y.ncols() != self.outputs() || y.nrows() != rows {
            return Err(Error::ShapeMismatch {
                what: "target block",
                expected: self.outputs(),
                got: y.ncols(),
            });
        }

        let n_old = self.n_samples as f64;
        let n_new = n_old + rows as f64;
        let x_adj = x.adjoint();
        let keep = Complex64::new(n_old / n_new, 0.0);
        let add = Complex64::new(1.0 / n_new, 0.0);
        self.gram_norm = &self.gram_norm * keep + (&x_adj * x) * add;
        self.cross_norm = &self.cross_norm * keep + (&x_adj * y) * add;
        self.n_samples += rows as u64;

        let use_woodbury = match self.strategy {
            UpdateStrategy::Auto => rows < self.features(),
            UpdateStrategy::Woodbury => true,
            UpdateStrategy::Direct => false,
        };
        let path = if use_woodbury {
            match woodbury_downdate(&self.a_inv, x) {
                Ok(a_inv) => {
                    self.a_inv = a_inv;
                    UpdatePath::Woodbury
                }
                Err(e) if self.strategy == UpdateStrategy::Woodbury => return Err(e),
                Err(_) => {
                    self.recompute_inverse()?;
                    UpdatePath::DirectFallback
                }
            }
        } else {
            self.recompute_inverse()?;
            UpdatePath::Direct
        };
        self.refresh_weight();
        Ok(path)
    }

    /// Rebuild `A⁻¹` from the normalized Gram matrix:
    /// `(X*X + λI)⁻¹ = (X*X/N + (λ/N) I)⁻¹ / N`.
    pub fn recompute_inverse(&mut self) -> Result<()> {
        let d = self.features();
        if self.n_samples == 0 {
            self.a_inv = CMatrix::identity(d, d) * Complex64::new(1.0 / self.lambda, 0.0);
            return Ok(());
        }
        let n = self.n_samples as f64;
        let mut normalized = self.gram_norm.clone();
        for i in 0..d {
            normalized[(i, i)] += Complex64::new(self.lambda / n, 0.0);
        }
        hermitian_part(&mut normalized);
        let chol = Cholesky::new(normalized)
            .ok_or(Error::IllConditionedUpdate(f64::INFINITY))?;
        let mut inv = chol.inverse() * Complex64::new(1.0 / n, 0.0);
        hermitian_part(&mut inv);
        self.a_inv = inv;
        Ok(())
    }

    fn refresh_weight(&mut self) {
        let n = Complex64::new(self.n_samples as f64, 0.0);
        self.weight = (&self.a_inv * &self.cross_norm) * n;
    }

    /// Regularized least-squares objective `‖XW − Y‖² + λ‖W‖²` for arbitrary `w`.
    pub fn objective(&self, w: &CMatrix, x: &CMatrix, y: &CMatrix) -> f64 {
        (x * w - y).norm_squared() + self.lambda * w.norm_squared()
    }

    pub(crate) fn from_parts(
        a_inv: CMatrix,
        gram_norm: CMatrix,
        cross_norm: CMatrix,
        weight: CMatrix,
        n_samples: u64,
        lambda: f64,
    ) -> Self {
        OnlineRidge {
            a_inv,
            gram_norm,
            cross_norm,
            weight,
            n_samples,
            lambda,
            strategy: UpdateStrategy::Auto,
        }
    }
}

/// `A⁻¹ − A⁻¹X*(I + X A⁻¹ X*)⁻¹ X A⁻¹` for Hermitian `A⁻¹`.
pub fn woodbury_downdate(a_inv: &CMatrix, x: &CMatrix) -> Result<CMatrix> {
    let rows = x.nrows();
    let p = a_inv * x.adjoint();
    let mut inner = x * &p;
    for i in 0..rows {
        inner[(i, i)] += Complex64::new(1.0, 0.0);
    }
    hermitian_part(&mut inner);
    let chol = Cholesky::new(inner).ok_or(Error::IllConditionedUpdate(f64::INFINITY))?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .map(|c| c.re.abs())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let condition = (hi / lo).powi(2);
    if condition.is_nan() || condition > MAX_INNER_CONDITION {
        return Err(Error::IllConditionedUpdate(condition));
    }
    let k = chol.solve(&p.adjoint());
    let mut out = a_inv - p * k;
    hermitian_part(&mut out);
    Ok(out)
}

/// Replace `m` with `(m + m*) / 2`.
pub(crate) fn hermitian_part(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}
