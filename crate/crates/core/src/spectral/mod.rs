//! Diagonal spectral representation of the generator `A`.
//!
//! A state is stored by its coordinates in the eigenbasis of `A`, so the
//! semigroup, the resolvent and the linear-implicit evolution family all act
//! componentwise.

mod grid;
mod special;

pub use grid::{ceil_grid, ceil_index, floor_grid, floor_index, steps_for, TimeGrid};
pub use special::mittag_leffler_e;

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};

/// Orthonormal basis the eigenvalues refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    /// `b_n(x) = sqrt(2) sin(n pi x)`, `n = 1..=M`.
    DirichletSine,
    /// `b_0 = 1`, `b_n(x) = sqrt(2) cos(n pi x)`, `n = 0..M`.
    NeumannCosine,
    /// No function-space realization; only the coefficients matter.
    Abstract,
}

/// Generator `A` given by its (strictly negative) eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalOperator {
    eigenvalues: Vec<f64>,
    basis: BasisKind,
}

impl DiagonalOperator {
    pub fn new(eigenvalues: Vec<f64>, basis: BasisKind) -> Result<Self> {
        if eigenvalues.is_empty() {
            return invalid("operator needs at least one mode");
        }
        if let Some((i, l)) = eigenvalues
            .iter()
            .enumerate()
            .find(|(_, l)| !(l.is_finite() && **l < 0.0))
        {
            return invalid(format!("eigenvalue {i} must be finite and negative, got {l}"));
        }
        Ok(DiagonalOperator { eigenvalues, basis })
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    fn check(&self, x: &CoeffState) -> Result<()> {
        check_dim(self.modes(), x.len())
    }

    /// `e^{tA} x`.
    pub fn semigroup(&self, t: f64, x: &CoeffState) -> Result<CoeffState> {
        if !(t >= 0.0) || !t.is_finite() {
            return invalid(format!("semigroup time must be finite and >= 0, got {t}"));
        }
        self.check(x)?;
        Ok(self.zip_map(x, |l, xi| (l * t).exp() * xi))
    }

    /// `(I - hA)^{-1} x`.
    pub fn resolvent(&self, h: f64, x: &CoeffState) -> Result<CoeffState> {
        if !(h > 0.0) || !h.is_finite() {
            return invalid(format!("resolvent lag must be positive, got {h}"));
        }
        self.check(x)?;
        Ok(self.zip_map(x, |l, xi| xi / (1.0 - h * l)))
    }

    /// Linear-implicit Euler evolution family
    /// `(I - (t1 - floor_h t1) A) (I - (t2 - floor_h t2) A)^{-1} (I - hA)^{-m} x`,
    /// with `m = (floor_h t2 - floor_h t1) / h` taken as an exact integer.
    pub fn implicit_family(&self, h: f64, t1: f64, t2: f64, x: &CoeffState) -> Result<CoeffState> {
        if !(t1 < t2) {
            return invalid(format!("evolution family needs t1 < t2, got t1={t1}, t2={t2}"));
        }
        if t1 < 0.0 {
            return invalid(format!("evolution family needs t1 >= 0, got {t1}"));
        }
        self.check(x)?;
        let k1 = floor_index(t1, h)?;
        let k2 = floor_index(t2, h)?;
        let f1 = k1 as f64 * h;
        let f2 = k2 as f64 * h;
        let exact = (f2 - f1) / h;
        let m = k2 - k1;
        if (exact - m as f64).abs() >= 1e-9 * (m as f64).max(1.0) {
            return invalid(format!("step count {exact} between grid floors is not an integer"));
        }
        let lag1 = t1 - f1;
        let lag2 = t2 - f2;
        let m = i32::try_from(m).map_err(|_| {
            crate::error::Error::InvalidArgument(format!("too many steps in evolution family: {m}"))
        })?;
        Ok(self.zip_map(x, |l, xi| {
            (1.0 - lag1 * l) / (1.0 - lag2 * l) * (1.0 - h * l).powi(-m) * xi
        }))
    }

    /// `|| (-A)^r x ||_H = sqrt( sum_i |lambda_i|^{2r} x_i^2 )`.
    pub fn hr_norm(&self, r: f64, x: &CoeffState) -> Result<f64> {
        self.check(x)?;
        let sum: f64 = self
            .eigenvalues
            .iter()
            .zip(x.iter())
            .map(|(l, xi)| {
                let w = if r == 0.0 { 1.0 } else { l.abs().powf(r) };
                (w * xi) * (w * xi)
            })
            .sum();
        Ok(sum.sqrt())
    }

    fn zip_map(&self, x: &CoeffState, f: impl Fn(f64, f64) -> f64) -> CoeffState {
        CoeffState(
            self.eigenvalues
                .iter()
                .zip(x.iter())
                .map(|(&l, &xi)| f(l, xi))
                .collect(),
        )
    }
}

/// Coordinates `<b_i, v>_H` of a truncated state in the eigenbasis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoeffState(pub Vec<f64>);

impl CoeffState {
    pub fn zeros(modes: usize) -> Self {
        CoeffState(vec![0.0; modes])
    }

    /// Unit state `e_k` (0-based index).
    pub fn unit(modes: usize, k: usize) -> Self {
        let mut v = vec![0.0; modes];
        v[k] = 1.0;
        CoeffState(v)
    }

    pub fn from_vec(v: Vec<f64>) -> Result<Self> {
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return invalid(format!("state coefficients must be finite, found {x}"));
        }
        Ok(CoeffState(v))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sq_norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.sq_norm().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Deref for CoeffState {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for CoeffState {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for CoeffState {
    fn from(v: Vec<f64>) -> Self {
        CoeffState(v)
    }
}
