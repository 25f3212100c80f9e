//! Collocation transforms between eigen-coefficients and grid values.
//!
//! Dirichlet sine: nodes `x_j = j / (M + 1)`, `j = 1..=M`, weight `1 / (M + 1)`.
//! Neumann cosine: midpoint nodes `x_j = (j - 1/2) / M`, weight `1 / M`.
//! In both cases the sampled basis is orthonormal for the weighted discrete
//! inner product, so analysis is `weight * synthesis^T` exactly.

use std::f64::consts::PI;

use crate::error::{check_dim, invalid, Result};
use crate::spectral::BasisKind;

/// Dense synthesis/analysis pair for `M` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformPlan {
    basis: BasisKind,
    modes: usize,
    weight: f64,
    // Row `n` holds b_n sampled at every node.
    by_mode: Vec<f64>,
    // Row `j` holds every b_n evaluated at node j.
    by_node: Vec<f64>,
}

impl TransformPlan {
    pub fn new(basis: BasisKind, modes: usize) -> Result<Self> {
        if modes == 0 {
            return invalid("transform needs at least one mode");
        }
        let m = modes as f64;
        let (weight, value): (f64, Box<dyn Fn(usize, usize) -> f64>) = match basis {
            BasisKind::DirichletSine => (
                1.0 / (m + 1.0),
                Box::new(move |j, n| {
                    let x = (j + 1) as f64 / (m + 1.0);
                    2f64.sqrt() * ((n + 1) as f64 * PI * x).sin()
                }),
            ),
            BasisKind::NeumannCosine => (
                1.0 / m,
                Box::new(move |j, n| {
                    if n == 0 {
                        1.0
                    } else {
                        let x = (j as f64 + 0.5) / m;
                        2f64.sqrt() * (n as f64 * PI * x).cos()
                    }
                }),
            ),
            BasisKind::Abstract => {
                return invalid("an abstract basis has no collocation transform");
            }
        };
        let mut by_mode = vec![0.0; modes * modes];
        let mut by_node = vec![0.0; modes * modes];
        for j in 0..modes {
            for n in 0..modes {
                let v = value(j, n);
                by_mode[n * modes + j] = v;
                by_node[j * modes + n] = v;
            }
        }
        Ok(TransformPlan {
            basis,
            modes,
            weight,
            by_mode,
            by_node,
        })
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Quadrature weight of every collocation node.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Collocation nodes in `(0, 1)`.
    pub fn nodes(&self) -> Vec<f64> {
        let m = self.modes as f64;
        (0..self.modes)
            .map(|j| match self.basis {
                BasisKind::NeumannCosine => (j as f64 + 0.5) / m,
                _ => (j + 1) as f64 / (m + 1.0),
            })
            .collect()
    }

    /// Entry `(node j, mode n)` of the synthesis matrix.
    pub fn synthesis_entry(&self, j: usize, n: usize) -> f64 {
        self.by_node[j * self.modes + n]
    }

    /// Grid values `v(x_j) = sum_n c_n b_n(x_j)`.
    pub fn synthesize(&self, coeffs: &[f64], values: &mut [f64]) -> Result<()> {
        check_dim(self.modes, coeffs.len())?;
        check_dim(self.modes, values.len())?;
        self.synthesize_into(coeffs, values);
        Ok(())
    }

    /// Coefficients `c_n = w sum_j v_j b_n(x_j)`.
    pub fn analyze(&self, values: &[f64], coeffs: &mut [f64]) -> Result<()> {
        check_dim(self.modes, coeffs.len())?;
        check_dim(self.modes, values.len())?;
        self.analyze_into(values, coeffs);
        Ok(())
    }

    pub(crate) fn synthesize_into(&self, coeffs: &[f64], values: &mut [f64]) {
        accumulate_rows(&self.by_mode, self.modes, coeffs, values, 1.0);
    }

    pub(crate) fn analyze_into(&self, values: &[f64], coeffs: &mut [f64]) {
        accumulate_rows(&self.by_node, self.modes, values, coeffs, self.weight);
    }
}

const BLOCK: usize = 32;

// out[j] = scale * sum_n x[n] * rows[n][j], summed in increasing n.
// Outputs are processed in register-sized blocks so the accumulators stay in
// registers across the whole sweep over n.
fn accumulate_rows(rows: &[f64], m: usize, x: &[f64], out: &mut [f64], scale: f64) {
    let mut j0 = 0;
    while j0 + BLOCK <= m {
        let mut acc = [0.0f64; BLOCK];
        for (n, &c) in x.iter().enumerate() {
            let row: &[f64; BLOCK] = rows[n * m + j0..n * m + j0 + BLOCK].try_into().expect("block length");
            for l in 0..BLOCK {
                acc[l] += c * row[l];
            }
        }
        for l in 0..BLOCK {
            out[j0 + l] = acc[l] * scale;
        }
        j0 += BLOCK;
    }
    if j0 < m {
        let tail = &mut out[j0..];
        tail.fill(0.0);
        for (n, &c) in x.iter().enumerate() {
            for (o, r) in tail.iter_mut().zip(&rows[n * m + j0..(n + 1) * m]) {
                *o += c * r;
            }
        }
        for o in tail.iter_mut() {
            *o *= scale;
        }
    }
}
