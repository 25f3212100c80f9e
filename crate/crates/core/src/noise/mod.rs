//! Discretized cylindrical Wiener process.
//!
//! A [`NoiseBundle`] holds the Brownian increments `Delta W_n^{b_i}` of every
//! retained mode on a dyadic grid. Coarser grids are obtained by exact
//! pairwise block sums, so all resolutions are driven by one path.

mod rng;

pub use rng::{derive_seed, inverse_normal_cdf, mix64, philox4x32};

use std::cell::Cell;
use std::io::{Read, Write};

use crate::error::{check_dim, invalid, Error, Result};
use crate::spectral::DiagonalOperator;

/// Key tag separating the auxiliary stream from the increment stream.
const AUX_TAG: u64 = 0xA5A5_5A5A_C3C3_3C3C;

thread_local! {
    static POISONED: Cell<bool> = const { Cell::new(false) };
}

/// While alive, any draw on this thread panics. Used to prove that a
/// computation is deterministic.
#[derive(Debug)]
pub struct RngPoison {
    previous: bool,
}

pub fn poison_rng() -> RngPoison {
    RngPoison {
        previous: POISONED.with(|p| p.replace(true)),
    }
}

impl Drop for RngPoison {
    fn drop(&mut self) {
        POISONED.with(|p| p.set(self.previous));
    }
}

#[inline]
fn assert_unpoisoned() {
    if POISONED.with(|p| p.get()) {
        panic!("random draw inside a computation declared deterministic");
    }
}

/// Write `M` increments of step `n` (standard deviation `scale`) into `out`.
///
/// Entry `i` depends only on `(key, i, n)`.
#[inline]
pub fn fill_column(key: u64, step: u64, scale: f64, out: &mut [f64]) {
    assert_unpoisoned();
    rng::fill_normals(key, step, scale, out);
}

/// Brownian increments, row-major `modes x steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBundle {
    modes: usize,
    steps: usize,
    t_end: f64,
    seed: u64,
    increments: Vec<f64>,
}

impl NoiseBundle {
    /// Draw `Normal(0, T / steps)` increments keyed by `seed`; `steps` must be a power of two.
    pub fn sample(modes: usize, steps: usize, t_end: f64, seed: u64) -> Result<Self> {
        if modes == 0 {
            return invalid("noise needs at least one mode");
        }
        if !steps.is_power_of_two() {
            return invalid(format!("step count must be a power of two, got {steps}"));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return invalid(format!("terminal time must be positive, got {t_end}"));
        }
        let scale = (t_end / steps as f64).sqrt();
        let mut increments = vec![0.0; modes * steps];
        let mut col = vec![0.0; modes];
        for n in 0..steps {
            fill_column(seed, n as u64, scale, &mut col);
            for (i, v) in col.iter().enumerate() {
                increments[i * steps + n] = *v;
            }
        }
        Ok(NoiseBundle {
            modes,
            steps,
            t_end,
            seed,
            increments,
        })
    }

    /// Build a bundle from explicit increments (row-major `modes x steps`).
    pub fn from_increments(modes: usize, steps: usize, t_end: f64, seed: u64, increments: Vec<f64>) -> Result<Self> {
        if modes == 0 || steps == 0 {
            return invalid("bundle dimensions must be positive");
        }
        check_dim(modes * steps, increments.len())?;
        if !(t_end > 0.0) {
            return invalid(format!("terminal time must be positive, got {t_end}"));
        }
        Ok(NoiseBundle {
            modes,
            steps,
            t_end,
            seed,
            increments,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn h(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, mode: usize, step: usize) -> f64 {
        self.increments[mode * self.steps + step]
    }

    pub fn row(&self, mode: usize) -> &[f64] {
        &self.increments[mode * self.steps..(mode + 1) * self.steps]
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Increments of every mode at one step.
    pub fn column(&self, step: usize, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.increments[i * self.steps + step];
        }
    }

    /// Sum consecutive blocks of `factor` steps.
    ///
    /// Sums are formed as a balanced binary tree of pairwise additions, so
    /// `coarsen(coarsen(b, 2), 2)` and `coarsen(b, 4)` agree bit for bit.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.steps % factor != 0 {
            return invalid(format!("factor {factor} does not divide {} steps", self.steps));
        }
        if !factor.is_power_of_two() {
            return invalid(format!("coarsening factor must be a power of two, got {factor}"));
        }
        let mut data = self.increments.clone();
        let mut steps = self.steps;
        let mut f = factor;
        while f > 1 {
            let half = steps / 2;
            let mut next = vec![0.0; self.modes * half];
            for i in 0..self.modes {
                let row = &data[i * steps..(i + 1) * steps];
                for k in 0..half {
                    next[i * half + k] = row[2 * k] + row[2 * k + 1];
                }
            }
            data = next;
            steps = half;
            f /= 2;
        }
        Ok(NoiseBundle {
            modes: self.modes,
            steps,
            t_end: self.t_end,
            seed: self.seed,
            increments: data,
        })
    }

    /// Little-endian dump: `u64 M, u64 N, f64 T, u64 seed`, then `M * N` row-major `f64`.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&(self.modes as u64).to_le_bytes())?;
        w.write_all(&(self.steps as u64).to_le_bytes())?;
        w.write_all(&self.t_end.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for v in &self.increments {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut next = |r: &mut dyn Read| -> Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let modes = u64::from_le_bytes(next(&mut r)?) as usize;
        let steps = u64::from_le_bytes(next(&mut r)?) as usize;
        let t_end = f64::from_le_bytes(next(&mut r)?);
        let seed = u64::from_le_bytes(next(&mut r)?);
        let len = modes
            .checked_mul(steps)
            .ok_or_else(|| Error::Serialization("bundle header overflows".into()))?;
        let mut increments = Vec::with_capacity(len);
        for _ in 0..len {
            increments.push(f64::from_le_bytes(next(&mut r)?));
        }
        Self::from_increments(modes, steps, t_end, seed, increments)
    }
}

/// Joint law of `(Delta W, I)` for one mode over one step of length `h`, where
/// `I = int_0^h e^{lambda (h - s)} dW_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionLaw {
    pub var_increment: f64,
    pub var_convolution: f64,
    pub covariance: f64,
    residual: f64,
}

impl ConvolutionLaw {
    pub fn new(lambda: f64, h: f64) -> Self {
        let a = lambda.abs();
        let x = a * h;
        let (var_convolution, covariance) = if x < 1e-8 {
            (h * (1.0 - x), h * (1.0 - 0.5 * x))
        } else {
            (-(-2.0 * x).exp_m1() / (2.0 * a), -(-x).exp_m1() / a)
        };
        // The direct difference cancels catastrophically for small x.
        let residual = if x < 2e-3 {
            h * x * x / 12.0 * (1.0 - x + 17.0 * x * x / 30.0)
        } else {
            (var_convolution - covariance * covariance / h).max(0.0)
        };
        ConvolutionLaw {
            var_increment: h,
            var_convolution,
            covariance,
            residual,
        }
    }

    /// Regression coefficient of `I` on `Delta W`.
    pub fn slope(&self) -> f64 {
        self.covariance / self.var_increment
    }

    /// `Var(I | Delta W) = Var(I) - Cov^2 / h`.
    pub fn residual_variance(&self) -> f64 {
        self.residual
    }

    pub fn correlation(&self) -> f64 {
        self.covariance / (self.var_increment * self.var_convolution).sqrt()
    }
}

/// Per-step stochastic convolutions, row-major `modes x steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionIncrements {
    modes: usize,
    steps: usize,
    values: Vec<f64>,
}

impl ConvolutionIncrements {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn get(&self, mode: usize, step: usize) -> f64 {
        self.values[mode * self.steps + step]
    }

    pub fn column(&self, step: usize, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.values[i * self.steps + step];
        }
    }
}

/// Sample `I_{i,n} = int_{t_n}^{t_{n+1}} e^{lambda_i (t_{n+1} - s)} dW_s^{b_i}` jointly
/// with the bundle's increments, conditioning on `Delta W` and drawing the
/// residual from an independent stream keyed by `aux_seed`.
pub fn convolution_increments(
    op: &DiagonalOperator,
    bundle: &NoiseBundle,
    aux_seed: u64,
) -> Result<ConvolutionIncrements> {
    check_dim(op.modes(), bundle.modes())?;
    let h = bundle.h();
    let key = aux_key(aux_seed);
    let mut values = vec![0.0; bundle.modes * bundle.steps];
    let mut aux = vec![0.0; bundle.modes];
    let laws: Vec<ConvolutionLaw> = op.eigenvalues().iter().map(|&l| ConvolutionLaw::new(l, h)).collect();
    for n in 0..bundle.steps {
        fill_column(key, n as u64, 1.0, &mut aux);
        for (i, law) in laws.iter().enumerate() {
            let dw = bundle.get(i, n);
            values[i * bundle.steps + n] = law.slope() * dw + law.residual_variance().sqrt() * aux[i];
        }
    }
    Ok(ConvolutionIncrements {
        modes: bundle.modes,
        steps: bundle.steps,
        values,
    })
}

pub(crate) fn aux_key(aux_seed: u64) -> u64 {
    mix64(aux_seed ^ AUX_TAG)
}

/// Two standard normals for the counter `(a, b)` under `key`.
pub fn normal_pair(key: u64, a: u64, b: u64) -> (f64, f64) {
    assert_unpoisoned();
    rng::normal_pair(key, a, b)
}
