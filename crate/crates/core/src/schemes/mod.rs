//! Time integrators on the spectral coefficients.
//!
//! Both Euler-type schemes freeze `F` and `B` at the left grid point and then
//! apply a diagonal factor: `e^{h lambda}` (exponential Euler) or
//! `1 / (1 - h lambda)` (linear-implicit Euler).

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::models::{DiffusionScratch, Diffusion, Drift, ModelSpec};
use crate::noise::{aux_key, fill_column, ConvolutionIncrements, ConvolutionLaw, NoiseBundle};
use crate::spectral::{CoeffState, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    #[serde(alias = "exp-euler")]
    ExponentialEuler,
    #[serde(alias = "implicit-euler")]
    LinearImplicitEuler,
    /// Exact semigroup with coefficients frozen along an Euler path; diagnostic only.
    IntegratedCounterpart,
    /// Exact Gaussian sampling; requires zero drift and additive diagonal noise.
    ExactLinearAdditive,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::ExponentialEuler => "exponential-euler",
            SchemeKind::LinearImplicitEuler => "linear-implicit-euler",
            SchemeKind::IntegratedCounterpart => "integrated-counterpart",
            SchemeKind::ExactLinearAdditive => "exact-linear-additive",
        }
    }

    /// `true` for the two schemes that advance by one frozen-coefficient step.
    pub fn is_stepping(self) -> bool {
        matches!(self, SchemeKind::ExponentialEuler | SchemeKind::LinearImplicitEuler)
    }

    /// Whether this kind can be run on `model` at all.
    pub fn applicable_to(self, model: &ModelSpec) -> bool {
        match self {
            SchemeKind::ExponentialEuler | SchemeKind::LinearImplicitEuler => true,
            SchemeKind::IntegratedCounterpart => true,
            SchemeKind::ExactLinearAdditive => {
                matches!(model.drift(), Drift::Zero) && model.is_additive()
            }
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exponential-euler" | "exp-euler" => SchemeKind::ExponentialEuler,
            "linear-implicit-euler" | "implicit-euler" => SchemeKind::LinearImplicitEuler,
            "integrated-counterpart" => SchemeKind::IntegratedCounterpart,
            "exact-linear-additive" => SchemeKind::ExactLinearAdditive,
            other => return invalid(format!("unknown scheme '{other}'")),
        })
    }
}

/// One frozen-coefficient step with precomputed diagonal factors.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    model: &'a ModelSpec,
    h: f64,
    factor: Vec<f64>,
    noise: Vec<f64>,
    scratch: DiffusionScratch,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a ModelSpec, kind: SchemeKind, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return invalid(format!("step size must be positive, got {h}"));
        }
        let eig = model.operator().eigenvalues();
        let factor = match kind {
            SchemeKind::ExponentialEuler => eig.iter().map(|l| (l * h).exp()).collect(),
            SchemeKind::LinearImplicitEuler => eig.iter().map(|l| 1.0 / (1.0 - h * l)).collect(),
            other => return invalid(format!("{other} is not a stepping scheme")),
        };
        let m = model.modes();
        Ok(Stepper {
            model,
            h,
            factor,
            noise: vec![0.0; m],
            scratch: DiffusionScratch::new(m),
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Diagonal factor applied after the frozen-coefficient update.
    pub fn factor(&self) -> &[f64] {
        &self.factor
    }

    /// Advance `y` in place by one step driven by `dw`.
    pub fn step(&mut self, y: &mut [f64], dw: &[f64]) {
        self.frozen_update(y, dw);
        for (yi, f) in y.iter_mut().zip(&self.factor) {
            *yi *= f;
        }
    }

    /// `y <- y + h F(y) + B(y) dw` without the linear factor.
    pub(crate) fn frozen_update(&mut self, y: &mut [f64], dw: &[f64]) {
        self.model.diffusion_into(y, dw, &mut self.noise, &mut self.scratch);
        let h = self.h;
        match self.model.drift() {
            Drift::Zero => {
                for (yi, b) in y.iter_mut().zip(&self.noise) {
                    *yi += b;
                }
            }
            Drift::Identity => {
                for (yi, b) in y.iter_mut().zip(&self.noise) {
                    *yi = *yi + h * *yi + b;
                }
            }
            Drift::Custom { .. } => {
                let f = self
                    .model
                    .drift_eval(&CoeffState(y.to_vec()))
                    .expect("state has model dimension");
                for ((yi, fi), b) in y.iter_mut().zip(f.iter()).zip(&self.noise) {
                    *yi = *yi + h * fi + b;
                }
            }
        }
    }

    /// `F(y)` and `B(y) dw` separately.
    pub(crate) fn coefficients(&mut self, y: &[f64], dw: &[f64], drift: &mut [f64], noise: &mut [f64]) {
        self.model.diffusion_into(y, dw, noise, &mut self.scratch);
        match self.model.drift() {
            Drift::Zero => drift.fill(0.0),
            Drift::Identity => drift.copy_from_slice(y),
            Drift::Custom { .. } => {
                let f = self
                    .model
                    .drift_eval(&CoeffState(y.to_vec()))
                    .expect("state has model dimension");
                drift.copy_from_slice(&f);
            }
        }
    }
}

fn single_step(model: &ModelSpec, kind: SchemeKind, y: &CoeffState, dw: &CoeffState, h: f64) -> Result<CoeffState> {
    check_dim(model.modes(), y.len())?;
    check_dim(model.modes(), dw.len())?;
    let mut stepper = Stepper::new(model, kind, h)?;
    let mut out = y.clone();
    stepper.step(&mut out, dw);
    Ok(out)
}

/// `e^{hA}(y + h F(y) + B(y) dw)`.
pub fn exp_euler_step(model: &ModelSpec, y: &CoeffState, dw: &CoeffState, h: f64) -> Result<CoeffState> {
    single_step(model, SchemeKind::ExponentialEuler, y, dw, h)
}

/// `(I - hA)^{-1}(y + h F(y) + B(y) dw)`.
pub fn implicit_euler_step(model: &ModelSpec, y: &CoeffState, dw: &CoeffState, h: f64) -> Result<CoeffState> {
    single_step(model, SchemeKind::LinearImplicitEuler, y, dw, h)
}

/// Terminal state and, when requested, every grid value `Y_0..=Y_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutput {
    pub terminal: CoeffState,
    pub path: Option<Vec<CoeffState>>,
}

/// Run `bundle.steps()` steps from the model's initial state; returns `Y_N`.
pub fn simulate_path(model: &ModelSpec, kind: SchemeKind, bundle: &NoiseBundle) -> Result<CoeffState> {
    Ok(simulate_path_with(model, kind, bundle, false)?.terminal)
}

pub fn simulate_path_with(
    model: &ModelSpec,
    kind: SchemeKind,
    bundle: &NoiseBundle,
    record: bool,
) -> Result<PathOutput> {
    check_bundle(model, bundle)?;
    if !kind.is_stepping() {
        return invalid(format!("simulate_path needs a stepping scheme, got {kind}"));
    }
    let mut stepper = Stepper::new(model, kind, bundle.h())?;
    let mut y = model.initial().clone();
    let mut dw = vec![0.0; model.modes()];
    let mut path = record.then(|| vec![y.clone()]);
    for n in 0..bundle.steps() {
        bundle.column(n, &mut dw);
        stepper.step(&mut y, &dw);
        if let Some(p) = path.as_mut() {
            p.push(y.clone());
        }
    }
    Ok(PathOutput { terminal: y, path })
}

fn check_bundle(model: &ModelSpec, bundle: &NoiseBundle) -> Result<()> {
    check_dim(model.modes(), bundle.modes())?;
    let rel = (bundle.t_end() - model.t_end()).abs() / model.t_end();
    if rel > 1e-12 {
        return invalid(format!(
            "bundle horizon {} does not match model horizon {}",
            bundle.t_end(),
            model.t_end()
        ));
    }
    Ok(())
}

/// `(e^{lambda h} - 1) / lambda`, with `h (1 + lambda h / 2)` when `|lambda h| < 1e-8`.
pub fn phi1_weight(lambda: f64, h: f64) -> f64 {
    let x = lambda * h;
    if x.abs() < 1e-8 {
        h * (1.0 + 0.5 * x)
    } else {
        x.exp_m1() / lambda
    }
}

/// Terminal values of the integrated counterpart and of the Euler path feeding it.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterpartOutput {
    pub counterpart: CoeffState,
    pub euler: CoeffState,
}

/// `Ybar_{n+1} = e^{hA} Ybar_n + D_h F(Y_n) + B(Y_n) I_n` alongside the Euler path `Y` of kind `base`.
///
/// `I_n` holds per noise mode the convolution against that mode's own eigenvalue,
/// which is exact when `B` is diagonal. For the collocation product it is the
/// per-mode surrogate of the full operator-valued convolution.
pub fn integrated_counterpart_path(
    model: &ModelSpec,
    base: SchemeKind,
    bundle: &NoiseBundle,
    conv: Option<&ConvolutionIncrements>,
) -> Result<CounterpartOutput> {
    check_bundle(model, bundle)?;
    let Some(conv) = conv else {
        return invalid("integrated counterpart needs convolution increments");
    };
    if conv.modes() != bundle.modes() || conv.steps() != bundle.steps() {
        return invalid("convolution increments do not match the noise bundle");
    }
    let m = model.modes();
    let h = bundle.h();
    let mut stepper = Stepper::new(model, base, h)?;
    let eig = model.operator().eigenvalues();
    let semigroup: Vec<f64> = eig.iter().map(|l| (l * h).exp()).collect();
    let weight: Vec<f64> = eig.iter().map(|&l| phi1_weight(l, h)).collect();

    let mut y = model.initial().clone();
    let mut bar = model.initial().clone();
    let mut dw = vec![0.0; m];
    let mut cv = vec![0.0; m];
    let mut drift = vec![0.0; m];
    let mut noise = vec![0.0; m];
    for n in 0..bundle.steps() {
        bundle.column(n, &mut dw);
        conv.column(n, &mut cv);
        stepper.coefficients(&y, &cv, &mut drift, &mut noise);
        for i in 0..m {
            bar[i] = semigroup[i] * bar[i] + weight[i] * drift[i] + noise[i];
        }
        stepper.step(&mut y, &dw);
    }
    Ok(CounterpartOutput {
        counterpart: bar,
        euler: y,
    })
}

/// Coupled terminal values for the linear additive model.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearAdditiveSample {
    /// Exact solution `X_T`.
    pub exact: CoeffState,
    /// Exponential Euler `Y_1`.
    pub exp_euler: CoeffState,
    /// Linear-implicit Euler `Y_2`.
    pub implicit_euler: CoeffState,
}

/// Draw `(X_T, Y_1, Y_2)` driven by one Brownian path on `grid`.
///
/// Increments match `NoiseBundle::sample(M, N, T, seed)` entry for entry, and
/// the residual of each exact convolution is drawn from the auxiliary stream
/// that `convolution_increments(.., seed)` uses.
pub fn exact_linear_additive_sample(model: &ModelSpec, grid: &TimeGrid, seed: u64) -> Result<LinearAdditiveSample> {
    Ok(LinearAdditiveSampler::new(model, grid)?.sample(seed))
}

/// [`exact_linear_additive_sample`] with the per-mode coefficients computed once.
#[derive(Debug, Clone)]
pub struct LinearAdditiveSampler {
    initial: Vec<f64>,
    mu: Vec<f64>,
    exp_f: Vec<f64>,
    imp_f: Vec<f64>,
    slope: Vec<f64>,
    resid: Vec<f64>,
    steps: usize,
    h: f64,
}

impl LinearAdditiveSampler {
    pub fn new(model: &ModelSpec, grid: &TimeGrid) -> Result<Self> {
        if !SchemeKind::ExactLinearAdditive.applicable_to(model) {
            return invalid("exact sampling needs zero drift and additive diagonal noise");
        }
        let Diffusion::AdditiveDiagonal { mu } = model.diffusion() else {
            unreachable!("checked above")
        };
        let h = grid.h();
        let eig = model.operator().eigenvalues();
        let laws: Vec<ConvolutionLaw> = eig.iter().map(|&l| ConvolutionLaw::new(l, h)).collect();
        Ok(LinearAdditiveSampler {
            initial: model.initial().to_vec(),
            mu: mu.clone(),
            exp_f: eig.iter().map(|l| (l * h).exp()).collect(),
            imp_f: eig.iter().map(|l| 1.0 / (1.0 - h * l)).collect(),
            slope: laws.iter().map(|l| l.slope()).collect(),
            resid: laws.iter().map(|l| l.residual_variance().sqrt()).collect(),
            steps: grid.steps(),
            h,
        })
    }

    pub fn sample(&self, seed: u64) -> LinearAdditiveSample {
        let m = self.mu.len();
        let mut x = self.initial.clone();
        let mut y1 = self.initial.clone();
        let mut y2 = self.initial.clone();
        let mut dw = vec![0.0; m];
        let mut z = vec![0.0; m];
        let akey = aux_key(seed);
        let scale = self.h.sqrt();
        for n in 0..self.steps {
            fill_column(seed, n as u64, scale, &mut dw);
            fill_column(akey, n as u64, 1.0, &mut z);
            for i in 0..m {
                let mu = self.mu[i];
                let conv = self.slope[i] * dw[i] + self.resid[i] * z[i];
                x[i] = self.exp_f[i] * x[i] + mu * conv;
                y1[i] = self.exp_f[i] * (y1[i] + mu * dw[i]);
                y2[i] = self.imp_f[i] * (y2[i] + mu * dw[i]);
            }
        }
        LinearAdditiveSample {
            exact: CoeffState(x),
            exp_euler: CoeffState(y1),
            implicit_euler: CoeffState(y2),
        }
    }
}
