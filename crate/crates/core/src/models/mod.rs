//! Concrete stochastic evolution equations on a truncated eigenbasis.
//!
//! A [`ModelSpec`] bundles the generator, the drift `F`, the diffusion `B`,
//! the initial state and the nominal regularity parameter `gamma`.

mod transform;

pub use transform::TransformPlan;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, invalid, Result};
use crate::spectral::{BasisKind, CoeffState, DiagonalOperator};

/// User drift in coefficient space.
pub type DriftFn = dyn Fn(&CoeffState) -> CoeffState + Send + Sync;

/// Drift `F`.
#[derive(Clone)]
pub enum Drift {
    Zero,
    Identity,
    /// Coefficient-space map with an optional declared Lipschitz constant in `H`.
    Custom {
        f: Arc<DriftFn>,
        lipschitz: Option<f64>,
    },
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Zero => write!(f, "Zero"),
            Drift::Identity => write!(f, "Identity"),
            Drift::Custom { lipschitz, .. } => write!(f, "Custom(lipschitz={lipschitz:?})"),
        }
    }
}

/// Diffusion `B`.
#[derive(Debug, Clone)]
pub enum Diffusion {
    /// Nemytskii product `(B(v)u)(x) = kappa v(x) u(x)`, projected by collocation.
    Multiplicative { kappa: f64, plan: Arc<TransformPlan> },
    /// `B u = sum_n mu_n <b_n, u> b_n`, independent of the state.
    AdditiveDiagonal { mu: Vec<f64> },
}

/// Which built-in family a model came from; drives the perturbation constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelFamily {
    Anderson { nu: f64 },
    CahnHilliardCook,
    DiagonalAdditive { c: f64, rho: f64, delta: f64 },
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    operator: DiagonalOperator,
    drift: Drift,
    diffusion: Diffusion,
    initial: CoeffState,
    gamma: f64,
    t_end: f64,
    family: ModelFamily,
}

impl ModelSpec {
    /// Assemble a model; checks dimensions, `gamma` in `[0, 1/2]` and `T > 0`.
    pub fn new(
        operator: DiagonalOperator,
        drift: Drift,
        diffusion: Diffusion,
        initial: CoeffState,
        gamma: f64,
        t_end: f64,
        family: ModelFamily,
    ) -> Result<Self> {
        let m = operator.modes();
        check_dim(m, initial.len())?;
        if !initial.is_finite() {
            return invalid("initial state must be finite");
        }
        match &diffusion {
            Diffusion::AdditiveDiagonal { mu } => {
                check_dim(m, mu.len())?;
                if mu.iter().any(|x| !x.is_finite()) {
                    return invalid("diffusion weights must be finite");
                }
            }
            Diffusion::Multiplicative { kappa, plan } => {
                check_dim(m, plan.modes())?;
                if plan.basis() != operator.basis() {
                    return invalid("transform basis does not match the operator basis");
                }
                if !kappa.is_finite() {
                    return invalid("kappa must be finite");
                }
            }
        }
        if !(0.0..=0.5).contains(&gamma) {
            return invalid(format!("gamma must lie in [0, 1/2], got {gamma}"));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return invalid(format!("terminal time must be positive, got {t_end}"));
        }
        Ok(ModelSpec {
            operator,
            drift,
            diffusion,
            initial,
            gamma,
            t_end,
            family,
        })
    }

    pub fn operator(&self) -> &DiagonalOperator {
        &self.operator
    }

    pub fn modes(&self) -> usize {
        self.operator.modes()
    }

    pub fn drift(&self) -> &Drift {
        &self.drift
    }

    pub fn diffusion(&self) -> &Diffusion {
        &self.diffusion
    }

    pub fn initial(&self) -> &CoeffState {
        &self.initial
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn with_initial(mut self, initial: CoeffState) -> Result<Self> {
        check_dim(self.modes(), initial.len())?;
        self.initial = initial;
        Ok(self)
    }

    pub fn with_t_end(mut self, t_end: f64) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return invalid(format!("terminal time must be positive, got {t_end}"));
        }
        self.t_end = t_end;
        Ok(self)
    }

    /// Replace the drift by a user map; `lipschitz` is its Lipschitz constant on `H`, if known.
    pub fn with_custom_drift(
        mut self,
        f: impl Fn(&CoeffState) -> CoeffState + Send + Sync + 'static,
        lipschitz: Option<f64>,
    ) -> Self {
        self.drift = Drift::Custom {
            f: Arc::new(f),
            lipschitz,
        };
        self
    }

    /// `true` when `B` does not depend on the state.
    pub fn is_additive(&self) -> bool {
        matches!(self.diffusion, Diffusion::AdditiveDiagonal { .. })
    }

    /// `F(y)`.
    pub fn drift_eval(&self, y: &CoeffState) -> Result<CoeffState> {
        check_dim(self.modes(), y.len())?;
        Ok(match &self.drift {
            Drift::Zero => CoeffState::zeros(self.modes()),
            Drift::Identity => y.clone(),
            Drift::Custom { f, .. } => {
                let mut out = f(y).into_inner();
                out.resize(self.modes(), 0.0);
                CoeffState(out)
            }
        })
    }

    /// `B(y) w` for a coefficient-space noise vector `w`.
    pub fn diffusion_apply(&self, y: &CoeffState, w: &CoeffState) -> Result<CoeffState> {
        check_dim(self.modes(), y.len())?;
        check_dim(self.modes(), w.len())?;
        let mut out = CoeffState::zeros(self.modes());
        let mut scratch = DiffusionScratch::new(self.modes());
        self.diffusion_into(y, w, &mut out, &mut scratch);
        Ok(out)
    }

    /// `B(y) w` written into `out`; slices must have `modes()` entries.
    pub(crate) fn diffusion_into(
        &self,
        y: &[f64],
        w: &[f64],
        out: &mut [f64],
        scratch: &mut DiffusionScratch,
    ) {
        match &self.diffusion {
            Diffusion::AdditiveDiagonal { mu } => {
                for ((o, m), wi) in out.iter_mut().zip(mu).zip(w) {
                    *o = m * wi;
                }
            }
            Diffusion::Multiplicative { kappa, plan } => {
                if *kappa == 0.0 {
                    out.fill(0.0);
                    return;
                }
                plan.synthesize_into(y, &mut scratch.state_grid);
                plan.synthesize_into(w, &mut scratch.noise_grid);
                for (s, n) in scratch.state_grid.iter_mut().zip(&scratch.noise_grid) {
                    *s = kappa * *s * n;
                }
                plan.analyze_into(&scratch.state_grid, out);
            }
        }
    }
}

/// Work buffers for the collocation product.
#[derive(Debug, Clone)]
pub(crate) struct DiffusionScratch {
    state_grid: Vec<f64>,
    noise_grid: Vec<f64>,
}

impl DiffusionScratch {
    pub(crate) fn new(modes: usize) -> Self {
        DiffusionScratch {
            state_grid: vec![0.0; modes],
            noise_grid: vec![0.0; modes],
        }
    }
}

/// Parabolic Anderson model `dX = nu X_xx dt + kappa X dW` with Dirichlet conditions on `(0, 1)`.
pub fn build_anderson(
    modes: usize,
    nu: f64,
    kappa: f64,
    initial: CoeffState,
    t_end: f64,
) -> Result<ModelSpec> {
    if modes == 0 {
        return invalid("need at least one mode");
    }
    if !(nu > 0.0) || !nu.is_finite() {
        return invalid(format!("diffusivity nu must be positive, got {nu}"));
    }
    let eig = (1..=modes)
        .map(|n| -nu * PI * PI * (n * n) as f64)
        .collect();
    let operator = DiagonalOperator::new(eig, BasisKind::DirichletSine)?;
    let plan = Arc::new(TransformPlan::new(BasisKind::DirichletSine, modes)?);
    ModelSpec::new(
        operator,
        Drift::Zero,
        Diffusion::Multiplicative { kappa, plan },
        initial,
        0.5,
        t_end,
        ModelFamily::Anderson { nu },
    )
}

/// Eigenvalue `-(n pi)^4 + (n pi)^2 - 1` of the linear Cahn-Hilliard-Cook operator.
pub fn chc_eigenvalue(n: usize) -> f64 {
    let x = (n as f64 * PI).powi(2);
    -(x * x) + x - 1.0
}

/// Linear Cahn-Hilliard-Cook type equation with Neumann conditions and drift `F(v) = v`.
pub fn build_chc(modes: usize, kappa: f64, initial: CoeffState, t_end: f64) -> Result<ModelSpec> {
    if modes == 0 {
        return invalid("need at least one mode");
    }
    let eig = (0..modes).map(chc_eigenvalue).collect();
    let operator = DiagonalOperator::new(eig, BasisKind::NeumannCosine)?;
    let plan = Arc::new(TransformPlan::new(BasisKind::NeumannCosine, modes)?);
    ModelSpec::new(
        operator,
        Drift::Identity,
        Diffusion::Multiplicative { kappa, plan },
        initial,
        0.25,
        t_end,
        ModelFamily::CahnHilliardCook,
    )
}

/// Linear model with `lambda_n = -c n^rho`, additive noise `mu_n = |lambda_n|^delta` and zero start.
pub fn build_diagonal_additive(
    modes: usize,
    c: f64,
    rho: f64,
    delta: f64,
    t_end: f64,
) -> Result<ModelSpec> {
    if modes == 0 {
        return invalid("need at least one mode");
    }
    if !(c > 0.0) || !(rho > 0.0) {
        return invalid(format!("need c > 0 and rho > 0, got c={c}, rho={rho}"));
    }
    let eig: Vec<f64> = (1..=modes).map(|n| -c * (n as f64).powf(rho)).collect();
    let mu = eig.iter().map(|l| l.abs().powf(delta)).collect();
    let operator = DiagonalOperator::new(eig, BasisKind::Abstract)?;
    ModelSpec::new(
        operator,
        Drift::Zero,
        Diffusion::AdditiveDiagonal { mu },
        CoeffState::zeros(modes),
        // Nominal label only; gamma is not meaningful for the lower-bound family.
        0.5,
        t_end,
        ModelFamily::DiagonalAdditive { c, rho, delta },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anderson(m: usize, kappa: f64) -> ModelSpec {
        build_anderson(m, 1.0, kappa, CoeffState::unit(m, 0), 1.0).unwrap()
    }

    #[test]
    fn anderson_eigenvalues_and_gamma() {
        let model = anderson(3, 0.5);
        let want = [-PI * PI, -4.0 * PI * PI, -9.0 * PI * PI];
        for (l, w) in model.operator().eigenvalues().iter().zip(want) {
            assert!((l - w).abs() < 1e-12);
        }
        assert_eq!(model.gamma(), 0.5);
        assert!(build_anderson(3, 0.0, 0.5, CoeffState::zeros(3), 1.0).is_err());
        assert!(build_anderson(3, 1.0, 0.5, CoeffState::zeros(2), 1.0).is_err());
    }

    #[test]
    fn chc_eigenvalues_and_gamma() {
        assert_eq!(chc_eigenvalue(0), -1.0);
        let p2 = PI * PI;
        assert!((chc_eigenvalue(1) - (-p2 * p2 + p2 - 1.0)).abs() < 1e-12);
        assert!(chc_eigenvalue(1) < -88.0 && chc_eigenvalue(1) > -89.0);
        let model = build_chc(16, 0.5, CoeffState::unit(16, 0), 1.0).unwrap();
        assert_eq!(model.gamma(), 0.25);
        assert!(model.operator().eigenvalues().iter().all(|l| *l < 0.0));
    }

    #[test]
    fn diagonal_additive_weights() {
        let m = build_diagonal_additive(5, PI * PI, 2.0, 0.0, 1.0).unwrap();
        let Diffusion::AdditiveDiagonal { mu } = m.diffusion() else {
            panic!("expected additive diffusion")
        };
        assert!(mu.iter().all(|x| *x == 1.0));
        let a = anderson(5, 0.5);
        assert_eq!(m.operator().eigenvalues(), a.operator().eigenvalues());

        let m = build_diagonal_additive(3, 1.0, 1.0, -1.0, 1.0).unwrap();
        let Diffusion::AdditiveDiagonal { mu } = m.diffusion() else {
            panic!("expected additive diffusion")
        };
        assert!((mu[2] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.initial().sq_norm(), 0.0);
    }

    #[test]
    fn drift_kinds() {
        let y = CoeffState(vec![1.0, -2.0, 0.5]);
        assert_eq!(anderson(3, 0.5).drift_eval(&y).unwrap(), CoeffState::zeros(3));
        let chc = build_chc(3, 0.5, CoeffState::zeros(3), 1.0).unwrap();
        assert_eq!(chc.drift_eval(&y).unwrap(), y);
        let custom = anderson(3, 0.5).with_custom_drift(|v| CoeffState(v.iter().map(|x| -x).chain([9.0]).collect()), None);
        assert_eq!(custom.drift_eval(&y).unwrap().0, vec![-1.0, 2.0, -0.5]);
        assert!(chc.drift_eval(&CoeffState::zeros(2)).is_err());
    }

    #[test]
    fn additive_diffusion_is_componentwise() {
        let mut m = build_diagonal_additive(2, 1.0, 1.0, 0.0, 1.0).unwrap();
        m.diffusion = Diffusion::AdditiveDiagonal { mu: vec![1.0, 2.0] };
        let out = m
            .diffusion_apply(&CoeffState(vec![7.0, 7.0]), &CoeffState(vec![3.0, 4.0]))
            .unwrap();
        assert_eq!(out.0, vec![3.0, 8.0]);
    }

    #[test]
    fn zero_kappa_kills_noise() {
        let m = anderson(8, 0.0);
        let out = m
            .diffusion_apply(&CoeffState(vec![1.0; 8]), &CoeffState(vec![2.0; 8]))
            .unwrap();
        assert!(out.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn constant_state_multiplies_noise_by_kappa() {
        // The constant function is exactly the Neumann mode 0, so the collocation
        // product reproduces kappa * w up to roundoff.
        let kappa = 0.7;
        let m = build_chc(12, kappa, CoeffState::zeros(12), 1.0).unwrap();
        let w = CoeffState((0..12).map(|i| (i as f64 * 0.37).sin()).collect());
        let out = m.diffusion_apply(&CoeffState::unit(12, 0), &w).unwrap();
        for (o, wi) in out.iter().zip(w.iter()) {
            assert!((o - kappa * wi).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_product_matches_brute_force_grid() {
        // Brute force: evaluate both fields at the nodes from the basis formula,
        // multiply, and project with the quadrature rule.
        let m = 6;
        let kappa = 0.5;
        let model = anderson(m, kappa);
        let y = CoeffState((0..m).map(|i| 1.0 / (i + 1) as f64).collect());
        let w = CoeffState((0..m).map(|i| (-1f64).powi(i as i32) * 0.3).collect());
        let got = model.diffusion_apply(&y, &w).unwrap();
        let node = |j: usize| (j + 1) as f64 / (m + 1) as f64;
        let b = |n: usize, x: f64| 2f64.sqrt() * ((n + 1) as f64 * PI * x).sin();
        for k in 0..m {
            let mut acc = 0.0;
            for j in 0..m {
                let x = node(j);
                let yv: f64 = (0..m).map(|n| y[n] * b(n, x)).sum();
                let wv: f64 = (0..m).map(|n| w[n] * b(n, x)).sum();
                acc += kappa * yv * wv * b(k, x);
            }
            acc /= (m + 1) as f64;
            assert!((got[k] - acc).abs() < 1e-12, "mode {k}: {} vs {acc}", got[k]);
        }
    }

    #[test]
    fn multiplicative_diffusion_is_bilinear() {
        let m = anderson(10, 0.8);
        let y1 = CoeffState((0..10).map(|i| (i as f64).cos()).collect());
        let y2 = CoeffState((0..10).map(|i| (i as f64 * 0.5).sin()).collect());
        let w = CoeffState((0..10).map(|i| 1.0 / (1.0 + i as f64)).collect());
        let sum: CoeffState = y1.iter().zip(y2.iter()).map(|(a, b)| 2.0 * a - 3.0 * b).collect::<Vec<_>>().into();
        let lhs = m.diffusion_apply(&sum, &w).unwrap();
        let a = m.diffusion_apply(&y1, &w).unwrap();
        let b = m.diffusion_apply(&y2, &w).unwrap();
        for i in 0..10 {
            assert!((lhs[i] - (2.0 * a[i] - 3.0 * b[i])).abs() < 1e-12);
        }
        // Symmetric in the two arguments.
        let swapped = m.diffusion_apply(&w, &y1).unwrap();
        for i in 0..10 {
            assert!((swapped[i] - a[i]).abs() < 1e-12);
        }
    }
}
