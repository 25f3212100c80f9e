//! Monte Carlo error estimation, rate fitting and deterministic sweeps.

mod engine;
mod estimators;
mod perturbation;
mod sweep;

pub use engine::{coupled_map, run_indexed, CoupledLevels, Threads};
pub use estimators::{
    estimate_strong_error, estimate_strong_errors, estimate_weak_error, estimate_weak_error_independent,
    estimate_weak_errors, strong_rate_report, weak_rate_report, McConfig,
};
pub use perturbation::{
    perturbation_check, perturbation_constants, perturbation_rhs, PerturbationConstants, PerturbationOutcome,
};
pub use sweep::{lower_bound_sweep, weak_lower_bound_sweep, LowerBoundReport, LowerBoundRow};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// One Monte Carlo error estimate at resolution `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Error points with their log-log fit.
///
/// Fit fields are `None` (written as `nan` in CSV) when fewer than two points are usable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub points: Vec<ErrorPoint>,
    pub fitted_order: Option<f64>,
    pub fit_intercept: Option<f64>,
    pub fit_r2: Option<f64>,
    /// Residuals of the fit in log space, one per point used.
    pub residuals: Vec<f64>,
    pub warnings: Vec<String>,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
}

impl ExperimentReport {
    /// Sort points by `N`, fit `log |estimate|` against `log(h)` and check monotonicity.
    ///
    /// Weak estimates are signed differences; only their magnitude enters the fit.
    pub fn from_points(experiment: &str, mut points: Vec<ErrorPoint>, seed: u64) -> Self {
        points.sort_by_key(|p| p.n);
        let mut warnings = Vec::new();
        let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.h, p.estimate.abs())).collect();
        let (fitted_order, fit_intercept, fit_r2, residuals) = match fit_rate(&pairs) {
            Ok(fit) => {
                warnings.extend(fit.warnings.iter().cloned());
                (Some(fit.order), Some(fit.intercept), Some(fit.r2), fit.residuals)
            }
            Err(e) => {
                warnings.push(format!("no rate fit: {e}"));
                (None, None, None, Vec::new())
            }
        };
        for w in points.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let slack = 2.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
            if b.estimate.abs() > a.estimate.abs() + slack {
                warnings.push(format!(
                    "error does not decrease from N={} to N={} ({} -> {})",
                    a.n, b.n, a.estimate, b.estimate
                ));
            }
        }
        ExperimentReport {
            experiment: experiment.to_string(),
            points,
            fitted_order,
            fit_intercept,
            fit_r2,
            residuals,
            warnings,
            config: BTreeMap::new(),
            seed,
        }
    }

    pub fn with_config(mut self, config: BTreeMap<String, String>) -> Self {
        self.config = config;
        self
    }
}

/// Least-squares line through `(log h, log error)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub order: f64,
    pub intercept: f64,
    pub r2: f64,
    pub residuals: Vec<f64>,
    /// Indices of input points dropped for a nonpositive error.
    pub excluded: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Fit `error ~ exp(intercept) h^order`; nonpositive errors are dropped with a warning.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    let mut warnings = Vec::new();
    for (i, &(h, e)) in points.iter().enumerate() {
        if !(h > 0.0) || !h.is_finite() {
            return invalid(format!("step size must be positive, got {h}"));
        }
        if e > 0.0 && e.is_finite() {
            xs.push(h.ln());
            ys.push(e.ln());
        } else {
            excluded.push(i);
            warnings.push(format!("point h={h} has nonpositive error {e}; excluded from fit"));
        }
    }
    if xs.len() < 2 {
        return invalid(format!("need at least 2 positive errors to fit a rate, got {}", xs.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("all step sizes are equal; slope undefined");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let order = sxy / sxx;
    let intercept = my - order * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + order * x)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(RateFit {
        order,
        intercept,
        r2,
        residuals,
        excluded,
        warnings,
    })
}

/// A named test functional on coefficient vectors.
#[derive(Debug, Clone, Copy)]
pub struct TestFunctional {
    pub name: &'static str,
    pub eval: fn(&[f64]) -> f64,
    /// `false` when the functional is unbounded and so outside the smooth bounded class.
    pub bounded: bool,
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn exp_neg_sq_norm(v: &[f64]) -> f64 {
    (-sq_norm(v)).exp()
}

fn first_mode_sq(v: &[f64]) -> f64 {
    v.first().map_or(0.0, |x| x * x)
}

const REGISTRY: [TestFunctional; 3] = [
    TestFunctional {
        name: "exp_neg_sq_norm",
        eval: exp_neg_sq_norm,
        bounded: true,
    },
    TestFunctional {
        name: "sq_norm",
        eval: sq_norm,
        bounded: false,
    },
    TestFunctional {
        name: "first_mode_sq",
        eval: first_mode_sq,
        bounded: false,
    },
];

pub fn test_functional_registry() -> &'static [TestFunctional] {
    &REGISTRY
}

pub fn functional(name: &str) -> Result<TestFunctional> {
    REGISTRY.iter().copied().find(|f| f.name == name).ok_or_else(|| {
        let known: Vec<_> = REGISTRY.iter().map(|f| f.name).collect();
        crate::error::Error::InvalidArgument(format!("unknown functional '{name}' (known: {})", known.join(", ")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_laws() {
        let hs = [0.1, 0.05, 0.025];
        let fit = fit_rate(&hs.map(|h| (h, h))).unwrap();
        assert!((fit.order - 1.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        let fit = fit_rate(&hs.map(|h| (h, 3.0 * h.sqrt()))).unwrap();
        assert!((fit.order - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fit_excludes_nonpositive() {
        let fit = fit_rate(&[(0.1, 0.1), (0.05, 0.0), (0.025, 0.025), (0.0125, -1.0)]).unwrap();
        assert_eq!(fit.excluded, vec![1, 3]);
        assert_eq!(fit.warnings.len(), 2);
        assert!((fit.order - 1.0).abs() < 1e-12);
        assert!(fit_rate(&[(0.1, 0.1), (0.05, 0.0)]).is_err());
        assert!(fit_rate(&[(0.1, 0.1)]).is_err());
    }

    #[test]
    fn jittered_power_law() {
        // Deterministic +-5% multiplicative jitter.
        let jitter = [1.05, 0.95, 1.03, 0.97, 1.05, 0.95, 1.0];
        let pts: Vec<(f64, f64)> = (0..7)
            .map(|k| {
                let h = 2f64.powi(-(k + 3));
                (h, 2.0 * h.powf(0.75) * jitter[k as usize])
            })
            .collect();
        let fit = fit_rate(&pts).unwrap();
        assert!((fit.order - 0.75).abs() < 0.05, "{}", fit.order);
    }

    #[test]
    fn registry_entries() {
        let f = functional("exp_neg_sq_norm").unwrap();
        assert_eq!((f.eval)(&[0.0, 0.0]), 1.0);
        assert_eq!((functional("sq_norm").unwrap().eval)(&[1.0, 0.0]), 1.0);
        assert_eq!((functional("first_mode_sq").unwrap().eval)(&[3.0, 4.0]), 9.0);
        assert!(!functional("sq_norm").unwrap().bounded);
        assert!(functional("nope").is_err());
        assert_eq!(test_functional_registry().len(), 3);
    }

    #[test]
    fn report_without_fit() {
        let p = ErrorPoint {
            n: 8,
            h: 0.125,
            estimate: 0.0,
            std_error: 0.0,
            samples: 10,
        };
        let r = ExperimentReport::from_points("weak-rate", vec![p], 1);
        assert!(r.fitted_order.is_none());
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn report_flags_increasing_errors() {
        let mk = |n: usize, e: f64| ErrorPoint {
            n,
            h: 1.0 / n as f64,
            estimate: e,
            std_error: 1e-4,
            samples: 100,
        };
        let r = ExperimentReport::from_points("strong-rate", vec![mk(16, 0.2), mk(8, 0.1)], 0);
        assert_eq!(r.points[0].n, 8);
        assert!(r.warnings.iter().any(|w| w.contains("does not decrease")));
    }

    proptest! {
        #[test]
        fn exp_neg_sq_norm_bounded(v in prop::collection::vec(-10.0f64..10.0, 0..16)) {
            let f = (functional("exp_neg_sq_norm").unwrap().eval)(&v);
            prop_assert!(f > 0.0 || v.iter().any(|x| x.abs() > 5.0));
            prop_assert!(f <= 1.0);
        }
    }
}
