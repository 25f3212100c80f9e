//! Coupled weak and strong error estimators.
//!
//! The reference is the same scheme on the finest grid, driven by the fine
//! increments whose block sums drive every coarse path.

use std::collections::BTreeMap;

use super::engine::{coupled_map, CoupledLevels, Threads};
use super::{ErrorPoint, ExperimentReport, TestFunctional};
use crate::error::{invalid, Result};
use crate::models::ModelSpec;
use crate::schemes::SchemeKind;

/// Sample count, run seed and worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub threads: Threads,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        McConfig {
            samples,
            seed,
            threads: Threads::Auto,
        }
    }

    pub fn with_threads(mut self, threads: Threads) -> Self {
        self.threads = threads;
        self
    }
}

// Sample mean and standard deviation, summed in sample order.
fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, var.sqrt(), n)
}

fn check_request(ns: &[usize], n_ref: usize, mc: &McConfig) -> Result<Vec<String>> {
    if mc.samples < 2 {
        return invalid(format!("need at least 2 samples, got {}", mc.samples));
    }
    let mut warnings = Vec::new();
    for &n in ns {
        if n > 0 && n_ref % n == 0 && n < n_ref && n_ref / n < 8 {
            warnings.push(format!(
                "N_ref/N = {} for N={n}; the reference should be at least 8 times finer",
                n_ref / n
            ));
        }
    }
    Ok(warnings)
}

/// Coupled weak error estimates `mean[phi(Y_ref) - phi(Y_N)]` for every `N` in `ns`.
pub fn estimate_weak_errors(
    model: &ModelSpec,
    kind: SchemeKind,
    phi: &TestFunctional,
    ns: &[usize],
    n_ref: usize,
    mc: &McConfig,
) -> Result<(Vec<ErrorPoint>, Vec<String>)> {
    let mut warnings = check_request(ns, n_ref, mc)?;
    if !phi.bounded {
        warnings.push(format!("functional {} is unbounded", phi.name));
    }
    let lv = CoupledLevels::new(ns, n_ref, model.t_end())?;
    let eval = phi.eval;
    let diffs = coupled_map(model, kind, &lv, mc.samples, mc.seed, mc.threads, |r, terms| {
        let fr = eval(r);
        terms.iter().map(|t| fr - eval(t)).collect::<Vec<f64>>()
    })?;
    let points = ns
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let (mean, sd, count) = mean_sd(diffs.iter().map(|d| d[k]));
            ErrorPoint {
                n,
                h: model.t_end() / n as f64,
                estimate: mean,
                std_error: sd / (count as f64).sqrt(),
                samples: count,
            }
        })
        .collect();
    Ok((points, warnings))
}

pub fn estimate_weak_error(
    model: &ModelSpec,
    kind: SchemeKind,
    phi: &TestFunctional,
    n: usize,
    n_ref: usize,
    mc: &McConfig,
) -> Result<ErrorPoint> {
    Ok(estimate_weak_errors(model, kind, phi, &[n], n_ref, mc)?.0.remove(0))
}

/// Uncoupled estimate: `E phi(Y_ref)` and `E phi(Y_N)` from disjoint sample sets.
///
/// Samples `0..K` feed the reference mean and `K..2K` the coarse mean.
pub fn estimate_weak_error_independent(
    model: &ModelSpec,
    kind: SchemeKind,
    phi: &TestFunctional,
    n: usize,
    n_ref: usize,
    mc: &McConfig,
) -> Result<ErrorPoint> {
    check_request(&[n], n_ref, mc)?;
    let lv = CoupledLevels::new(&[n], n_ref, model.t_end())?;
    let eval = phi.eval;
    let k = mc.samples;
    let vals = coupled_map(model, kind, &lv, 2 * k, mc.seed, mc.threads, |r, terms| (eval(r), eval(terms[0])))?;
    let (mr, sr, _) = mean_sd(vals[..k].iter().map(|v| v.0));
    let (mc_, sc, _) = mean_sd(vals[k..].iter().map(|v| v.1));
    Ok(ErrorPoint {
        n,
        h: model.t_end() / n as f64,
        estimate: mr - mc_,
        std_error: ((sr * sr + sc * sc) / k as f64).sqrt(),
        samples: k,
    })
}

/// Coupled strong errors `sqrt(mean ||Y_ref - Y_N||^2)`; the standard error uses the delta method.
pub fn estimate_strong_errors(
    model: &ModelSpec,
    kind: SchemeKind,
    ns: &[usize],
    n_ref: usize,
    mc: &McConfig,
) -> Result<(Vec<ErrorPoint>, Vec<String>)> {
    let warnings = check_request(ns, n_ref, mc)?;
    let lv = CoupledLevels::new(ns, n_ref, model.t_end())?;
    let sq = coupled_map(model, kind, &lv, mc.samples, mc.seed, mc.threads, |r, terms| {
        terms
            .iter()
            .map(|t| r.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .collect::<Vec<f64>>()
    })?;
    let points = ns
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let (mean, sd, count) = mean_sd(sq.iter().map(|d| d[k]));
            let est = mean.sqrt();
            let se = if est > 0.0 { sd / (count as f64).sqrt() / (2.0 * est) } else { 0.0 };
            ErrorPoint {
                n,
                h: model.t_end() / n as f64,
                estimate: est,
                std_error: se,
                samples: count,
            }
        })
        .collect();
    Ok((points, warnings))
}

pub fn estimate_strong_error(
    model: &ModelSpec,
    kind: SchemeKind,
    n: usize,
    n_ref: usize,
    mc: &McConfig,
) -> Result<ErrorPoint> {
    Ok(estimate_strong_errors(model, kind, &[n], n_ref, mc)?.0.remove(0))
}

fn base_echo(model: &ModelSpec, kind: SchemeKind, ns: &[usize], n_ref: usize, mc: &McConfig) -> BTreeMap<String, String> {
    let mut c = BTreeMap::new();
    c.insert("model.modes".into(), model.modes().to_string());
    c.insert("model.family".into(), format!("{:?}", model.family()));
    c.insert("scheme".into(), kind.name().into());
    c.insert("grid.T".into(), model.t_end().to_string());
    c.insert(
        "grid.N".into(),
        ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
    );
    c.insert("grid.N_ref".into(), n_ref.to_string());
    c.insert("mc.samples".into(), mc.samples.to_string());
    c.insert("mc.seed".into(), mc.seed.to_string());
    c
}

/// Weak errors for every `N` with the fitted order.
pub fn weak_rate_report(
    model: &ModelSpec,
    kind: SchemeKind,
    phi: &TestFunctional,
    ns: &[usize],
    n_ref: usize,
    mc: &McConfig,
) -> Result<ExperimentReport> {
    let (points, warnings) = estimate_weak_errors(model, kind, phi, ns, n_ref, mc)?;
    let mut report = ExperimentReport::from_points("weak-rate", points, mc.seed);
    report.warnings.splice(0..0, warnings);
    let mut echo = base_echo(model, kind, ns, n_ref, mc);
    echo.insert("functional".into(), phi.name.into());
    Ok(report.with_config(echo))
}

/// Strong errors for every `N` with the fitted order.
pub fn strong_rate_report(
    model: &ModelSpec,
    kind: SchemeKind,
    ns: &[usize],
    n_ref: usize,
    mc: &McConfig,
) -> Result<ExperimentReport> {
    let (points, warnings) = estimate_strong_errors(model, kind, ns, n_ref, mc)?;
    let mut report = ExperimentReport::from_points("strong-rate", points, mc.seed);
    report.warnings.splice(0..0, warnings);
    Ok(report.with_config(base_echo(model, kind, ns, n_ref, mc)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::functional;
    use crate::models::{build_anderson, build_diagonal_additive};
    use crate::oracles::{exp_functional, ModeVariances, VarianceSource};
    use crate::spectral::CoeffState;
    use std::f64::consts::PI;

    fn anderson(kappa: f64) -> ModelSpec {
        build_anderson(8, 0.1, kappa, CoeffState::unit(8, 0), 1.0).unwrap()
    }

    #[test]
    fn same_resolution_gives_zero() {
        let phi = functional("exp_neg_sq_norm").unwrap();
        let mc = McConfig::new(20, 3);
        let p = estimate_weak_error(&anderson(0.5), SchemeKind::ExponentialEuler, &phi, 64, 64, &mc).unwrap();
        assert_eq!((p.estimate, p.std_error), (0.0, 0.0));
        let p = estimate_strong_error(&anderson(0.5), SchemeKind::LinearImplicitEuler, 64, 64, &mc).unwrap();
        assert_eq!((p.estimate, p.std_error), (0.0, 0.0));
    }

    #[test]
    fn zero_kappa_exponential_euler_has_no_weak_error() {
        let phi = functional("exp_neg_sq_norm").unwrap();
        let mc = McConfig::new(10, 3);
        let (pts, _) =
            estimate_weak_errors(&anderson(0.0), SchemeKind::ExponentialEuler, &phi, &[4, 8, 16], 256, &mc).unwrap();
        for p in pts {
            assert!(p.estimate.abs() < 1e-14, "{p:?}");
        }
    }

    #[test]
    fn request_validation() {
        let phi = functional("exp_neg_sq_norm").unwrap();
        let m = anderson(0.5);
        assert!(estimate_weak_error(&m, SchemeKind::ExponentialEuler, &phi, 24, 64, &McConfig::new(10, 0)).is_err());
        assert!(estimate_weak_error(&m, SchemeKind::ExponentialEuler, &phi, 8, 64, &McConfig::new(1, 0)).is_err());
        let (_, w) =
            estimate_weak_errors(&m, SchemeKind::ExponentialEuler, &phi, &[16], 64, &McConfig::new(4, 0)).unwrap();
        assert!(w.iter().any(|s| s.contains("8 times finer")));
    }

    #[test]
    fn single_reference_level_report_has_no_fit() {
        let phi = functional("exp_neg_sq_norm").unwrap();
        let r = weak_rate_report(&anderson(0.5), SchemeKind::ExponentialEuler, &phi, &[64], 64, &McConfig::new(4, 1))
            .unwrap();
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.points[0].estimate, 0.0);
        assert!(r.fitted_order.is_none());
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn additive_weak_error_matches_oracle() {
        // E phi(Y_ref) - E phi(Y_N) = prod(1 + 2 v_ref)^{-1/2} - prod(1 + 2 v_N)^{-1/2}.
        let m = 8;
        let model = build_diagonal_additive(m, PI * PI, 2.0, 0.0, 1.0).unwrap();
        let eig = model.operator().eigenvalues().to_vec();
        let mu = vec![1.0; m];
        let phi = functional("exp_neg_sq_norm").unwrap();
        let mc = McConfig::new(40_000, 11);
        let (pts, _) =
            estimate_weak_errors(&model, SchemeKind::ExponentialEuler, &phi, &[2, 4], 64, &mc).unwrap();
        let ev = |h| exp_functional(&ModeVariances::for_model(&eig, &mu, 1.0, h, VarianceSource::ExpEulerY1).unwrap());
        for p in pts {
            let want = ev(1.0 / 64.0) - ev(p.h);
            assert!((p.estimate - want).abs() < 3.0 * p.std_error, "N={}: {} vs {want} (se {})", p.n, p.estimate, p.std_error);
        }
    }

    #[test]
    fn additive_strong_error_matches_weighted_sum() {
        // Per mode the coupled difference is mu sum_k [e^{lambda(T - s_k)} - e^{lambda(T - floor(s_k))}] dW_k.
        let m = 4;
        let model = build_diagonal_additive(m, 1.0, 2.0, 0.0, 1.0).unwrap();
        let eig = model.operator().eigenvalues().to_vec();
        let (n, n_ref) = (4usize, 32usize);
        let hf = 1.0 / n_ref as f64;
        let hc = 1.0 / n as f64;
        let mut want = 0.0;
        for &l in &eig {
            for k in 0..n_ref {
                let s = k as f64 * hf;
                let sc = (s / hc).floor() * hc;
                want += hf * ((l * (1.0 - s)).exp() - (l * (1.0 - sc)).exp()).powi(2);
            }
        }
        let p = estimate_strong_error(&model, SchemeKind::ExponentialEuler, n, n_ref, &McConfig::new(20_000, 5)).unwrap();
        assert!((p.estimate - want.sqrt()).abs() < 3.0 * p.std_error, "{} vs {}", p.estimate, want.sqrt());
    }

    #[test]
    fn coupled_and_independent_estimators_agree() {
        let m = 4;
        let model = build_diagonal_additive(m, PI * PI, 2.0, 0.0, 1.0).unwrap();
        let phi = functional("exp_neg_sq_norm").unwrap();
        let mc = McConfig::new(40_000, 21);
        let c = estimate_weak_error(&model, SchemeKind::LinearImplicitEuler, &phi, 2, 32, &mc).unwrap();
        let i = estimate_weak_error_independent(&model, SchemeKind::LinearImplicitEuler, &phi, 2, 32, &mc).unwrap();
        let se = (c.std_error.powi(2) + i.std_error.powi(2)).sqrt();
        assert!((c.estimate - i.estimate).abs() < 3.0 * se);
        assert!(c.std_error < i.std_error);
    }

    #[test]
    fn strong_error_decreases() {
        let r = strong_rate_report(&anderson(0.5), SchemeKind::LinearImplicitEuler, &[4, 8, 16, 32], 512, &McConfig::new(200, 2))
            .unwrap();
        assert!(!r.warnings.iter().any(|w| w.contains("does not decrease")), "{:?}", r.warnings);
        assert!(r.fitted_order.unwrap() > 0.0);
    }
}
