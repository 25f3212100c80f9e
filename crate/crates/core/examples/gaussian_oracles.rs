//! Closed-form per-mode variances, their gaps, and the explicit lower bounds.

use std::f64::consts::PI;

use spde_lab::oracles::{
    concrete_gap_lower_bound, exp_functional, gap_lower_bound_exp, gap_lower_bound_impl, var_exact_mode,
    var_exp_euler_mode, var_impl_euler_mode, weak_gap_lower_bound_general, ModeVariances, VarianceSource,
};

fn main() -> spde_lab::Result<()> {
    let (lambda, mu, t) = (-50.0, 1.0, 1.0);
    println!("   h        exact      exp-Euler  impl-Euler  gap-exp   bound-exp  gap-impl  bound-impl");
    for k in 2..=8 {
        let h = 2f64.powi(-k);
        let x = var_exact_mode(lambda, mu, t)?;
        let y1 = var_exp_euler_mode(lambda, mu, t, h)?;
        let y2 = var_impl_euler_mode(lambda, mu, t, h)?;
        println!(
            "{h:8.5} {x:10.6} {y1:10.6} {y2:10.6}  {:9.2e} {:9.2e}  {:9.2e} {:9.2e}",
            x - y1,
            gap_lower_bound_exp(lambda, mu, t, h)?,
            x - y2,
            gap_lower_bound_impl(lambda, mu, t, h)?
        );
    }

    let eig: Vec<f64> = (1..=200).map(|n| -PI * PI * (n * n) as f64).collect();
    let mu = vec![1.0; eig.len()];
    let x = ModeVariances::for_model(&eig, &mu, 1.0, 1.0, VarianceSource::ExactX)?;
    let y = ModeVariances::for_model(&eig, &mu, 1.0, 0.125, VarianceSource::ExpEulerY1)?;
    println!("E exp(-||X||^2) = {:.6}, E exp(-||Y||^2) = {:.6}", exp_functional(&x), exp_functional(&y));
    let ex2: f64 = x.values().iter().sum();
    let ey2: f64 = y.values().iter().sum();
    println!("general weak-gap bound {:.3e}", weak_gap_lower_bound_general(ex2, ey2)?);
    println!("concrete gap bound at h=1/8: {:.3e}", concrete_gap_lower_bound(PI * PI, 2.0, 0.0, 1.0, 0.125)?);
    Ok(())
}
