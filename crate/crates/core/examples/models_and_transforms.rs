//! Built-in model families and the collocation transform behind the multiplicative noise.

use spde_lab::models::{build_anderson, build_chc, build_diagonal_additive, TransformPlan};
use spde_lab::spectral::{BasisKind, CoeffState};

fn main() -> spde_lab::Result<()> {
    let m = 8;
    let anderson = build_anderson(m, 0.1, 0.5, CoeffState::unit(m, 0), 1.0)?;
    let chc = build_chc(m, 0.5, CoeffState::unit(m, 0), 1.0)?;
    let additive = build_diagonal_additive(m, std::f64::consts::PI.powi(2), 2.0, 0.0, 1.0)?;
    for (name, model) in [("anderson", &anderson), ("chc", &chc), ("additive", &additive)] {
        println!(
            "{name:9} gamma={} first eigenvalues {:?}",
            model.gamma(),
            &model.operator().eigenvalues()[..3]
        );
    }

    // B(y) w for the Anderson model: kappa * y(x) * w(x), projected back.
    let y = CoeffState::unit(m, 0);
    let w = CoeffState::unit(m, 1);
    println!("B(e1) e2 = {:?}", anderson.diffusion_apply(&y, &w)?.0);
    println!("F(e1) for chc = {:?}", chc.drift_eval(&y)?.0);

    let plan = TransformPlan::new(BasisKind::NeumannCosine, m)?;
    let coeffs: Vec<f64> = (0..m).map(|k| 1.0 / (k + 1) as f64).collect();
    let mut values = vec![0.0; m];
    let mut back = vec![0.0; m];
    plan.synthesize(&coeffs, &mut values)?;
    plan.analyze(&values, &mut back)?;
    let err = coeffs.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("cosine transform round trip error {err:.2e} on nodes {:?}", plan.nodes());
    Ok(())
}
