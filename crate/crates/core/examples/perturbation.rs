//! Mean-square sensitivity of Euler paths to the initial value against the analytic bound.

use spde_lab::experiments::{perturbation_check, McConfig};
use spde_lab::models::build_anderson;
use spde_lab::schemes::SchemeKind;
use spde_lab::spectral::CoeffState;

fn main() -> spde_lab::Result<()> {
    let m = 32;
    let model = build_anderson(m, 0.1, 0.5, CoeffState::unit(m, 0), 1.0)?;
    let xa = model.initial().clone();
    for d in [0.1, 1.0] {
        let mut xb = xa.clone();
        xb[0] -= d;
        let o = perturbation_check(&model, SchemeKind::LinearImplicitEuler, 64, &McConfig::new(500, 3), &xa, &xb)?;
        println!(
            "distance {d}: lhs {:.4} (+-{:.1e}) at step {}, rhs {:.4}, pass {}",
            o.lhs, o.lhs_std_error, o.argmax, o.rhs, o.pass
        );
    }
    Ok(())
}
