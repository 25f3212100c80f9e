//! Coupled Monte Carlo weak and strong error estimates with fitted orders.
//!
//! Pass a sample count as the first argument; the default is small enough for a quick look.

use spde_lab::experiments::{functional, strong_rate_report, weak_rate_report, McConfig};
use spde_lab::models::build_anderson;
use spde_lab::schemes::SchemeKind;
use spde_lab::spectral::CoeffState;

fn main() -> spde_lab::Result<()> {
    let samples = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(500);
    let m = 16;
    let model = build_anderson(m, 0.1, 0.5, CoeffState::unit(m, 0), 1.0)?;
    let levels = [8, 16, 32, 64];
    let mc = McConfig::new(samples, 0);
    let phi = functional("exp_neg_sq_norm")?;
    let weak = weak_rate_report(&model, SchemeKind::ExponentialEuler, &phi, &levels, 1024, &mc)?;
    let strong = strong_rate_report(&model, SchemeKind::ExponentialEuler, &levels, 1024, &mc)?;
    for r in [&weak, &strong] {
        println!("{}: order {:?}", r.experiment, r.fitted_order);
        for p in &r.points {
            println!("  N={:4}  {:+.4e} +- {:.1e}", p.n, p.estimate, p.std_error);
        }
        for w in &r.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
