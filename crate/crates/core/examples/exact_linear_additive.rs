//! Exact Gaussian sampling of the linear additive model next to both Euler
//! schemes, checked against the closed-form second moments.

use spde_lab::models::build_diagonal_additive;
use spde_lab::noise::derive_seed;
use spde_lab::oracles::{expected_sq_norm, ModeVariances, VarianceSource};
use spde_lab::schemes::LinearAdditiveSampler;
use spde_lab::spectral::TimeGrid;

fn main() -> spde_lab::Result<()> {
    let model = build_diagonal_additive(32, std::f64::consts::PI.powi(2), 2.0, 0.0, 1.0)?;
    let grid = TimeGrid::new(1.0, 16)?;
    let sampler = LinearAdditiveSampler::new(&model, &grid)?;
    let samples = 20_000;
    let mut sums = [0.0; 3];
    for s in 0..samples {
        let d = sampler.sample(derive_seed(5, s));
        sums[0] += d.exact.sq_norm();
        sums[1] += d.exp_euler.sq_norm();
        sums[2] += d.implicit_euler.sq_norm();
    }
    let eig = model.operator().eigenvalues();
    let mu = vec![1.0; eig.len()];
    let sources = [VarianceSource::ExactX, VarianceSource::ExpEulerY1, VarianceSource::ImplEulerY2];
    for (sum, src) in sums.iter().zip(sources) {
        let exact = expected_sq_norm(&ModeVariances::for_model(eig, &mu, 1.0, grid.h(), src)?);
        println!("{src:?}: sample E||.||^2 = {:.5}, closed form {exact:.5}", sum / samples as f64);
    }
    Ok(())
}
