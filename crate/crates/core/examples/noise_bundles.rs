//! Counter-based Brownian increments: sampling, coarsening, file round trip and
//! the exact stochastic convolutions that ride along with them.

use spde_lab::noise::{convolution_increments, NoiseBundle};
use spde_lab::spectral::{BasisKind, DiagonalOperator};

fn main() -> spde_lab::Result<()> {
    let fine = NoiseBundle::sample(4, 64, 1.0, 2024)?;
    let coarse = fine.coarsen(8)?;
    let direct: f64 = fine.row(0)[..8].iter().sum();
    println!("first coarse increment {:.6} vs block sum {:.6}", coarse.get(0, 0), direct);

    // Same seed, same numbers: the bundle is a pure function of (M, N, T, seed).
    let again = NoiseBundle::sample(4, 64, 1.0, 2024)?;
    assert_eq!(again.increments(), fine.increments());

    let mut bytes = Vec::new();
    fine.write_to(&mut bytes)?;
    let read = NoiseBundle::read_from(bytes.as_slice())?;
    println!("file round trip: {} bytes, identical = {}", bytes.len(), read == fine);

    let op = DiagonalOperator::new(vec![-1.0, -10.0, -100.0, -1000.0], BasisKind::Abstract)?;
    let conv = convolution_increments(&op, &fine, 7)?;
    for i in 0..4 {
        println!("mode {i}: dW = {:+.5}, convolution = {:+.5}", fine.get(i, 0), conv.get(i, 0));
    }
    Ok(())
}
