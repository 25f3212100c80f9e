//! Diagonal generator, its semigroup and resolvent, grid helpers and the growth constant.

use spde_lab::spectral::{ceil_grid, floor_grid, mittag_leffler_e, BasisKind, CoeffState, DiagonalOperator};

fn main() -> spde_lab::Result<()> {
    let eig: Vec<f64> = (1..=4).map(|n| -(n * n) as f64).collect();
    let op = DiagonalOperator::new(eig, BasisKind::Abstract)?;
    let x = CoeffState(vec![1.0, 1.0, 1.0, 1.0]);

    println!("e^(0.5 A) x        = {:?}", op.semigroup(0.5, &x)?.0);
    println!("(I - 0.1 A)^-1 x   = {:?}", op.resolvent(0.1, &x)?.0);
    // Implicit evolution family between two off-grid times.
    println!("S_(0.13, 0.61) x   = {:?}", op.implicit_family(0.1, 0.13, 0.61, &x)?.0);
    println!("||x||_(H_1/2)      = {:.6}", op.hr_norm(0.5, &x)?);

    println!("floor/ceil of 0.37 on h=0.1: {} {}", floor_grid(0.37, 0.1)?, ceil_grid(0.37, 0.1)?);
    for r in [0.25, 0.5, 1.0] {
        println!("E_{r}(1) = {:.6}", mittag_leffler_e(r, 1.0)?);
    }
    // Large arguments at small orders exceed f64 and are reported as errors.
    println!("E_0.25(2): {:?}", mittag_leffler_e(0.25, 2.0).map_err(|e| e.to_string()));
    Ok(())
}
