//! The closed-form convergence formula against its bound, the combinatorial sweeps, and the appendix numerics.
use brlab::bounds::{
    brd_convergence_formula, brd_upper_bound, kais1_ratio, kais2_gap, lemma1_bound, riemann_chain, stirling_bounds_check,
    sweep_exhaustive, CombCheck,
};

fn main() -> brlab::Result<()> {
    for k in [2, 3, 10, 100, 400] {
        println!(
            "K={k}: formula {:.6}, bound {:.6}",
            brd_convergence_formula(k)?,
            brd_upper_bound(k)
        );
    }
    println!("{:?}", riemann_chain(1000)?);
    for which in [CombCheck::Comb, CombCheck::Cocomb, CombCheck::ProdRatio] {
        let s = sweep_exhaustive(which, 5);
        println!("{which:?}: {} checked, {} violations", s.checked, s.violations);
    }
    for k in [100, 200, 400, 800] {
        println!("kais1 ratio at K={k}: {:.5}", kais1_ratio(k, 0.5)?);
    }
    for k in [100, 200, 300, 400] {
        println!("kais2 gap at K={k}: {:.5}", kais2_gap(k, 0.5, 0.2)?);
    }
    let stirling = (1..=170).all(|n| stirling_bounds_check(n).unwrap_or(false));
    println!("stirling bounds hold for n <= 170: {stirling}");
    println!("row-domination bound at K=100, sigma=0.8: {:.3e}", lemma1_bound(100, 0.8)?);
    Ok(())
}
