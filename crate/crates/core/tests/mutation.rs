//! The GC identity must catch a sign error in the tilt of the emission channel.

use symfcs::acceptance::gc_residual;
use symfcs::liouville::LiouvillianParts;
use symfcs::model::ModelParams;
use symfcs::spectral::linspace;

#[test]
fn gc_detects_flipped_minus_tilt() {
    let p = ModelParams::reference();
    let parts = LiouvillianParts::new(&p);
    let grid = linspace(-3.0, 1.0, 41);
    let correct = gc_residual(&parts, p.kappa(), |l| ((-l).exp(), l.exp()), &grid).unwrap();
    let flipped = gc_residual(&parts, p.kappa(), |l| ((-l).exp(), (-l).exp()), &grid).unwrap();
    assert!(correct < 1e-8, "correct tilt: {correct:e}");
    assert!(flipped > 1e-3, "mutated tilt went undetected: {flipped:e}");
}

#[test]
fn gc_detects_wrong_kappa_sign() {
    let p = ModelParams::reference();
    let parts = LiouvillianParts::new(&p);
    let grid = linspace(-3.0, 1.0, 41);
    let r = gc_residual(&parts, -p.kappa(), |l| ((-l).exp(), l.exp()), &grid).unwrap();
    assert!(r > 1e-3, "{r:e}");
}
