//! scratch: how many data rows distinguish the CNN channel from its
//! Pauli-error alternatives (deleted before delivery)
use num_complex::Complex64;
use qpt_core::bases::BasisKind;
use qpt_core::linalg::ComplexMatrix;
use qpt_core::process::ProcessMatrix;
use qpt_core::protocol::{build_phi, TomographySpec};
use qpt_core::sweep::SweepContext;

#[test]
#[ignore]
fn distinguishing_rows() {
    let sc = SweepContext::build("cnn", BasisKind::PauliError).unwrap();
    let spec = TomographySpec::standard(3).unwrap();
    let phi = build_phi(&spec, sc.basis.as_ref()).unwrap();
    let mut worst: Vec<(usize, usize)> = Vec::new();
    for alt in 1..64usize {
        let mut delta = ComplexMatrix::zeros(64, 64);
        delta[(0, 0)] = Complex64::new(1.0, 0.0);
        delta[(alt, alt)] = Complex64::new(-1.0, 0.0);
        let dchi = ProcessMatrix::new(sc.basis.clone(), delta).unwrap();
        let diff = phi.apply(&dchi.vectorize()).unwrap();
        let k = diff.iter().filter(|z| z.norm() > 1e-10).count();
        worst.push((alt, k));
    }
    worst.sort_by_key(|&(_, k)| k);
    println!("least distinguishable alternatives (alt_index, distinguishing_rows of 5376):");
    for (alt, k) in worst.iter().take(8) {
        let p_blind = (1.0 - *k as f64 / 5376.0).powi(30);
        println!("  alt {alt}: {k} rows distinguish; P(30-point draw is blind) = {p_blind:.4}");
    }
    let p_any: f64 = 1.0 - worst.iter().map(|&(_, k)| 1.0 - (1.0 - k as f64 / 5376.0).powi(30)).product::<f64>();
    println!("approx P(some alternative blind at m=30) = {p_any:.4}");
}
