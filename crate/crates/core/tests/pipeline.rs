use hml_core::modforms::eigen::hecke_eigenforms;
use hml_core::modforms::integrity::check_integrity;
use hml_core::petersson::{average_pair, solve_harmonic_weights, trace_rhs};
use hml_core::{Precision, Real};

// a(2) = 540 ± 12√144169 for the two level-one newforms of weight 24
#[test]
fn weight_24_second_coefficients() {
    let prec = Precision::new(128).unwrap();
    let forms = hecke_eigenforms(24, 40, prec).unwrap();
    assert_eq!(forms.len(), 2);
    let scale = 2f64.powf(11.5);
    let mut got: Vec<f64> = forms.iter().map(|f| f.lambda(2).unwrap().to_f64() * scale).collect();
    got.sort_by(f64::total_cmp);
    let r = 12.0 * 144169f64.sqrt();
    let want = [540.0 - r, 540.0 + r];
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-9 * w.abs(), "{g} vs {w}");
    }
    for f in &forms {
        let rep = check_integrity(f).unwrap();
        assert!(rep.deligne_excess <= 0.0);
        assert!(rep.hecke_residual < 1e-30);
    }
}

#[test]
fn weights_reproduce_held_out_pairs() {
    let prec = Precision::new(128).unwrap();
    let forms = hecke_eigenforms(36, 20, prec).unwrap();
    let basis = solve_harmonic_weights(36, forms, None, prec).unwrap();
    assert_eq!(basis.dim(), 3);
    assert!(basis.weights.iter().all(|w| w.to_f64() > 0.0));
    for (m, n) in [(2, 2), (2, 3), (3, 5)] {
        let avg = average_pair(&basis, m, n).unwrap().to_f64();
        let rhs = trace_rhs(m as u64, n as u64, 36, 200, prec).unwrap();
        assert!((avg - rhs.value.to_f64()).abs() < 1e-15 + rhs.tail_bound, "({m},{n}) {avg}");
    }
}
