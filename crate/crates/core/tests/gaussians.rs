use pdgloss::closed_form::{discretized_two_gaussian, two_gaussian_inconsistency, GaussianSpec, MseConstant};

#[test]
fn discretized_matches_closed_form_on_unit_gaussians() {
    let (a, b) = ([GaussianSpec::unit(0.0)], [GaussianSpec::unit(2.0)]);
    let exact = two_gaussian_inconsistency(&a, &b, &[1.0]).unwrap().value();
    let numeric = discretized_two_gaussian(&a, &b, &[1.0], 0.001, 8.0).unwrap().value();
    assert!((exact - numeric).abs() < 1e-3, "{exact} vs {numeric}");
    assert!((numeric - MseConstant::AUTHORITATIVE.mse(&[0.0], &[2.0], &[1.0])).abs() < 1e-3);
    assert!((numeric - MseConstant::Half.mse(&[0.0], &[2.0], &[1.0])).abs() > 0.5);
}

#[test]
fn discretized_matches_closed_form_with_unequal_parameters() {
    let a = [GaussianSpec::new(-0.3, 0.6, 2.0).unwrap(), GaussianSpec::new(1.0, 1.5, 0.5).unwrap()];
    let b = [GaussianSpec::new(0.9, 1.3, 0.7).unwrap(), GaussianSpec::new(0.2, 0.4, 1.5).unwrap()];
    let w = [0.35, 0.65];
    let exact = two_gaussian_inconsistency(&a, &b, &w).unwrap().value();
    let numeric = discretized_two_gaussian(&a, &b, &w, 0.001, 8.0).unwrap().value();
    assert!((exact - numeric).abs() < 1e-3, "{exact} vs {numeric}");
}
