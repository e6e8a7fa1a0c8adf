use covham::canonical::{generalized_hamilton_rhs, CanonicalChart};
use covham::dynamics::{integrate, tghs_rhs, FlowProblem, IntegratorSettings, RhsSelector};
use covham::fields::{ExprField, FieldRef};
use covham::poisson::{StructuralData, StructureMatrixField};
use covham::riemann::{chi_from_metric, riemann_tghs, MetricField};
use covham::sampling::SampleBox;

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn field(text: &str, coords: &[String]) -> FieldRef {
    ExprField::parse(text, coords).unwrap().into_ref()
}

#[test]
fn three_routes_to_the_canonical_rhs_agree() {
    let chart = CanonicalChart::new(1).unwrap();
    let coords = chart.coordinate_names();
    let g = MetricField::diagonal(&names(&["1 + q^2", "exp(p)"]), &coords).unwrap();
    let chi = chi_from_metric(&g);
    let s = StructuralData::new(chi.clone());
    let h = field("(q^2 + p^2)/2 + q*p^3", &coords);
    let j = chart.structure();
    for x in SampleBox::unit(2).sample(50, 5) {
        let a = generalized_hamilton_rhs(h.as_ref(), chi.as_ref(), chart, &x).unwrap();
        let b = tghs_rhs(h.as_ref(), &j, &s, &x).unwrap();
        let c = riemann_tghs(h.as_ref(), &j, &g, &x).unwrap();
        assert!((&a - &b).amax() <= 1e-12, "{x:?}");
        assert!((&a - &c).amax() <= 1e-12, "{x:?}");
    }
}

#[test]
fn metric_selector_reproduces_generic_trajectory() {
    let coords = names(&["q", "p"]);
    let g = MetricField::diagonal(&names(&["1", "q^2"]), &coords).unwrap();
    let problem = FlowProblem::new(
        StructureMatrixField::canonical(1).unwrap(),
        StructuralData::new(chi_from_metric(&g)),
        field("(q^2 + p^2)/2", &coords),
        1.0,
        vec![1.0, 0.5],
        IntegratorSettings::rk4(1e-3, 0.5).unwrap(),
    )
    .unwrap();
    let generic = integrate(&problem, &RhsSelector::Tghs).unwrap();
    let metric = integrate(&problem, &RhsSelector::RiemannTghs(g)).unwrap();
    assert_eq!(generic.len(), metric.len());
    for (a, b) in generic.samples.iter().zip(&metric.samples) {
        assert!(a.x.iter().zip(&b.x).all(|(u, v)| (u - v).abs() <= 1e-12));
    }
}

// For χ = q the flow is q̇ = p, ṗ = −(q + H), which preserves H·e^q.
#[test]
fn weighted_energy_is_conserved_for_chi_q() {
    let coords = names(&["q", "p"]);
    let problem = FlowProblem::new(
        StructureMatrixField::canonical(1).unwrap(),
        StructuralData::new(field("q", &coords)),
        field("(q^2 + p^2)/2", &coords),
        1.0,
        vec![0.5, 0.0],
        IntegratorSettings::rk4(1e-3, 5.0).unwrap(),
    )
    .unwrap()
    .with_observable("I", field("(q^2 + p^2)/2 * exp(q)", &coords))
    .unwrap();
    let traj = integrate(&problem, &RhsSelector::Tghs).unwrap();
    let i0 = traj.samples[0].observables[0];
    let drift = traj.samples.iter().map(|s| (s.observables[0] - i0).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-10, "{drift}");
    // H itself is not conserved
    let h_spread = traj.samples.iter().map(|s| (s.h - traj.samples[0].h).abs()).fold(0.0, f64::max);
    assert!(h_spread > 1e-2);
}

#[test]
fn rigid_body_keeps_its_casimir() {
    let coords = names(&["x1", "x2", "x3"]);
    let problem = FlowProblem::new(
        StructureMatrixField::so3(),
        StructuralData::flat(3),
        field("x1^2/2 + x2^2/4 + x3^2/6", &coords),
        1.0,
        vec![0.3, 1.0, 0.2],
        IntegratorSettings::rk4(1e-3, 3.0).unwrap(),
    )
    .unwrap()
    .with_observable("C", field("x1^2 + x2^2 + x3^2", &coords))
    .unwrap();
    let traj = integrate(&problem, &RhsSelector::Tghs).unwrap();
    let c0 = traj.samples[0].observables[0];
    let h0 = traj.samples[0].h;
    for s in &traj.samples {
        assert!((s.observables[0] - c0).abs() <= 1e-10);
        assert!((s.h - h0).abs() <= 1e-10);
    }
}
