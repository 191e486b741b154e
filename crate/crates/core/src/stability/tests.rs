use nalgebra::DMatrix;

use super::*;
use crate::data::{WeightedMatrixData, WeightedVectorData};
use crate::orbit::{estimate, GroupModelSpec};

fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[a, b, c, d])
}

fn eye(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

/// The four samples and weights of the left-right quadrant example.
fn quadrant(indices: &[usize]) -> Dataset {
    let r3 = 3f64.sqrt();
    let all =
        [(m2(0.0, 0.0, 2.0, 0.0), 4.0), (eye(2), 1.0), (m2(1.0, -1.0, 1.0, 1.0), 2.0), (m2(r3, 0.0, 0.0, -r3), 3.0)];
    let (samples, weights) = indices.iter().map(|&i| all[i].clone()).unzip();
    Dataset::Matrix(WeightedMatrixData::new(samples, weights).unwrap())
}

fn lr() -> GroupModelSpec {
    GroupModelSpec::left_right(2, 2)
}

fn kind(data: &Dataset, model: &GroupModelSpec) -> StabilityKind {
    classify(data, model, &Thresholds::default()).unwrap().kind()
}

#[test]
fn quadrant_classes() {
    assert_eq!(kind(&quadrant(&[0]), &lr()), StabilityKind::Unstable);
    assert_eq!(kind(&quadrant(&[0, 1]), &lr()), StabilityKind::SemistableNotPolystable);
    assert_eq!(kind(&quadrant(&[1]), &lr()), StabilityKind::Polystable);
    assert_eq!(kind(&quadrant(&[1, 2, 3]), &lr()), StabilityKind::Stable);
}

#[test]
fn quadrant_stabilizer_dimensions() {
    let dim = |idx: &[usize]| stabilizer_lie_dim(&quadrant(idx), &lr()).unwrap().lie_dim;
    assert_eq!(dim(&[1]), 3);
    assert_eq!(dim(&[1, 2]), 1);
    assert_eq!(dim(&[1, 2, 3]), 0);
}

#[test]
fn identity_stabilizer_is_inverse_transpose_pairs() {
    let info = stabilizer_lie_dim(&quadrant(&[1]), &lr()).unwrap();
    for direction in &info.basis {
        let TangentDirection::LeftRight(a, b) = direction else { unreachable!() };
        assert!((a + b.transpose()).amax() < 1e-12);
        assert!(a.trace().abs() < 1e-12);
        assert!((direction.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn rotation_pair_has_unique_mle_despite_stabilizer() {
    let data = quadrant(&[1, 2]);
    let report = estimate(&data, &lr(), 1e-9, 10_000).unwrap();
    assert_eq!(report.stability.kind(), StabilityKind::Polystable);
    assert_eq!(report.stabilizer.lie_dim, 1);
    assert_eq!(report.mle_unique, MleMultiplicity::Unique);
    let TangentDirection::LeftRight(a, b) = &report.stabilizer.basis[0] else { unreachable!() };
    // The surviving direction is a simultaneous rotation.
    assert!((a + a.transpose()).amax() < 1e-12);
    assert!((a - b).amax() < 1e-12);
    assert!(conjugation_drift(&report.stabilizer.basis[0], &report.optimizer.minimizer, 0.7).unwrap() < 1e-12);
}

#[test]
fn identity_data_has_an_infinite_family() {
    let report = estimate(&quadrant(&[1]), &lr(), 1e-9, 10_000).unwrap();
    assert!(matches!(report.mle_unique, MleMultiplicity::InfiniteFamily { .. }));
}

#[test]
fn stable_data_have_a_unique_mle() {
    let report = estimate(&quadrant(&[1, 2, 3]), &lr(), 1e-9, 10_000).unwrap();
    assert_eq!(report.mle_unique, MleMultiplicity::Unique);
}

#[test]
fn no_mle_without_polystability() {
    for idx in [&[0][..], &[0, 1][..]] {
        let report = estimate(&quadrant(idx), &lr(), 1e-9, 10_000).unwrap();
        assert!(report.concentrations.is_empty());
        assert_eq!(report.mle_unique, MleMultiplicity::NoMle);
    }
    let report = estimate(&quadrant(&[0]), &lr(), 1e-9, 10_000).unwrap();
    assert_eq!(report.objective, f64::INFINITY);
    let report = estimate(&quadrant(&[0, 1]), &lr(), 1e-9, 10_000).unwrap();
    assert!(report.objective.is_finite());
}

#[test]
fn tiny_budget_is_inconclusive() {
    let err =
        classify_with(&quadrant(&[0, 1]), &lr(), &FlipFlopOptions { max_iter: 5, ..Default::default() }).unwrap_err();
    assert!(matches!(err, Error::Inconclusive { iterations: 5, .. }));
}

#[test]
fn full_model_follows_scatter_rank() {
    let full = GroupModelSpec::full(2);
    let singular = Dataset::Vector(WeightedVectorData::from_rows(&[&[1.0, 1.0], &[2.0, 2.0]], &[1.0, 1.0]).unwrap());
    assert_eq!(kind(&singular, &full), StabilityKind::Unstable);
    let spanning = Dataset::Vector(WeightedVectorData::from_rows(&[&[1.0, 0.0], &[1.0, 1.0]], &[1.0, 2.0]).unwrap());
    assert_eq!(kind(&spanning, &full), StabilityKind::Stable);
    assert_eq!(stabilizer_lie_dim(&singular, &full).unwrap().lie_dim, 1);
}

#[test]
fn finite_model_is_stable_for_nonzero_data() {
    let model = GroupModelSpec::finite(vec![eye(2), -eye(2)]).unwrap();
    let data = Dataset::Vector(WeightedVectorData::from_rows(&[&[2.0, 0.0]], &[1.0]).unwrap());
    assert_eq!(kind(&data, &model), StabilityKind::Stable);
    let zero = Dataset::Vector(WeightedVectorData::from_rows(&[&[0.0, 0.0]], &[1.0]).unwrap());
    assert_eq!(kind(&zero, &model), StabilityKind::Unstable);
}

#[test]
fn thresholds_validate() {
    assert!(Thresholds::default().validate().is_ok());
    let bad = Thresholds { plateau_window: 0, ..Default::default() };
    assert!(bad.validate().is_err());
    let bad = Thresholds { rank_tol: -1.0, ..Default::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn first_order_drift_matches_finite_difference() {
    let m = m2(0.3, 0.2, -0.4, -0.3);
    let element = crate::orbit::GroupElement::Linear(m2(2.0, 1.0, 0.0, 0.5));
    let direction = TangentDirection::Linear(m);
    let h = 1e-6;
    let fd = conjugation_drift(&direction, &element, h).unwrap() / h;
    let exact = first_order_drift(&direction, &element).unwrap();
    assert!((fd - exact).abs() < 1e-5 * exact);
}
