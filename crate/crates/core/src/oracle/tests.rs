use nalgebra::{DMatrix, DVector};

use super::*;
use crate::data::Dataset;
use crate::models::log_pdf_mvsl;
use crate::orbit::{closed_form_sl_minimizer, GroupElement, GroupModelSpec};
use crate::special::{log_bessel_k, BesselPoint};

#[test]
fn bessel_quadrature_agrees_on_a_grid() {
    for &nu in &[-4.5, -1.0, 0.0, 0.3, 2.0, 5.0] {
        for &x in &[0.1, 0.7, 3.0, 12.0, 50.0] {
            let q = quadrature_log_bessel(nu, x).unwrap();
            let d = log_bessel_k(BesselPoint::new(nu, x).unwrap()).unwrap();
            assert!((q - d).abs() < 1e-10, "nu={nu} x={x}: {q} vs {d}");
        }
    }
    assert!((quadrature_bessel(0.5, 1.0).unwrap() - 0.461_068_504_447_894_6).abs() < 1e-12);
}

#[test]
fn marginalization_matches_density() {
    let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]);
    let params = MultivariateLaplaceParams::new(sigma).unwrap();
    for y in [[0.4, -1.0], [3.0, 0.1], [0.01, 0.02]] {
        let y = DVector::from_column_slice(&y);
        let q = quadrature_log_marginalize(&y, &params).unwrap();
        let d = log_pdf_mvsl(&y, &params).unwrap();
        assert!((q - d).abs() < 1e-9, "{q} vs {d}");
    }
    let zero = DVector::zeros(2);
    assert!(matches!(quadrature_log_marginalize(&zero, &params), Err(Error::Pole { .. })));
}

#[test]
fn dominance_fails_on_the_axis_pair() {
    let data = WeightedVectorData::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 1.0]).unwrap();
    let candidates: Vec<DMatrix<f64>> = [0.6, 1.2, 2.0, 3.0].iter().map(|s| DMatrix::identity(2, 2) * *s).collect();
    let verdict = grid_likelihood_dominance(&data, &candidates).unwrap();
    assert_eq!(verdict.complete_argmax, 2);
    assert_eq!(verdict.observed_argmax, 1);
    assert!(!verdict.dominant);
    assert!(grid_likelihood_dominance(&data, &[]).is_err());
}

#[test]
fn search_approaches_the_closed_form() {
    let s = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 0.2, 1.0, 2.0, -0.5, 0.2, -0.5, 1.5]);
    let l = s.clone().cholesky().unwrap().l();
    let samples = (0..3).map(|j| l.column(j).into_owned()).collect();
    let data = Dataset::Vector(WeightedVectorData::new(samples, vec![1.0; 3]).unwrap());
    let exact = closed_form_sl_minimizer(&s).unwrap().unwrap().value;
    let cfg = SearchConfig::new(4000, 1.0, 9).unwrap();
    let found = random_orbit_search(&data, &GroupModelSpec::full(3), &cfg).unwrap();
    assert!(found.best_value >= exact * (1.0 - 1e-12));
    assert!((found.best_value - exact) / exact < 1e-6);
    assert_eq!(found, random_orbit_search(&data, &GroupModelSpec::full(3), &cfg).unwrap());
}

#[test]
fn search_on_pairs_reaches_the_balanced_value() {
    let x1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
    let x2 = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.5]);
    let data = Dataset::Matrix(crate::data::WeightedMatrixData::new(vec![x1, x2], vec![1.0, 1.0]).unwrap());
    let Dataset::Matrix(d) = &data else { unreachable!() };
    let exact = crate::orbit::flip_flop_minimize(d, 1e-12, 10_000).unwrap().inner_value;
    let cfg = SearchConfig::new(6000, 1.0, 3).unwrap();
    let found = random_orbit_search(&data, &GroupModelSpec::left_right(2, 2), &cfg).unwrap();
    assert!(matches!(found.element, GroupElement::LeftRight(..)));
    assert!((found.best_value - exact) / exact < 1e-6);
}

#[test]
fn search_enumerates_finite_sets() {
    let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let model = GroupModelSpec::finite(vec![DMatrix::identity(2, 2), s]).unwrap();
    let data = Dataset::Vector(WeightedVectorData::from_rows(&[&[1.0, -1.0]], &[1.0]).unwrap());
    let found = random_orbit_search(&data, &model, &SearchConfig::new(1, 1.0, 0).unwrap()).unwrap();
    assert_eq!(found.best_value, 1.0);
    assert!(matches!(found.element, GroupElement::Finite { index: 1, .. }));
}

#[test]
fn search_config_validation() {
    assert!(SearchConfig::new(0, 1.0, 0).is_err());
    assert!(SearchConfig::new(10, 0.0, 0).is_err());
    assert!(SearchConfig::new(10, f64::NAN, 0).is_err());
}
