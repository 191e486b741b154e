//! Built-in check battery: special-function identities against closed forms
//! and quadrature, plus the reference fixtures for every model.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use orbitlap::oracle::{quadrature_log_bessel, quadrature_log_marginalize, random_orbit_search, SearchConfig};
use orbitlap::orbit::closed_form_sl_minimizer;
use orbitlap::stability::Thresholds;
use orbitlap::{
    classify, estimate, log_pdf_mvsl, sample_mvsl, BesselPoint, Dataset, GroupModelSpec, MleMultiplicity,
    MultivariateLaplaceParams, SampleRequest, StabilityKind, WeightedMatrixData, WeightedVectorData,
};

/// `ln K_nu(x)` implementation under test.
pub type LogBessel = Box<dyn Fn(f64, f64) -> orbitlap::Result<f64>>;

pub struct Hooks {
    pub log_bessel_k: LogBessel,
}

impl Default for Hooks {
    fn default() -> Self {
        Self { log_bessel_k: Box::new(|nu, x| orbitlap::log_bessel_k(BesselPoint::new(nu, x)?)) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = Result<String, String>;
type NamedCheck = (&'static str, fn(&Hooks) -> Check);

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn within(label: &str, err: f64, tol: f64) -> Check {
    if err <= tol {
        Ok(format!("{label} {err:.2e} <= {tol:.0e}"))
    } else {
        Err(format!("{label} {err:.2e} > {tol:.0e}"))
    }
}

fn bessel_half_order(h: &Hooks) -> Check {
    let mut errs = Vec::new();
    for i in 0..=40 {
        let x = 0.1 + 49.9 * i as f64 / 40.0;
        let exact = 0.5 * (PI / (2.0 * x)).ln() - x;
        errs.push(((h.log_bessel_k)(0.5, x).map_err(fail)? - exact).exp_m1().abs());
    }
    within("max relative error", worst(errs), 1e-12)
}

fn bessel_integer_orders(h: &Hooks) -> Check {
    let table =
        [(0.0, 1.0, 0.421_024_438_240_708_3), (1.0, 1.0, 0.601_907_230_197_234_6), (2.0, 2.0, 0.253_759_754_566_055_5)];
    let mut errs = Vec::new();
    for (nu, x, k) in table {
        errs.push(((h.log_bessel_k)(nu, x).map_err(fail)? - f64::ln(k)).exp_m1().abs());
    }
    within("max relative error", worst(errs), 1e-12)
}

fn bessel_recurrence(h: &Hooks) -> Check {
    let mut errs = Vec::new();
    for &nu in &[0.3, 1.0, 2.5, 7.2] {
        for &x in &[0.2, 1.0, 4.0, 30.0] {
            let k = |n: f64| (h.log_bessel_k)(n, x).map(f64::exp).map_err(fail);
            let (lo, mid, hi) = (k(nu - 1.0)?, k(nu)?, k(nu + 1.0)?);
            errs.push((hi - lo - 2.0 * nu / x * mid).abs() / hi);
        }
    }
    within("max recurrence residual", worst(errs), 1e-12)
}

fn bessel_quadrature(h: &Hooks) -> Check {
    let mut errs = Vec::new();
    for &nu in &[-5.0, -1.3, 0.0, 0.5, 2.7, 5.0] {
        for &x in &[0.1, 1.0, 5.0, 50.0] {
            let q = quadrature_log_bessel(nu, x).map_err(fail)?;
            errs.push(((h.log_bessel_k)(nu, x).map_err(fail)? - q).exp_m1().abs());
        }
    }
    within("max relative error", worst(errs), 1e-8)
}

fn density_quadrature(_: &Hooks) -> Check {
    let sigma = DMatrix::from_row_slice(3, 3, &[2.0, 0.4, 0.0, 0.4, 1.0, -0.3, 0.0, -0.3, 1.5]);
    let params = MultivariateLaplaceParams::new(sigma).map_err(fail)?;
    let mut errs = Vec::new();
    for y in [[0.5, -1.0, 0.2], [2.0, 0.0, 0.0], [0.01, 0.03, -0.02]] {
        let y = DVector::from_column_slice(&y);
        let closed = log_pdf_mvsl(&y, &params).map_err(fail)?;
        errs.push((quadrature_log_marginalize(&y, &params).map_err(fail)? - closed).exp_m1().abs());
    }
    within("max relative error", worst(errs), 1e-8)
}

fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[a, b, c, d])
}

fn finite_fixture(_: &Hooks) -> Check {
    let s = m2(1.0, -1.0, 0.0, -1.0);
    let eye = DMatrix::identity(2, 2);
    let model = GroupModelSpec::finite(vec![eye.clone(), -eye, s.clone(), -s]).map_err(fail)?;
    let data = Dataset::Vector(WeightedVectorData::from_rows(&[&[2.0, 0.0]], &[1.0]).map_err(fail)?);
    let report = estimate(&data, &model, 1e-9, 100).map_err(fail)?;
    let want = [m2(0.5, 0.0, 0.0, 0.5), m2(0.5, -0.5, -0.5, 1.0)];
    if report.concentrations.len() != 2 {
        return Err(format!("{} MLEs instead of 2", report.concentrations.len()));
    }
    let err = worst(report.concentrations.iter().zip(&want).map(|(c, w)| (c.matrix() - w).amax()));
    within("two MLEs, max entry error", err, 1e-9)
}

fn quadrant(indices: &[usize]) -> Result<Dataset, String> {
    let r3 = 3f64.sqrt();
    let all = [
        (m2(0.0, 0.0, 2.0, 0.0), 4.0),
        (m2(1.0, 0.0, 0.0, 1.0), 1.0),
        (m2(1.0, -1.0, 1.0, 1.0), 2.0),
        (m2(r3, 0.0, 0.0, -r3), 3.0),
    ];
    let (samples, weights) = indices.iter().map(|&i| all[i].clone()).unzip();
    Ok(Dataset::Matrix(WeightedMatrixData::new(samples, weights).map_err(fail)?))
}

fn rotation_pair_fixture(_: &Hooks) -> Check {
    let report = estimate(&quadrant(&[1, 2])?, &GroupModelSpec::left_right(2, 2), 1e-9, 10_000).map_err(fail)?;
    let psi = report.concentration().ok_or("no MLE")?.matrix();
    if report.stabilizer.lie_dim != 1
        || report.stability.kind() != StabilityKind::Polystable
        || report.mle_unique != MleMultiplicity::Unique
    {
        return Err(format!(
            "lie_dim {}, class {}, {}",
            report.stabilizer.lie_dim,
            report.stability.kind(),
            report.mle_unique.as_str()
        ));
    }
    within("unique MLE, distance to 2I", (psi - DMatrix::identity(4, 4) * 2.0).amax(), 1e-9)
}

fn quadrant_fixture(_: &Hooks) -> Check {
    let cases: [(&[usize], StabilityKind); 4] = [
        (&[0], StabilityKind::Unstable),
        (&[0, 1], StabilityKind::SemistableNotPolystable),
        (&[1], StabilityKind::Polystable),
        (&[1, 2, 3], StabilityKind::Stable),
    ];
    let model = GroupModelSpec::left_right(2, 2);
    let mut names = Vec::new();
    for (idx, want) in cases {
        let got = classify(&quadrant(idx)?, &model, &Thresholds::default()).map_err(fail)?.kind();
        if got != want {
            return Err(format!("samples {idx:?}: {got} instead of {want}"));
        }
        names.push(got.as_str());
    }
    Ok(names.join(" / "))
}

fn closed_form_search(_: &Hooks) -> Check {
    let mut errs = Vec::new();
    for (k, rows) in
        [vec![[1.0, 0.2], [0.0, 1.0], [2.0, -1.0]], vec![[3.0, 1.0], [0.5, 0.5], [-1.0, 2.0]]].iter().enumerate()
    {
        let rows: Vec<&[f64]> = rows.iter().map(|r| &r[..]).collect();
        let data = WeightedVectorData::from_rows(&rows, &[1.0, 2.0, 0.5]).map_err(fail)?;
        let exact = closed_form_sl_minimizer(&data.scatter()).map_err(fail)?.ok_or("singular")?.value;
        let cfg = SearchConfig::new(3000, 1.0, k as u64).map_err(fail)?;
        let found = random_orbit_search(&Dataset::Vector(data), &GroupModelSpec::full(2), &cfg).map_err(fail)?;
        errs.push((found.best_value - exact) / exact);
    }
    within("max relative gap", worst(errs), 1e-6)
}

fn sampler_determinism(_: &Hooks) -> Check {
    let params = MultivariateLaplaceParams::new(DMatrix::identity(2, 2)).map_err(fail)?;
    let req = SampleRequest::vector(5, 7, params);
    let (a, b) = (sample_mvsl(&req).map_err(fail)?, sample_mvsl(&req).map_err(fail)?);
    if a == b {
        Ok("repeat draws identical".into())
    } else {
        Err("repeat draws differ".into())
    }
}

fn objective_identity(_: &Hooks) -> Check {
    let report = estimate(&quadrant(&[1, 2, 3])?, &GroupModelSpec::left_right(2, 2), 1e-9, 10_000).map_err(fail)?;
    within("relative gap", (report.objective - report.objective_bound).abs() / report.objective_bound.abs(), 1e-8)
}

pub fn run(hooks: &Hooks) -> Vec<CheckResult> {
    let checks: [NamedCheck; 11] = [
        ("bessel_half_order", bessel_half_order),
        ("bessel_integer_orders", bessel_integer_orders),
        ("bessel_recurrence", bessel_recurrence),
        ("bessel_quadrature", bessel_quadrature),
        ("density_quadrature", density_quadrature),
        ("finite_two_mles", finite_fixture),
        ("leftright_rotation_pair", rotation_pair_fixture),
        ("leftright_quadrant", quadrant_fixture),
        ("closed_form_vs_search", closed_form_search),
        ("sampler_determinism", sampler_determinism),
        ("objective_identity", objective_identity),
    ];
    checks
        .iter()
        .map(|(name, check)| {
            let (passed, detail) = match check(hooks) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckResult { name, passed, detail }
        })
        .collect()
}

pub fn render(results: &[CheckResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{status}  {:width$}  {}\n", r.name, r.detail));
    }
    let passed = results.iter().filter(|r| r.passed).count();
    out.push_str(&format!("{passed}/{} checks passed\n", results.len()));
    out
}
