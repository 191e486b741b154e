use crate::data::Dataset;
use crate::error::{Error, Result};

use super::{orbit_norm, GroupElement, GroupModelSpec};

/// Relative tolerance within which two orbit norms tie.
pub const TIE_TOL: f64 = 1e-12;

/// Every finite-set element whose orbit norm ties with the minimum, in the
/// order the elements were supplied.
pub fn finite_group_minimize(model: &GroupModelSpec, data: &Dataset) -> Result<Vec<(GroupElement, f64)>> {
    let GroupModelSpec::FiniteSet { elements } = model else {
        return Err(Error::ModelMismatch("finite_group_minimize needs a finite-set model".into()));
    };
    if elements.is_empty() {
        return Err(Error::Domain("finite set is empty".into()));
    }
    model.check_compatible(data)?;
    let scored = elements
        .iter()
        .enumerate()
        .map(|(index, a)| {
            let element = GroupElement::Finite { index, matrix: a.clone() };
            orbit_norm(&element, data).map(|v| (element, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let best = scored.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    Ok(scored.into_iter().filter(|(_, v)| *v - best <= TIE_TOL * best).collect())
}
