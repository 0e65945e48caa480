use nalgebra::{DMatrix, RealField};

use super::jsa::{Axis, Photon};
use super::{FilterSpec, JointSpectrum};
use crate::error::{Error, Result};
use crate::scalar::Real;

fn filtered_matrix<T: Real + RealField>(
    jsa: &JointSpectrum<T>,
    f_s: &FilterSpec<T>,
    f_i: &FilterSpec<T>,
) -> Result<DMatrix<T>> {
    let n = jsa.config.points;
    let xs: Axis<T> = jsa.filter_axis(Photon::Signal, f_s, n)?;
    let ys: Axis<T> = jsa.filter_axis(Photon::Idler, f_i, n)?;
    jsa.check_resolution(Photon::Signal, &xs, Some(f_s))?;
    jsa.check_resolution(Photon::Idler, &ys, Some(f_i))?;
    let ws = jsa.filter_weights(Photon::Signal, f_s, &xs);
    let wi = jsa.filter_weights(Photon::Idler, f_i, &ys);
    let yv = ys.values();
    let m = DMatrix::from_fn(xs.n, ys.n, |r, c| jsa.evaluate(xs.at(r), yv[c]) * ws[r] * wi[c]);
    if m.iter().all(|v| *v == T::zero()) {
        return Err(Error::Degenerate("filtered amplitude is zero everywhere".into()));
    }
    Ok(m)
}

/// Heralded single-photon purity Σλ_k²/(Σλ_k)² of the filtered amplitude,
/// with λ_k the squared singular values of the sampled amplitude matrix.
pub fn schmidt_purity<T: Real + RealField>(
    jsa: &JointSpectrum<T>,
    f_s: &FilterSpec<T>,
    f_i: &FilterSpec<T>,
) -> Result<T> {
    let m = filtered_matrix(jsa, f_s, f_i)?;
    let sv = m.singular_values();
    let mut p2 = T::zero();
    let mut p4 = T::zero();
    for s in sv.iter() {
        let l = *s * *s;
        p2 += l;
        p4 += l * l;
    }
    Ok(p4 / (p2 * p2))
}

/// Same purity via Tr((MMᵀ)²)/Tr(MMᵀ)², without a decomposition.
pub fn schmidt_purity_trace<T: Real + RealField>(
    jsa: &JointSpectrum<T>,
    f_s: &FilterSpec<T>,
    f_i: &FilterSpec<T>,
) -> Result<T> {
    let m = filtered_matrix(jsa, f_s, f_i)?;
    let g = &m * m.transpose();
    let tr = g.trace();
    let tr2 = g.iter().fold(T::zero(), |acc, v| acc + *v * *v);
    Ok(tr2 / (tr * tr))
}
