use num_traits::One;

use super::ExteriorMap;
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

fn inverse_tol<T: Real>(map: &ExteriorMap<T>, z: C<T>) -> T {
    T::lit(1e-14) * (map.scale() + z.norm())
}

/// G(z) and G′(z) = 1/g′(G(z)).
pub(crate) fn inverse_with_derivative<T: Real>(map: &ExteriorMap<T>, z: C<T>) -> Result<(C<T>, C<T>)> {
    let w = map.eval_inverse(z, inverse_tol(map, z))?;
    Ok((w, map.dg_at(w).inv()))
}

/// Schiffer kernel G′(z)G′(w)/(G(z) − G(w))² of the exterior domain.
pub fn schiffer_kernel_ext<T: Real>(map: &ExteriorMap<T>, z: C<T>, w: C<T>) -> Result<C<T>> {
    if (z - w).norm() <= T::lit(1e-12) * (map.scale() + z.norm()) {
        return Err(Error::CoincidentPoints);
    }
    let (gz, dz) = inverse_with_derivative(map, z)?;
    let (gw, dw) = inverse_with_derivative(map, w)?;
    let d = gz - gw;
    Ok(dz * dw / (d * d))
}

/// Bergman kernel G′(z)·conj(G′(w)) / (π(1 − G(z)·conj(G(w)))²) of the exterior domain.
pub fn bergman_kernel_ext<T: Real>(map: &ExteriorMap<T>, z: C<T>, w: C<T>) -> Result<C<T>> {
    let (gz, dz) = inverse_with_derivative(map, z)?;
    let (gw, dw) = inverse_with_derivative(map, w)?;
    let d = C::<T>::one() - gz * gw.conj();
    Ok(dz * dw.conj() / (d * d * T::PI()))
}
