//! Field scalars for residual systems: `f64` for real problems and
//! `Complex64` for the Helmholtz pairing.

use nalgebra::ComplexField;
use num_complex::Complex64;

pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync {
    const IS_COMPLEX: bool;

    /// Embeds a complex coefficient; the real field keeps the real part.
    fn from_c64(z: Complex64) -> Self;

    fn to_c64(self) -> Complex64;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn from_c64(z: Complex64) -> Self {
        z.re
    }

    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn from_c64(z: Complex64) -> Self {
        z
    }

    fn to_c64(self) -> Complex64 {
        self
    }
}
