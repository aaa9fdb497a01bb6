use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Scalar type usable by every numerical routine in the crate.
///
/// `RealField` brings the arithmetic, `FromPrimitive` and the transcendental
/// functions; `ToPrimitive` is needed to write results to `f64` files.
pub trait Real: RealField + Copy + ToPrimitive + Default + 'static {
    fn c(v: f64) -> Self {
        nalgebra::convert(v)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_finite_value(self) -> bool {
        self.to_f64_lossy().is_finite()
    }
}

impl Real for f32 {}
impl Real for f64 {}
