use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for link lengths, exponents and energies.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    fn of_count(v: u64) -> Self {
        Self::from_u64(v).expect("integer count is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `base^exp` with `0^0 = 1`, which is what the energy sum needs for
/// zero-area links at `γ = 0`.
pub fn pow_area<T: Scalar>(area: u64, exp: T) -> T {
    if area == 0 {
        if exp == T::zero() {
            T::one()
        } else {
            T::zero()
        }
    } else {
        T::of_count(area).powf(exp)
    }
}
