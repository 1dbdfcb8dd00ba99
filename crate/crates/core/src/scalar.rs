//! Numeric scalar used for areas and extraction costs.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable as an area / cost value.
///
/// Everything that prices a netlist (extraction, the area model, selection)
/// is generic over this trait. `f64` is the default throughout the crate
/// root aliases; `f32` works as well.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from a document value.
    fn from_area(x: f64) -> Self {
        Self::from_f64(x).expect("finite area")
    }

    fn to_report(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Rounds to two decimals, the precision used in reports.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
