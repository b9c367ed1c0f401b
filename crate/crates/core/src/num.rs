//! Scalar abstraction shared by the numeric code (models, optimizers, statistics).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Formats a float with exactly nine significant digits in scientific notation.
///
/// The output is a valid JSON number and parses back to a value that formats identically.
pub fn fmt9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Rounds `x` to what [`fmt9`] would write.
pub fn round9(x: f64) -> f64 {
    fmt9(x).parse().expect("fmt9 output parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt9_is_idempotent() {
        for x in [1.0, 0.1, 1.0 / 3.0, 123456.789, 2.5e-12, 0.0, 90.0] {
            let s = fmt9(x);
            assert_eq!(fmt9(s.parse().unwrap()), s);
            let v: serde_json::Value = serde_json::from_str(&s).unwrap();
            assert!(v.is_number());
        }
        assert_eq!(fmt9(1.0), "1.00000000e0");
        assert_eq!(fmt9(-0.25), "-2.50000000e-1");
    }
}
