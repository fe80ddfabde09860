use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar parameter fell outside its physical range.
    #[error("{name} = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// A four-outcome probability vector does not sum to one.
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    /// The twin-Fock mixed model needs `m * n_mean` to be an integer.
    #[error("occupancy m*N = {product} is not an integer")]
    NonIntegerOccupancy { product: f64 },

    /// Q and sigma combine into a negative differential variance.
    #[error("non-physical noise denominator {value}")]
    NegativeNoise { value: f64 },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<f64> {
    if ok && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected,
        })
    }
}

pub(crate) fn unit_interval(name: &'static str, value: f64) -> Result<f64> {
    check_range(name, value, (0.0..=1.0).contains(&value), "[0, 1]")
}

pub(crate) fn loss_rate(value: f64) -> Result<f64> {
    check_range("gamma", value, (0.0..1.0).contains(&value), "[0, 1)")
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    // +inf is accepted for dark counts (saturated detector)
    if value >= 0.0 && !value.is_nan() {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected: ">= 0",
        })
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    check_range(name, value, value > 0.0, "> 0")
}
