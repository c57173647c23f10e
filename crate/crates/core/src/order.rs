use crate::error::{Error, Result};
use crate::special::gamma;

/// Order `alpha` of the fractional time derivative, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidOrder(alpha))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `Gamma(1 - alpha)`, the factor separating the two normalizations.
    pub fn gamma_factor(self) -> f64 {
        gamma(1.0 - self.0)
    }
}

/// Scaling convention for fractional derivatives.
///
/// `Paper` drops the `1 / Gamma(1 - alpha)` prefactor (it is absorbed into the
/// bilinear form and the load); `Classical` keeps it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    Paper,
    Classical,
}

impl Normalization {
    /// Factor applied to a paper-normalized derivative value.
    pub fn derivative_factor(self, alpha: FracOrder) -> f64 {
        match self {
            Normalization::Paper => 1.0,
            Normalization::Classical => 1.0 / alpha.gamma_factor(),
        }
    }

    /// Factor applied to the form and the load when an equation posed in this
    /// normalization is rewritten in paper normalization.
    pub fn absorption_factor(self, alpha: FracOrder) -> f64 {
        match self {
            Normalization::Paper => 1.0,
            Normalization::Classical => alpha.gamma_factor(),
        }
    }
}
