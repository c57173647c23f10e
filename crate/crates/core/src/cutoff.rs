use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffKind {
    /// Quintic smoothstep ramp on `[T - 2 eps, T - eps]` (C^2).
    Smooth,
    /// Linear ramp on `[T - eps - delta, T - eps]`.
    PiecewiseLinear,
}

/// Nonincreasing cutoff equal to 1 in the past and 0 on `[T - eps, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffFn {
    kind: CutoffKind,
    horizon: f64,
    epsilon: f64,
    delta: f64,
}

impl CutoffFn {
    pub fn smooth(horizon: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite() && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff needs eps > 0, got {epsilon}")));
        }
        Ok(Self { kind: CutoffKind::Smooth, horizon, epsilon, delta: epsilon })
    }

    pub fn piecewise_linear(horizon: f64, epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite() && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff needs eps > 0, got {epsilon}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff needs delta > 0, got {delta}")));
        }
        Ok(Self { kind: CutoffKind::PiecewiseLinear, horizon, epsilon, delta })
    }

    pub fn kind(&self) -> CutoffKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Last time at which the cutoff is identically 1.
    pub fn plateau_end(&self) -> f64 {
        match self.kind {
            CutoffKind::Smooth => self.horizon - 2.0 * self.epsilon,
            CutoffKind::PiecewiseLinear => self.horizon - self.epsilon - self.delta,
        }
    }

    /// First time from which the cutoff is identically 0.
    pub fn zero_from(&self) -> f64 {
        self.horizon - self.epsilon
    }

    /// Points where the cutoff fails to be smooth (ramp ends).
    pub fn breakpoints(&self) -> [f64; 2] {
        [self.plateau_end(), self.zero_from()]
    }

    pub fn eval(&self, t: f64) -> f64 {
        let lo = self.plateau_end();
        let hi = self.zero_from();
        if t <= lo {
            return 1.0;
        }
        if t >= hi {
            return 0.0;
        }
        match self.kind {
            CutoffKind::PiecewiseLinear => (hi - t) / self.delta,
            CutoffKind::Smooth => {
                let x = (t - lo) / (hi - lo);
                1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
            }
        }
    }

    /// Nodal samples as a scalar trajectory.
    pub fn sample(&self, grid: &TimeGrid) -> Trajectory {
        Trajectory::scalar(grid.clone(), |t| self.eval(t))
    }
}
