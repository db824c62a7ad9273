//! The minimal interface shared by every univariate distribution in the crate.

use serde::Serialize;

/// Support interval `(lo, hi)` with closedness flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Support {
    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }
}

/// A continuous distribution exposing the primitives the measures need.
///
/// Integrals against `dx` are evaluated by the substitution `u = F(x)`, so
/// `quantile` must be accurate on the whole open unit interval.
pub trait Continuous: Send + Sync {
    fn pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;
    fn quantile(&self, u: f64) -> f64;
    fn support(&self) -> Support;

    /// `pdf(quantile(u))`; implementors override this when a direct formula exists.
    fn density_at_quantile(&self, u: f64) -> f64 {
        self.pdf(self.quantile(u))
    }

    fn has_finite_mean(&self) -> bool {
        true
    }

    fn label(&self) -> String;
}
