//! Cubic transmuted (CT) distributions and their information measures.
//!
//! A CT distribution transforms a baseline CDF `F` through the cubic
//! `G(u) = λ₁u + (λ₂ − λ₁)u² + (1 − λ₂)u³`, which is the same thing as a
//! mixture of the three order statistics of an i.i.d. triple. Almost every
//! measure in this crate reduces to an integral over `u = F(x) ∈ (0, 1)`,
//! so the adaptive quadrature in [`quadrature`] doubles as the oracle that
//! every closed form is checked against.
//!
//! Module map:
//!
//! * [`baselines`]: parent families (uniform, exponential, Pareto, power, Weibull).
//! * [`ct_model`]: CT parameters, cubic CDF maps, order-statistic components, sampling.
//! * [`quadrature`]: Gauss–Kronrod integration and Monte-Carlo expectations.
//! * [`entropy`], [`divergences`], [`gini`], [`fisher`]: the measures.
//! * [`sim`]: seeded Monte-Carlo campaigns (model selection, CI coverage).
//! * [`verify`]: closed-form-versus-oracle sweep and erratum report.
//! * [`distspec`], [`json`]: the textual formats used by the CLI.

pub mod baselines;
pub mod ct_model;
pub mod ct_roots;
pub mod dist;
pub mod distspec;
pub mod divergences;
pub mod entropy;
pub mod error;
pub mod fisher;
pub mod gini;
pub mod json;
pub mod optim;
pub mod par;
pub mod quadrature;
pub mod sim;
pub mod verify;

pub use baselines::{make_baseline, Baseline, Family};
pub use ct_model::{
    make_ct, make_one_param_cubic, make_quadratic, sample_ct, Component, CtDistribution, CtKind, CtParams, CubicMap,
    MixingProbs,
};
pub use dist::{Continuous, Support};
pub use error::{CtError, Result};
pub use par::Execution;
pub use quadrature::{Estimate, QuadratureSpec};
