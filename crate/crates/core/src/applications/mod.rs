//! Stackelberg environments: performative prediction, adaptive
//! recommendations, adaptive pricing and steering a learning opponent. Each
//! exposes its dynamics as a [`crate::dynamics::DynamicsModel`] plus the
//! surrogate losses the nested controllers optimize.

pub mod performative;
pub mod pricing;
pub mod recommendations;
pub mod steering;

pub use performative::{PerformativeEnv, Score};
pub use pricing::{PricingEnv, Valuation};
pub use recommendations::{BenchmarkVariant, RecommendationEnv, ScoreModel};
pub use steering::{SteeringEnv, SteeringDisturbance};
