//! Budget-feasible truthful procurement mechanisms with exact arithmetic.
//!
//! A buyer with budget `B` procures items from strategic sellers whose costs
//! are private. The mechanisms here pick winners from declared costs and pay
//! each winner its threshold bid, so that bidding the true cost is dominant,
//! total payments never exceed `B`, and the procured value approximates the
//! best set affordable at true costs.

pub mod adversarial;
pub mod error;
pub mod hetero;
pub mod io;
pub mod knapsack;
pub mod mechanism;
pub mod model;
pub mod num;
pub mod real;
pub mod registry;
pub mod submodular;
pub mod suite;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    AgentId, AgentSet, AnyInstance, BidProfile, HeteroInstance, Instance, Market, Outcome, RandomizedOutcome,
    Valuation,
};
pub use num::Num;
pub use mechanism::{AllocationRule, Branch, Mechanism, MechanismKind, RandomizedMechanism};
