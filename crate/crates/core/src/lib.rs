//! Universally truthful fixed-price mechanism for combinatorial auctions
//! with XOS and budget-additive bidders, plus exact demand oracles,
//! exhaustive baselines and a seeded experiment harness.

pub mod analysis;
pub mod auctions;
pub mod bundle;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod instance;
pub mod limits;
pub mod mechanism;
mod random;
pub mod rational;
pub mod valuations;

pub use auctions::{Allocation, AuctionResult};
pub use bundle::{Bundle, ItemId};
pub use error::{Error, Result};
pub use instance::Instance;
pub use mechanism::{CoinRecord, MechanismOutcome, MechanismParams};
pub use rational::Rational;
pub use valuations::Valuation;
