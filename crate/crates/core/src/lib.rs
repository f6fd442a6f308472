//! Sample-based, high-confidence upper bounds on g-entropic risk measures
//! (VaR, CVaR, EVaR), applied to risk-aware verification and controller
//! synthesis for a stochastic three-robot system.

pub mod decision_select;
pub mod error;
pub mod fixtures;
pub mod g_entropic;
pub mod io;
pub mod optimize;
pub mod risk_core;
pub mod seeding;
pub mod sim;
pub mod validation;
pub mod verify_synth;

pub use error::{Error, Result};
pub use g_entropic::{
    bound_cvar, bound_evar, bound_g_entropic, BoundResult, LossSpec, SearchConfig,
};
pub use risk_core::{ConfidenceSpec, EssentialBound, SampleSet};
