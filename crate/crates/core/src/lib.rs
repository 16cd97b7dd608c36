//! Set-valued solvency tests for groups of agents that may move capital
//! between each other under a prescribed family of admissible transfers.

pub mod error;
pub mod experiments;
pub mod group_risk;
pub mod hierarchy;
pub mod lp;
mod program;
pub mod risk;
pub mod scenario;
pub mod selection;
pub mod transfer_sets;

pub use error::{Error, Result};
pub use risk::{RiskMeasure, VectorRisk, ACCEPTABILITY_TOLERANCE};
pub use scenario::{RandomVariable, RandomVector, ScenarioSpace};
pub use transfer_sets::{FamilyKind, FrontierCurve, Margin, TransferFamily};
