//! Kicked SERF cesium magnetometer: angular-momentum algebra, master-equation
//! dynamics, kicked-top reference model and Fisher-information analytics.

pub mod angular;
pub mod dynamics;
pub mod experiment;
pub mod kickedtop;
pub mod metrology;
pub mod state;
