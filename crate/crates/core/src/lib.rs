//! Trainable goal reasoning for multi-agent urban rescue.
//!
//! Ripple-down rules stored in a frame knowledge base decide which goals to
//! create and in which order to pursue them; a deterministic, rewindable
//! simulator provides the world the rules are trained against.

pub mod atom;
pub mod frame_kb;
pub mod goal_reasoner;
pub mod planner;
pub mod rdr;
pub mod rulesets;
pub mod service;
pub mod sim;
