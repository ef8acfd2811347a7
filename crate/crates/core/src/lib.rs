//! Language-model task planning verified by a planar motion planner.
//!
//! A language model proposes pick/place plans with continuous parameters;
//! each action is checked by a bidirectional RRT in a 2-D tabletop world and
//! the categorized failures are fed back into the next prompt.

#![no_std]

extern crate alloc;

pub mod actions;
pub mod bench;
pub mod fmt;
pub mod geometry;
pub mod llm;
pub mod math;
pub mod motion;
pub mod planner;
pub mod rrt;
pub mod world;
