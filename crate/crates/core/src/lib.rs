//! Cooperative cooking simulator with a hierarchical language agent.
//!
//! The [`env`] module is the deterministic kitchen. [`catalog`] and
//! [`executor`] turn high-level moves into per-tick inputs, [`slow_mind`]
//! and [`fast_mind`] wrap the language-model calls made through [`llm`], and
//! [`runtime`] wires everything into agents. [`session`] handles replays and
//! the wire protocol, and [`eval`] hosts the experiment harness.

pub mod env;
pub mod catalog;
pub mod executor;
pub mod llm;
pub mod prompts;
pub mod slow_mind;
pub mod fast_mind;
pub mod runtime;
pub mod session;
pub mod eval;
