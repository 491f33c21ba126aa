//! Multi-agent collaboration environments with per-turn uncertainty
//! monitors that trigger resets or resampling when an agent is predicted
//! to derail the game.

pub mod action;
pub mod agents;
pub mod commons;
pub mod game;
pub mod harness;
pub mod intervention;
pub mod llm;
pub mod monitor;
pub mod rng;
pub mod trajectory;
pub mod uncertainty;
pub mod whodunit;
