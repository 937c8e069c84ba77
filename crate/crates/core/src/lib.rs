//! Trainable task-oriented dialogue agent for movie booking: a hierarchical
//! LSTM tracker and policy learned through supervised pre-training,
//! imitation learning with dataset aggregation and REINFORCE, together with
//! an agenda-based simulated user and a session service for live teaching.

pub mod autodiff;
pub mod config;
pub mod corpus;
pub mod dialogue;
pub mod domain;
pub mod episode;
pub mod evaluator;
pub mod model;
pub mod pipeline;
pub mod error;
pub mod service;
pub mod simulator;
pub mod trainer;

pub use error::{Error, Result};
